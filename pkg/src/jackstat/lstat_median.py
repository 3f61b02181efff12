"""Exact rational calculus for L-statistics (weights on order statistics).

Everything in this module runs in exact Fraction arithmetic; the only float
that can appear is the value returned by :func:`eval_lstat` on float samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .numeric import exact_div

__all__ = [
    "LWeights",
    "lweights",
    "median_weights",
    "extend_weights",
    "chain_weights",
    "conjecture16_check",
    "Conjecture16Result",
    "eval_lstat",
    "median_subset_weights",
]


@dataclass(frozen=True)
class LWeights:
    """Weights w_1..w_n attached to the ascending order statistics of a sample.

    Invariant: the weights sum to one exactly.  Symmetric (median-type)
    statistics additionally satisfy w_p == w_{n+1-p}; see
    :meth:`is_centrally_symmetric`.
    """

    n: int
    w: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        if self.n < 1 or len(self.w) != self.n:
            raise ValueError(f"need exactly n={self.n} weights, got {len(self.w)}")
        if sum(self.w) != 1:
            raise ValueError(f"weights must sum to 1 exactly, got {sum(self.w)}")

    def is_centrally_symmetric(self) -> bool:
        return all(self.w[p] == self.w[self.n - 1 - p] for p in range(self.n))

    def as_floats(self) -> tuple[float, ...]:
        return tuple(float(x) for x in self.w)


def lweights(weights: Sequence) -> LWeights:
    """Build LWeights from any rational sequence (ints coerced to Fractions)."""
    w = tuple(Fraction(x) for x in weights)
    return LWeights(len(w), w)


def median_weights(n: int) -> LWeights:
    """Weights of the sample median: the middle order statistic for odd n,
    the average of the two middle ones for even n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    w = [Fraction(0)] * n
    if n % 2 == 1:
        w[(n - 1) // 2] = Fraction(1)
    else:
        half = Fraction(1, 2)
        w[n // 2 - 1] = half
        w[n // 2] = half
    return LWeights(n, tuple(w))


def extend_weights(lw: LWeights) -> LWeights:
    """One leave-one-out averaging step, expressed on order-statistic weights.

    Deleting the j-th smallest of n+1 points maps the remaining k-th order
    statistic to position k when k < j and k+1 otherwise, so averaging the
    base L-statistic over all n+1 deletions gives

        w'_p = ((n+1-p) w_p + (p-1) w_{p-1}) / (n+1),   w_0 = w_{n+1} = 0.
    """
    n = lw.n
    old = (Fraction(0),) + lw.w + (Fraction(0),)  # old[p] = w_p, 1-based
    new = tuple(
        ((n + 1 - p) * old[p] + (p - 1) * old[p - 1]) / (n + 1)
        for p in range(1, n + 2)
    )
    return LWeights(n + 1, new)


def chain_weights(start: LWeights, target_n: int) -> LWeights:
    """Apply extend_weights until the weight vector has target_n entries."""
    if target_n < start.n:
        raise ValueError(f"target {target_n} below starting size {start.n}")
    lw = start
    while lw.n < target_n:
        lw = extend_weights(lw)
    return lw


@dataclass(frozen=True)
class Conjecture16Result:
    m: int
    weights: LWeights
    expected: LWeights
    matches: bool


def conjecture16_check(m: int) -> Conjecture16Result:
    """Extend the even median of 2m points and compare, as exact rationals,
    with the closed pattern: (m+1)/(2(2m+1)) at positions m and m+2,
    m/(2m+1) at position m+1, zero elsewhere."""
    if m < 1:
        raise ValueError("m must be >= 1")
    got = extend_weights(median_weights(2 * m))
    w = [Fraction(0)] * (2 * m + 1)
    side = Fraction(m + 1, 2 * (2 * m + 1))
    w[m - 1] += side
    w[m] += Fraction(m, 2 * m + 1)
    w[m + 1] += side
    expected = LWeights(2 * m + 1, tuple(w))
    return Conjecture16Result(m, got, expected, got.w == expected.w)


def eval_lstat(lw: LWeights, sample: Sequence):
    """Sort the sample ascending and return sum_p w_p * x'_p.

    Exact (Fraction) when the sample values are exact; float otherwise.
    """
    if len(sample) != lw.n:
        raise ValueError(f"sample length {len(sample)} != weight length {lw.n}")
    xs = sorted(sample)
    if all(isinstance(x, (int, Fraction)) and not isinstance(x, bool) for x in xs):
        return sum(w * x for w, x in zip(lw.w, xs))
    return math.fsum(float(w) * float(x) for w, x in zip(lw.w, xs))


def median_subset_weights(n: int, m: int) -> LWeights:
    """Order-statistic weights of the subset-median average of degree m.

    Averaging the median over all size-m subsets of an n-sample weights the
    p-th order statistic by C(p-1,r)*C(n-p,r)/C(n,m) with r=(m-1)/2: choosing
    a subset whose median is x'_p means picking r indices below p and r above.
    """
    if m % 2 == 0:
        raise ValueError("subset median needs odd degree m")
    if n < m:
        raise ValueError(f"need n >= m, got n={n}, m={m}")
    r = (m - 1) // 2
    total = math.comb(n, m)
    w = tuple(
        Fraction(math.comb(p - 1, r) * math.comb(n - p, r), total)
        for p in range(1, n + 1)
    )
    return LWeights(n, w)
