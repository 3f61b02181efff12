"""Brute-force exact expectations over finite-support distributions.

This is the ground-truth engine: every value is an exact Fraction as long as
the statistic is rational-valued on the atoms, so variance identities can be
asserted as rational equalities with zero rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Callable, Sequence

from .kernels import Kernel
from .numeric import exact_div

__all__ = [
    "FiniteDist",
    "finite_dist",
    "two_point",
    "uniform_atoms",
    "exact_mean",
    "exact_var",
    "exact_vk",
    "verify_eq5",
    "verify_variance_drop",
    "Eq5Report",
    "DropReport",
    "ustat_fn",
    "loo_extension_fn",
]

STATE_GUARD = 10**7


@dataclass(frozen=True)
class FiniteDist:
    """Atoms (value, probability) with exact, strictly positive probabilities
    summing to one."""

    atoms: tuple[tuple[object, Fraction], ...]

    def __post_init__(self) -> None:
        if not self.atoms:
            raise ValueError("need at least one atom")
        if any(p <= 0 for _, p in self.atoms):
            raise ValueError("atom probabilities must be strictly positive")
        if sum(p for _, p in self.atoms) != 1:
            raise ValueError("atom probabilities must sum to 1 exactly")

    @property
    def size(self) -> int:
        return len(self.atoms)

    def values(self) -> tuple:
        return tuple(v for v, _ in self.atoms)

    def probs(self) -> tuple[Fraction, ...]:
        return tuple(p for _, p in self.atoms)


def finite_dist(pairs: Sequence[tuple[object, object]]) -> FiniteDist:
    return FiniteDist(tuple((v, Fraction(p)) for v, p in pairs))


def two_point(p, lo=0, hi=1) -> FiniteDist:
    """P(X=hi) = p, P(X=lo) = 1-p."""
    p = Fraction(p)
    return FiniteDist(((lo, 1 - p), (hi, p)))


def uniform_atoms(values: Sequence) -> FiniteDist:
    n = len(values)
    return FiniteDist(tuple((v, Fraction(1, n)) for v in values))


def _guard(size: int, n: int) -> None:
    if size**n > STATE_GUARD:
        raise ValueError(f"state space {size}^{n} exceeds the enumeration guard {STATE_GUARD}")


def _outcomes(dist: FiniteDist, n: int):
    """Yield (value tuple, exact probability) over all size^n outcomes via a
    mixed-radix walk of atom indices."""
    vals = dist.values()
    probs = dist.probs()
    for idx in product(range(dist.size), repeat=n):
        prob = math.prod((probs[i] for i in idx), start=Fraction(1))
        yield tuple(vals[i] for i in idx), prob


def exact_mean(statistic: Callable, dist: FiniteDist, n: int):
    """E[statistic(X_1..X_n)] by exhaustive enumeration."""
    _guard(dist.size, n)
    return sum(prob * statistic(*vals) for vals, prob in _outcomes(dist, n))


def exact_var(statistic: Callable, dist: FiniteDist, n: int):
    """Var[statistic(X_1..X_n)] = E[s^2] - (E s)^2, exactly."""
    _guard(dist.size, n)
    first = Fraction(0)
    second = Fraction(0)
    for vals, prob in _outcomes(dist, n):
        s = statistic(*vals)
        first += prob * s
        second += prob * s * s
    return second - first * first


def exact_vk(kernel: Kernel, dist: FiniteDist, k: int):
    """Exact variance of the conditional projection of the kernel onto its
    first k arguments: Var E[kernel(x_1..x_k, X_{k+1}..X_m)]."""
    m = kernel.m
    if not 1 <= k <= m:
        raise ValueError(f"need 1 <= k <= m={m}, got k={k}")
    _guard(dist.size, m)
    fn = kernel.fn
    first = Fraction(0)
    second = Fraction(0)
    for fixed, p_fixed in _outcomes(dist, k):
        proj = sum(p_rest * fn(*fixed, *rest) for rest, p_rest in _outcomes(dist, m - k))
        first += p_fixed * proj
        second += p_fixed * proj * proj
    return second - first * first


def ustat_fn(kernel: Kernel, n: int) -> Callable:
    """The size-n U-statistic of a kernel as an exact n-ary statistic."""
    from .ustat_engine import u_statistic

    return lambda *vals: u_statistic(kernel, vals)


def loo_extension_fn(statistic: Callable, n: int) -> Callable:
    """The leave-one-out average of an n-ary statistic, as an (n+1)-ary one."""

    def ext(*vals):
        total = sum(statistic(*(vals[:i] + vals[i + 1:])) for i in range(n + 1))
        return exact_div(total, n + 1)

    return ext


@dataclass(frozen=True)
class Eq5Report:
    formula_value: Fraction
    enumerated_value: Fraction
    equal: bool


def verify_eq5(kernel: Kernel, dist: FiniteDist, n: int) -> Eq5Report:
    """Compare Hoeffding's combinatorial variance formula against the exactly
    enumerated variance of the U-statistic; equality is exact rational."""
    m = kernel.m
    if n < m:
        raise ValueError(f"need n >= m, got n={n}, m={m}")
    vks = [exact_vk(kernel, dist, k) for k in range(1, m + 1)]
    weighted = sum(
        math.comb(m, k) * math.comb(n - m, m - k) * vks[k - 1]
        for k in range(1, m + 1)
    )
    formula = exact_div(weighted, math.comb(n, m))
    enumerated = exact_var(ustat_fn(kernel, n), dist, n)
    return Eq5Report(formula, enumerated, formula == enumerated)


@dataclass(frozen=True)
class DropReport:
    """Scaled variance comparison between an estimator and its leave-one-out
    extension; margin = rhs - lhs, so holds means margin >= 0."""

    lhs: object
    rhs: object
    holds: bool
    margin: object
    method: str = "exact"
    se: float | None = None


def verify_variance_drop(statistic: Callable, dist: FiniteDist, n: int) -> DropReport:
    """Exactly compare (n+1)*var(extension over n+1 draws) against
    n*var(statistic over n draws)."""
    ext = loo_extension_fn(statistic, n)
    lhs = (n + 1) * exact_var(ext, dist, n + 1)
    rhs = n * exact_var(statistic, dist, n)
    return DropReport(lhs, rhs, lhs <= rhs, rhs - lhs, method="exact")
