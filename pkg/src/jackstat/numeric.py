"""Shared numeric machinery: quadrature, lattice sums, derivatives, seeding.

Everything here is deterministic given its inputs.  Quadrature is delegated
to QUADPACK (scipy.integrate.quad), which transforms infinite ranges onto a
finite interval internally and returns an achieved-error estimate that we
check against the requested tolerance instead of trusting blindly.
"""

from __future__ import annotations

import hashlib
import math
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from scipy.integrate import quad


class QuadratureError(RuntimeError):
    """Adaptive integration failed to reach the requested tolerance."""

    def __init__(self, message: str, value: float = math.nan, achieved: float = math.inf):
        super().__init__(f"{message} (value ~ {value:.6g}, achieved error ~ {achieved:.3g})")
        self.value = value
        self.achieved = achieved


class SummationError(RuntimeError):
    """A lattice sum failed to converge within the term budget."""


def integrate(
    fn: Callable[[float], float],
    lo: float,
    hi: float,
    *,
    breakpoints: Sequence[float] = (),
    abs_tol: float = 1e-10,
    full: bool = False,
):
    """Integrate fn over (lo, hi), splitting at interior breakpoints.

    Raises QuadratureError when the summed QUADPACK error estimate exceeds
    abs_tol*(1+|value|), carrying the value and achieved error for
    diagnostics.  (The relative term mirrors QUADPACK's own stopping rule
    and matters only for the large-valued inner integrals of nested
    expectations; top-level expectations are O(1) and see an essentially
    absolute test.)
    """
    cuts = sorted(b for b in breakpoints if lo < b < hi)
    edges = [lo, *cuts, hi]
    total = 0.0
    err = 0.0
    epsrel = min(max(abs_tol * 1e-1, 1e-13), 1e-8)
    for a, b in zip(edges[:-1], edges[1:]):
        # Request tighter than we accept: QUADPACK usually overdelivers on
        # smooth integrands and the slack absorbs piece accumulation.
        val, piece_err = quad(fn, a, b, epsabs=abs_tol * 1e-2, epsrel=epsrel,
                              limit=200, full_output=1)[:2]
        total += val
        err += piece_err
    if not math.isfinite(total) or err > abs_tol * (1.0 + abs(total)):
        raise QuadratureError("integral did not converge", total, err)
    return (total, err) if full else total


def lattice_sum(
    term: Callable[[int], float],
    weight: Callable[[int], float],
    *,
    start: int = 0,
    tail: float = 1e-15,
    max_terms: int = 1_000_000,
) -> float:
    """Sum term(k)*weight(k) over the integer lattice k >= start.

    weight(k) must be a probability mass function; the walk stops once the
    accumulated mass reaches 1 - tail and the mass has passed its mode.
    """
    acc = 0.0
    mass = 0.0
    peak = 0.0
    k = start
    while k < start + max_terms:
        w = weight(k)
        peak = max(peak, w)
        acc += term(k) * w
        mass += w
        if mass >= 1.0 - tail and w < peak * 1e-14:
            return acc
        # Rounding can saturate the running mass just below 1 - tail; once
        # past the mode with negligible terms nothing can change the sum.
        if mass > 0.5 and w < peak * 1e-16:
            return acc
        k += 1
    raise SummationError(f"lattice sum not converged after {max_terms} terms (mass={mass:.12g})")


def central_derivative(fn: Callable[[float], float], x: float, *, scale: float = 1e-5) -> float:
    """Central difference with one Richardson extrapolation step.

    Step h = scale*(1+|x|); the extrapolation cancels the O(h^2) term so the
    truncation error sits well below quadrature noise for smooth fn.
    """
    h = scale * (1.0 + abs(x))
    d1 = (fn(x + h) - fn(x - h)) / (2.0 * h)
    d2 = (fn(x + h / 2.0) - fn(x - h / 2.0)) / h
    return (4.0 * d2 - d1) / 3.0


def exact_div(value, divisor: int):
    """Divide, staying in exact arithmetic when the numerator is exact."""
    if isinstance(value, (int, Fraction)) and not isinstance(value, bool):
        return Fraction(value, divisor)
    return value / divisor


def exact_avg(values: Iterable):
    """Average that is exact on int/Fraction inputs and compensated on floats."""
    vals = list(values)
    if vals and all(isinstance(v, (int, Fraction)) and not isinstance(v, bool) for v in vals):
        return exact_div(sum(vals), len(vals))
    return math.fsum(float(v) for v in vals) / len(vals)


def derive_seed(*parts) -> int:
    """Collapse (base seed, labels, indices) into a stable 64-bit seed.

    Uses BLAKE2b rather than hash() so streams are reproducible across
    processes and platforms.
    """
    digest = hashlib.blake2b(digest_size=8)
    for part in parts:
        digest.update(repr(part).encode())
        digest.update(b"\x1f")
    return int.from_bytes(digest.digest(), "big")


class CompensatedSum:
    """Neumaier compensated accumulator for incremental float summation."""

    __slots__ = ("_sum", "_comp")

    def __init__(self) -> None:
        self._sum = 0.0
        self._comp = 0.0

    def add(self, x: float) -> None:
        t = self._sum + x
        if abs(self._sum) >= abs(x):
            self._comp += (self._sum - t) + x
        else:
            self._comp += (x - t) + self._sum
        self._sum = t

    @property
    def value(self) -> float:
        return self._sum + self._comp
