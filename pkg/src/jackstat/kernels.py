"""Symmetric fixed-arity kernels, the atoms of every estimator in the package.

A kernel maps m real arguments to one real value and is invariant under any
permutation of its arguments.  Kernels are immutable and pure; all caching
lives in the consumers (see ustat_engine).  Built-in kernels preserve exact
arithmetic: fed ints or Fractions they return Fractions, so the exact
enumeration oracle can run on them end to end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from inspect import signature
from itertools import permutations
from typing import Callable, Optional

import numpy as np

from . import lstat_median
from .numeric import exact_div

__all__ = [
    "Kernel",
    "make_h_kernel",
    "make_variance_kernel",
    "make_median_kernel",
    "make_product_kernel",
    "symmetrize",
    "get_kernel",
    "kernel_labels",
]

MAX_SYMMETRIZE_ARITY = 8


@dataclass(frozen=True)
class Kernel:
    """A symmetric m-ary real function.

    fn evaluates one argument tuple.  The optional hooks are performance
    fast paths only and never change semantics:

    * fn_rows: vectorized evaluation over the rows of an (N, m) array.
    * u_stat_fast: closed-form U-statistic of this kernel over a 1-d sample.
    * order_statistic_rank: set when fn returns the rank-th smallest argument
      (1-based); lets integration code use order-statistic densities.
    * mean_reduction: expresses E[kernel(X_1..X_m)] through one-dimensional
      expectations; it receives an evaluator ex with ex(g) = E[g(X)].
    """

    m: int
    label: str
    fn: Callable
    fn_rows: Optional[Callable[[np.ndarray], np.ndarray]] = None
    u_stat_fast: Optional[Callable[[np.ndarray], float]] = None
    order_statistic_rank: Optional[int] = None
    mean_reduction: Optional[Callable] = None

    def __call__(self, *args):
        if len(args) != self.m:
            raise ValueError(f"kernel '{self.label}' has arity {self.m}, got {len(args)} arguments")
        return self.fn(*args)


def make_h_kernel(h: Callable, label: str) -> Kernel:
    """Wrap a scalar function h as a degree-1 kernel."""
    if label == "mean":
        return Kernel(1, label, h, fn_rows=lambda rows: np.asarray(rows)[:, 0],
                      u_stat_fast=lambda xs: float(np.mean(xs)),
                      mean_reduction=lambda ex: ex(h))
    return Kernel(1, label, h,
                  fn_rows=lambda rows: np.asarray([h(x) for x in np.asarray(rows)[:, 0]]),
                  u_stat_fast=lambda xs: float(np.mean([h(x) for x in np.asarray(xs)])),
                  mean_reduction=lambda ex: ex(h))


def _half_square_diff(x1, x2):
    s = (x1 - x2) * (x1 - x2)
    return exact_div(s, 2)


def make_variance_kernel() -> Kernel:
    """Degree-2 kernel (x1-x2)^2/2, whose U-statistic is the unbiased sample
    variance."""
    return Kernel(
        2,
        "variance",
        _half_square_diff,
        fn_rows=lambda rows: 0.5 * (np.asarray(rows)[:, 0] - np.asarray(rows)[:, 1]) ** 2,
        u_stat_fast=lambda xs: float(np.var(np.asarray(xs, dtype=float), ddof=1)),
        # E[(X-Y)^2]/2 = E[X^2] - (E X)^2 for independent X, Y
        mean_reduction=lambda ex: ex(_square) - ex(_identity) ** 2,
    )


@lru_cache(maxsize=None)
def _median_ustat_weights(n: int, m: int) -> np.ndarray:
    return np.array(lstat_median.median_subset_weights(n, m).as_floats())


def make_median_kernel(m: int) -> Kernel:
    """Kernel returning the middle order statistic of its m arguments; m odd."""
    if m < 1 or m % 2 == 0:
        raise ValueError(f"median kernel needs odd arity, got {m}")
    mid = m // 2

    def fn(*args):
        return sorted(args)[mid]

    def u_fast(xs) -> float:
        xs = np.sort(np.asarray(xs, dtype=float))
        return float(np.dot(_median_ustat_weights(len(xs), m), xs))

    return Kernel(
        m,
        f"median{m}" if m > 1 else "median1",
        fn,
        fn_rows=lambda rows: np.median(np.asarray(rows, dtype=float), axis=1),
        u_stat_fast=u_fast,
        order_statistic_rank=mid + 1,
    )


def _product2(x1, x2):
    return x1 * x2


def make_product_kernel() -> Kernel:
    """Degree-2 kernel x1*x2 (already symmetric)."""
    return Kernel(2, "product", _product2,
                  fn_rows=lambda rows: np.asarray(rows)[:, 0] * np.asarray(rows)[:, 1],
                  mean_reduction=lambda ex: ex(_identity) ** 2)


def symmetrize(f: Callable, m: Optional[int] = None, label: str = "symmetrized") -> Kernel:
    """Average f over all m! permutations of its arguments.

    The arity is read off f's signature unless given explicitly; arities
    above MAX_SYMMETRIZE_ARITY are rejected (factorial blow-up).
    """
    if m is None:
        m = len(signature(f).parameters)
    if m < 1:
        raise ValueError("arity must be >= 1")
    if m > MAX_SYMMETRIZE_ARITY:
        raise ValueError(f"arity {m} too large to symmetrize (max {MAX_SYMMETRIZE_ARITY})")

    def fn(*args):
        vals = [f(*p) for p in permutations(args)]
        if all(isinstance(v, (int, Fraction)) and not isinstance(v, bool) for v in vals):
            return exact_div(sum(vals), len(vals))
        return math.fsum(float(v) for v in vals) / len(vals)

    return Kernel(m, label, fn)


def _square(x):
    return x * x


def _cube(x):
    return x * x * x


def _identity(x):
    return x


_REGISTRY: dict[str, Kernel] = {}
for _k in (
    make_h_kernel(_identity, "mean"),
    make_variance_kernel(),
    make_median_kernel(3),
    make_median_kernel(5),
    make_h_kernel(_cube, "cube"),
    make_h_kernel(_square, "square"),
    make_product_kernel(),
):
    _REGISTRY[_k.label] = _k


def get_kernel(label: str) -> Kernel:
    """Look up a built-in kernel by its registry label."""
    try:
        return _REGISTRY[label]
    except KeyError:
        raise ValueError(f"unknown kernel '{label}'; available: {', '.join(sorted(_REGISTRY))}") from None


def kernel_labels() -> tuple[str, ...]:
    return tuple(sorted(_REGISTRY))
