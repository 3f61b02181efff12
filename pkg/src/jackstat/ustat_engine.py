"""U-statistic evaluation: exact, incremental, subsampled, and by jackknife
extension chains.

Subset enumeration is lexicographic over index tuples and batch sums use
exact full-precision accumulation (math.fsum), so every value here is
bit-stable across runs and independent of any partitioning of the work.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Callable, Optional, Sequence

import numpy as np

from .kernels import Kernel
from .numeric import CompensatedSum, exact_avg, exact_div

__all__ = [
    "Sample",
    "Estimator",
    "NotReadyError",
    "u_statistic",
    "jackknife_extend",
    "extend_chain",
    "incomplete_u_statistic",
    "UStatAccumulator",
    "accumulator_push",
    "u_stat_estimator",
]

SUBSET_GUARD = 10**8
_MAX_LITERAL_N = 22
_DRAW_CHUNK = 1 << 16


class NotReadyError(RuntimeError):
    """value() was asked of an accumulator that has absorbed fewer than m points."""


@dataclass(frozen=True)
class Sample:
    """An immutable, finite, ordered list of observations."""

    values: tuple

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, i):
        return self.values[i]


def as_values(sample) -> tuple:
    """Accept a Sample or any sequence and return its value tuple."""
    if isinstance(sample, Sample):
        return sample.values
    return tuple(sample)


@dataclass(frozen=True)
class Estimator:
    """An n-ary statistic; symmetric flags permutation invariance."""

    arity: int
    fn: Callable
    symmetric: bool = True
    label: str = ""

    def __call__(self, *args):
        if len(args) != self.arity:
            raise ValueError(f"estimator '{self.label}' has arity {self.arity}, got {len(args)}")
        return self.fn(*args)


def u_statistic(kernel: Kernel, sample):
    """Mean of the kernel over all C(n, m) unordered index subsets.

    Exact (Fraction) when the sample and kernel stay in exact arithmetic;
    otherwise a compensated float.
    """
    values = as_values(sample)
    n, m = len(values), kernel.m
    if n < m:
        raise ValueError(f"sample of length {n} too short for kernel arity {m}")
    count = math.comb(n, m)
    if count > SUBSET_GUARD:
        raise ValueError(
            f"C({n},{m}) = {count} exceeds the exact-enumeration guard {SUBSET_GUARD}; "
            "use incomplete_u_statistic"
        )
    fn = kernel.fn
    vals = [fn(*combo) for combo in combinations(values, m)]
    return exact_avg(vals)


def jackknife_extend(estimator: Estimator, sample):
    """Average the n-ary estimator over all n+1 leave-one-out subsamples.

    The construction preserves the expectation of the base estimator and, for
    symmetric estimators, yields a statistic symmetric in all n+1 points.
    """
    values = as_values(sample)
    n1 = len(values)
    if n1 != estimator.arity + 1:
        raise ValueError(
            f"jackknife extension needs a sample of length {estimator.arity + 1}, got {n1}"
        )
    fn = estimator.fn
    loo = [fn(*(values[:i] + values[i + 1:])) for i in range(n1)]
    return exact_avg(loo)


def u_stat_estimator(kernel: Kernel, n: int) -> Estimator:
    """The size-n estimator induced by a kernel: its U-statistic (the kernel
    itself when n == m)."""
    if n == kernel.m:
        return Estimator(n, kernel.fn, symmetric=True, label=kernel.label)
    return Estimator(n, lambda *xs: u_statistic(kernel, xs), symmetric=True,
                     label=f"u[{kernel.label}]@{n}")


@lru_cache(maxsize=None)
def _level_indices(n: int, j: int) -> np.ndarray:
    """Index table mapping each size-j subset of range(n) to the ranks of its
    j leave-one-out sub-subsets at level j-1 (lexicographic ranking)."""
    prev_rank = {c: r for r, c in enumerate(combinations(range(n), j - 1))}
    rows = [
        [prev_rank[combo[:i] + combo[i + 1:]] for i in range(j)]
        for combo in combinations(range(n), j)
    ]
    return np.array(rows, dtype=np.intp)


def _literal_chain(kernel: Kernel, values: tuple) -> float:
    n, m = len(values), kernel.m
    if n > _MAX_LITERAL_N:
        raise ValueError(f"literal chain limited to n <= {_MAX_LITERAL_N}, got {n}")
    fn = kernel.fn
    level = np.array([float(fn(*c)) for c in combinations(values, m)], dtype=float)
    for j in range(m + 1, n + 1):
        level = level[_level_indices(n, j)].mean(axis=1)
    return float(level[0])


def extend_chain(kernel: Kernel, sample, mode: str = "auto"):
    """Start from the kernel on m points and extend one point at a time until
    the whole sample is absorbed.

    mode "literal" materializes every intermediate estimator on all
    subsamples and averages it step by step; "identity" evaluates the
    equivalent U-statistic directly; "auto" uses the literal step for a
    single extension and the U-statistic beyond that.
    """
    values = as_values(sample)
    n, m = len(values), kernel.m
    if n < m:
        raise ValueError(f"sample of length {n} too short for kernel arity {m}")
    if mode not in ("auto", "literal", "identity"):
        raise ValueError(f"unknown chain mode '{mode}'")
    if n == m:
        return kernel.fn(*values)
    if mode == "identity" or (mode == "auto" and n >= m + 2):
        return u_statistic(kernel, values)
    return _literal_chain(kernel, values)


def incomplete_u_statistic(kernel: Kernel, sample, draws: int, seed: int) -> float:
    """Average the kernel over `draws` size-m subsets sampled uniformly with
    replacement from all C(n, m) subsets.

    Unbiased for the exact U-statistic; bitwise reproducible given the seed.
    """
    values = as_values(sample)
    n, m = len(values), kernel.m
    if n < m:
        raise ValueError(f"sample of length {n} too short for kernel arity {m}")
    if draws < 1:
        raise ValueError("draws must be >= 1")
    rng = np.random.default_rng(seed)
    arr = np.asarray(values, dtype=float)
    total = CompensatedSum()
    remaining = draws
    while remaining > 0:
        block = min(remaining, _DRAW_CHUNK)
        # Each row of argsort(random) is a uniform permutation; its first m
        # entries are a uniform m-subset.
        idx = np.argsort(rng.random((block, n)), axis=1)[:, :m]
        rows = arr[idx]
        if kernel.fn_rows is not None:
            vals = np.asarray(kernel.fn_rows(rows), dtype=float)
        else:
            vals = np.array([kernel.fn(*row) for row in rows], dtype=float)
        total.add(math.fsum(vals.tolist()))
        remaining -= block
    return total.value / draws


class UStatAccumulator:
    """Streaming U-statistic: absorbing a point with k prior observations
    costs exactly C(k, m-1) kernel evaluations, so a full pass over n points
    performs the same C(n, m) evaluations as the batch form."""

    def __init__(self, kernel: Kernel):
        self.kernel = kernel
        self._values: list = []
        self._sum = CompensatedSum()

    @property
    def count(self) -> int:
        return len(self._values)

    def push(self, x) -> "UStatAccumulator":
        fn = self.kernel.fn
        m = self.kernel.m
        if m == 1:
            self._sum.add(float(fn(x)))
        else:
            for prior in combinations(self._values, m - 1):
                self._sum.add(float(fn(*prior, x)))
        self._values.append(x)
        return self

    def value(self) -> float:
        n, m = self.count, self.kernel.m
        if n < m:
            raise NotReadyError(f"need at least m={m} observations, have {n}")
        return self._sum.value / math.comb(n, m)


def accumulator_push(acc: UStatAccumulator, x) -> UStatAccumulator:
    """Functional alias for UStatAccumulator.push."""
    return acc.push(x)
