"""Projection variances of kernels and the variance identities built on them.

The central objects are the conditional projections of an m-ary kernel onto
its first k arguments and their variances v_1 <= ... <= v_m: they give the
exact finite-sample variance of the subset-average estimator through the
combinatorial formula, its large-sample variance m^2 v_1 / n, the scaled
variance-drop comparison for jackknife extensions, and a normality
diagnostic for the centered, root-n-scaled estimator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import stats as _scipy_stats

from . import families as fam
from .exact_oracle import DropReport, FiniteDist, exact_vk, verify_variance_drop
from .kernels import Kernel
from .lstat_median import LWeights, eval_lstat
from .numeric import derive_seed, exact_div
from .ustat_engine import Estimator, jackknife_extend, u_stat_estimator, u_statistic

__all__ = [
    "HoeffdingComponents",
    "kernel_mean",
    "conditional_projection",
    "projection_variance",
    "v_components",
    "ustat_variance_formula",
    "asymptotic_variance",
    "variance_drop_report",
    "clt_diagnostic",
    "CltReport",
    "v1_pair_estimate",
    "finite_support_dist",
]

_BATCHES = 30


@dataclass(frozen=True)
class HoeffdingComponents:
    """Projection variances v_1..v_m of a kernel at one parameter value.

    method is "exact" (enumeration, summation, or quadrature; see detail)
    or "monte-carlo" (detail records replication counts and seed, se the
    per-component standard errors)."""

    m: int
    theta: Optional[float]
    v: tuple
    method: str
    detail: str = ""
    se: Optional[tuple] = None


def finite_support_dist(family: fam.Family, theta: float) -> FiniteDist:
    """Exact finite-support snapshot of a family at theta (probabilities
    renormalized in rational arithmetic so they sum to one exactly)."""
    if family.support.kind != "finite":
        raise ValueError(f"family '{family.name}' does not have finite support")
    probs = [Fraction(family.pdf(a, theta)) for a in family.support.atoms]
    total = sum(probs)
    return FiniteDist(tuple(
        (a, p / total) for a, p in zip(family.support.atoms, probs)
    ))


# ---------------------------------------------------------------------------
# Order-statistic fast paths for median kernels on continuous families


def _orderstat_mean(family: fam.Family, theta: float, rank: int, m: int,
                    abs_tol: float) -> float:
    """Mean of the rank-th order statistic of m draws, via its density."""
    c = math.factorial(m) / (math.factorial(rank - 1) * math.factorial(m - rank))
    lo, hi = family.support.range()
    cdf, pdf = family.cdf, family.pdf

    def dens(t: float) -> float:
        F = cdf(t, theta)
        return c * F ** (rank - 1) * (1.0 - F) ** (m - rank) * pdf(t, theta)

    from .numeric import integrate

    return integrate(lambda t: t * dens(t), lo, hi,
                     breakpoints=family.breakpoints(theta), abs_tol=abs_tol)


def _median_clamp_projection(family: fam.Family, theta: float, m: int, x: float,
                             abs_tol: float) -> float:
    """E[median(x, Y_1..Y_{m-1})] for odd m: the combined median clamps x
    between the r-th and (r+1)-th order statistics of the other 2r draws."""
    r = (m - 1) // 2
    n_rest = 2 * r
    cdf, pdf = family.cdf, family.pdf
    lo, hi = family.support.range()
    Fx = cdf(x, theta)
    p_mid = math.comb(n_rest, r) * Fx**r * (1.0 - Fx) ** r
    c = math.factorial(n_rest) / (math.factorial(r - 1) * math.factorial(r))

    def upper_orderstat(t: float) -> float:  # density of Y_(r), weighted by t
        F = cdf(t, theta)
        return t * c * F ** (r - 1) * (1.0 - F) ** r * pdf(t, theta)

    def lower_orderstat(t: float) -> float:  # density of Y_(r+1), weighted by t
        F = cdf(t, theta)
        return t * c * F**r * (1.0 - F) ** (r - 1) * pdf(t, theta)

    from .numeric import integrate

    # Anchors near the center keep the far piece a finite-range integral;
    # without them a half-infinite range with |x| huge defeats the infinite
    # -range transform (all the mass lands in one transformed subinterval).
    center = family.median(theta) if family.median is not None else 0.0
    cuts = family.breakpoints(theta) + (center - 1.0, center + 1.0)
    above = integrate(upper_orderstat, x, hi, breakpoints=cuts, abs_tol=abs_tol)
    below = integrate(lower_orderstat, lo, x, breakpoints=cuts, abs_tol=abs_tol)
    return x * p_mid + above + below


def _is_median_kernel(kernel: Kernel) -> bool:
    return (kernel.order_statistic_rank is not None
            and kernel.m >= 3
            and kernel.order_statistic_rank == (kernel.m + 1) // 2)


# ---------------------------------------------------------------------------
# Conditional projections


def kernel_mean(family: fam.Family, kernel: Kernel, theta: float, *,
                method: str = "auto", abs_tol: float = 1e-10) -> float:
    """E over m independent draws of the kernel (its estimand)."""
    if method in ("auto", "exact"):
        if kernel.mean_reduction is not None:
            return kernel.mean_reduction(
                lambda g: fam.expect(family, g, theta, abs_tol=abs_tol))
        if (_is_median_kernel(kernel) and family.support.continuous
                and family.cdf is not None):
            return _orderstat_mean(family, theta, kernel.order_statistic_rank,
                                   kernel.m, abs_tol)
    return fam.expect_tuple(family, lambda xs: kernel.fn(*xs), theta, kernel.m,
                            abs_tol=abs_tol)


def conditional_projection(family: fam.Family, kernel: Kernel, theta: float,
                           fixed: Sequence[float], *, method: str = "auto",
                           abs_tol: float = 1e-10,
                           replications: int = 10_000, seed: int = 0) -> float:
    """E[kernel(fixed, X_{k+1}..X_m)]: the kernel with its first k arguments
    pinned and the rest integrated out.

    Deterministic routes: exact summation on finite/lattice support,
    (nested) quadrature on continuous support, with an order-statistic
    shortcut for median kernels at k=1.  method="mc" averages over
    `replications` seeded completions instead.
    """
    fixed = tuple(fixed)
    k, m = len(fixed), kernel.m
    if not 1 <= k <= m:
        raise ValueError(f"need 1 <= k <= m={m}, got k={k}")
    if k == m:
        return kernel.fn(*fixed)
    if method == "mc":
        rng = np.random.default_rng(seed)
        rest = family.sample(theta, replications * (m - k), rng).reshape(replications, m - k)
        rows = np.hstack([np.tile(np.asarray(fixed, dtype=float), (replications, 1)), rest])
        if kernel.fn_rows is not None:
            vals = np.asarray(kernel.fn_rows(rows), dtype=float)
        else:
            vals = np.array([kernel.fn(*row) for row in rows], dtype=float)
        return float(vals.mean())
    if (k == 1 and _is_median_kernel(kernel) and family.support.continuous
            and family.cdf is not None):
        return _median_clamp_projection(family, theta, m, fixed[0], abs_tol)
    return fam.expect_tuple(family, lambda rest: kernel.fn(*fixed, *rest), theta,
                            m - k, abs_tol=abs_tol)


def projection_variance(family_or_dist, kernel: Kernel, theta: Optional[float] = None,
                        k: int = 1, *, method: str = "auto",
                        r_outer: int = 2000, r_inner: int = 500, seed: int = 0,
                        abs_tol: float = 1e-9):
    """v_k: the variance of the conditional projection over k-tuples.

    Exact (Fraction) on finite support, float by summation/quadrature
    otherwise, or the nested Monte Carlo estimate with its upward bias from
    inner noise subtracted (method="mc"; returns just the value — use
    v_components for standard errors)."""
    value, _ = _projection_variance_se(family_or_dist, kernel, theta, k, method=method,
                                       r_outer=r_outer, r_inner=r_inner, seed=seed,
                                       abs_tol=abs_tol)
    return value


def _projection_variance_se(family_or_dist, kernel, theta, k, *, method,
                            r_outer, r_inner, seed, abs_tol):
    m = kernel.m
    if not 1 <= k <= m:
        raise ValueError(f"need 1 <= k <= m={m}, got k={k}")
    if isinstance(family_or_dist, FiniteDist):
        return exact_vk(kernel, family_or_dist, k), None
    family = family_or_dist
    if method in ("auto", "exact") and family.support.kind == "finite":
        return exact_vk(kernel, finite_support_dist(family, theta), k), None
    if method == "mc":
        return _mc_projection_variance(family, kernel, theta, k,
                                       r_outer=r_outer, r_inner=r_inner, seed=seed)
    gamma = kernel_mean(family, kernel, theta, abs_tol=min(abs_tol, 1e-10))

    def proj_sq(fixed: tuple) -> float:
        p = conditional_projection(family, kernel, theta, fixed, abs_tol=abs_tol / 3.0)
        return (p - gamma) ** 2

    return fam.expect_tuple(family, proj_sq, theta, k, abs_tol=abs_tol), None


def _kernel_rows(kernel: Kernel, rows: np.ndarray) -> np.ndarray:
    if kernel.fn_rows is not None:
        return np.asarray(kernel.fn_rows(rows), dtype=float)
    return np.array([kernel.fn(*row) for row in rows], dtype=float)


def _mc_projection_variance(family, kernel, theta, k, *, r_outer, r_inner, seed):
    """Nested scheme: outer k-tuples, inner completions; the variance of the
    inner means overestimates v_k by E[inner variance]/r_inner, which is
    estimated from the inner sample variances and subtracted."""
    m = kernel.m
    rng = np.random.default_rng(derive_seed(seed, "vk", k))
    if k == m:
        vals = _kernel_rows(kernel, family.sample(theta, r_outer * m, rng).reshape(r_outer, m))
        batches = np.array_split(vals, _BATCHES)
        per_batch = np.array([b.var(ddof=1) for b in batches])
        return float(vals.var(ddof=1)), float(per_batch.std(ddof=1) / math.sqrt(_BATCHES))
    fixed = family.sample(theta, r_outer * k, rng).reshape(r_outer, k)
    rest = family.sample(theta, r_outer * r_inner * (m - k), rng).reshape(r_outer, r_inner, m - k)
    rows = np.concatenate(
        [np.repeat(fixed[:, None, :], r_inner, axis=1), rest], axis=2
    ).reshape(r_outer * r_inner, m)
    vals = _kernel_rows(kernel, rows).reshape(r_outer, r_inner)
    inner_means = vals.mean(axis=1)
    inner_vars = vals.var(axis=1, ddof=1)
    estimate = float(inner_means.var(ddof=1) - inner_vars.mean() / r_inner)
    idx = np.array_split(np.arange(r_outer), _BATCHES)
    per_batch = np.array([
        inner_means[i].var(ddof=1) - inner_vars[i].mean() / r_inner for i in idx
    ])
    return estimate, float(per_batch.std(ddof=1) / math.sqrt(_BATCHES))


def v_components(family_or_dist, kernel: Kernel, theta: Optional[float] = None, *,
                 method: str = "auto", r_outer: int = 2000, r_inner: int = 500,
                 seed: int = 0) -> HoeffdingComponents:
    """All projection variances v_1..v_m, with the monotonicity
    0 <= v_1 <= ... <= v_m checked before returning (exactly on exact
    routes, within 3 standard errors on Monte Carlo)."""
    m = kernel.m
    mc = method == "mc"
    vs, ses = [], []
    for k in range(1, m + 1):
        v, se = _projection_variance_se(family_or_dist, kernel, theta, k, method=method,
                                        r_outer=r_outer, r_inner=r_inner, seed=seed,
                                        abs_tol=1e-9)
        vs.append(v)
        ses.append(se)
    exact_route = all(isinstance(v, Fraction) for v in vs)
    for i in range(m):
        lo_ok = vs[i] >= (0 if exact_route else -_slack(vs[i], ses[i], mc))
        mono_ok = i == 0 or vs[i] + _slack(vs[i], ses[i], mc) + _slack(vs[i - 1], ses[i - 1], mc) >= vs[i - 1]
        if not (lo_ok and mono_ok):
            raise RuntimeError(
                f"projection variances violate 0 <= v_1 <= ... <= v_m: {vs}"
            )
    if mc:
        detail = f"outer={r_outer},inner={r_inner},seed={seed}"
        return HoeffdingComponents(m, theta, tuple(vs), "monte-carlo", detail,
                                   tuple(ses))
    if exact_route:
        detail = "enumeration"
    elif getattr(family_or_dist, "support", None) is not None and family_or_dist.support.kind == "lattice":
        detail = "summation"
    else:
        detail = "quadrature"
    return HoeffdingComponents(m, theta, tuple(vs), "exact", detail)


def _slack(value, se, mc: bool) -> float:
    if mc:
        return 3.0 * (se or 0.0)
    if isinstance(value, Fraction):
        return 0
    return 1e-9 * (1.0 + abs(float(value)))


def ustat_variance_formula(n: int, components: HoeffdingComponents):
    """Exact variance of the subset-average estimator on n points:
    sum_k C(m,k) C(n-m, m-k) v_k / C(n, m)."""
    m = components.m
    if n < m:
        raise ValueError(f"need n >= m={m}, got n={n}")
    weighted = sum(
        math.comb(m, k) * math.comb(n - m, m - k) * components.v[k - 1]
        for k in range(1, m + 1)
    )
    return exact_div(weighted, math.comb(n, m))


def asymptotic_variance(components: HoeffdingComponents, n: int):
    """Large-sample variance m^2 v_1 / n of the subset-average estimator."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return exact_div(components.m ** 2 * components.v[0], n)


# ---------------------------------------------------------------------------
# Variance drop and normality diagnostics


def _resolve_estimator(estimator, n: int) -> Estimator:
    if isinstance(estimator, Kernel):
        if n < estimator.m:
            raise ValueError(f"n={n} below kernel arity {estimator.m}")
        return u_stat_estimator(estimator, n)
    if isinstance(estimator, LWeights):
        if estimator.n != n:
            raise ValueError(f"L-statistic has size {estimator.n}, expected {n}")
        return Estimator(n, lambda *xs: eval_lstat(estimator, xs), symmetric=True,
                         label="lstat")
    if isinstance(estimator, Estimator):
        if estimator.arity != n:
            raise ValueError(f"estimator arity {estimator.arity} != n={n}")
        return estimator
    raise TypeError(f"cannot interpret {type(estimator).__name__} as an estimator")


def variance_drop_report(family_or_dist, estimator, n: int,
                         theta: Optional[float] = None, *, method: str = "auto",
                         replications: int = 4000, seed: int = 0) -> DropReport:
    """Compare (n+1) var(jackknife extension on n+1 draws) with
    n var(estimator on n draws).

    estimator may be a Kernel (resolved to its size-n subset average), an
    LWeights vector, or an Estimator of arity n.  The exact route enumerates
    a finite-support distribution; the Monte Carlo route simulates both
    sides with one method tag and a 3-standard-error tolerance on holds,
    standard errors estimated from 30 batches.
    """
    est = _resolve_estimator(estimator, n)
    if isinstance(family_or_dist, FiniteDist):
        if method == "mc":
            raise ValueError("Monte Carlo route needs a Family with a sampler")
        return verify_variance_drop(est.fn, family_or_dist, n)
    family = family_or_dist
    if method in ("auto", "exact") and family.support.kind == "finite":
        return verify_variance_drop(est.fn, finite_support_dist(family, theta), n)
    if method == "exact":
        raise ValueError(f"no exact enumeration for family '{family.name}'")

    base_rng = np.random.default_rng(derive_seed(seed, "vdrop-base"))
    ext_rng = np.random.default_rng(derive_seed(seed, "vdrop-ext"))
    base_draws = family.sample(theta, replications * n, base_rng).reshape(replications, n)
    ext_draws = family.sample(theta, replications * (n + 1), ext_rng).reshape(replications, n + 1)
    base_vals = np.array([float(est.fn(*row)) for row in base_draws])
    ext_vals = np.array([float(jackknife_extend(est, tuple(row))) for row in ext_draws])
    lhs = (n + 1) * float(ext_vals.var(ddof=1))
    rhs = n * float(base_vals.var(ddof=1))
    idx = np.array_split(np.arange(replications), _BATCHES)
    margins = np.array([
        n * base_vals[i].var(ddof=1) - (n + 1) * ext_vals[i].var(ddof=1) for i in idx
    ])
    se = float(margins.std(ddof=1) / math.sqrt(_BATCHES))
    margin = rhs - lhs
    return DropReport(lhs, rhs, margin >= -3.0 * se, margin, method="monte-carlo", se=se)


@dataclass(frozen=True)
class CltReport:
    n: int
    replications: int
    seed: int
    empirical_variance: float
    predicted: float
    ratio: float
    ks_statistic: float


def clt_diagnostic(family: fam.Family, kernel: Kernel, theta: float, n: int,
                   replications: int, seed: int) -> CltReport:
    """Simulate sqrt(n) (U_n - gamma(theta)) and compare its spread and shape
    with the normal limit of variance m^2 v_1(theta)."""
    if replications < 100:
        raise ValueError("need at least 100 replications")
    gamma = kernel_mean(family, kernel, theta)
    v1 = float(projection_variance(family, kernel, theta, 1))
    predicted = kernel.m ** 2 * v1
    fast = kernel.u_stat_fast
    values = np.empty(replications)
    for i in range(replications):
        rng = np.random.default_rng(derive_seed(seed, "clt", i))
        xs = family.sample(theta, n, rng)
        u = fast(xs) if fast is not None else float(u_statistic(kernel, tuple(xs)))
        values[i] = math.sqrt(n) * (u - gamma)
    empirical = float(values.var(ddof=1))
    if predicted > 0.0:
        ratio = empirical / predicted
        ks = float(_scipy_stats.kstest(values, "norm",
                                       args=(0.0, math.sqrt(predicted))).statistic)
    else:
        ratio = math.nan
        ks = math.nan
    return CltReport(n, replications, seed, empirical, predicted, ratio, ks)


def v1_pair_estimate(family: fam.Family, kernel: Kernel, theta: float, *,
                     draws: int, seed: int, inner: int = 1,
                     batches: int = _BATCHES) -> tuple[float, float]:
    """Unbiased pick-freeze estimate of v_1 with a batch standard error.

    Kernel evaluations that share only their first argument have covariance
    exactly v_1, so the sample cross-covariance needs no bias correction,
    unlike the nested scheme.  `inner` averages that many conditionally
    independent completions per shared draw before taking the covariance;
    this leaves the estimand untouched (every cross term equals v_1) while
    shrinking the tail weight of the products by the same factor, which is
    what keeps the batch standard error honest when the kernel's conditional
    variance is infinite (heavy-tailed families).  That makes this the
    independent check of record for golden efficiency values."""
    m = kernel.m
    if m < 2:
        # With m == 1 the two copies coincide and v_1 is a plain variance.
        rng = np.random.default_rng(derive_seed(seed, "pair", 0))
        vals = _kernel_rows(kernel, family.sample(theta, draws, rng).reshape(-1, 1))
        chunks = np.array_split(vals, batches)
        per = np.array([c.var(ddof=1) for c in chunks])
        return float(vals.var(ddof=1)), float(per.std(ddof=1) / math.sqrt(batches))
    if inner < 1:
        raise ValueError("inner must be >= 1")
    per_batch = np.empty(batches)
    counts = [len(c) for c in np.array_split(np.arange(draws), batches)]
    for b, size in enumerate(counts):
        rng = np.random.default_rng(derive_seed(seed, "pair", b))
        shared = np.repeat(family.sample(theta, size, rng), inner)
        means = []
        for _ in range(2):
            rest = family.sample(theta, size * inner * (m - 1), rng).reshape(-1, m - 1)
            vals = _kernel_rows(kernel, np.column_stack([shared, rest]))
            means.append(vals.reshape(size, inner).mean(axis=1))
        per_batch[b] = np.cov(means[0], means[1], ddof=1)[0, 1]
    return float(per_batch.mean()), float(per_batch.std(ddof=1) / math.sqrt(batches))
