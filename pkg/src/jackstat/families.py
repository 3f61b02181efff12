"""One-parameter distribution catalog and information-theoretic operations.

Seven built-in families (five exponential, two location families that are
not exponential) expose density/mass, score, deterministic samplers, and
closed-form Fisher information.  On top of them: numeric Fisher information,
the variance lower bound for unbiased estimation, the score-projection bound
for arbitrary statistics, asymptotic efficiency of kernel-chain estimators,
exponential-family construction from its canonical pieces, and moment-based
maximum-likelihood solving.

All randomness flows through explicit numpy Generators; all integration is
quadrature or lattice summation with achieved-error checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import ndtr

from .kernels import Kernel
from .numeric import (
    QuadratureError,
    SummationError,
    central_derivative,
    integrate,
    lattice_sum,
)

__all__ = [
    "Support",
    "Family",
    "ExponentialFamilySpec",
    "BoundaryError",
    "get_family",
    "family_names",
    "expect",
    "expect_tuple",
    "fisher_info",
    "fisher_info_report",
    "FisherReport",
    "cr_bound",
    "lemma3_bound",
    "Lemma3Report",
    "projection_residual",
    "aseff",
    "build_exponential_family",
    "canonical_exponential_spec",
    "mle_solve",
]

_TWO_PI = 2.0 * math.pi


class BoundaryError(ValueError):
    """The moment equation has no solution inside the parameter domain."""


@dataclass(frozen=True)
class Support:
    """Where the distribution lives: the whole line, the half line x >= 0,
    the nonnegative integer lattice, or an explicit finite set of atoms."""

    kind: str
    atoms: Optional[tuple] = None

    def __post_init__(self) -> None:
        if self.kind not in ("line", "half-line", "lattice", "finite"):
            raise ValueError(f"unknown support kind '{self.kind}'")
        if (self.kind == "finite") != (self.atoms is not None):
            raise ValueError("finite support requires atoms; others must not set them")

    @property
    def continuous(self) -> bool:
        return self.kind in ("line", "half-line")

    def range(self) -> tuple[float, float]:
        if self.kind == "line":
            return (-math.inf, math.inf)
        if self.kind == "half-line":
            return (0.0, math.inf)
        raise ValueError(f"support '{self.kind}' has no continuous range")


@dataclass(frozen=True)
class Family:
    """A one-parameter family: density/mass p(x; theta), score
    d/dtheta log p, a seed-deterministic sampler, and optional closed forms.

    Samplers take an explicit numpy Generator; there is no shared module
    state, so concurrent use with distinct generators is safe.
    """

    name: str
    theta_domain: tuple[float, float]
    support: Support
    pdf: Callable[[float, float], float]
    score: Callable[[float, float], float]
    sample: Callable[[float, int, np.random.Generator], np.ndarray]
    fisher_closed: Optional[Callable[[float], float]] = None
    cdf: Optional[Callable[[float, float], float]] = None
    breakpoints: Callable[[float], tuple] = lambda theta: ()
    median: Optional[Callable[[float], float]] = None
    expfam: Optional["ExponentialFamilySpec"] = None


def _check_theta(family: Family, theta: float) -> None:
    lo, hi = family.theta_domain
    if not (lo < theta < hi) or not math.isfinite(theta):
        raise ValueError(
            f"theta={theta} outside the open parameter domain ({lo}, {hi}) of '{family.name}'"
        )


def expect(family: Family, fn: Callable[[float], float], theta: float, *,
           abs_tol: float = 1e-10, extra_breakpoints: Sequence[float] = ()) -> float:
    """E_theta[fn(X)] by summation (finite/lattice support) or quadrature.

    Functions with known non-smooth points may carry a `breakpoints`
    attribute; those points are added to the quadrature splits.
    """
    _check_theta(family, theta)
    sup = family.support
    if sup.kind == "finite":
        return math.fsum(fn(v) * family.pdf(v, theta) for v in sup.atoms)
    if sup.kind == "lattice":
        return lattice_sum(fn, lambda k: family.pdf(k, theta))
    lo, hi = sup.range()
    cuts = tuple(family.breakpoints(theta)) + tuple(getattr(fn, "breakpoints", ())) \
        + tuple(extra_breakpoints)
    return integrate(lambda x: fn(x) * family.pdf(x, theta), lo, hi,
                     breakpoints=cuts, abs_tol=abs_tol)


def expect_tuple(family: Family, fn: Callable[[tuple], float], theta: float, dims: int, *,
                 abs_tol: float = 1e-9) -> float:
    """E[fn(X_1..X_dims)] over independent draws, by nested expectation.

    Cost grows geometrically with dims; guarded at 3 (enough for the kernel
    degrees this package supports on continuous families).
    """
    if dims < 0:
        raise ValueError("dims must be >= 0")
    if dims == 0:
        return float(fn(()))
    if family.support.kind == "finite":
        if len(family.support.atoms) ** dims > 1_000_000:
            raise ValueError("finite-support tuple expectation too large; use Monte Carlo")
    elif dims > 3:
        raise ValueError("nested quadrature/summation limited to 3 dimensions; use Monte Carlo")

    def rec(prefix: tuple, left: int, tol: float) -> float:
        if left == 0:
            return fn(prefix)
        return expect(family, lambda x: rec(prefix + (x,), left - 1, tol / 3.0),
                      theta, abs_tol=tol)

    return rec((), dims, abs_tol)


def normalization(family: Family, theta: float) -> float:
    """Total mass of the density; should be 1 for every valid family."""
    return expect(family, lambda x: 1.0, theta)


def fisher_info(family: Family, theta: float, *, abs_tol: float = 1e-10) -> float:
    """Expected squared score, by quadrature or summation."""
    return expect(family, lambda x: family.score(x, theta) ** 2, theta, abs_tol=abs_tol)


@dataclass(frozen=True)
class FisherReport:
    numeric: float
    closed_form: Optional[float]
    discrepancy: Optional[float]


def fisher_info_report(family: Family, theta: float) -> FisherReport:
    """Numeric Fisher information next to the closed form (when one exists)
    and their discrepancy."""
    numeric = fisher_info(family, theta)
    if family.fisher_closed is None:
        return FisherReport(numeric, None, None)
    closed = family.fisher_closed(theta)
    return FisherReport(numeric, closed, abs(numeric - closed))


def mean_map(family: Family, h: Callable[[float], float], theta: float, *,
             abs_tol: float = 1e-12) -> float:
    """gamma(theta) = E_theta[h(X)]."""
    return expect(family, h, theta, abs_tol=abs_tol)


def cr_bound(family: Family, h: Callable[[float], float], n: int, theta: float) -> float:
    """Lower bound |gamma'(theta)|^2 / (n I(theta)) on the variance of any
    unbiased estimator of gamma(theta) = E_theta h from n observations."""
    if n < 1:
        raise ValueError("n must be >= 1")
    _check_theta(family, theta)
    gprime = central_derivative(lambda t: mean_map(family, h, t), theta)
    info = fisher_info(family, theta)
    return gprime * gprime / (n * info)


@dataclass(frozen=True)
class Lemma3Report:
    """Score-projection bound report.

    bound = |mu'(theta)|^2 / sigma^2(theta) and fisher >= bound always; the
    margin is fisher - bound.  When h is not square integrable under the
    family the projection onto span{1, h} degenerates to the constants, so
    the bound collapses to 0 (square_integrable records this).
    """

    bound: float
    fisher: float
    holds: bool
    margin: float
    coeff: float
    mu: Optional[float]
    sigma2: Optional[float]
    square_integrable: bool


def _checked_nonneg_expect(family: Family, g: Callable[[float], float], theta: float, *,
                           abs_tol: float = 1e-9) -> float:
    """E[g(X)] for nonnegative g on continuous support, robust to divergence.

    Infinite-range quadrature can return a confidently wrong finite value on
    divergent integrands (the range transform manufactures an integrable-
    looking singularity), so divergence is detected directly: partial
    integrals over doubling windows must show shrinking increments before
    the remaining tails are trusted to plain quadrature.
    """
    lo, hi = family.support.range()
    center = family.median(theta) if family.median is not None else 0.0
    scale = 1.0 + abs(center)
    cuts = tuple(family.breakpoints(theta)) + tuple(getattr(g, "breakpoints", ()))

    def weighted(x: float) -> float:
        return g(x) * family.pdf(x, theta)

    a = max(lo, center - scale)
    b = min(hi, center + scale)
    total = integrate(weighted, a, b, breakpoints=cuts, abs_tol=abs_tol)
    shrinking = 0
    for _ in range(48):
        na, nb = max(lo, center - 2.0 * (center - a)) if a > lo else a, \
                 min(hi, center + 2.0 * (b - center)) if b < hi else b
        increment = 0.0
        if na < a:
            increment += integrate(weighted, na, a, breakpoints=cuts, abs_tol=abs_tol)
        if nb > b:
            increment += integrate(weighted, b, nb, breakpoints=cuts, abs_tol=abs_tol)
        total += increment
        a, b = na, nb
        shrinking = shrinking + 1 if increment < abs_tol * (1.0 + abs(total)) / 4.0 else 0
        if shrinking >= 2:
            break
        if a == lo and b == hi:
            break
    else:
        raise QuadratureError("windowed integral increments are not shrinking "
                              "(divergent moment)", total, math.inf)
    if a > lo:
        total += integrate(weighted, lo, a, abs_tol=abs_tol)
    if b < hi:
        total += integrate(weighted, b, hi, abs_tol=abs_tol)
    return total


def _h_moments(family: Family, h: Callable, theta: float):
    """(mu, sigma2, square_integrable): first two moments of h(X), detecting
    a divergent E[h^2] (then |h| is not square integrable and only the
    trivial projection onto constants exists)."""
    try:
        if family.support.continuous:
            second = _checked_nonneg_expect(family, lambda x: h(x) ** 2, theta)
        else:
            second = expect(family, lambda x: h(x) ** 2, theta)
        # |h| <= (1+h^2)/2, so the mean converges whenever the second moment does.
        mu = expect(family, h, theta)
    except (QuadratureError, SummationError):
        return None, None, False
    sigma2 = second - mu * mu
    return mu, sigma2, True


def lemma3_bound(family: Family, h: Callable[[float], float], theta: float, *,
                 tol: float = 1e-8) -> Lemma3Report:
    """Check I(theta) >= |mu'|^2 / sigma^2 for a theta-free statistic h."""
    _check_theta(family, theta)
    fisher = fisher_info(family, theta)
    mu, sigma2, ok = _h_moments(family, h, theta)
    if not ok:
        return Lemma3Report(0.0, fisher, True, fisher, 0.0, None, None, False)
    if sigma2 <= 1e-14 * (1.0 + abs(mu) ** 2):
        raise ValueError("h has zero variance under the family; the bound is degenerate")
    muprime = central_derivative(lambda t: mean_map(family, h, t), theta)
    bound = muprime * muprime / sigma2
    margin = fisher - bound
    return Lemma3Report(bound, fisher, margin >= -tol, margin, muprime / sigma2,
                        mu, sigma2, True)


def projection_residual(family: Family, h: Callable[[float], float], theta: float) -> float:
    """E[(J - a (h - mu))^2] with a = mu'/sigma^2: the squared distance from
    the score to its projection on span{1, h}.  Zero exactly when the score
    is an affine function of h almost everywhere."""
    _check_theta(family, theta)
    mu, sigma2, ok = _h_moments(family, h, theta)
    if ok:
        if sigma2 <= 1e-14 * (1.0 + abs(mu) ** 2):
            raise ValueError("h has zero variance under the family; the projection is degenerate")
        muprime = central_derivative(lambda t: mean_map(family, h, t), theta)
        coeff = muprime / sigma2
        center = mu
    else:
        coeff = 0.0
        center = 0.0

    def integrand(x: float) -> float:
        r = family.score(x, theta) - coeff * (h(x) - center)
        return r * r

    integrand.breakpoints = tuple(getattr(h, "breakpoints", ()))
    return expect(family, integrand, theta)


def aseff(family: Family, kernel: Kernel, theta: float, *, method: str = "auto") -> float:
    """Asymptotic efficiency of the chain estimator built from the kernel:
    (|gamma'|^2 / I) / (m^2 v_1)."""
    from . import hoeffding  # late import: hoeffding builds on this module

    _check_theta(family, theta)
    gprime = central_derivative(
        lambda t: hoeffding.kernel_mean(family, kernel, t, abs_tol=1e-12), theta
    )
    info = fisher_info(family, theta)
    v1 = hoeffding.projection_variance(family, kernel, theta, 1, method=method)
    if v1 <= 0.0 or not math.isfinite(v1):
        raise ValueError(f"degenerate first projection variance v1={v1}")
    return (gprime * gprime / info) / (kernel.m ** 2 * v1)


# ---------------------------------------------------------------------------
# Built-in families


def _normal_mean() -> Family:
    c = 1.0 / math.sqrt(_TWO_PI)
    return Family(
        name="normal-mean",
        theta_domain=(-math.inf, math.inf),
        support=Support("line"),
        pdf=lambda x, t: c * math.exp(-0.5 * (x - t) ** 2),
        score=lambda x, t: x - t,
        sample=lambda t, size, rng: t + rng.standard_normal(size),
        fisher_closed=lambda t: 1.0,
        cdf=lambda x, t: float(ndtr(x - t)),
        median=lambda t: t,
    )


def _normal_var() -> Family:
    # theta is the variance of a centered normal.
    return Family(
        name="normal-var",
        theta_domain=(0.0, math.inf),
        support=Support("line"),
        pdf=lambda x, t: math.exp(-0.5 * x * x / t) / math.sqrt(_TWO_PI * t),
        score=lambda x, t: x * x / (2.0 * t * t) - 0.5 / t,
        sample=lambda t, size, rng: math.sqrt(t) * rng.standard_normal(size),
        fisher_closed=lambda t: 0.5 / (t * t),
        cdf=lambda x, t: float(ndtr(x / math.sqrt(t))),
        median=lambda t: 0.0,
    )


def _poisson_pmf(k: float, t: float) -> float:
    k = int(k)
    if k < 0:
        return 0.0
    return math.exp(k * math.log(t) - t - math.lgamma(k + 1))


def _poisson_cdf_table(t: float) -> np.ndarray:
    probs = [math.exp(-t)]
    mass = probs[0]
    k = 0
    while probs[-1] > 1e-18 or mass < 1.0 - 1e-15:
        probs.append(probs[-1] * t / (k + 1))
        mass += probs[-1]
        k += 1
        if k > 10_000_000:  # unreachable for sane theta
            raise SummationError("poisson cdf table did not close")
    return np.cumsum(probs)


def _poisson_sample(t: float, size: int, rng: np.random.Generator) -> np.ndarray:
    # Inversion by search: exact, deterministic, no unbounded rejection loops.
    cdf = _poisson_cdf_table(t)
    u = rng.random(size)
    return np.minimum(np.searchsorted(cdf, u, side="left"), len(cdf) - 1).astype(float)


def _poisson_median(t: float) -> float:
    cdf = _poisson_cdf_table(t)
    return float(np.searchsorted(cdf, 0.5, side="left"))


def _poisson() -> Family:
    return Family(
        name="poisson",
        theta_domain=(0.0, math.inf),
        support=Support("lattice"),
        pdf=_poisson_pmf,
        score=lambda k, t: k / t - 1.0,
        sample=_poisson_sample,
        fisher_closed=lambda t: 1.0 / t,
        median=_poisson_median,
    )


def _bernoulli() -> Family:
    return Family(
        name="bernoulli",
        theta_domain=(0.0, 1.0),
        support=Support("finite", atoms=(0, 1)),
        pdf=lambda x, t: t if x == 1 else (1.0 - t),
        score=lambda x, t: (x - t) / (t * (1.0 - t)),
        sample=lambda t, size, rng: (rng.random(size) > 1.0 - t).astype(float),
        fisher_closed=lambda t: 1.0 / (t * (1.0 - t)),
        median=lambda t: 0.0 if t < 0.5 else (1.0 if t > 0.5 else 0.5),
    )


def _exp_rate() -> Family:
    return Family(
        name="exp-rate",
        theta_domain=(0.0, math.inf),
        support=Support("half-line"),
        pdf=lambda x, t: t * math.exp(-t * x) if x >= 0 else 0.0,
        score=lambda x, t: 1.0 / t - x,
        sample=lambda t, size, rng: -np.log1p(-rng.random(size)) / t,
        fisher_closed=lambda t: 1.0 / (t * t),
        cdf=lambda x, t: 1.0 - math.exp(-t * x) if x >= 0 else 0.0,
        median=lambda t: math.log(2.0) / t,
    )


def _cauchy() -> Family:
    return Family(
        name="cauchy",
        theta_domain=(-math.inf, math.inf),
        support=Support("line"),
        pdf=lambda x, t: 1.0 / (math.pi * (1.0 + (x - t) ** 2)),
        score=lambda x, t: 2.0 * (x - t) / (1.0 + (x - t) ** 2),
        sample=lambda t, size, rng: t + np.tan(math.pi * (rng.random(size) - 0.5)),
        fisher_closed=lambda t: 0.5,
        cdf=lambda x, t: 0.5 + math.atan(x - t) / math.pi,
        median=lambda t: t,
    )


def _laplace_sample(t: float, size: int, rng: np.random.Generator) -> np.ndarray:
    u = rng.random(size)
    return np.where(u < 0.5, t + np.log(2.0 * u), t - np.log(2.0 * (1.0 - u)))


def _laplace() -> Family:
    return Family(
        name="laplace",
        theta_domain=(-math.inf, math.inf),
        support=Support("line"),
        pdf=lambda x, t: 0.5 * math.exp(-abs(x - t)),
        score=lambda x, t: math.copysign(1.0, x - t) if x != t else 0.0,
        sample=_laplace_sample,
        fisher_closed=lambda t: 1.0,
        cdf=lambda x, t: 0.5 * math.exp(x - t) if x < t else 1.0 - 0.5 * math.exp(t - x),
        breakpoints=lambda t: (t,),
        median=lambda t: t,
    )


_FAMILIES: dict[str, Family] = {
    f.name: f
    for f in (_normal_mean(), _normal_var(), _poisson(), _bernoulli(),
              _exp_rate(), _cauchy(), _laplace())
}


def get_family(name: str) -> Family:
    """Look up a built-in family by registry name."""
    try:
        return _FAMILIES[name]
    except KeyError:
        raise ValueError(
            f"unknown family '{name}'; available: {', '.join(sorted(_FAMILIES))}"
        ) from None


def family_names() -> tuple[str, ...]:
    return tuple(sorted(_FAMILIES))


# ---------------------------------------------------------------------------
# Exponential families from their canonical pieces


@dataclass(frozen=True)
class ExponentialFamilySpec:
    """Canonical pieces of exp{natural_param(theta) * stat(x)
    + log_norm_const(theta) + log_carrier(x)}.

    Derivatives of the theta-functions may be supplied; otherwise central
    differences are used.
    """

    name: str
    theta_domain: tuple[float, float]
    support: Support
    natural_param: Callable[[float], float]
    log_norm_const: Callable[[float], float]
    log_carrier: Callable[[float], float]
    sufficient_stat: Callable[[float], float]
    natural_param_deriv: Optional[Callable[[float], float]] = None
    log_norm_const_deriv: Optional[Callable[[float], float]] = None


def _grid_inverse_cdf(pdf: Callable[[float], float], lo: float, hi_hint: float,
                      two_sided: bool) -> tuple[np.ndarray, np.ndarray, float]:
    """Tabulate an inverse CDF on a grid wide enough to hold all but ~1e-13
    of the mass (tails located by direct tail integration).

    Returns (grid, normalized cdf, total mass on the grid).
    """
    hi = hi_hint
    while integrate(pdf, hi, math.inf, abs_tol=1e-9) > 1e-13:
        hi *= 2.0
        if hi > 1e12:
            raise QuadratureError("could not locate the upper tail of the density")
    if two_sided:
        lo = -hi_hint
        while integrate(pdf, -math.inf, lo, abs_tol=1e-9) > 1e-13:
            lo *= 2.0
            if lo < -1e12:
                raise QuadratureError("could not locate the lower tail of the density")
    xs = np.linspace(lo, hi, 4097)
    dens = np.array([pdf(x) for x in xs])
    cdf = np.concatenate(([0.0], np.cumsum((dens[1:] + dens[:-1]) * 0.5 * np.diff(xs))))
    mass = float(cdf[-1])
    if mass <= 0:
        raise QuadratureError("density mass vanished on the sampling grid")
    return xs, cdf / mass, mass


def _alias_table(probs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Walker alias construction over normalized probabilities."""
    n = len(probs)
    scaled = probs * n / probs.sum()
    accept = np.ones(n)
    alias = np.arange(n)
    small = [i for i, s in enumerate(scaled) if s < 1.0]
    large = [i for i, s in enumerate(scaled) if s >= 1.0]
    scaled = scaled.copy()
    while small and large:
        s = small.pop()
        l = large.pop()
        accept[s] = scaled[s]
        alias[s] = l
        scaled[l] -= 1.0 - scaled[s]
        (small if scaled[l] < 1.0 else large).append(l)
    return accept, alias


def build_exponential_family(spec: ExponentialFamilySpec) -> Family:
    """Assemble a Family from canonical exponential-family pieces.

    The score is natural_param'(theta) * stat(x) + log_norm_const'(theta).
    Continuous supports sample by inverse CDF on a precomputed grid; lattice
    and finite supports by the alias method.  Normalization is the caller's
    contract and is verified to 1e-6 lazily on first sampling (and by the
    test suite over the theta grid).
    """
    np_fn, lnc_fn = spec.natural_param, spec.log_norm_const
    carrier, stat = spec.log_carrier, spec.sufficient_stat

    def pdf(x: float, theta: float) -> float:
        return math.exp(np_fn(theta) * stat(x) + lnc_fn(theta) + carrier(x))

    deriv_cache: dict[float, tuple[float, float]] = {}

    def _derivs(theta: float) -> tuple[float, float]:
        if theta not in deriv_cache:
            da = (spec.natural_param_deriv(theta) if spec.natural_param_deriv
                  else central_derivative(np_fn, theta))
            db = (spec.log_norm_const_deriv(theta) if spec.log_norm_const_deriv
                  else central_derivative(lnc_fn, theta))
            deriv_cache[theta] = (da, db)
        return deriv_cache[theta]

    def score(x: float, theta: float) -> float:
        da, db = _derivs(theta)
        return da * stat(x) + db

    sampler_cache: dict[float, tuple[np.ndarray, ...]] = {}

    if spec.support.continuous:
        lo0, _ = spec.support.range()
        two_sided = spec.support.kind == "line"

        def sample(theta: float, size: int, rng: np.random.Generator) -> np.ndarray:
            if theta not in sampler_cache:
                xs, cdf, mass = _grid_inverse_cdf(lambda x: pdf(x, theta),
                                                  max(lo0, 0.0), 1.0, two_sided)
                # Coarse guard only: the trapezoid grid is a sampling device;
                # the 1e-6 normalization contract is checked by quadrature.
                _check_mass(spec.name, theta, mass, tol=1e-3)
                sampler_cache[theta] = (xs, cdf)
            xs, cdf = sampler_cache[theta]
            return np.interp(rng.random(size), cdf, xs)

    else:
        def _atoms(theta: float) -> np.ndarray:
            if spec.support.kind == "finite":
                return np.asarray(spec.support.atoms, dtype=float)
            vals = []
            mass = 0.0
            k = 0
            peak = 0.0
            while True:
                p = pdf(k, theta)
                peak = max(peak, p)
                vals.append(k)
                mass += p
                if mass >= 1.0 - 1e-15 and p < peak * 1e-14:
                    break
                k += 1
                if k > 1_000_000:
                    raise SummationError("lattice support truncation did not close")
            return np.asarray(vals, dtype=float)

        def sample(theta: float, size: int, rng: np.random.Generator) -> np.ndarray:
            if theta not in sampler_cache:
                atoms = _atoms(theta)
                probs = np.array([pdf(v, theta) for v in atoms])
                _check_mass(spec.name, theta, float(probs.sum()))
                accept, alias = _alias_table(probs)
                sampler_cache[theta] = (atoms, accept, alias)
            atoms, accept, alias = sampler_cache[theta]
            n = len(atoms)
            i = np.minimum((rng.random(size) * n).astype(int), n - 1)
            keep = rng.random(size) < accept[i]
            return atoms[np.where(keep, i, alias[i])]

    return Family(
        name=spec.name,
        theta_domain=spec.theta_domain,
        support=spec.support,
        pdf=pdf,
        score=score,
        sample=sample,
        expfam=spec,
    )


def _check_mass(name: str, theta: float, mass: float, tol: float = 1e-6) -> None:
    if abs(mass - 1.0) > tol:
        raise ValueError(
            f"exponential family '{name}' is not normalized at theta={theta}: mass={mass:.9g}"
        )


def canonical_exponential_spec(name: str) -> ExponentialFamilySpec:
    """Canonical pieces for the five exponential built-ins, keyed by the
    registry names used in get_family."""
    if name == "normal-mean":
        return ExponentialFamilySpec(
            name="normal-mean", theta_domain=(-math.inf, math.inf), support=Support("line"),
            natural_param=lambda t: t,
            log_norm_const=lambda t: -0.5 * t * t - 0.5 * math.log(_TWO_PI),
            log_carrier=lambda x: -0.5 * x * x,
            sufficient_stat=lambda x: x,
            natural_param_deriv=lambda t: 1.0,
            log_norm_const_deriv=lambda t: -t,
        )
    if name == "normal-var":
        return ExponentialFamilySpec(
            name="normal-var", theta_domain=(0.0, math.inf), support=Support("line"),
            natural_param=lambda t: -0.5 / t,
            log_norm_const=lambda t: -0.5 * math.log(_TWO_PI * t),
            log_carrier=lambda x: 0.0,
            sufficient_stat=lambda x: x * x,
            natural_param_deriv=lambda t: 0.5 / (t * t),
            log_norm_const_deriv=lambda t: -0.5 / t,
        )
    if name == "poisson":
        return ExponentialFamilySpec(
            name="poisson", theta_domain=(0.0, math.inf), support=Support("lattice"),
            natural_param=math.log,
            log_norm_const=lambda t: -t,
            log_carrier=lambda x: -math.lgamma(x + 1),
            sufficient_stat=lambda x: x,
            natural_param_deriv=lambda t: 1.0 / t,
            log_norm_const_deriv=lambda t: -1.0,
        )
    if name == "bernoulli":
        return ExponentialFamilySpec(
            name="bernoulli", theta_domain=(0.0, 1.0), support=Support("finite", atoms=(0, 1)),
            natural_param=lambda t: math.log(t / (1.0 - t)),
            log_norm_const=lambda t: math.log(1.0 - t),
            log_carrier=lambda x: 0.0,
            sufficient_stat=lambda x: x,
            natural_param_deriv=lambda t: 1.0 / (t * (1.0 - t)),
            log_norm_const_deriv=lambda t: -1.0 / (1.0 - t),
        )
    if name == "exp-rate":
        return ExponentialFamilySpec(
            name="exp-rate", theta_domain=(0.0, math.inf), support=Support("half-line"),
            natural_param=lambda t: -t,
            log_norm_const=math.log,
            log_carrier=lambda x: 0.0,
            sufficient_stat=lambda x: x,
            natural_param_deriv=lambda t: -1.0,
            log_norm_const_deriv=lambda t: 1.0 / t,
        )
    raise ValueError(f"no canonical exponential spec for '{name}'")


# ---------------------------------------------------------------------------
# Maximum likelihood for exponential families


def _interior_point(lo: float, hi: float) -> float:
    if math.isfinite(lo) and math.isfinite(hi):
        return 0.5 * (lo + hi)
    if math.isfinite(lo):
        return lo + 1.0
    if math.isfinite(hi):
        return hi - 1.0
    return 0.0


def _expand_toward(value: float, limit: float, up: bool) -> float:
    if up:
        if math.isinf(limit):
            return value * 2.0 if value > 1.0 else value + max(1.0, -2.0 * value)
        nxt = 0.5 * (value + limit)
    elif math.isinf(limit):
        return value * 2.0 if value < -1.0 else value - max(1.0, 2.0 * value)
    else:
        nxt = 0.5 * (value + limit)
    # Stay strictly inside the open domain; stop once rounding would land on it.
    return nxt if (nxt < limit if up else nxt > limit) else value


def mle_solve(spec_or_family, sample: Sequence[float], *, tol: float = 1e-10) -> float:
    """Solve gamma(theta) = mean of stat(x_i) for theta by monotone
    bracketing bisection, where gamma is the mean of the sufficient
    statistic.

    Raises BoundaryError naming the violated side when the target moment sits
    outside the range of gamma over the parameter domain.
    """
    family = (build_exponential_family(spec_or_family)
              if isinstance(spec_or_family, ExponentialFamilySpec) else spec_or_family)
    if family.expfam is None:
        raise ValueError("mle_solve needs an exponential family (built from a spec)")
    stat = family.expfam.sufficient_stat
    values = list(sample)
    if not values:
        raise ValueError("empty sample")
    target = math.fsum(stat(x) for x in values) / len(values)

    def g(theta: float) -> float:
        return mean_map(family, stat, theta) - target

    lo, hi = family.theta_domain
    a = b = _interior_point(lo, hi)
    ga = gb = g(a)

    def try_eval(theta: float):
        # Extreme parameters can defeat the quadrature (mass pushed out to
        # infinity); treat that as the range being exhausted on that side.
        try:
            return g(theta)
        except (QuadratureError, SummationError):
            return None

    for _ in range(200):
        # Targets on the closure of the mean range (e.g. an all-ones
        # Bernoulli sample) are solved by parameters pushed against the
        # domain boundary; accept as soon as the tolerance is met.
        if abs(ga) <= tol:
            return a
        if abs(gb) <= tol:
            return b
        if ga * gb < 0.0:
            break
        na = _expand_toward(a, lo, up=False)
        nb = _expand_toward(b, hi, up=True)
        moved = False
        if na != a and (gna := try_eval(na)) is not None:
            a, ga, moved = na, gna, True
        if nb != b and (gnb := try_eval(nb)) is not None:
            b, gb, moved = nb, gnb, moved or True
        if not moved:
            break
    if ga * gb > 0.0:
        # Name the side of the parameter domain the solver was pushed against.
        increasing = gb > ga if b > a else ga < 0
        side = "upper" if (gb < 0 if increasing else ga < 0) else "lower"
        raise BoundaryError(
            f"target moment {target:.12g} is outside the attainable mean range; "
            f"bracketing was pushed against the {side} boundary of the parameter domain"
        )

    for _ in range(300):
        mid = 0.5 * (a + b)
        gm = g(mid)
        if abs(gm) <= tol:
            return mid
        if (gm < 0.0) == (ga < 0.0):
            a, ga = mid, gm
        else:
            b, gb = mid, gm
        if abs(b - a) < 1e-15 * (1.0 + abs(mid)):
            break
    mid = 0.5 * (a + b)
    if abs(g(mid)) <= tol:
        return mid
    raise RuntimeError(f"bisection stalled: |gamma(theta)-target| = {abs(g(mid)):.3g} > {tol}")
