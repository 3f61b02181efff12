import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jackstat.kernels import get_kernel
from jackstat.lstat_median import (
    LWeights,
    chain_weights,
    conjecture16_check,
    eval_lstat,
    extend_weights,
    lweights,
    median_subset_weights,
    median_weights,
)
from jackstat.ustat_engine import Estimator, jackknife_extend, u_statistic

F = Fraction


def fr(*nums):
    return tuple(Fraction(x) for x in nums)


def test_median_weights_examples():
    assert median_weights(3).w == fr(0, 1, 0)
    assert median_weights(4).w == fr(0, F(1, 2), F(1, 2), 0)
    assert median_weights(1).w == fr(1)


def test_lweights_validation():
    with pytest.raises(ValueError, match="sum to 1"):
        LWeights(2, (F(1, 2), F(1, 4)))
    with pytest.raises(ValueError, match="exactly n"):
        LWeights(3, (F(1), F(0)))


def test_extend_examples():
    assert extend_weights(lweights([F(1, 2), F(1, 2)])).w == fr(F(1, 3), F(1, 3), F(1, 3))
    assert extend_weights(median_weights(4)).w == fr(0, F(3, 10), F(2, 5), F(3, 10), 0)
    assert extend_weights(median_weights(6)).w == fr(0, 0, F(2, 7), F(3, 7), F(2, 7), 0, 0)


def test_chain_examples():
    assert chain_weights(lweights([1]), 5).w == fr(*([F(1, 5)] * 5))
    assert chain_weights(median_weights(3), 4).w == fr(0, F(1, 2), F(1, 2), 0)
    # golden value fixed by the leave-one-out enumeration oracle
    assert chain_weights(median_weights(4), 6).w == fr(0, F(1, 5), F(3, 10), F(3, 10), F(1, 5), 0)
    with pytest.raises(ValueError):
        chain_weights(median_weights(4), 3)


def test_conjecture16_small():
    r2 = conjecture16_check(2)
    assert r2.matches and r2.weights.w == fr(0, F(3, 10), F(2, 5), F(3, 10), 0)
    assert conjecture16_check(3).matches
    assert conjecture16_check(1).matches


def _perturbation_weight_recovery(lw: LWeights) -> tuple:
    """Recover extension weights from numeric leave-one-out averaging.

    An L-statistic is linear in the order statistics, so on a strictly
    increasing integer sample the weight on position p is exactly the
    finite difference of the extension under a small order-preserving bump
    of that point (the linear solve against canonical perturbations)."""
    n = lw.n
    est = Estimator(n, lambda *xs: eval_lstat(lw, xs))
    base = np.arange(1.0, n + 2.0)
    delta = 0.25
    y0 = jackknife_extend(est, tuple(base))
    out = []
    for p in range(n + 1):
        bumped = base.copy()
        bumped[p] += delta
        out.append((jackknife_extend(est, tuple(bumped)) - y0) / delta)
    return tuple(out)


def test_conjecture16_m50_against_enumeration_oracle():
    got = conjecture16_check(50)
    assert got.matches
    recovered = _perturbation_weight_recovery(median_weights(100))
    for w_exact, w_num in zip(got.weights.w, recovered):
        assert abs(float(w_exact) - w_num) < 1e-10


def _linear_solve_recovery(lw: LWeights, seeds) -> tuple:
    """Spec-style recovery: evaluate the extension on n+1 random strictly
    increasing samples, solve the linear system, reconstruct rationals, and
    demand agreement across independent sample sets."""
    n1 = lw.n + 1
    est = Estimator(lw.n, lambda *xs: eval_lstat(lw, xs))
    recon = []
    for seed in seeds:
        rng = np.random.default_rng(seed)
        mat = np.empty((n1, n1))
        rhs = np.empty(n1)
        for i in range(n1):
            xs = np.sort(rng.random(n1) * 10.0)
            mat[i] = xs
            rhs[i] = jackknife_extend(est, tuple(xs))
        solved = np.linalg.solve(mat, rhs)
        recon.append(tuple(Fraction(x).limit_denominator(10**6) for x in solved))
    assert all(r == recon[0] for r in recon)
    return recon[0]


@pytest.mark.parametrize("start", [
    median_weights(2), median_weights(3), median_weights(4), median_weights(5),
    median_weights(6), median_weights(7), median_weights(8),
    lweights([F(1, 6), F(1, 3), F(1, 2)]),            # asymmetric
    lweights([0, F(1, 3), F(1, 3), F(1, 3), 0]),       # trimmed mean
])
def test_recurrence_matches_brute_force(start):
    recovered = _linear_solve_recovery(start, seeds=(11, 22, 33))
    assert recovered == extend_weights(start).w


def test_eq15_generalization_spot():
    for m in (1, 2, 3, 10, 40):
        w = extend_weights(median_weights(2 * m + 1)).w
        expect = [F(0)] * (2 * m + 2)
        expect[m] = F(1, 2)
        expect[m + 1] = F(1, 2)
        assert w == tuple(expect)


def test_eq15_interior_insertion_finding():
    # The half/half conclusion holds wherever the new point lands, not only
    # outside the old range: the extension of the odd median is always the
    # even median of the enlarged sample.
    est = Estimator(5, lambda *xs: sorted(xs)[2])
    base = [1.0, 2.0, 3.0, 4.0, 5.0]
    for newcomer in (-10.0, 2.5, 3.0 + 1e-9, 10.0):
        xs = tuple(base + [newcomer])
        s = sorted(xs)
        assert jackknife_extend(est, xs) == pytest.approx((s[2] + s[3]) / 2, rel=1e-15)


def test_eval_lstat_examples():
    assert eval_lstat(median_weights(4), (4, 1, 3, 2)) == pytest.approx(2.5)
    assert eval_lstat(extend_weights(median_weights(4)), (1.0, 2.0, 3.0, 4.0, 5.0)) == pytest.approx(3.0)
    assert eval_lstat(lweights([F(1, 3)] * 3), (9.0, 0.0, 3.0)) == pytest.approx(4.0)
    exact = eval_lstat(median_weights(4), (F(4), F(1), F(3), F(2)))
    assert isinstance(exact, Fraction) and exact == F(5, 2)
    with pytest.raises(ValueError, match="length"):
        eval_lstat(median_weights(4), (1.0, 2.0))


@st.composite
def rational_weights(draw):
    n = draw(st.integers(min_value=1, max_value=7))
    nums = draw(st.lists(st.integers(0, 9), min_size=n, max_size=n))
    total = sum(nums)
    if total == 0:
        nums[0] = 1
        total = 1
    return lweights([F(v, total) for v in nums])


@given(rational_weights())
@settings(deadline=None, max_examples=80)
def test_extend_preserves_mass_and_symmetry(lw):
    out = extend_weights(lw)
    assert sum(out.w) == 1
    if lw.is_centrally_symmetric():
        assert out.is_centrally_symmetric()


def test_median_subset_weights_match_u_statistic():
    rng = np.random.default_rng(4)
    for n, m in [(5, 3), (8, 3), (9, 5), (7, 7)]:
        lw = median_subset_weights(n, m)
        assert sum(lw.w) == 1
        xs = tuple(rng.normal(size=n) * 3)
        kernel = get_kernel(f"median{m}") if m in (3, 5) else None
        if kernel is None:
            from jackstat.kernels import make_median_kernel
            kernel = make_median_kernel(m)
        assert eval_lstat(lw, xs) == pytest.approx(float(u_statistic(kernel, xs)), rel=1e-12)


def test_median_subset_weights_guards():
    with pytest.raises(ValueError, match="odd"):
        median_subset_weights(6, 4)
    with pytest.raises(ValueError, match="n >= m"):
        median_subset_weights(2, 3)
