import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jackstat import exact_oracle
from jackstat.kernels import Kernel, get_kernel, make_h_kernel
from jackstat.ustat_engine import (
    Estimator,
    NotReadyError,
    Sample,
    UStatAccumulator,
    accumulator_push,
    extend_chain,
    incomplete_u_statistic,
    jackknife_extend,
    u_stat_estimator,
    u_statistic,
)

MEAN = get_kernel("mean")
VAR = get_kernel("variance")
MED3 = get_kernel("median3")


def test_sample_type():
    s = Sample((1.0, 2.0, 3.0))
    assert len(s) == 3 and list(s) == [1.0, 2.0, 3.0] and s[1] == 2.0


def test_u_statistic_examples():
    assert u_statistic(MEAN, (1.0, 2.0, 3.0)) == 2.0
    # pairs {0,1},{0,2},{1,2} -> (0.5 + 2 + 0.5)/3
    assert u_statistic(VAR, (0.0, 1.0, 2.0)) == pytest.approx(1.0)
    # 4 triples with medians 2,2,3,3
    assert u_statistic(MED3, (1.0, 2.0, 3.0, 4.0)) == pytest.approx(2.5)


def test_u_statistic_exact_on_rationals():
    out = u_statistic(VAR, (Fraction(0), Fraction(1), Fraction(2)))
    assert isinstance(out, Fraction) and out == 1


def test_u_statistic_guards():
    with pytest.raises(ValueError, match="too short"):
        u_statistic(MED3, (1.0,))
    big = tuple(float(i) for i in range(120))
    with pytest.raises(ValueError, match="incomplete_u_statistic"):
        u_statistic(get_kernel("median5"), big)


def test_jackknife_extend_examples():
    mean2 = Estimator(2, lambda a, b: (a + b) / 2, label="mean2")
    assert jackknife_extend(mean2, (0.0, 0.0, 3.0)) == pytest.approx(1.0)

    med3 = Estimator(3, MED3.fn, label="median3")
    assert jackknife_extend(med3, (1.0, 2.0, 3.0, 10.0)) == pytest.approx(2.5)

    def even_median4(*xs):
        s = sorted(xs)
        return (s[1] + s[2]) / 2

    ext = jackknife_extend(Estimator(4, even_median4), (1.0, 2.0, 3.0, 4.0, 5.0))
    assert ext == pytest.approx((1.5 * 2 + 2 * 3 + 1.5 * 4) / 5) == pytest.approx(3.0)


def test_jackknife_extend_length_mismatch():
    with pytest.raises(ValueError, match="length"):
        jackknife_extend(Estimator(3, MED3.fn), (1.0, 2.0, 3.0))


def test_extend_chain_examples():
    rng = np.random.default_rng(0)
    xs = tuple(rng.normal(size=6))
    assert extend_chain(MEAN, xs) == pytest.approx(float(np.mean(xs)), rel=1e-14)

    sample = (0.0, 1.0, 2.0, 4.0)
    want = u_statistic(VAR, sample)
    assert want == pytest.approx(17.5 / 6)
    for mode in ("auto", "literal", "identity"):
        assert extend_chain(VAR, sample, mode=mode) == pytest.approx(want, rel=1e-12)

    xs7 = tuple(np.random.default_rng(42).random(7))
    lit = extend_chain(MED3, xs7, mode="literal")
    ust = float(u_statistic(MED3, xs7))
    assert abs(lit - ust) <= 1e-12 * (1.0 + abs(ust))


def test_extend_chain_base_case_and_guards():
    assert extend_chain(MED3, (3.0, 1.0, 2.0)) == 2.0
    with pytest.raises(ValueError, match="too short"):
        extend_chain(MED3, (1.0, 2.0))
    with pytest.raises(ValueError, match="mode"):
        extend_chain(MED3, (1.0, 2.0, 3.0), mode="???")


def test_chain_identity_small_battery():
    # Spot version of the acceptance sweep, one seed per (m, n).
    for kernel in (MEAN, VAR, MED3):
        for n in range(kernel.m + 1, 9):
            xs = tuple(np.random.default_rng(n * 31 + kernel.m).normal(size=n) * 5)
            lit = extend_chain(kernel, xs, mode="literal")
            ust = float(u_statistic(kernel, xs))
            assert abs(lit - ust) <= 1e-12 * (1.0 + abs(ust))


def test_expectation_preservation_exact():
    # E[extension over n+1 draws] equals E[base over n draws] as rationals.
    dist = exact_oracle.two_point(Fraction(1, 3))
    for kernel, n in [(MED3, 3), (VAR, 3), (get_kernel("product"), 2)]:
        base = exact_oracle.ustat_fn(kernel, n)
        ext = exact_oracle.loo_extension_fn(base, n)
        assert exact_oracle.exact_mean(ext, dist, n + 1) == exact_oracle.exact_mean(base, dist, n)


def test_incomplete_u_statistic_determinism():
    sample = (0.0, 1.0, 2.0, 5.0, 7.0)
    a = incomplete_u_statistic(VAR, sample, 1000, seed=12345)
    b = incomplete_u_statistic(VAR, sample, 1000, seed=12345)
    assert a == b  # bitwise
    c = incomplete_u_statistic(VAR, sample, 1, seed=9)
    d = incomplete_u_statistic(VAR, sample, 1, seed=9)
    assert c == d


def test_incomplete_u_statistic_close_to_exact_for_large_b():
    sample = (0.0, 1.0, 2.0)
    est = incomplete_u_statistic(VAR, sample, 100_000, seed=5)
    # exact value 1.0; single-draw values lie in {0.5, 2.0, 0.5}-ish range
    draws_sd = math.sqrt(sum((v - 1.0) ** 2 for v in (0.5, 2.0, 0.5)) / 3)
    assert abs(est - 1.0) <= 3 * draws_sd / math.sqrt(100_000)


def test_incomplete_u_statistic_unbiased_over_seeds():
    sample = (0.3, 1.2, -0.7, 2.2, 0.1, 0.9)
    exact = float(u_statistic(VAR, sample))
    estimates = np.array([
        incomplete_u_statistic(VAR, sample, 8, seed=s) for s in range(1000)
    ])
    se = estimates.std(ddof=1) / math.sqrt(len(estimates))
    assert abs(estimates.mean() - exact) <= 4 * se


def test_incomplete_guards():
    with pytest.raises(ValueError, match="draws"):
        incomplete_u_statistic(VAR, (0.0, 1.0), 0, seed=1)
    with pytest.raises(ValueError, match="too short"):
        incomplete_u_statistic(MED3, (0.0, 1.0), 5, seed=1)


def test_accumulator_examples():
    acc = UStatAccumulator(VAR)
    acc.push(0.0).push(1.0)
    assert acc.value() == pytest.approx(0.5)
    acc.push(2.0)
    assert acc.value() == pytest.approx(float(u_statistic(VAR, (0.0, 1.0, 2.0))), rel=1e-12)

    acc = UStatAccumulator(MEAN)
    accumulator_push(accumulator_push(acc, 5.0), 7.0)
    assert acc.value() == pytest.approx(6.0)


def test_accumulator_not_ready():
    acc = UStatAccumulator(VAR)
    with pytest.raises(NotReadyError):
        acc.value()
    acc.push(1.0)
    with pytest.raises(NotReadyError):
        acc.value()


def test_accumulator_eval_count():
    calls = 0

    def counting(a, b):
        nonlocal calls
        calls += 1
        return a * b

    acc = UStatAccumulator(Kernel(2, "count", counting))
    for k, x in enumerate((3.0, 1.0, 4.0, 1.0, 5.0)):
        calls = 0
        acc.push(x)
        assert calls == math.comb(k, 1)


@given(st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=2, max_size=12))
@settings(deadline=None, max_examples=60)
def test_accumulator_matches_batch(values):
    acc = UStatAccumulator(VAR)
    for x in values:
        acc.push(x)
    batch = float(u_statistic(VAR, tuple(values)))
    assert abs(acc.value() - batch) <= 1e-12 * (1.0 + abs(batch))


def test_u_stat_estimator_wraps_kernel():
    est = u_stat_estimator(MED3, 3)
    assert est(1.0, 5.0, 2.0) == 2.0
    est5 = u_stat_estimator(MED3, 5)
    xs = (0.0, 1.0, 2.0, 3.0, 4.0)
    assert est5(*xs) == pytest.approx(float(u_statistic(MED3, xs)))
