"""Scale recursion, a-priori bounds, and the volume plateau."""

import math

import pytest

from glacier.estimators import Estimate, PI1_EXACT
from glacier.scales import (ScaleError, check_scale_bounds, check_volume_plateau,
                            compute_scales, trials_for_stderr)


def synthetic_pi(fn):
    return lambda n: Estimate(fn(n), 0.0, 1, 0, f"pi-synth:n={n}", {"n": n})


def test_m1_exact_arithmetic():
    table = compute_scales(10_000, 1, "exact1", 0)
    assert table.scales == [1, 104]
    assert table.pi_used[0].value == PI1_EXACT
    # ceil(sqrt(N * 16/15)) at N = 10^6
    assert compute_scales(10 ** 6, 1, "exact1", 0).scales[1] == 1033


@pytest.mark.parametrize("n_val", [10_000, 1_000_000])
def test_m1_asymptotic_constant(n_val):
    m1 = compute_scales(n_val, 1, "exact1", 0).scales[1]
    c0 = math.sqrt(16.0 / 15.0)
    assert abs(m1 / math.sqrt(n_val) - c0) < 2.0 / math.sqrt(n_val) + 1e-9


def test_m0_is_one_and_validation():
    assert compute_scales(100, 1, "exact1", 0).scales[0] == 1
    with pytest.raises(ScaleError):
        compute_scales(1, 1)
    with pytest.raises(ScaleError):
        compute_scales(100, 0)
    with pytest.raises(ScaleError):
        compute_scales(10 ** 9, 1, "exact1", 0, max_box_vertices=10_000)


def test_recursion_monotone_for_any_nonincreasing_pi():
    families = [
        lambda n: 1.0,
        lambda n: min(1.0, 2.0 / (n + 1)),
        lambda n: n ** -0.104,
        lambda n: 0.9375 if n < 10 else 0.4,
        lambda n: max(0.05, 1.0 / math.sqrt(n)),
    ]
    for fn in families:
        for n_val in (10, 100, 10_000):
            table = compute_scales(n_val, 4, synthetic_pi(fn), 0,
                                   max_box_vertices=10 ** 12)
            assert all(a <= b for a, b in zip(table.scales, table.scales[1:]))


def test_interval_propagation():
    src = lambda n: Estimate(0.5, 0.01, 100, 0, "x", {})
    table = compute_scales(10_000, 1, src, 0)
    lo, hi = table.intervals[0]
    assert lo == math.ceil(math.sqrt(10_000 / 0.53))
    assert hi == math.ceil(math.sqrt(10_000 / 0.47))
    assert lo <= table.scales[1] <= hi


def test_reproducible_tables():
    a = compute_scales(2500, 2, "exact1", 99, stderr_target=0.01)
    b = compute_scales(2500, 2, "exact1", 99, stderr_target=0.01)
    assert a.scales == b.scales
    assert [e.value for e in a.pi_used] == [e.value for e in b.pi_used]


def test_scale_bounds_report():
    table = compute_scales(10_000, 2, "exact1", 5, stderr_target=0.01)
    with pytest.raises(ScaleError):
        check_scale_bounds(compute_scales(10_000, 1, "exact1", 5))
    rows = check_scale_bounds(table)
    assert rows[0]["ratio"] == table.scales[1]  # m_1 / m_0
    assert all(r["upper_ok"] for r in rows)
    assert all(r["observed_exponent"] > 0 for r in rows)
    # k = 1 upper bound is N^(1/3)
    assert rows[1]["upper_bound"] == pytest.approx(10_000 ** (1 / 3))


def test_m_k_below_N_to_two_thirds():
    for n_val in (100, 10_000):
        table = compute_scales(n_val, 3, "exact1", 7, stderr_target=0.01)
        assert all(m <= n_val ** (2 / 3) for m in table.scales[1:])


def test_volume_plateau():
    n_val = 10_000
    table = compute_scales(n_val, 2, "exact1", 11, stderr_target=0.005)
    rows = check_volume_plateau(table, stderr_target=0.005)
    assert [r["k"] for r in rows] == [1, 2]
    assert rows[0]["ratio"] < 1.0  # k=1: m_1^2 pi(m_1) < N since pi decreasing
    assert all(r["in_band"] for r in rows)
    assert rows[0]["ratio"] <= rows[1]["ratio"] + 3 * (rows[0]["ratio_stderr"] ** 2
                                                       + rows[1]["ratio_stderr"] ** 2) ** 0.5
    # definitional identity: m_{k+1}^2 pi_hat(m_k) / N in [1, (1+1/m)^2] up to ceiling slack
    m2 = table.scales[2]
    v = m2 * m2 * table.pi_used[1].value / n_val
    assert 1.0 <= v <= (1.0 + 1.0 / m2) ** 2 + 1e-9


def test_trials_for_stderr():
    assert trials_for_stderr(0.002) == 62_500
    assert trials_for_stderr(0.01) == 2_500
