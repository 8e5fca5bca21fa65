import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lostsales import distributions as dist
from lostsales import policies, queueing

SQRT3 = math.sqrt(3.0)


def test_cost_params_validation():
    for args in [(0, 1, 1), (1, -1, 1), (1, 1, 0), (1, 1, 2.5)]:
        with pytest.raises(ValueError):
            policies.CostParams(*args)


def test_cost_inf_examples(exp1):
    assert policies.cost_inf(exp1, 1, 1, 0.0) == 1.0
    assert policies.cost_inf(dist.Demand.exponential(0.5), 1, 3, 0.0) == 6.0
    assert policies.cost_inf(exp1, 1, 1, 1 - 1 / SQRT3) == pytest.approx(SQRT3 - 1, abs=1e-14)
    assert policies.cost_inf(exp1, 1, 1, 0.5) == pytest.approx(0.75, abs=1e-15)
    with pytest.raises(ValueError):
        policies.cost_inf(exp1, 1, 1, 1.0)


def test_cost_finite_examples(exp1, two_point):
    assert policies.cost_finite(exp1, 1, 2, 5, 0.0) == 2.0
    assert policies.cost_finite(two_point, 1, 1, 2, 1.0) == pytest.approx(0.75, abs=1e-15)
    # defined at r = E[D]
    assert math.isfinite(policies.cost_finite(two_point, 1, 1, 30, 1.0))
    with pytest.raises(ValueError):
        policies.cost_finite(two_point, 1, 1, 2, 1.2)


@given(st.floats(0.1, 5), st.floats(0.1, 20), st.integers(1, 40), st.floats(0, 1))
@settings(max_examples=60, deadline=None)
def test_cost_finite_monotone_in_L(h, p, L, x):
    d = dist.Demand.discrete([(0, 0.3), (1, 0.3), (2.5, 0.4)])
    r = x * d.mean
    assert policies.cost_finite(d, h, p, L + 1, r) >= policies.cost_finite(d, h, p, L, r)


def test_cost_finite_tends_to_cost_inf(three_point):
    for r in (0.5, 1.2):
        ss = queueing.steady_state_wait(three_point, r)
        L = ss.terms_or_reps
        assert policies.cost_finite(three_point, 1, 2, L, r) == pytest.approx(
            policies.cost_inf(three_point, 1, 2, r), abs=1e-9)


def test_best_constant_order_exponential(exp1):
    best = policies.best_constant_order(exp1, 1, 1)
    assert best.r == pytest.approx(1 - 1 / SQRT3, abs=1e-15)
    assert best.cost == pytest.approx(SQRT3 - 1, abs=1e-15)
    assert best.method == "closed-form"
    half = policies.best_constant_order(dist.Demand.exponential(2.0), 1, 1)
    assert half.r == pytest.approx(best.r / 2) and half.cost == pytest.approx(best.cost / 2)


@pytest.mark.parametrize("lam", [1.0, 2.0])
@pytest.mark.parametrize("h,p", [(1, 1), (1, 4), (2, 0.5), (1, 39)])
def test_numeric_optimizer_matches_closed_form(lam, h, p):
    d = dist.Demand.exponential(lam)
    closed = policies.best_constant_order(d, h, p)
    numeric = policies.best_constant_order(d, h, p, closed_form=False)
    assert numeric.method == "golden-section"
    assert numeric.r == pytest.approx(closed.r, abs=1e-6)
    assert numeric.cost == pytest.approx(closed.cost, abs=1e-9)
    assert numeric.bracket_width <= 1e-9


def test_mass_at_zero_makes_zero_optimal():
    h, p = 1.0, 1.0
    q0 = p / (p + h) + 0.01
    d = dist.Demand.discrete([(0, q0), (3, 1 - q0)])
    best = policies.best_constant_order(d, h, p)
    assert best.r == 0.0
    assert best.cost == pytest.approx(p * d.mean, abs=1e-15)


def test_r_L_zero_needs_enough_mass_over_the_horizon():
    # slope of C_L at 0 is h * sum_{n<=L} q0^n - p
    d = dist.Demand.discrete([(0, 0.9), (4, 0.1)])
    assert policies.best_constant_order_finite(d, 1, 1, 1).r > 0
    for L in (2, 5, 10):
        best = policies.best_constant_order_finite(d, 1, 1, L)
        assert best.r == 0.0
        r_grid, _ = policies.grid_scan(lambda r: policies.cost_finite(d, 1, 1, L, r), 0, d.mean, 2001)
        assert r_grid == 0.0


def test_r_L_converges_to_r_inf(exp1):
    r_inf = policies.best_constant_order(exp1, 1, 1).r
    assert abs(policies.best_constant_order_finite(exp1, 1, 1, 200).r - r_inf) <= 1e-3


@pytest.mark.parametrize("name", ["exp1", "two_point", "three_point"])
@pytest.mark.parametrize("p", [0.25, 1.0, 4.0])
def test_r_inf_below_r_L(name, p, request):
    d = request.getfixturevalue(name)
    r_inf = policies.best_constant_order(d, 1.0, p).r
    for L in (1, 4, 10, 20):
        assert r_inf <= policies.best_constant_order_finite(d, 1.0, p, L).r + 1e-6


def test_ties_resolve_to_smallest_minimizer(two_point):
    # at p/h = 1 the right slope of C at 0 is exactly zero for {0, 2}
    best = policies.best_constant_order(two_point, 1, 1)
    assert best.r == 0.0 and best.cost == pytest.approx(1.0)


def test_opt_lower_bound_examples(exp1):
    lb = policies.opt_lower_bound(exp1, 1, 1, 10)
    assert math.log(2) <= lb.value <= SQRT3 - 1
    assert lb.value >= 0.63
    tiny = policies.opt_lower_bound(exp1, 1, 0.01, 1)
    assert tiny.g == pytest.approx(math.log(1.01), abs=1e-15)
    assert tiny.value == pytest.approx(math.log(1.01), rel=1e-3)


@pytest.mark.parametrize("spec", [
    [(0, 0.5), (2, 0.5)], [(0, 0.2), (1, 0.3), (3, 0.5)], [(1, 0.6), (4, 0.4)], [(0.5, 0.3), (2, 0.7)],
])
def test_one_period_optimizer_against_grid(spec):
    d = dist.Demand.discrete(spec)
    best = policies.best_constant_order_finite(d, 1, 2, 1)
    r_grid, c_grid = policies.grid_scan(lambda r: policies.cost_finite(d, 1, 2, 1, r), 0, d.mean, 10_001)
    assert abs(best.r - r_grid) <= d.mean / 10_000 + 1e-12
    assert best.cost <= c_grid + 1e-12


@pytest.mark.parametrize("name", ["exp1", "two_point", "three_point"])
def test_cost_convexity(name, request):
    d = request.getfixturevalue(name)
    rng = np.random.default_rng(3)
    for _ in range(100):
        a, b = np.sort(rng.uniform(0, 0.95 * d.mean, 2))
        m = 0.5 * (a + b)
        assert policies.cost_inf(d, 1, 4, m) <= 0.5 * (
            policies.cost_inf(d, 1, 4, a) + policies.cost_inf(d, 1, 4, b)) + 2e-9
        assert policies.cost_finite(d, 1, 4, 10, m) <= 0.5 * (
            policies.cost_finite(d, 1, 4, 10, a) + policies.cost_finite(d, 1, 4, 10, b)) + 1e-12


@pytest.mark.parametrize("name", ["exp1", "two_point", "three_point"])
def test_sandwich(name, request):
    d = request.getfixturevalue(name)
    for p in (0.5, 2.0):
        hi = policies.best_constant_order(d, 1, p).cost
        for L in (1, 5, 20):
            lb = policies.opt_lower_bound(d, 1, p, L)
            assert lb.g <= lb.value <= hi + 1e-9


def test_zero_policy_cost_is_p_times_mean(three_point):
    assert policies.cost_inf(three_point, 2.0, 3.0, 0.0) == pytest.approx(3.0 * three_point.mean)


def test_optimal_level_json(exp1):
    assert set(policies.best_constant_order(exp1, 1, 1).to_json()) == {"r", "cost", "bracket_width", "method"}
