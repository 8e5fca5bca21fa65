"""Property suite behind ``lostsales verify``.

Each check returns a :class:`Check` naming the mathematical statement it
tests (its ``anchor``), whether it held, and the worst violation seen.
"""
from __future__ import annotations

import functools
import itertools
import math
import time
from typing import Callable, NamedTuple

import numpy as np

from . import bounds, policies, queueing, rates, simulator
from . import distributions as dist

P_OVER_H = (0.25, 1.0, 4.0, 9.0, 39.0, 99.0)
LEMMA_L = (1, 4, 10, 20)


class Check(NamedTuple):
    name: str
    anchor: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def to_json(self) -> dict:
        return self._asdict()


@functools.cache
def families() -> dict[str, dist.Demand]:
    """Demand families used across the suite (shared, so their convolution
    caches are reused between checks)."""
    return {
        "exponential(1)": dist.Demand.exponential(1.0),
        "two-point{0,2}": dist.Demand.discrete([(0, 0.5), (2, 0.5)]),
        "three-point{0,1,3}": dist.Demand.discrete([(0, 0.2), (1, 0.3), (3, 0.5)]),
    }


def brute_force_sum_law(d: dist.Demand, n: int) -> tuple[np.ndarray, np.ndarray]:
    """All |support|^n outcomes of S_n with their probabilities."""
    vals, probs = [], []
    for combo in itertools.product(range(len(d.atoms)), repeat=n):
        vals.append(sum(d.atoms[i] for i in combo))
        probs.append(math.prod(d.probs[i] for i in combo))
    return np.array(vals), np.array(probs)


def _result(name, anchor, worst, ok, unit="violation"):
    return name, anchor, bool(ok), f"max {unit} {worst:.3e}"


_CHECKS: list[Callable] = []


def check(fn):
    _CHECKS.append(fn)
    return fn


@check
def laplace_shape(rng):
    worst = 0.0
    for d in families().values():
        th = np.linspace(0, 10, 100)
        v = np.array([dist.laplace(d, t) for t in th])
        worst = max(worst, np.max(np.diff(v)), np.max(-(v[:-2] + v[2:] - 2 * v[1:-1])), abs(v[0] - 1.0))
    return _result("laplace_monotone_convex", "E[exp(-theta D)] is non-increasing and convex, equal to 1 at 0",
                   worst, worst <= 1e-15)


@check
def quantile_monotone(rng):
    worst = 0.0
    for d in families().values():
        q = np.array([dist.quantile(d, x) for x in np.linspace(0.01, 0.99, 99)])
        worst = max(worst, np.max(-np.diff(q)))
    return _result("quantile_monotone", "generalized inverse CDF is non-decreasing", worst, worst <= 0)


@check
def sum_law_brute_force(rng):
    worst = 0.0
    for _ in range(12):
        k = int(rng.integers(2, 5))
        atoms = rng.choice(np.arange(0, 8) * 0.5, size=k, replace=False)
        probs = rng.dirichlet(np.ones(k))
        probs[-1] = 1.0 - probs[:-1].sum()
        d = dist.Demand.discrete(atoms, probs)
        for n in range(1, 7):
            vals, pr = brute_force_sum_law(d, n)
            for x in np.linspace(-0.5, n * 4.0, 23):
                worst = max(worst, abs(dist.partial_sum_cdf(d, n, x) - pr[vals <= x].sum()))
    return _result("partial_sum_cdf_enumeration", "exact n-fold convolution equals enumeration of support^n",
                   worst, worst <= 1e-12)


@check
def positive_part_brute_force(rng):
    worst = 0.0
    for _ in range(10):
        k = int(rng.integers(2, 4))
        atoms = rng.choice(np.arange(0, 6) * 0.5, size=k, replace=False)
        probs = rng.dirichlet(np.ones(k))
        probs[-1] = 1.0 - probs[:-1].sum()
        d = dist.Demand.discrete(atoms, probs)
        for n in range(1, 6):
            vals, pr = brute_force_sum_law(d, n)
            for r in rng.uniform(0, d.mean, 4):
                exact = float(np.dot(pr, np.maximum(n * r - vals, 0.0)))
                worst = max(worst, abs(queueing.positive_part_mean(d, r, n) - exact),
                            abs(rates.ruin_prob(d, r, n) - pr[vals <= n * r].sum()))
    return _result("positive_part_and_ruin_enumeration",
                   "E[(nr - S_n)^+] and P(S_n <= nr) equal enumeration (<= 3 atoms, n <= 5)",
                   worst, worst <= 1e-12)


@check
def newsvendor_minimal(rng):
    worst = 0.0
    for d in families().values():
        for h, p in [(1, 1), (1, 4), (2, 0.5)]:
            g, _ = dist.newsvendor(d, h, p)
            for x in rng.uniform(0, 4 * d.mean, 20):
                worst = max(worst, g - dist.newsvendor_cost(d, h, p, x))
    return _result("newsvendor_minimal", "g <= E[h(x-D)^+ + p(x-D)^-] for every x", worst, worst <= 1e-12)


@check
def spitzer_monotone_and_bounded(rng):
    worst = 0.0
    for d in families().values():
        for r in (0.2 * d.mean, 0.6 * d.mean, 0.9 * d.mean):
            w = [queueing.spitzer_finite(d, r, L).value for L in range(1, 41)]
            ss = queueing.steady_state_wait(d, r)
            worst = max(worst, np.max(-np.diff(w)), w[-1] - ss.value - ss.error_bound)
    return _result("spitzer_monotone_below_steady_state",
                   "E[I_L^r] is non-decreasing in L and below E[I_inf^r]", worst, worst <= 1e-10)


@check
def kingman_gap(rng):
    worst = -math.inf
    d = dist.Demand.exponential(1.0)
    for p in P_OVER_H:
        r = policies.best_constant_order(d, 1.0, p).r
        rate = rates.chernoff_rate(d, r)
        for L in LEMMA_L:
            gap = queueing.steady_state_wait(d, r).value - queueing.spitzer_finite(d, r, L).value
            worst = max(worst, gap - queueing.kingman_gap_bound(rate.gamma, rate.theta_star, L))
    return _result("kingman_gap_bound", "E[I_inf] - E[I_L] <= gamma^(L+1) / ((1-gamma) e theta* (L+1)) at r_inf",
                   worst, worst <= 1e-9, unit="excess")


@check
def exponential_series_vs_closed_form(rng):
    d = dist.Demand.exponential(1.0)
    worst = 0.0
    for r in (0.1, 0.42, 0.7):
        a = queueing.steady_state_wait(d, r, tol=1e-9, closed_form=False)
        worst = max(worst, abs(a.value - queueing.md1_wait(1.0, r)) - 1e-9)
    return _result("series_matches_md1", "Spitzer series equals r^2 lam / (2(1 - r lam)) for exponential demand",
                   worst, worst <= 0)


@check
def log_phi_convex(rng):
    worst = 0.0
    for d in families().values():
        r = 0.5 * d.mean
        for _ in range(100):
            a, b = np.sort(rng.uniform(0, 20, 2))
            worst = max(worst, rates.log_phi(d, r, 0.5 * (a + b))
                        - 0.5 * (rates.log_phi(d, r, a) + rates.log_phi(d, r, b)))
        # right derivative at 0 equals r - E[D] < 0
        worst = max(worst, rates.phi(d, r, 1e-6) - 1.0 + 1e-12)
    return _result("log_phi_convex", "log phi is midpoint convex; phi decreases at 0 when r < E[D]",
                   worst, worst <= 1e-12)


@check
def chernoff_domination(rng):
    worst = -math.inf
    for d in families().values():
        for r in rng.uniform(0, d.mean, 5):
            g = rates.chernoff_rate(d, r).gamma
            for n in range(1, 51):
                worst = max(worst, rates.ruin_prob(d, r, n) - g**n)
    return _result("chernoff_domination", "P(S_n <= n r) <= gamma^n for n <= 50", worst, worst <= 1e-12,
                   unit="excess")


@functools.cache
def r_inf(name: str, p_over_h: float) -> float:
    return policies.best_constant_order(families()[name], 1.0, p_over_h).r


@check
def gamma_monotone(rng):
    worst = 0.0
    for name, d in families().items():
        gam = [rates.chernoff_rate(d, r_inf(name, ph)).gamma for ph in P_OVER_H]
        worst = max(worst, np.max(-np.diff(gam)))
    return _result("gamma_monotone_in_p_over_h", "gamma(p/h) is non-decreasing in p/h",
                   worst, worst <= 1e-9)


@check
def r_inf_below_r_L(rng):
    worst = -math.inf
    for name, d in families().items():
        for ph in P_OVER_H:
            r = r_inf(name, ph)
            for L in LEMMA_L:
                worst = max(worst, r - policies.best_constant_order_finite(d, 1.0, ph, L).r)
    return _result("r_inf_le_r_L", "r_inf <= r_L for every L >= 1", worst, worst <= 1e-6, unit="excess")


@check
def cramer_sum_first_order(rng):
    worst = -math.inf
    for name, d in families().items():
        for ph in P_OVER_H:
            value, _ = rates.cramer_sum(d, r_inf(name, ph))
            worst = max(worst, ph - value)
    return _result("cramer_sum_at_r_inf", "sum_n P(n r_inf >= S_n) >= p/h", worst, worst <= 1e-5,
                   unit="shortfall")


@check
def cost_convexity(rng):
    worst = 0.0
    for d in families().values():
        for _ in range(100):
            a, b = np.sort(rng.uniform(0, 0.95 * d.mean, 2))
            m = 0.5 * (a + b)
            worst = max(worst,
                        policies.cost_inf(d, 1.0, 4.0, m)
                        - 0.5 * (policies.cost_inf(d, 1.0, 4.0, a) + policies.cost_inf(d, 1.0, 4.0, b)) - 2e-9,
                        policies.cost_finite(d, 1.0, 4.0, 10, m)
                        - 0.5 * (policies.cost_finite(d, 1.0, 4.0, 10, a) + policies.cost_finite(d, 1.0, 4.0, 10, b)))
    return _result("cost_convexity", "C(r) and C_L(r) are midpoint convex in r", worst, worst <= 1e-12)


@check
def opt_sandwich(rng):
    worst = -math.inf
    for name, d in families().items():
        for ph in (0.25, 1.0, 4.0):
            for L in (1, 4, 10):
                lb = policies.opt_lower_bound(d, 1.0, ph, L)
                hi = policies.cost_inf(d, 1.0, ph, r_inf(name, ph))
                worst = max(worst, lb.g - lb.value, lb.value - hi - 1e-9)
    return _result("opt_sandwich", "g <= max(g, C_L(r_L)) <= C(r_inf)", worst, worst <= 1e-12, unit="excess")


@check
def optimizer_vs_grid(rng):
    worst = 0.0
    for _ in range(6):
        k = int(rng.integers(2, 4))
        atoms = rng.choice(np.arange(0, 7) * 0.5, size=k, replace=False)
        probs = rng.dirichlet(np.ones(k))
        probs[-1] = 1.0 - probs[:-1].sum()
        d = dist.Demand.discrete(atoms, probs)
        ph = float(rng.choice([0.5, 1.0, 3.0]))
        best = policies.best_constant_order_finite(d, 1.0, ph, 5)
        _, gmin = policies.grid_scan(lambda r: policies.cost_finite(d, 1.0, ph, 5, r), 0.0, d.mean, 2001)
        worst = max(worst, best.cost - gmin)
    return _result("optimizer_matches_grid", "golden-section minimum is no worse than a grid scan",
                   worst, worst <= 1e-12, unit="excess")


@check
def table1_reproduction(rng):
    t = bounds.table1()
    printed = [
        [2.13, 1.08, 1.00, 1.00, 1.00, 1.00, 1.00, 1.00],
        [3.36, 1.89, 1.15, 1.01, 1.00, 1.00, 1.00, 1.00],
        [6.42, 3.99, 2.62, 1.72, 1.34, 1.08, 1.02, 1.00],
        [12.26, 6.77, 4.43, 3.12, 2.45, 1.73, 1.38, 1.15],
        [62.26, 27.60, 14.86, 9.62, 7.62, 5.75, 4.75, 3.81],
        [204.5, 85.21, 41.77, 24.43, 18.20, 12.92, 10.49, 8.49],
    ]
    worst = 0.0
    for row, prow in zip(t.values, printed):
        for v, pv in zip(row, prow):
            half = 0.05 if pv >= 100 else 0.005
            worst = max(worst, abs(v - pv) / half)
    return _result("table1_reproduction", "exponential-demand ratio bound over p x L grid matches printed table",
                   worst, worst <= 1.0, unit="half-units")


@check
def dual_path_bound(rng):
    d = dist.Demand.exponential(1.0)
    worst = 0.0
    for p in bounds.TABLE_P:
        for L in bounds.TABLE_L:
            a = bounds.theorem1_bound(d, 1.0, p, L).ratio_bound
            b = bounds.exponential_bound(1.0, p, L).ratio_bound
            worst = max(worst, abs(a - b) / b)
    return _result("general_bound_equals_closed_form", "general bound pipeline equals exponential closed form",
                   worst, worst <= 1e-6, unit="relative gap")


@check
def ratio_monotone(rng):
    v = bounds.table1().values
    worst = max(np.max(np.diff(v, axis=1)), np.max(-np.diff(v, axis=0)))
    return _result("ratio_monotone", "ratio bound non-increasing in L and non-decreasing in p", worst, worst <= 0)


@check
def lead_time_invariance(rng):
    d = dist.Demand.exponential(1.0)
    r = policies.best_constant_order(d, 1.0, 1.0).r
    cis = []
    for L in (1, 5, 20, 50):
        res = simulator.simulate_average_cost(d, simulator.PolicySpec("constant", r), 1.0, 1.0, L,
                                              T=20_000, reps=16, rng=int(rng.integers(2**32)))
        cis.append(res.ci(0.99))
    lo = max(c[0] for c in cis)
    hi = min(c[1] for c in cis)
    return "lead_time_invariance", "constant-order cost does not depend on L (99% CIs overlap)", bool(lo <= hi), \
        f"overlap width {hi - lo:.3e}"


def run_properties(seed: int = 0, names=None) -> list[Check]:
    out = []
    for fn in _CHECKS:
        if names is not None and fn.__name__ not in names:
            continue
        rng = np.random.default_rng(seed)
        t0 = time.perf_counter()
        try:
            name, anchor, ok, detail = fn(rng)
        except Exception as exc:  # a crashing property is a failing property
            name, anchor, ok, detail = fn.__name__, "", False, f"{type(exc).__name__}: {exc}"
        out.append(Check(name, anchor, ok, detail, round(time.perf_counter() - t0, 3)))
    return out


LEMMA_CHECKS = ("gamma_monotone", "r_inf_below_r_L", "cramer_sum_first_order", "chernoff_domination")
