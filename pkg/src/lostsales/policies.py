"""Long-run and L-period costs of constant-order policies and their optimal
levels.

For a constant order ``r`` the long-run average cost is
``C(r) = h E[W_inf(r)] + p (E[D] - r)`` whatever the lead time, and the
L-period proxy is ``C_L(r) = h E[W_L(r)] + p (E[D] - r)``. Both are convex in
``r``; their right derivatives are ``h sum_n P(S_n <= n r) - p`` (over all
``n`` or ``n <= L``).
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np

from . import distributions as dist
from . import queueing, rates
from .numerics import NumericalDiagnostic, bisect_predicate, golden_section

OPT_TOL = 1e-9


@dataclass(frozen=True)
class CostParams:
    h: float
    p: float
    L: int = 1

    def __post_init__(self):
        if not (self.h > 0 and self.p > 0):
            raise ValueError("h and p must be positive")
        if int(self.L) != self.L or self.L < 1:
            raise ValueError("lead time L must be a positive integer")


@dataclass(frozen=True)
class OptimalLevel:
    r: float
    cost: float
    bracket_width: float
    method: str  # closed-form | golden-section

    def to_json(self) -> dict:
        return asdict(self)


class LowerBound(NamedTuple):
    value: float
    cost_finite: float
    g: float
    r_L: float


def cost_inf(d: dist.Demand, h: float, p: float, r: float,
             tol: float = rates.DEFAULT_TOL) -> float:
    """Long-run average cost of ordering ``r`` every period."""
    return h * queueing.steady_state_wait(d, r, tol).value + p * (d.mean - r)


def cost_finite(d: dist.Demand, h: float, p: float, L: int, r: float) -> float:
    """h E[W_L(r)] + p (E[D] - r), defined on [0, E[D]]."""
    if r < 0 or r > d.mean:
        raise ValueError("order level must lie in [0, E[D]]")
    return h * queueing.spitzer_finite(d, r, L).value + p * (d.mean - r)


def _leftmost_nonnegative(slope, lo, hi, guess, width):
    """inf{r in [lo, hi] : slope(r) >= 0} for a non-decreasing ``slope`` with
    slope(hi) >= 0, searched first in a small window around ``guess``."""
    if slope(lo) >= 0:
        return lo, 0.0
    pad = max(4.0 * width, 1e-9 * max(1.0, abs(guess)))
    a, b = max(lo, guess - pad), min(hi, guess + pad)
    if a > lo and slope(a) >= 0:
        a = lo
    if b < hi and slope(b) < 0:
        b = hi
    a, b = bisect_predicate(lambda r: slope(r) >= 0, a, b, rtol=1e-13, atol=1e-15)
    return b, b - a


def best_constant_order(d: dist.Demand, h: float, p: float, tol: float = OPT_TOL,
                        closed_form: bool = True,
                        series_tol: float = rates.DEFAULT_TOL) -> OptimalLevel:
    """The smallest minimizer r_inf of the long-run cost over [0, E[D]).

    Exponential demand has the closed form r_inf = (1 - tau) / lam with
    tau = sqrt(h / (2p + h)). Otherwise the upper end of the search bracket
    is moved towards E[D] by halving the gap until the cost rises, the
    minimum is located by golden section, and the smallest minimizer is
    pinned down by bisection on the sign of the right derivative.
    """
    CostParams(h, p)
    if d.kind == "exponential" and closed_form:
        tau = math.sqrt(h / (2.0 * p + h))
        r = (1.0 - tau) / d.lam
        return OptimalLevel(r, exponential_cost(h, p, d.lam), 0.0, "closed-form")

    m = d.mean
    # at r_inf the Cramer sum equals p/h, so 1 - gamma <= h / (p + h) and the
    # series needs roughly (p/h) log(1/tol) terms
    if p / h * math.log(1.0 / series_tol) > rates.MAX_SERIES_TERMS:
        raise NumericalDiagnostic(f"p/h = {p / h:g} needs more than {rates.MAX_SERIES_TERMS} series terms")

    def cost(r):
        try:
            return cost_inf(d, h, p, r, series_tol)
        except NumericalDiagnostic:
            return math.inf

    probes = [(0.0, cost(0.0))]
    for k in range(1, 64):
        r = m - m / 2.0**k
        c = cost(r)
        if c > probes[-1][1]:
            break
        probes.append((r, c))
    else:
        raise NumericalDiagnostic("cost keeps decreasing towards E[D]")
    hi = r
    lo = probes[-2][0] if len(probes) > 1 else 0.0
    r_hat, _, width = golden_section(cost, lo, hi, rtol=tol, atol=tol * 1e-3)

    def slope(x):
        # upper end of the certified interval: ties resolve to the left
        value, tail = queueing.wait_slope(d, x, series_tol)
        return h * (value + tail) - p

    r_star, width = _leftmost_nonnegative(slope, 0.0, hi, r_hat, width)
    return OptimalLevel(r_star, cost_inf(d, h, p, r_star, series_tol), width, "golden-section")


def finite_slope(d: dist.Demand, h: float, p: float, L: int, r: float) -> float:
    """Right derivative of C_L at r."""
    prob, _ = queueing.series_terms(d, r, L)
    return h * float(prob.sum()) - p


def best_constant_order_finite(d: dist.Demand, h: float, p: float, L: int,
                               tol: float = OPT_TOL) -> OptimalLevel:
    """The smallest minimizer r_L of C_L over [0, E[D]]."""
    CostParams(h, p, L)
    m = d.mean
    r_hat, _, width = golden_section(lambda r: cost_finite(d, h, p, L, r), 0.0, m,
                                     rtol=tol, atol=tol * 1e-3)

    def slope(x):
        return finite_slope(d, h, p, L, x)

    if slope(m) < 0:
        r_star, width = m, 0.0
    else:
        r_star, width = _leftmost_nonnegative(slope, 0.0, m, r_hat, width)
    return OptimalLevel(r_star, cost_finite(d, h, p, L, r_star), width, "golden-section")


def opt_lower_bound(d: dist.Demand, h: float, p: float, L: int, tol: float = OPT_TOL) -> LowerBound:
    """OPT(L) >= max(g, C_L(r_L))."""
    best = best_constant_order_finite(d, h, p, L, tol)
    g, _ = dist.newsvendor(d, h, p)
    return LowerBound(max(g, best.cost), best.cost, g, best.r)


def exponential_cost(h: float, p: float, lam: float) -> float:
    """Best constant-order cost for exponential(lam) demand."""
    return (math.sqrt(h * (2.0 * p + h)) - h) / lam


def grid_scan(f, lo: float, hi: float, points: int) -> tuple[float, float]:
    """Brute-force minimizer of ``f`` on an even grid (first index on ties)."""
    xs = np.linspace(lo, hi, points)
    vals = np.array([f(x) for x in xs])
    i = int(np.argmin(vals))
    return float(xs[i]), float(vals[i])
