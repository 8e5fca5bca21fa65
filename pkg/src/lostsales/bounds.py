"""Optimality-gap bounds for the best constant-order policy.

For every lead time L,

    C(r_inf) / OPT(L) <= 1 + h / ((1 - gamma) g)
                             * (E[D] - r_inf + 1 / (e theta* (L + 1))) * gamma^(L+1)

where gamma and theta* are the Chernoff rate and exponent at r_inf and g is
the newsvendor cost (itself a lower bound on OPT(L)). For exponential demand
every ingredient is explicit and the bound no longer depends on the rate.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import distributions as dist
from . import policies, rates

TABLE_P = (0.25, 1.0, 4.0, 9.0, 39.0, 99.0)
TABLE_L = (1, 4, 10, 20, 30, 50, 70, 100)
TABLE_P_LABELS = ("1/4", "1", "4", "9", "39", "99")


@dataclass(frozen=True)
class BoundReport:
    ratio_bound: float
    gap_bound: float
    components: dict = field(default_factory=dict)
    path: str = "general"  # general | exponential-closed-form

    def to_json(self) -> dict:
        comp = {k: ("inf" if isinstance(v, float) and math.isinf(v) else v)
                for k, v in self.components.items()}
        return {"ratio_bound": self.ratio_bound, "gap_bound": self.gap_bound,
                "components": comp, "path": self.path}


def gap_bound(h: float, gamma: float, theta_star: float, mean_demand: float,
              r_star: float, L: int) -> float:
    """Absolute bound on C(r_inf) - OPT(L)."""
    if not 0 <= gamma < 1:
        raise ValueError("gamma must lie in [0, 1)")
    if gamma == 0:
        return 0.0
    inv_theta = 0.0 if math.isinf(theta_star) else 1.0 / (math.e * theta_star * (L + 1))
    return h / (1.0 - gamma) * (mean_demand - r_star + inv_theta) * gamma ** (L + 1)


def assemble(h: float, p: float, L: int, g: float, gamma: float, theta_star: float,
             mean_demand: float, r_star: float, path: str = "general") -> BoundReport:
    gap = gap_bound(h, gamma, theta_star, mean_demand, r_star, L)
    comps = {"gamma": gamma, "theta_star": theta_star, "r_star": r_star,
             "mean_demand": mean_demand, "g": g, "L": L, "h": h, "p": p}
    return BoundReport(1.0 + gap / g, gap, comps, path)


def theorem1_bound(d: dist.Demand, h: float, p: float, L: int, closed_form: bool = False,
                   tol: float = policies.OPT_TOL, series_tol: float = rates.DEFAULT_TOL) -> BoundReport:
    """The general bound assembled from numerically computed r_inf, gamma,
    theta* and g. ``closed_form=True`` lets exponential demand use its
    explicit ingredients instead."""
    policies.CostParams(h, p, L)
    best = policies.best_constant_order(d, h, p, tol=tol, closed_form=closed_form, series_tol=series_tol)
    rate = rates.chernoff_rate(d, best.r, closed_form=closed_form)
    g, _ = dist.newsvendor(d, h, p, closed_form=closed_form)
    return assemble(h, p, L, g, rate.gamma, rate.theta_star, d.mean, best.r)


def tau(h: float, p: float) -> float:
    return math.sqrt(h / (2.0 * p + h))


def exponential_gamma(h: float, p: float) -> float:
    t = tau(h, p)
    return (1.0 - t) * math.exp(t)


def exponential_bound(h: float, p: float, L: int, lam: float = 1.0) -> BoundReport:
    """Explicit bound for exponential demand (independent of ``lam``)."""
    policies.CostParams(h, p, L)
    t = tau(h, p)
    gam = exponential_gamma(h, p)
    gap_over_g = ((t + (1.0 / t - 1.0) / (math.e * (L + 1)))
                  / ((1.0 - gam) * math.log1p(p / h)) * gam ** (L + 1))
    g = h * math.log1p(p / h) / lam
    comps = {"gamma": gam, "theta_star": t * lam / (1.0 - t), "r_star": (1.0 - t) / lam,
             "mean_demand": 1.0 / lam, "g": g, "L": L, "h": h, "p": p, "tau": t}
    return BoundReport(1.0 + gap_over_g, gap_over_g * g, comps, "exponential-closed-form")


def exponential_best_cost(h: float, p: float, lam: float) -> float:
    return policies.exponential_cost(h, p, lam)


def display_round(x: float) -> str:
    """Two decimals below 100, one decimal from 100 up."""
    return f"{x:.1f}" if x >= 100 else f"{x:.2f}"


@dataclass(frozen=True)
class Table1:
    p_values: tuple
    L_values: tuple
    values: np.ndarray  # rows p, columns L

    def rounded(self) -> list[list[str]]:
        return [[display_round(v) for v in row] for row in self.values]

    def to_csv(self, rounded: bool = True) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["p"] + [f"L={L}" for L in self.L_values])
        cells = self.rounded() if rounded else [[repr(float(v)) for v in row] for row in self.values]
        labels = TABLE_P_LABELS if self.p_values == TABLE_P else [f"{p:g}" for p in self.p_values]
        for label, row in zip(labels, cells):
            w.writerow([label] + row)
        return buf.getvalue()

    def to_json(self) -> dict:
        return {"h": 1.0, "p": list(self.p_values), "L": list(self.L_values),
                "ratio_bound": self.values.tolist(), "display": self.rounded()}


def table1(p_values=TABLE_P, L_values=TABLE_L, h: float = 1.0) -> Table1:
    vals = np.array([[exponential_bound(h, p, L).ratio_bound for L in L_values] for p in p_values])
    return Table1(tuple(p_values), tuple(L_values), vals)


@dataclass(frozen=True)
class OptInterval:
    """Bracket on OPT(L).

    ``hi`` is the best constant-order cost. ``lo`` is the strongest proven
    lower bound, ``max(g, C_L(r_L), hi / ratio_bound)``; ``ratio_lo`` is the
    bound implied by the ratio alone.
    """

    lo: float
    hi: float
    ratio_lo: float
    g: float
    cost_finite: float
    ratio_bound: float

    @property
    def lo_source(self) -> str:
        return max((self.g, "newsvendor"), (self.cost_finite, "finite-horizon-proxy"),
                   (self.ratio_lo, "ratio-bound"))[1]

    def to_json(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "lo_source": self.lo_source,
                "ratio_lo": self.ratio_lo, "g": self.g, "cost_finite": self.cost_finite,
                "ratio_bound": self.ratio_bound}


def opt_interval(d: dist.Demand, h: float, p: float, L: int, tol: float = policies.OPT_TOL,
                 series_tol: float = rates.DEFAULT_TOL) -> OptInterval:
    hi = policies.best_constant_order(d, h, p, tol=tol, series_tol=series_tol).cost
    bound = theorem1_bound(d, h, p, L, closed_form=True, tol=tol, series_tol=series_tol)
    lower = policies.opt_lower_bound(d, h, p, L, tol=tol)
    ratio_lo = hi / bound.ratio_bound
    lo = min(max(lower.g, lower.cost_finite, ratio_lo), hi)
    return OptInterval(lo, hi, ratio_lo, lower.g, lower.cost_finite, bound.ratio_bound)
