"""Large-deviation objects for the random walk n r - S_n.

``phi(theta) = exp(theta r) E[exp(-theta D)]`` is log-convex with
``phi(0) = 1`` and right-derivative ``r - E[D]`` at zero. Its infimum
``gamma`` is the Chernoff rate: ``P(S_n <= n r) <= gamma^n``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from . import distributions as dist
from .numerics import NumericalDiagnostic, bisect_predicate

THETA_MAX = 2.0**60
GAMMA_CEILING = 1.0 - 1e-9
DEFAULT_TOL = 1e-9
MAX_SERIES_TERMS = 50_000


@dataclass(frozen=True)
class RateInfo:
    gamma: float
    theta_star: float
    attained: bool
    r_level: float
    bracket_width: float = 0.0

    def to_json(self) -> dict:
        return {
            "gamma": self.gamma,
            "theta_star": "inf" if math.isinf(self.theta_star) else self.theta_star,
            "attained": self.attained,
            "r_level": self.r_level,
        }


def log_phi(d: dist.Demand, r: float, theta: float) -> float:
    return dist.log_laplace_shifted(d, theta, r)


def phi(d: dist.Demand, r: float, theta: float) -> float:
    return math.exp(log_phi(d, r, theta))


def _check_level(d, r):
    if r < 0:
        raise ValueError("order level must be non-negative")
    if r >= d.mean:
        raise ValueError(f"order level {r} must be below the mean demand {d.mean}")


def chernoff_rate(d: dist.Demand, r: float, closed_form: bool = True) -> RateInfo:
    """gamma = inf_theta phi(theta) and the minimizing exponent theta*.

    The bracket doubles from theta = 1 until the slope of log phi turns
    positive; if it is still non-positive at ``THETA_MAX`` the infimum is
    declared unattained (theta* = inf). Otherwise theta* is located by
    bisection on the sign of that slope.
    """
    _check_level(d, r)
    if d.kind == "exponential" and closed_form:
        if r == 0:
            return RateInfo(0.0, math.inf, False, r)
        x = d.lam * r
        return RateInfo(x * math.exp(1.0 - x), 1.0 / r - d.lam, True, r)

    def slope(theta):
        return r - dist.tilted_mean(d, theta)

    lo, hi = 0.0, 1.0
    best = 0.0
    while slope(hi) <= 0:
        best = min(best, log_phi(d, r, hi))
        if hi >= THETA_MAX:
            return RateInfo(math.exp(best), math.inf, False, r)
        lo, hi = hi, 2.0 * hi
    lo, theta = bisect_predicate(lambda t: slope(t) > 0, lo, hi, rtol=1e-13, atol=0.0)
    return RateInfo(math.exp(log_phi(d, r, theta)), theta, True, r, theta - lo)


def ruin_prob(d: dist.Demand, r: float, n: int) -> float:
    """P(S_n <= n r)."""
    if r < 0:
        raise ValueError("order level must be non-negative")
    return dist.partial_sum_cdf(d, n, n * r)


def tail_terms(gamma: float, tol: float, scale: float = 1.0) -> int:
    """Smallest N >= 1 with scale * gamma^(N+1) / (1 - gamma) <= tol."""
    if gamma <= 0 or scale <= 0:
        return 1
    if gamma >= GAMMA_CEILING:
        raise NumericalDiagnostic(f"rate too close to 1 (gamma = {gamma!r})")
    need = math.log(tol * (1.0 - gamma) / scale) / math.log(gamma) - 1.0
    if need > MAX_SERIES_TERMS:
        raise NumericalDiagnostic(f"series needs {need:.3g} terms at gamma = {gamma!r}")
    return max(1, math.ceil(need))


def cramer_sum(d: dist.Demand, r: float, tol: float = DEFAULT_TOL) -> tuple[float, float]:
    """sum_{n >= 1} P(S_n <= n r), truncated once the Chernoff tail
    gamma^(N+1) / (1 - gamma) is below ``tol``. Returns (partial sum, tail bound)."""
    _check_level(d, r)
    gamma = chernoff_rate(d, r).gamma
    if gamma == 0:
        return 0.0, 0.0
    n = tail_terms(gamma, tol)
    prob, _ = d.sums.terms(r, n)
    return float(prob.sum()), gamma ** (n + 1) / (1.0 - gamma)
