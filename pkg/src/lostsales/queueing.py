"""Waiting times of the single-server queue with constant service ``r`` and
interarrival law ``D``.

Under a constant order ``r`` the on-hand inventory follows Lindley's
recursion ``W_{k+1} = (W_k + r - D_k)^+``, so its finite-time and
steady-state means are the queue's expected waiting times. They are
computed here by Monte Carlo, by Spitzer's identity
``E[W_L] = sum_{n<=L} E[(n r - S_n)^+] / n``, and in closed form for
exponential demand (the M/D/1 queue).
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np

from . import distributions as dist
from . import numerics, rates, streams

LINDLEY_CHUNK = 10_000


@dataclass(frozen=True)
class WaitingTimeEstimate:
    value: float
    error_bound: float
    method: str  # closed-form | spitzer-exact | spitzer-mc | lindley-mc
    terms_or_reps: int

    def to_json(self) -> dict:
        return asdict(self)


def lindley_finite(d: dist.Demand, r: float, L: int, reps: int, rng=None,
                   threads: int | None = None) -> WaitingTimeEstimate:
    """Monte Carlo estimate of E[W_L] with W_0 = 0.

    Replications are split into chunks of ``LINDLEY_CHUNK``; chunk ``i`` uses
    substream ``i`` of the seed, so the estimate is identical for any
    ``threads``.
    """
    if r < 0:
        raise ValueError("order level must be non-negative")
    if L < 1 or reps < 1:
        raise ValueError("L and reps must be positive")
    seed = streams.as_seed(rng)
    sizes = [min(LINDLEY_CHUNK, reps - i) for i in range(0, reps, LINDLEY_CHUNK)]

    def run(i, gen):
        w = np.zeros(sizes[i])
        for _ in range(L):
            w = np.maximum(w + r - dist.sample(d, gen, sizes[i]), 0.0)
        return w.sum(), np.square(w).sum()

    parts = streams.map_streams(run, seed, len(sizes), threads)
    s = sum(p[0] for p in parts)
    s2 = sum(p[1] for p in parts)
    m = s / reps
    var = max(s2 / reps - m * m, 0.0) * reps / max(reps - 1, 1)
    return WaitingTimeEstimate(float(m), math.sqrt(var / reps), "lindley-mc", reps)


def positive_part_mean(d: dist.Demand, r: float, n: int, method: str = "closed") -> float:
    """E[(n r - S_n)^+].

    For exponential demand ``method="quadrature"`` integrates the Erlang CDF
    over [0, n r] by adaptive Simpson; the default uses its antiderivative.
    """
    if r < 0:
        raise ValueError("order level must be non-negative")
    if n < 1:
        raise ValueError("n must be a positive integer")
    c = n * r
    if c == 0:
        return 0.0
    if d.kind == "exponential":
        if method == "quadrature":
            val, _ = numerics.adaptive_simpson(
                lambda s: float(numerics.erlang_cdf(n, d.lam, s)), 0.0, c, tol=1e-10)
            return max(val, 0.0)
        return float(d.sums.terms(r, n)[1][-1])
    return float(d.sums.positive_part_mean(n, c))


@lru_cache(maxsize=4096)
def _terms(d, r, n_max):
    return d.sums.terms(r, n_max)


def series_terms(d: dist.Demand, r: float, n_max: int):
    """(P(S_n <= n r), E[(n r - S_n)^+]) for n = 1..n_max, memoized on ``r``
    rounded to 1e-12."""
    return _terms(d, round(float(r), 12), int(n_max))


def _mc_error(d, r, ppm):
    if d.sums.exact:
        return 0.0
    n = np.arange(1, len(ppm) + 1)
    # Var((c - S)^+) <= c E[(c - S)^+] for 0 <= (c - S)^+ <= c
    return float(np.sum(np.sqrt(n * r * ppm / dist.MC_PANEL_REPS) / n))


def spitzer_finite(d: dist.Demand, r: float, L: int) -> WaitingTimeEstimate:
    """E[W_L] by Spitzer's identity (L terms)."""
    if r < 0:
        raise ValueError("order level must be non-negative")
    if L < 1:
        raise ValueError("L must be a positive integer")
    if r == 0:
        return WaitingTimeEstimate(0.0, 0.0, "spitzer-exact", L)
    _, ppm = series_terms(d, r, L)
    value = float(np.sum(ppm / np.arange(1, L + 1)))
    method = "spitzer-exact" if d.sums.exact else "spitzer-mc"
    return WaitingTimeEstimate(value, _mc_error(d, r, ppm), method, L)


def md1_wait(lam: float, r: float) -> float:
    """Steady-state M/D/1 waiting time r^2 lam / (2 (1 - r lam))."""
    return r * r * lam / (2.0 * (1.0 - r * lam))


def steady_state_wait(d: dist.Demand, r: float, tol: float = rates.DEFAULT_TOL,
                      closed_form: bool = True) -> WaitingTimeEstimate:
    """E[W_inf] for r < E[D].

    Closed form for exponential demand; otherwise the Spitzer series is
    summed until the certified tail ``r gamma^(N+1) / (1 - gamma)`` drops
    below ``tol``, and that tail is reported as ``error_bound``.
    """
    if r < 0:
        raise ValueError("order level must be non-negative")
    if r >= d.mean:
        raise ValueError(f"order level {r} must be below the mean demand {d.mean}; the series diverges")
    if r == 0:
        return WaitingTimeEstimate(0.0, 0.0, "closed-form", 1)
    if d.kind == "exponential" and closed_form:
        return WaitingTimeEstimate(md1_wait(d.lam, r), 0.0, "closed-form", 1)
    gamma = rates.chernoff_rate(d, r).gamma
    n = rates.tail_terms(gamma, tol, scale=r)
    _, ppm = series_terms(d, r, n)
    value = float(np.sum(ppm / np.arange(1, n + 1)))
    tail = r * gamma ** (n + 1) / (1.0 - gamma) if gamma > 0 else 0.0
    method = "spitzer-exact" if d.sums.exact else "spitzer-mc"
    return WaitingTimeEstimate(value, tail + _mc_error(d, r, ppm), method, n)


def wait_slope(d: dist.Demand, r: float, tol: float = rates.DEFAULT_TOL) -> tuple[float, float]:
    """Right derivative of r -> E[W_inf], i.e. sum_n P(S_n <= n r).

    Returns ``(value, tail_bound)``; the true slope lies in
    ``[value, value + tail_bound]``.
    """
    if d.kind == "exponential":
        x = d.lam * r
        return x * (2.0 - x) / (2.0 * (1.0 - x) ** 2), 0.0
    return rates.cramer_sum(d, r, tol)


def kingman_gap_bound(gamma: float, theta_star: float, L: int) -> float:
    """Upper bound ((1 - gamma) e theta* (L + 1))^-1 gamma^(L+1) on
    E[W_inf] - E[W_L] at the cost-optimal level; 1/inf counts as 0."""
    if not 0 <= gamma < 1:
        raise ValueError("gamma must lie in [0, 1)")
    if gamma == 0 or math.isinf(theta_star):
        return 0.0
    return gamma ** (L + 1) / ((1.0 - gamma) * math.e * theta_star * (L + 1))
