"""Demand distributions and the functionals the rest of the package needs.

Three kinds are supported:

* ``exponential`` with rate ``lam`` (closed forms throughout),
* ``discrete`` with finitely many non-negative atoms (exact enumeration and
  n-fold convolution),
* ``empirical``, the equal-weight measure on a sample. Its one-period
  functionals are finite sums, but its partial-sum laws are only estimated
  by Monte Carlo.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, reduce
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import numerics, streams

PROB_SUM_TOL = 1e-12
SUPPORT_CAP = 1_000_000
MC_SAMPLES = 1_000_000
MC_PANEL_REPS = 20_000
_PANEL_STREAM = 1_000_000_000
# leading/trailing convolution mass below this is dropped (per level)
TRIM_MASS = 1e-22
LEVEL_CACHE_BUDGET = 50_000_000
_LATTICE_MAX_INDEX = 10_000
_MERGE_RTOL = 1e-12


class MonteCarloFallbackWarning(RuntimeWarning):
    """An exact partial-sum law was replaced by a Monte Carlo estimate."""


class SupportCapExceeded(Exception):
    pass


class CdfEstimate(NamedTuple):
    value: float
    std_err: float
    exact: bool


@dataclass(frozen=True, eq=False)
class Demand:
    """Immutable i.i.d. demand distribution.

    Build instances with :meth:`exponential`, :meth:`discrete`,
    :meth:`empirical` or :meth:`from_spec`.
    """

    kind: str
    lam: float = math.nan
    atoms: np.ndarray = field(default_factory=lambda: np.empty(0))
    probs: np.ndarray = field(default_factory=lambda: np.empty(0))
    sample_values: np.ndarray = field(default_factory=lambda: np.empty(0))
    source: str | None = None

    def __post_init__(self):
        if self.kind == "exponential":
            if not (self.lam > 0 and math.isfinite(self.lam)):
                raise ValueError("exponential rate must be positive and finite")
            m, v = 1.0 / self.lam, 1.0 / self.lam**2
        elif self.kind in ("discrete", "empirical"):
            m = float(np.dot(self.atoms, self.probs))
            v = float(np.dot((self.atoms - m) ** 2, self.probs))
            if len(self.atoms) < 2 or not v > 0:
                raise ValueError("demand must have strictly positive variance")
        else:
            raise ValueError(f"unknown demand kind {self.kind!r}")
        if not m > 0:
            raise ValueError("demand must have strictly positive mean")
        object.__setattr__(self, "_mean", m)
        object.__setattr__(self, "_variance", v)

    @classmethod
    def exponential(cls, lam: float) -> Demand:
        return cls("exponential", lam=float(lam))

    @classmethod
    def discrete(cls, atoms, probs=None) -> Demand:
        """``discrete([(x, q), ...])`` or ``discrete(xs, qs)``."""
        if probs is None:
            pairs = [tuple(a) for a in atoms]
            atoms = [a for a, _ in pairs]
            probs = [q for _, q in pairs]
        x = np.asarray(atoms, dtype=float)
        q = np.asarray(probs, dtype=float)
        if x.shape != q.shape or x.ndim != 1 or len(x) == 0:
            raise ValueError("atoms and probabilities must be equal-length 1-d sequences")
        if np.any(~np.isfinite(x)) or np.any(x < 0):
            raise ValueError("demand atoms must be finite and non-negative")
        if np.any(q < 0):
            raise ValueError("probabilities must be non-negative")
        if abs(q.sum() - 1.0) > PROB_SUM_TOL:
            raise ValueError(f"probabilities sum to {q.sum():.15g}, not 1")
        x, q = _merge_atoms(x, q)
        return cls("discrete", atoms=x, probs=q)

    @classmethod
    def empirical(cls, values, source: str | None = None) -> Demand:
        v = np.asarray(values, dtype=float).ravel()
        if len(v) == 0:
            raise ValueError("empirical demand needs at least one value")
        if np.any(~np.isfinite(v)) or np.any(v < 0):
            raise ValueError("demand values must be finite and non-negative")
        x, counts = np.unique(v, return_counts=True)
        v.setflags(write=False)
        return cls("empirical", atoms=x, probs=counts / len(v), sample_values=v, source=source)

    @classmethod
    def from_spec(cls, spec, base_dir: str | Path | None = None) -> Demand:
        """Build from the JSON form, e.g. ``{"kind": "exponential", "rate": 1.0}``,
        ``{"kind": "discrete", "atoms": [[0, 0.5], [2, 0.5]]}`` or
        ``{"kind": "empirical", "path": "demands.csv"}``."""
        if not isinstance(spec, dict) or "kind" not in spec:
            raise ValueError("demand spec must be an object with a 'kind' field")
        kind = spec["kind"]
        if kind == "exponential":
            return cls.exponential(spec["rate"])
        if kind == "discrete":
            return cls.discrete(spec["atoms"])
        if kind == "empirical":
            if "values" in spec:
                return cls.empirical(spec["values"])
            path = Path(spec["path"])
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            return cls.empirical(read_demand_csv(path), source=str(spec["path"]))
        raise ValueError(f"unknown demand kind {kind!r}")

    def to_spec(self) -> dict:
        if self.kind == "exponential":
            return {"kind": "exponential", "rate": self.lam}
        if self.kind == "discrete":
            return {"kind": "discrete", "atoms": [[float(a), float(q)] for a, q in zip(self.atoms, self.probs)]}
        if self.source is not None:
            return {"kind": "empirical", "path": self.source}
        return {"kind": "empirical", "values": self.sample_values.tolist()}

    @property
    def mean(self) -> float:
        return self._mean

    @property
    def variance(self) -> float:
        return self._variance

    @cached_property
    def sums(self):
        """Engine for the laws of partial sums S_n = D_1 + ... + D_n."""
        if self.kind == "exponential":
            return _ErlangSums(self.lam)
        if self.kind == "empirical":
            return _MonteCarloSums(self)
        try:
            return _LatticeSums(self.atoms, self.probs)
        except ValueError:
            return _GenericSums(self)

    def __repr__(self):
        if self.kind == "exponential":
            return f"Demand.exponential({self.lam!r})"
        if self.kind == "discrete":
            pairs = ", ".join(f"({a:g}, {q:g})" for a, q in zip(self.atoms, self.probs))
            return f"Demand.discrete([{pairs}])"
        return f"Demand.empirical(<{len(self.sample_values)} values>)"


def read_demand_csv(path) -> list[float]:
    """One non-negative value per line; blank lines and '#' comments ignored."""
    out = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or not row[0].strip() or row[0].lstrip().startswith("#"):
                continue
            out.append(float(row[0]))
    return out


def _merge_atoms(x, q):
    keep = q > 0
    x, q = x[keep], q[keep]
    order = np.argsort(x, kind="stable")
    x, q = x[order], q[order]
    ux, inv = np.unique(x, return_inverse=True)
    uq = np.zeros(len(ux))
    np.add.at(uq, inv, q)
    return ux, uq


# ---------------------------------------------------------------------------
# one-period functionals

def mean(d: Demand) -> float:
    return d.mean


def laplace(d: Demand, theta: float) -> float:
    """E[exp(-theta D)]."""
    if theta < 0:
        raise ValueError("theta must be non-negative")
    if theta == 0:
        return 1.0
    if d.kind == "exponential":
        return d.lam / (d.lam + theta)
    return float(np.dot(d.probs, np.exp(-theta * d.atoms)))


def log_laplace_shifted(d: Demand, theta: float, r: float) -> float:
    """log(exp(theta r) E[exp(-theta D)]) evaluated without overflow."""
    if theta < 0:
        raise ValueError("theta must be non-negative")
    if theta == 0:
        return 0.0
    if d.kind == "exponential":
        if math.isinf(theta):
            return -math.inf if r == 0 else math.inf
        return theta * r + math.log(d.lam) - math.log(d.lam + theta)
    z = theta * (r - d.atoms)
    top = z.max()
    return float(top + math.log(np.dot(d.probs, np.exp(z - top))))


def tilted_mean(d: Demand, theta: float) -> float:
    """E[D exp(-theta D)] / E[exp(-theta D)], the mean under exponential tilting."""
    if d.kind == "exponential":
        return 1.0 / (d.lam + theta)
    z = -theta * (d.atoms - d.atoms[0])
    w = d.probs * np.exp(z)
    return float(np.dot(w, d.atoms) / w.sum())


def cdf(d: Demand, x: float) -> float:
    if x < 0:
        return 0.0
    if d.kind == "exponential":
        return -math.expm1(-d.lam * x)
    return float(d.probs[d.atoms <= x].sum())


def quantile(d: Demand, q: float) -> float:
    """Generalized inverse inf{x : P(D <= x) >= q}."""
    if not 0 < q < 1:
        raise ValueError("quantile level must lie in (0, 1)")
    if d.kind == "exponential":
        return -math.log1p(-q) / d.lam
    c = np.cumsum(d.probs)
    i = int(np.searchsorted(c, q - 1e-14, side="left"))
    return float(d.atoms[min(i, len(d.atoms) - 1)])


def sample(d: Demand, rng, n: int) -> np.ndarray:
    """``n`` i.i.d. draws; ``rng`` is a numpy Generator or an integer seed."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(streams.as_seed(rng))
    if n == 0:
        return np.empty(0)
    if d.kind == "exponential":
        return rng.exponential(1.0 / d.lam, size=n)
    if d.kind == "empirical":
        return d.sample_values[rng.integers(0, len(d.sample_values), size=n)]
    return d.atoms[rng.choice(len(d.atoms), size=n, p=d.probs)]


def expected_overage(d: Demand, x: float, closed_form: bool = True) -> float:
    """E[(x - D)^+] = integral of the CDF over [0, x]."""
    if x <= 0:
        return 0.0
    if d.kind == "exponential":
        if closed_form:
            return x - (-math.expm1(-d.lam * x)) / d.lam
        val, _ = numerics.adaptive_simpson(lambda s: -math.expm1(-d.lam * s), 0.0, x, tol=1e-12)
        return val
    return float(np.dot(d.probs, np.maximum(x - d.atoms, 0.0)))


def newsvendor_cost(d: Demand, h: float, p: float, x: float) -> float:
    """E[h (x - D)^+ + p (D - x)^+]."""
    over = expected_overage(d, x)
    return h * over + p * (over - x + d.mean)


def newsvendor(d: Demand, h: float, p: float, closed_form: bool = True) -> tuple[float, float]:
    """Single-period optimum: returns ``(g, Q)`` with ``Q`` the p/(p+h)
    quantile and ``g`` the minimal expected holding-plus-shortage cost."""
    if h <= 0 or p <= 0:
        raise ValueError("h and p must be positive")
    Q = quantile(d, p / (p + h))
    if d.kind == "exponential" and closed_form:
        return h * math.log1p(p / h) / d.lam, Q
    over = expected_overage(d, Q, closed_form=closed_form)
    g = (h + p) * over + p * (d.mean - Q)
    return g, Q


# ---------------------------------------------------------------------------
# partial sums

def partial_sum_cdf(d: Demand, n: int, x: float) -> float:
    """P(D_1 + ... + D_n <= x).

    Exact for exponential and discrete demand. Empirical demand, and discrete
    demand whose convolution outgrows ``SUPPORT_CAP`` atoms, fall back to
    Monte Carlo and emit :class:`MonteCarloFallbackWarning`.
    """
    return partial_sum_cdf_estimate(d, n, x).value


def partial_sum_cdf_estimate(d: Demand, n: int, x: float) -> CdfEstimate:
    if n < 1:
        raise ValueError("n must be a positive integer")
    return d.sums.cdf_estimate(int(n), float(x))


class _ErlangSums:
    exact = True

    def __init__(self, lam):
        self.lam = lam

    def cdf_estimate(self, n, x):
        return CdfEstimate(float(numerics.erlang_cdf(n, self.lam, max(x, 0.0))), 0.0, True)

    def terms(self, r, n_max):
        """P(S_n <= n r) and E[(n r - S_n)^+] for n = 1..n_max."""
        n = np.arange(1, n_max + 1, dtype=float)
        if r <= 0:
            z = np.zeros(n_max)
            return z, z.copy()
        c = n * r
        x = self.lam * c
        prob = numerics.gammainc_lower(n, x)
        # integral of the Erlang CDF: c P(n, lam c) - (n / lam) P(n + 1, lam c)
        ppm = c * prob - (n / self.lam) * numerics.gammainc_lower(n + 1.0, x)
        return np.atleast_1d(prob), np.maximum(np.atleast_1d(ppm), 0.0)


class _Level(NamedTuple):
    start: int
    cdf: np.ndarray
    first: np.ndarray  # cumulative sum of index * pmf
    pmf: np.ndarray


def _lattice(atoms):
    fracs = []
    for a in atoms:
        f = Fraction(float(a)).limit_denominator(1_000_000)
        if abs(float(f) - a) > 1e-12 * max(1.0, a):
            raise ValueError("atoms are not on a rational lattice")
        fracs.append(f)
    den = reduce(math.lcm, (f.denominator for f in fracs), 1)
    nums = [int(f * den) for f in fracs]
    g = reduce(math.gcd, nums, 0)
    idx = np.array([k // g for k in nums], dtype=np.int64)
    if idx.max() > _LATTICE_MAX_INDEX:
        raise ValueError("lattice too fine")
    return g / den, idx


def _trim(start, pmf):
    lead = np.cumsum(pmf)
    i = int(np.searchsorted(lead, TRIM_MASS, side="left"))
    tail = np.cumsum(pmf[::-1])
    j = int(np.searchsorted(tail, TRIM_MASS, side="left"))
    i = min(i, len(pmf) - 1)
    end = max(len(pmf) - j, i + 1)
    return start + i, pmf[i:end]


class _LatticeSums:
    """Exact convolution powers for atoms on a lattice ``step * Z``.

    Levels are cached until ``LEVEL_CACHE_BUDGET`` stored entries, after which
    higher levels are recomputed on demand from the last cached one. Tail
    mass below ``TRIM_MASS`` is dropped at each level.
    """

    exact = True

    def __init__(self, atoms, probs):
        self.step, idx = _lattice(atoms)
        self.kernel_start = int(idx.min())
        kernel = np.zeros(int(idx.max() - idx.min()) + 1)
        np.add.at(kernel, idx - self.kernel_start, probs)
        self.kernel = kernel
        self._levels = [self._make_level(self.kernel_start, kernel)]
        self._stored = len(kernel)

    @staticmethod
    def _make_level(start, pmf):
        j = start + np.arange(len(pmf), dtype=float)
        return _Level(start, np.cumsum(pmf), np.cumsum(j * pmf), pmf)

    def _next(self, lev):
        start, pmf = _trim(lev.start + self.kernel_start, np.convolve(lev.pmf, self.kernel))
        return self._make_level(start, pmf)

    def iter_levels(self, n_max):
        # only the last cached level keeps its pmf; earlier ones need just
        # the cumulative arrays for queries
        for n in range(1, n_max + 1):
            if n < len(self._levels):
                lev = self._levels[n - 1]
            elif n == len(self._levels):
                lev = self._levels[-1]
            else:
                lev = self._next(lev)
                if n == len(self._levels) + 1 and self._stored < LEVEL_CACHE_BUDGET:
                    last = self._levels[-1]
                    self._levels[-1] = last._replace(pmf=None)
                    self._levels.append(lev)
                    self._stored += 2 * len(lev.pmf)
            yield lev

    def level(self, n):
        for lev in self.iter_levels(n):
            pass
        return lev

    def _query(self, lev, c):
        """(P(S <= c), E[(c - S)^+]) at one level."""
        if c < 0:
            return 0.0, 0.0
        u = c / self.step
        jmax = math.floor(u + 1e-12 * max(1.0, u))
        k = jmax - lev.start
        if k < 0:
            return 0.0, 0.0
        k = min(k, len(lev.cdf) - 1)
        F, J = lev.cdf[k], lev.first[k]
        return float(F), max(float(c * F - self.step * J), 0.0)

    def cdf_estimate(self, n, x):
        return CdfEstimate(self._query(self.level(n), x)[0], 0.0, True)

    def positive_part_mean(self, n, c):
        return self._query(self.level(n), c)[1]

    def terms(self, r, n_max):
        prob = np.empty(n_max)
        ppm = np.empty(n_max)
        for i, lev in enumerate(self.iter_levels(n_max)):
            prob[i], ppm[i] = self._query(lev, (i + 1) * r)
        return prob, ppm


def _merge_close(values, pmf):
    order = np.argsort(values, kind="stable")
    v, w = values[order], pmf[order]
    new = np.empty(len(v), dtype=bool)
    new[0] = True
    new[1:] = np.diff(v) > _MERGE_RTOL * np.maximum(1.0, np.abs(v[1:]))
    groups = np.cumsum(new) - 1
    out_w = np.zeros(groups[-1] + 1)
    np.add.at(out_w, groups, w)
    return v[new], out_w


class _GenericSums:
    """Convolution powers for atoms off any usable lattice, by merging the
    outer sums of support points. Falls back to Monte Carlo beyond the cap."""

    exact = True

    def __init__(self, d):
        self.d = d
        self._levels = [(d.atoms.copy(), d.probs.copy())]
        self._mc = None

    def _level(self, n):
        while len(self._levels) < n:
            v, w = self._levels[-1]
            if len(v) * len(self.d.atoms) > 10 * SUPPORT_CAP:
                raise SupportCapExceeded(n)
            nv, nw = _merge_close((v[:, None] + self.d.atoms).ravel(), (w[:, None] * self.d.probs).ravel())
            if len(nv) > SUPPORT_CAP:
                raise SupportCapExceeded(n)
            self._levels.append((nv, nw))
        return self._levels[n - 1]

    def _fallback(self):
        if self._mc is None:
            self._mc = _MonteCarloSums(self.d)
        warnings.warn("discrete convolution exceeded the support cap; using Monte Carlo",
                      MonteCarloFallbackWarning, stacklevel=4)
        return self._mc

    def _query(self, n, c):
        v, w = self._level(n)
        mask = v <= c
        return float(w[mask].sum()), float(np.dot(w[mask], c - v[mask]))

    def cdf_estimate(self, n, x):
        try:
            return CdfEstimate(self._query(n, x)[0], 0.0, True)
        except SupportCapExceeded:
            return self._fallback().cdf_estimate(n, x)

    def positive_part_mean(self, n, c):
        try:
            return self._query(n, c)[1]
        except SupportCapExceeded:
            return self._fallback().positive_part_mean(n, c)

    def terms(self, r, n_max):
        try:
            prob = np.empty(n_max)
            ppm = np.empty(n_max)
            for n in range(1, n_max + 1):
                prob[n - 1], ppm[n - 1] = self._query(n, n * r)
            return prob, ppm
        except SupportCapExceeded:
            return self._fallback().terms(r, n_max)


class _MonteCarloSums:
    """Partial-sum laws estimated from seeded samples.

    Single queries use ``MC_SAMPLES`` fresh sums from stream ``n``; series
    terms come from one panel of ``MC_PANEL_REPS`` random walks, shared by
    every level ``r`` (common random numbers), grown lazily.
    """

    exact = False

    def __init__(self, d, seed: int = streams.DEFAULT_SEED):
        self.d = d
        self.seed = seed
        self._panel = None  # unsorted walk positions at the last cached level
        self._sorted = []  # per level: sorted sums and their cumulative sums
        self._stored = 0

    def _sums(self, n, reps):
        rng = streams.substream(self.seed, n)
        total = np.zeros(reps)
        chunk = max(1, 10_000_000 // reps)
        done = 0
        while done < n:
            k = min(chunk, n - done)
            total += sample(self.d, rng, reps * k).reshape(reps, k).sum(axis=1)
            done += k
        return total

    def cdf_estimate(self, n, x):
        s = self._sums(n, MC_SAMPLES)
        p = float(np.mean(s <= x))
        return CdfEstimate(p, math.sqrt(max(p * (1 - p), 0.0) / MC_SAMPLES), False)

    def positive_part_mean(self, n, c):
        return float(np.mean(np.maximum(c - self._sums(n, MC_SAMPLES), 0.0)))

    def _levels(self, n_max):
        """Yield (sorted sums, cumulative sums) for levels 1..n_max. Level n
        adds one draw per walk from stream ``PANEL_STREAM + n``."""
        for n in range(1, n_max + 1):
            if n <= len(self._sorted):
                yield self._sorted[n - 1]
                continue
            if n == 1:
                panel = np.zeros(MC_PANEL_REPS)
            elif n - 1 == len(self._sorted):
                panel = self._panel
            panel = panel + sample(self.d, streams.substream(self.seed, _PANEL_STREAM + n), MC_PANEL_REPS)
            s = np.sort(panel)
            entry = (s, np.cumsum(s))
            if n == len(self._sorted) + 1 and self._stored < LEVEL_CACHE_BUDGET:
                self._sorted.append(entry)
                self._panel = panel
                self._stored += 2 * MC_PANEL_REPS
            yield entry

    def terms(self, r, n_max):
        prob = np.empty(n_max)
        ppm = np.empty(n_max)
        for i, (s, cs) in enumerate(self._levels(n_max)):
            c = (i + 1) * r
            k = int(np.searchsorted(s, c, side="right"))
            prob[i] = k / len(s)
            ppm[i] = (k * c - (cs[k - 1] if k else 0.0)) / len(s)
        return prob, ppm
