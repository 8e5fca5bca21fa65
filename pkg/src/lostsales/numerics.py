"""Small numerical kernels: regularized incomplete gamma, adaptive Simpson,
golden-section search and bisection on monotone predicates."""
from __future__ import annotations

import math

import numpy as np

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 100_000

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


_STIRLING_MIN = 30.0


def _stirling_correction(a):
    # lgamma(a) - ((a - 1/2) log a - a + log(2 pi) / 2), for a >= 30
    a2 = a * a
    return (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - 1.0 / (1680.0 * a2)) / a2) / a2) / a


def _log_prefactor(a, x):
    # log(x^a e^-x / Gamma(a)), x > 0; for large a the form
    # -a (u - log1p(u)) + log(a / 2 pi) / 2 - stirling(a), u = x/a - 1,
    # avoids cancelling terms of size a log a
    big = a >= _STIRLING_MIN
    out = np.empty(a.shape)
    if (~big).any():
        lgam = np.frompyfunc(math.lgamma, 1, 1)(a[~big]).astype(float)
        out[~big] = a[~big] * np.log(x[~big]) - x[~big] - lgam
    if big.any():
        ab, xb = a[big], x[big]
        u = (xb - ab) / ab
        with np.errstate(divide="ignore", invalid="ignore"):
            log_ratio = np.where(u > -0.5, np.log1p(u), np.log(xb) - np.log(ab))
        out[big] = (-ab * (u - log_ratio) + 0.5 * np.log(ab / (2.0 * math.pi))
                    - _stirling_correction(ab))
    return out


def _series(a, x):
    """P(a, x) by the power series, intended for x < a + 1."""
    ap = a.copy()
    term = 1.0 / a
    total = term.copy()
    active = np.ones(a.shape, dtype=bool)
    for _ in range(_MAX_ITER):
        ap[active] += 1.0
        term[active] *= x[active] / ap[active]
        total[active] += term[active]
        active &= np.abs(term) > np.abs(total) * _EPS
        if not active.any():
            break
    return np.exp(_log_prefactor(a, x)) * total


def _continued_fraction(a, x):
    """Q(a, x) by the modified Lentz continued fraction, intended for x >= a + 1."""
    b = x + 1.0 - a
    c = np.full(a.shape, 1.0 / _TINY)
    d = 1.0 / b
    h = d.copy()
    active = np.ones(a.shape, dtype=bool)
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b = b + 2.0
        d_new = an * d + b
        d_new = np.where(np.abs(d_new) < _TINY, _TINY, d_new)
        c_new = b + an / c
        c_new = np.where(np.abs(c_new) < _TINY, _TINY, c_new)
        d_new = 1.0 / d_new
        delta = d_new * c_new
        d = np.where(active, d_new, d)
        c = np.where(active, c_new, c)
        h = np.where(active, h * delta, h)
        active &= np.abs(delta - 1.0) > _EPS
        if not active.any():
            break
    return np.exp(_log_prefactor(a, x)) * h


def gammainc_lower(a, x):
    """Regularized lower incomplete gamma P(a, x) = gamma(a, x) / Gamma(a).

    Uses the power series below ``x = a + 1`` and the continued fraction for
    the complement above it. Broadcasts over ``a`` and ``x``; ``a`` must be
    positive, negative ``x`` gives 0.
    """
    a, x = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(x, dtype=float))
    if np.any(a <= 0):
        raise ValueError("shape parameter a must be positive")
    out = np.zeros(a.shape)
    pos = x > 0
    lo = pos & (x < a + 1.0)
    hi = pos & ~lo
    if lo.any():
        out[lo] = _series(a[lo], x[lo])
    if hi.any():
        out[hi] = 1.0 - _continued_fraction(a[hi], x[hi])
    out = np.clip(out, 0.0, 1.0)
    return out if out.ndim else float(out)


def erlang_cdf(n, rate, x):
    """P(X_1 + ... + X_n <= x) for i.i.d. exponential(rate) summands."""
    return gammainc_lower(n, rate * np.asarray(x, dtype=float))


def adaptive_simpson(f, a, b, tol=1e-10, max_intervals=1_000_000):
    """Integrate a scalar function over [a, b] by adaptive Simpson.

    Returns ``(value, n_intervals)``. Raises ``RuntimeError`` if the
    subdivision budget is exhausted before every panel meets its share of
    ``tol``.
    """
    if b == a:
        return 0.0, 0
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) * (fa + 4.0 * fm + fb) / 6.0
    stack = [(a, b, fa, fm, fb, whole, tol)]
    total = 0.0
    n = 0
    while stack:
        lo, hi, flo, fmid, fhi, est, eps = stack.pop()
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = f(lm), f(rm)
        left = (mid - lo) * (flo + 4.0 * flm + fmid) / 6.0
        right = (hi - mid) * (fmid + 4.0 * frm + fhi) / 6.0
        err = left + right - est
        n += 1
        if abs(err) <= 15.0 * eps or hi - lo < 1e-14 * max(1.0, abs(hi)):
            total += left + right + err / 15.0
            continue
        if n >= max_intervals:
            raise RuntimeError("adaptive Simpson exceeded subdivision budget")
        stack.append((lo, mid, flo, flm, fmid, left, 0.5 * eps))
        stack.append((mid, hi, fmid, frm, fhi, right, 0.5 * eps))
    return sign * total, n


def golden_section(f, lo, hi, rtol=1e-9, atol=1e-12, max_iter=500):
    """Minimize a unimodal function on [lo, hi].

    Returns ``(x, fx, width)`` with ``width`` the final bracket width. The
    bracket shrinks until ``width <= rtol * |x| + atol``.
    """
    a, b = float(lo), float(hi)
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= rtol * abs(0.5 * (a + b)) + atol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    x, fx = (c, fc) if fc <= fd else (d, fd)
    # endpoints can win for monotone functions on the bracket
    for end in (lo, hi):
        fe = f(end)
        if fe < fx:
            x, fx = end, fe
    return x, fx, b - a


def bisect_predicate(pred, lo, hi, rtol=1e-12, atol=1e-15, max_iter=200):
    """Locate the switch point of a monotone predicate that is false at
    ``lo`` and true at ``hi``.

    Returns the final bracket ``(lo, hi)``; ``pred`` holds at ``hi``.
    """
    for _ in range(max_iter):
        if hi - lo <= rtol * abs(hi) + atol:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return lo, hi


class NumericalDiagnostic(ArithmeticError):
    """A quantity cannot be computed to the requested accuracy (for example a
    decay rate too close to 1 for a geometric tail bound to be useful)."""
