"""Aberth-Ehrlich simultaneous root finder with Newton polishing.

Polynomials are given by ascending coefficients ``a[0] + a[1] z + ... + a[N] z^N``.
Evaluation switches to the reversed polynomial outside the unit circle so that
Horner's rule never overflows for the high degrees used to truncate power series.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

__all__ = ["RootFindingError", "aberth", "initial_guesses", "evaluate"]

_EPS = 2.220446049250313e-16


class RootFindingError(RuntimeError):
    """Aberth iteration did not converge."""

    def __init__(self, message, seed=None):
        super().__init__(message if seed is None else f"{message} (seed={seed})")
        self.seed = seed


@njit(cache=True)
def _newton_ratio(a, am, z):
    """Return ``(p(z)/p'(z), |p(z)|, backward-error scale)``."""
    n = a.shape[0] - 1
    if abs(z) <= 1.0:
        p = a[n]
        dp = 0.0j
        s = am[n]
        az = abs(z)
        for k in range(n - 1, -1, -1):
            dp = dp * z + p
            p = p * z + a[k]
            s = s * az + am[k]
        if dp == 0:
            return complex(np.inf), abs(p), s
        return p / dp, abs(p), s
    # reversed polynomial in w = 1/z: p(z) = z^n q(w)
    w = 1.0 / z
    q = a[0]
    dq = 0.0j
    s = am[0]
    aw = abs(w)
    for k in range(1, n + 1):
        dq = dq * w + q
        q = q * w + a[k]
        s = s * aw + am[k]
    denom = w * (n * q - w * dq)
    # residuals are reported for q, i.e. relative to |z|^n
    if denom == 0:
        return complex(np.inf), abs(q), s
    return q / denom, abs(q), s


@njit(cache=True, fastmath=True)
def _repulsion_range(xi, yi, lo, hi, zr, zim):
    sr = 0.0
    si = 0.0
    for j in range(lo, hi):
        dx = xi - zr[j]
        dy = yi - zim[j]
        inv = 1.0 / (dx * dx + dy * dy)
        sr += dx * inv
        si -= dy * inv
    return sr, si


@njit(cache=True)
def _repulsion(xi, yi, i, zr, zim):
    """``sum_{j != i} 1 / (z_i - z_j)`` as a real pair."""
    a_r, a_i = _repulsion_range(xi, yi, 0, i, zr, zim)
    b_r, b_i = _repulsion_range(xi, yi, i + 1, zr.shape[0], zr, zim)
    return a_r + b_r, a_i + b_i


@njit(cache=True)
def _aberth_kernel(a, z, maxiter, tol):
    am = np.abs(a)
    n = z.shape[0]
    done = np.zeros(n, dtype=np.bool_)
    iters = 0
    remaining = n
    zr = z.real.copy()
    zim = z.imag.copy()
    while iters < maxiter and remaining > 0:
        iters += 1
        for i in range(n):
            if done[i]:
                continue
            ratio, res, scale = _newton_ratio(a, am, z[i])
            if res <= tol * scale:
                done[i] = True
                remaining -= 1
                continue
            zi = z[i]
            xi = zi.real
            yi = zi.imag
            sr, si = _repulsion(xi, yi, i, zr, zim)
            corr = ratio / (1.0 - ratio * complex(sr, si))
            z[i] = zi - corr
            zr[i] = z[i].real
            zim[i] = z[i].imag
            if abs(corr) <= 4.0 * _EPS * abs(z[i]):
                done[i] = True
                remaining -= 1
    return iters, done


@njit(cache=True)
def _polish(a, z, steps, tol):
    am = np.abs(a)
    n = z.shape[0]
    worst = 0.0
    for i in range(n):
        for _ in range(steps):
            ratio, res, scale = _newton_ratio(a, am, z[i])
            if res <= tol * scale or not np.isfinite(ratio.real):
                break
            z[i] = z[i] - ratio
        ratio, res, scale = _newton_ratio(a, am, z[i])
        rel = res / scale if scale > 0 else res
        if rel > worst:
            worst = rel
    return worst


def initial_guesses(a):
    """Starting points on concentric circles read off the Newton polygon.

    The upper convex hull of ``(k, log|a_k|)`` splits the degree into groups;
    a hull edge from ``i`` to ``j`` receives ``j - i`` points on the circle of
    radius ``|a_i / a_j| ** (1 / (j - i))``.
    """
    a = np.asarray(a, dtype=complex)
    n = len(a) - 1
    mag = np.abs(a)
    with np.errstate(divide="ignore"):
        logm = np.where(mag > 0, np.log(mag), -np.inf)
    hull = []
    for k in range(n + 1):
        if not np.isfinite(logm[k]):
            continue
        while len(hull) >= 2:
            i, j = hull[-2], hull[-1]
            # drop j if it lies on or below the chord i -> k
            if (logm[j] - logm[i]) * (k - i) <= (logm[k] - logm[i]) * (j - i):
                hull.pop()
            else:
                break
        hull.append(k)
    guesses = []
    offset = 0.7  # irrational-ish phase avoids symmetric stalls
    for i, j in zip(hull[:-1], hull[1:]):
        m = j - i
        radius = math.exp((logm[i] - logm[j]) / m)
        ang = 2.0 * math.pi * np.arange(m) / m + offset + 2.0 * math.pi * i / max(n, 1)
        guesses.append(radius * np.exp(1j * ang))
    if hull and hull[0] > 0:
        # exact zeros at the origin
        guesses.insert(0, np.zeros(hull[0], dtype=complex))
    return np.concatenate(guesses) if guesses else np.zeros(0, dtype=complex)


def aberth(a, maxiter=200, tol=None, polish_steps=3, seed=None):
    """All roots of the polynomial with ascending coefficients ``a``.

    Returns the ``N`` roots (with multiplicity). Raises
    :class:`RootFindingError` if the iteration fails to converge; ``seed`` is
    carried in the error for diagnosis.
    """
    a = np.ascontiguousarray(a, dtype=np.complex128)
    if len(a) < 2:
        return np.zeros(0, dtype=complex)
    if a[-1] == 0:
        raise ValueError("leading coefficient must be nonzero")
    n = len(a) - 1
    if tol is None:
        tol = 4.0 * _EPS * n
    z = initial_guesses(a).astype(np.complex128)
    iters, done = _aberth_kernel(a, z, maxiter, tol)
    worst = _polish(a, z, polish_steps, tol)
    if not np.all(done) and worst > 1e3 * tol:
        raise RootFindingError(
            f"Aberth iteration stalled after {iters} sweeps; {int(np.sum(~done))} roots unconverged, "
            f"worst relative residual {worst:.3e}",
            seed=seed,
        )
    return z


def evaluate(a, z):
    """Evaluate the ascending-coefficient polynomial at ``z`` (vectorized)."""
    return np.polynomial.polynomial.polyval(z, np.asarray(a, dtype=complex))
