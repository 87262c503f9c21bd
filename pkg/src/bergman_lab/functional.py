"""Regularized Blaschke-product functional and its normalization.

For a configuration ``X`` and a point ``q`` the partial functional is

    Psi_{q,R}(X) = prod_{x in X, x in D(q,R)} |blaschke(q, x)|^2 * C(R),

where the compensator ``C(R) = exp(int_{D(q,R)} (1 - |blaschke(q,z)|^2) K(z,z) dA)``
equals ``cosh(R/2)^2`` for every ``q``. The partials converge (in mean) as
``R -> infinity``; the normalized functional ``c * Psi_q`` is the density of the
reduced Palm measure at ``q`` when ``c = 1 / E[Psi_q]``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .geom import DomainError, ball, blaschke, max_ball_radius
from .spectra import det2, radial_eigenvalues

EULER_GAMMA = float(np.euler_gamma)

#: three candidate values for E[Psi_q]
PAPER_EXPECTATION = math.exp(EULER_GAMMA - 1.0) / 2.0
PRODUCT_DISPLAY_VALUE = math.exp(1.0 - EULER_GAMMA) / 2.0
CARLEMAN_MINUS_VALUE = math.exp(EULER_GAMMA - 1.0)

PAPER_NORM_CONSTANT = 2.0 * math.exp(1.0 - EULER_GAMMA)

DEFAULT_R_START = 1.0
DEFAULT_R_STEP = 0.25
DEFAULT_MARGIN = 0.01

__all__ = [
    "EULER_GAMMA",
    "PAPER_EXPECTATION",
    "PRODUCT_DISPLAY_VALUE",
    "CARLEMAN_MINUS_VALUE",
    "PAPER_NORM_CONSTANT",
    "WindowError",
    "compensator",
    "compensator_quadrature",
    "psi_partial",
    "psi_partials",
    "r_grid",
    "PsiEstimate",
    "psi_limit",
    "psi_limits",
    "oracle_norm_constant",
    "norm_constant",
    "psi_bar",
    "Calibration",
    "calibrate_norm_constant",
    "remainder_log_sd",
]


class WindowError(DomainError):
    """A hyperbolic ball reaches outside the observation window."""


def compensator(R):
    """``cosh(R/2)^2``, the compensating factor for ``D(q, R)``."""
    if R < 0:
        raise ValueError("R must be >= 0")
    return math.cosh(R / 2.0) ** 2


def _compensator_integrand(q, form):
    a = abs(q) ** 2
    qc = np.conj(q)

    def f(z):
        one_minus_phi2 = (1.0 - a) * (1.0 - np.abs(z) ** 2) / np.abs(1.0 - qc * z) ** 2
        if form == "squared":
            return one_minus_phi2 / (math.pi * (1.0 - np.abs(z) ** 2) ** 2)
        if form == "single":
            return one_minus_phi2 / (math.pi * (1.0 - np.abs(z) ** 2))
        raise ValueError(f"unknown compensator form {form!r}")

    return f


def compensator_quadrature(q, R, form="squared", rtol=1e-12):
    """Exponent of the compensator by adaptive 2-D quadrature over ``D(q, R)``.

    ``form="squared"`` integrates ``(1 - |blaschke(q,z)|^2) K(z,z)``;
    ``form="single"`` uses the single power ``1 / (pi (1 - |z|^2))`` instead,
    which yields a bounded, ``q``-dependent exponent. Polar coordinates about
    the ball's Euclidean centre.
    """
    b = ball(q, R)
    if b.euclid_radius == 0.0:
        return 0.0
    c = b.euclid_center
    f = _compensator_integrand(complex(q), form)

    def polar(x):
        t = x[:, 0]
        z = c + t * np.exp(1j * x[:, 1])
        return f(z) * t

    res = integrate.cubature(
        polar, [0.0, -math.pi], [b.euclid_radius, math.pi], rtol=rtol, atol=1e-14, max_subdivisions=200000
    )
    if res.status != "converged":
        raise ArithmeticError(f"compensator quadrature did not converge for q={q}, R={R}")
    return float(res.estimate)


def _check_window(q, R, window_radius):
    b = ball(q, R)
    if abs(b.euclid_center) + b.euclid_radius > window_radius + 1e-12:
        raise WindowError(f"D({q}, {R}) leaves the observation window |z| <= {window_radius}")


def psi_partial(q, R, X, form="squared"):
    """Partial functional ``Psi_{q,R}(X)``.

    ``X`` is a :class:`~bergman_lab.gaf.Configuration`; the ball must fit in
    its window.
    """
    _check_window(q, R, X.window_radius)
    rho = math.tanh(R / 2.0)
    pts = X.particles
    if len(pts):
        m = np.abs(blaschke(q, pts))
        inside = m < rho
        prod = float(np.prod(m[inside] ** 2))
    else:
        prod = 1.0
    if form == "squared":
        return prod * compensator(R)
    return prod * math.exp(compensator_quadrature(q, R, form=form))


def psi_partials(q, R_grid, X):
    """``Psi_{q,R}(X)`` for every ``R`` in ``R_grid`` (vectorized, section-3 form)."""
    R_grid = np.asarray(R_grid, dtype=float)
    _check_window(q, float(R_grid.max()), X.window_radius)
    rho = np.tanh(R_grid / 2.0)
    if len(X.particles):
        logm2 = 2.0 * np.log(np.abs(blaschke(q, X.particles)))
        m = np.exp(logm2 / 2.0)
        s = np.array([logm2[m < r].sum() for r in rho])
    else:
        s = np.zeros_like(rho)
    return np.exp(s + 2.0 * np.log(np.cosh(R_grid / 2.0)))


def r_grid(q, window_radius, start=DEFAULT_R_START, step=DEFAULT_R_STEP, margin=DEFAULT_MARGIN):
    """``R = start, start + step, ...`` while ``D(q, R)`` fits in ``|z| <= window - margin``."""
    r_max = max_ball_radius(q, window_radius - margin)
    if r_max < start:
        raise WindowError(f"no admissible radius >= {start} for q={q} in window {window_radius}")
    n = int(math.floor((r_max - start) / step + 1e-12)) + 1
    return start + step * np.arange(n)


def remainder_log_sd(R):
    """Standard deviation of ``sum log|blaschke(q,x)|^2`` over zeros outside ``D(q, R)``.

    Radial linear statistic of the Bergman process (independent of ``q``):
    ``Var = sum_k [(k+1) int f^2 s^k ds - ((k+1) int f s^k ds)^2]`` with
    ``f(s) = log s`` on ``(tanh(R/2)^2, 1)``.
    """
    rho = math.tanh(R / 2.0)
    U = -2.0 * math.log(rho)
    k_stop = int(min(5e6, max(1e3, 60.0 / U)))
    c = np.arange(1.0, k_stop + 1.0)
    e = np.exp(-c * U)
    i1 = (1.0 - e * (1.0 + c * U)) / c**2
    i2 = (2.0 - e * (2.0 + 2.0 * c * U + (c * U) ** 2)) / c**3
    return math.sqrt(max(float(np.sum(c * i2 - (c * i1) ** 2)), 0.0))


@dataclass
class PsiEstimate:
    q: complex
    radii: np.ndarray
    partials: np.ndarray
    limit: float
    limit_error: float
    method: str
    converged: bool
    tail_slope: float = math.nan
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "q": [self.q.real, self.q.imag],
            "method": self.method,
            "limit": self.limit,
            "limit_error": self.limit_error,
            "converged": self.converged,
            "tail_slope": self.tail_slope,
            "trace": [[float(r), float(p)] for r, p in zip(self.radii, self.partials)],
        }

    def to_json(self):
        return json.dumps(self.to_dict())

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["R", "partial"])
        for r, p in zip(self.radii, self.partials):
            w.writerow([repr(float(r)), repr(float(p))])
        return buf.getvalue()


def _tail_fit(radii, partials, method):
    n = len(radii)
    k = max(2, int(math.ceil(n / 4))) if n >= 2 else 1
    r_tail, p_tail = radii[-k:], partials[-k:]
    slope = float(np.polyfit(r_tail, np.log(p_tail), 1)[0]) if k >= 2 else math.nan
    if method == "tail_mean" or k < 2:
        return float(np.mean(p_tail)), p_tail, slope
    if method == "extrapolate":
        # E[Psi_R] - E[Psi] is first order in 1 - tanh(R/2)^2
        t = 1.0 / np.cosh(r_tail / 2.0) ** 2
        b, a = np.polyfit(t, p_tail, 1)
        return float(a), p_tail, slope
    raise ValueError(f"unknown extrapolation method {method!r}")


def psi_limit(q, X, R_grid=None, method="extrapolate", count_z=5.0):
    """Estimate ``lim_R Psi_{q,R}(X)`` from partials on an ``R`` grid.

    ``method="extrapolate"`` fits the last quarter of the partials linearly in
    ``1 / cosh(R/2)^2`` and returns the intercept; ``method="tail_mean"``
    averages them. ``limit_error`` is the largest deviation of the tail
    partials from the limit plus the expected spread from zeros beyond the
    largest ball (:func:`remainder_log_sd`).

    The estimate is flagged non-convergent when the number of particles in the
    shell swept by the tail radii is more than ``count_z`` Poisson standard
    deviations from its expectation ``sinh(R2/2)^2 - sinh(R1/2)^2``: the
    compensator only cancels the Blaschke product for typical configurations.
    """
    q = complex(q)
    if R_grid is None:
        R_grid = r_grid(q, X.window_radius)
    radii = np.asarray(R_grid, dtype=float)
    partials = psi_partials(q, radii, X)
    limit, tail, slope = _tail_fit(radii, partials, method)
    allowance = abs(limit) * remainder_log_sd(radii[-1])
    spread = float(np.max(np.abs(tail - limit)))

    r1, r2 = radii[-len(tail)], radii[-1]
    expected = math.sinh(r2 / 2.0) ** 2 - math.sinh(r1 / 2.0) ** 2
    m = np.abs(blaschke(q, X.particles)) if len(X.particles) else np.zeros(0)
    observed = int(np.count_nonzero((m >= math.tanh(r1 / 2.0)) & (m < math.tanh(r2 / 2.0))))
    typical = abs(observed - expected) <= count_z * math.sqrt(max(expected, 1.0))
    converged = bool(limit > 0 and typical)
    return PsiEstimate(
        q, radii, partials, limit, spread + allowance, method, converged, slope,
        {"shell_observed": observed, "shell_expected": expected},
    )


def psi_limits(qs, X, method="extrapolate", **grid_kw):
    """``psi_limit(q, X).limit`` for many ``q`` at once.

    Points sharing ``|q|`` share an ``R`` grid, so they are processed together.
    """
    qs = np.atleast_1d(np.asarray(qs, dtype=complex))
    out = np.empty(len(qs))
    radius_key = np.round(np.abs(qs), 12)
    logm2 = None
    if len(X.particles):
        logm2 = 2.0 * np.log(np.abs(blaschke(qs[:, None], X.particles[None, :])))
    for key in np.unique(radius_key):
        idx = np.nonzero(radius_key == key)[0]
        radii = r_grid(qs[idx[0]], X.window_radius, **grid_kw)
        thresholds = 2.0 * np.log(np.tanh(radii / 2.0))
        if logm2 is None:
            s = np.zeros((len(idx), len(radii)))
        else:
            lm = logm2[idx]
            s = np.stack([np.where(lm < th, lm, 0.0).sum(axis=1) for th in thresholds], axis=1)
        partials = np.exp(s + 2.0 * np.log(np.cosh(radii / 2.0)))
        for j, i in enumerate(idx):
            out[i] = _tail_fit(radii, partials[j], method)[0]
    return out


def oracle_norm_constant(k_max=10**6):
    """``1 / det2(1 - K_1)``, the reciprocal of ``E[Psi_q]`` from the radial spectrum."""
    return 1.0 / det2(radial_eigenvalues("one_minus_s", k_max), sign=-1).value


def norm_constant(mode, calibrated=None):
    """Resolve a normalization preset: ``"paper"``, ``"oracle"`` or ``"calibrated"``."""
    if isinstance(mode, (int, float)):
        return float(mode)
    if mode == "paper":
        return PAPER_NORM_CONSTANT
    if mode == "oracle":
        return oracle_norm_constant()
    if mode == "calibrated":
        if calibrated is None:
            raise ValueError("calibrated mode needs a calibration result")
        return calibrated.constant if isinstance(calibrated, Calibration) else float(calibrated)
    raise ValueError(f"unknown norm mode {mode!r}")


def psi_bar(q, X, norm=PAPER_NORM_CONSTANT, R_grid=None, method="extrapolate"):
    """Normalized functional ``norm * lim_R Psi_{q,R}(X)``."""
    return norm * psi_limit(q, X, R_grid, method=method).limit


@dataclass
class Calibration:
    constant: float
    ci_low: float
    ci_high: float
    mean_psi: float
    std_error: float
    n_samples: int
    comparisons: dict = field(default_factory=dict)


def calibrate_norm_constant(samples, q=0.0, n_boot=2000, seed=0, method="extrapolate", min_samples=100):
    """``1 / mean(Psi_q)`` over sample configurations, with a bootstrap interval.

    ``samples`` may be configurations or precomputed limit values.
    """
    if len(samples) < min_samples:
        raise ValueError(f"calibration needs at least {min_samples} samples, got {len(samples)}")
    if hasattr(samples[0], "particles"):
        vals = np.array([psi_limit(q, X, method=method).limit for X in samples])
    else:
        vals = np.asarray(samples, dtype=float)
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(len(vals)))
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, len(vals), size=(n_boot, len(vals)))
    boot = 1.0 / vals[idx].mean(axis=1)
    lo, hi = np.quantile(boot, [0.025, 0.975])
    oracle = oracle_norm_constant()
    return Calibration(
        constant=1.0 / mean,
        ci_low=float(lo),
        ci_high=float(hi),
        mean_psi=mean,
        std_error=se,
        n_samples=len(vals),
        comparisons={"paper": PAPER_NORM_CONSTANT, "oracle_inverse_det2": oracle},
    )
