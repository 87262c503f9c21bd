"""Poincare-disc geometry: Blaschke factors, hyperbolic distance and balls,
and quadrature grids for the invariant area measure.

Conventions
-----------
The metric is ``2|dz| / (1 - |z|^2)`` (curvature -1), so that
``d(0, t) = log((1 + t) / (1 - t))`` and the hyperbolic ball ``D(0, R)`` is
the Euclidean disc of radius ``tanh(R / 2)``.

The Blaschke factor is ``(z - q) / (1 - conj(q) z)``. Some texts write the
denominator as ``1 - conj(z) q``; the two differ by a unimodular factor, and
every quantity computed in this package only uses the modulus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DomainError",
    "HyperbolicBall",
    "Disc",
    "AnnularSector",
    "QuadratureGrid",
    "blaschke",
    "hyp_dist",
    "pseudo_dist",
    "ball",
    "hyperbolic_density",
    "hyperbolic_quadrature",
]


class DomainError(ValueError):
    """A point or region is not strictly inside the unit disc."""


def _check_inside(*values, name="point"):
    for v in values:
        a = np.abs(np.asarray(v))
        if a.size and (not np.all(np.isfinite(a)) or np.max(a) >= 1.0):
            raise DomainError(f"{name} must lie in the open unit disc, got |{name}| = {np.max(a)!r}")


def blaschke(q, z):
    """Disc automorphism ``(z - q) / (1 - conj(q) z)`` sending ``q`` to 0.

    Vectorized over both arguments.
    """
    _check_inside(q, name="q")
    _check_inside(z, name="z")
    q = np.asarray(q, dtype=complex)
    z = np.asarray(z, dtype=complex)
    out = (z - q) / (1.0 - np.conj(q) * z)
    return complex(out) if out.ndim == 0 else out


def pseudo_dist(z, w):
    """Pseudo-hyperbolic distance ``|blaschke(z, w)|``."""
    return np.abs(blaschke(z, w))


def hyp_dist(z, w):
    """Hyperbolic distance, ``2 artanh |blaschke(z, w)|``."""
    m = pseudo_dist(z, w)
    out = 2.0 * np.arctanh(m)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class Disc:
    """Euclidean disc ``|z - center| < radius``."""

    center: complex
    radius: float

    def contains(self, z, tol=0.0):
        return np.abs(np.asarray(z) - self.center) < self.radius + tol

    @property
    def outer_radius(self):
        return abs(self.center) + self.radius

    def describe(self):
        return {"kind": "disc", "center": [self.center.real, self.center.imag], "radius": self.radius}


@dataclass(frozen=True)
class AnnularSector:
    """``r_inner <= |z| < r_outer`` and ``theta0 <= arg z < theta1`` (origin-centred)."""

    r_inner: float
    r_outer: float
    theta0: float = 0.0
    theta1: float = 2.0 * math.pi

    def contains(self, z, tol=0.0):
        z = np.asarray(z)
        a = np.abs(z)
        th = np.mod(np.angle(z) - self.theta0, 2.0 * math.pi)
        span = self.theta1 - self.theta0
        in_angle = th < span + tol if span < 2.0 * math.pi else np.ones(a.shape, dtype=bool)
        return (a >= self.r_inner - tol) & (a < self.r_outer + tol) & in_angle

    @property
    def outer_radius(self):
        return self.r_outer

    def describe(self):
        return {
            "kind": "annular_sector",
            "r_inner": self.r_inner,
            "r_outer": self.r_outer,
            "theta0": self.theta0,
            "theta1": self.theta1,
        }


@dataclass(frozen=True)
class HyperbolicBall:
    """Lobachevskian ball ``D(q, R)`` with its Euclidean description."""

    center: complex
    radius_hyp: float
    euclid_center: complex
    euclid_radius: float

    @property
    def pseudo_radius(self):
        return math.tanh(self.radius_hyp / 2.0)

    def contains(self, z):
        return np.abs(blaschke(self.center, z)) < self.pseudo_radius

    def as_disc(self):
        return Disc(self.euclid_center, self.euclid_radius)


def ball(q, R):
    """Hyperbolic ball of radius ``R`` centred at ``q``."""
    q = complex(q)
    _check_inside(q, name="q")
    if not R >= 0 or not math.isfinite(R):
        raise DomainError(f"hyperbolic radius must be finite and >= 0, got {R!r}")
    rho = math.tanh(R / 2.0)
    a = abs(q) ** 2
    denom = 1.0 - rho * rho * a
    return HyperbolicBall(
        center=q,
        radius_hyp=float(R),
        euclid_center=q * (1.0 - rho * rho) / denom,
        euclid_radius=rho * (1.0 - a) / denom,
    )


def max_ball_radius(q, r_window):
    """Largest ``R`` with ``D(q, R)`` inside the closed disc ``|z| <= r_window``."""
    q = complex(q)
    a = abs(q)
    if a >= r_window:
        return 0.0
    # the farthest point of D(q, R) from the origin is blaschke(-q, rho * q/|q|)
    rho = (r_window - a) / (1.0 - a * r_window)
    return 2.0 * math.atanh(rho)


def hyperbolic_density(z):
    """Density of ``dA / (pi (1 - |z|^2)^2)`` with respect to Lebesgue area."""
    return 1.0 / (math.pi * (1.0 - np.abs(z) ** 2) ** 2)


@dataclass(frozen=True)
class QuadratureGrid:
    """Nodes and weights on a region of the disc.

    ``weights`` integrate against ``dA / (pi (1 - |z|^2)^2)``; ``area_weights``
    integrate against Lebesgue area ``dA``.
    """

    nodes: np.ndarray
    weights: np.ndarray
    area_weights: np.ndarray
    region: object = field(compare=False)
    shape: tuple = (0, 0)

    def __len__(self):
        return len(self.nodes)

    def integrate(self, f, measure="hyperbolic"):
        w = self.weights if measure == "hyperbolic" else self.area_weights
        return np.sum(w * f(self.nodes))


def hyperbolic_quadrature(region, n_radial, n_angular):
    """Tensor Gauss-Legendre (radial) x uniform (angular) grid on ``region``.

    ``region`` is a :class:`Disc`, :class:`AnnularSector` or
    :class:`HyperbolicBall`. Radial nodes are taken from the region's own
    centre (the Euclidean centre for discs and balls).
    """
    if n_radial < 1 or n_angular < 1:
        raise ValueError("n_radial and n_angular must be >= 1")
    if isinstance(region, HyperbolicBall):
        region = region.as_disc()
    if region.outer_radius >= 1.0:
        raise DomainError("quadrature region must stay strictly inside the unit disc")

    x, wx = np.polynomial.legendre.leggauss(n_radial)
    if isinstance(region, Disc):
        lo, hi, th0, span, centre = 0.0, region.radius, 0.0, 2.0 * math.pi, region.center
    elif isinstance(region, AnnularSector):
        lo, hi = region.r_inner, region.r_outer
        th0, span, centre = region.theta0, region.theta1 - region.theta0, 0.0
    else:
        raise TypeError(f"unsupported region {region!r}")

    t = lo + (hi - lo) * (x + 1.0) / 2.0
    wt = wx * (hi - lo) / 2.0 * t
    if span >= 2.0 * math.pi - 1e-15:
        theta = th0 + 2.0 * math.pi * np.arange(n_angular) / n_angular
        wth = np.full(n_angular, 2.0 * math.pi / n_angular)
    else:
        # open sector: midpoint rule in angle
        theta = th0 + span * (np.arange(n_angular) + 0.5) / n_angular
        wth = np.full(n_angular, span / n_angular)

    nodes = (centre + t[:, None] * np.exp(1j * theta[None, :])).ravel()
    area_w = (wt[:, None] * wth[None, :]).ravel()
    return QuadratureGrid(
        nodes=nodes,
        weights=area_w * hyperbolic_density(nodes),
        area_weights=area_w,
        region=region,
        shape=(n_radial, n_angular),
    )
