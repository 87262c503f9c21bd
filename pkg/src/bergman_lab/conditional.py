"""Conditional law of the zeros inside a region ``B`` given the zeros outside.

Given the configuration ``Y`` outside ``B``, the zeros inside ``B`` form an
L-ensemble against the invariant measure ``dA / (pi (1 - |q|^2)^2)``: the
``m``-point Janossy density is ``det L(q_j, q_k) / det(1 + L)`` with a Cauchy
kernel

    L(q1, q2) = a(q1) a(q2) / (1 - q1 conj(q2)).

Two amplitude conventions are supported:

``"palm"`` (default)
    ``a(q) = sqrt((1 - |q|^2) PsiBar_q(Y))``. With this choice the Janossy
    densities equal ``eta0 * prod_{i<j} |blaschke(q_i, q_j)|^2 * prod_i PsiBar_{q_i}(Y)``,
    the product formula built from Palm densities.
``"plain"``
    ``a(q) = PsiBar_q(Y)``, kept for side-by-side comparison.

The continuum ensemble is discretized on a quadrature grid (Nyström): the
weighted matrix ``sqrt(w_i) L(q_i, q_j) sqrt(w_j)`` defines a finite L-ensemble
on the grid nodes.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .functional import PAPER_NORM_CONSTANT, psi_limits
from .geom import Disc, DomainError, blaschke, hyperbolic_quadrature
from .spectra import bernoulli_count_distribution

DEFAULT_REGION = Disc(0.0, 0.4)
DEFAULT_GRID = (12, 24)

__all__ = [
    "l_kernel",
    "CauchyResult",
    "cauchy_det",
    "LEnsemble",
    "amplitudes",
    "build_l_ensemble",
    "eta0",
    "ConditionalDensityReport",
    "conditional_density",
    "CountMoments",
    "conditional_count_moments",
    "sample_conditional",
    "principal_minor_sum",
]


def l_kernel(q1, q2, psi1, psi2):
    """``psi1 * psi2 / (1 - q1 conj(q2))`` (vectorized)."""
    q1 = np.asarray(q1, dtype=complex)
    q2 = np.asarray(q2, dtype=complex)
    out = np.asarray(psi1) * np.asarray(psi2) / (1.0 - q1 * np.conj(q2))
    return complex(out) if np.ndim(out) == 0 else out


@dataclass
class CauchyResult:
    det: float
    factored: float
    off_diagonal_only: float

    @property
    def rel_diff(self):
        scale = max(abs(self.det), abs(self.factored), 1e-300)
        return abs(self.det - self.factored) / scale


def cauchy_det(points):
    """``det(1 / (1 - q_j conj(q_k)))`` by LU and by the Cauchy factorization.

    The factorization is
    ``prod_{j<k} |q_j - q_k|^2 / prod_{j,k} (1 - q_j conj(q_k))``; the
    denominator runs over all ordered pairs, diagonal included.
    ``off_diagonal_only`` is the same expression with the diagonal factors
    ``1 - |q_j|^2`` left out.
    """
    q = np.atleast_1d(np.asarray(points, dtype=complex))
    if q.size and np.max(np.abs(q)) >= 1.0:
        raise DomainError("points must lie in the open unit disc")
    n = len(q)
    if n == 0:
        return CauchyResult(1.0, 1.0, 1.0)
    c = 1.0 / (1.0 - q[:, None] * np.conj(q[None, :]))
    d = float(np.real(np.linalg.det(c)))
    num = 1.0
    cross = 1.0
    for j, k in itertools.combinations(range(n), 2):
        num *= abs(q[j] - q[k]) ** 2
        cross *= abs(1.0 - q[j] * np.conj(q[k])) ** 2
    diag = float(np.prod(1.0 - np.abs(q) ** 2))
    if num == 0.0:
        d = 0.0
    return CauchyResult(d, num / (cross * diag), num / cross)


def amplitudes(psi_bar_values, nodes, form="palm"):
    """Kernel amplitudes ``a(q)`` from normalized functional values."""
    psi = np.asarray(psi_bar_values, dtype=float)
    if form == "palm":
        return np.sqrt(np.clip(psi, 0.0, None) * (1.0 - np.abs(nodes) ** 2))
    if form == "plain":
        return psi
    raise ValueError(f"unknown kernel form {form!r}")


@dataclass
class LEnsemble:
    region: object
    grid: object
    psi_values: np.ndarray
    amplitudes: np.ndarray
    matrix: np.ndarray
    form: str
    norm: float
    psi_source: object = field(default=None, repr=False)
    _eig: tuple | None = field(default=None, repr=False)

    @property
    def eig(self):
        if self._eig is None:
            mu, v = np.linalg.eigh(self.matrix)
            self._eig = (np.clip(mu, 0.0, None), v)
        return self._eig

    @property
    def eigenvalues(self):
        return self.eig[0]

    def psi_at(self, points):
        """Normalized functional at arbitrary points of ``B``."""
        if self.psi_source is None:
            raise ValueError("this ensemble was built from fixed node values")
        return self.psi_source(np.atleast_1d(np.asarray(points, dtype=complex)))

    def summary(self):
        mu = self.eigenvalues
        return {
            "region": self.region.describe(),
            "grid_shape": list(self.grid.shape),
            "form": self.form,
            "norm": self.norm,
            "eigenvalues": sorted(mu.tolist(), reverse=True),
            "eta0": eta0(self),
            "mean_count": float(np.sum(mu / (1.0 + mu))),
        }

    def to_json(self):
        return json.dumps(self.summary())


def _weighted_matrix(nodes, weights, amp):
    sw = np.sqrt(weights) * amp
    m = l_kernel(nodes[:, None], nodes[None, :], sw[:, None], sw[None, :])
    return 0.5 * (m + np.conj(m.T))


def build_l_ensemble(
    Y,
    region=DEFAULT_REGION,
    grid_shape=DEFAULT_GRID,
    norm=None,
    form="palm",
    method="extrapolate",
    psi_values=None,
):
    """Discretized conditional L-ensemble on ``region`` given the outside configuration ``Y``.

    ``psi_values`` overrides the functional at the grid nodes (synthetic
    inputs); otherwise ``norm * psi_limit(q, Y)`` is evaluated at every node.
    Particles of ``Y`` inside ``region`` are an error.
    """
    grid = hyperbolic_quadrature(region, *grid_shape)
    norm = PAPER_NORM_CONSTANT if norm is None else float(norm)
    if psi_values is None:
        if Y is None:
            raise ValueError("need a configuration or explicit psi values")
        if np.any(region.contains(Y.particles)):
            raise DomainError("the conditioning configuration has particles inside B")

        def source(points, _Y=Y, _c=norm):
            return _c * psi_limits(points, _Y, method=method)

        psi = source(grid.nodes)
    else:
        source = None
        psi = np.broadcast_to(np.asarray(psi_values, dtype=float), grid.nodes.shape).copy()
    amp = amplitudes(psi, grid.nodes, form)
    return LEnsemble(region, grid, psi, amp, _weighted_matrix(grid.nodes, grid.weights, amp), form, norm, source)


def eta0(L):
    """Conditional probability of no particle in ``B``: ``1 / det(1 + L)``."""
    return float(math.exp(-np.sum(np.log1p(L.eigenvalues))))


@dataclass
class ConditionalDensityReport:
    m: int
    points: np.ndarray
    density_det_form: float
    density_product_form: float
    eta0: float

    @property
    def rel_diff(self):
        scale = max(abs(self.density_det_form), abs(self.density_product_form), 1e-300)
        return abs(self.density_det_form - self.density_product_form) / scale


def conditional_density(points, L, psi=None):
    """Janossy density of the conditional process at ``points``.

    Densities are against ``prod_j dA(q_j) / (pi (1 - |q_j|^2)^2)``.
    ``density_det_form`` is ``eta0 * det[L(q_j, q_k)]``; ``density_product_form``
    is ``eta0 * prod_{i<j} |blaschke(q_i, q_j)|^2 * prod_i PsiBar_{q_i}(Y)``.
    ``psi`` supplies the normalized functional at ``points`` (otherwise it is
    evaluated from the ensemble's source).
    """
    q = np.atleast_1d(np.asarray(points, dtype=complex))
    e0 = eta0(L)
    m = len(q)
    if m == 0:
        return ConditionalDensityReport(0, q, e0, e0, e0)
    if not np.all(L.region.contains(q)):
        raise DomainError("conditional density points must lie in B")
    psi = L.psi_at(q) if psi is None else np.broadcast_to(np.asarray(psi, dtype=float), q.shape)
    # the functional is a limit of nonnegative partials; a negative extrapolated
    # estimate carries no mass, as in the kernel amplitudes
    psi = np.clip(psi, 0.0, None)
    a = amplitudes(psi, q, L.form)
    km = l_kernel(q[:, None], q[None, :], a[:, None], a[None, :])
    det_form = e0 * float(np.real(np.linalg.det(km)))
    prod = e0 * float(np.prod(psi))
    for i, j in itertools.combinations(range(m), 2):
        prod *= abs(blaschke(q[i], q[j])) ** 2
    if len(np.unique(q)) < m:
        det_form = prod = 0.0
    return ConditionalDensityReport(m, q, det_form, prod, e0)


@dataclass
class CountMoments:
    mean: float
    variance: float
    distribution: np.ndarray


def conditional_count_moments(L, m_max=20):
    """Mean, variance and law of the number of particles in ``B``.

    The count is a sum of independent Bernoulli variables with parameters
    ``mu_i / (1 + mu_i)``.
    """
    mu = L.eigenvalues if isinstance(L, LEnsemble) else np.clip(np.linalg.eigvalsh(L), 0.0, None)
    p = mu / (1.0 + mu)
    return CountMoments(float(p.sum()), float(np.sum(p * (1.0 - p))), bernoulli_count_distribution(p, m_max))


def sample_conditional(L, seed, return_indices=False):
    """Draw from the discretized L-ensemble (spectral algorithm).

    Eigenvector ``i`` is kept with probability ``mu_i / (1 + mu_i)``; the
    points are then drawn one at a time from the projection kernel spanned by
    the kept eigenvectors, which is reduced after each draw.
    """
    rng = np.random.default_rng(seed)
    if isinstance(L, LEnsemble):
        mu, vecs = L.eig
        nodes = L.grid.nodes
    else:
        mu, vecs = np.linalg.eigh(L)
        mu = np.clip(mu, 0.0, None)
        nodes = np.arange(len(mu))
    keep = rng.random(len(mu)) < mu / (1.0 + mu)
    v = vecs[:, keep]
    chosen = []
    while v.shape[1] > 0:
        w = np.sum(np.abs(v) ** 2, axis=1)
        w = np.clip(w, 0.0, None)
        i = int(rng.choice(len(w), p=w / w.sum()))
        chosen.append(i)
        # eliminate coordinate i from the span, then re-orthonormalize
        j = int(np.argmax(np.abs(v[i])))
        pivot = v[:, j] / v[i, j]
        v = np.delete(v - np.outer(pivot, v[i]), j, axis=1)
        if v.shape[1]:
            v, _ = np.linalg.qr(v)
    idx = np.array(chosen, dtype=int)
    return idx if return_indices else nodes[idx]


def principal_minor_sum(matrix):
    """Sum of all principal minors by explicit subset enumeration (oracle, small n)."""
    m = np.asarray(matrix)
    n = m.shape[0]
    if n > 16:
        raise ValueError("exhaustive enumeration is limited to n <= 16")
    total = 1.0
    for k in range(1, n + 1):
        for s in itertools.combinations(range(n), k):
            total += float(np.real(np.linalg.det(m[np.ix_(s, s)])))
    return total


def samples_to_csv(samples):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["draw", "re", "im"])
    for k, pts in enumerate(samples):
        for p in pts:
            w.writerow([k, repr(float(p.real)), repr(float(p.imag))])
    return buf.getvalue()
