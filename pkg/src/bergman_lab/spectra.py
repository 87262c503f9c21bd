"""Bergman kernel, radial spectra and determinant oracles.

For a radial weight ``g(z) = g~(|z|^2)`` the operator ``sqrt(g) K sqrt(g)`` is
diagonal in the monomials, with eigenvalues

    lambda_k = (k + 1) * int_0^1 g~(s) s^k ds,        k = 0, 1, ...

Every determinant in this package has two routes: products over these
eigenvalues, and Nyström matrices on a quadrature grid.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import integrate

from .geom import AnnularSector, Disc, DomainError, HyperbolicBall, QuadratureGrid

__all__ = [
    "bergman_kernel",
    "weighted_bergman_kernel",
    "RadialSpectrum",
    "radial_eigenvalues",
    "det_truncated",
    "trace_truncated",
    "Det2Result",
    "det2",
    "hole_probability_disc",
    "count_distribution_disc",
    "bernoulli_count_distribution",
    "region_mean_count",
    "KernelMatrix",
    "nystrom_restrict",
    "fredholm_det",
]


def bergman_kernel(z, w):
    """``1 / (pi (1 - z conj(w))^2)``, vectorized with broadcasting."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    if (z.size and np.max(np.abs(z)) >= 1.0) or (w.size and np.max(np.abs(w)) >= 1.0):
        raise DomainError("Bergman kernel arguments must lie in the open unit disc")
    out = 1.0 / (math.pi * (1.0 - z * np.conj(w)) ** 2)
    return complex(out) if out.ndim == 0 else out


def weighted_bergman_kernel(z, w):
    """``sqrt(1 - |z|^2) K(z, w) sqrt(1 - |w|^2)``."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    return np.sqrt(1.0 - np.abs(z) ** 2) * bergman_kernel(z, w) * np.sqrt(1.0 - np.abs(w) ** 2)


@dataclass
class RadialSpectrum:
    """Eigenvalues ``lambda_0 .. lambda_{k_max}`` of a radial-symbol operator.

    ``tail_sq`` bounds ``sum_{k > k_max} lambda_k^2`` when known (presets);
    ``exact`` holds rational eigenvalues when they exist.
    """

    symbol: str
    eigenvalues: np.ndarray
    tail_sq: float = math.nan
    tail_max: float = math.nan
    exact: list | None = field(default=None, repr=False)

    @property
    def k_max(self):
        return len(self.eigenvalues) - 1

    def to_dict(self, values=True):
        d = {"symbol": self.symbol, "k_max": self.k_max, "tail_bound": self.tail_sq}
        if values:
            d["values"] = self.eigenvalues.tolist()
        return d


def _eigen_callable(g, k_max, epsabs=1e-13):
    # s = exp(-u / (k+1)) turns (k+1) int g(s) s^k ds into int_0^inf g(e^{-u/(k+1)}) e^{-u} du
    lam = np.empty(k_max + 1)
    for k in range(k_max + 1):
        c = k + 1.0
        val, err, *rest = integrate.quad(
            lambda u: g(math.exp(-u / c)) * math.exp(-u), 0.0, math.inf, epsabs=epsabs, epsrel=1e-12, limit=200,
            full_output=1,
        )
        if len(rest) > 1 and err > 1e-10:
            raise ArithmeticError(f"eigenvalue quadrature failed at k={k}: {rest[1]}")
        lam[k] = val
    return lam


def radial_eigenvalues(symbol, k_max, r=None):
    """Spectrum of ``sqrt(g) K sqrt(g)`` for a radial weight.

    ``symbol`` is a callable ``g~(s)`` on ``[0, 1]`` or one of the presets

    ``"one_minus_s"``
        ``g~(s) = 1 - s``, i.e. ``g(z) = 1 - |z|^2``; ``lambda_k = 1/(k+2)``.
    ``"one"``
        the projection itself; ``lambda_k = 1``.
    ``"disc"``
        indicator of ``|z| < r``; ``lambda_k = r^(2(k+1))``.
    ``"one_minus_s_disc"``
        ``(1 - |z|^2)`` restricted to ``|z| < r``;
        ``lambda_k = t^(k+1) - (k+1)/(k+2) t^(k+2)`` with ``t = r^2``.
    """
    k = np.arange(k_max + 1, dtype=float)
    if callable(symbol):
        name = getattr(symbol, "__name__", "callable")
        return RadialSpectrum(name, _eigen_callable(symbol, k_max))
    if symbol == "one_minus_s":
        tail = 1.0 / (k_max + 2)  # sum_{m > k_max + 2} 1/m^2 < 1/(k_max + 2)
        exact = [Fraction(1, j + 2) for j in range(min(k_max, 200) + 1)]
        return RadialSpectrum(symbol, 1.0 / (k + 2.0), tail, 1.0 / (k_max + 3), exact)
    if symbol == "one":
        return RadialSpectrum(symbol, np.ones(k_max + 1), math.inf, 1.0, [Fraction(1)] * (min(k_max, 200) + 1))
    if r is None or not 0.0 <= r < 1.0:
        raise ValueError(f"preset {symbol!r} needs a radius r in [0, 1)")
    t = r * r
    if symbol == "disc":
        lam = t ** (k + 1.0)
        nxt = t ** (k_max + 2.0)
        return RadialSpectrum(f"disc(r={r})", lam, nxt * nxt / (1.0 - t * t), nxt)
    if symbol == "one_minus_s_disc":
        lam = t ** (k + 1.0) * (1.0 - (k + 1.0) / (k + 2.0) * t)
        nxt = t ** (k_max + 2.0)
        return RadialSpectrum(f"one_minus_s_disc(r={r})", lam, nxt * nxt / (1.0 - t * t), nxt)
    raise ValueError(f"unknown radial symbol {symbol!r}")


def det_truncated(spectrum, n, sign=1, exact=False):
    """``prod_{k=0}^{n} (1 + sign * lambda_k)``.

    With ``exact=True`` the product is taken over the rational eigenvalues and
    returned as a :class:`fractions.Fraction`.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if n > spectrum.k_max:
        raise ValueError(f"n={n} exceeds k_max={spectrum.k_max}")
    if exact:
        if spectrum.exact is None or n >= len(spectrum.exact):
            raise ValueError("no exact eigenvalues available for this spectrum")
        out = Fraction(1)
        for lam in spectrum.exact[: n + 1]:
            out *= 1 + sign * lam
        return out
    return float(np.prod(1.0 + sign * spectrum.eigenvalues[: n + 1]))


def trace_truncated(spectrum, n, exact=False):
    """``sum_{k=0}^{n} lambda_k`` (all ``n + 1`` eigenvalues)."""
    if exact:
        return sum(spectrum.exact[: n + 1], Fraction(0))
    return float(np.sum(spectrum.eigenvalues[: n + 1]))


@dataclass
class Det2Result:
    value: float
    log_value: float
    tail_bound: float
    k_max: int
    sign: int
    symbol: str

    def to_dict(self):
        return {
            "symbol": self.symbol,
            "sign": self.sign,
            "k_max": self.k_max,
            "value": self.value,
            "log_value": self.log_value,
            "tail_bound": self.tail_bound,
        }


def det2(spectrum, sign=1, k_max=None):
    """Carleman determinant ``prod (1 + s lambda_k) exp(-s lambda_k)`` with tail bound.

    ``tail_bound`` bounds the absolute change of the value from the omitted
    eigenvalues ``k > k_max``, using
    ``|log(1 + x) - x| <= x^2 / (2 (1 - |x|))``.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    lam = spectrum.eigenvalues if k_max is None else spectrum.eigenvalues[: k_max + 1]
    x = sign * lam
    if np.any(x <= -1.0):
        return Det2Result(0.0, -math.inf, 0.0, len(lam) - 1, sign, spectrum.symbol)
    # log1p(x) - x loses digits for tiny x; the series is exact enough there
    small = np.abs(x) < 1e-4
    terms = np.where(small, -(x**2) / 2 + x**3 / 3 - x**4 / 4, np.log1p(x) - x)
    logv = float(math.fsum(terms))
    if k_max is None or k_max == spectrum.k_max:
        tail_sq, tail_max = spectrum.tail_sq, spectrum.tail_max
    else:
        rest = spectrum.eigenvalues[k_max + 1 :]
        tail_sq = float(np.sum(rest**2)) + (spectrum.tail_sq if math.isfinite(spectrum.tail_sq) else math.nan)
        tail_max = float(rest.max()) if len(rest) else spectrum.tail_max
    log_tail = tail_sq / (2.0 * (1.0 - tail_max)) if tail_max < 1 else math.inf
    value = math.exp(logv)
    bound = value * math.expm1(log_tail) if log_tail < 700.0 else math.inf
    return Det2Result(value, logv, bound, len(lam) - 1, sign, spectrum.symbol)


def hole_probability_disc(r, cutoff=1e-14):
    """``P(no zero in |z| < r) = prod_{k >= 1} (1 - r^(2k))``."""
    if not 0.0 <= r < 1.0:
        raise ValueError("r must lie in [0, 1)")
    if r == 0.0:
        return 1.0
    t = r * r
    out = 1.0
    term = t
    while term >= cutoff:
        out *= 1.0 - term
        term *= t
    return out


def bernoulli_count_distribution(probs, m_max):
    """Law of a sum of independent Bernoulli(p_i), truncated to ``0..m_max``.

    Coefficients of ``prod_i (1 - p_i + p_i s)``.
    """
    dist = np.zeros(m_max + 1)
    dist[0] = 1.0
    for p in np.asarray(probs, dtype=float):
        if p == 0.0:
            continue
        dist[1:] = dist[1:] * (1.0 - p) + dist[:-1] * p
        dist[0] *= 1.0 - p
    return dist


def _disc_eigenvalues(r, cutoff=1e-16):
    t = r * r
    n = 1 if t == 0 else max(1, int(math.ceil(math.log(cutoff) / math.log(t))))
    return t ** np.arange(1, n + 1, dtype=float)


def count_distribution_disc(r, m):
    """``P(#{|z| < r} = m)`` for the Bergman process."""
    if not 0.0 < r < 1.0:
        raise ValueError("r must lie in (0, 1)")
    if m < 0:
        raise ValueError("m must be >= 0")
    return float(bernoulli_count_distribution(_disc_eigenvalues(r), m)[m])


def region_mean_count(region):
    """Expected number of zeros in a disc, ball or annular sector (closed form).

    Every Euclidean disc inside the unit disc is a hyperbolic ball of some
    pseudo-radius ``rho``, and the invariant measure of such a ball is
    ``rho^2 / (1 - rho^2)``.
    """
    if isinstance(region, HyperbolicBall):
        rho = region.pseudo_radius
        return rho * rho / (1.0 - rho * rho)
    if isinstance(region, Disc):
        c, r = abs(region.center), region.radius
        if c + r >= 1.0:
            raise DomainError("disc must lie inside the unit disc")
        # pseudo-distance between the diameter endpoints c - r and c + r
        delta = 2.0 * r / (1.0 - (c * c - r * r))
        rho = delta / (1.0 + math.sqrt(1.0 - delta * delta))
        return rho * rho / (1.0 - rho * rho)
    if isinstance(region, AnnularSector):
        f = lambda t: t * t / (1.0 - t * t)  # noqa: E731
        return (region.theta1 - region.theta0) / (2.0 * math.pi) * (f(region.r_outer) - f(region.r_inner))
    raise TypeError(f"unsupported region {region!r}")


@dataclass
class KernelMatrix:
    """Nyström matrix ``k(z_i, z_j) sqrt(w_i w_j)`` on a quadrature grid."""

    grid: QuadratureGrid
    matrix: np.ndarray
    measure: str

    def eigenvalues(self):
        return np.linalg.eigvalsh(self.matrix)

    def trace(self):
        return float(np.real(np.trace(self.matrix)))


def nystrom_restrict(kernel, grid, measure="area"):
    """Restrict ``kernel`` to the grid region.

    ``measure`` selects which grid weights discretize the kernel's reference
    measure: ``"area"`` (Lebesgue, for the Bergman kernel itself) or
    ``"hyperbolic"`` (``dA / (pi (1 - |z|^2)^2)``).
    """
    w = grid.area_weights if measure == "area" else grid.weights
    sw = np.sqrt(w)
    z = grid.nodes
    m = kernel(z[:, None], z[None, :]) * sw[:, None] * sw[None, :]
    m = 0.5 * (m + np.conj(m.T))
    return KernelMatrix(grid, m, measure)


def fredholm_det(matrix, shift=1):
    """``det(I + shift * M)`` for Hermitian ``M`` via its eigenvalues."""
    m = matrix.matrix if isinstance(matrix, KernelMatrix) else np.asarray(matrix)
    if m.size == 0:
        return 1.0
    ev = np.linalg.eigvalsh(m)
    return float(np.prod(1.0 + shift * ev))


def spectrum_report(spectrum, det2_result=None, values=False):
    d = spectrum.to_dict(values=values)
    if det2_result is not None:
        d["det2"] = det2_result.to_dict()
    return json.dumps(d)
