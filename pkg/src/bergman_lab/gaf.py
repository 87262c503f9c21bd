"""Zero sets of the Gaussian analytic function ``sum_n a_n z^n`` in the unit disc.

The series is truncated at degree ``N``; zeros are extracted with the
Aberth-Ehrlich iteration and checked against argument-principle counts.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .geom import AnnularSector, Disc, blaschke, hyperbolic_density
from .spectra import region_mean_count
from .rootfind import RootFindingError, aberth

log = logging.getLogger(__name__)

TRUNCATION_TOL = 1e-10
DEFAULT_DEGREE = 1024
DEFAULT_WINDOW = 0.99

__all__ = [
    "GafSample",
    "Configuration",
    "TruncationWarning",
    "derive_seed",
    "required_degree",
    "sample_coefficients",
    "find_roots",
    "sample_gaf",
    "winding_count",
    "zeros_in_window",
    "sample_configurations",
    "CellEstimate",
    "empirical_intensity",
    "empirical_pair_correlation",
    "invariant_pair_correlation",
    "angular_chi2",
]


class TruncationWarning(UserWarning):
    """Degree too small for the requested observation window."""


def derive_seed(master_seed, index):
    """64-bit stream seed for sample ``index`` of a run seeded with ``master_seed``."""
    ss = np.random.SeedSequence([int(master_seed) & 0xFFFFFFFFFFFFFFFF, int(index)])
    hi, lo = ss.generate_state(2, dtype=np.uint32)
    return (int(hi) << 32) | int(lo)


def required_degree(r_cut, tol=TRUNCATION_TOL):
    """Smallest ``N`` with ``r_cut**(2N) / (1 - r_cut**2) < tol``."""
    if not 0.0 < r_cut < 1.0:
        raise ValueError("r_cut must lie in (0, 1)")
    return math.ceil((math.log(tol) + math.log(1.0 - r_cut**2)) / (2.0 * math.log(r_cut)))


@lru_cache(maxsize=64)
def _warn_truncation(degree, r_cut):
    log.warning(
        "degree %d is below the truncation threshold %d for window r_cut=%.4f",
        degree,
        required_degree(r_cut),
        r_cut,
    )


@dataclass
class GafSample:
    seed: int
    degree: int
    coefficients: np.ndarray
    roots_all: np.ndarray | None = None
    resamples: int = 0


@dataclass
class Configuration:
    """Finite particle set observed in the window ``|z| <= window_radius``."""

    particles: np.ndarray
    window_radius: float
    seed: int | None = None
    degree: int | None = None

    def __post_init__(self):
        self.particles = np.asarray(self.particles, dtype=complex).ravel()

    def __len__(self):
        return len(self.particles)

    def count(self, region):
        return int(np.count_nonzero(region.contains(self.particles)))

    def without(self, region):
        """Particles outside ``region`` (the restriction to its complement)."""
        keep = ~region.contains(self.particles)
        return Configuration(self.particles[keep], self.window_radius, self.seed, self.degree)

    def with_particles(self, extra):
        extra = np.atleast_1d(np.asarray(extra, dtype=complex))
        return Configuration(
            np.concatenate([self.particles, extra]), self.window_radius, self.seed, self.degree
        )

    def to_dict(self):
        return {
            "seed": self.seed,
            "degree": self.degree,
            "window_radius": self.window_radius,
            "particles": [[float(p.real), float(p.imag)] for p in self.particles],
        }

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d):
        pts = np.array([complex(x, y) for x, y in d["particles"]], dtype=complex)
        return cls(pts, float(d["window_radius"]), d.get("seed"), d.get("degree"))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def configurations_to_csv(configs):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["sample", "seed", "re", "im"])
    for k, c in enumerate(configs):
        for p in c.particles:
            w.writerow([k, c.seed, repr(float(p.real)), repr(float(p.imag))])
    return buf.getvalue()


def configurations_from_csv(text, window_radius):
    by_sample = {}
    seeds = {}
    for row in csv.DictReader(io.StringIO(text)):
        k = int(row["sample"])
        by_sample.setdefault(k, []).append(complex(float(row["re"]), float(row["im"])))
        seeds[k] = int(row["seed"]) if row["seed"] not in ("", "None") else None
    return [Configuration(np.array(by_sample[k]), window_radius, seeds[k]) for k in sorted(by_sample)]


def sample_coefficients(seed, N):
    """``N + 1`` i.i.d. standard complex Gaussians (``E|a|^2 = 1``)."""
    if N < 1:
        raise ValueError("degree must be >= 1")
    rng = np.random.default_rng(int(seed))
    a = rng.standard_normal((N + 1, 2)) @ np.array([1.0, 1.0j]) / math.sqrt(2.0)
    return GafSample(seed=int(seed), degree=int(N), coefficients=a)


def find_roots(coefficients, seed=None):
    """All roots of ``sum_k coefficients[k] z^k``."""
    return aberth(np.asarray(coefficients, dtype=complex), seed=seed)


def _degenerate(sample, r_check=1.0):
    if abs(sample.coefficients[-1]) < 1e-300:
        return True
    z = sample.roots_all
    inner = z[np.abs(z) < r_check]
    if len(inner) < 2:
        return False
    d = np.abs(inner[:, None] - inner[None, :])
    np.fill_diagonal(d, np.inf)
    return bool(d.min() < 1e-9)


def sample_gaf(seed, N=DEFAULT_DEGREE, max_resamples=8):
    """Coefficients and all roots; degenerate draws are replaced by a sub-seed draw."""
    current = int(seed)
    for attempt in range(max_resamples + 1):
        s = sample_coefficients(current, N)
        if abs(s.coefficients[-1]) >= 1e-300:
            try:
                s.roots_all = find_roots(s.coefficients, seed=current)
            except RootFindingError:
                if attempt == max_resamples:
                    raise
                s.roots_all = None
            if s.roots_all is not None and not _degenerate(s):
                s.seed = int(seed)
                s.resamples = attempt
                return s
        log.info("degenerate GAF draw for seed %d (attempt %d); resampling", seed, attempt)
        current = derive_seed(seed, attempt + 1)
    raise RootFindingError("no usable sample after resampling", seed=seed)


def winding_count(coefficients, r, n_points=None, max_points=1 << 20):
    """Number of zeros in ``|z| < r`` by the argument principle.

    The polynomial is sampled on the circle ``|z| = r`` with an FFT; the
    phase increments are summed (trapezoidal rule for ``(1/2 pi i) ∮ p'/p``).
    The sampling is refined until no increment exceeds ``pi / 4``.
    """
    a = np.asarray(coefficients, dtype=complex)
    n = len(a) - 1
    m = n_points or max(64, 1 << int(math.ceil(math.log2(4 * (n + 1)))))
    scaled = a * r ** np.arange(n + 1)
    while True:
        if m < n + 1:
            m *= 2
            continue
        vals = np.fft.ifft(scaled, m) * m
        if np.any(vals == 0):
            raise ArithmeticError(f"zero on the contour |z| = {r}")
        steps = np.angle(np.roll(vals, -1) / vals)
        if np.max(np.abs(steps)) < math.pi / 4 or m >= max_points:
            break
        m *= 2
    return int(round(np.sum(steps) / (2.0 * math.pi)))


def zeros_in_window(sample, r_cut=DEFAULT_WINDOW):
    """Restrict a sample's zeros to ``|z| <= r_cut``."""
    if not 0.0 <= r_cut < 1.0:
        raise ValueError("r_cut must lie in [0, 1)")
    if r_cut > 0 and sample.degree < required_degree(r_cut):
        _warn_truncation(sample.degree, r_cut)
    z = sample.roots_all
    return Configuration(z[np.abs(z) <= r_cut], r_cut, sample.seed, sample.degree)


def sample_configurations(master_seed, n_samples, N=DEFAULT_DEGREE, r_cut=DEFAULT_WINDOW, start=0):
    """Configurations for samples ``start .. start + n_samples - 1`` of a run.

    Sample ``k`` depends only on ``(master_seed, k)``, so runs can be split and
    merged by index.
    """
    return [
        zeros_in_window(sample_gaf(derive_seed(master_seed, k), N), r_cut)
        for k in range(start, start + n_samples)
    ]


@dataclass
class CellEstimate:
    cell: object
    estimate: float
    std_error: float
    mean_count: float
    n_samples: int
    extra: dict = field(default_factory=dict)


def _region_area(cell):
    if isinstance(cell, Disc):
        return math.pi * cell.radius**2
    if isinstance(cell, AnnularSector):
        return 0.5 * (cell.theta1 - cell.theta0) * (cell.r_outer**2 - cell.r_inner**2)
    raise TypeError(f"unsupported cell {cell!r}")


def _check_cells(configs, cells):
    if len(configs) < 2:
        raise ValueError("need at least two configurations")
    w = min(c.window_radius for c in configs)
    for cell in cells:
        if cell.outer_radius > w:
            raise ValueError(f"cell {cell!r} extends beyond the observation window {w}")


def empirical_intensity(configs, cells):
    """Count-per-area estimates of the first intensity on each cell.

    Standard errors are the sample standard deviation of per-configuration
    counts over ``sqrt(n)``, divided by the cell area.
    """
    _check_cells(configs, cells)
    n = len(configs)
    out = []
    for cell in cells:
        counts = np.array([c.count(cell) for c in configs], dtype=float)
        area = _region_area(cell)
        sd = counts.std(ddof=1)
        if sd == 0.0:
            sd = 1.0  # no events: fall back to a one-count Poisson floor
        out.append(CellEstimate(cell, counts.mean() / area, sd / math.sqrt(n) / area, counts.mean(), n))
    return out


def empirical_pair_correlation(configs, cell_a, cell_b):
    """``E[N_a N_b] / (|a| |b|)`` for disjoint cells, an estimate of ``rho_2``."""
    _check_cells(configs, [cell_a, cell_b])
    prod = np.array([c.count(cell_a) * c.count(cell_b) for c in configs], dtype=float)
    area = _region_area(cell_a) * _region_area(cell_b)
    n = len(configs)
    sd = prod.std(ddof=1) if prod.any() else 1.0
    return CellEstimate((cell_a, cell_b), prod.mean() / area, sd / math.sqrt(n) / area, prod.mean(), n)


def invariant_pair_correlation(configs, anchor_region, rho_lo, rho_hi):
    """Bin-averaged pair correlation ``g`` at pseudo-hyperbolic separation.

    Counts ordered pairs ``(x, y)`` with ``x`` in ``anchor_region`` and
    ``rho_lo <= |blaschke(x, y)| < rho_hi``, normalized by the expected count
    for independent points with the same intensity. Möbius invariance of the
    law makes this an estimate of
    ``int g(t) dmu(t) / int dmu(t)`` over the separation bin.
    """
    _check_cells(configs, [anchor_region])
    # every partner of an anchor particle must lie in the observed window
    far = (anchor_region.outer_radius + rho_hi) / (1.0 + anchor_region.outer_radius * rho_hi)
    if far > min(c.window_radius for c in configs):
        raise ValueError("separation bin reaches outside the observation window")
    pairs = np.zeros(len(configs))
    anchors = np.zeros(len(configs))
    for k, c in enumerate(configs):
        x = c.particles[anchor_region.contains(c.particles)]
        anchors[k] = len(x)
        if len(x) == 0 or len(c) < 2:
            continue
        d = np.abs(blaschke(x[:, None], c.particles[None, :]))
        pairs[k] = np.count_nonzero((d >= rho_lo) & (d < rho_hi) & (d > 0))
    shell = rho_hi**2 / (1 - rho_hi**2) - rho_lo**2 / (1 - rho_lo**2)
    mass = region_mean_count(anchor_region)
    n = len(configs)
    sd = pairs.std(ddof=1) if pairs.any() else 1.0
    return CellEstimate(
        (anchor_region, rho_lo, rho_hi),
        pairs.mean() / (mass * shell),
        sd / math.sqrt(n) / (mass * shell),
        pairs.mean(),
        n,
        {"anchor_mass": mass, "shell_mass": shell, "mean_anchors": anchors.mean()},
    )


def angular_chi2(configs, r_inner, r_outer, n_bins=8):
    """Pearson statistic for uniformity of particle angles in an annulus.

    Returns ``(chi2, dof, counts)``. Determinantal counts are sub-Poissonian,
    so the usual ``chi2`` reference distribution is conservative.
    """
    ang = np.concatenate(
        [np.angle(c.particles[(np.abs(c.particles) >= r_inner) & (np.abs(c.particles) < r_outer)]) for c in configs]
    )
    counts, _ = np.histogram(np.mod(ang, 2 * math.pi), bins=n_bins, range=(0.0, 2 * math.pi))
    expected = counts.sum() / n_bins
    chi2 = float(np.sum((counts - expected) ** 2 / expected)) if expected > 0 else 0.0
    return chi2, n_bins - 1, counts


def intensity(z):
    """First intensity ``K(z, z) = 1 / (pi (1 - |z|^2)^2)``."""
    return hyperbolic_density(z)
