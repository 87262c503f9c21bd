import math

import numpy as np
import pytest

from bergman_lab import gaf
from bergman_lab.geom import AnnularSector, Disc
from bergman_lab.rootfind import aberth, evaluate, initial_guesses


def _match(a, b):
    """Largest distance in an optimal greedy pairing of two root lists."""
    b = list(b)
    worst = 0.0
    for z in a:
        k = int(np.argmin(np.abs(np.array(b) - z)))
        worst = max(worst, abs(b.pop(k) - z))
    return worst


@pytest.mark.parametrize("n", [1, 2, 5, 30])
def test_aberth_matches_companion_eigenvalues(n, rng):
    a = rng.standard_normal(n + 1) + 1j * rng.standard_normal(n + 1)
    z = aberth(a)
    ref = np.roots(a[::-1])
    assert len(z) == n
    assert _match(z, ref) < 1e-9


def test_aberth_known_roots():
    # (z - 1)(z - 2)(z + 0.5i)
    roots = np.array([1.0, 2.0, -0.5j])
    a = np.polynomial.polynomial.polyfromroots(roots)
    assert _match(aberth(a), roots) < 1e-12


def test_aberth_zero_roots():
    a = np.array([0, 0, 1.0, 1.0])  # z^2 (1 + z)
    z = np.sort_complex(aberth(a))
    assert np.allclose(z, [-1, 0, 0], atol=1e-10)


def test_aberth_gaf_degree_1024_residuals():
    s = gaf.sample_coefficients(3, 1024)
    z = aberth(s.coefficients)
    assert len(z) == 1024
    z = z[np.abs(z) < 1.0]  # backward error inside the disc, where the zeros are used
    scale = np.polynomial.polynomial.polyval(np.abs(z), np.abs(s.coefficients))
    assert np.max(np.abs(evaluate(s.coefficients, z)) / scale) < 1e-12


def test_initial_guesses_count():
    a = np.ones(17)
    assert len(initial_guesses(a)) == 16


def test_aberth_rejects_zero_leading():
    with pytest.raises(ValueError):
        aberth(np.array([1.0, 0.0]))


def test_derive_seed_deterministic_and_distinct():
    assert gaf.derive_seed(7, 3) == gaf.derive_seed(7, 3)
    assert len({gaf.derive_seed(7, k) for k in range(1000)}) == 1000
    assert gaf.derive_seed(7, 0) != gaf.derive_seed(8, 0)


def test_required_degree():
    n = gaf.required_degree(0.99)
    assert 0.99 ** (2 * n) / (1 - 0.99**2) < 1e-10 <= 0.99 ** (2 * (n - 1)) / (1 - 0.99**2)
    assert n == 1341


def test_truncation_warning_logged(caplog):
    gaf._warn_truncation.cache_clear()
    s = gaf.sample_gaf(1, 64)
    with caplog.at_level("WARNING"):
        gaf.zeros_in_window(s, 0.99)
    assert "truncation threshold" in caplog.text


def test_sample_gaf_reproducible():
    a = gaf.sample_gaf(11, 128)
    b = gaf.sample_gaf(11, 128)
    assert np.array_equal(a.coefficients, b.coefficients)
    assert np.array_equal(a.roots_all, b.roots_all)


def test_coefficients_are_standard_complex_gaussian():
    a = gaf.sample_coefficients(0, 200000).coefficients
    assert np.mean(np.abs(a) ** 2) == pytest.approx(1.0, abs=0.01)
    assert abs(np.mean(a * a)) < 0.01


@pytest.mark.parametrize("seed", [1, 2, 3, 4])
@pytest.mark.parametrize("r", [0.5, 0.9])
def test_winding_count_agrees_with_roots(seed, r):
    s = gaf.sample_gaf(seed, 256)
    assert gaf.winding_count(s.coefficients, r) == int(np.sum(np.abs(s.roots_all) < r))


def test_winding_count_simple():
    a = np.polynomial.polynomial.polyfromroots([0.1, 0.5j, 0.8])
    assert gaf.winding_count(a, 0.6) == 2


def test_configuration_roundtrips(rng):
    c = gaf.Configuration(rng.uniform(-0.5, 0.5, 10) + 1j * rng.uniform(-0.5, 0.5, 10), 0.99, 5, 1024)
    for back in (gaf.Configuration.from_json(c.to_json()), gaf.Configuration.from_dict(c.to_dict())):
        assert np.array_equal(back.particles, c.particles)
        assert (back.seed, back.degree, back.window_radius) == (5, 1024, 0.99)
    text = gaf.configurations_to_csv([c, c])
    back = gaf.configurations_from_csv(text, 0.99)
    assert len(back) == 2 and np.array_equal(back[1].particles, c.particles)


def test_configuration_without_and_with(rng):
    c = gaf.Configuration([0.1, 0.5, -0.7j], 0.99)
    y = c.without(Disc(0, 0.4))
    assert len(y) == 2 and y.count(Disc(0, 0.4)) == 0
    assert len(y.with_particles(0.2)) == 3


def test_sample_configurations_split_merge():
    whole = gaf.sample_configurations(5, 4, N=128, r_cut=0.9)
    tail = gaf.sample_configurations(5, 2, N=128, r_cut=0.9, start=2)
    assert all(np.array_equal(a.particles, b.particles) for a, b in zip(whole[2:], tail))
    assert all(np.all(np.abs(c.particles) <= 0.9) for c in whole)


def test_intensity_formula():
    assert gaf.intensity(0.0) == pytest.approx(1 / math.pi)


def test_empirical_intensity_poisson_floor():
    configs = [gaf.Configuration([], 0.99) for _ in range(4)]
    (est,) = gaf.empirical_intensity(configs, [Disc(0, 0.1)])
    assert est.estimate == 0 and est.std_error > 0


def test_cells_must_fit_window():
    configs = [gaf.Configuration([], 0.5) for _ in range(3)]
    with pytest.raises(ValueError):
        gaf.empirical_intensity(configs, [AnnularSector(0.4, 0.6)])


def test_angular_chi2_uniform(rng):
    configs = [gaf.Configuration(0.5 * np.exp(2j * np.pi * rng.uniform(size=50)), 0.99) for _ in range(20)]
    chi2, dof, counts = gaf.angular_chi2(configs, 0.4, 0.6)
    assert dof == 7 and counts.sum() == 1000 and chi2 < 30


def test_gaf_mean_count_small_run():
    # 300 draws at degree 256: E #{|z|<0.5} = 1/3
    configs = gaf.sample_configurations(21, 300, N=256, r_cut=0.9)
    counts = np.array([c.count(Disc(0, 0.5)) for c in configs])
    se = counts.std(ddof=1) / math.sqrt(len(counts))
    assert abs(counts.mean() - 1 / 3) < 4 * se
