import math

import numpy as np
import pytest

from bergman_lab import conditional as cond
from bergman_lab import functional as fn
from bergman_lab.gaf import Configuration, sample_configurations
from bergman_lab.geom import Disc, DomainError, blaschke

from conftest import random_disc_points


def test_cauchy_two_points():
    c = cond.cauchy_det([0.5, -0.5])
    assert c.det == pytest.approx(256 / 225, rel=1e-14)
    assert c.factored == pytest.approx(256 / 225, rel=1e-14)
    assert c.off_diagonal_only == pytest.approx(0.64, rel=1e-14)


def test_cauchy_random(rng):
    for _ in range(100):
        n = int(rng.integers(1, 7))
        assert cond.cauchy_det(random_disc_points(rng, n)).rel_diff < 1e-10


def test_cauchy_edge_cases():
    assert cond.cauchy_det([]).det == 1.0
    assert cond.cauchy_det([0.2, 0.2]).det == 0.0
    with pytest.raises(DomainError):
        cond.cauchy_det([1.0])


def test_l_kernel_scalar_and_vector():
    assert cond.l_kernel(0, 0, 2.0, 3.0) == 6.0
    q = np.array([0.1, 0.2j])
    m = cond.l_kernel(q[:, None], q[None, :], 1.0, 1.0)
    assert np.allclose(m, np.conj(m.T))


def test_amplitudes_forms():
    nodes = np.array([0.0, 0.5])
    assert np.allclose(cond.amplitudes([4.0, 4.0], nodes, "palm"), [2.0, math.sqrt(3.0)])
    assert np.allclose(cond.amplitudes([4.0, -1.0], nodes, "plain"), [4.0, -1.0])
    assert cond.amplitudes([-1.0], np.array([0.1]), "palm")[0] == 0.0
    with pytest.raises(ValueError):
        cond.amplitudes([1.0], nodes[:1], "other")


def test_palm_matrix_with_unit_functional():
    region = Disc(0, 0.4)
    L = cond.build_l_ensemble(None, region, (12, 24), psi_values=1.0)
    z, w = L.grid.nodes, np.sqrt(L.grid.weights)
    d = np.sqrt(1 - np.abs(z) ** 2)
    ref = w[:, None] * w[None, :] * d[:, None] * d[None, :] / (1 - z[:, None] * np.conj(z[None, :]))
    assert np.allclose(L.matrix, ref, atol=1e-14)
    assert np.all(L.eigenvalues >= 0)


def test_principal_minor_sum(rng):
    L = cond.build_l_ensemble(None, Disc(0, 0.4), (3, 4), psi_values=rng.uniform(0.2, 3, 12))
    assert cond.principal_minor_sum(L.matrix) == pytest.approx(float(np.prod(1 + L.eigenvalues)), rel=1e-10)
    with pytest.raises(ValueError):
        cond.principal_minor_sum(np.eye(17))


def test_count_moments_match_minor_enumeration(rng):
    import itertools

    L = cond.build_l_ensemble(None, Disc(0, 0.4), (2, 4), psi_values=rng.uniform(0.5, 5, 8))
    m = L.matrix
    Z = cond.principal_minor_sum(m)
    p1 = sum(float(np.real(m[i, i])) for i in range(8)) / Z
    mom = cond.conditional_count_moments(L, m_max=8)
    assert mom.distribution[1] == pytest.approx(p1, rel=1e-10)
    assert mom.distribution[0] == pytest.approx(cond.eta0(L), rel=1e-12)
    assert mom.distribution.sum() == pytest.approx(1.0, abs=1e-12)
    mean = sum(
        k * float(np.real(np.linalg.det(m[np.ix_(s, s)]))) for k in range(1, 9) for s in itertools.combinations(range(8), k)
    ) / Z
    assert mom.mean == pytest.approx(mean, rel=1e-10)
    # raw matrices are accepted too
    assert cond.conditional_count_moments(m).mean == pytest.approx(mom.mean)


def test_sampler_reproducible_and_in_range(rng):
    L = cond.build_l_ensemble(None, Disc(0, 0.4), (3, 4), psi_values=rng.uniform(0.5, 3, 12))
    a = cond.sample_conditional(L, 99)
    b = cond.sample_conditional(L, 99)
    assert np.array_equal(a, b)
    idx = cond.sample_conditional(L, 5, return_indices=True)
    assert len(set(idx.tolist())) == len(idx)
    assert np.all(L.region.contains(a))


def test_sampler_singleton_law(rng):
    # for a 2-node ensemble the law is explicit
    m = np.array([[2.0, 0.5], [0.5, 1.0]])
    Z = np.linalg.det(np.eye(2) + m)
    draws = [tuple(sorted(cond.sample_conditional(m, k, return_indices=True).tolist())) for k in range(20000)]
    freq = {s: draws.count(s) / len(draws) for s in [(), (0,), (1,), (0, 1)]}
    expect = {(): 1 / Z, (0,): 2 / Z, (1,): 1 / Z, (0, 1): np.linalg.det(m) / Z}
    for s, p in expect.items():
        assert abs(freq[s] - p) < 4 * math.sqrt(p * (1 - p) / len(draws))


@pytest.fixture(scope="module")
def gaf_outside():
    configs = sample_configurations(3, 3, N=512, r_cut=0.97)
    return [c.without(Disc(0, 0.4)) for c in configs]


def test_density_forms_agree_palm(gaf_outside, rng):
    norm = fn.oracle_norm_constant()
    for Y in gaf_outside:
        L = cond.build_l_ensemble(Y, norm=norm)
        for m in range(1, 5):
            pts = 0.4 * random_disc_points(rng, m, 1.0)
            rep = cond.conditional_density(pts, L)
            assert rep.rel_diff < 1e-10
            assert rep.eta0 == pytest.approx(cond.eta0(L))


def test_density_forms_differ_plain(gaf_outside):
    L = cond.build_l_ensemble(gaf_outside[0], norm=fn.oracle_norm_constant(), form="plain")
    rep = cond.conditional_density([0.1, -0.2j], L)
    assert rep.rel_diff > 1e-3


def test_density_rejects_points_outside_b(gaf_outside):
    L = cond.build_l_ensemble(gaf_outside[0])
    with pytest.raises(DomainError):
        cond.conditional_density([0.5], L)
    assert cond.conditional_density([], L).density_det_form == cond.eta0(L)


def test_build_rejects_particles_in_b():
    with pytest.raises(DomainError):
        cond.build_l_ensemble(Configuration([0.1], 0.99))
    with pytest.raises(ValueError):
        cond.build_l_ensemble(None)


def test_ensemble_summary_and_psi_at(gaf_outside):
    import json

    L = cond.build_l_ensemble(gaf_outside[1], norm=1.0)
    d = json.loads(L.to_json())
    assert d["grid_shape"] == [12, 24] and 0 < d["eta0"] <= 1
    assert L.psi_at([0.1])[0] == pytest.approx(fn.psi_limit(0.1, gaf_outside[1]).limit)
    fixed = cond.build_l_ensemble(None, psi_values=1.0)
    with pytest.raises(ValueError):
        fixed.psi_at([0.0])


def test_palm_density_single_point_is_palm_ratio(gaf_outside, rng):
    # one particle at q: density = eta0 * PsiBar_q, and PsiBar_q(Y) = lim prod |phi_q|^2 * compensator * c
    Y = gaf_outside[2]
    L = cond.build_l_ensemble(Y, norm=2.0)
    q = 0.2 + 0.1j
    rep = cond.conditional_density([q], L)
    assert rep.density_product_form == pytest.approx(rep.eta0 * 2.0 * max(fn.psi_limit(q, Y).limit, 0), rel=1e-12)
    assert abs(blaschke(q, q)) == 0


def test_samples_csv():
    text = cond.samples_to_csv([np.array([0.1 + 0.2j]), np.array([])])
    assert text.splitlines() == ["draw,re,im", "0,0.1,0.2"]
