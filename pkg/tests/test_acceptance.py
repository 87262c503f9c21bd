"""Acceptance suite: one verdict line per criterion.

The Monte Carlo criteria share two independent runs of 2000 GAF samples at
degree 1024 and window 0.99 (set ``BERGMAN_LAB_CACHE`` to reuse samples
between sessions).
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from bergman_lab import functional as fn
from bergman_lab import spectra as sp
from bergman_lab.harness import experiments as ex
from bergman_lab.harness.config import ExperimentConfig

from conftest import cache_dir

CFG = ExperimentConfig(master_seed=7, samples=2000, conditional_samples=1000, cache_dir=cache_dir())


@pytest.fixture(scope="session")
def run_a():
    t0 = time.perf_counter()
    configs = ex.load_or_sample(CFG.master_seed, CFG.samples, CFG.degree, CFG.window, CFG.cache_dir)
    return configs, time.perf_counter() - t0


@pytest.fixture(scope="session")
def run_b():
    seed = CFG.master_seed + CFG.calibration_seed_offset
    return ex.load_or_sample(seed, CFG.samples, CFG.degree, CFG.window, CFG.cache_dir)


@pytest.fixture(scope="session")
def identities():
    return ex.run_identity_suite(CFG)


def _rows(rep, *names):
    return [rep.row(n) for n in names]


def test_criterion_1_intensity(run_a, report_criterion):
    configs, t_sample = run_a
    rep = ex.run_intensity_check(CFG, configs)
    runtime = t_sample + rep.runtime
    row = rep.row("rho1(0)")
    others = [r for r in rep.rows if not r.informational]
    ok = row.passed and runtime <= 600 and len(configs) >= 2000
    detail = (
        f"rho1(0) = {row.estimate:.4f} +- {row.std_error:.4f} vs 1/pi = {1 / math.pi:.5f} (z = {row.z_score:+.2f}); "
        f"{len(configs)} samples in {runtime:.0f} s; other intensity rows "
        f"{sum(r.passed for r in others)}/{len(others)} pass"
    )
    report_criterion(1, "intensity at 0", ok, detail)
    assert ok
    assert rep.passed, "\n".join(rep.summary_lines())


def test_criterion_2_exact_determinants(report_criterion):
    t0 = time.perf_counter()
    spectrum = sp.radial_eigenvalues("one_minus_s", 10**6)
    exact = all(sp.det_truncated(spectrum, n, +1, exact=True) == Fraction(n + 3, 2) for n in range(21))
    minus, plus = sp.det2(spectrum, -1), sp.det2(spectrum, +1)
    runtime = time.perf_counter() - t0
    ok = exact and abs(minus.value - 0.655198) < 1e-3 and abs(plus.value - 0.763129) < 1e-3 and runtime <= 1.0
    detail = (
        f"(n+3)/2 exact for n<=20: {exact}; det2(1-K1) = {minus.value:.6f} (tail <= {minus.tail_bound:.1e}), "
        f"det2(1+K1) = {plus.value:.6f}; {runtime:.2f} s"
    )
    report_criterion(2, "exact determinant identities", ok, detail)
    assert ok


@pytest.fixture(scope="session")
def psi_report(run_a, run_b):
    return ex.run_psi_expectation(CFG, run_a[0], calibration_configs=run_b)


def test_criterion_3_psi_adjudication(psi_report, report_criterion):
    rep = psi_report
    winner = rep.notes["winner"]
    z = {label: rep.row(f"E Psi_0 vs {label}").z_score for label in ex.CANDIDATES}
    cal = rep.row("E PsiBar_0 (calibrated, independent run) = 1")
    ok = winner is not None and rep.row("adjudication: exactly one candidate within 3 se").passed and cal.passed
    detail = (
        f"E Psi_0 = {rep.notes['psi_mean_q0']:.4f} +- {rep.notes['psi_se_q0']:.4f}; z = "
        + ", ".join(f"{v:+.1f} [{k.split(' ')[0]}]" for k, v in z.items())
        + f"; winner: {winner}; calibrated constant {rep.notes['calibrated_constant']:.4f}, "
        f"independent-run mean of PsiBar = {cal.estimate:.4f} +- {cal.std_error:.4f}"
    )
    report_criterion(3, "expectation of the regularized functional", ok, detail)
    assert ok, "\n".join(rep.summary_lines())


def test_criterion_3_supporting_rows(psi_report):
    for name in (
        "E Psi_q vs det2(1-K1), q=(0.4+0j)",
        "q-independence: E Psi_q((0.4+0j)) - E Psi_q(0)",
        "calibrated constant vs 1/det2(1-K1)",
    ):
        assert psi_report.row(name).passed, psi_report.row(name).line()


def test_criterion_4_compensator(report_criterion):
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(20):
        q = 0.95 * math.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform())
        R = rng.uniform(0.0, 5.0)
        c = fn.compensator(R)
        worst = max(worst, abs(math.exp(fn.compensator_quadrature(q, R)) - c) / c)
    log3 = math.exp(fn.compensator_quadrature(0.0, math.log(3)))
    runtime = time.perf_counter() - t0
    ok = worst <= 1e-8 and abs(log3 - 4 / 3) <= 1e-8 and runtime <= 10
    detail = f"worst relative gap {worst:.1e} over 20 (q, R<=5); R=log 3 gives {log3:.12f}; {runtime:.1f} s"
    report_criterion(4, "compensator closed form vs quadrature", ok, detail)
    assert ok


def test_criterion_5_cauchy(identities, report_criterion):
    rand, det2x2, fac2x2 = _rows(
        identities,
        "Cauchy determinant vs factored form (100 sets, n<=6)",
        "Cauchy n=2 {0.5,-0.5} determinant",
        "Cauchy n=2 {0.5,-0.5} factored",
    )
    ok = rand.passed and det2x2.passed and fac2x2.passed
    detail = (
        f"worst relative gap {rand.estimate:.1e} over 100 sets; n=2: {det2x2.estimate:.12f} and "
        f"{fac2x2.estimate:.12f} vs 256/225 = {256 / 225:.12f}"
    )
    report_criterion(5, "Cauchy identity", ok, detail)
    assert ok


def test_criterion_6_conditional_total_expectation(run_a, report_criterion):
    configs = run_a[0][: CFG.conditional_samples]
    rep = ex.run_conditional_verification(CFG, configs)
    rows = _rows(rep, "E eta0", "E conditional mean count", "E P(#B=1 | Y)")
    ok = all(r.passed for r in rows) and len(configs) >= 1000 and rep.runtime <= 3600
    detail = "; ".join(
        f"{r.name} = {r.estimate:.5f} +- {r.std_error:.5f} vs {r.oracle_value:.6f} (z = {r.z_score:+.2f})" for r in rows
    )
    plain = rep.row("E eta0 [plain amplitudes]")
    detail += (
        f"; {len(configs)} samples, {rep.runtime:.0f} s; plain amplitudes give E eta0 z = {plain.z_score:+.1f}"
    )
    report_criterion(6, "conditional law on disc(0, 0.4)", ok, detail)
    assert ok, "\n".join(rep.summary_lines())


def test_criterion_7_density_forms(run_a, report_criterion):
    rep = ex.run_density_equivalence(CFG, run_a[0][:50])
    row = rep.rows[0]
    ok = row.passed
    report_criterion(7, "determinant vs product density", ok, f"worst relative gap {row.estimate:.1e} (tol 1e-10)")
    assert ok


def test_criterion_8_multiplicative(identities, report_criterion):
    row = identities.row("multiplicative property, 10000 add-a-particle trials (relative)")
    report_criterion(8, "multiplicative property", row.passed, f"worst relative gap {row.estimate:.1e} over 1e4 trials")
    assert row.passed


def test_criterion_9_l_ensemble(identities, report_criterion):
    minors = identities.row("det(I+L) vs sum of principal minors (12 nodes)")
    samp = ex.run_sampler_check(CFG, n_draws=10000)
    chi = samp.row("sampler count law chi2")
    ok = minors.passed and chi.passed and samp.passed
    detail = (
        f"det(I+L) vs minor sum worst gap {minors.estimate:.1e}; sampler chi2 = {chi.estimate:.2f} "
        f"on {int(chi.oracle_value)} dof (z = {chi.z_score:+.2f}) over 1e4 draws"
    )
    report_criterion(9, "L-ensemble normalization and sampler", ok, detail)
    assert ok
