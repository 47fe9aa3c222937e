import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from duetherm.model import EngineParams
from duetherm.response import hybrid_frequency, strong_mode_widths
from duetherm.thermo import (DriveSpectrum, GridSpec, average_power, delta_work_closed, efficiency_of,
                             heat_currents, max_closed_form, monochromatic_parts, p_tilde, power_map,
                             power_monochromatic, power_strong_pi, power_strong_zero, power_weak_limit, project_norms,
                             report, works_and_delta)

P = EngineParams()
# ridge omega1 = omega_B + Omega at the default parameters
RIDGE = P.with_(omega1=0.71)
RIDGE_OMEGA = 0.11


def random_drive(rng, Omega, n_max, norms=(1 / math.sqrt(2), 1 / math.sqrt(2))):
    return DriveSpectrum.from_tilde(Omega, rng.normal(size=(n_max, 2)), norms)


def test_drive_norms():
    d = DriveSpectrum.monochromatic(0.3, 0.7)
    assert d.norm_squared() == pytest.approx([0.5, 0.5], rel=1e-14)
    assert list(d.harmonics()) == [1]
    g = project_norms(np.random.default_rng(0).normal(size=(7, 2)), (0.0, 0.9))
    assert np.all(g[:, 0] == 0)
    assert 2 * np.sum(g[:, 1] ** 2) == pytest.approx(0.81, rel=1e-14)
    with pytest.raises(ValueError):
        DriveSpectrum(0.1, np.ones((2, 2)), (1.0, 1.0))
    with pytest.raises(ValueError):
        DriveSpectrum(0.0, np.ones((1, 2)))


def test_zero_drive():
    d = DriveSpectrum(0.1, np.zeros((3, 2)))
    assert average_power(P, d) == 0.0
    assert heat_currents(P, d) == (0.0, 0.0)


def test_monochromatic_consistency():
    for phi in (0.0, 1.1, math.pi):
        d = DriveSpectrum.monochromatic(RIDGE_OMEGA, phi)
        assert average_power(RIDGE, d, 1e-11, 1e-16) == pytest.approx(
            power_monochromatic(RIDGE, RIDGE_OMEGA, phi, 1e-11, 1e-16), rel=1e-10)


def test_engine_point_signs():
    r = report(RIDGE, DriveSpectrum.monochromatic(RIDGE_OMEGA, 0.0))
    assert r.power < 0 and r.j1 > 0 and r.j2 < 0
    assert not r.not_engine
    assert 0 < r.eta_ratio < 1
    assert abs(r.first_law_residual) <= 1e-6 * max(abs(r.power), abs(r.j1))


def test_ridge_beats_off_ridge():
    on = power_monochromatic(RIDGE, RIDGE_OMEGA, 0.0)
    for w1 in (0.65, 0.78, 0.9):
        assert power_monochromatic(RIDGE.with_(omega1=w1), RIDGE_OMEGA, 0.0) > on


def test_three_harmonic_first_law():
    rng = np.random.default_rng(3)
    for _ in range(3):
        d = random_drive(rng, 0.07, 3)
        r = report(RIDGE, d)
        assert abs(r.first_law_residual) <= 1e-6 * max(abs(r.power), abs(r.j1))


def test_efficiency_helpers():
    assert P.eta_carnot == pytest.approx(1 / 3)
    assert efficiency_of(P, 0.2, 1.0) == (None, None, True)
    assert efficiency_of(P, -0.1, -1.0)[2]
    eta, ratio, flag = efficiency_of(P, -0.1, 1.0)
    assert (eta, ratio, flag) == (pytest.approx(0.1), pytest.approx(0.3), False)
    assert float(p_tilde(P.with_(d1=2.0), -1.0)) == -0.5


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_second_law_and_carnot(seed):
    rng = np.random.default_rng(seed)
    p = P.with_(omega_b=rng.uniform(0.2, 0.9), gamma2=10 ** rng.uniform(-2, 2), omega1=rng.uniform(0.2, 1.8),
                t1=rng.uniform(0.3, 1.0), t2=rng.uniform(0.05, 0.3), topology=rng.choice(["joint", "independent"]))
    d = random_drive(rng, rng.uniform(0.02, 0.6), int(rng.integers(1, 3)))
    r = report(p, d, rel_tol=1e-7)
    assert r.sigma >= -1e-10
    if not r.not_engine:
        assert r.efficiency <= p.eta_carnot + 1e-9


def test_drive_reversal_symmetry():
    d = random_drive(np.random.default_rng(5), 0.1, 2)
    flipped = DriveSpectrum(d.fundamental, -d.coeffs, d.norms)
    assert average_power(RIDGE, flipped) == pytest.approx(average_power(RIDGE, d), rel=1e-12)


def test_phase_periodicity():
    for phi in (0.4, 2.0):
        a = power_monochromatic(RIDGE, RIDGE_OMEGA, phi)
        assert power_monochromatic(RIDGE, RIDGE_OMEGA, phi + 2 * math.pi) == pytest.approx(a, rel=1e-10)
        assert power_monochromatic(RIDGE, RIDGE_OMEGA, -phi) == pytest.approx(a, rel=1e-10)


def test_independent_has_no_phase():
    q = RIDGE.with_(topology="independent")
    a = power_monochromatic(q, RIDGE_OMEGA, 0.0)
    assert power_monochromatic(q, RIDGE_OMEGA, 2.0) == pytest.approx(a, rel=1e-12)


def test_intermediate_phase_never_wins():
    rng = np.random.default_rng(11)
    phis = np.linspace(0, 2 * math.pi, 16, endpoint=False)
    for _ in range(6):
        q = P.with_(gamma2=10 ** rng.uniform(-1, 2), omega1=rng.uniform(0.3, 1.5))
        Om = rng.uniform(0.05, 0.8)
        vals = [power_monochromatic(q, Om, phi, 1e-9) for phi in phis]
        ends = min(vals[0], vals[8])
        assert min(vals) >= ends - 1e-9 * abs(ends)


def test_parts_reassemble_phase_dependence():
    w1 = np.array([0.5, 0.71, 1.3])
    diag, cross = monochromatic_parts(P, RIDGE_OMEGA, w1, rel_tol=1e-10)
    for k, c in enumerate(w1):
        for phi in (0.0, 2.2):
            assert diag[k] + math.cos(phi) * cross[k] == pytest.approx(
                power_monochromatic(P.with_(omega1=c), RIDGE_OMEGA, phi, 1e-10), rel=1e-7)


def test_weak_limit_matches_quadrature():
    p = P.with_(gamma2=1e-4, omega1=0.71)
    for phi in (0.0, math.pi):
        assert power_monochromatic(p, RIDGE_OMEGA, phi) == pytest.approx(float(power_weak_limit(p, RIDGE_OMEGA)), rel=1e-2)


def test_weak_limit_trivial_cases():
    assert float(power_weak_limit(P, 0.0)) == 0.0
    q = P.with_(t1=0.5, t2=0.5)
    Om, w1 = np.meshgrid(np.linspace(0.01, 1.2, 60), np.linspace(0.01, 2.0, 60), indexing="ij")
    assert np.all(power_weak_limit(q, Om, w1) >= 0)


def test_strong_limits():
    p = P.with_(gamma2=1e4)
    wbar = hybrid_frequency(p)
    q = p.with_(omega1=wbar + 0.2)
    assert power_monochromatic(q, 0.2, math.pi) == pytest.approx(float(power_strong_pi(q, 0.2)), rel=1e-2)
    # off the omega1 = Omega ridge, where the slow mode is narrow against the filter
    for w1, Om in ((0.8, 0.3), (1.2, 0.2)):
        r = p.with_(omega1=w1)
        p0 = float(power_strong_zero(r, Om))
        assert p0 > 0
        assert power_monochromatic(r, Om, 0.0) == pytest.approx(p0, rel=1e-2)
        assert power_monochromatic(r.with_(topology="independent"), Om, 0.0) == pytest.approx(p0, rel=1e-2)


def test_strong_pi_ridge_works():
    p = P.with_(gamma2=100.0)
    wbar = hybrid_frequency(p)
    for Om in (0.05, 0.15, 0.25, 0.35):
        assert power_monochromatic(p.with_(omega1=wbar + Om), Om, math.pi) < 0


def test_delta_work_closed_forms():
    p = P.with_(gamma2=1e4, gamma1=1e-3)
    wbar = hybrid_frequency(p)
    d4 = (1 - 0.36) ** 2 / 4
    j = 1.0 / 1e-3 / 0.4  # J1 at the filter centre, d1 = 1
    assert delta_work_closed(p, 0.4, 0.0) == pytest.approx(2 * math.pi * 0.4 * wbar**2 / (wbar**4 - d4) * j, rel=1e-12)
    with pytest.raises(ValueError):
        delta_work_closed(p, 0.4, 1.0)


def test_outer_works_vanish_for_sharp_filter():
    p = P.with_(gamma2=1e4)
    ratios = []
    for g1 in (1e-2, 1e-3, 1e-4):
        w = works_and_delta(p.with_(gamma1=g1), 0.4, 0.0)
        ratios.append((abs(w.w1) + abs(w.w3)) / abs(w.w2))
    assert ratios[0] > ratios[1] > ratios[2]
    assert ratios[2] < 1e-2


def test_work_combinations_against_closed_forms():
    p = P.with_(gamma2=1e4, gamma1=1e-3)
    w_pi = works_and_delta(p, 0.4, math.pi)
    assert w_pi.delta == pytest.approx(w_pi.delta_closed, rel=2e-2)
    # the phi = 0 combination carries the slow-mode width z2 convolved with the filter
    w0 = works_and_delta(p, 0.4, 0.0)
    z2 = strong_mode_widths(p)[1]
    assert w0.delta == pytest.approx(w0.delta_closed / (1 + 2 * z2 / p.gamma1), rel=2e-3)


@pytest.mark.xfail(strict=True, reason="slow-mode width is 5% of the filter width at gamma1 = 1e-3; see test_work_combinations_against_closed_forms")
def test_phi0_work_combination_uncorrected_closed_form():
    w0 = works_and_delta(P.with_(gamma2=1e4, gamma1=1e-3), 0.4, 0.0)
    assert w0.delta == pytest.approx(w0.delta_closed, rel=2e-2)


def test_small_map_structure():
    grid = GridSpec(1.2, 2.0, 24, 40)
    pm = power_map(P, grid)
    assert pm.p_tilde.shape == (24, 40)
    assert np.all(pm.p_tilde <= np.minimum(pm.at(0.0), pm.at(math.pi)) + 1e-15)
    i, j = pm.argmin()
    assert pm.p_tilde[i, j] < 0
    rows = list(pm.rows())
    assert len(rows) == 24 * 40 and rows[0][:2] == (grid.omega1s()[0], grid.omegas()[0])
    ind = power_map(P.with_(topology="independent"), grid)
    assert np.all(ind.cross == 0)


def test_closed_form_regular_on_grid():
    g = GridSpec(n_omega=400, n_omega1=400)
    vals = power_weak_limit(P.with_(gamma2=1e-4), g.omegas()[:, None], g.omega1s()[None, :])
    # Omega = omega_B is a grid node, where J1 and N are 0 and infinite separately
    assert np.all(np.isfinite(vals))


def test_closed_form_optima_lie_on_ridges():
    o = max_closed_form(P.with_(gamma2=1e-4), "weak")
    assert o.p_tilde_max > 0
    assert o.omega1_star == pytest.approx(P.omega_b + o.omega_star, abs=0.01)
    q = P.with_(gamma2=1e-4, omega1=o.omega1_star)
    assert -float(power_weak_limit(q, o.omega_star)) == pytest.approx(o.p_tilde_max, rel=1e-12)
    s = max_closed_form(P.with_(gamma2=1e4), "strong_pi")
    assert s.p_tilde_max > 0 and s.phi_star == math.pi
    assert s.omega1_star == pytest.approx(hybrid_frequency(P) + s.omega_star, abs=0.01)
