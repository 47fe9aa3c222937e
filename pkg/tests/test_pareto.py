import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from duetherm.model import EngineParams
from duetherm.pareto import (FrontPoint, FundamentalMismatch, OptimizerConfig, ParetoFront, build_forms, certificate,
                             convex_points, dominance_filter, eta_from_sigma, evaluate, evaluate_heat, max_power_point,
                             min_sigma_point, optimize_point, sigma_ladder, spectral_support, trace_front, upper_hull)
from duetherm.thermo import DriveSpectrum, average_power, heat_currents, power_monochromatic, report

P = EngineParams(omega1=0.71)
OMEGA = 0.02
NORMS = (1 / math.sqrt(2), 1 / math.sqrt(2))


@pytest.fixture(scope="module")
def forms():
    return build_forms(P, OMEGA, 20)


@pytest.fixture(scope="module")
def front_run(forms):
    return trace_front(P, OMEGA, 20, ladder_size=8, seeds=(0, 1), forms=forms)


def drive_of(forms, g):
    return DriveSpectrum(forms.fundamental, g)


def test_blocks_symmetric(forms):
    for blocks in (forms.ip_blocks, forms.isigma_blocks, forms.ij2_blocks):
        assert np.allclose(blocks, np.swapaxes(blocks, 1, 2), rtol=0, atol=1e-12 * np.max(np.abs(blocks)))


def test_equal_temperatures_sigma_block():
    q = P.with_(t1=0.5, t2=0.5)
    f = build_forms(q, OMEGA, 4)
    assert np.array_equal(f.isigma_blocks, f.ip_blocks / 0.5)


def test_independent_blocks_diagonal():
    f = build_forms(P.with_(topology="independent"), OMEGA, 6)
    for blocks in (f.ip_blocks, f.isigma_blocks, f.ij2_blocks):
        assert np.all(blocks[:, 0, 1] == 0) and np.all(blocks[:, 1, 0] == 0)


@pytest.mark.parametrize("n,sign,phi", [(3, 1.0, 0.0), (6, 1.0, 0.0), (6, -1.0, math.pi), (11, -1.0, math.pi)])
def test_single_harmonic_matches_monochromatic(forms, n, sign, phi):
    g = np.zeros((forms.n_max, 2))
    g[n - 1] = [0.5, 0.5 * sign]
    power, _ = evaluate(forms, drive_of(forms, g))
    assert power == pytest.approx(power_monochromatic(P, n * OMEGA, phi), rel=1e-6)


def test_evaluate_trivial_cases(forms):
    zero = drive_of(forms, np.zeros((forms.n_max, 2)))
    assert evaluate(forms, zero) == (0.0, 0.0)
    g = np.random.default_rng(2).normal(size=(forms.n_max, 2))
    a = evaluate(forms, drive_of(forms, g))
    b = evaluate(forms, drive_of(forms, 3 * g))
    assert b == pytest.approx((9 * a[0], 9 * a[1]), rel=1e-13)
    with pytest.raises(FundamentalMismatch):
        evaluate(forms, DriveSpectrum(0.03, g))
    with pytest.raises(FundamentalMismatch):
        evaluate(forms, DriveSpectrum(OMEGA, np.ones((forms.n_max + 1, 2))))


def test_blocks_match_direct_pipeline(forms):
    rng = np.random.default_rng(4)
    for _ in range(3):
        d = DriveSpectrum.from_tilde(OMEGA, rng.normal(size=(8, 2)), NORMS)
        power, sigma = evaluate(forms, d)
        r = report(P, d)
        assert power == pytest.approx(r.power, rel=1e-6)
        assert sigma == pytest.approx(r.sigma, rel=1e-6)
        j1, j2 = evaluate_heat(forms, d)
        assert (j1, j2) == pytest.approx(heat_currents(P, d), rel=1e-6)


def test_two_harmonic_optimum_against_angle_scan():
    # with two harmonics each oscillator's coefficients lie on a circle
    f = build_forms(P, 0.055, 2)
    th = np.linspace(0, 2 * np.pi, 100, endpoint=False)
    ca, sa = np.cos(th), np.sin(th)
    r = NORMS[0] / math.sqrt(2)
    ip = f.ip_blocks
    ga = gb = r * np.stack([ca, sa])  # (harmonic, angle)
    vals = (np.einsum("na,n->a", ga**2, ip[:, 0, 0])[:, None] + np.einsum("nb,n->b", gb**2, ip[:, 1, 1])[None, :]
            + 2 * np.einsum("na,nb,n->ab", ga, gb, ip[:, 0, 1]))
    scan = float(vals.min())
    best = max_power_point(f, NORMS, seeds=(0, 1), config=OptimizerConfig(iterations=8000))
    assert best.power <= scan + 1e-12
    assert best.power == pytest.approx(scan, rel=2e-3)


def test_max_power_certified_and_sigma_target_recovers_it(forms):
    mx = max_power_point(forms, NORMS, seeds=(0, 1, 2))
    assert mx.certified
    for seed in range(5):
        r = optimize_point(forms, mx.sigma, NORMS, seed)
        assert r.converged
        assert -r.power == pytest.approx(-mx.power, rel=5e-3)


def test_certificate_rejects_a_random_drive(forms):
    d = DriveSpectrum.from_tilde(OMEGA, np.random.default_rng(0).normal(size=(forms.n_max, 2)), NORMS)
    assert not certificate(forms.ip_blocks, d, forms).holds()


def test_zero_norm_oscillator(forms):
    r = optimize_point(forms, None, (0.0, 0.8), seed=1, config=OptimizerConfig(iterations=4000))
    assert np.all(r.drive.coeffs[:, 0] == 0)
    assert r.drive.norm_squared()[1] == pytest.approx(0.64, rel=1e-12)


def test_log_ascent_schedule_runs(forms):
    mx = max_power_point(forms, NORMS, seeds=(0,))
    cfg = OptimizerConfig.log_ascent(iterations=4000)
    r = optimize_point(forms, 0.8 * mx.sigma, NORMS, 0, cfg)
    assert math.isfinite(r.power) and r.multiplier is not None


def test_min_sigma_below_max_power_sigma(forms):
    mn = min_sigma_point(forms, NORMS)
    mx = max_power_point(forms, NORMS)
    assert 0 < mn.sigma < mx.sigma


def test_sigma_ladder():
    lad = sigma_ladder(1.0)
    assert len(lad) == 24 and lad[0] == pytest.approx(0.02) and lad[-1] == pytest.approx(1.0)
    assert np.allclose(np.diff(np.log(lad)), np.log(50) / 23)
    assert sigma_ladder(1.0, sigma_floor=0.1)[0] == pytest.approx(0.115)
    assert list(sigma_ladder(1.0, sigma_floor=1.0)) == [1.0]


def test_front_shape(front_run):
    pts = front_run.front.points
    assert len(pts) >= 5
    sig = [q.sigma for q in pts]
    neg = [q.neg_power for q in pts]
    assert all(np.diff(sig) > 0) and all(np.diff(neg) > 0)
    for q in front_run.front.runs:
        assert q.drive.norm_squared() == pytest.approx([0.5, 0.5], rel=1e-12)
    ids = {id(q) for q in pts}
    assert all(id(q) in ids for q in front_run.front.eta_front)
    # trade-off: the most powerful point is the least efficient engine on the front
    engines = [q for q in pts if q.eta is not None]
    assert engines[-1].eta < max(q.eta for q in engines)


def test_front_weakly_convex(front_run):
    pts = front_run.front.points
    xs = np.array([q.sigma for q in pts])
    ys = np.array([q.neg_power for q in pts])
    slopes = np.diff(ys) / np.diff(xs)
    assert np.all(np.diff(slopes) <= 1e-3 * np.max(np.abs(slopes)))


def test_eta_from_sigma_matches_heat_currents(front_run):
    p = front_run.front.params
    for q in front_run.front.points[::3]:
        if q.eta is None:
            continue
        r = report(p, q.drive)
        assert q.eta == pytest.approx(-r.power / r.j1, rel=1e-4)


def test_convex_points_sparse(front_run):
    for q in convex_points(front_run.front):
        assert spectral_support(q.drive).count <= 2


def test_independent_max_power_on_ridge():
    q = EngineParams(omega1=0.7096, topology="independent")
    f = build_forms(q, OMEGA, 40)
    mx = max_power_point(f, NORMS, seeds=(0, 1))
    assert mx.certified
    sup = spectral_support(mx.drive)
    assert sup.count <= 2
    # oscillator B's ridge omega1 = omega_B + Omega carries the drive
    assert sup.frequencies[0] == pytest.approx(0.7096 - 0.6, abs=OMEGA)


def test_spectral_support_counts():
    g = np.zeros((30, 2))
    g[9] = [0.5, 0.5]
    assert spectral_support(DriveSpectrum(0.1, g)).count == 1
    g[10] = [0.1, 0.0]
    g[25] = [0.3, 0.0]
    s = spectral_support(DriveSpectrum(0.1, g))
    assert s.count == 2 and s.clusters[0] == [10, 11] and s.clusters[1] == [26]
    assert spectral_support(DriveSpectrum(0.1, np.zeros((3, 2)))).count == 0


def test_dominance_and_hull_helpers():
    pts = [(1, 1), (2, 0.5), (2, 3), (3, 2.5), (4, 4)]
    kept = dominance_filter(pts, lambda q: q[0], lambda q: q[1])
    assert kept == [(1, 1), (2, 3), (4, 4)]
    assert upper_hull([0, 1, 2, 3], [0, 2, 3, 3.1]) == [0, 1, 2, 3]
    assert upper_hull([0, 1, 2], [0, 0.2, 2]) == [0, 2]


def test_single_point_front():
    d = DriveSpectrum.monochromatic(OMEGA)
    fp = FrontPoint(0.3, -0.1, eta_from_sigma(P, 0.3, -0.1), d, True)
    front = ParetoFront(P, [fp])
    assert front.points == [fp] and front.eta_front == [fp]
    assert eta_from_sigma(P, 0.3, 0.1) is None
    assert fp.eta == pytest.approx(P.eta_carnot / (1 + 0.3 * 0.4 / 0.1))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 10), st.floats(-5, 5)), min_size=1, max_size=30))
def test_dominance_filter_property(raw):
    kept = dominance_filter(raw, lambda q: q[0], lambda q: q[1])
    for k in kept:
        assert not any(o[0] <= k[0] and o[1] > k[1] for o in raw)
    assert all(b[1] > a[1] for a, b in zip(kept, kept[1:]))
