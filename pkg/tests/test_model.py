import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from duetherm.model import (CONFIG_KEYS, EngineParams, ParamError, SpectralDensity, Topology, coth, load_config,
                            lorentzian, ohmic_drude, thermal_factor, validate_params, x_coth)


def kinds(err):
    return {k for k, _, _ in err.issues}


def test_defaults_are_valid():
    p = validate_params({"omega_b": 0.6, "gamma2": 0.1, "t1": 0.6, "t2": 0.4, "gamma1": 0.01})
    assert p == EngineParams()
    assert p.topology is Topology.JOINT


def test_resonant_rejected():
    with pytest.raises(ParamError) as exc:
        validate_params({"omega_b": 1.0})
    assert "Resonant" in kinds(exc.value)


def test_negative_damping_rejected():
    with pytest.raises(ParamError) as exc:
        validate_params({"gamma2": -0.1})
    assert "NonPositive" in kinds(exc.value)


def test_all_violations_listed_at_once():
    with pytest.raises(ParamError) as exc:
        validate_params({"gamma2": 10, "t1": 0, "t2": -1, "omega_c": 5.0, "bogus": 1})
    got = kinds(exc.value)
    assert {"NonPositive", "Cutoff", "UnknownKey"} <= got
    fields = [f for _, f, _ in exc.value.issues]
    assert "t1" in fields and "t2" in fields


def test_cutoff_follows_damping():
    assert validate_params({"gamma2": 100}).omega_c == pytest.approx(1e4)
    assert validate_params({}).omega_c == 1e3
    with pytest.raises(ParamError):
        validate_params({"gamma2": 100, "omega_c": 1e3})


def test_with_revalidates_and_raises_cutoff():
    p = EngineParams().with_(gamma2=1e4)
    assert p.omega_c == pytest.approx(1e6)
    with pytest.raises(ParamError):
        EngineParams().with_(omega_b=1.2)


def test_empty_config_lists_every_key(tmp_path):
    path = tmp_path / "empty.json"
    path.write_text("{}")
    with pytest.raises(ParamError) as exc:
        load_config(path)
    assert [f for k, f, _ in exc.value.issues if k == "Missing"] == list(CONFIG_KEYS)


def test_partial_config_completed(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"gamma2": 100, "topology": "independent", "n_max": 50}))
    p = load_config(path)
    assert p.gamma2 == 100 and p.topology is Topology.INDEPENDENT and p.t2 == 0.4


def test_spectral_density_values():
    assert float(ohmic_drude(1.0, 0.1)) == pytest.approx(0.1, rel=1e-15)
    assert float(lorentzian(0.0, 1.0, 0.01, 0.8)) == 0.0
    assert float(lorentzian(0.8, 1.0, 0.01, 0.8)) == pytest.approx(125.0, rel=1e-12)
    # independent evaluation at w^2 = w1^2: J = d g w / (g^2 w^2)
    assert float(lorentzian(0.8, 1.0, 0.01, 0.8)) == pytest.approx(1.0 / (0.01 * 0.8), rel=1e-12)


def test_spectral_density_objects():
    p = EngineParams()
    assert SpectralDensity.static_bath(p)(1.0) == pytest.approx(0.1 / (1 + 1e-6))
    assert SpectralDensity.driven_bath(p)(0.8) == pytest.approx(125.0)


@pytest.mark.parametrize("sd", [SpectralDensity.static_bath(EngineParams()),
                                SpectralDensity.static_bath(EngineParams(), math.inf),
                                SpectralDensity.driven_bath(EngineParams())])
def test_spectral_density_odd_and_positive(sd):
    w = np.random.default_rng(0).uniform(0, 5, 1000)
    j = sd(w)
    assert np.all(j >= 0)
    assert np.all(np.abs(j + sd(-w)) <= 1e-14 * np.abs(j))


def test_thermal_factor_cancels_at_equal_temperatures():
    w = np.linspace(-3, 3, 1001)
    w = w[w != 0]
    assert np.all(thermal_factor(w, 0.0, 0.5, 0.5) == 0.0)


def test_thermal_factor_saturates():
    assert abs(float(thermal_factor(1e3, 0.3, 0.6, 0.4))) < 1e-12


def test_thermal_factor_on_ridge_sign():
    # coth(1.1246/1.2) - coth(0.8246/0.8), evaluated from exponentials
    def c(x):
        return (math.exp(2 * x) + 1) / (math.exp(2 * x) - 1)
    ref = c(1.1246 / 1.2) - c(0.8246 / 0.8)
    got = float(thermal_factor(0.8246, 0.3, 0.6, 0.4))
    assert got == pytest.approx(ref, rel=1e-12)
    assert got > 0


def test_omega_times_thermal_factor_finite_at_zero():
    for shift in (0.1, 0.5, 1.3):
        lo = 1e-8 * float(thermal_factor(1e-8, shift, 0.6, 0.4))
        hi = -1e-8 * float(thermal_factor(-1e-8, shift, 0.6, 0.4))
        assert lo == pytest.approx(-0.8, rel=1e-6)
        assert hi == pytest.approx(lo, rel=1e-6)


def test_coth_series_branch_continuous():
    for x in (9.99e-4, 1.0001e-3, 1e-6, -5e-4):
        exact = math.cosh(x) / math.sinh(x)
        assert coth(x) == pytest.approx(exact, rel=1e-14)
    assert x_coth(0.0, 0.4) == pytest.approx(0.8)


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-6, 50), st.floats(0.01, 5))
def test_x_coth_matches_definition(x, t):
    u = x / (2 * t)
    assert x_coth(x, t) == pytest.approx(x * math.cosh(u) / math.sinh(u) if u < 300 else x, rel=1e-12)
    assert x_coth(-x, t) == pytest.approx(x_coth(x, t), rel=1e-15)
