import cmath
import math
import os
import pathlib

import pytest

import dwlab

CONFIGS = pathlib.Path(os.environ.get("DWLAB_CONFIG_DIR", pathlib.Path(__file__).parents[2] / "configs"))


def test_version_and_profiles():
    assert dwlab.__version__
    assert len(dwlab.list_profiles()) == 6
    assert dwlab.Profile.scale_invariant(0.5).kind == "ScaleInvariant"


def test_coefficients():
    p = dwlab.Profile.scale_invariant(2.0)
    assert dwlab.eval_b(p, 1.0) == pytest.approx(1.0)
    assert dwlab.eval_lambda(p, 3.0) == pytest.approx(4.0)
    assert dwlab.eval_recip_primitive(dwlab.Profile.power(1.0, 0.5), 3.0) == pytest.approx(2.0)
    assert dwlab.classify_regime(dwlab.Profile.power(1.0, 2.0))["kind"] == "OverDamping"
    with pytest.raises(dwlab.DomainError):
        dwlab.eval_b(p, -1.0)


def test_solver_matches_oracle():
    p = dwlab.Profile.constant(1.0)
    times = [1.0, 5.0, 20.0]
    for (t, got) in zip(times, dwlab.solve_fundamental(p, 0.3, times)):
        want = dwlab.oracle_constant(1.0, 0.3, t)
        assert max(abs(a - b) for a, b in zip(got, want)) < 1e-8


def test_free_oscillator():
    (phi1, phi2, _, _), = dwlab.solve_fundamental(dwlab.Profile.zero(), 2.0, [1.0])
    assert phi1 == pytest.approx(math.cos(2.0), abs=1e-9)
    assert phi2 == pytest.approx(1j * math.sin(2.0) / 2.0, abs=1e-9)


def test_zones_and_parabolic():
    p = dwlab.Profile.constant(1.0)
    assert dwlab.classify_point(p, 10.0, 5.0) == "HyperbolicZone"
    assert dwlab.parabolic_multiplier(p, 0.5, 4.0) == pytest.approx(math.exp(-1.0))


def test_decay_curve_and_fit():
    times = [10.0 * 10 ** (i / 8) for i in range(9)]
    curve = dwlab.l2_norm_curve(dwlab.Profile.scale_invariant(0.5), times)
    assert all(v <= 1.0 + 1e-6 for v in curve["values"])
    fit = dwlab.fit_decay(curve["times"], curve["values"], "PowerOfShifted", 10.0, 1000.0)
    assert fit["exponent"] == pytest.approx(-0.25, abs=0.05)
    pred = dwlab.predicted_energy_exponent(dwlab.Profile.scale_invariant(0.5))
    assert pred["exponent_in_t"] == pytest.approx(-0.25)


def test_wave_operator_zero_profile():
    xi = 1.5
    w = dwlab.wave_operator(dwlab.Profile.zero(), xi, [10.0, 100.0, 1000.0, 10000.0])
    assert w["certified"]
    assert abs(w["w_plus"][0][0] - xi / math.sqrt(1 + xi * xi)) < 1e-10
    assert abs(w["w_plus"][1][1] - 1.0) < 1e-10
    assert abs(w["w_plus"][0][1]) < 1e-10


def test_config_round(tmp_path):
    assert dwlab.validate_config(CONFIGS / "zone_map.json") == 2
    code, statuses = dwlab.run_config(CONFIGS / "zone_map.json", tmp_path)
    assert code == 0
    assert set(statuses.values()) == {"passed"}
    assert (tmp_path / "report.md").exists()
    with pytest.raises(dwlab.ConfigError):
        dwlab.validate_config(CONFIGS / "failing" / "bad_kind.json")
