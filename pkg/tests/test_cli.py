import csv
import json
import pathlib

import numpy as np
import pytest

from isodyn import cli
from isodyn.core import CODATA
from isodyn.dynamics import MotionHistory, kepler_period, orbit_period
from isodyn.radiation import OrbitConfig
from isodyn.scenario import (
    ScenarioError, ValidationError, build_sources, build_test_particles, canonical_json,
    load_scenario, parse_scenario, scenario_orbit,
)
from isodyn.verify import CheckResult

FIXTURES = pathlib.Path(__file__).resolve().parents[1] / "scenarios"


def write(tmp_path, obj, name="s.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


class TestParse:

    def test_minimal_defaults(self):
        sc = parse_scenario('{"run": {"kind": "spectrum"}, "D": 3}')
        assert sc.D == 3 and sc.g2over4pi == 1.0 and sc.seed == 0 and sc.constants is None

    def test_earth_fixture(self):
        sc = load_scenario(FIXTURES / "earth_radiation.json")
        assert scenario_orbit(sc) == OrbitConfig(5.972e24, 1.496e11, 9.94e-5)

    def test_cos_theta_path(self):
        doc = {"run": {"kind": "spectrum"}, "sources": [{"mass": 1.0}],
               "test_particles": [{"mass": 1.0, "position": [1, 0, 0], "cos_theta": 2}]}
        with pytest.raises(ValidationError) as err:
            parse_scenario(json.dumps(doc))
        assert "test_particles.0.cos_theta" in str(err.value)

    @pytest.mark.parametrize("doc", [
        {"run": {"kind": "spectrum"}, "colour": "red"},
        {"run": {"kind": "spectrum", "speed": 1}},
        {"run": {"kind": "spectrum"}, "sources": [{"mass": -1.0}]},
        {"run": {"kind": "simulate", "steps": 10}},
        {"run": {"kind": "decay", "companion_mass": 1.0, "duration": 1.0, "dt": -1.0}},
        {"run": {"kind": "spectrum"}, "D": 9},
        {"run": {"kind": "spectrum"}, "outputs": ["trajectory.csv"]},
        {"run": {"kind": "spectrum"}, "D": 2, "sources": [{"mass": 1.0, "charge_direction": [1, 0, 0]}]},
    ])
    def test_rejects(self, doc):
        with pytest.raises(ValidationError):
            parse_scenario(json.dumps(doc))

    @pytest.mark.parametrize("name", sorted(p.name for p in FIXTURES.glob("*.json")))
    def test_round_trip(self, name):
        sc = load_scenario(FIXTURES / name)
        text = canonical_json(sc)
        assert parse_scenario(text) == sc
        assert canonical_json(parse_scenario(text)) == text


class TestBuild:

    def test_test_direction_single(self):
        doc = {"D": 3, "run": {"kind": "spectrum"}, "sources": [{"mass": 2.0, "charge_direction": [0, 1, 0]}],
               "test_particles": [{"mass": 3.0, "position": [1, 0, 0], "cos_theta": 0.25}]}
        sc = parse_scenario(json.dumps(doc))
        srcs = build_sources(sc)
        (p, state), = build_test_particles(sc, srcs)
        K, Q = srcs[0][0].charge, p.charge
        assert K @ Q / (np.linalg.norm(K) * np.linalg.norm(Q)) == pytest.approx(0.25, abs=1e-14)
        assert np.linalg.norm(Q) == pytest.approx(3.0 * CODATA.c, rel=1e-15)

    def test_test_direction_two_sources(self):
        doc = {"D": 3, "run": {"kind": "spectrum"},
               "sources": [{"mass": 1.0, "charge_direction": [1, 0, 0]}, {"mass": 1.0, "charge_direction": [0, 1, 0]}],
               "test_particles": [{"mass": 1.0, "position": [1, 0, 0], "cos_theta": [-0.6, 0.0]}]}
        sc = parse_scenario(json.dumps(doc))
        (p, _), = build_test_particles(sc)
        u = p.charge / np.linalg.norm(p.charge)
        assert u[0] == pytest.approx(-0.6) and u[1] == pytest.approx(0.0, abs=1e-15)

    def test_cos_theta_impossible(self):
        doc = {"D": 2, "run": {"kind": "spectrum"},
               "sources": [{"mass": 1.0, "charge_direction": [1, 0]}, {"mass": 1.0, "charge_direction": [0, 1]}],
               "test_particles": [{"mass": 1.0, "position": [1, 0, 0], "cos_theta": [-0.9, -0.9]}]}
        with pytest.raises(ScenarioError):
            build_test_particles(parse_scenario(json.dumps(doc)))

    def test_explicit_charge(self):
        doc = {"D": 2, "run": {"kind": "spectrum"},
               "sources": [{"mass": 1.0, "mass_locked": False, "charge": [3.0, 4.0]}]}
        (p, traj), = build_sources(parse_scenario(json.dumps(doc)))
        assert list(p.charge) == [3.0, 4.0] and not p.mass_locked

    def test_constants_override(self):
        doc = {"run": {"kind": "spectrum"}, "constants": {"c": 1.0, "G": 1.0, "hbar": 1.0}}
        from isodyn.scenario import build_constants
        assert build_constants(parse_scenario(json.dumps(doc))).m_P == 1.0


class TestRun:

    def test_radiation_earth(self, tmp_path):
        assert cli.main(["radiation", "--scenario", str(FIXTURES / "earth_radiation.json"),
                         "--out", str(tmp_path), "--quiet"]) == 0
        report = json.loads((tmp_path / "radiation.json").read_text())
        assert report["power_W"] == pytest.approx(2.6e10, rel=0.05)
        assert set(report) >= {"power_W", "method", "quadrature_order", "R_m", "relative_change"}

    def test_simulate_kepler_period(self, tmp_path):
        assert cli.main(["simulate", "--scenario", str(FIXTURES / "kepler_simulate.json"),
                         "--out", str(tmp_path), "--quiet"]) == 0
        rows = np.loadtxt(tmp_path / "trajectory.csv", delimiter=",", skiprows=1)
        pos = np.column_stack([CODATA.c * rows[:, 1], rows[:, 2:5]])
        u = np.column_stack([rows[:, 8], rows[:, 5:8]])
        h = MotionHistory(rows[:, 0], pos, u, rows[:, 9])
        T = kepler_period(7.0e6, 5.972e24)
        assert abs(orbit_period(h) / T - 1) < 1e-6

    def test_deterministic(self, tmp_path):
        for d in ("a", "b"):
            cli.main(["field-map", "--scenario", str(FIXTURES / "field_map_circular.json"),
                      "--out", str(tmp_path / d), "--quiet"])
            cli.main(["verify", "--scenario", str(FIXTURES / "verify.json"), "--out", str(tmp_path / d), "--quiet"])
        for name in ("field_map.csv", "verify.json", "scenario.canonical.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_field_map_shape(self, tmp_path):
        cli.main(["field-map", "--scenario", str(FIXTURES / "field_map_circular.json"), "--out", str(tmp_path), "--quiet"])
        rows = list(csv.reader(open(tmp_path / "field_map.csv")))
        assert rows[0] == ["x", "y", "z", "t", "M", "e1", "e2", "e3", "b1", "b2", "b3"]
        assert len(rows) == 1 + 2 * 25 * 2

    def test_spectrum_and_decay(self, tmp_path):
        assert cli.main(["spectrum", "--scenario", str(FIXTURES / "spectrum.json"), "--out", str(tmp_path), "--quiet"]) == 0
        rows = list(csv.reader(open(tmp_path / "spectrum.csv")))
        assert rows[1][:3] == ["1", repr(np.pi * CODATA.m_P), "3"]
        assert cli.main(["decay", "--scenario", str(FIXTURES / "binary_decay.json"), "--out", str(tmp_path), "--quiet"]) == 0
        lines = (tmp_path / "decay.csv").read_text().splitlines()
        assert lines[0].startswith("#") and lines[1] == "t,rho,E,P"

    def test_outputs_filter(self, tmp_path):
        doc = json.loads((FIXTURES / "binary_decay.json").read_text())
        doc["outputs"] = ["decay.json"]
        assert cli.main(["decay", "--scenario", write(tmp_path, doc), "--out", str(tmp_path / "o"), "--quiet"]) == 0
        assert sorted(p.name for p in (tmp_path / "o").iterdir()) == ["decay.json", "scenario.canonical.json"]

    def test_seed_flag(self, tmp_path):
        cli.main(["verify", "--scenario", str(FIXTURES / "verify.json"), "--out", str(tmp_path), "--seed", "99", "--quiet"])
        assert json.loads((tmp_path / "verify.json").read_text())["seed"] == 99
        canon = parse_scenario((tmp_path / "scenario.canonical.json").read_text())
        assert canon.seed == 99


class TestExitCodes:

    def test_input_error(self, tmp_path, capsys):
        path = write(tmp_path, {"run": {"kind": "spectrum"}, "D": 0})
        assert cli.main(["spectrum", "--scenario", path]) == 2
        assert "D" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert cli.main(["spectrum", "--scenario", str(tmp_path / "nope.json")]) == 2

    def test_bad_json(self, tmp_path):
        p = tmp_path / "x.json"
        p.write_text("{not json")
        assert cli.main(["spectrum", "--scenario", str(p)]) == 2

    def test_kind_mismatch(self, tmp_path):
        assert cli.main(["radiation", "--scenario", str(FIXTURES / "spectrum.json"), "--out", str(tmp_path)]) == 2

    def test_numeric_failure(self, tmp_path):
        doc = {"D": 1, "sources": [{"mass": 1.0}],
               "run": {"kind": "field-map", "grid": {"x": {"min": 0, "max": 0}, "y": {"min": 0, "max": 0},
                                                       "z": {"min": 0, "max": 0}}}}
        assert cli.main(["field-map", "--scenario", write(tmp_path, doc), "--out", str(tmp_path), "--quiet"]) == 3

    def test_verify_failure(self, tmp_path, monkeypatch):
        monkeypatch.setattr(cli, "run_suite", lambda seed, trials, consts: [CheckResult("x", False, 1.0, 0.0)])
        assert cli.main(["verify", "--scenario", str(FIXTURES / "verify.json"), "--out", str(tmp_path), "--quiet"]) == 1

    def test_verify_clean(self, tmp_path):
        assert cli.main(["verify", "--scenario", str(FIXTURES / "verify.json"), "--out", str(tmp_path), "--quiet"]) == 0
        assert json.loads((tmp_path / "verify.json").read_text())["all_passed"] is True
