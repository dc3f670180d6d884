import json
import math
import subprocess
import sys

import jsonschema
import numpy as np
import pytest
from referencing import Registry, Resource

from focksynth.cli import load_schema, main, parse_angle


@pytest.fixture(scope="module")
def validator():
    registry = Registry().with_resources(
        (schema["$id"], Resource.from_contents(schema))
        for schema in map(load_schema, ("density_matrix", "simulate", "design", "figure")))

    def check(name, document):
        jsonschema.Draft202012Validator(load_schema(name), registry=registry).validate(document)
    return check


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


FIG2_FLAGS = ("--alpha", 20, "--psi", 0.04, "--chi-t", 0.01)


class TestSimulate:
    def test_filtering_limit(self, capsys, validator):
        code, out, _ = run(capsys, "simulate", "--beta", 2, *FIG2_FLAGS, "--tau", 1e-8, "--eta", 1,
                           "--target", "fock:4")
        assert code == 0
        doc = json.loads(out)
        validator("simulate", doc)
        assert doc["metrics"]["fidelity"] >= 0.999
        assert doc["click"]["p_click"] == pytest.approx(0.195367, abs=1e-5)

    def test_no_pump_exits_2(self, capsys):
        code, out, err = run(capsys, "simulate", "--beta", 2, "--alpha", 0, "--tau", 1e-3)
        assert code == 2 and out == "" and len(err.strip().splitlines()) == 1

    def test_non_square_input_exits_1(self, capsys, tmp_path):
        path = tmp_path / "state.json"
        path.write_text(json.dumps({"n_max": 1, "entries": [[[1, 0], [0, 0]], [[0, 0]]]}))
        code, _, err = run(capsys, "simulate", "--nu-in", path, "--tau", 1e-3)
        assert code == 1 and err.startswith("focksynth:")

    def test_density_matrix_input(self, capsys, tmp_path):
        path = tmp_path / "state.json"
        path.write_text(json.dumps({"n_max": 1, "entries": [[[0.5, 0], [0, 0]], [[0, 0], [0.5, 0]]]}))
        code, out, _ = run(capsys, "simulate", "--nu-in", path, "--tau", 1, "--alpha", 1)
        assert code == 0
        assert json.loads(out)["click"]["p_click"] == pytest.approx(1 - math.exp(-1), abs=1e-14)

    def test_needs_exactly_one_source(self, capsys, tmp_path):
        assert run(capsys, "simulate", "--tau", 1e-3)[0] == 1
        assert run(capsys, "simulate", "--tau", 1e-3, "--beta", 1, "--nu-in", tmp_path / "x.json")[0] == 1

    @pytest.mark.parametrize("flags", [("--tau", 0), ("--tau", 1e-3, "--eta", 1.5),
                                       ("--tau", 1e-3, "--target", "fock:x"),
                                       ("--tau", 1e-3, "--n-max", 10, "--target", "fock:500")])
    def test_bad_parameters_exit_1(self, capsys, flags):
        assert run(capsys, "simulate", "--beta", 1, *flags)[0] == 1

    def test_csv_output(self, capsys):
        code, out, _ = run(capsys, "simulate", "--beta", 2, *FIG2_FLAGS, "--tau", 1e-3,
                           "--format", "csv", "--target", "fock:4")
        lines = out.splitlines()
        assert code == 0 and lines[0] == "param,value,p_click,fidelity,purity,trace_defect,min_eig"
        assert len(lines) == 2 and lines[1].startswith("tau,0.001,")

    def test_out_file(self, capsys, tmp_path):
        dest = tmp_path / "sim.json"
        code, out, _ = run(capsys, "simulate", "--beta", 1, "--tau", 0.1, "--alpha", 1, "--out", dest)
        assert code == 0 and out == ""
        assert json.loads(dest.read_text())["command"] == "simulate"


class TestFigure:
    @pytest.mark.parametrize("which,expected", [(2, (0.99885, 0.4905, 0.1997)), (3, (0.205, 0.092))])
    def test_calibrated_panels(self, capsys, validator, which, expected):
        code, out, _ = run(capsys, "figure", which)
        doc = json.loads(out)
        validator("figure", doc)
        assert code == 0
        assert [p["p_click"] for p in doc["panels"]] == pytest.approx(expected, abs=1e-3)

    def test_superposition_panel_shows_thirty(self, capsys):
        doc = json.loads(run(capsys, "figure", 3)[1])
        small_tau = doc["panels"][1]
        assert small_tau["abs_entries"][30][30] > 1e-4
        assert small_tau["abs_entries"][10][20] > 0.3

    def test_efficiency_figure(self, capsys, validator):
        code, out, _ = run(capsys, "figure", 4)
        doc = json.loads(out)
        validator("figure", doc)
        a, b = doc["panels"]
        assert code == 0
        assert (a["eta"], a["alpha"]) == (0.2, 8.0) and (b["eta"], b["alpha"]) == (1.0, 3.58)
        assert a["p_click"] == pytest.approx(0.116, abs=0.003)
        assert b["p_click"] == pytest.approx(0.116, abs=0.003)
        assert a["fidelity"] > b["fidelity"]

    def test_deterministic_bytes(self, capsys):
        first = run(capsys, "figure", 3)[1]
        assert run(capsys, "figure", 3)[1] == first

    def test_csv(self, capsys):
        lines = run(capsys, "figure", 2, "--format", "csv")[1].splitlines()
        assert lines[0].startswith("figure,panel,tau") and len(lines) == 4

    def test_unknown_figure(self, capsys):
        assert run(capsys, "figure", 5)[0] == 1


class TestDesign:
    def test_fock(self, capsys, validator):
        code, out, _ = run(capsys, "design", "fock:4", "--chi-t", 0.01)
        doc = json.loads(out)
        validator("design", doc)
        assert code == 0
        assert doc["psi"] == pytest.approx(0.04, abs=1e-15)
        assert doc["beta"] == 2.0
        assert 4 in doc["resonant_numbers"]

    def test_superposition(self, capsys, validator):
        code, out, _ = run(capsys, "design", "super:10,20", "--chi-t", 0.6283185307)
        doc = json.loads(out)
        validator("design", doc)
        assert code == 0 and doc["psi"] == 0.0
        assert doc["beta"] == pytest.approx(3.902, abs=5e-4)
        assert doc["resonant_numbers"][:3] == [0, 10, 20]

    def test_incompatible_spacing_names_nearest(self, capsys):
        code, out, err = run(capsys, "design", "super:10,21", "--chi-t", 0.6283185307)
        assert code == 1 and out == ""
        assert "2*pi/11" in err and f"{2 * math.pi / 11!r}" in err

    def test_pi_fraction_accepted(self, capsys):
        code, out, _ = run(capsys, "design", "super:10,20", "--chi-t", "pi/5")
        assert code == 0 and json.loads(out)["chi_t"] == math.pi / 5

    def test_malformed_target(self, capsys):
        assert run(capsys, "design", "super:10")[0] == 1
        assert run(capsys, "design", "coherent:3")[0] == 1


class TestSweep:
    def write(self, tmp_path, spec):
        path = tmp_path / "spec.json"
        path.write_text(json.dumps(spec))
        return path

    def fig3a(self, tmp_path, param, grid):
        return self.write(tmp_path, {"param": param, "grid": grid, "target": "super:10,20",
                                     "fixed": {"beta": 3.902277, "alpha": 8, "chi_t": "pi/5",
                                               "tau": 0.049998}})

    def test_efficiency_grid(self, capsys, tmp_path):
        code, out, _ = run(capsys, "sweep", self.fig3a(tmp_path, "eta", [1.0, 0.5, 0.2]))
        p = [float(line.split(",")[2]) for line in out.splitlines()[1:]]
        assert code == 0 and len(p) == 3
        assert p[0] > p[1] > p[2]
        assert p[0] == pytest.approx(0.205, abs=1e-3)

    def test_empty_grid(self, capsys, tmp_path):
        assert run(capsys, "sweep", self.fig3a(tmp_path, "eta", []))[0] == 1

    def test_hundred_points(self, capsys, tmp_path):
        path = self.fig3a(tmp_path, "tau", {"logspace": [1e-6, 0.5, 100]})
        code, out, _ = run(capsys, "sweep", path, "--threads", 4)
        assert code == 0 and len(out.splitlines()) == 101

    @pytest.mark.parametrize("spec", [
        {"param": "eta", "grid": [1.0]},
        {"param": "eta", "grid": [1.0], "fixed": {"beta": 1, "tau": 0.1, "colour": 3}},
        {"param": "eta", "grid": [0.5, 1.0], "fixed": {"beta": 1}},
        {"param": "eta", "grid": [1.0, 0.5, 0.7], "fixed": {"beta": 1, "tau": 0.1}},
        {"param": "gamma", "grid": [1.0], "fixed": {"beta": 1, "tau": 0.1}},
        {"param": "eta", "grid": "1,2", "fixed": {"beta": 1, "tau": 0.1}},
        [1, 2],
    ])
    def test_malformed_spec(self, capsys, tmp_path, spec):
        assert run(capsys, "sweep", self.write(tmp_path, spec))[0] == 1

    def test_dead_point_keeps_going(self, capsys, tmp_path):
        path = self.write(tmp_path, {"param": "alpha", "grid": [0.0, 1.0], "fixed": {"beta": 1, "tau": 0.5}})
        code, out, err = run(capsys, "sweep", path)
        lines = out.splitlines()
        assert code == 0 and len(lines) == 3
        assert lines[1] == "alpha,0,0,,,," and "NoClickProbability" in err

    def test_density_matrix_source_relative_to_spec(self, capsys, tmp_path):
        (tmp_path / "nu.json").write_text(json.dumps({"n_max": 0, "entries": [[[1, 0]]]}))
        path = self.write(tmp_path, {"param": "tau", "grid": [0.1, 0.2], "fixed": {"nu_in": "nu.json"}})
        code, out, _ = run(capsys, "sweep", path)
        assert code == 0
        assert [float(line.split(",")[2]) for line in out.splitlines()[1:]] == pytest.approx(
            [1 - math.exp(-64)] * 2)


class TestVerify:
    def test_default_suite_passes(self, capsys):
        code, out, _ = run(capsys, "verify")
        assert code == 0
        assert "50/50 instances within tolerance" in out and "worst instance" in out

    def test_tolerance_violation_exits_3(self, capsys):
        code, out, _ = run(capsys, "verify", "--instances", 3, "--state-tol", 1e-30, "--prob-tol", 1e-30)
        assert code == 3 and "NO" in out

    def test_zero_tau(self, capsys):
        assert run(capsys, "verify", "--tau", 0)[0] == 1


@pytest.mark.parametrize("text,value", [
    ("0.5", 0.5), ("pi", math.pi), ("pi/5", math.pi / 5), ("2*pi/11", 2 * math.pi / 11),
    ("-pi", -math.pi), ("2pi", 2 * math.pi), ("0.6283185307", 0.6283185307),
])
def test_parse_angle(text, value):
    assert parse_angle(text) == value


@pytest.mark.parametrize("text", ["tau", "pi/0x", "nan", "inf", "pi*2"])
def test_parse_angle_rejects(text):
    with pytest.raises(Exception):
        parse_angle(text)


def test_binary_exit_codes(tmp_path):
    ok = subprocess.run([sys.executable, "-m", "focksynth", "design", "fock:4", "--chi-t", "0.01"],
                        capture_output=True, text=True)
    assert ok.returncode == 0 and json.loads(ok.stdout)["psi"] == pytest.approx(0.04)
    no_click = subprocess.run([sys.executable, "-m", "focksynth", "simulate", "--beta", "1", "--alpha", "0",
                               "--tau", "0.1"], capture_output=True, text=True)
    assert no_click.returncode == 2 and no_click.stdout == ""
    usage = subprocess.run([sys.executable, "-m", "focksynth", "simulate"], capture_output=True, text=True)
    assert usage.returncode == 1


def test_simulate_state_is_a_valid_density_matrix(capsys):
    doc = json.loads(run(capsys, "simulate", "--beta", "1+0.5j", "--tau", 0.05, "--alpha", 3,
                         "--psi", 0.3, "--chi-t", 0.2, "--eta", 0.4)[1])
    entries = np.array(doc["state"]["entries"])
    rho = entries[..., 0] + 1j * entries[..., 1]
    assert np.allclose(rho, rho.conj().T, atol=1e-15)
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)
