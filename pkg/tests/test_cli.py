import json
from importlib import resources

import numpy as np
import pytest

from formctl import cli
from formctl.scenario import load_scenario, make_leader_profile

import helpers


def fixture_path(name):
    return str(resources.files("formctl") / "scenarios" / f"{name}.json")


def toy_doc(**overrides):
    """Small, fast scenario document exercising the full schema path."""
    doc = {
        "version": 1,
        "name": "toy",
        "model": {"a": [[0.0, 1.0], [0.0, 0.0]],
                  "b": [[0.0], [1.0]],
                  "c": [[1.0, 0.0]]},
        "topology": {"adjacency": [[0.0, 0.0], [1.0, 0.0]],
                     "pinning": [1.0, 0.0], "directed": True},
        "gains": {"k1": [[-1.0, 0.0]], "k2_poles": [-1.0, -2.0]},
        "formation": {"family": "harmonic", "r": 1.0, "w": 1.0,
                      "component_map": [[1.0, 0.0]]},
        "regime": {"name": "directed_tracking_observer"},
        "sim": {"t_final": 2.0, "dt": 2e-3, "seed": 1, "record_stride": 100},
    }
    doc.update(overrides)
    return doc


def write_doc(tmp_path, doc, name="toy.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


class TestScenarioLoading:
    def test_example_fixtures_load(self):
        for name in ("example1", "example2"):
            scenario, output = load_scenario(fixture_path(name))
            assert scenario.name == name
            assert scenario.gains.beta == 4.0
            assert output["snapshots"]

    def test_example1_snapshot_schedule_matches_switches(self):
        _, output = load_scenario(fixture_path("example1"))
        assert output["snapshots"] == [0.0, 50.0, 100.0, 150.0, 200.0]

    def test_unknown_top_level_key_rejected(self, tmp_path):
        path = write_doc(tmp_path, toy_doc(bogus=1))
        assert cli.main(["validate", path]) == cli.EXIT_VALIDATION

    def test_unknown_nested_key_rejected(self, tmp_path):
        doc = toy_doc()
        doc["sim"]["mystery"] = 2
        path = write_doc(tmp_path, doc)
        assert cli.main(["validate", path]) == cli.EXIT_VALIDATION

    def test_wrong_version_rejected(self, tmp_path):
        path = write_doc(tmp_path, toy_doc(version=99))
        assert cli.main(["validate", path]) == cli.EXIT_VALIDATION

    def test_leader_profile_families(self):
        profile = make_leader_profile([
            {"exp": [1.0, -1.0], "offset": 1.0},
            {"sin": [1.0, 0.5], "abs": True},
            {"offset": -2.0}])
        u = profile(0.0)
        assert np.allclose(u, [2.0, 0.0, -2.0])
        assert profile(np.pi)[1] == pytest.approx(1.0)


class TestSynthCommand:
    def test_example1_certificates_pass(self, tmp_path, capsys):
        code = cli.main(["synth", fixture_path("example1"),
                         "--out", str(tmp_path)])
        out = capsys.readouterr().out
        assert code == cli.EXIT_OK
        assert "lmi_output" in out and "FAIL" not in out
        gains = json.loads((tmp_path / "example1.gains.json").read_text())
        assert gains["beta"] == 4.0
        assert np.array(gains["k2"]).shape == (3, 6)

    def test_undetectable_pair_fails_with_named_error(self, tmp_path, capsys):
        doc = toy_doc()
        doc["model"]["c"] = [[0.0, 1.0]]   # velocity-only output, n=2 chain
        path = write_doc(tmp_path, doc)
        code = cli.main(["synth", path])
        err = capsys.readouterr().err
        assert code == cli.EXIT_VALIDATION
        assert "detectable" in err

    def test_missing_file_is_io_error(self, capsys):
        assert cli.main(["synth", "/nonexistent/path.json"]) == cli.EXIT_IO


class TestValidateCommand:
    def test_fixtures_pass(self, capsys):
        assert cli.main(["validate", fixture_path("example1")]) == cli.EXIT_OK
        assert cli.main(["validate", fixture_path("example2")]) == cli.EXIT_OK

    def test_regime_topology_mismatch(self, tmp_path, capsys):
        doc = toy_doc()
        doc["regime"] = {"name": "undirected_tracking"}
        path = write_doc(tmp_path, doc)
        code = cli.main(["validate", path])
        out = capsys.readouterr().out
        assert code == cli.EXIT_VALIDATION
        assert "topology_assumptions" in out

    def test_wrong_k1_fails_formation_residual(self, tmp_path, capsys):
        doc = toy_doc()
        doc["gains"]["k1"] = [[-3.0, 0.0]]   # inconsistent with w = 1
        path = write_doc(tmp_path, doc)
        code = cli.main(["validate", path])
        out = capsys.readouterr().out
        assert code == cli.EXIT_VALIDATION
        assert "formation_residual" in out


class TestRunCommand:
    def test_run_writes_artifacts(self, tmp_path, capsys):
        path = write_doc(tmp_path, toy_doc())
        code = cli.main(["run", path, "--out", str(tmp_path / "out"),
                         "--snapshots", "0,1,2"])
        assert code == cli.EXIT_OK
        assert (tmp_path / "out" / "toy.timeseries.csv").exists()
        assert (tmp_path / "out" / "toy.summary.json").exists()
        assert (tmp_path / "out" / "toy.snapshot_t1.svg").exists()

    def test_dt_flag_overrides_file_value(self, tmp_path):
        path = write_doc(tmp_path, toy_doc())
        code = cli.main(["run", path, "--dt", "4e-3",
                         "--out", str(tmp_path / "out")])
        assert code == cli.EXIT_OK
        summary = json.loads(
            (tmp_path / "out" / "toy.summary.json").read_text())
        assert summary["dt"] == 4e-3

    def test_seed_determinism_byte_identical(self, tmp_path):
        path = write_doc(tmp_path, toy_doc())
        for sub in ("o1", "o2"):
            assert cli.main(["run", path, "--seed", "9",
                             "--out", str(tmp_path / sub)]) == cli.EXIT_OK
        a = (tmp_path / "o1" / "toy.timeseries.csv").read_bytes()
        b = (tmp_path / "o2" / "toy.timeseries.csv").read_bytes()
        assert a == b

    def test_env_var_default_out_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv("FORMCTL_OUT_DIR", str(tmp_path / "envout"))
        path = write_doc(tmp_path, toy_doc())
        assert cli.main(["run", path]) == cli.EXIT_OK
        assert (tmp_path / "envout" / "toy.timeseries.csv").exists()

    def test_validation_gate_and_force(self, tmp_path, capsys):
        doc = toy_doc()
        doc["gains"]["k1"] = [[-3.0, 0.0]]
        path = write_doc(tmp_path, doc)
        assert cli.main(["run", path,
                         "--out", str(tmp_path / "g")]) == cli.EXIT_VALIDATION
        assert cli.main(["run", path, "--force",
                         "--out", str(tmp_path / "f")]) == cli.EXIT_OK

    def test_acceptance_block_gates_exit_code(self, tmp_path, capsys):
        doc = toy_doc(acceptance={"final_error": 1e-12, "final_window": 1.0})
        path = write_doc(tmp_path, doc)
        code = cli.main(["run", path, "--out", str(tmp_path / "out")])
        assert code == cli.EXIT_VALIDATION
        assert "acceptance failed" in capsys.readouterr().out

    def test_batch_jobs(self, tmp_path):
        p1 = write_doc(tmp_path, toy_doc(name="toy_a"), "a.json")
        p2 = write_doc(tmp_path, toy_doc(name="toy_b"), "b.json")
        code = cli.main(["run", p1, p2, "--jobs", "2",
                         "--out", str(tmp_path / "out")])
        assert code == cli.EXIT_OK
        assert (tmp_path / "out" / "toy_a.timeseries.csv").exists()
        assert (tmp_path / "out" / "toy_b.timeseries.csv").exists()

    def test_divergent_run_exit_code(self, tmp_path):
        # an unstable pole list passes schema but fails certificates;
        # --force runs it anyway and hits the divergence guard
        doc = toy_doc()
        doc["gains"]["k2"] = [[5.0, 5.0]]
        doc["sim"]["t_final"] = 20.0
        path = write_doc(tmp_path, doc)
        code = cli.main(["run", path, "--force",
                         "--out", str(tmp_path / "out")])
        assert code == cli.EXIT_DIVERGENCE


class TestExitCodeContract:
    def test_constants(self):
        assert (cli.EXIT_OK, cli.EXIT_VALIDATION, cli.EXIT_DIVERGENCE,
                cli.EXIT_IO) == (0, 1, 2, 3)
