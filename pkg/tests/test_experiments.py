"""Run configs, scenario manifests, and the command-line front end."""

import json
import os

import numpy as np
import pytest

from solpump.cli import main
from solpump.errors import ConfigError
from solpump.experiments import (
    config_hash,
    run_scenario,
    scenario_names,
    validate_config,
)
from solpump.io_formats import sha256_file


class TestValidateConfig:
    def test_minimal(self):
        cfg = validate_config({"scenario": "s2"})
        assert cfg.preset == "paper"
        assert cfg.seed == 0
        assert cfg.spec is None

    def test_scenario_catalog(self):
        names = scenario_names()
        assert "fig1" in names and "fig4" in names and "s9" in names
        with pytest.raises(ConfigError, match="scenario"):
            validate_config({"scenario": "fig99"})

    def test_unknown_keys_have_dotted_paths(self):
        with pytest.raises(ConfigError, match="bogus"):
            validate_config({"scenario": "s2", "bogus": 1})
        with pytest.raises(ConfigError, match="excitation.whoops"):
            validate_config({"scenario": "s2", "excitation": {"whoops": 1}})
        with pytest.raises(ConfigError, match="numerics.whoops"):
            validate_config({"scenario": "s2", "numerics": {"whoops": 1}})
        with pytest.raises(ConfigError, match="outputs.whoops"):
            validate_config({"scenario": "s2", "outputs": {"whoops": 1}})

    def test_excitation_kind_cross_checks(self):
        with pytest.raises(ConfigError, match="N_target"):
            validate_config({"scenario": "s2",
                             "excitation": {"kind": "bright", "N_target": 1}})
        with pytest.raises(ConfigError, match="excitation.N"):
            validate_config({"scenario": "s2",
                             "excitation": {"kind": "gap_soliton", "N": 1}})

    def test_numeric_validation(self):
        with pytest.raises(ConfigError, match="numerics.cells"):
            validate_config({"scenario": "s2", "numerics": {"cells": 2.5}})
        with pytest.raises(ConfigError, match="numerics.dt"):
            validate_config({"scenario": "s2", "numerics": {"dt": -0.1}})
        with pytest.raises(ConfigError, match="N_list"):
            validate_config({"scenario": "s2", "numerics": {"N_list": []}})
        with pytest.raises(ConfigError, match="seed"):
            validate_config({"scenario": "s2", "seed": 1.5})

    def test_spec_section_round_trip(self):
        cfg = validate_config({
            "scenario": "s2",
            "spec": {"p1": 15.0, "p2": 15.0, "d1": "1/2", "d2": "2/3",
                     "v": 0.1, "phase0": 0.0},
        })
        assert str(cfg.spec.d2) == "2/3"

    def test_file_source(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"scenario": "s2", "preset": "fast"}))
        assert validate_config(str(path)).preset == "fast"
        path.write_text("{not json")
        with pytest.raises(ConfigError, match="JSON"):
            validate_config(str(path))

    def test_hash_tracks_content_only(self):
        a = validate_config({"scenario": "s2", "seed": 1})
        b = validate_config({"seed": 1, "scenario": "s2"})
        c = validate_config({"scenario": "s2", "seed": 2})
        assert config_hash(a) == config_hash(b)
        assert config_hash(a) != config_hash(c)


class TestRunScenario:
    def test_static_trap_end_to_end(self, tmp_path):
        cfg = validate_config({"scenario": "s2", "preset": "fast",
                               "outputs": {"directory": str(tmp_path / "r")}})
        m = run_scenario(cfg)
        assert m.status == "ok"
        assert m.error is None
        # kicked below escape velocity: bounded, and the two models agree
        assert m.metrics["max_abs_x0"] < 1.0
        assert m.metrics["ee_max_dev"] < 0.15
        root = tmp_path / "r" / "s2"
        assert (root / "manifest.json").exists()
        assert (root / "plotdata.json").exists()
        for rel, digest in m.files.items():
            assert sha256_file(str(root / rel)) == digest
        on_disk = json.loads((root / "manifest.json").read_text())
        assert on_disk["config_hash"] == config_hash(cfg)

    def test_rerun_is_byte_identical(self, tmp_path):
        ma = run_scenario(validate_config({
            "scenario": "s2", "preset": "fast",
            "outputs": {"directory": str(tmp_path / "a")}}))
        mb = run_scenario(validate_config({
            "scenario": "s2", "preset": "fast",
            "outputs": {"directory": str(tmp_path / "b")}}))
        assert ma.files == mb.files

    def test_numerical_failure_is_recorded(self, tmp_path):
        # box too narrow for the wide low-norm soliton
        cfg = validate_config({"scenario": "s2", "preset": "fast",
                               "excitation": {"N": 0.5},
                               "numerics": {"cells": 16},
                               "outputs": {"directory": str(tmp_path / "r")}})
        m = run_scenario(cfg)
        assert m.status == "failed"
        assert "TruncationError" in m.error
        assert (tmp_path / "r" / "s2" / "manifest.json").exists()

    def test_ensemble_seeds_are_deterministic(self, tmp_path):
        base = {"scenario": "s3", "preset": "fast", "seed": 5}
        ma = run_scenario(validate_config(
            dict(base, outputs={"directory": str(tmp_path / "a")})))
        mb = run_scenario(validate_config(
            dict(base, outputs={"directory": str(tmp_path / "b")})))
        mc = run_scenario(validate_config(
            dict(base, seed=6, outputs={"directory": str(tmp_path / "c")})))
        assert ma.metrics["spreads"] == mb.metrics["spreads"]
        assert ma.metrics["seeds"] == mb.metrics["seeds"]
        assert ma.metrics["seeds"] != mc.metrics["seeds"]


class TestCli:
    def test_effective_verb(self, tmp_path):
        rc = main(["effective", "--t-final", "5", "--out", str(tmp_path)])
        assert rc == 0
        assert (tmp_path / "effective" / "effective.csv").exists()

    def test_pendulum_verb(self, tmp_path):
        rc = main(["pendulum", "--t-final", "5", "--out", str(tmp_path)])
        assert rc == 0
        header = (tmp_path / "pendulum" / "pendulum.csv").read_text().splitlines()[0]
        assert header == "t,theta,x_lab"

    def test_propagate_verb_with_snapshots(self, tmp_path):
        rc = main(["propagate", "--t-final", "2", "--snapshots", "2",
                   "--out", str(tmp_path)])
        assert rc == 0
        out = tmp_path / "propagate"
        assert (out / "trajectory.csv").exists()
        assert (out / "snapshot_000.bin").exists()
        assert (out / "snapshot_001.json").exists()

    def test_bands_and_chern_verbs(self, tmp_path):
        cheap = tmp_path / "cheap.json"
        cheap.write_text(json.dumps(
            {"numerics": {"n_k": 12, "n_t": 12, "cutoff": 24}}))
        rc = main(["bands", "--n-bands", "3", "--config", str(cheap),
                   "--out", str(tmp_path)])
        assert rc == 0
        rc = main(["chern", "--bands", "1,2", "--config", str(cheap),
                   "--out", str(tmp_path)])
        assert rc == 0
        data = json.loads((tmp_path / "chern" / "chern.json").read_text())
        assert [c["chern"] for c in data] == [1, -1]

    def test_populations_verb_default_state(self, tmp_path):
        cheap = tmp_path / "cheap.json"
        cheap.write_text(json.dumps({"numerics": {"cutoff": 24}}))
        rc = main(["populations", "--n-bands", "4", "--config", str(cheap),
                   "--out", str(tmp_path)])
        assert rc == 0
        rows = (tmp_path / "populations" / "populations.csv").read_text().splitlines()
        assert rows[0] == "band,rho"
        pops = [float(r.split(",")[1]) for r in rows[1:]]
        assert pops[0] > 0.9
        assert sum(pops) == pytest.approx(1.0, abs=0.02)

    def test_config_errors_exit_2(self, tmp_path):
        assert main(["gapsoliton", "--out", str(tmp_path)]) == 2
        assert main(["gapsoliton", "--mu", "-1", "--norm", "1",
                     "--out", str(tmp_path)]) == 2
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"bogus": 1}))
        assert main(["effective", "--config", str(bad),
                     "--out", str(tmp_path)]) == 2

    def test_scenario_failure_exits_3(self, tmp_path, capsys):
        cfg = tmp_path / "fail.json"
        cfg.write_text(json.dumps({
            "scenario": "s2", "preset": "fast",
            "excitation": {"N": 0.5}, "numerics": {"cells": 16},
            "outputs": {"directory": str(tmp_path / "r")},
        }))
        rc = main(["scenario", "s2", "--config", str(cfg)])
        assert rc == 3
        assert "FAILED" in capsys.readouterr().err
        assert (tmp_path / "r" / "s2" / "manifest.json").exists()

    def test_outdir_env_fallback(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SOLPUMP_OUTDIR", str(tmp_path / "env"))
        rc = main(["effective", "--t-final", "2"])
        assert rc == 0
        assert (tmp_path / "env" / "effective" / "effective.csv").exists()

    def test_threads_env_sets_default(self, monkeypatch, tmp_path):
        monkeypatch.setenv("SOLPUMP_THREADS", "2")
        rc = main(["effective", "--t-final", "2", "--out", str(tmp_path)])
        assert rc == 0
