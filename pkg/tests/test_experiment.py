import json

import numpy as np
import pytest

from telegate import cli
from telegate.experiment import (
    ConfigError,
    ExperimentConfig,
    PAPER_SWAP_TARGETS,
    PAPER_TELEPORT_TARGETS,
    calibrate,
    config_from_mapping,
    load_config,
    run_experiment,
    simulate_counts,
    swap_summary,
    teleport_summary,
)
from telegate.sources import InputSpec, make_input
from telegate.tomography import mle_fit, settings_1q


class TestSimulateCounts:
    def test_deterministic_outcome_up_to_poisson(self):
        table = simulate_counts({"Z": {"+": 1.0, "-": 0.0}}, 1000, {}, seed=4, modes=("a",))
        by_outcome = {r.outcome: r for r in table.rows}
        assert by_outcome["-"].raw == 0
        assert abs(by_outcome["+"].raw - 1000) < 5 * np.sqrt(1000)

    def test_uniform_within_five_sigma(self):
        probs = {"s": {o: 0.25 for o in ("a+", "b+", "c+", "d+")}}
        # modes length 2: outcome strings here are just labels
        table = simulate_counts(probs, 1_000_000, {}, seed=8, modes=("m", "n"))
        for r in table.rows:
            assert abs(r.corrected - 250_000) < 5 * np.sqrt(250_000)

    def test_efficiency_corrected_unbiased(self):
        probs = {"Z": {"+": 0.5, "-": 0.5}}
        eff = {"a+": 0.5}
        table = simulate_counts(probs, 1_000_000, eff, seed=15, modes=("a",))
        plus = next(r for r in table.rows if r.outcome == "+")
        minus = next(r for r in table.rows if r.outcome == "-")
        assert plus.corrected == plus.raw / 0.5
        # corrected counts match the eta=1 expectation within 5 sigma of the
        # inflated Poisson noise
        sigma = np.sqrt(500_000 * 0.5) / 0.5
        assert abs(plus.corrected - 500_000) < 5 * sigma
        assert abs(minus.corrected - 500_000) < 5 * np.sqrt(500_000)

    def test_invalid_distribution(self):
        with pytest.raises(ValueError, match="sum"):
            simulate_counts({"Z": {"+": 0.7, "-": 0.7}}, 100, {}, seed=0, modes=("a",))

    def test_unit_efficiency_means_equal_columns(self):
        rho = make_input(InputSpec("R", 0.3))
        probs = {s.id: s.probabilities(rho) for s in settings_1q()}
        table = simulate_counts(probs, 5000, {}, seed=2, modes=("a",))
        for r in table.rows:
            assert r.corrected == float(r.raw)


class TestConfig:
    def test_minimal(self):
        cfg = config_from_mapping({"protocol": "swap"})
        assert cfg.resolved_pair_target() == "phi+"
        assert cfg.counts_per_setting == 1000

    def test_teleport_pair_default_is_aligned(self):
        cfg = config_from_mapping({"protocol": "teleport"})
        assert cfg.resolved_pair_target() == "phi+~"

    def test_unknown_field(self):
        with pytest.raises(ConfigError, match="unknown config fields"):
            config_from_mapping({"protocol": "swap", "overlp": 1.0})

    def test_missing_protocol(self):
        with pytest.raises(ConfigError, match="protocol"):
            config_from_mapping({})

    def test_range_errors_name_field(self):
        with pytest.raises(ConfigError, match="overlap"):
            config_from_mapping({"protocol": "swap", "overlap": 1.4})
        with pytest.raises(ConfigError, match="counts_per_setting"):
            config_from_mapping({"protocol": "swap", "counts_per_setting": 0})
        with pytest.raises(ConfigError, match="efficiencies.a\\+"):
            config_from_mapping({"protocol": "swap", "efficiencies": {"a+": 0.0}})

    def test_yaml_roundtrip(self, tmp_path):
        path = tmp_path / "cfg.yaml"
        path.write_text("protocol: teleport\noverlap: 0.9\nseed: 3\n")
        cfg = load_config(str(path))
        assert cfg.overlap == 0.9 and cfg.seed == 3

    def test_yaml_missing_file(self):
        with pytest.raises(ConfigError, match="not found"):
            load_config("/nonexistent/cfg.yaml")


class TestExactSummaries:
    def test_ideal_teleport(self):
        s = teleport_summary(1.0)
        for key in ("F_H", "F_V", "F_+", "F_R"):
            assert s[key] == pytest.approx(1.0, abs=1e-10)
        assert s["F_p"] == pytest.approx(1.0, abs=1e-9)

    def test_ideal_swap(self):
        s = swap_summary(1.0)
        assert s["F_avg"] == pytest.approx(1.0, abs=1e-10)
        assert s["N_avg"] == pytest.approx(1.0, abs=1e-10)
        assert s["S_abs_avg"] == pytest.approx(2 * np.sqrt(2), abs=1e-9)

    def test_plus_and_r_equal_by_symmetry(self):
        s = teleport_summary(0.8)
        assert s["F_+"] == pytest.approx(s["F_R"], abs=1e-10)


class TestRunExperiment:
    def test_teleport_statistics(self):
        cfg = ExperimentConfig(protocol="teleport", overlap=1.0,
                               counts_per_setting=20_000, seed=101)
        rep = run_experiment(cfg)
        for name, blk in rep.results["inputs"].items():
            assert blk["fidelity"] >= 0.99, name
        assert rep.results["process_fidelity"] >= 0.98

    def test_swap_statistics(self):
        cfg = ExperimentConfig(protocol="swap", overlap=1.0,
                               counts_per_setting=20_000, seed=103)
        rep = run_experiment(cfg)
        for label, o in rep.results["outcomes"].items():
            assert o["fidelity"] >= 0.99, label
            assert o["log_negativity"] >= 0.97, label
            assert o["chsh_abs"] >= 2.8, label

    def test_gate_only_distinguishable(self):
        cfg = ExperimentConfig(protocol="gate-only", overlap=0.0, gate_input="VV",
                               counts_per_setting=200_000, seed=17)
        rep = run_experiment(cfg)
        res = rep.results
        assert res["success_probability_exact"] == pytest.approx(5 / 9, abs=1e-12)
        assert abs(res["success_probability"] - 5 / 9) <= 3 * res["success_probability_err"]

    def test_deterministic_reports(self):
        cfg = ExperimentConfig(protocol="swap", overlap=0.9, pair_mixedness=0.05,
                               counts_per_setting=300, seed=42)
        a, b = run_experiment(cfg), run_experiment(cfg)
        assert a.to_json() == b.to_json()
        assert a.counts_csv() == b.counts_csv()

    def test_report_files(self, tmp_path):
        out = tmp_path / "run"
        cfg = ExperimentConfig(protocol="gate-only", counts_per_setting=1000,
                               seed=1, out=str(out))
        run_experiment(cfg)
        data = json.loads((tmp_path / "run.json").read_text())
        assert data["protocol"] == "gate-only"
        assert data["version"]
        header = (tmp_path / "run.counts.csv").read_text().splitlines()[0]
        assert header == "table,modes,setting,outcome,raw,corrected"

    def test_large_count_reconstruction(self):
        # statistical recovery at one million events per setting
        from telegate.protocols import tilde_bell
        from telegate.tomography import settings_2q
        from telegate.metrics import fidelity_pure

        target = tilde_bell("psi+", ("a", "d"))
        probs = {s.id: s.probabilities(target.density()) for s in settings_2q()}
        table = simulate_counts(probs, 1_000_000, {}, seed=23, modes=("a", "d"))
        rho = mle_fit(table)
        assert fidelity_pure(rho, target) >= 0.999


class TestCalibrate:
    def test_ideal_targets_recover_ideal_point(self):
        targets = {"F_H": 1.0, "F_V": 1.0, "F_+": 1.0, "F_R": 1.0, "F_p": 1.0}
        res = calibrate(targets, overlap_grid=(0.9, 1.0), pair_grid=(0.0, 0.1),
                        input_grid=(0.0, 0.1))
        assert res.overlap == 1.0
        assert res.pair_mixedness == 0.0
        assert res.input_mixedness == 0.0
        assert res.residual == pytest.approx(0.0, abs=1e-18)

    def test_isotropic_noise_alone_cannot_split_h_and_v(self):
        # with perfect interference every probe degrades identically, so the
        # paper's asymmetric fidelities stay out of reach
        res = calibrate(PAPER_TELEPORT_TARGETS, overlap_grid=(1.0,),
                        pair_grid=np.linspace(0, 0.3, 16),
                        input_grid=np.linspace(0, 0.3, 16))
        assert res.predictions["F_H"] == pytest.approx(res.predictions["F_V"], abs=1e-9)
        assert res.residual > 0.005

    def test_swap_targets_accepted(self):
        targets = dict(PAPER_TELEPORT_TARGETS)
        targets.update(PAPER_SWAP_TARGETS)
        res = calibrate(targets, overlap_grid=(0.93,), pair_grid=(0.0, 0.01),
                        input_grid=(0.14,))
        assert set(res.predictions) >= set(targets)

    def test_unknown_target(self):
        with pytest.raises(ValueError, match="unknown calibration target"):
            calibrate({"F_X": 1.0}, overlap_grid=(1.0,))

    def test_empty_grid(self):
        with pytest.raises(ValueError, match="non-empty"):
            calibrate({"F_H": 1.0}, overlap_grid=())


class TestCli:
    def test_gate_table_text(self, capsys):
        assert cli.main(["gate-table"]) == 0
        out = capsys.readouterr().out
        assert "-VV" in out and "0.111111" in out

    def test_gate_table_json(self, capsys):
        assert cli.main(["gate-table", "--format", "json"]) == 0
        data = json.loads(capsys.readouterr().out)
        rows = {r["input"]: r for r in data["truth_table"]}
        assert rows["VV"]["output"] == "-VV"
        assert rows["HH"]["success_probability"] == pytest.approx(1 / 9, abs=1e-12)

    def test_run_roundtrip(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text("protocol: gate-only\ncounts_per_setting: 2000\nseed: 9\n")
        code = cli.main(["run", str(cfg), "--out", str(tmp_path / "r"), "--format", "json"])
        assert code == 0
        data = json.loads(capsys.readouterr().out)
        assert data["seed"] == 9
        assert (tmp_path / "r.json").exists()
        assert (tmp_path / "r.counts.csv").exists()

    def test_run_seed_override(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text("protocol: gate-only\ncounts_per_setting: 500\nseed: 1\n")
        cli.main(["run", str(cfg), "--seed", "77"])
        assert json.loads(capsys.readouterr().out)["seed"] == 77

    def test_run_csv_format(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text("protocol: gate-only\ncounts_per_setting: 500\nseed: 1\n")
        assert cli.main(["run", str(cfg), "--format", "csv"]) == 0
        assert capsys.readouterr().out.startswith("table,modes,setting,outcome,raw,corrected")

    def test_config_error_exit_code(self, tmp_path, capsys):
        cfg = tmp_path / "bad.yaml"
        cfg.write_text("protocol: warp\n")
        assert cli.main(["run", str(cfg)]) == 2
        assert cli.main(["run", str(tmp_path / "missing.yaml")]) == 2

    def test_numerical_error_exit_code(self, tmp_path, monkeypatch, capsys):
        from telegate.tomography import FitError
        from telegate.states import DensityMatrix

        def boom(config):
            raise FitError("stalled", DensityMatrix(np.eye(2) / 2))

        monkeypatch.setattr(cli, "run_experiment", boom)
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text("protocol: teleport\n")
        assert cli.main(["run", str(cfg)]) == 3

    def test_calibrate_command(self, tmp_path, capsys):
        cfg = tmp_path / "cal.yaml"
        cfg.write_text(
            "targets: {F_H: 1.0, F_V: 1.0, F_p: 1.0}\n"
            "grid:\n"
            "  overlap: [0.9, 1.0, 2]\n"
            "  pair_mixedness: [0.0, 0.1, 2]\n"
            "  input_mixedness: [0.0, 0.1, 2]\n")
        assert cli.main(["calibrate", str(cfg)]) == 0
        data = json.loads(capsys.readouterr().out)
        assert data["overlap"] == 1.0
        assert data["residual"] == pytest.approx(0.0, abs=1e-15)

    def test_calibrate_bad_targets(self, tmp_path, capsys):
        cfg = tmp_path / "cal.yaml"
        cfg.write_text("grid: {}\n")
        assert cli.main(["calibrate", str(cfg)]) == 2
