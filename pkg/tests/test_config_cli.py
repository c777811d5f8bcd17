"""Configuration parsing, emitters, pipelines, and the CLI front end."""
import argparse
import hashlib
import json
import os

import numpy as np
import pytest

from emlab.cli import build_parser, main
from emlab.config import ExperimentConfig, canonical_text, config_hash, parse_config
from emlab.pipelines import (
    SERIES_COLUMNS,
    emit_report,
    emit_series,
    run_experiment,
)
from emlab.snapshot import read_snapshot

SMALL = {"grid_n": "16", "box_l": "10", "tol": "1e-11"}


def small_cfg(tmp_path, name, **extra):
    overrides = dict(SMALL)
    overrides["out_dir"] = str(tmp_path / name)
    overrides.update({k: str(v) for k, v in extra.items()})
    return parse_config(overrides=overrides)


class TestConfigValidation:
    def test_empty_config_gives_documented_defaults(self):
        cfg = parse_config()
        assert cfg.gamma == pytest.approx(5.0 / 3.0)
        assert cfg.grid_n == 48
        assert cfg.box_l == 40.0
        assert cfg.seed == 0

    def test_gamma_below_one_rejected_naming_constraint(self):
        with pytest.raises(ValueError, match="gamma.*> 1"):
            parse_config(overrides={"gamma": "0.9"})

    def test_weight_disorder_rejected_naming_constraint(self):
        with pytest.raises(ValueError, match="kappa3 < kappa2 < kappa1"):
            parse_config(overrides={"kappa2": "0.1", "kappa3": "0.2"})

    @pytest.mark.parametrize("bad", ["0", "1", "1.5", "-0.2"])
    def test_cfl_outside_unit_interval_rejected(self, bad):
        with pytest.raises(ValueError, match="cfl"):
            parse_config(overrides={"cfl": bad})

    def test_unknown_key_rejected_by_name(self):
        with pytest.raises(ValueError, match="unknown config key 'gama'"):
            parse_config(overrides={"gama": "2.0"})

    def test_non_numeric_value_rejected_by_key(self):
        with pytest.raises(ValueError, match="grid_n expects an integer"):
            parse_config(overrides={"grid_n": "many"})

    @pytest.mark.parametrize(
        "key,value,needle",
        [
            ("command", "plot", "command"),
            ("grid_n", "15", "even"),
            ("init", "custom", "init_snapshot"),
            ("cadence", "0.3", "divide"),
            ("t_grid", "5:500:4", "count >= 10"),
            ("fit_window", "500:50", "lo < hi"),
            ("seed", "-1", "seed"),
            ("threads", "0", "threads"),
            ("amp", "0", "amp"),
            ("order", "2", "order"),
        ],
    )
    def test_invariant_violations_rejected(self, key, value, needle):
        with pytest.raises(ValueError, match=needle):
            parse_config(overrides={key: value})

    def test_lindecay_windows_must_cover_the_time_grid(self):
        with pytest.raises(ValueError, match="rho_fit_window"):
            parse_config(overrides={"command": "lindecay", "t_grid": "50:500:16"})

    def test_unreadable_file_rejected_with_path(self, tmp_path):
        with pytest.raises(ValueError, match="cannot read config file"):
            parse_config(tmp_path / "missing.ini")

    def test_file_sections_parsed_and_flags_override(self, tmp_path):
        path = tmp_path / "exp.ini"
        path.write_text(
            "[model]\ngamma = 1.4\n\n[grid]\ngrid_n = 24\nbox_l = 20.0  # inline note\n"
        )
        cfg = parse_config(path, overrides={"gamma": "2.0"})
        assert cfg.gamma == 2.0
        assert cfg.grid_n == 24
        assert cfg.box_l == 20.0

    def test_unknown_key_in_file_rejected(self, tmp_path):
        path = tmp_path / "exp.ini"
        path.write_text("[model]\ngamm = 1.4\n")
        with pytest.raises(ValueError, match="unknown config key 'gamm'"):
            parse_config(path)

    def test_known_key_in_wrong_section_rejected(self, tmp_path):
        path = tmp_path / "exp.ini"
        path.write_text("[model]\ngrid_n = 24\n")
        with pytest.raises(ValueError, match=r"belongs in section \[grid\]"):
            parse_config(path)

    def test_hash_is_stable_and_sensitive(self):
        a = parse_config()
        b = parse_config(overrides={"seed": "1"})
        assert config_hash(a) == config_hash(parse_config())
        assert config_hash(a) != config_hash(b)
        assert f"seed = {a.seed}" in canonical_text(a)

    def test_explicit_time_grid_list(self):
        times = ",".join(str(5.0 * k) for k in range(1, 13))
        cfg = parse_config(overrides={"t_grid": times})
        assert cfg.time_grid().size == 12
        with pytest.raises(ValueError, match="increasing"):
            parse_config(overrides={"t_grid": "3,2,1"})


class TestEmitters:
    def test_empty_trajectory_gives_header_only_csv(self, tmp_path):
        path = tmp_path / "series.csv"
        emit_series(path, ("t", "a"), [])
        assert path.read_text() == "t,a\n"

    def test_row_width_mismatch_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="width"):
            emit_series(tmp_path / "x.csv", ("t", "a"), [(1.0,)])

    def test_seventeen_digit_floats_round_trip(self, tmp_path):
        path = tmp_path / "series.csv"
        values = [1.0 / 3.0, np.pi, 6.02214076e23, 2.0 ** -52]
        emit_series(path, ("a", "b", "c", "d"), [values])
        back = np.genfromtxt(path, delimiter=",", names=True)
        for name, v in zip(back.dtype.names, values):
            assert float(back[name]) == v

    def test_report_key_order_is_stable(self, tmp_path):
        p1, p2 = tmp_path / "r1.json", tmp_path / "r2.json"
        emit_report(p1, {"beta": 1, "alpha": {"z": 0.5, "a": np.float64(2.0)}})
        emit_report(p2, {"alpha": {"a": np.float64(2.0), "z": 0.5}, "beta": 1})
        assert p1.read_bytes() == p2.read_bytes()

    def test_report_rejects_unknown_payload_types(self, tmp_path):
        with pytest.raises(TypeError, match="serialize"):
            emit_report(tmp_path / "r.json", {"grid": object()})


class TestStationaryPipeline:
    def test_run_writes_snapshot_report_manifest(self, tmp_path):
        cfg = small_cfg(tmp_path, "st")
        manifest = run_experiment(cfg)
        assert manifest.passed
        assert set(manifest.checks) == {
            "picard_converged",
            "contracting",
            "elliptic_residual_small",
            "electric_field_curl_free",
        }
        report = json.loads((tmp_path / "st" / "stationary.json").read_text())
        assert report["converged"] and report["iterations"] > 0
        assert 0.0 < report["contraction_factor"] < 1.0
        assert report["ratios"]["r1"] > 0.0

    def test_manifest_hash_matches_resolved_config(self, tmp_path):
        cfg = small_cfg(tmp_path, "st")
        run_experiment(cfg)
        stored = json.loads((tmp_path / "st" / "manifest.json").read_text())
        text = (tmp_path / "st" / "config.resolved.ini").read_text()
        assert stored["config_hash"] == hashlib.sha256(text.encode()).hexdigest()
        assert stored["config_hash"] == config_hash(cfg)
        assert stored["passed"] is True

    def test_trivial_background_records_zero_iterations(self, tmp_path):
        manifest = run_experiment(small_cfg(tmp_path, "st0", eps=0))
        assert manifest.passed
        report = json.loads((tmp_path / "st0" / "stationary.json").read_text())
        assert report["iterations"] == 0
        assert report["trivial_solution"] is True
        assert report["ratios"] is None

    def test_snapshot_round_trips_bit_exactly(self, tmp_path):
        cfg = small_cfg(tmp_path, "st")
        run_experiment(cfg)
        grid, fields = read_snapshot(tmp_path / "st" / "stationary.emxf")
        assert (grid.n, grid.box) == (16, 10.0)
        assert set(fields) >= {"n_st", "sigma_st", "e_st_x"}
        assert np.isfinite(fields["n_st"]).all()


class TestEvolvePipeline:
    def test_exact_equilibrium_records_fixedness(self, tmp_path):
        cfg = small_cfg(tmp_path, "eq", command="evolve", init="stationary-exact", t_end=2, cadence=0.5)
        manifest = run_experiment(cfg)
        assert manifest.checks["equilibrium_fixed"]
        assert manifest.passed
        # the gate uses the transported (representable) defect; the full
        # spectrum value, truncation tail included, rides along in the notes
        assert manifest.notes["max_gauss"] <= manifest.notes["max_gauss_full_spectrum"]

    def test_noise_run_is_bit_deterministic(self, tmp_path):
        outs = []
        for name in ("a", "b"):
            cfg = small_cfg(tmp_path, name, command="evolve", t_end=1, cadence=0.25, seed=5)
            run_experiment(cfg)
            outs.append(tmp_path / name)
        assert (outs[0] / "series.csv").read_bytes() == (outs[1] / "series.csv").read_bytes()
        assert (outs[0] / "state_final.emxf").read_bytes() == (
            outs[1] / "state_final.emxf"
        ).read_bytes()

    def test_series_columns_fixed_and_finite(self, tmp_path):
        cfg = small_cfg(tmp_path, "ev", command="evolve", t_end=1, cadence=0.25)
        run_experiment(cfg)
        path = tmp_path / "ev" / "series.csv"
        header = path.read_text().splitlines()[0]
        assert header == ",".join(SERIES_COLUMNS)
        data = np.genfromtxt(path, delimiter=",", names=True)
        assert data.size == 5
        assert np.isfinite(data["energy_full"]).all()
        assert data["t"][-1] == pytest.approx(1.0)

    def test_custom_init_resumes_from_snapshot(self, tmp_path):
        first = small_cfg(tmp_path, "leg", command="evolve", t_end=1, cadence=0.5)
        run_experiment(first)
        snap = tmp_path / "leg" / "state_final.emxf"
        resumed = small_cfg(
            tmp_path, "leg2", command="evolve", init="custom",
            init_snapshot=snap, t_end=1, cadence=0.5,
        )
        manifest = run_experiment(resumed)
        assert manifest.passed

    def test_custom_init_rejects_grid_mismatch(self, tmp_path):
        first = small_cfg(tmp_path, "leg", command="evolve", t_end=1, cadence=0.5)
        run_experiment(first)
        snap = tmp_path / "leg" / "state_final.emxf"
        other = small_cfg(
            tmp_path, "leg3", command="evolve", init="custom", init_snapshot=snap,
            t_end=1, cadence=0.5, box_l=12,
        )
        with pytest.raises(ValueError, match="does not match"):
            run_experiment(other)


class TestLyapunovPipeline:
    def test_certifies_a_real_series(self, tmp_path):
        run_experiment(small_cfg(tmp_path, "ev", command="evolve", t_end=2, cadence=0.25))
        series = tmp_path / "ev" / "series.csv"
        cfg = small_cfg(tmp_path, "ly", command="lyapunov", series=series)
        manifest = run_experiment(cfg)
        assert manifest.passed
        report = json.loads((tmp_path / "ly" / "lyapunov.json").read_text())
        for pair in ("full", "high"):
            assert report[pair]["certified"] is True
            assert report[pair]["lambda_best"] > 0.0
            assert report[pair]["violations"] == []

    def test_missing_series_key_rejected(self, tmp_path):
        cfg = small_cfg(tmp_path, "ly", command="lyapunov")
        with pytest.raises(ValueError, match="requires series"):
            run_experiment(cfg)

    def test_growing_energy_fails_certification(self, tmp_path):
        series = tmp_path / "bad.csv"
        rows = [
            (0.1 * k,) + (1.0 + 0.25 * k, 1.0) * 2 + (0.0,) * 9 for k in range(20)
        ]
        emit_series(series, SERIES_COLUMNS, rows)
        cfg = small_cfg(tmp_path, "ly", command="lyapunov", series=series)
        manifest = run_experiment(cfg)
        assert not manifest.passed

    def test_header_only_series_rejected(self, tmp_path):
        series = tmp_path / "empty.csv"
        emit_series(series, SERIES_COLUMNS, [])
        cfg = small_cfg(tmp_path, "ly", command="lyapunov", series=series)
        with pytest.raises(ValueError, match="empty.csv"):
            run_experiment(cfg)


class TestLindecayPipeline:
    def test_fit_records_carry_target_tolerance_verdict(self, tmp_path):
        cfg = small_cfg(
            tmp_path, "ld", command="lindecay",
            radial_nodes=16, theta_nodes=8, phi_nodes=16,
        )
        manifest = run_experiment(cfg)
        assert manifest.passed
        report = json.loads((tmp_path / "ld" / "decay_fits.json").read_text())
        assert set(report["fits"]) == {"rho", "u", "e", "b", "grad_b"}
        for record in report["fits"].values():
            assert {"exponent", "target", "tolerance", "verdict", "window"} <= set(record)
            assert record["verdict"] == "pass"
        header = (tmp_path / "ld" / "norms.csv").read_text().splitlines()[0]
        assert header == "t,rho,u,e,b,grad_b"


class TestCli:
    def test_invalid_config_exits_two(self, capsys):
        assert main(["stationary", "--gamma", "0.9"]) == 2
        assert "gamma" in capsys.readouterr().err

    def test_stationary_roundtrip_exit_zero(self, tmp_path, capsys):
        code = main(
            ["stationary", "--grid-n", "16", "--box-l", "10", "--out-dir", str(tmp_path / "r")]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "picard_converged: pass" in out
        assert (tmp_path / "r" / "manifest.json").exists()

    def test_failed_checks_exit_one(self, tmp_path, capsys):
        series = tmp_path / "bad.csv"
        rows = [
            (0.1 * k,) + (1.0 + 0.25 * k, 1.0) * 2 + (0.0,) * 9 for k in range(20)
        ]
        emit_series(series, SERIES_COLUMNS, rows)
        code = main(
            ["lyapunov", "--series", str(series), "--out-dir", str(tmp_path / "ly")]
        )
        assert code == 1
        assert "FAIL" in capsys.readouterr().out

    def test_run_errors_exit_one_with_context(self, tmp_path, capsys):
        code = main(
            ["lyapunov", "--series", str(tmp_path / "nope.csv"),
             "--out-dir", str(tmp_path / "ly")]
        )
        assert code == 1
        assert "lyapunov run failed" in capsys.readouterr().err

    def test_config_file_plus_flag_override(self, tmp_path):
        path = tmp_path / "exp.ini"
        path.write_text("[grid]\ngrid_n = 16\nbox_l = 10.0\n[background]\neps = 0.0\n")
        code = main(
            ["stationary", "--config", str(path), "--eps", "0.03",
             "--out-dir", str(tmp_path / "r")]
        )
        assert code == 0
        report = json.loads((tmp_path / "r" / "stationary.json").read_text())
        assert report["iterations"] > 0  # the override un-trivialized the run

    def test_help_documents_defaults(self):
        parser = build_parser()
        [sub_action] = [
            a for a in parser._actions if isinstance(a, argparse._SubParsersAction)
        ]
        text = sub_action.choices["stationary"].format_help()
        assert "--grid-n" in text and "default 48" in text
        assert "--out-dir" in text and "--seed" in text and "--threads" in text


class TestThreadedAgreement:
    def test_parallel_matches_serial_within_tolerance(self, tmp_path):
        run_experiment(small_cfg(tmp_path, "s1", command="evolve", t_end=1, cadence=0.25, threads=1))
        run_experiment(small_cfg(tmp_path, "s4", command="evolve", t_end=1, cadence=0.25, threads=4))
        a = np.genfromtxt(tmp_path / "s1" / "series.csv", delimiter=",", names=True)
        b = np.genfromtxt(tmp_path / "s4" / "series.csv", delimiter=",", names=True)
        for name in a.dtype.names:
            ref = np.maximum(np.abs(a[name]), 1e-300)
            assert (np.abs(a[name] - b[name]) / ref).max() <= 1e-12
