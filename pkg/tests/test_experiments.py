import json

import numpy as np
import pytest

from holonomy_lab import cli
from holonomy_lab.experiments import (ConfigError, DEFAULTS, read_table_body, run, sweep, synth,
                                      validate_config)
from holonomy_lab.controls import PulseSchedule

MHZ = 2 * np.pi * 1e6


def test_empty_config_reports_scenario_and_keeps_defaults():
    with pytest.raises(ConfigError) as err:
        validate_config("")
    assert err.value.errors == ["scenario is required"]
    part = err.value.partial
    assert part["omega0_mhz"] == 300.0 and part["rates_mhz"] == {"gamma1": 8.0, "gamma2": 4.0, "gamma_phi": 16.0}


def test_defaults_are_nv_parameters():
    cfg = validate_config({"scenario": "fig2-dynamics"})
    assert cfg.omega0 == pytest.approx(300 * MHZ)
    assert cfg.gamma1 == pytest.approx(8 * MHZ)
    assert cfg.gamma2 == pytest.approx(cfg.gamma1 / 2)
    assert cfg.gamma_phi == pytest.approx(2 * cfg.gamma1)
    assert cfg.k_list == [1, 100, 1000]
    assert cfg.schedules == ["fixed-amplitude", "fixed-rate"]


def test_x2pi_flag():
    assert validate_config({"scenario": "custom", "x2pi": False}).omega0 == pytest.approx(300e6)


def test_negative_rate():
    with pytest.raises(ConfigError) as err:
        validate_config({"scenario": "custom", "rates_mhz": {"gamma_phi": -1}})
    assert any("rates must be non-negative" in e for e in err.value.errors)


def test_all_errors_collected():
    with pytest.raises(ConfigError) as err:
        validate_config({"scenario": "custom", "k_list": [0], "gamma": np.pi, "bogus": 1})
    text = " | ".join(err.value.errors)
    assert "k >= 1" in text and "chi undefined" in text and "unknown keys" in text


def test_gamma_out_of_range():
    with pytest.raises(ConfigError) as err:
        validate_config({"scenario": "custom", "gate": {"theta": 1.0, "gamma": 7.0}, "k_list": [1]})
    assert any("chi undefined" in e for e in err.value.errors)


def test_bad_json():
    with pytest.raises(ConfigError):
        validate_config("{not json")


def _small(scenario, tmp_path, **kw):
    raw = {"scenario": scenario, "n_zeta": 21, "n_times": 3, "output_dir": str(tmp_path), **kw}
    return validate_config(raw)


def test_fig1_tables(tmp_path):
    t = run(_small("fig1a", tmp_path, k_list=[1, 2, 3]))
    assert t.columns[:5] == ["k", "gamma", "schedule", "time_avg_pop", "integrated_pop_s"]
    assert len(t.rows) == 6
    body = read_table_body(tmp_path / "fig1a.csv")
    assert body.splitlines()[0].startswith("k,gamma,schedule,time_avg_pop,integrated_pop_s")
    t = run(_small("fig1b", tmp_path, schedule="fixed-amplitude"))
    assert len(t.rows) == 21 and all(0 < r["gamma"] < 2 * np.pi for r in t.rows)


def test_fig2_dynamics_table(tmp_path):
    t = run(_small("fig2-dynamics", tmp_path, k_list=[1, 5], gate=["NOT", "Hadamard"]))
    assert t.columns[:5] == ["gate", "k", "schedule", "t_s", "avg_fidelity"]
    assert len(t.rows) == 2 * 2 * 2 * 3
    assert {r["schedule"] for r in t.rows} == {"fixed-rate", "fixed-amplitude"}
    assert (tmp_path / "fig2-dynamics.summary.json").exists()
    for r in t.rows:
        assert r["omega0_rad_s"] == pytest.approx(300 * MHZ)


def test_sweep_rows_and_labels(tmp_path):
    cfg = _small("fig2-decay-sweep", tmp_path, schedule="fixed-amplitude",
                 sweep={"param": "gamma1", "start": 0, "stop": 32, "points": 3})
    t = sweep(cfg)
    assert len(t.rows) == 3 * 2
    assert {r["scheme"] for r in t.rows} == {"NHQC-baseline", "DS-NHQC"}
    assert all(r["status"] == "ok" for r in t.rows)
    for r in t.rows:
        assert r["gamma2_rad_s"] == pytest.approx(r["gamma1_rad_s"] / 2)


def test_single_point_sweep_reduces_to_run(tmp_path):
    cfg = _small("fig2-dephasing-sweep", tmp_path, schedule="fixed-amplitude", k_list=[2],
                 sweep={"param": "gamma_phi", "start": 16, "stop": 16, "points": 1})
    s = sweep(cfg).rows[0]["avg_fidelity"]
    d = run(_small("fig2-dynamics", tmp_path, schedule="fixed-amplitude", k_list=[2]), write=False)
    assert s == pytest.approx(d.summary["final"][0]["average"], abs=1e-12)


def test_synth_writes_schedules(tmp_path):
    paths = synth(_small("custom", tmp_path, k_list=[2], schedule="fixed-rate"), samples=11)
    assert len(paths) == 1
    s = PulseSchedule.from_csv(paths[0].read_text())
    # fixed-rate: eta_dot = omega0, so Omega = omega0 sin(chi) with chi = pi/3 at k = 2
    assert len(s.t) == 11 and s.omega[0] == pytest.approx(300 * MHZ * np.sin(np.pi / 3))


def test_cli_exit_codes(tmp_path, capsys):
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"scenario": "fig1a", "k_list": [1, 2]}))
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"scenario": "fig1a", "rates_mhz": {"gamma1": -1}, "k_list": [0]}))
    assert cli.main(["validate", str(good)]) == 0
    assert cli.main(["validate", str(bad)]) == 1
    err = capsys.readouterr().err
    assert "rates must be non-negative" in err and "k >= 1" in err
    out = tmp_path / "o"
    assert cli.main(["run", str(good), "--out", str(out), "--schedule", "fixed-rate"]) == 0
    assert "fixed-amplitude" not in read_table_body(out / "fig1a.csv")
    assert cli.main(["synth", str(good), "--out", str(out), "--samples", "5"]) == 0
    assert (out / "schedule_NOT_k2_fixed-amplitude.csv").exists()


def test_cli_sweep(tmp_path):
    cfg = tmp_path / "s.json"
    cfg.write_text(json.dumps({"scenario": "fig2-decay-sweep", "n_zeta": 11, "k_list": [1, 3],
                               "sweep": {"param": "gamma1", "start": 0, "stop": 8, "points": 2}}))
    assert cli.main(["sweep", str(cfg), "--out", str(tmp_path), "--jobs", "1"]) == 0
    assert len(read_table_body(tmp_path / "fig2-decay-sweep.csv").splitlines()) == 1 + 2 * 2 * 2


def test_cli_sweep_without_block(tmp_path):
    cfg = tmp_path / "s.json"
    cfg.write_text(json.dumps({"scenario": "custom"}))
    assert cli.main(["sweep", str(cfg), "--out", str(tmp_path)]) == 1


def test_parallel_equals_serial(tmp_path):
    cfg = _small("fig2-dynamics", tmp_path, k_list=[1, 4], schedule="fixed-amplitude")
    a = run(cfg, jobs=1, write=False).body()
    b = run(cfg, jobs=2, write=False).body()
    assert a == b


def test_defaults_table_untouched():
    validate_config({"scenario": "custom", "rates_mhz": {"gamma1": 1.0}})
    assert DEFAULTS["rates_mhz"]["gamma1"] == 8.0
