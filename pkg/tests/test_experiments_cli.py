import json
import math
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

import spinbus as sb
from spinbus import cli, experiments
from spinbus.errors import ConfigError
from spinbus.experiments import (ExperimentConfig, ResultRecord, build_params,
                                 load_config, resolve_landscape, run,
                                 write_records)


def _write_config(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(experiment="nope")
    with pytest.raises(ConfigError):
        ExperimentConfig(experiment="ensemble", workers=0)
    with pytest.raises(ConfigError):
        ExperimentConfig(experiment="ensemble",
                         landscape={"path": "/no/such/file.json"})
    with pytest.raises(ConfigError):
        ExperimentConfig(experiment="ensemble", sweep={"x0": []})


def test_digest_ignores_workers_and_out_dir(tmp_path):
    a = ExperimentConfig(experiment="ensemble", seed=3)
    b = a.replace(workers=4, out_dir=str(tmp_path))
    c = a.replace(seed=4)
    assert a.digest == b.digest
    assert a.digest != c.digest


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{oops")
    with pytest.raises(ConfigError):
        load_config(bad)
    with pytest.raises(ConfigError):
        load_config(_write_config(tmp_path, ["not", "a", "dict"], "list.json"))
    with pytest.raises(ConfigError):
        load_config(_write_config(tmp_path, {"experiment": "ensemble",
                                             "bogus_key": 1}, "unknown.json"))
    with pytest.raises(ConfigError):
        load_config(_write_config(tmp_path, {"seed": 1}, "noexp.json"))


def test_load_config_roundtrip(tmp_path):
    doc = {"experiment": "freq-sweep", "seed": 11,
           "params": {"kappa_z": 0.0},
           "sweep": {"n_omega": 5, "x0": [10.0], "kappa_z": [0.0]}}
    cfg = load_config(_write_config(tmp_path, doc))
    assert cfg.experiment == "freq-sweep"
    assert cfg.seed == 11
    assert cfg.sweep["n_omega"] == 5


def test_build_params_inf_strings():
    cfg = ExperimentConfig(experiment="ensemble",
                           params={"T1_v": "inf", "T2_s": "inf"})
    p = build_params(cfg)
    assert math.isinf(p.T1_v) and math.isinf(p.T2_s)
    with pytest.raises(ConfigError):
        build_params(ExperimentConfig(experiment="ensemble",
                                      params={"nope": 1}))


def test_resolve_landscape_sources(tmp_path):
    flat = resolve_landscape(ExperimentConfig(
        experiment="ensemble", landscape={"source": "flat", "splitting": 0.08}))
    assert float(flat.splitting_at(0.0)) == pytest.approx(0.08)

    gen = resolve_landscape(ExperimentConfig(
        experiment="ensemble", landscape={"source": "ge-diffusion"}, seed=5))
    assert gen.model_tag == "ge-diffusion"

    # center="min" puts the splitting minimum at the origin
    centered = resolve_landscape(ExperimentConfig(
        experiment="ensemble",
        landscape={"source": "ge-diffusion", "center": "min"}, seed=5))
    ev = centered.splitting_at(centered.x_grid, check=False)
    assert float(centered.splitting_at(0.0)) == pytest.approx(float(np.min(ev)))

    sb.save_landscape(gen, tmp_path / "dev.json")
    from_file = resolve_landscape(ExperimentConfig(
        experiment="ensemble",
        landscape={"source": "file", "path": str(tmp_path / "dev.json")}))
    assert np.array_equal(from_file.delta_real, gen.delta_real)

    with pytest.raises(ConfigError):
        resolve_landscape(ExperimentConfig(
            experiment="ensemble", landscape={"source": "bogus"}))


def test_record_json_roundtrip():
    rec = ResultRecord(experiment="ensemble", coords={"device": 0},
                       infidelity={"analytical": 1.5e-2},
                       config_digest="abc", seed=7,
                       diagnostics={"note": 1})
    doc = json.loads(rec.to_json())
    assert doc["coords"] == {"device": 0}
    assert doc["infidelity"]["analytical"] == 1.5e-2
    assert doc["seed"] == 7


def test_write_records(tmp_path):
    recs = [ResultRecord(experiment="ensemble", coords={"device": i},
                         infidelity={}, config_digest="d", seed=i)
            for i in range(3)]
    path = tmp_path / "out" / "r.jsonl"
    write_records(recs, path)
    lines = path.read_text().splitlines()
    assert len(lines) == 3
    assert json.loads(lines[1])["coords"]["device"] == 1


def _freq_cfg(tmp_path, seed=0, workers=1):
    return ExperimentConfig(
        experiment="freq-sweep", seed=seed, workers=workers,
        out_dir=str(tmp_path / "out"),
        params={"dt": 2e-3},
        landscape={"source": "flat", "splitting": 0.1},
        sweep={"n_omega": 3, "x0": [10.0], "kappa_z": [0.0]})


def test_freq_sweep_runs_and_writes(tmp_path):
    cfg = _freq_cfg(tmp_path)
    records = run(cfg)
    assert len(records) == 3
    out = Path(cfg.out_dir)
    assert (out / "freq_sweep.jsonl").exists()
    assert (out / "freq_sweep_kz0.csv").exists()
    for rec in records:
        assert 0.0 <= rec.infidelity["analytical"] <= 1.0
        assert rec.config_digest == cfg.digest


def test_records_worker_invariant(tmp_path):
    # identical records regardless of worker count, byte for byte
    cfg1 = ExperimentConfig(
        experiment="ensemble", seed=42, workers=1,
        out_dir=str(tmp_path / "w1"),
        params={"kappa_z": 1e-6, "dt": 2e-3},
        landscape={"source": "ge-diffusion"},
        sweep={"n": 2, "budget": 12, "cal_stop": 2e-2, "target": 2e-2,
               "max_iterations": 5})
    cfg2 = cfg1.replace(workers=2, out_dir=str(tmp_path / "w2"))
    run(cfg1)
    run(cfg2)
    b1 = (tmp_path / "w1" / "ensemble.jsonl").read_bytes()
    b2 = (tmp_path / "w2" / "ensemble.jsonl").read_bytes()
    assert b1 == b2


def _run_cli(argv, env_extra=None):
    env = dict(os.environ)
    if env_extra:
        env.update(env_extra)
    return subprocess.run([sys.executable, "-m", "spinbus.cli", *argv],
                          capture_output=True, text=True, env=env)


def test_cli_exit_codes(tmp_path):
    cfg_path = _write_config(tmp_path, {
        "experiment": "freq-sweep",
        "params": {"dt": 2e-3},
        "landscape": {"source": "flat", "splitting": 0.1},
        "sweep": {"n_omega": 3, "x0": [10.0], "kappa_z": [0.0]}})

    ok = _run_cli(["freq-sweep", "--config", str(cfg_path),
                   "--out", str(tmp_path / "cli_out")])
    assert ok.returncode == 0, ok.stderr
    assert (tmp_path / "cli_out" / "freq_sweep.jsonl").exists()

    # config/subcommand mismatch
    mismatch = _run_cli(["ensemble", "--config", str(cfg_path)])
    assert mismatch.returncode == 2

    # malformed config file
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    r = _run_cli(["freq-sweep", "--config", str(bad)])
    assert r.returncode == 2
    assert "config error" in r.stderr


def test_cli_workers_env(tmp_path):
    cfg_path = _write_config(tmp_path, {
        "experiment": "freq-sweep",
        "params": {"dt": 2e-3},
        "landscape": {"source": "flat", "splitting": 0.1},
        "sweep": {"n_omega": 3, "x0": [10.0], "kappa_z": [0.0]}})
    r = _run_cli(["freq-sweep", "--config", str(cfg_path)],
                 env_extra={"SPINBUS_WORKERS": "banana"})
    assert r.returncode == 2
    assert "SPINBUS_WORKERS" in r.stderr


def test_cli_main_callable(tmp_path):
    cfg_path = _write_config(tmp_path, {
        "experiment": "freq-sweep",
        "params": {"dt": 2e-3},
        "landscape": {"source": "flat", "splitting": 0.1},
        "sweep": {"n_omega": 3, "x0": [10.0], "kappa_z": [0.0]}})
    code = cli.main(["freq-sweep", "--config", str(cfg_path),
                     "--seed", "9", "--out", str(tmp_path / "main_out")])
    assert code == 0
    line = (tmp_path / "main_out" / "freq_sweep.jsonl").read_text().splitlines()[0]
    assert json.loads(line)["seed"] == 9
