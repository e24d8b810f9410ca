"""Reproducible parameter studies over devices, drives and optimizers.

Each study takes an ExperimentConfig, runs a deterministic set of
independent tasks (grid cells, scan positions, ensemble devices), and emits
one ResultRecord per coordinate as JSON lines, plus a CSV matrix for the 2D
sweeps.  Every record embeds the config digest and the seed that produced
it, so any single record can be recomputed exactly; worker count never
changes numeric output because tasks are independent and records are
ordered by coordinates.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from multiprocessing import get_context
from pathlib import Path

import numpy as np

from . import fixtures
from .errors import ConfigError
from .fidelity import default_target, evaluate_trajectory
from .landscape import (GeDiffusionConfig, LandscapeProfile, StepModelConfig,
                        derive_seed, flat_landscape, generate, load_landscape)
from .model import (analytical_amplitude, analytical_gate_time,
                    larmor_frequency, t2_star)
from .optimize import (CalibrationConfig, OptimizationConfig,
                       shaped_pulse_infidelity, bayesian_calibrate,
                       optimize_trajectory)
from .params import SimParams
from .pulse import TrajectorySpec, save_pulse, sinusoid_controls

EXPERIMENTS = ("dephasing-study", "freq-sweep", "grid-sweep", "magnet-scan",
               "ensemble", "optimize-one", "calibrate-one")

#: Hardware bound on knot positions, nm.
BOUND = 35.0


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    params: dict = field(default_factory=dict)
    landscape: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    seed: int = 0
    out_dir: str | None = None
    workers: int = 1
    full_scale: bool = False

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; "
                              f"choose one of {', '.join(EXPERIMENTS)}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        path = self.landscape.get("path")
        if path is not None and not Path(path).exists():
            raise ConfigError(f"landscape file does not exist: {path}")
        for key, rng in self.sweep.items():
            if isinstance(rng, (list, tuple)) and len(rng) == 0:
                raise ConfigError(f"sweep range {key!r} is empty")

    @property
    def digest(self) -> str:
        """Digest of the physics-relevant fields only, so that worker count
        and output location never alter the recorded provenance."""
        doc = dataclasses.asdict(self)
        doc.pop("workers")
        doc.pop("out_dir")
        payload = json.dumps(doc, sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def replace(self, **kw) -> "ExperimentConfig":
        return dataclasses.replace(self, **kw)


def load_config(path) -> ExperimentConfig:
    """Read an ExperimentConfig from a JSON document."""
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    allowed = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "experiment" not in doc:
        raise ConfigError("config is missing the 'experiment' key")
    try:
        return ExperimentConfig(**doc)
    except TypeError as exc:
        raise ConfigError(f"malformed config: {exc}") from exc


@dataclass(frozen=True)
class ResultRecord:
    experiment: str
    coords: dict
    infidelity: dict            # subset of {analytical, calibrated, optimized}
    config_digest: str
    seed: int
    t2_star: float | None = None
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True)


def write_records(records, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for rec in records:
            fh.write(rec.to_json() + "\n")


def write_matrix_csv(path, row_name, row_values, col_name, col_values, matrix):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"{row_name}\\{col_name}"] + [repr(c) for c in col_values])
        for rv, row in zip(row_values, matrix):
            w.writerow([repr(rv)] + [repr(v) for v in row])


# -- config plumbing -----------------------------------------------------------

def build_params(cfg: ExperimentConfig) -> SimParams:
    kw = dict(cfg.params)
    for key in ("T1_v", "T2_s"):
        if kw.get(key) == "inf":
            kw[key] = math.inf
    try:
        return SimParams(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad params: {exc}") from exc


def resolve_landscape(cfg: ExperimentConfig, seed: int | None = None) -> LandscapeProfile:
    """Build the device profile named by cfg.landscape.

    Sources: flat, ge-diffusion, step, file, fixture-lvsp, fixture-dephasing.
    An optional ``center`` key recenters the returned profile.
    """
    spec = dict(cfg.landscape)
    source = spec.pop("source", "fixture-lvsp")
    center = spec.pop("center", None)
    seed = cfg.seed if seed is None else seed

    if source == "flat":
        land = flat_landscape(splitting=spec.pop("splitting", 0.1),
                              phase=spec.pop("phase", 0.0),
                              length=spec.pop("length", 200.0))
    elif source == "ge-diffusion":
        spec.pop("path", None)
        land = generate(GeDiffusionConfig(**spec), seed)
    elif source == "step":
        spec.pop("path", None)
        land = generate(StepModelConfig(**spec), seed)
    elif source == "file":
        land = load_landscape(spec["path"])
    elif source == "fixture-lvsp":
        land = fixtures.lvsp_device(recenter=False)
    elif source == "fixture-dephasing":
        land = fixtures.dephasing_device()
    else:
        raise ConfigError(f"unknown landscape source {source!r}")

    if center == "min":
        x = land.x_grid
        land = land.recentered(float(x[np.argmin(land.splitting_at(x))]))
    elif center == "center":
        land = land.recentered(0.5 * (land.x_start + land.x_end))
    elif center is not None:
        land = land.recentered(float(center))
    return land


def _map(task, args_list, workers):
    if workers <= 1 or len(args_list) <= 1:
        return [task(a) for a in args_list]
    ctx = get_context("spawn")
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
        return list(pool.map(task, args_list))


# -- shared pulse-level helpers -------------------------------------------------

def analytical_infidelity(x0, landscape, p, omega=None):
    """Shaped analytic pi pulse at amplitude x0; returns (infidelity, Tg)."""
    Tg = analytical_gate_time(p, x0)
    c = p.constants
    if omega is None:
        omega = (c.g * c.mu_B * p.B_z + 2.0 * p.kappa_z) / c.h
    infid = shaped_pulse_infidelity(omega, Tg, landscape, p)
    return infid, Tg, omega


def calibrated_infidelity(landscape, p, x0_ref, seed, budget=60,
                          omega_halfwidth=4e-3, stop_below=None):
    """(omega, Tg)-calibrated shaped pulse at fixed amplitude ``x0_ref``.

    The gate-time interval extends above the closed-form value because the
    envelope ramps carry less drive area than the flat top; the seeded
    starting guesses compensate that known deficit up front.
    """
    c = p.constants
    f_frame = (c.g * c.mu_B * p.B_z + 2.0 * p.kappa_z) / c.h
    Tg0 = analytical_gate_time(p, x0_ref)
    cal = bayesian_calibrate(
        CalibrationConfig(
            omega_interval=(f_frame - omega_halfwidth, f_frame + omega_halfwidth),
            Tg_interval=(max(2.5, 0.85 * Tg0), 1.15 * Tg0 + 2.5),
            budget=budget, seed=seed, stop_below=stop_below,
            initial_points=((f_frame, Tg0 + 1.374),
                            (f_frame, Tg0 + 1.75))),
        landscape, p, x0=x0_ref)
    return cal


def optimized_infidelity(landscape, p, x0, seed=0, max_iterations=300,
                         target=9e-4, omega=None):
    """Trajectory-optimized infidelity starting from the analytic pulse."""
    Tg = analytical_gate_time(p, x0)
    c = p.constants
    if omega is None:
        omega = (c.g * c.mu_B * p.B_z + 2.0 * p.kappa_z) / c.h
    controls = sinusoid_controls(TrajectorySpec(x0=x0, omega=omega, Tg=Tg))
    tgt = default_target(p, Tg)
    trace = optimize_trajectory(
        controls,
        OptimizationConfig(max_iterations=max_iterations,
                           target_infidelity=target),
        landscape, p, tgt)
    return trace


# -- studies --------------------------------------------------------------------

def run_dephasing_study(cfg: ExperimentConfig):
    """Best-over-Tg infidelity per gradient strength at reference splittings.

    For each longitudinal gradient, the transverse one follows the fixed
    design ratio Q and the dephasing time follows from the charge-noise
    formula; the gate time is swept and the minimum infidelity recorded for
    the analytic and for the optimized pulse.
    """
    base = build_params(cfg)
    if cfg.full_scale:
        db_pars = list(np.geomspace(0.02, 0.2, 10))
        Tgs = list(np.geomspace(5.0, 360.0, 12))
    else:
        db_pars = cfg.sweep.get("db_par", [0.02, 0.0632, 0.2])
        Tgs = cfg.sweep.get("Tg", [10.0, 20.0, 40.0, 80.0])

    points = fixtures.dephasing_point_profiles()
    records = []
    for db_par in db_pars:
        p0 = base.with_q_link(db_par)
        p = dataclasses.replace(p0, T2_s=t2_star(p0))
        for ev, land in points:
            best_ana, best_opt = math.inf, math.inf
            best_Tg = None
            for Tg in Tgs:
                x0 = analytical_amplitude(p, Tg)
                if x0 > BOUND:
                    continue
                infid, _, _ = analytical_infidelity(x0, land, p)
                if infid < best_ana:
                    best_ana, best_Tg = infid, Tg
                tr = optimized_infidelity(land, p, x0, target=1e-4,
                                          max_iterations=cfg.sweep.get(
                                              "max_iterations", 300))
                best_opt = min(best_opt, tr.best_infidelity)
            records.append(ResultRecord(
                experiment=cfg.experiment,
                coords={"db_par": float(db_par), "splitting_meV": float(ev)},
                infidelity={"analytical": best_ana, "optimized": best_opt},
                t2_star=p.T2_s,
                diagnostics={"best_Tg": best_Tg},
                config_digest=cfg.digest, seed=cfg.seed))
    _emit(cfg, records, "dephasing_study")
    return records


def run_freq_sweep(cfg: ExperimentConfig):
    """Infidelity over (omega, x0) for each spin-valley coupling value."""
    base = build_params(cfg)
    land = resolve_landscape(cfg)
    c = base.constants
    f_L = larmor_frequency(base)
    n_om = 41 if cfg.full_scale else cfg.sweep.get("n_omega", 21)
    halfwidth = cfg.sweep.get("omega_halfwidth", 4e-3)
    omegas = list(f_L + np.linspace(-halfwidth, halfwidth, n_om))
    x0s = cfg.sweep.get("x0", [5.0, 10.0, 15.0])
    kappas = cfg.sweep.get("kappa_z", [0.0, 5e-6])

    records = []
    for kz in kappas:
        p = dataclasses.replace(base, kappa_z=kz)
        matrix = []
        for om in omegas:
            row = []
            for x0 in x0s:
                Tg = analytical_gate_time(p, x0)
                infid = shaped_pulse_infidelity(om, Tg, land, p)
                row.append(infid)
                records.append(ResultRecord(
                    experiment=cfg.experiment,
                    coords={"kappa_z": float(kz), "omega_GHz": float(om),
                            "x0": float(x0)},
                    infidelity={"analytical": infid},
                    config_digest=cfg.digest, seed=cfg.seed))
            matrix.append(row)
        if cfg.out_dir:
            write_matrix_csv(
                Path(cfg.out_dir) / f"freq_sweep_kz{kz:g}.csv",
                "omega_GHz", omegas, "x0_nm", x0s, matrix)
    _emit(cfg, records, "freq_sweep")
    return records


def _grid_cell(args):
    (cfg_dict, x0, Tg) = args
    cfg = ExperimentConfig(**cfg_dict)
    p = build_params(cfg)
    land = resolve_landscape(cfg)
    c = p.constants
    omega = (c.g * c.mu_B * p.B_z + 2.0 * p.kappa_z) / c.h
    controls = sinusoid_controls(TrajectorySpec(x0=x0, omega=omega, Tg=Tg))
    tgt = default_target(p, Tg)
    before = evaluate_trajectory(controls, land, p, tgt).infidelity
    trace = optimize_trajectory(
        controls,
        OptimizationConfig(max_iterations=cfg.sweep.get("max_iterations", 300),
                           target_infidelity=cfg.sweep.get("target", 5e-4)),
        land, p, tgt)
    return ResultRecord(
        experiment=cfg.experiment,
        coords={"x0": float(x0), "Tg": float(Tg)},
        infidelity={"analytical": before, "optimized": trace.best_infidelity},
        diagnostics={"iterations": trace.n_iterations,
                     "warning": trace.warning},
        config_digest=cfg.digest, seed=cfg.seed)


def run_grid_sweep(cfg: ExperimentConfig):
    """Pre/post-optimization infidelity over an (x0, Tg) grid."""
    n = 16 if cfg.full_scale else cfg.sweep.get("n", 8)
    x0s = list(np.linspace(*cfg.sweep.get("x0_range", (2.0, 20.0)), n))
    Tgs = list(np.linspace(*cfg.sweep.get("Tg_range", (5.0, 60.0)), n))
    tasks = [(dataclasses.asdict(cfg), x0, Tg) for Tg in Tgs for x0 in x0s]
    results = _map(_grid_cell, tasks, cfg.workers)
    records = sorted(results, key=lambda r: (r.coords["Tg"], r.coords["x0"]))

    if cfg.out_dir:
        for key, name in (("analytical", "grid_before.csv"),
                          ("optimized", "grid_after.csv")):
            matrix = [[next(r.infidelity[key] for r in records
                            if r.coords["x0"] == x0 and r.coords["Tg"] == Tg)
                       for x0 in x0s] for Tg in Tgs]
            write_matrix_csv(Path(cfg.out_dir) / name,
                             "Tg_ns", Tgs, "x0_nm", x0s, matrix)
    _emit(cfg, records, "grid_sweep")
    return records


def _scan_position(args):
    (cfg_dict, position) = args
    cfg = ExperimentConfig(**cfg_dict)
    p = build_params(cfg)
    device = resolve_landscape(cfg)
    land = device.recentered(position)
    x0 = cfg.sweep.get("x0", 10.0)
    seed = derive_seed(cfg.seed, int(round(position * 1000)))

    ana, Tg, omega = analytical_infidelity(x0, land, p)
    cal = calibrated_infidelity(land, p, x0, seed,
                                budget=cfg.sweep.get("budget", 60))
    tr = optimized_infidelity(land, p, x0, target=cfg.sweep.get("target", 9e-4))
    return ResultRecord(
        experiment=cfg.experiment,
        coords={"position": float(position)},
        infidelity={"analytical": ana, "calibrated": cal.infidelity,
                    "optimized": tr.best_infidelity},
        diagnostics={"omega_cal": cal.omega, "Tg_cal": cal.Tg,
                     "splitting_meV": float(land.splitting_at(0.0))},
        config_digest=cfg.digest, seed=seed)


def run_magnet_scan(cfg: ExperimentConfig):
    """Analytic / calibrated / optimized infidelity vs operating position."""
    device = resolve_landscape(cfg)
    lo = cfg.sweep.get("position_min", device.x_start + BOUND + 2.0)
    hi = cfg.sweep.get("position_max", device.x_end - BOUND - 2.0)
    n = 15 if cfg.full_scale else cfg.sweep.get("n", 7)
    positions = list(np.linspace(lo, hi, n))
    tasks = [(dataclasses.asdict(cfg), pos) for pos in positions]
    records = sorted(_map(_scan_position, tasks, cfg.workers),
                     key=lambda r: r.coords["position"])
    _emit(cfg, records, "magnet_scan")
    return records


def _ensemble_device(args):
    (cfg_dict, index) = args
    cfg = ExperimentConfig(**cfg_dict)
    p = build_params(cfg)
    seed = derive_seed(cfg.seed, index)
    spec = dict(cfg.landscape)
    spec.setdefault("source", "ge-diffusion")
    spec["center"] = "center"
    device = resolve_landscape(cfg.replace(landscape=spec), seed)

    x0 = cfg.sweep.get("x0", 10.0)
    ana, Tg, omega = analytical_infidelity(x0, device, p)
    cal = calibrated_infidelity(device, p, x0, seed,
                                budget=cfg.sweep.get("budget", 60),
                                stop_below=cfg.sweep.get("cal_stop", 2e-4))
    tr = optimized_infidelity(device, p, x0, target=cfg.sweep.get("target", 5e-4))
    return ResultRecord(
        experiment=cfg.experiment,
        coords={"device": index},
        infidelity={"analytical": ana, "calibrated": cal.infidelity,
                    "optimized": tr.best_infidelity},
        diagnostics={"center_splitting_meV": float(device.splitting_at(0.0)),
                     "omega_cal": cal.omega, "Tg_cal": cal.Tg},
        config_digest=cfg.digest, seed=seed)


def run_ensemble(cfg: ExperimentConfig):
    """Per-device pulse comparison across a generated device ensemble."""
    n = 1000 if cfg.full_scale else cfg.sweep.get("n", 100)
    tasks = [(dataclasses.asdict(cfg), i) for i in range(n)]
    records = sorted(_map(_ensemble_device, tasks, cfg.workers),
                     key=lambda r: r.coords["device"])

    edges = np.arange(0.0, 0.25001, 0.025)
    splittings = [r.diagnostics["center_splitting_meV"] for r in records]
    hist, _ = np.histogram(splittings, bins=edges)
    summary = {"bins_meV": edges.tolist(), "counts": hist.tolist()}
    for key in ("analytical", "calibrated", "optimized"):
        summary[f"below_1e-3_{key}"] = sum(
            1 for r in records if r.infidelity[key] < 1e-3)
    if cfg.out_dir:
        Path(cfg.out_dir).mkdir(parents=True, exist_ok=True)
        (Path(cfg.out_dir) / "ensemble_summary.json").write_text(
            json.dumps(summary, sort_keys=True))
    _emit(cfg, records, "ensemble")
    return records


def run_optimize_one(cfg: ExperimentConfig):
    """Optimize a single trajectory and save the resulting pulse file."""
    p = build_params(cfg)
    land = resolve_landscape(cfg)
    x0 = cfg.sweep.get("x0", 10.0)
    tr = optimized_infidelity(land, p, x0,
                              target=cfg.sweep.get("target", 9e-4),
                              max_iterations=cfg.sweep.get("max_iterations", 300))
    rec = ResultRecord(
        experiment=cfg.experiment,
        coords={"x0": float(x0)},
        infidelity={"optimized": tr.best_infidelity},
        diagnostics={"iterations": tr.n_iterations, "warning": tr.warning},
        config_digest=cfg.digest, seed=cfg.seed)
    if cfg.out_dir:
        Path(cfg.out_dir).mkdir(parents=True, exist_ok=True)
        save_pulse(tr.controls, Path(cfg.out_dir) / "optimized_pulse.json")
    _emit(cfg, [rec], "optimize_one")
    return [rec], tr


def run_calibrate_one(cfg: ExperimentConfig):
    """Calibrate (omega, Tg) for one device and record the optimum."""
    p = build_params(cfg)
    land = resolve_landscape(cfg)
    x0 = cfg.sweep.get("x0", 10.0)
    cal = calibrated_infidelity(land, p, x0, cfg.seed,
                                budget=cfg.sweep.get("budget", 60))
    rec = ResultRecord(
        experiment=cfg.experiment,
        coords={"x0": float(x0)},
        infidelity={"calibrated": cal.infidelity},
        diagnostics={"omega_cal": cal.omega, "Tg_cal": cal.Tg},
        config_digest=cfg.digest, seed=cfg.seed)
    if cfg.out_dir:
        Path(cfg.out_dir).mkdir(parents=True, exist_ok=True)
        c = sinusoid_controls(TrajectorySpec(x0=x0, omega=cal.omega, Tg=cal.Tg))
        save_pulse(c, Path(cfg.out_dir) / "calibrated_pulse.json")
    _emit(cfg, [rec], "calibrate_one")
    return [rec], cal


def _emit(cfg: ExperimentConfig, records, stem: str) -> None:
    if cfg.out_dir:
        write_records(records, Path(cfg.out_dir) / f"{stem}.jsonl")


RUNNERS = {
    "dephasing-study": run_dephasing_study,
    "freq-sweep": run_freq_sweep,
    "grid-sweep": run_grid_sweep,
    "magnet-scan": run_magnet_scan,
    "ensemble": run_ensemble,
    "optimize-one": run_optimize_one,
    "calibrate-one": run_calibrate_one,
}


def run(cfg: ExperimentConfig):
    return RUNNERS[cfg.experiment](cfg)
