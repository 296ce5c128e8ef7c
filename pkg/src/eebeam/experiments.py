"""Experiment harness: convergence trace, EE vs P_T, EE vs P0.

Every experiment runs one job per seed (seeds are independent and may run
in a process pool), then assembles rows ordered by (grid point, seed) and
appends mean rows across seeds. Results serialise to CSV plus a JSON
manifest.

Sweeps use continuation: along the grid each seed's run may start from
the previous grid point's precoder when that is feasible and has higher EE
than the fresh initialisation. P_T is swept upwards (a larger budget keeps
the previous optimum feasible) and P0 downwards (the previous optimum has
strictly higher EE at the smaller P0).
"""
from __future__ import annotations

import csv
import io
import json
import math
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import zero_forcing_precoder
from .exceptions import InvalidScenarioError, ScenarioInfeasibleError
from .linkbudget import ScenarioConfig, dbw_to_watts, load_scenario, scenario_from_dict, \
    default_scenario_dict
from .metrics import check_feasible, energy_efficiency, gbps_per_watt, total_power
from .optimizer import AlgorithmConfig, initialize_precoder, run

EXPERIMENTS = ("convergence", "sweep_pt", "sweep_p0")
DEFAULT_GRIDS = {"sweep_pt": [6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0],
                 "sweep_p0": [6.0, 8.0, 10.0, 12.0, 14.0]}
DEFAULT_SEEDS = list(range(1, 21))

CONVERGENCE_FIELDS = ("seed", "iteration", "f", "ee_nats_per_W", "ee_gbps_per_W", "mu",
                      "power_W", "min_qos_slack", "inner_status", "millis",
                      "zf_ee_nats_per_W", "zf_ee_gbps_per_W")
SWEEP_FIELDS = ("grid_dBW", "grid_W", "seed", "ee_nats_per_W", "ee_gbps_per_W",
                "zf_ee_nats_per_W", "zf_ee_gbps_per_W", "power_W", "iterations", "status",
                "init")


@dataclass
class ExperimentSpec:
    experiment: str
    scenario: ScenarioConfig | str | Path | None = None
    grid_dBW: list | None = None
    seeds: list = field(default_factory=lambda: list(DEFAULT_SEEDS))
    out_dir: str | Path | None = None
    algorithm: AlgorithmConfig = field(default_factory=AlgorithmConfig)
    jobs: int = 1
    continuation: bool = True

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"experiment must be one of {EXPERIMENTS}")
        if self.grid_dBW is None:
            self.grid_dBW = list(DEFAULT_GRIDS.get(self.experiment, []))
        if self.experiment != "convergence":
            if not self.grid_dBW or not all(math.isfinite(float(g)) for g in self.grid_dBW):
                raise ValueError("sweep grid must be nonempty and finite")
        if not self.seeds:
            raise ValueError("need at least one seed")

    def scenario_config(self) -> ScenarioConfig:
        if isinstance(self.scenario, ScenarioConfig):
            return self.scenario
        if self.scenario is None:
            return scenario_from_dict(default_scenario_dict())
        return load_scenario(self.scenario)


@dataclass
class ExperimentResult:
    experiment: str
    fieldnames: tuple
    rows: list
    manifest: dict

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=self.fieldnames, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({k: r.get(k, "") for k in self.fieldnames})
        return buf.getvalue()

    def seed_rows(self) -> list:
        return [r for r in self.rows if isinstance(r["seed"], int)]

    def mean_rows(self) -> list:
        return [r for r in self.rows if r["seed"] == "mean"]

    def write(self, out_dir) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / f"{self.experiment}.csv"
        csv_path.write_text(self.to_csv())
        man_path = out / f"{self.experiment}_manifest.json"
        man_path.write_text(json.dumps(self.manifest, indent=2, default=_jsonable))
        return csv_path, man_path


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    return str(o)


def _zf_ee(H, p):
    try:
        W = zero_forcing_precoder(H, p.total_power_W, p.sinr_thresholds, p.noise_power)
    except (ScenarioInfeasibleError, InvalidScenarioError):
        return float("nan")
    return energy_efficiency(H, W, p.noise_power, p.beam_weights, p.static_power_W)


# --- per-seed jobs (top-level so they pickle into a process pool) ----------

def _convergence_job(cfg: ScenarioConfig, seed: int, alg: AlgorithmConfig):
    p, _, ch = cfg.realize(seed)
    alg = AlgorithmConfig(**{**asdict(alg), "rng_seed": seed})
    _, trace = run(ch.H, p, alg)
    return seed, trace, _zf_ee(ch.H, p), p.bandwidth_Hz


def _sweep_job(cfg: ScenarioConfig, seed: int, alg: AlgorithmConfig, experiment: str,
               grid: list, continuation: bool):
    alg = AlgorithmConfig(**{**asdict(alg), "rng_seed": seed})
    order = sorted(grid) if experiment == "sweep_pt" else sorted(grid, reverse=True)
    out = {}
    W_prev = None
    for g in order:
        watts = dbw_to_watts(g)
        c = cfg.with_powers(total_power_W=watts) if experiment == "sweep_pt" \
            else cfg.with_powers(static_power_W=watts)
        p, _, ch = c.realize(seed)
        H, s2, a, P0 = ch.H, p.noise_power, p.beam_weights, p.static_power_W
        starts = []
        try:
            W0, how = initialize_precoder(H, s2, p.total_power_W, p.sinr_thresholds, alg,
                                          return_method=True)
            starts.append((energy_efficiency(H, W0, s2, a, P0), W0, how))
        except ScenarioInfeasibleError:
            pass
        if continuation and W_prev is not None and \
                check_feasible(H, W_prev, s2, p.total_power_W, p.sinr_thresholds, 0.0, 0.0):
            starts.append((energy_efficiency(H, W_prev, s2, a, P0), W_prev, "continuation"))
        row = {"grid_dBW": g, "grid_W": watts, "seed": seed,
               "zf_ee_nats_per_W": _zf_ee(H, p)}
        row["zf_ee_gbps_per_W"] = gbps_per_watt(row["zf_ee_nats_per_W"], p.bandwidth_Hz)
        if not starts:
            row.update(ee_nats_per_W=float("nan"), ee_gbps_per_W=float("nan"),
                       power_W=float("nan"), iterations=0, status="scenario_infeasible", init="")
            out[g] = row
            continue
        _, W0, how = max(starts, key=lambda s: s[0])
        W, trace = run(H, p, alg, W0=W0)
        W_prev = W
        ee = energy_efficiency(H, W, s2, a, P0)
        row.update(ee_nats_per_W=ee, ee_gbps_per_W=gbps_per_watt(ee, p.bandwidth_Hz),
                   power_W=total_power(W), iterations=trace.iterations, status=trace.status,
                   init=how)
        out[g] = row
    return seed, out


def _map(fn, args_list, jobs):
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(fn, *zip(*args_list)))
    return [fn(*a) for a in args_list]


def _manifest(spec: ExperimentSpec, cfg: ScenarioConfig, wall: float, extra: dict) -> dict:
    import clarabel
    import scipy
    return {
        "experiment": spec.experiment,
        "scenario": cfg.source,
        "algorithm": asdict(spec.algorithm),
        "seeds": list(spec.seeds),
        "grid_dBW": list(spec.grid_dBW or []),
        "grid_is_default": spec.grid_dBW == DEFAULT_GRIDS.get(spec.experiment),
        "continuation": spec.continuation,
        "versions": {"eebeam": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__,
                     "clarabel": getattr(clarabel, "__version__", "unknown")},
        "wall_time_s": wall,
        "artifact_choices": {
            "beam_pattern": "synthetic Gaussian taper (stand-in for a measured feed pattern)",
            "sinr_threshold_default": "0 dB per user unless set in the scenario file",
            "default_grids_dBW": DEFAULT_GRIDS,
            "noise_temperature": "T_R = G_R / (G/T)",
        },
        **extra,
    }


def run_convergence(spec: ExperimentSpec) -> ExperimentResult:
    """Per-iteration EE of the alternating algorithm per seed, plus a mean block.

    Seeds that stop early are carried forward at their final value in the
    mean block. The ZF columns hold each seed's constant baseline EE.
    """
    cfg = spec.scenario_config()
    t0 = time.perf_counter()
    results = _map(_convergence_job, [(cfg, s, spec.algorithm) for s in spec.seeds], spec.jobs)
    rows = []
    for seed, trace, zf, B in sorted(results, key=lambda r: r[0]):
        for r in trace.rows:
            d = asdict(r)
            d["seed"] = seed
            d["zf_ee_nats_per_W"] = zf
            d["zf_ee_gbps_per_W"] = gbps_per_watt(zf, B)
            rows.append(d)
    B = results[0][3]
    n = max(len(t.rows) for _, t, _, _ in results)
    f_pad = np.array([np.pad(t.f, (0, n - len(t.f)), mode="edge") for _, t, _, _ in results])
    ee_pad = np.array([np.pad(t.ee, (0, n - len(t.ee)), mode="edge") for _, t, _, _ in results])
    zf_mean = float(np.nanmean([z for _, _, z, _ in results])) \
        if not all(np.isnan([z for _, _, z, _ in results])) else float("nan")
    for i in range(n):
        ee = float(ee_pad[:, i].mean())
        rows.append({"seed": "mean", "iteration": i, "f": float(f_pad[:, i].mean()),
                     "ee_nats_per_W": ee, "ee_gbps_per_W": gbps_per_watt(ee, B),
                     "zf_ee_nats_per_W": zf_mean, "zf_ee_gbps_per_W": gbps_per_watt(zf_mean, B)})
    extra = {
        "iterations_per_seed": {str(s): t.iterations for s, t, _, _ in results},
        "status_per_seed": {str(s): t.status for s, t, _, _ in results},
        "init_per_seed": {str(s): t.init_method for s, t, _, _ in results},
        "mean_curve_nondecreasing": bool(np.all(np.diff(ee_pad.mean(axis=0)) >= -1e-9)),
    }
    res = ExperimentResult("convergence", CONVERGENCE_FIELDS, rows,
                           _manifest(spec, cfg, time.perf_counter() - t0, extra))
    if spec.out_dir is not None:
        res.write(spec.out_dir)
    return res


def _run_sweep(spec: ExperimentSpec) -> ExperimentResult:
    cfg = spec.scenario_config()
    t0 = time.perf_counter()
    grid = [float(g) for g in spec.grid_dBW]
    args = [(cfg, s, spec.algorithm, spec.experiment, grid, spec.continuation) for s in spec.seeds]
    results = dict(_map(_sweep_job, args, spec.jobs))
    B = cfg.base.bandwidth_Hz
    rows, means = [], []
    for g in grid:
        block = [results[s][g] for s in sorted(results)]
        rows.extend(block)
        ee = np.array([r["ee_nats_per_W"] for r in block])
        zf = np.array([r["zf_ee_nats_per_W"] for r in block])
        m = float(ee.mean())
        mz = float(np.nanmean(zf)) if np.any(np.isfinite(zf)) else float("nan")
        means.append(m)
        rows.append({"grid_dBW": g, "grid_W": dbw_to_watts(g), "seed": "mean",
                     "ee_nats_per_W": m, "ee_gbps_per_W": gbps_per_watt(m, B),
                     "zf_ee_nats_per_W": mz, "zf_ee_gbps_per_W": gbps_per_watt(mz, B),
                     "status": f"{int(np.sum(np.isfinite(zf)))}/{len(zf)} zf feasible"})
    means = np.array(means)
    extra = {"mean_ee_nats_per_W": dict(zip(map(str, grid), means.tolist()))}
    if len(grid) > 1:
        order = np.argsort(grid)
        diffs = np.diff(means[order])
        if spec.experiment == "sweep_pt":
            k = int(np.nanargmax(means))
            rows.append({"grid_dBW": grid[k], "grid_W": dbw_to_watts(grid[k]), "seed": "argmax",
                         "ee_nats_per_W": float(means[k]),
                         "ee_gbps_per_W": gbps_per_watt(float(means[k]), B)})
            extra["argmax_grid_dBW"] = grid[k]
            extra["mean_nondecreasing"] = bool(np.all(diffs >= 0))
        else:
            flag = bool(np.all(diffs < 0))
            rows.append({"grid_dBW": "", "seed": "monotone_decreasing", "status": str(flag).lower()})
            extra["mean_strictly_decreasing"] = flag
            extra["per_seed_strictly_decreasing"] = {
                str(s): bool(np.all(np.diff([results[s][g]["ee_nats_per_W"]
                                             for g in sorted(grid)]) < 0))
                for s in sorted(results)}
    res = ExperimentResult(spec.experiment, SWEEP_FIELDS, rows,
                           _manifest(spec, cfg, time.perf_counter() - t0, extra))
    if spec.out_dir is not None:
        res.write(spec.out_dir)
    return res


def run_sweep_pt(spec: ExperimentSpec) -> ExperimentResult:
    """EE versus total power budget, static power fixed by the scenario (10 dBW default)."""
    if spec.experiment != "sweep_pt":
        raise ValueError("spec.experiment must be 'sweep_pt'")
    return _run_sweep(spec)


def run_sweep_p0(spec: ExperimentSpec) -> ExperimentResult:
    """EE versus static power, power budget fixed by the scenario (10 dBW default)."""
    if spec.experiment != "sweep_p0":
        raise ValueError("spec.experiment must be 'sweep_p0'")
    return _run_sweep(spec)


RUNNERS = {"convergence": run_convergence, "sweep_pt": run_sweep_pt, "sweep_p0": run_sweep_p0}
