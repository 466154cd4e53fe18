"""Command-line front end.

    zonoreach run --config scenario.json [--mode ltv|lipschitz] [--out DIR]
                  [--seed N] [--traj data.csv] [--stride N]
    zonoreach validate --result-dir DIR --config scenario.json
                  [--trajectories N] [--seed N]
    zonoreach export-plot --result-dir DIR --dims i,j [--config scenario.json]

run streams the scenario (simulate or ingest one step, update the
estimator, compute the reachable sets at every trigger) and writes one
reach result per trigger plus a manifest. validate replays seeded truth
trajectories against the stored sets and fails (exit 1) on any containment
violation. export-plot writes 2-D polygon vertex files per step plus the
validation sample points for external plotting.

Exit codes: 0 ok, 1 containment violations (validate), 2 configuration or
missing-file errors, 3 numerical failures. The last stdout line of every
command is a single JSON status object.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, ScenarioConfig, load_config
from .estimator import (
    EstimationError,
    EstimatorState,
    affine_regressor,
    default_init,
    ltv_regressor,
    output_row,
    update,
)
from .harness import PlantSpec, SlidingWindow, ingest_csv, simulate
from .reach_ltv import LtvReachConfig, ReachResult, reach_ltv
from .reach_lipschitz import LipReachConfig, reach_lipschitz
from .sets import sample, vertices_2d
from .validation import validate_reach

__all__ = ["main", "cmd_run", "cmd_validate", "cmd_export_plot", "bundled_config_path"]


def bundled_config_path(name: str) -> Path:
    """Path of a packaged scenario file, e.g. 'ltv_static'."""
    p = Path(__file__).parent / "configs" / f"{name}.json"
    if not p.exists():
        available = sorted(q.stem for q in p.parent.glob("*.json"))
        raise FileNotFoundError(f"no bundled config {name!r}; available: {available}")
    return p


def _status(obj: dict) -> None:
    print(json.dumps(obj, sort_keys=True))


def _write_bounds_csv(result: ReachResult, path: Path) -> None:
    with open(path, "w") as fh:
        fh.write("step,dim,lower,upper\n")
        for k, Z in enumerate(result.sets):
            lo, hi = Z.bounds()
            for d in range(Z.dim):
                fh.write(f"{k},{d},{float(lo[d])!r},{float(hi[d])!r}\n")


def _trigger_rng(seed: int, trigger: int) -> np.random.Generator:
    return np.random.default_rng([seed, trigger])


def _reach_config(cfg: ScenarioConfig):
    common = dict(
        horizon=cfg.horizon,
        input_sets=[cfg.input_set] * cfg.horizon,
        noise_set=cfg.noise_set,
        initial_set=cfg.initial_set,
        reduction_order=cfg.reach_reduction_order,
    )
    if cfg.mode == "ltv":
        return LtvReachConfig(sigma_ab=cfg.sigma_drift, **common)
    return LipReachConfig(sigma_m=cfg.sigma_drift, **common)


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config, mode=args.mode, seed=args.seed,
                          out_dir=args.out, stride=args.stride)
    except ConfigError as exc:
        _status({"command": "run", "status": "error", "field": exc.field_path, "message": str(exc)})
        return 2

    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(cfg.seed)

    if args.traj:
        try:
            traj = ingest_csv(args.traj)
        except (OSError, ValueError) as exc:
            _status({"command": "run", "status": "error", "message": str(exc)})
            return 2
        if traj.states.shape[0] < 2:
            _status({"command": "run", "status": "error", "message": "ingested trajectory too short"})
            return 2
    else:
        x0 = sample(cfg.initial_set, rng)
        inputs = np.array([sample(cfg.input_set, rng) for _ in range(cfg.steps)])
        traj = simulate(cfg.plant, x0, inputs, rng)
        if traj.truncated:
            _status({"command": "run", "status": "error", "message": "plant diverged during streaming"})
            return 3

    regressor = ltv_regressor if cfg.mode == "ltv" else affine_regressor
    state = default_init(
        cfg.regressor_dim,
        cfg.n_x,
        sigma_v=cfg.sigma_v,
        sigma_theta=cfg.sigma_theta,
        lam=cfg.lam,
        tau=cfg.tau,
        g0_scale=cfg.g0_scale,
        reduction_order=cfg.est_reduction_order,
    )
    if args.resume:
        with open(args.resume) as fh:
            state = EstimatorState.from_dict(json.load(fh))

    window = SlidingWindow.empty(cfg.window, cfg.n_x, cfg.n_u)
    reach_cfg = _reach_config(cfg)
    triggers = []
    i_m_max_floor = 0.0
    n_transitions = min(traj.inputs.shape[0], traj.states.shape[0] - 1)

    try:
        for k, (x, u, xn) in enumerate(traj.transitions()):
            state = update(state, regressor(x, u), output_row(xn))
            window = window.push(x, u, xn)
            t = state.step
            if t < cfg.warmup or (t - cfg.warmup) % cfg.stride or t > n_transitions - 1:
                continue
            if cfg.mode == "ltv":
                result = reach_ltv(state, window, reach_cfg, i_m_max_floor=i_m_max_floor)
                i_m_max_floor = result.diagnostics["i_m_max"]
            else:
                result = reach_lipschitz(state, window, reach_cfg)
            result.diagnostics["trigger_step"] = t
            name = f"reach_{t:06d}"
            with open(out / f"{name}.json", "w") as fh:
                json.dump(result.to_dict(), fh)
            _write_bounds_csv(result, out / f"{name}_bounds.csv")
            true_model = None
            if traj.models is not None:
                A, B = traj.models[t]
                true_model = {"A": A.tolist(), "B": B.tolist()}
            triggers.append(
                {"step": t, "result": f"{name}.json", "bounds": f"{name}_bounds.csv",
                 "true_model": true_model}
            )
    except EstimationError as exc:
        _status({"command": "run", "status": "error", "message": str(exc)})
        return 3

    with open(out / "estimator_final.json", "w") as fh:
        json.dump(state.to_dict(), fh)
    manifest = {
        "name": cfg.name,
        "mode": cfg.mode,
        "seed": cfg.seed,
        "steps": cfg.steps,
        "warmup": cfg.warmup,
        "stride": cfg.stride,
        "config": cfg.raw,
        "ingested": bool(args.traj),
        "triggers": triggers,
        "estimator": "estimator_final.json",
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=1)
    _status({"command": "run", "status": "ok", "out_dir": str(out), "triggers": len(triggers)})
    return 0


def _validation_plant(cfg: ScenarioConfig, trigger: dict) -> PlantSpec:
    """Plant whose nominal model matches the truth at the trigger step."""
    plant = cfg.plant
    tm = trigger.get("true_model")
    if plant.kind != "ltv" or tm is None:
        return plant
    return PlantSpec(
        kind="ltv",
        noise_set=plant.noise_set,
        a0=np.array(tm["A"], dtype=float),
        b0=np.array(tm["B"], dtype=float),
        delta_a=plant.delta_a,
        delta_b=plant.delta_b,
        drift=plant.drift,
        sigma_ab=plant.sigma_ab,
        dt=plant.dt,
    )


def _load_run(result_dir: str):
    rd = Path(result_dir)
    manifest_path = rd / "manifest.json"
    if not manifest_path.exists():
        raise FileNotFoundError(f"no manifest.json in {result_dir}")
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    runs = []
    for trig in manifest["triggers"]:
        rp = rd / trig["result"]
        if not rp.exists():
            raise FileNotFoundError(f"missing result file {rp}")
        with open(rp) as fh:
            runs.append((trig, ReachResult.from_dict(json.load(fh))))
    return manifest, runs


def cmd_validate(args) -> int:
    try:
        cfg = load_config(args.config, seed=args.seed)
        manifest, runs = _load_run(args.result_dir)
    except (ConfigError, FileNotFoundError, json.JSONDecodeError) as exc:
        _status({"command": "validate", "status": "error", "message": str(exc)})
        return 2
    n_traj = args.trajectories or cfg.n_traj
    seed = cfg.seed if args.seed is None else args.seed

    reports = []
    total_viol = 0
    for trig, result in runs:
        plant = _validation_plant(cfg, trig)
        rng = _trigger_rng(seed, trig["step"])
        report = validate_reach(
            result,
            plant,
            cfg.initial_set,
            [cfg.input_set] * (len(result.sets) - 1),
            n_traj,
            rng,
            seed=seed,
        )
        total_viol += len(report.violations)
        reports.append({"trigger_step": trig["step"], "report": report.to_dict()})

    payload = {
        "result_dir": str(args.result_dir),
        "n_trajectories": n_traj,
        "seed": seed,
        "total_violations": total_viol,
        "reports": reports,
    }
    out_path = Path(args.result_dir) / "validation_report.json"
    with open(out_path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
    _status(
        {
            "command": "validate",
            "status": "ok" if total_viol == 0 else "violations",
            "total_violations": total_viol,
            "report": str(out_path),
        }
    )
    return 0 if total_viol == 0 else 1


def cmd_export_plot(args) -> int:
    try:
        dims = tuple(int(v) for v in args.dims.split(","))
        if len(dims) != 2:
            raise ValueError
    except ValueError:
        _status({"command": "export-plot", "status": "error", "message": f"bad --dims {args.dims!r}"})
        return 2
    try:
        cfg = load_config(args.config, seed=args.seed) if args.config else None
        manifest, runs = _load_run(args.result_dir)
    except (ConfigError, FileNotFoundError, json.JSONDecodeError) as exc:
        _status({"command": "export-plot", "status": "error", "message": str(exc)})
        return 2

    n_x = runs[0][1].sets[0].dim if runs else 0
    if not runs or not all(0 <= d < n_x for d in dims) or dims[0] == dims[1]:
        _status(
            {
                "command": "export-plot",
                "status": "error",
                "message": f"dims {dims} invalid for state dimension {n_x}",
            }
        )
        return 2

    out_root = Path(args.out or (Path(args.result_dir) / "plots"))
    files = 0
    for trig, result in runs:
        tdir = out_root / f"trigger_{trig['step']:06d}"
        tdir.mkdir(parents=True, exist_ok=True)
        for k, Z in enumerate(result.sets):
            V = vertices_2d(Z, dims)
            with open(tdir / f"polygon_step_{k:02d}.csv", "w") as fh:
                fh.write("x,y\n")
                for vx, vy in V:
                    fh.write(f"{float(vx)!r},{float(vy)!r}\n")
            files += 1
        if cfg is not None:
            seed = cfg.seed if args.seed is None else args.seed
            plant = _validation_plant(cfg, trig)
            rng = _trigger_rng(seed, trig["step"])
            horizon = len(result.sets) - 1
            points = [[] for _ in range(horizon + 1)]
            n_traj = args.trajectories or cfg.n_traj
            for t in range(n_traj):
                x0 = sample(cfg.initial_set, rng)
                ins = np.array([sample(cfg.input_set, rng) for _ in range(horizon)])
                tr = simulate(plant, x0, ins, rng)
                for k in range(horizon + 1):
                    points[k].append((t, tr.states[k, dims[0]], tr.states[k, dims[1]]))
            for k, pts in enumerate(points):
                with open(tdir / f"points_step_{k:02d}.csv", "w") as fh:
                    fh.write("trajectory,x,y\n")
                    for t, vx, vy in pts:
                        fh.write(f"{t},{float(vx)!r},{float(vy)!r}\n")
                files += 1
    _status({"command": "export-plot", "status": "ok", "out_dir": str(out_root), "files": files})
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="zonoreach", description="online data-driven reachability analysis"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="stream a scenario and compute reachable sets")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--mode", choices=["ltv", "lipschitz"], default=None)
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--traj", default=None, help="ingest a recorded trajectory CSV instead of simulating")
    p_run.add_argument("--stride", type=int, default=None)
    p_run.add_argument("--resume", default=None, help="estimator snapshot JSON to resume from")
    p_run.set_defaults(func=cmd_run)

    p_val = sub.add_parser("validate", help="Monte-Carlo containment check of a run directory")
    p_val.add_argument("--result-dir", required=True)
    p_val.add_argument("--config", required=True)
    p_val.add_argument("--trajectories", type=int, default=None)
    p_val.add_argument("--seed", type=int, default=None)
    p_val.set_defaults(func=cmd_validate)

    p_plot = sub.add_parser("export-plot", help="write 2-D polygon and sample-point CSVs")
    p_plot.add_argument("--result-dir", required=True)
    p_plot.add_argument("--dims", required=True, help="projection dimensions, e.g. 0,1")
    p_plot.add_argument("--config", default=None)
    p_plot.add_argument("--out", default=None)
    p_plot.add_argument("--seed", type=int, default=None)
    p_plot.add_argument("--trajectories", type=int, default=None)
    p_plot.set_defaults(func=cmd_export_plot)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except EstimationError as exc:
        _status({"command": args.command, "status": "error", "message": str(exc)})
        return 3


if __name__ == "__main__":
    sys.exit(main())
