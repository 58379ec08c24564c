"""annealctl: run simulations, macroscopic flows, statics and comparisons.

    annealctl simulate --config run.cfg [--out DIR] [--seeds 1,2,3]
    annealctl drt      --config run.cfg
    annealctl slowflow --config run.cfg [--approx]
    annealctl statics  --config run.cfg
    annealctl compare  --config run.cfg

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O
error. All commands write their outputs plus a JSON manifest into the
output directory; simulate outputs are regenerable bit-exactly from the
manifest alone.
"""

from __future__ import annotations

import argparse
import itertools
import json
import os
import sys
import time

import numpy as np

from .closure import ClosureError, InfeasibleTargetError
from .config import ConfigError, ExperimentConfig, _flatten_json, parse_flat_text, validate_config
from .flows import FlowError, integrate
from .glauber import InitSpec, SimSpec, TruncatedRunError, run_ensemble
from .runio import read_csv_columns, write_json, write_trajectory_csv
from .statics import free_energy_noninteracting, solve_m, toeplitz_spectrum

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


def _load(args) -> ExperimentConfig:
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    if args.json_config:
        try:
            flat = _flatten_json(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON: {exc}") from exc
    else:
        flat = parse_flat_text(text)
    if getattr(args, "seeds", None):
        flat["run.seeds"] = args.seeds
    if getattr(args, "out", None):
        flat["output.dir"] = args.out
    if getattr(args, "approx", False):
        flat["run.approx"] = "true"
    return validate_config(flat)


def _outdir(cfg: ExperimentConfig) -> str:
    path = cfg.output["dir"]
    os.makedirs(path, exist_ok=True)
    return path


def _sim_filename(M: int, seed: int) -> str:
    return f"sim_M{M}_seed{seed}.csv"


def _traj_payload(traj) -> dict:
    payload = {
        "times": traj.times.tolist(),
        "m": traj.m.tolist(),
        "E": traj.E.tolist(),
        "eps": traj.eps.tolist(),
        "meta": traj.meta,
    }
    if traj.diagnostics:
        payload["diagnostics"] = {k: v.tolist() for k, v in traj.diagnostics.items()}
    return payload


def cmd_simulate(cfg: ExperimentConfig) -> dict:
    out = _outdir(cfg)
    run = cfg.run
    fmt = cfg.output["format"]
    manifest_runs = []
    files = []
    for M in cfg.m_values():
        params = cfg.params_for(M)
        specs = [
            SimSpec(
                params=params,
                t_end=run["t_end"],
                record_dt=run["record_dt"],
                seed=seed,
                init=InitSpec(run["init"], run.get("m0", 0.0)),
                max_attempts=run.get("max_attempts"),
            )
            for seed in run["seeds"]
        ]
        trajs = run_ensemble(specs, workers=run.get("workers"))
        for seed, traj in zip(run["seeds"], trajs):
            name = _sim_filename(M, seed)
            path = os.path.join(out, name)
            if fmt in ("csv", "both"):
                write_trajectory_csv(path, traj)
                files.append(name)
            if fmt in ("json", "both"):
                jname = name.replace(".csv", ".json")
                write_json(os.path.join(out, jname), _traj_payload(traj))
                files.append(jname)
            manifest_runs.append(
                {
                    "file": name,
                    "M": M,
                    "seed": seed,
                    "tau": params.tau,
                    "attempts": traj.meta["attempts"],
                    "accepted": traj.meta["accepted"],
                    "wall_time_s": traj.meta["wall_time_s"],
                    "init_observables": traj.meta["init_observables"],
                }
            )
    manifest = {
        "command": "simulate",
        "config_flat": cfg.raw,
        "columns": ["t", "m", "E", "eps"],
        "runs": manifest_runs,
    }
    write_json(os.path.join(out, "simulate_manifest.json"), manifest)
    return manifest


def _flow_y0(kind: str, M: int, m0: float, eps0: float) -> np.ndarray:
    if kind == "ferro_slice":
        return np.concatenate([np.full(M, m0), np.full(M, eps0)])
    if kind in ("slow", "slow_approx"):
        return np.array([m0])
    return np.array([m0, eps0])


def cmd_drt(cfg: ExperimentConfig) -> dict:
    out = _outdir(cfg)
    run = cfg.run
    kind = run["flow"]
    params = cfg.params_for(cfg.model["M"])
    y0 = _flow_y0(kind, params.M, run["m0"], run["eps0"])
    traj = integrate(
        kind, y0, params, run["t_end"],
        dt=run.get("dt"), record_dt=run.get("record_dt"),
    )
    name = f"drt_{kind}.csv"
    write_trajectory_csv(os.path.join(out, name), traj)
    manifest = {
        "command": "drt",
        "config_flat": cfg.raw,
        "kind": kind,
        "file": name,
        "meta": {k: v for k, v in traj.meta.items() if k != "params"},
        "params": traj.meta["params"],
    }
    write_json(os.path.join(out, "drt_manifest.json"), manifest)
    return manifest


def cmd_slowflow(cfg: ExperimentConfig) -> dict:
    out = _outdir(cfg)
    run = cfg.run
    # the reduced flow has no slice count; any valid M works for ModelParams
    M = cfg.model.get("M") or cfg.run.get("M_list", [3])[0]
    params = cfg.params_for(M)
    files = {}
    for kind in ("slow", "slow_approx") if run.get("approx") else ("slow",):
        traj = integrate(
            kind, np.array([run["m0"]]), params, run["t_end"],
            dt=run.get("dt"), record_dt=run.get("record_dt"),
        )
        name = "slowflow.csv" if kind == "slow" else "slowflow_approx.csv"
        write_trajectory_csv(os.path.join(out, name), traj)
        files[kind] = name
    manifest = {
        "command": "slowflow",
        "config_flat": cfg.raw,
        "files": files,
        "params": {"beta": params.beta, "gamma": params.gamma, "h": params.h, "J0": params.J0},
    }
    write_json(os.path.join(out, "slowflow_manifest.json"), manifest)
    return manifest


def cmd_statics(cfg: ExperimentConfig) -> dict:
    out = _outdir(cfg)
    params = cfg.params_for(cfg.model["M"])
    res = solve_m(params)
    report = {
        "command": "statics",
        "config_flat": cfg.raw,
        "roots": res.roots.tolist(),
        "free_energies": res.f.tolist(),
        "m": res.m,
        "f": res.f_min,
        "root_count": len(res.roots),
        "residual": res.residual,
    }
    if params.J0 == 0.0:
        report["noninteracting_f"] = free_energy_noninteracting(params)
    if params.gamma > 0.0:
        rep = toeplitz_spectrum(params, res.m)
        report["bifurcation"] = {
            "a": rep.a.tolist(),
            "max_criterion": rep.max_criterion,
            "symmetric_stable": rep.symmetric_stable,
            "uniform_mode_shift": rep.uniform_mode_shift,
        }
    write_json(os.path.join(out, "statics.json"), report)
    return report


def _ensemble_mean(out: str, M: int, seeds: list[int]):
    times = None
    acc = None
    for seed in seeds:
        cols = read_csv_columns(os.path.join(out, _sim_filename(M, seed)))
        if times is None:
            times = cols["t"]
            acc = np.zeros_like(cols["m"])
        acc += cols["m"]
    return times, acc / len(seeds)


def cmd_compare(cfg: ExperimentConfig) -> dict:
    out = _outdir(cfg)
    run = cfg.run
    seeds = run["seeds"]
    m_values = cfg.m_values()

    missing_sim = [
        (M, s)
        for M in m_values
        for s in seeds
        if not os.path.exists(os.path.join(out, _sim_filename(M, s)))
    ]
    if missing_sim:
        cmd_simulate(cfg)
    if not (
        os.path.exists(os.path.join(out, "slowflow.csv"))
        and os.path.exists(os.path.join(out, "slowflow_approx.csv"))
    ):
        slow_cfg = ExperimentConfig(
            kind="slowflow", model=cfg.model,
            run={**cfg.run, "approx": True}, output=cfg.output, raw=cfg.raw,
        )
        cmd_slowflow(slow_cfg)

    grid = None
    means = {}
    for M in m_values:
        t, mean_m = _ensemble_mean(out, M, seeds)
        if grid is None:
            grid = t
        means[M] = np.interp(grid, t, mean_m)
    theory = read_csv_columns(os.path.join(out, "slowflow.csv"))
    approx = read_csv_columns(os.path.join(out, "slowflow_approx.csv"))
    theory_m = np.interp(grid, theory["t"], theory["m"])
    approx_m = np.interp(grid, approx["t"], approx["m"])

    dev_full = {M: float(np.max(np.abs(means[M] - theory_m))) for M in m_values}
    dev_approx = {M: float(np.max(np.abs(means[M] - approx_m))) for M in m_values}
    collapse = 0.0
    for Ma, Mb in itertools.combinations(m_values, 2):
        collapse = max(collapse, float(np.max(np.abs(means[Ma] - means[Mb]))))

    name = "compare.csv"
    cols = ["t"] + [f"sim_m_M{M}" for M in m_values] + ["theory_m", "approx_m"]
    with open(os.path.join(out, name), "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(cols) + "\n")
        for j in range(len(grid)):
            row = [grid[j]] + [means[M][j] for M in m_values] + [theory_m[j], approx_m[j]]
            fh.write(",".join(repr(float(v)) for v in row) + "\n")

    summary = {
        "command": "compare",
        "config_flat": cfg.raw,
        "file": name,
        "grid": "simulation record grid of M = %d; theory curves resampled by linear interpolation" % m_values[0],
        "sup_norm_theory": {str(M): dev_full[M] for M in m_values},
        "sup_norm_approx": {str(M): dev_approx[M] for M in m_values},
        "collapse_metric": collapse,
        "theory_beats_approx": {
            str(M): dev_full[M] <= dev_approx[M] for M in m_values
        },
    }
    write_json(os.path.join(out, "compare_summary.json"), summary)
    return summary


_COMMANDS = {
    "simulate": cmd_simulate,
    "drt": cmd_drt,
    "slowflow": cmd_slowflow,
    "statics": cmd_statics,
    "compare": cmd_compare,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="annealctl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to the experiment config")
        p.add_argument("--out", help="override output.dir")
        p.add_argument("--seeds", help="override run.seeds, e.g. 1,2,3")
        p.add_argument("--json-config", action="store_true", dest="json_config",
                       help="config file is JSON instead of flat key-value text")
        if name == "slowflow":
            p.add_argument("--approx", action="store_true",
                           help="also integrate the u = beta(J0 m + h) variant")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        cfg = _load(args)
        if cfg.kind != args.command:
            raise ConfigError(
                f"run.kind = {cfg.kind!r} does not match command {args.command!r}"
            )
        _COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"annealctl: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ClosureError, FlowError, TruncatedRunError, InfeasibleTargetError,
            ValueError, ArithmeticError) as exc:
        print(f"annealctl: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"annealctl: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"annealctl: {args.command} done in {time.perf_counter() - t0:.2f}s")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
