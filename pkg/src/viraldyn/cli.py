"""Command-line entry point: ``viraldyn <command> --config <path> [--out DIR] [--seed N]``."""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .config import PARAM_KEYS, RunConfig, load_config
from .equilibria import EquilibriumPoint, ade_equilibrium, all_equilibria, derived_thresholds, no_ade_equilibrium
from .fitting import FitSpec, ObservationSet, fit
from .integrator import Trajectory, integrate
from .model import ModelParams
from .stability import classify_equilibrium

COMMANDS = ("simulate", "equilibria", "stability", "fit", "sweep")
SUMMARY_COLUMNS = ("value", "peak_v", "t_peak_v", "min_t", "target_loss_fraction", "peak_a", "ade_classification")


def _fmt(x: float) -> str:
    return f"{x:.16e}"


def write_trajectory_csv(traj: Trajectory, path) -> Path:
    path = Path(path)
    lines = [",".join(("t", *traj.columns))]
    for t, row in zip(traj.t, traj.y):
        lines.append(",".join([_fmt(t), *(_fmt(v) for v in row)]))
    for t, kind in traj.events:
        lines.append(f"#event,{kind},{_fmt(t)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_json(obj, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(obj, indent=2, allow_nan=False) + "\n", encoding="utf-8")
    return path


def _run_header(cfg: RunConfig) -> dict:
    params = {k: getattr(cfg.params, v) for k, v in PARAM_KEYS.items() if getattr(cfg.params, v) is not None}
    return {"params": params, "variant": cfg.variant.value, "warnings": list(cfg.warnings)}


def _simulate(cfg: RunConfig, out: Path, seed: int) -> list[Path]:
    traj = integrate(cfg.params, cfg.variant, cfg.init, cfg.integration)
    summary = {**_run_header(cfg), "summary": traj.summary.to_dict(),
               "events": [{"t": t, "kind": k} for t, k in traj.events]}
    return [write_trajectory_csv(traj, out / "trajectory.csv"), write_json(summary, out / "summary.json")]


def _equilibria(cfg: RunConfig, out: Path, seed: int) -> list[Path]:
    doc = {**_run_header(cfg), "thresholds": derived_thresholds(cfg.params).to_dict(), "equilibria": []}
    for kind, eq in all_equilibria(cfg.params).items():
        if isinstance(eq, EquilibriumPoint):
            doc["equilibria"].append({"admissible": True, **eq.to_dict()})
        else:
            doc["equilibria"].append({"kind": kind.value, "admissible": False, "reason": eq})
    return [write_json(doc, out / "equilibria.json")]


def _stability(cfg: RunConfig, out: Path, seed: int) -> list[Path]:
    doc = {**_run_header(cfg), "reports": []}
    for kind, eq in all_equilibria(cfg.params).items():
        if isinstance(eq, EquilibriumPoint):
            rep = classify_equilibrium(cfg.params, eq)
            doc["reports"].append({"kind": kind.value, "admissible": True, "equilibrium": eq.to_dict(),
                                   **rep.to_dict()})
        else:
            doc["reports"].append({"kind": kind.value, "admissible": False, "reason": eq})
    return [write_json(doc, out / "stability.json")]


def _fit(cfg: RunConfig, out: Path, seed: int) -> list[Path]:
    fc = cfg.fit
    if fc is None or fc.data is None:
        raise ValueError("fit: config needs a 'fit' block with a 'data' CSV path")
    obs = ObservationSet.from_csv(fc.data, detection_floor=fc.detection_floor)
    initial = None
    if fc.include_baseline_start:
        base = {**cfg.params.to_dict(), "I0": cfg.init.I, "V0": cfg.init.V, "A0": cfg.init.A}
        initial = {n: base[n] for n in fc.free}
    spec = FitSpec(fc.free, fc.bounds, cfg.params, cfg.init, fc.a_weight, initial)
    res = fit(obs, spec, seed=seed, n_starts=fc.n_starts, max_evals=fc.max_evals, workers=_workers())
    traj = integrate(res.params, cfg.variant, res.init, cfg.integration)
    doc = {**_run_header(cfg), "seed": seed, "data": str(fc.data), "free": list(fc.free), "result": res.to_dict()}
    return [write_json(doc, out / "fit_result.json"), write_trajectory_csv(traj, out / "fit_trajectory.csv")]


def ade_classification(p: ModelParams) -> str:
    """Stability of the antibody-controlled equilibrium (the beta1 = 0 branch when beta1 is 0)."""
    try:
        eq = ade_equilibrium(p) if p.beta1 > 0 else no_ade_equilibrium(p)
        return classify_equilibrium(p, eq).classification.value
    except (ValueError, ArithmeticError):
        return "NA"


def _workers() -> int:
    raw = os.environ.get("VIRALDYN_WORKERS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ValueError(f"VIRALDYN_WORKERS must be an integer, got {raw!r}") from None
    return min(4, os.cpu_count() or 1)


def run_sweep(cfg: RunConfig):
    """Integrate once per grid value; returns [(value, trajectory, classification)] in grid order."""
    grid = cfg.sweep
    if grid is None:
        raise ValueError("sweep: config needs a 'sweep' block with an 'axis'")
    field_name = PARAM_KEYS[grid.axis]

    def one(value):
        p = cfg.params.replace(**{field_name: value})
        init = cfg.init
        if field_name in ("lam", "mu"):
            init = type(init)(init.t, p.lam / p.mu, init.I, init.V, init.A, init.L)
        traj = integrate(p, cfg.variant, init, cfg.integration)
        return value, traj, ade_classification(p)

    with ThreadPoolExecutor(max_workers=_workers()) as pool:
        return list(pool.map(one, grid.values))


def _sweep(cfg: RunConfig, out: Path, seed: int) -> list[Path]:
    rows = run_sweep(cfg)
    axis = cfg.sweep.axis
    written = []
    lines = [",".join(SUMMARY_COLUMNS)]
    for value, traj, cls in rows:
        written.append(write_trajectory_csv(traj, out / f"trajectory_{axis}_{value:.3e}.csv"))
        s = traj.summary
        nums = (value, s.peak_v, s.t_peak_v, s.min_t, s.target_loss_fraction, s.peak_a)
        lines.append(",".join([*(_fmt(x) for x in nums), cls]))
    summary = out / f"sweep_{axis}_summary.csv"
    summary.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return written + [summary]


_HANDLERS = {
    "simulate": _simulate,
    "equilibria": _equilibria,
    "stability": _stability,
    "fit": _fit,
    "sweep": _sweep,
}


def execute(cmd: str, cfg: RunConfig, out_dir=None, seed: int = 0) -> list[Path]:
    """Run one command and return the written files."""
    if cmd not in _HANDLERS:
        raise ValueError(f"unknown command {cmd!r}; expected one of {', '.join(COMMANDS)}")
    out = Path(out_dir) if out_dir is not None else (cfg.output_dir or Path("."))
    out.mkdir(parents=True, exist_ok=True)
    return _HANDLERS[cmd](cfg, out, seed)


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="viraldyn", description=__doc__)
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--out", default=None, help="output directory (overrides output_dir in the config)")
    ap.add_argument("--seed", type=_seed, default=0)
    args = ap.parse_args(argv)

    out = Path(args.out) if args.out else None
    try:
        cfg = load_config(args.config)
        out = out or cfg.output_dir or Path(".")
        for path in execute(args.command, cfg, out, args.seed):
            print(path)
    except Exception as exc:  # noqa: BLE001 - every failure becomes an error artifact
        msg = f"{type(exc).__name__}: {exc}"
        print(f"viraldyn {args.command}: {msg}", file=sys.stderr)
        try:
            target = out or Path(".")
            target.mkdir(parents=True, exist_ok=True)
            write_json({"command": args.command, "error": msg}, target / "error.json")
        except OSError:
            pass
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
