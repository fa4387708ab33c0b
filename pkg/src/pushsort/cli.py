"""Command line entry point: ``pushsort {gen,solve,bench}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from .harness import ALGOS, BatchSummary, ScenarioSpec, export_trajectory, generate_scene, run_batch, solve
from .physics import PhysicsConfig
from .scene import PlannerConfig, dump_scene, load_config, load_scene

log = logging.getLogger("pushsort")


def _configs(path, seed=None, noise_p=None, workers=None):
    if path:
        cfg, pcfg = load_config(path)
    else:
        cfg, pcfg = PlannerConfig(), PhysicsConfig()
    if seed is not None:
        cfg = PlannerConfig(**{**cfg.__dict__, "rng_seed": seed})
    if workers is not None:
        cfg = PlannerConfig(**{**cfg.__dict__, "workers": workers})
    if noise_p is not None:
        pcfg = PhysicsConfig(**{**pcfg.__dict__, "noise_std_frac": noise_p})
    return cfg, pcfg


def cmd_gen(args):
    spec = ScenarioSpec(n_objects=args.objects, n_classes=args.classes, ratio_nonconvex=args.nonconvex,
                        n_obstacles=args.obstacles, workspace_side=args.workspace, seed=args.seed)
    scene, state = generate_scene(spec)
    dump_scene(scene, state, args.out)
    print(f"wrote {args.out}: {args.objects} objects, {args.classes} classes, {args.obstacles} obstacles")


def cmd_solve(args):
    from .plotting import plot_reward_trace

    scene, state = load_scene(args.scene)
    cfg, pcfg = _configs(args.config, args.seed, workers=args.workers)
    rec = solve(scene, state, args.algo, cfg, pcfg, args.seed)
    outdir = Path(args.log)
    outdir.mkdir(parents=True, exist_ok=True)
    written = export_trajectory(rec, scene, outdir / "trajectory.json", scene_ref=str(args.scene),
                                svg_every=args.svg)
    plot_reward_trace(rec, outdir / "reward.png")
    status = "success" if rec.success else f"failure ({rec.reason})"
    print(f"{args.algo}: {status} after {rec.steps} steps, {rec.wall_time:.1f}s; wrote {len(written)} files to {outdir}")
    return 0


def cmd_bench(args):
    from .plotting import plot_summaries

    spec = ScenarioSpec(**json.loads(Path(args.spec).read_text()))
    cfg, pcfg = _configs(args.config, noise_p=args.noise_p)
    summary, _ = run_batch(spec, args.algo, cfg, pcfg, args.trials, workers=args.workers,
                           master_seed=args.seed if args.seed is not None else spec.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    append = args.append and out.exists()
    with out.open("a" if append else "w", newline="") as fh:
        w = csv.writer(fh)
        if not append:
            w.writerow(BatchSummary.CSV_COLUMNS)
        w.writerow(summary.csv_row())
    with out.open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    plot_summaries(rows, out.with_suffix(".png"))
    steps = "N.A." if summary.steps_mean is None else f"{summary.steps_mean:.1f} +/- {summary.steps_stderr:.1f}"
    print(f"{args.algo}: {summary.successes}/{summary.trials} solved, steps {steps}, "
          f"{summary.plan_time_mean_s:.3f}s per plan -> {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pushsort", description="MCTS planner for planar push sorting")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a random scene file")
    g.add_argument("--objects", type=int, required=True)
    g.add_argument("--classes", type=int, required=True)
    g.add_argument("--nonconvex", type=float, default=0.0)
    g.add_argument("--obstacles", type=int, default=0)
    g.add_argument("--workspace", type=float, default=0.5, help="workspace side length [m]")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="run one closed-loop trial on a scene file")
    s.add_argument("--scene", required=True)
    s.add_argument("--algo", choices=ALGOS, default="mcts")
    s.add_argument("--config")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--log", required=True, help="output directory")
    s.add_argument("--svg", type=int, metavar="K", help="write an SVG snapshot every K steps")
    s.add_argument("--workers", type=int)
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="run a batch of random trials and append a CSV row")
    b.add_argument("--spec", required=True, help="JSON scenario spec")
    b.add_argument("--algo", choices=ALGOS, default="mcts")
    b.add_argument("--trials", type=int, default=100)
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--noise-p", type=float, default=0.0)
    b.add_argument("--config")
    b.add_argument("--seed", type=int)
    b.add_argument("--out", required=True)
    b.add_argument("--append", action="store_true", help="append to an existing CSV instead of replacing it")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    return args.func(args) or 0


if __name__ == "__main__":
    sys.exit(main())
