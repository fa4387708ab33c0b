"""Scenario generation, trial execution and batch statistics."""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .geometry import ConvexSet, penetration
from .mcts import Executor, TrialRecord, plan_and_execute
from .objective import g_value
from .physics import PhysicsConfig, step
from .scene import (
    CUBE_SIDE,
    Movable,
    Obstacle,
    PlannerConfig,
    Pose2,
    Scene,
    Shape,
    WorldState,
)

MAX_ATTEMPTS = 100_000
ROBOT_SHAPE = Shape.rectangle(0.025, 0.10)

ALGOS = ("mcts", "mcts-avg", "mcts-no-rollout", "greedy1", "greedy-rollout", "ils3", "ils6")


@dataclass(frozen=True)
class ScenarioSpec:
    n_objects: int = 20
    n_classes: int = 2
    ratio_nonconvex: float = 0.0
    n_obstacles: int = 0
    workspace_side: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.n_classes <= self.n_objects:
            raise ValueError("need 1 <= n_classes <= n_objects")
        if not 0.0 <= self.ratio_nonconvex <= 1.0:
            raise ValueError("ratio_nonconvex must lie in [0, 1]")
        if self.n_obstacles < 0 or self.workspace_side <= 0:
            raise ValueError("bad obstacle count or workspace size")


def _sets(shape: Shape, pose: Pose2) -> list[ConvexSet]:
    return [ConvexSet.from_array(pose.transform(p)) for p in shape.parts]


def _clear(candidate: list[ConvexSet], placed: list[list[ConvexSet]]) -> bool:
    for other in placed:
        for a in candidate:
            for b in other:
                if penetration(a, b) is not None:
                    return False
    return True


def _inside(shape: Shape, pose: Pose2, side: float) -> bool:
    v = pose.transform(shape.vertices)
    return bool(v.min() >= 0.0 and v.max() <= side)


def generate_scene(spec: ScenarioSpec, rng: Optional[np.random.Generator] = None) -> tuple[Scene, WorldState]:
    """Random non-overlapping placement: obstacles, then movables, then the robot."""
    rng = rng if rng is not None else np.random.default_rng(spec.seed)
    side = spec.workspace_side
    cube = Shape.rectangle(CUBE_SIDE, CUBE_SIDE)
    u = Shape.u_shape()
    n_u = int(round(spec.ratio_nonconvex * spec.n_objects))
    classes = [k % spec.n_classes for k in range(spec.n_objects)]
    rng.shuffle(classes)
    is_u = np.zeros(spec.n_objects, dtype=bool)
    is_u[rng.permutation(spec.n_objects)[:n_u]] = True
    shapes = [u if flag else cube for flag in is_u]

    obstacle_shapes = []
    for _ in range(spec.n_obstacles):
        w = rng.uniform(CUBE_SIDE, 2 * CUBE_SIDE)
        h = rng.uniform(CUBE_SIDE / 2, 2 * CUBE_SIDE * CUBE_SIDE / w)
        obstacle_shapes.append(Shape.rectangle(w, h))

    area = sum(s.area for s in shapes) + sum(s.area for s in obstacle_shapes) + ROBOT_SHAPE.area
    if area > side * side:
        raise ValueError("scene too dense")

    attempts = 0
    placed: list[list[ConvexSet]] = []

    def place(shape: Shape) -> Pose2:
        nonlocal attempts
        while attempts < MAX_ATTEMPTS:
            attempts += 1
            pose = Pose2(rng.uniform(0, side), rng.uniform(0, side), rng.uniform(-math.pi, math.pi))
            if not _inside(shape, pose, side):
                continue
            cand = _sets(shape, pose)
            if _clear(cand, placed):
                placed.append(cand)
                return pose
        raise ValueError("scene too dense")

    obstacles = [Obstacle(s, place(s)) for s in obstacle_shapes]
    movable_poses = [place(s) for s in shapes]
    robot_pose = place(ROBOT_SHAPE)
    scene = Scene(
        workspace=(0.0, 0.0, side, side),
        robot_shape=ROBOT_SHAPE,
        movables=tuple(Movable(s, c) for s, c in zip(shapes, classes)),
        obstacles=tuple(obstacles),
        class_count=spec.n_classes,
    )
    return scene, WorldState.from_poses(robot_pose, movable_poses)


# --- trials ------------------------------------------------------------------------


def trial_seeds(master_seed: int, trials: int) -> list[int]:
    """Per-trial seeds fanned out from the master seed; independent of worker count."""
    children = np.random.SeedSequence(master_seed).spawn(trials)
    return [int(c.generate_state(2, np.uint64)[0] >> np.uint64(1)) for c in children]


def solve(scene: Scene, state: WorldState, algo: str, cfg: PlannerConfig, physics_cfg: PhysicsConfig,
          seed: int) -> TrialRecord:
    """Run one closed-loop trial with the named algorithm."""
    ss = np.random.SeedSequence(seed)
    plan_seed, exec_seed = ss.spawn(2)
    rng = np.random.default_rng(plan_seed)
    executor = Executor(scene, physics_cfg, np.random.default_rng(exec_seed))
    if algo not in ALGOS:
        raise ValueError(f"unknown algorithm {algo!r}")
    if algo == "mcts":
        return plan_and_execute(scene, state, cfg, executor=executor, rng=rng, physics_cfg=physics_cfg, seed=seed)
    if algo == "mcts-avg":
        cfg = PlannerConfig(**{**cfg.__dict__, "backup_mode": "avg"})
        return plan_and_execute(scene, state, cfg, executor=executor, rng=rng, physics_cfg=physics_cfg, seed=seed)
    from . import baselines

    if algo in ("ils3", "ils6"):
        depth = 3 if algo == "ils3" else 6
        return baselines.ils_execute(scene, state, cfg, depth, rng, executor, physics_cfg=physics_cfg, seed=seed)
    search = baselines.search_function(algo, cfg, physics_cfg)
    trap = algo == "mcts-no-rollout"
    return plan_and_execute(scene, state, cfg, executor=executor, rng=rng, physics_cfg=physics_cfg,
                            search=search, trap_check=trap, seed=seed)


def run_trial(spec: ScenarioSpec, algo: str, cfg: PlannerConfig, physics_cfg: PhysicsConfig,
              seed: int) -> TrialRecord:
    scene_rng, run_seed = np.random.SeedSequence(seed).spawn(2)
    t0 = time.perf_counter()
    try:
        scene, state = generate_scene(spec, np.random.default_rng(scene_rng))
        run = int(run_seed.generate_state(1)[0])
        rec = solve(scene, state, algo, cfg, physics_cfg, run)
        rec.seed = seed
        return rec
    except Exception as exc:  # a crashed trial counts as a failure
        return TrialRecord("failure", f"error: {exc}", 0, [], time.perf_counter() - t0, seed)


def _trial_job(args):
    spec, algo, cfg, physics_cfg, seed = args
    rec = run_trial(spec, algo, cfg, physics_cfg, seed)
    rec.trajectory = []
    return rec


@dataclass(frozen=True)
class BatchSummary:
    algo: str
    objects: int
    classes: int
    obstacles: int
    nonconvex: float
    noise_p: float
    trials: int
    successes: int
    success_rate: float
    steps_mean: Optional[float]
    steps_stderr: Optional[float]
    plan_time_mean_s: float

    CSV_COLUMNS = ("algo", "objects", "classes", "obstacles", "nonconvex", "noise_p", "trials", "successes",
                   "success_rate", "steps_mean", "steps_stderr", "plan_time_mean_s")

    def csv_row(self) -> list[str]:
        def fmt(v):
            if v is None:
                return "N.A."
            if isinstance(v, float):
                return f"{v:.6g}"
            return str(v)
        return [fmt(getattr(self, c)) for c in self.CSV_COLUMNS]


def summarize(records: list[TrialRecord], spec: ScenarioSpec, algo: str, noise_p: float) -> BatchSummary:
    steps = np.array([r.steps for r in records if r.success], dtype=float)
    n_ok = len(steps)
    mean = float(steps.mean()) if n_ok else None
    stderr = float(steps.std(ddof=1) / math.sqrt(n_ok)) if n_ok > 1 else (0.0 if n_ok == 1 else None)
    plans = sum(r.n_plans for r in records)
    plan_time = sum(r.plan_time for r in records) / plans if plans else 0.0
    return BatchSummary(algo, spec.n_objects, spec.n_classes, spec.n_obstacles, spec.ratio_nonconvex, noise_p,
                        len(records), n_ok, n_ok / len(records), mean, stderr, plan_time)


def run_batch(spec: ScenarioSpec, algo: str, cfg: PlannerConfig, physics_cfg: PhysicsConfig, trials: int,
              workers: int = 1, master_seed: Optional[int] = None) -> tuple[BatchSummary, list[TrialRecord]]:
    """Independent seeded trials; trial ``k`` uses the k-th seed fanned out from the master seed."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    seeds = trial_seeds(spec.seed if master_seed is None else master_seed, trials)
    jobs = [(spec, algo, cfg, physics_cfg, s) for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            records = list(pool.map(_trial_job, jobs))
    else:
        records = [_trial_job(j) for j in jobs]
    return summarize(records, spec, algo, physics_cfg.noise_std_frac), records


# --- trajectory export -----------------------------------------------------------------


def trajectory_json(record: TrialRecord, scene_ref: str) -> dict:
    steps = []
    for s in record.trajectory:
        steps.append({
            "action": s.action,
            "g": float(s.g),
            "contacted": bool(s.contacted),
            "state": {"robot": [float(v) for v in s.poses[0]],
                      "movables": [[float(v) for v in row] for row in s.poses[1:]]},
        })
    outcome = "success" if record.success else f"failure:{record.reason}"
    return {"scene_ref": scene_ref, "seed": record.seed, "steps": steps, "outcome": outcome}


def export_trajectory(record: TrialRecord, scene: Scene, path, scene_ref: str = "",
                      svg_every: Optional[int] = None) -> list[Path]:
    """Write the replayable JSON log; with ``svg_every`` also one SVG snapshot per k steps."""
    path = Path(path)
    written = []
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(trajectory_json(record, scene_ref), indent=1))
    except OSError as exc:
        raise OSError(f"cannot write trajectory log {path}: {exc}") from exc
    written.append(path)
    if svg_every:
        from .plotting import render_snapshots

        written += render_snapshots(record, scene, path.parent, svg_every, stem=path.stem)
    return written


def replay(scene: Scene, log: dict, cfg: PlannerConfig, physics_cfg: PhysicsConfig) -> list[float]:
    """Re-run the logged actions through the noiseless model and return each state's reward."""
    first = log["steps"][0]["state"]
    state = WorldState([first["robot"]] + first["movables"])
    noiseless = PhysicsConfig(**{**physics_cfg.__dict__, "noise_std_frac": 0.0})
    gs = [g_value(scene, state, cfg)]
    for entry in log["steps"][1:]:
        state = step(scene, state, entry["action"], noiseless).next_state
        gs.append(g_value(scene, state, cfg))
    return gs
