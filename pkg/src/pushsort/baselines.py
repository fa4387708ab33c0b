"""Comparison planners: greedy look-ahead, greedy rollouts, leaf-only MCTS and iterated local search."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .mcts import (
    Executor,
    RandomRolloutPolicy,
    SearchOutcome,
    StepRecord,
    TrialRecord,
    is_trapped,
    mcts_search,
)
from .objective import fast_reward, g_value, is_sorted
from .physics import PhysicsConfig, compiled, step_poses
from .scene import ACTIONS, N_ACTIONS, Action, PlannerConfig, Scene, WorldState

TIE_TOL = 1e-12


def successor_rewards(scene: Scene, state: WorldState, cfg: PlannerConfig,
                      physics_cfg: Optional[PhysicsConfig] = None) -> np.ndarray:
    """Reward after each of the ten actions; -inf where the action leaves the workspace."""
    physics_cfg = physics_cfg or PhysicsConfig()
    cs = compiled(scene)
    out = np.full(N_ACTIONS, -np.inf)
    for a in range(N_ACTIONS):
        poses, _, oob, _, _, _ = step_poses(cs, state.poses, a, physics_cfg)
        if not oob:
            out[a] = fast_reward(cs, poses, cfg.lam)
    return out


def _argmax_random(values: np.ndarray, rng: np.random.Generator) -> int:
    best = values.max()
    tied = np.flatnonzero(values >= best - TIE_TOL)
    if len(tied) == 1:
        return int(tied[0])
    return int(tied[rng.integers(len(tied))])


def greedy_one_step(scene: Scene, state: WorldState, cfg: PlannerConfig, rng: np.random.Generator,
                    physics_cfg: Optional[PhysicsConfig] = None) -> Action:
    table = successor_rewards(scene, state, cfg, physics_cfg)
    return ACTIONS[_argmax_random(table, rng)]


def greedy_rollout(scene: Scene, state: WorldState, cfg: PlannerConfig, policy=None,
                   rng: Optional[np.random.Generator] = None, physics_cfg: Optional[PhysicsConfig] = None,
                   n_rollouts: int = 500, depth: Optional[int] = None) -> tuple[Action, float]:
    """First action of the rollout that reached the highest reward, with that reward."""
    physics_cfg = physics_cfg or PhysicsConfig()
    policy = policy or RandomRolloutPolicy()
    rng = rng if rng is not None else np.random.default_rng(cfg.rng_seed)
    depth = cfg.d_max if depth is None else depth
    cs = compiled(scene)
    firsts = np.empty(n_rollouts, dtype=np.int64)
    best = np.full(n_rollouts, -np.inf)
    for r in range(n_rollouts):
        poses = state.poses
        for d in range(depth):
            a = policy(scene, WorldState(poses), rng).id
            if d == 0:
                firsts[r] = a
            poses, _, oob, _, _, _ = step_poses(cs, poses, a, physics_cfg)
            if oob:
                break
            gv = fast_reward(cs, poses, cfg.lam)
            if gv > best[r]:
                best[r] = gv
    k = _argmax_random(best, rng)
    return ACTIONS[int(firsts[k])], float(best[k])


def mcts_no_rollout(scene: Scene, state: WorldState, cfg: PlannerConfig, rng: np.random.Generator,
                    physics_cfg: Optional[PhysicsConfig] = None) -> SearchOutcome:
    """Tree search that backs up the expanded leaf's own reward."""
    return mcts_search(scene, state, cfg, None, rng, physics_cfg, rollouts=False)


def search_function(algo: str, cfg: PlannerConfig, physics_cfg: PhysicsConfig):
    """Adapt a single-step baseline to the closed-loop planner's search interface."""
    planning = PhysicsConfig(**{**physics_cfg.__dict__, "noise_std_frac": 0.0})

    if algo == "greedy1":
        def search(scene, state, rng):
            table = successor_rewards(scene, state, cfg, planning)
            a = _argmax_random(table, rng)
            g_root = g_value(scene, state, cfg)
            return SearchOutcome(ACTIONS[a], max(g_root, float(table.max())), N_ACTIONS, None, g_root)
    elif algo == "greedy-rollout":
        def search(scene, state, rng):
            action, g_best = greedy_rollout(scene, state, cfg, None, rng, planning)
            g_root = g_value(scene, state, cfg)
            return SearchOutcome(action, max(g_root, g_best), 500, None, g_root)
    elif algo == "mcts-no-rollout":
        def search(scene, state, rng):
            return mcts_no_rollout(scene, state, cfg, rng, planning)
    else:
        raise ValueError(f"no single-step search for {algo!r}")
    return search


# --- iterated local search -----------------------------------------------------------


@dataclass
class TrajectoryPlan:
    actions: list[int]
    predicted_g: float
    predicts_sorted: bool
    cursor: int = 0

    @property
    def exhausted(self) -> bool:
        return self.cursor >= len(self.actions)

    @property
    def remaining(self) -> list[int]:
        return self.actions[self.cursor:]


def simulate_sequence(scene: Scene, state: WorldState, actions, cfg: PlannerConfig,
                      physics_cfg: PhysicsConfig) -> tuple[float, Optional[np.ndarray]]:
    """End-state reward of an open-loop action sequence; -inf if it leaves the workspace."""
    cs = compiled(scene)
    poses = state.poses
    for a in actions:
        poses, _, oob, _, _, _ = step_poses(cs, poses, int(a), physics_cfg)
        if oob:
            return -math.inf, None
    return fast_reward(cs, poses, cfg.lam), poses


def ils_plan(scene: Scene, state: WorldState, cfg: PlannerConfig, depth: int, rng: np.random.Generator,
             physics_cfg: Optional[PhysicsConfig] = None, iterations: int = 500,
             restart_interval: int = 50, history: Optional[list] = None) -> TrajectoryPlan:
    """Hill-climb over length-``depth`` action sequences with single-position resampling and restarts."""
    physics_cfg = physics_cfg or PhysicsConfig()
    current = [int(a) for a in rng.integers(N_ACTIONS, size=depth)]
    cur_g, cur_end = simulate_sequence(scene, state, current, cfg, physics_cfg)
    best, best_g, best_end = list(current), cur_g, cur_end
    stale = 0
    for _ in range(iterations):
        cand = list(current)
        cand[int(rng.integers(depth))] = int(rng.integers(N_ACTIONS))
        g, end = simulate_sequence(scene, state, cand, cfg, physics_cfg)
        if g > cur_g:
            current, cur_g, cur_end = cand, g, end
            stale = 0
            if g > best_g:
                best, best_g, best_end = list(cand), g, end
        else:
            stale += 1
            if stale >= restart_interval:
                current = [int(a) for a in rng.integers(N_ACTIONS, size=depth)]
                cur_g, cur_end = simulate_sequence(scene, state, current, cfg, physics_cfg)
                stale = 0
                if cur_g > best_g:
                    best, best_g, best_end = list(current), cur_g, cur_end
        if history is not None:
            history.append(best_g)
    sorted_end = best_end is not None and is_sorted(scene, WorldState(best_end), cfg)
    return TrajectoryPlan(best, best_g, bool(sorted_end))


def should_switch(new: TrajectoryPlan, old: Optional[TrajectoryPlan], old_remaining_g: float) -> bool:
    """Adopt the new plan if it predicts sorting or a higher reward than what is left of the old one."""
    if old is None or old.exhausted:
        return True
    return new.predicts_sorted or new.predicted_g > old_remaining_g


def ils_execute(scene: Scene, start: WorldState, cfg: PlannerConfig, depth: int, rng: np.random.Generator,
                executor=None, physics_cfg: Optional[PhysicsConfig] = None, seed: int = 0) -> TrialRecord:
    """Closed-loop ILS: replan every step but only switch trajectories when the new one looks better."""
    t_start = time.perf_counter()
    physics_cfg = physics_cfg or PhysicsConfig()
    planning = PhysicsConfig(**{**physics_cfg.__dict__, "noise_std_frac": 0.0})
    executor = executor or Executor(scene, physics_cfg, np.random.default_rng(rng.integers(2**63)))
    state = start
    g_now = g_value(scene, state, cfg)
    traj = [StepRecord(None, g_now, False, np.array(state.poses))]
    plan: Optional[TrajectoryPlan] = None
    no_contact = 0
    plan_time = 0.0
    n_plans = 0

    def finish(outcome, reason):
        return TrialRecord(outcome, reason, len(traj) - 1, traj, time.perf_counter() - t_start, seed,
                           plan_time, n_plans)

    while True:
        if is_sorted(scene, state, cfg):
            return finish("success", None)
        if len(traj) - 1 >= cfg.max_steps:
            return finish("failure", "step_limit")
        t0 = time.perf_counter()
        new = ils_plan(scene, state, cfg, depth, rng, planning)
        old_g = -math.inf
        if plan is not None and not plan.exhausted:
            old_g, _ = simulate_sequence(scene, state, plan.remaining, cfg, planning)
        if should_switch(new, plan, old_g):
            plan = new
        plan_time += time.perf_counter() - t0
        n_plans += 1
        g_hat = max(g_now, new.predicted_g, old_g)
        if is_trapped(g_now, g_hat, cfg):
            return finish("failure", "trapped")
        action = ACTIONS[plan.actions[plan.cursor]]
        plan.cursor += 1
        tr = executor(state, action)
        state = tr.next_state
        g_now = g_value(scene, state, cfg)
        traj.append(StepRecord(action.id, g_now, tr.contacted_any, np.array(state.poses)))
        if tr.out_of_bounds:
            return finish("failure", "out_of_bounds")
        no_contact = 0 if tr.contacted_any else no_contact + 1
        if no_contact > cfg.no_contact_limit:
            return finish("failure", "no_contact")
