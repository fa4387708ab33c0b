"""Max-backup Monte Carlo tree search and the closed-loop sorting planner."""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol

import numpy as np

from .objective import fast_reward, g_value, is_sorted
from .physics import PhysicsConfig, TransitionResult, compiled, step, step_poses
from .scene import ACTIONS, N_ACTIONS, Action, PlannerConfig, Scene, WorldState

DEGENERATE_SPAN = 1e-12


class RolloutPolicy(Protocol):
    def __call__(self, scene: Scene, state: WorldState, rng: np.random.Generator) -> Action: ...


class RandomRolloutPolicy:
    """Uniform over the ten actions."""

    def __call__(self, scene, state, rng):
        return ACTIONS[int(rng.integers(N_ACTIONS))]


class Node:
    __slots__ = ("poses", "g", "n", "n_val", "total", "v_upper", "v_lower", "children",
                 "expansion_order", "next_expand", "terminal")

    def __init__(self, poses: np.ndarray, rng: np.random.Generator, terminal: bool = False):
        self.poses = poses
        self.g: Optional[float] = None
        self.n = 0
        self.n_val = 0
        self.total = 0.0
        self.v_upper = -math.inf
        self.v_lower = math.inf
        self.children: dict[int, Node] = {}
        self.terminal = terminal
        self.expansion_order = None if terminal else rng.permutation(N_ACTIONS)
        self.next_expand = 0

    @property
    def state(self) -> WorldState:
        return WorldState(self.poses)

    @property
    def fully_expanded(self) -> bool:
        return self.next_expand >= N_ACTIONS

    @property
    def mean(self) -> float:
        return self.total / self.n_val if self.n_val else -math.inf

    def backup(self, g_max: Optional[float]):
        if g_max is None:
            return
        self.n_val += 1
        self.total += g_max
        if g_max > self.v_upper:
            self.v_upper = g_max
        if g_max < self.v_lower:
            self.v_lower = g_max

    def count_nodes(self) -> int:
        return 1 + sum(c.count_nodes() for c in self.children.values())

    def count_internal(self) -> int:
        if not self.children:
            return 0
        return 1 + sum(c.count_internal() for c in self.children.values())


def exploit_term(parent: Node, child: Node, mode: str = "max") -> float:
    if child.terminal:
        return 0.0
    span = parent.v_upper - parent.v_lower
    if not span >= DEGENERATE_SPAN:
        return 1.0
    value = child.v_upper if mode == "max" else child.mean
    return (value - parent.v_lower) / span


def ucb_score(parent: Node, child: Node, cfg: PlannerConfig) -> float:
    """Normalised bound (or mean) plus the UCB1 exploration bonus."""
    explore = cfg.c_explore * math.sqrt(2.0 * math.log(parent.n) / child.n)
    return exploit_term(parent, child, cfg.backup_mode) + explore


@dataclass
class SearchOutcome:
    best_action: Action
    g_hat: float
    iterations_used: int
    root: Optional[Node] = field(default=None, repr=False)
    g_root: float = 0.0


def relative_gain(g_hat: float, g_current: float) -> float:
    if g_current == 0.0:
        return 0.0 if g_hat <= g_current else math.inf
    return (g_hat - g_current) / abs(g_current)


def is_trapped(g_current: float, g_hat: float, cfg: PlannerConfig) -> bool:
    return relative_gain(g_hat, g_current) < cfg.nu


class _Search:
    def __init__(self, scene, cfg, policy, rng, physics_cfg, rollouts):
        self.scene = scene
        self.cfg = cfg
        self.policy = policy
        self.rng = rng
        self.pcfg = physics_cfg
        self.depth = cfg.d_max if rollouts else 0
        self.cs = compiled(scene)

    def g(self, poses):
        return fast_reward(self.cs, poses, self.cfg.lam)

    def select(self, root: Node, virtual: bool = False) -> list[Node]:
        node = root
        path = [node]
        if virtual:
            node.n += 1
        while node.fully_expanded and not node.terminal:
            best = None
            best_score = -math.inf
            for child in node.children.values():
                if child.terminal:
                    continue
                s = ucb_score(node, child, self.cfg)
                if s > best_score:
                    best, best_score = child, s
            if best is None:
                break
            node = best
            path.append(node)
            if virtual:
                node.n += 1
        return path

    def expand(self, node: Node) -> Optional[Node]:
        if node.terminal or node.fully_expanded:
            return None
        a = int(node.expansion_order[node.next_expand])
        node.next_expand += 1
        poses, _, oob, _, _, _ = step_poses(self.cs, node.poses, a, self.pcfg)
        child = Node(poses, self.rng, terminal=bool(oob))
        if not oob:
            child.g = self.g(poses)
        node.children[a] = child
        return child

    def rollout(self, leaf: Node, rng: np.random.Generator) -> Optional[float]:
        """Best reward over the leaf and up to ``depth`` policy steps; None for a dead end."""
        if leaf.terminal:
            return None
        g_max = leaf.g
        poses = leaf.poses
        for _ in range(self.depth):
            a = self.policy(self.scene, WorldState(poses), rng)
            poses, _, oob, _, _, _ = step_poses(self.cs, poses, a.id, self.pcfg)
            if oob:
                break
            gv = self.g(poses)
            if gv > g_max:
                g_max = gv
        return g_max

    def iterate(self, root: Node) -> Optional[float]:
        path = self.select(root)
        child = self.expand(path[-1])
        if child is not None:
            path.append(child)
            g_max = self.rollout(child, self.rng)
        else:
            # fully expanded node whose children are all dead ends
            g_max = None
        for node in path:
            node.n += 1
            node.backup(g_max)
        return g_max

    def iterate_batch(self, root: Node, width: int, pool: ThreadPoolExecutor) -> list:
        jobs = []
        for _ in range(width):
            path = self.select(root, virtual=True)
            child = self.expand(path[-1])
            if child is not None:
                path.append(child)
                child.n += 1
            seed = int(self.rng.integers(2**63))
            jobs.append((path, child, seed))
        futures = [
            pool.submit(self.rollout, child, np.random.default_rng(seed)) if child is not None else None
            for path, child, seed in jobs
        ]
        results = []
        for (path, child, seed), fut in zip(jobs, futures):
            g_max = fut.result() if fut is not None else None
            for node in path:
                node.backup(g_max)
            results.append(g_max)
        return results


def best_root_action(root: Node, cfg: PlannerConfig, rng: np.random.Generator) -> Action:
    """Argmax exploit term, ties by visit count, then seeded-random."""
    cands = [(a, c) for a, c in root.children.items()]
    if not cands:
        return ACTIONS[int(rng.integers(N_ACTIONS))]
    live = [(a, c) for a, c in cands if not c.terminal] or cands
    keys = [(exploit_term(root, c, cfg.backup_mode), c.n) for _, c in live]
    top = max(keys)
    tied = sorted(a for (a, _), k in zip(live, keys) if k == top)
    if len(tied) == 1:
        return ACTIONS[tied[0]]
    return ACTIONS[tied[int(rng.integers(len(tied)))]]


def mcts_search(scene: Scene, root_state: WorldState, cfg: PlannerConfig,
                policy: Optional[RolloutPolicy] = None, rng: Optional[np.random.Generator] = None,
                physics_cfg: Optional[PhysicsConfig] = None, rollouts: bool = True,
                monitor: Optional[Callable[[float], None]] = None) -> SearchOutcome:
    """Grow a search tree from ``root_state`` in blocks of ``n_min`` iterations.

    Another block runs while the best simulated reward has not improved on the
    root's by ``nu_t`` (relative) and fewer than ``n_max`` iterations were used.
    ``monitor`` receives the running best reward after every iteration.
    """
    physics_cfg = physics_cfg or PhysicsConfig()
    policy = policy or RandomRolloutPolicy()
    rng = rng if rng is not None else np.random.default_rng(cfg.rng_seed)
    from .scene import is_valid

    if not is_valid(scene, root_state, physics_cfg.penetration_tol):
        raise ValueError("invalid root state")
    search = _Search(scene, cfg, policy, rng, physics_cfg, rollouts)
    root = Node(np.array(root_state.poses), rng)
    root.g = search.g(root.poses)
    g_hat = root.g
    used = 0
    pool = ThreadPoolExecutor(cfg.workers) if cfg.workers > 1 else None
    try:
        while True:
            block = min(cfg.n_min, cfg.n_max - used)
            done = 0
            while done < block:
                if pool is None:
                    results = [search.iterate(root)]
                else:
                    results = search.iterate_batch(root, min(cfg.workers, block - done), pool)
                for g_max in results:
                    if g_max is not None and g_max > g_hat:
                        g_hat = g_max
                    if monitor is not None:
                        monitor(g_hat)
                done += len(results)
            used += block
            if used >= cfg.n_max or relative_gain(g_hat, root.g) >= cfg.nu_t:
                break
    finally:
        if pool is not None:
            pool.shutdown()
    action = best_root_action(root, cfg, rng)
    return SearchOutcome(action, g_hat, used, root, root.g)


# --- closed loop -------------------------------------------------------------------


@dataclass
class StepRecord:
    action: Optional[int]
    g: float
    contacted: bool
    poses: np.ndarray


@dataclass
class TrialRecord:
    outcome: str  # "success" or "failure"
    reason: Optional[str]
    steps: int
    trajectory: list[StepRecord]
    wall_time: float
    seed: int
    plan_time: float = 0.0
    n_plans: int = 0

    @property
    def success(self) -> bool:
        return self.outcome == "success"

    @property
    def final_state(self) -> WorldState:
        return WorldState(self.trajectory[-1].poses)


class Executor:
    """Execution channel: the real transition, optionally with a noisy friction coefficient."""

    def __init__(self, scene: Scene, physics_cfg: PhysicsConfig, rng: Optional[np.random.Generator] = None):
        self.scene = scene
        self.cfg = physics_cfg
        self.rng = rng if rng is not None else np.random.default_rng(0)

    def __call__(self, state: WorldState, action: Action) -> TransitionResult:
        noise = self.rng if self.cfg.noise_std_frac > 0 else None
        return step(self.scene, state, action, self.cfg, noise_rng=noise)


SearchFn = Callable[[Scene, WorldState, np.random.Generator], SearchOutcome]


def plan_and_execute(scene: Scene, start: WorldState, cfg: PlannerConfig,
                     policy: Optional[RolloutPolicy] = None, executor: Optional[Callable] = None,
                     rng: Optional[np.random.Generator] = None, physics_cfg: Optional[PhysicsConfig] = None,
                     search: Optional[SearchFn] = None, trap_check: bool = True, seed: int = 0) -> TrialRecord:
    """Replan after every executed action until sorted or a failure rule fires."""
    t_start = time.perf_counter()
    physics_cfg = physics_cfg or PhysicsConfig()
    planning_cfg = PhysicsConfig(**{**physics_cfg.__dict__, "noise_std_frac": 0.0})
    rng = rng if rng is not None else np.random.default_rng(cfg.rng_seed)
    policy = policy or RandomRolloutPolicy()
    executor = executor or Executor(scene, physics_cfg, np.random.default_rng(rng.integers(2**63)))
    if search is None:
        def search(sc, st, r):
            return mcts_search(sc, st, cfg, policy, r, planning_cfg)

    state = start
    g_now = g_value(scene, state, cfg)
    traj = [StepRecord(None, g_now, False, np.array(state.poses))]
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
        result = search(scene, state, rng)
        plan_time += time.perf_counter() - t0
        n_plans += 1
        if trap_check and is_trapped(g_now, result.g_hat, cfg):
            return finish("failure", "trapped")
        tr = executor(state, result.best_action)
        state = tr.next_state
        g_now = g_value(scene, state, cfg)
        traj.append(StepRecord(result.best_action.id, g_now, tr.contacted_any, np.array(state.poses)))
        if tr.out_of_bounds:
            return finish("failure", "out_of_bounds")
        no_contact = 0 if tr.contacted_any else no_contact + 1
        if no_contact > cfg.no_contact_limit:
            return finish("failure", "no_contact")
