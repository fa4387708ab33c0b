"""Sorted-state test and the heuristic sorting reward."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .geometry import ConvexSet, convex_hull, set_distance
from .physics import CompiledScene, compiled
from .scene import PlannerConfig, Pose2, Scene, WorldState, world_vertices

LN_FLOOR = 1e-9
D_CENT_FLOOR = 1e-3


@dataclass(frozen=True)
class RewardBreakdown:
    e_self: tuple[float, ...]
    e_other: tuple[float, ...]  # pairs (i, j), j < i, in row order
    e_obst: tuple[float, ...]
    d_cent: float
    g: float
    lam: float = 50.0

    def to_json(self) -> dict:
        return {
            "e_self": list(self.e_self),
            "e_other": list(self.e_other),
            "e_obst": list(self.e_obst),
            "d_cent": self.d_cent,
            "g": self.g,
            "lambda": self.lam,
        }


def centroids(scene: Scene, state: WorldState) -> np.ndarray:
    """World-frame area centroid of every movable, shape (M, 2)."""
    out = np.empty((scene.n_movables, 2))
    for k, m in enumerate(scene.movables):
        out[k] = Pose2(*state.poses[k + 1]).transform([m.shape.area_centroid])[0]
    return out


def class_mean(scene: Scene, state: WorldState, class_id: int) -> np.ndarray:
    members = np.flatnonzero(scene.class_ids == class_id)
    if members.size == 0:
        raise ValueError(f"class {class_id} has no members")
    return centroids(scene, state)[members].mean(axis=0)


def _log_gauss_far(d2: float, lam: float) -> float:
    return math.log(max(LN_FLOOR, 1.0 - math.exp(-lam * d2)))


def reward(scene: Scene, state: WorldState, cfg: PlannerConfig) -> RewardBreakdown:
    lam = cfg.lam
    cents = centroids(scene, state)
    K = scene.class_count
    mus = [cents[scene.class_ids == i].mean(axis=0) for i in range(K)]
    log_floor = math.log(LN_FLOOR)
    e_self = []
    for i in range(K):
        d2 = np.sum((cents[scene.class_ids == i] - mus[i]) ** 2, axis=1)
        e_self.append(float(np.mean(np.maximum(log_floor, -lam * d2))))
    e_other = []
    d_cent = math.inf
    for i in range(K):
        for j in range(i):
            d2 = float(np.sum((mus[i] - mus[j]) ** 2))
            e_other.append(_log_gauss_far(d2, lam))
            d_cent = min(d_cent, math.sqrt(d2))
    e_obst = []
    for i in range(K):
        e_obst.append(sum(_log_gauss_far(float(np.sum((c - mus[i]) ** 2)), lam) for c in scene.obstacle_centroids))
    if K < 2:
        d_cent = scene.diagonal
    else:
        d_cent = max(d_cent, D_CENT_FLOOR)
    g = (sum(e_self) + sum(e_other) + sum(e_obst)) / d_cent
    return RewardBreakdown(tuple(e_self), tuple(e_other), tuple(e_obst), d_cent, g, lam)


def fast_reward(cs: CompiledScene, poses: np.ndarray, lam: float) -> float:
    """Scalar reward from the compiled kernel; matches ``reward(...).g``."""
    parts = np.empty(4)
    return _kernels.reward_kernel(poses, cs.com_off, cs.class_ids, cs.class_count, cs.obst_c,
                                  lam, LN_FLOOR, D_CENT_FLOOR, cs.diagonal, parts)


def g_value(scene: Scene, state: WorldState, cfg: PlannerConfig) -> float:
    return fast_reward(compiled(scene), state.poses, cfg.lam)


def class_hull(scene: Scene, state: WorldState, class_id: int, mode: str = "footprints") -> ConvexSet:
    members = np.flatnonzero(scene.class_ids == class_id)
    if mode == "centers":
        pts = centroids(scene, state)[members]
    else:
        pts = np.vstack([world_vertices(scene, state, k + 1) for k in members])
    return convex_hull(pts)


def is_sorted(scene: Scene, state: WorldState, cfg: PlannerConfig) -> bool:
    """Every pair of class hulls, and every hull and obstacle, farther apart than epsilon."""
    hulls = [class_hull(scene, state, i, cfg.hull_mode) for i in range(scene.class_count)]
    for i in range(len(hulls)):
        for j in range(i + 1, len(hulls)):
            if set_distance(hulls[i], hulls[j]) <= cfg.epsilon:
                return False
    for poly in scene.obstacle_polygons:
        obst = ConvexSet.from_array(poly)
        for h in hulls:
            if set_distance(h, obst) <= cfg.epsilon:
                return False
    return True
