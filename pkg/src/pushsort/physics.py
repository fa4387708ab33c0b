"""Deterministic quasistatic transition model for one discrete robot action."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .scene import PENETRATION_TOL, Action, Scene, WorldState, is_valid

SLOP = 1e-9


@dataclass(frozen=True)
class PhysicsConfig:
    substeps_per_action: int = 10
    solver_iterations: int = 8
    friction_coeff: float = 0.5
    rot_compliance: float = 1.0
    penetration_tol: float = PENETRATION_TOL
    noise_std_frac: float = 0.0
    trans_step: float = 0.05
    rot_step: float = np.pi / 4

    def __post_init__(self):
        if self.substeps_per_action < 1 or self.solver_iterations < 1:
            raise ValueError("substeps and solver iterations must be >= 1")
        if self.friction_coeff < 0:
            raise ValueError("friction coefficient must be non-negative")
        if not 0 <= self.noise_std_frac < 1.5:
            raise ValueError("noise_std_frac must lie in [0, 1.5)")


@dataclass(frozen=True)
class TransitionResult:
    next_state: WorldState
    contacted_any: bool
    out_of_bounds: bool
    pushed_indices: frozenset
    stalled: bool = False
    contact_pairs: tuple = ()


class CompiledScene:
    """Flat arrays consumed by the compiled kernels; built once per scene."""

    def __init__(self, scene: Scene):
        shapes = [scene.robot_shape] + [m.shape for m in scene.movables]
        vmax = max(len(p) for s in shapes for p in s.parts)
        if scene.obstacles:
            vmax = max(vmax, max(len(p) for o in scene.obstacles for p in o.shape.parts))
        parts = [np.asarray(p, dtype=float) for s in shapes for p in s.parts]
        self.part_verts = np.zeros((len(parts), vmax, 2))
        self.part_nv = np.zeros(len(parts), dtype=np.int64)
        for k, p in enumerate(parts):
            self.part_verts[k, : len(p)] = p
            self.part_nv[k] = len(p)
        counts = [len(s.parts) for s in shapes]
        self.pstart = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        self.radius = np.array([s.radius for s in shapes])
        self.com_off = np.array([s.area_centroid for s in shapes], dtype=float)
        polys = scene.obstacle_polygons
        self.st_verts = np.zeros((len(polys), vmax, 2))
        self.st_nv = np.zeros(len(polys), dtype=np.int64)
        self.st_c = np.zeros((len(polys), 2))
        self.st_r = np.zeros(len(polys))
        for k, p in enumerate(polys):
            self.st_verts[k, : len(p)] = p
            self.st_nv[k] = len(p)
            c = p.mean(axis=0)
            self.st_c[k] = c
            self.st_r[k] = np.max(np.hypot(*(p - c).T))
        self.ws = np.array(scene.workspace, dtype=float)
        self.class_ids = scene.class_ids
        self.class_count = scene.class_count
        self.obst_c = scene.obstacle_centroids
        self.diagonal = scene.diagonal
        self.n_bodies = len(shapes)


def compiled(scene: Scene) -> CompiledScene:
    cs = scene.__dict__.get("_compiled")
    if cs is None:
        cs = CompiledScene(scene)
        scene.__dict__["_compiled"] = cs
    return cs


def step_poses(cs: CompiledScene, poses: np.ndarray, action_id: int, cfg: PhysicsConfig,
               friction: Optional[float] = None, contacts: Optional[np.ndarray] = None):
    """Array-level transition used by the planners' hot loops."""
    if contacts is None:
        contacts = np.empty((0, 2), dtype=np.int64)
    cf = cfg.friction_coeff if friction is None else friction
    return _kernels.step_kernel(
        poses, action_id, cfg.trans_step, cfg.rot_step, cfg.substeps_per_action, cfg.solver_iterations,
        cf, cfg.rot_compliance, cfg.penetration_tol, SLOP,
        cs.part_verts, cs.part_nv, cs.pstart, cs.radius, cs.com_off,
        cs.st_verts, cs.st_nv, cs.st_c, cs.st_r, cs.ws, contacts,
    )


def sample_friction(cfg: PhysicsConfig, rng: np.random.Generator) -> float:
    """Friction for one executed action: max(0, c_f + N(0, p * c_f))."""
    if cfg.noise_std_frac == 0.0:
        return cfg.friction_coeff
    draw = cfg.friction_coeff + rng.normal(0.0, cfg.noise_std_frac * cfg.friction_coeff)
    return max(0.0, float(draw))


def step(scene: Scene, state: WorldState, action: Action | int, cfg: PhysicsConfig,
         noise_rng: Optional[np.random.Generator] = None) -> TransitionResult:
    """Execute ``action`` from ``state``. With ``noise_rng`` the friction coefficient is resampled."""
    if not is_valid(scene, state, cfg.penetration_tol):
        raise ValueError("invalid start state")
    aid = action.id if isinstance(action, Action) else int(action)
    if not 0 <= aid < 10:
        raise ValueError(f"action id {aid} outside 0..9")
    cs = compiled(scene)
    friction = sample_friction(cfg, noise_rng) if noise_rng is not None else None
    contacts = np.zeros((4 * cs.n_bodies, 2), dtype=np.int64)
    poses, contacted, oob, stalled, active, n_contacts = step_poses(cs, state.poses, aid, cfg, friction, contacts)
    pushed = frozenset(int(b) - 1 for b in np.flatnonzero(active))
    pairs = tuple((int(a), int(b)) for a, b in contacts[:n_contacts])
    return TransitionResult(WorldState(poses), bool(contacted), bool(oob), pushed, bool(stalled), pairs)
