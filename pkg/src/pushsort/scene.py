"""Domain types for planar push sorting: poses, shapes, scenes, states, actions, config."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields
from functools import cached_property
from pathlib import Path
from typing import Iterable

import numpy as np

PENETRATION_TOL = 1e-4
N_ACTIONS = 10


def normalize_angle(theta: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    t = math.remainder(theta, 2.0 * math.pi)
    if t <= -math.pi:
        t += 2.0 * math.pi
    return t


@dataclass(frozen=True)
class Pose2:
    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.theta)):
            raise ValueError(f"non-finite pose {self.x, self.y, self.theta}")
        object.__setattr__(self, "theta", normalize_angle(self.theta))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.theta)

    def transform(self, points) -> np.ndarray:
        """Map body-frame points (n, 2) into the world frame."""
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        c, s = math.cos(self.theta), math.sin(self.theta)
        out = np.empty_like(pts)
        out[:, 0] = c * pts[:, 0] - s * pts[:, 1] + self.x
        out[:, 1] = s * pts[:, 0] + c * pts[:, 1] + self.y
        return out


def _signed_area(loop) -> float:
    a = 0.0
    n = len(loop)
    for i in range(n):
        x0, y0 = loop[i]
        x1, y1 = loop[(i + 1) % n]
        a += x0 * y1 - x1 * y0
    return 0.5 * a


def _is_convex_ccw(loop) -> bool:
    n = len(loop)
    if n < 3:
        return False
    for i in range(n):
        ax, ay = loop[i]
        bx, by = loop[(i + 1) % n]
        cx, cy = loop[(i + 2) % n]
        if (bx - ax) * (cy - by) - (by - ay) * (cx - bx) <= 0.0:
            return False
    return True


@dataclass(frozen=True)
class Shape:
    """A rigid footprint made of one or more convex CCW parts in the body frame."""

    parts: tuple[tuple[tuple[float, float], ...], ...]
    kind: str = "ConvexPolygon"

    def __post_init__(self):
        parts = tuple(tuple((float(x), float(y)) for x, y in part) for part in self.parts)
        if not parts:
            raise ValueError("shape needs at least one part")
        for part in parts:
            if not _is_convex_ccw(part):
                raise ValueError(f"part is not a convex counter-clockwise loop: {part}")
        object.__setattr__(self, "parts", parts)
        kind = "ConvexPolygon" if len(parts) == 1 else "CompositePolygon"
        object.__setattr__(self, "kind", kind)

    @classmethod
    def rectangle(cls, width: float, height: float) -> "Shape":
        w, h = width / 2.0, height / 2.0
        return cls(parts=(((-w, -h), (w, -h), (w, h), (-w, h)),))

    @classmethod
    def u_shape(cls, side: float = 0.05, wall: float = 0.01) -> "Shape":
        """U opening towards +y, built from three rectangles; the area centroid sits at the origin."""
        h = side / 2.0
        base = ((-h, -h), (h, -h), (h, -h + wall), (-h, -h + wall))
        left = ((-h, -h + wall), (-h + wall, -h + wall), (-h + wall, h), (-h, h))
        right = ((h - wall, -h + wall), (h, -h + wall), (h, h), (h - wall, h))
        shape = cls(parts=(base, left, right))
        cx, cy = shape.area_centroid
        return shape.translated(-cx, -cy)

    def translated(self, dx: float, dy: float) -> "Shape":
        return Shape(parts=tuple(tuple((x + dx, y + dy) for x, y in p) for p in self.parts))

    @cached_property
    def vertices(self) -> np.ndarray:
        return np.array([v for part in self.parts for v in part], dtype=float)

    @cached_property
    def area(self) -> float:
        return sum(_signed_area(p) for p in self.parts)

    @cached_property
    def area_centroid(self) -> tuple[float, float]:
        ax = ay = 0.0
        total = 0.0
        for part in self.parts:
            n = len(part)
            a = _signed_area(part)
            cx = cy = 0.0
            for i in range(n):
                x0, y0 = part[i]
                x1, y1 = part[(i + 1) % n]
                cr = x0 * y1 - x1 * y0
                cx += (x0 + x1) * cr
                cy += (y0 + y1) * cr
            ax += cx / 6.0
            ay += cy / 6.0
            total += a
        return (ax / total, ay / total)

    @cached_property
    def radius(self) -> float:
        """Bounding radius about the body-frame origin."""
        return float(np.max(np.hypot(self.vertices[:, 0], self.vertices[:, 1])))

    def to_json(self) -> dict:
        return {"parts": [[list(v) for v in part] for part in self.parts]}

    @classmethod
    def from_json(cls, obj: dict) -> "Shape":
        return cls(parts=tuple(tuple(tuple(v) for v in part) for part in obj["parts"]))


CUBE_SIDE = 0.025


@dataclass(frozen=True)
class Movable:
    shape: Shape
    class_id: int


@dataclass(frozen=True)
class Obstacle:
    shape: Shape
    pose: Pose2


@dataclass(frozen=True, eq=False)
class Scene:
    """Static problem description. Immutable; safe to share across threads."""

    workspace: tuple[float, float, float, float]
    robot_shape: Shape
    movables: tuple[Movable, ...]
    obstacles: tuple[Obstacle, ...] = ()
    class_count: int = 1

    def __post_init__(self):
        object.__setattr__(self, "workspace", tuple(float(v) for v in self.workspace))
        object.__setattr__(self, "movables", tuple(self.movables))
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        xmin, ymin, xmax, ymax = self.workspace
        if not (xmax > xmin and ymax > ymin):
            raise ValueError(f"degenerate workspace {self.workspace}")
        if self.class_count < 1:
            raise ValueError("class_count must be positive")
        seen = set()
        for m in self.movables:
            if not 0 <= m.class_id < self.class_count:
                raise ValueError(f"class id {m.class_id} outside [0, {self.class_count})")
            seen.add(m.class_id)
        if self.movables and len(seen) != self.class_count:
            raise ValueError("every class needs at least one member")

    @property
    def n_movables(self) -> int:
        return len(self.movables)

    @cached_property
    def class_ids(self) -> np.ndarray:
        return np.array([m.class_id for m in self.movables], dtype=np.int64)

    @cached_property
    def obstacle_polygons(self) -> list[np.ndarray]:
        """World-frame vertex loops of every obstacle part."""
        return [o.pose.transform(part) for o in self.obstacles for part in o.shape.parts]

    @cached_property
    def obstacle_centroids(self) -> np.ndarray:
        pts = [o.pose.transform([o.shape.area_centroid])[0] for o in self.obstacles]
        return np.array(pts, dtype=float).reshape(-1, 2)

    @cached_property
    def diagonal(self) -> float:
        xmin, ymin, xmax, ymax = self.workspace
        return math.hypot(xmax - xmin, ymax - ymin)

    def body_shape(self, body: int) -> Shape:
        """Body 0 is the robot, body k >= 1 is movable k - 1."""
        return self.robot_shape if body == 0 else self.movables[body - 1].shape


class WorldState:
    """Robot and movable poses, stored as a read-only (1 + M, 3) array; row 0 is the robot."""

    __slots__ = ("poses",)

    def __init__(self, poses):
        arr = np.array(poses, dtype=float, copy=True).reshape(-1, 3)
        arr.flags.writeable = False
        self.poses = arr

    @classmethod
    def from_poses(cls, robot: Pose2, movables: Iterable[Pose2]) -> "WorldState":
        rows = [robot.as_tuple()] + [p.as_tuple() for p in movables]
        return cls(rows)

    @property
    def robot_pose(self) -> Pose2:
        return Pose2(*self.poses[0])

    @property
    def movable_poses(self) -> list[Pose2]:
        return [Pose2(*row) for row in self.poses[1:]]

    def __eq__(self, other):
        return isinstance(other, WorldState) and np.array_equal(self.poses, other.poses)

    def __hash__(self):
        return hash(self.poses.tobytes())

    def __repr__(self):
        return f"WorldState(robot={tuple(self.poses[0])}, movables={len(self.poses) - 1})"

    def to_json(self) -> dict:
        return {
            "robot": [float(v) for v in self.poses[0]],
            "movables": [[float(v) for v in row] for row in self.poses[1:]],
        }


@dataclass(frozen=True)
class Action:
    """One of ten robot-centric motions: ids 0-7 translate, 8 rotates CCW, 9 rotates CW."""

    id: int

    def __post_init__(self):
        if not 0 <= self.id < N_ACTIONS:
            raise ValueError(f"action id {self.id} outside 0..9")

    @property
    def kind(self) -> str:
        return "translate" if self.id < 8 else "rotate"

    @property
    def direction(self) -> int | None:
        return self.id if self.id < 8 else None

    @property
    def sign(self) -> int | None:
        if self.id < 8:
            return None
        return 1 if self.id == 8 else -1


ACTIONS: tuple[Action, ...] = tuple(Action(i) for i in range(N_ACTIONS))


@dataclass(frozen=True)
class PlannerConfig:
    epsilon: float = 0.05
    nu: float = 0.05
    nu_t: float = 0.2
    d_max: int = 3
    n_min: int = 500
    n_max: int = 1500
    c_explore: float = 1.0 / math.sqrt(2.0)
    lam: float = 50.0
    no_contact_limit: int = 15
    rng_seed: int = 0
    hull_mode: str = "footprints"
    backup_mode: str = "max"
    max_steps: int = 400
    workers: int = 1

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if not 0 < self.nu <= self.nu_t:
            raise ValueError("need 0 < nu <= nu_t")
        if self.n_min > self.n_max or self.n_min < 1:
            raise ValueError("need 1 <= n_min <= n_max")
        if self.d_max < 1:
            raise ValueError("d_max must be >= 1")
        if self.lam <= 0:
            raise ValueError("lambda must be positive")
        if self.hull_mode not in ("footprints", "centers"):
            raise ValueError(f"unknown hull_mode {self.hull_mode!r}")
        if self.backup_mode not in ("max", "avg"):
            raise ValueError(f"unknown backup_mode {self.backup_mode!r}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


def world_vertices(scene: Scene, state: WorldState, body: int) -> np.ndarray:
    """All part vertices of ``body`` (0 = robot, k = movable k-1) in world coordinates."""
    if not 0 <= body <= scene.n_movables:
        raise IndexError(f"body {body} out of range")
    pose = Pose2(*state.poses[body])
    return pose.transform(scene.body_shape(body).vertices)


def world_parts(scene: Scene, state: WorldState, body: int) -> list[np.ndarray]:
    pose = Pose2(*state.poses[body])
    return [pose.transform(part) for part in scene.body_shape(body).parts]


def is_valid(scene: Scene, state: WorldState, tol: float = PENETRATION_TOL) -> bool:
    """No interpenetration deeper than ``tol`` and every footprint inside the workspace."""
    from .geometry import ConvexSet, penetration

    if state.poses.shape[0] != scene.n_movables + 1:
        raise ValueError("state does not match scene")
    xmin, ymin, xmax, ymax = scene.workspace
    bodies = [world_parts(scene, state, b) for b in range(scene.n_movables + 1)]
    for parts in bodies:
        for p in parts:
            if (p[:, 0].min() < xmin - tol or p[:, 0].max() > xmax + tol
                    or p[:, 1].min() < ymin - tol or p[:, 1].max() > ymax + tol):
                return False
    sets = [[ConvexSet.from_array(p) for p in parts] for parts in bodies]
    statics = [ConvexSet.from_array(p) for p in scene.obstacle_polygons]
    n = len(sets)
    for i in range(n):
        for j in range(i + 1, n):
            for a in sets[i]:
                for b in sets[j]:
                    pen = penetration(a, b)
                    if pen is not None and pen[0] > tol:
                        return False
        for a in sets[i]:
            for s in statics:
                pen = penetration(a, s)
                if pen is not None and pen[0] > tol:
                    return False
    return True


# --- scene files -----------------------------------------------------------------


def scene_to_json(scene: Scene, state: WorldState) -> dict:
    return {
        "workspace": list(scene.workspace),
        "robot": {"shape": scene.robot_shape.to_json(), "pose": list(state.poses[0])},
        "movables": [
            {"shape": m.shape.to_json(), "class": m.class_id, "pose": list(state.poses[k + 1])}
            for k, m in enumerate(scene.movables)
        ],
        "obstacles": [{"shape": o.shape.to_json(), "pose": list(o.pose.as_tuple())} for o in scene.obstacles],
        "class_count": scene.class_count,
    }


def scene_from_json(obj: dict) -> tuple[Scene, WorldState]:
    movables = [Movable(Shape.from_json(m["shape"]), int(m["class"])) for m in obj["movables"]]
    obstacles = [Obstacle(Shape.from_json(o["shape"]), Pose2(*o["pose"])) for o in obj.get("obstacles", [])]
    scene = Scene(
        workspace=tuple(obj["workspace"]),
        robot_shape=Shape.from_json(obj["robot"]["shape"]),
        movables=tuple(movables),
        obstacles=tuple(obstacles),
        class_count=int(obj["class_count"]),
    )
    state = WorldState.from_poses(Pose2(*obj["robot"]["pose"]), [Pose2(*m["pose"]) for m in obj["movables"]])
    return scene, state


def dump_scene(scene: Scene, state: WorldState, path) -> None:
    Path(path).write_text(json.dumps(scene_to_json(scene, state), indent=1))


def load_scene(path) -> tuple[Scene, WorldState]:
    return scene_from_json(json.loads(Path(path).read_text()))


def config_fields(cls) -> set[str]:
    return {f.name for f in fields(cls)}


def split_config(obj: dict) -> tuple[dict, dict]:
    """Split a flat run-config mapping into planner and physics keyword dicts."""
    from .physics import PhysicsConfig

    obj = dict(obj)
    if "lambda" in obj:
        obj["lam"] = obj.pop("lambda")
    planner_keys = config_fields(PlannerConfig)
    physics_keys = config_fields(PhysicsConfig)
    unknown = set(obj) - planner_keys - physics_keys
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    planner = {k: v for k, v in obj.items() if k in planner_keys}
    physics = {k: v for k, v in obj.items() if k in physics_keys and k not in planner_keys}
    if "penetration_tol" in obj:
        physics["penetration_tol"] = obj["penetration_tol"]
    return planner, physics


def load_config(path) -> tuple[PlannerConfig, "PhysicsConfig"]:
    from .physics import PhysicsConfig

    planner, physics = split_config(json.loads(Path(path).read_text()))
    return PlannerConfig(**planner), PhysicsConfig(**physics)
