"""Monte Carlo tree search for sorting planar objects by non-prehensile pushing."""

from .geometry import ConvexSet, convex_hull, penetration, point_distance_to_set, set_distance
from .mcts import (
    Node,
    RandomRolloutPolicy,
    SearchOutcome,
    TrialRecord,
    is_trapped,
    mcts_search,
    plan_and_execute,
    ucb_score,
)
from .objective import RewardBreakdown, class_mean, is_sorted, reward
from .physics import PhysicsConfig, TransitionResult, sample_friction, step
from .scene import ACTIONS, Action, PlannerConfig, Pose2, Scene, Shape, WorldState, is_valid, world_vertices

__all__ = [
    "ACTIONS", "Action", "ConvexSet", "Node", "PhysicsConfig", "PlannerConfig", "Pose2", "RandomRolloutPolicy",
    "RewardBreakdown", "Scene", "SearchOutcome", "Shape", "TransitionResult", "TrialRecord", "WorldState",
    "class_mean", "convex_hull", "is_sorted", "is_trapped", "is_valid", "mcts_search", "penetration",
    "plan_and_execute", "point_distance_to_set", "reward", "sample_friction", "set_distance", "step",
    "ucb_score", "world_vertices",
]
