import math

import numpy as np
import pytest

from pushsort.baselines import successor_rewards
from pushsort.mcts import (
    Node,
    SearchOutcome,
    exploit_term,
    is_trapped,
    mcts_search,
    plan_and_execute,
    ucb_score,
)
from pushsort.objective import g_value
from pushsort.physics import PhysicsConfig, TransitionResult, step
from pushsort.scene import ACTIONS, PlannerConfig

from conftest import make_scene

C = 1.0 / math.sqrt(2.0)
ROOT_RNG = np.random.default_rng(0)


def node(v_upper, v_lower, n):
    nd = Node(np.zeros((1, 3)), ROOT_RNG)
    nd.v_upper, nd.v_lower, nd.n = v_upper, v_lower, n
    return nd


def test_ucb_hand_example():
    parent, child = node(-2.0, -10.0, 10), node(-4.0, -4.0, 2)
    want = 0.75 + C * math.sqrt(2.0 * math.log(10) / 2)
    assert abs(ucb_score(parent, child, PlannerConfig()) - want) <= 1e-12
    assert ucb_score(parent, child, PlannerConfig()) == pytest.approx(1.8230, abs=1e-4)


def test_ucb_degenerate_span_gives_unit_exploit():
    parent = node(-3.0, -3.0, 10)
    a, b = node(-3.0, -3.0, 2), node(-3.0, -3.0, 5)
    assert exploit_term(parent, a) == 1.0 and exploit_term(parent, b) == 1.0
    cfg = PlannerConfig()
    assert abs(ucb_score(parent, a, cfg) - (1.0 + C * math.sqrt(2 * math.log(10) / 2))) <= 1e-12
    assert ucb_score(parent, a, cfg) > ucb_score(parent, b, cfg)  # least visited wins


def test_ucb_child_at_parent_upper():
    parent, child = node(-2.0, -10.0, 10), node(-2.0, -5.0, 3)
    assert exploit_term(parent, child) == 1.0
    assert abs(ucb_score(parent, child, PlannerConfig()) - (1.0 + C * math.sqrt(2 * math.log(10) / 3))) <= 1e-12


def test_terminal_child_exploit_is_zero():
    parent = node(-2.0, -10.0, 10)
    t = Node(np.zeros((1, 3)), ROOT_RNG, terminal=True)
    assert exploit_term(parent, t) == 0.0


@pytest.mark.parametrize("g, g_hat, trapped", [(-10.0, -10.0, True), (-10.0, -9.0, False), (-10.0, -9.8, True)])
def test_is_trapped_examples(g, g_hat, trapped):
    assert is_trapped(g, g_hat, PlannerConfig(nu=0.05)) is trapped


def open_scene():
    return make_scene([(0.2, 0.25, 0), (0.35, 0.25, 0), (0.25, 0.1, 0), (0.35, 0.4, 0)], classes=[0, 0, 1, 1],
                      robot_pose=(0.1, 0.25, 0))


def test_budget_cap():
    scene, state = open_scene()
    out = mcts_search(scene, state, PlannerConfig(n_min=500, n_max=500, nu_t=0.2), rng=np.random.default_rng(1))
    assert out.iterations_used == 500
    assert out.root.n == 500


def test_dynamic_budget_runs_blocks_until_cap():
    scene, state = open_scene()
    out = mcts_search(scene, state, PlannerConfig(n_min=100, n_max=350, nu=0.05, nu_t=1e6),
                      rng=np.random.default_rng(1))
    assert out.iterations_used == 350  # unreachable target: 100+100+100+50


def test_g_hat_includes_root_when_nothing_reachable():
    # robot boxed far from every object: no rollout can change g
    scene, state = make_scene([(0.45, 0.45, 0), (0.45, 0.05, 0)], classes=[0, 1], robot_pose=(0.05, 0.25, 0))
    out = mcts_search(scene, state, PlannerConfig(n_min=50, n_max=50, d_max=2), rng=np.random.default_rng(2))
    assert out.g_hat == out.g_root == g_value(scene, state, PlannerConfig())


def test_tree_bounds_consistent():
    scene, state = open_scene()
    out = mcts_search(scene, state, PlannerConfig(n_min=400, n_max=400), rng=np.random.default_rng(3))
    assert out.g_hat >= out.g_root
    stack = [out.root]
    while stack:
        nd = stack.pop()
        if nd.n_val:
            assert nd.v_lower <= nd.v_upper
            assert nd.v_upper <= out.g_hat
        assert nd.n >= sum(c.n for c in nd.children.values())
        for c in nd.children.values():
            if c.n_val:
                assert c.v_upper <= nd.v_upper and c.v_lower >= nd.v_lower
            stack.append(c)
    assert out.root.count_internal() >= 50


def two_ply_best(scene, state, cfg, pcfg):
    best = {}
    for a in range(10):
        r1 = step(scene, state, a, pcfg)
        if r1.out_of_bounds:
            continue
        g1 = g_value(scene, r1.next_state, cfg)
        vals = [g1]
        for b in range(10):
            r2 = step(scene, r1.next_state, b, pcfg)
            if not r2.out_of_bounds:
                vals.append(g_value(scene, r2.next_state, cfg))
        best[a] = max(vals)
    top = max(best.values())
    return {a for a, v in best.items() if v >= top - 1e-12}


def test_search_agrees_with_two_ply_enumeration():
    # robot directly behind one cube of a two-cube class: pushing it toward its mate is best
    scene, state = make_scene([(0.2, 0.25, 0), (0.35, 0.25, 0)], robot_pose=(0.15, 0.25, 0))
    cfg = PlannerConfig(n_min=200, n_max=200, d_max=1)
    oracle = two_ply_best(scene, state, cfg, PhysicsConfig())
    assert oracle == {0}
    out = mcts_search(scene, state, cfg, rng=np.random.default_rng(4))
    assert out.best_action.id in oracle


def test_terminal_child_never_reselected():
    # a cube against the east wall: pushing forward drives it out of the workspace
    scene, state = make_scene([(0.5 - 0.0125 - 0.002, 0.25, 0), (0.1, 0.1, 0)], classes=[0, 1],
                              robot_pose=(0.5 - 0.025 - 0.0125 - 0.004, 0.25, 0))
    assert step(scene, state, 0, PhysicsConfig()).out_of_bounds
    out = mcts_search(scene, state, PlannerConfig(n_min=300, n_max=300), rng=np.random.default_rng(5))
    term = out.root.children[0]
    assert term.terminal and term.n == 1
    assert out.best_action.id != 0


def test_no_rollout_children_match_successor_table():
    scene, state = open_scene()
    cfg = PlannerConfig(n_min=10, n_max=10)
    out = mcts_search(scene, state, cfg, rng=np.random.default_rng(6), rollouts=False)
    table = successor_rewards(scene, state, cfg)
    assert len(out.root.children) == 10
    for a, c in out.root.children.items():
        if c.terminal:
            assert table[a] == -np.inf
        else:
            assert c.v_upper == pytest.approx(table[a], rel=1e-12)


def test_search_deterministic_per_seed():
    scene, state = open_scene()
    cfg = PlannerConfig(n_min=200, n_max=400)
    a = mcts_search(scene, state, cfg, rng=np.random.default_rng(7))
    b = mcts_search(scene, state, cfg, rng=np.random.default_rng(7))
    assert (a.best_action, a.g_hat, a.iterations_used) == (b.best_action, b.g_hat, b.iterations_used)


def test_parallel_rollouts_run():
    scene, state = open_scene()
    out = mcts_search(scene, state, PlannerConfig(n_min=100, n_max=100, workers=3), rng=np.random.default_rng(8))
    assert out.iterations_used == 100 and out.root.n == 100
    assert out.g_hat >= out.g_root


def test_invalid_root_rejected():
    scene, state = make_scene([(0.2, 0.2, 0)], robot_pose=(0.2, 0.2, 0))
    with pytest.raises(ValueError):
        mcts_search(scene, state, PlannerConfig(n_min=5, n_max=5))


# --- closed loop ----------------------------------------------------------------------


class IdleExecutor:
    """Robot never touches anything; contact can be switched on at given step numbers."""

    def __init__(self, contact_at=()):
        self.k = 0
        self.contact_at = set(contact_at)

    def __call__(self, state, action):
        self.k += 1
        return TransitionResult(state, self.k in self.contact_at, False, frozenset())


def scripted_search(gain):
    def search(scene, state, rng):
        g = g_value(scene, state, PlannerConfig())
        return SearchOutcome(ACTIONS[0], g + gain * abs(g), 1, None, g)
    return search


def unsorted_scene():
    return make_scene([(0.2, 0.25, 0), (0.23, 0.25, 0)], classes=[0, 1], robot_pose=(0.05, 0.05, 0))


def test_already_sorted_is_zero_step_success():
    scene, state = make_scene([(0.1, 0.1, 0), (0.4, 0.4, 0)], classes=[0, 1], robot_pose=(0.05, 0.4, 0))
    rec = plan_and_execute(scene, state, PlannerConfig(n_min=5, n_max=5), rng=np.random.default_rng(0))
    assert rec.success and rec.steps == 0 and len(rec.trajectory) == 1


def test_sixteenth_contact_free_action_fails():
    scene, state = unsorted_scene()
    rec = plan_and_execute(scene, state, PlannerConfig(), executor=IdleExecutor(), search=scripted_search(1.0),
                           rng=np.random.default_rng(0))
    assert (rec.outcome, rec.reason, rec.steps) == ("failure", "no_contact", 16)


def test_contact_resets_no_contact_counter():
    scene, state = unsorted_scene()
    rec = plan_and_execute(scene, state, PlannerConfig(), executor=IdleExecutor(contact_at={15}),
                           search=scripted_search(1.0), rng=np.random.default_rng(0))
    assert rec.reason == "no_contact" and rec.steps == 15 + 16


def test_trap_rule_fires_below_nu():
    scene, state = unsorted_scene()
    rec = plan_and_execute(scene, state, PlannerConfig(nu=0.05), executor=IdleExecutor(),
                           search=scripted_search(0.01), rng=np.random.default_rng(0))
    assert (rec.outcome, rec.reason, rec.steps) == ("failure", "trapped", 0)
    rec = plan_and_execute(scene, state, PlannerConfig(nu=0.05), executor=IdleExecutor(),
                           search=scripted_search(0.1), rng=np.random.default_rng(0))
    assert rec.reason == "no_contact"


def test_step_limit():
    scene, state = unsorted_scene()
    rec = plan_and_execute(scene, state, PlannerConfig(max_steps=5), executor=IdleExecutor(range(1, 100)),
                           search=scripted_search(1.0), rng=np.random.default_rng(0))
    assert (rec.reason, rec.steps) == ("step_limit", 5)


def test_closed_loop_sorts_easy_scene():
    scene, state = make_scene([(0.2, 0.25, 0), (0.26, 0.25, 0)], classes=[0, 1], robot_pose=(0.1, 0.25, 0))
    rec = plan_and_execute(scene, state, PlannerConfig(n_min=200, n_max=600), rng=np.random.default_rng(1))
    assert rec.success, rec.reason
    assert rec.steps == len(rec.trajectory) - 1
