import json
import math

import numpy as np
import pytest

from pushsort.scene import (
    ACTIONS,
    Action,
    PlannerConfig,
    Pose2,
    Shape,
    WorldState,
    dump_scene,
    is_valid,
    load_config,
    load_scene,
    normalize_angle,
    scene_to_json,
    world_vertices,
)

from conftest import CUBE, make_scene

UNIT = Shape(parts=(((-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)),))


def test_identity_pose_keeps_corners():
    assert np.array_equal(Pose2(0, 0, 0).transform(UNIT.vertices), UNIT.vertices)


def test_quarter_turn_then_shift():
    out = Pose2(1, 0, math.pi / 2).transform(UNIT.vertices)
    expect = np.array([[-y + 1, x] for x, y in UNIT.vertices])
    assert np.allclose(out, expect, atol=1e-15)


def test_u_shape_world_vertices_match_affine_oracle():
    u = Shape.u_shape()
    assert len(u.parts) == 3 and len(u.vertices) == 12
    assert u.area_centroid == pytest.approx((0.0, 0.0), abs=1e-15)
    scene, state = make_scene([(0.2, 0.2, 0.7)], shapes=[u])
    got = world_vertices(scene, state, 1)
    c, s = math.cos(0.7), math.sin(0.7)
    for (bx, by), (wx, wy) in zip(u.vertices, got):
        assert wx == pytest.approx(c * bx - s * by + 0.2, abs=1e-15)
        assert wy == pytest.approx(s * bx + c * by + 0.2, abs=1e-15)


def test_normalize_angle_range():
    for t in (-7.0, -math.pi, 0.0, math.pi, 3 * math.pi, 100.0):
        w = normalize_angle(t)
        assert -math.pi < w <= math.pi
        assert math.isclose(math.cos(w), math.cos(t), abs_tol=1e-12)


def test_shape_rejects_clockwise_and_concave():
    with pytest.raises(ValueError):
        Shape(parts=(((0, 0), (0, 1), (1, 1), (1, 0)),))
    with pytest.raises(ValueError):
        Shape(parts=(((0, 0), (2, 0), (1, 0.2), (2, 2), (0, 2)),))


def test_is_valid_examples():
    scene, state = make_scene([(0.2, 0.2, 0), (0.3, 0.2, 0)], robot_pose=(0.05, 0.4, 0))
    assert is_valid(scene, state)
    scene, state = make_scene([(0.2, 0.2, 0), (0.2, 0.2, 0)], robot_pose=(0.05, 0.4, 0))
    assert not is_valid(scene, state)
    # corner 1 mm beyond the right wall
    scene, state = make_scene([(0.5 - 0.0125 + 0.001, 0.2, 0)], robot_pose=(0.05, 0.4, 0))
    assert not is_valid(scene, state)


def test_is_valid_obstacle_overlap():
    scene, state = make_scene([(0.2, 0.2, 0)], obstacles=[(CUBE, (0.21, 0.2, 0))], robot_pose=(0.05, 0.4, 0))
    assert not is_valid(scene, state)


def test_scene_requires_every_class():
    with pytest.raises(ValueError):
        make_scene([(0.2, 0.2, 0)], classes=[1])


def test_state_is_immutable_and_hashable():
    st = WorldState([(0.1, 0.1, 0.0), (0.2, 0.2, 0.0)])
    with pytest.raises(ValueError):
        st.poses[0, 0] = 1.0
    assert st == WorldState([(0.1, 0.1, 0.0), (0.2, 0.2, 0.0)])
    assert len({st, WorldState(st.poses)}) == 1


def test_actions():
    assert len(ACTIONS) == 10
    assert [a.kind for a in ACTIONS].count("translate") == 8
    assert Action(8).sign == 1 and Action(9).sign == -1
    with pytest.raises(ValueError):
        Action(10)


def test_scene_file_round_trip(tmp_path):
    scene, state = make_scene([(0.2, 0.2, 0.3), (0.3, 0.1, -1.0)], classes=[0, 1],
                              obstacles=[(CUBE, (0.4, 0.4, 0.2))], shapes=[Shape.u_shape(), CUBE])
    path = tmp_path / "s.json"
    dump_scene(scene, state, path)
    s2, st2 = load_scene(path)
    assert scene_to_json(s2, st2) == scene_to_json(scene, state)
    assert set(json.loads(path.read_text())) == {"workspace", "robot", "movables", "obstacles", "class_count"}


def test_config_file(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"lambda": 30.0, "n_min": 10, "n_max": 20, "friction_coeff": 0.3}))
    cfg, pcfg = load_config(p)
    assert cfg.lam == 30.0 and cfg.n_min == 10 and pcfg.friction_coeff == 0.3
    p.write_text(json.dumps({"bogus": 1}))
    with pytest.raises(ValueError, match="unknown config keys"):
        load_config(p)


def test_planner_config_validation():
    with pytest.raises(ValueError):
        PlannerConfig(n_min=10, n_max=5)
    with pytest.raises(ValueError):
        PlannerConfig(nu=0.3, nu_t=0.2)
    with pytest.raises(ValueError):
        PlannerConfig(hull_mode="bogus")
