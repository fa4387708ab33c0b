import numpy as np
import pytest

from pushsort.scene import CUBE_SIDE, Movable, Obstacle, Pose2, Scene, Shape, WorldState

CUBE = Shape.rectangle(CUBE_SIDE, CUBE_SIDE)
PUSHER = Shape.rectangle(0.025, 0.05)


def make_scene(cubes, classes=None, obstacles=(), workspace=(0.0, 0.0, 0.5, 0.5), robot=PUSHER,
               robot_pose=(0.05, 0.05, 0.0), shapes=None):
    """Scene + state from cube poses [(x, y, th), ...]; classes default to all zeros."""
    classes = list(classes) if classes is not None else [0] * len(cubes)
    shapes = shapes or [CUBE] * len(cubes)
    scene = Scene(
        workspace=workspace,
        robot_shape=robot,
        movables=tuple(Movable(s, c) for s, c in zip(shapes, classes)),
        obstacles=tuple(Obstacle(s, Pose2(*p)) for s, p in obstacles),
        class_count=max(classes) + 1 if classes else 1,
    )
    state = WorldState([robot_pose] + [list(c) for c in cubes])
    return scene, state


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
