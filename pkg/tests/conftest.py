import math

import pytest

from vitreosim.config import TaskConfig
from vitreosim.geometry import (
    CalibrationOffset,
    EyeModel,
    Hand,
    Pose,
    TrocarRig,
    controller_pose_for_tip,
)
from vitreosim.tasks import TickInput, make_eye, make_rig


@pytest.fixture
def config():
    return TaskConfig()


@pytest.fixture
def eye(config):
    return make_eye(config)


@pytest.fixture
def rig(config, eye):
    return make_rig(config, eye)


@pytest.fixture
def cal():
    return CalibrationOffset.identity()


@pytest.fixture
def aligned_rig(eye):
    """Right trocar on +z so the xy plane is exactly lateral (axis-aligned oracle)."""
    r = eye.retina_radius
    return TrocarRig(trocar_left=(0.0, 0.0, -r), trocar_right=(0.0, 0.0, r),
                     lateral_scale=1.0, depth_scale=1.0, rest_depth_mm=r)


class TipDriver:
    """Feeds desired fundus-frame tip positions through the inverse kinematics."""

    def __init__(self, state, rig, eye, cal=None, dt_ms=10):
        self.state = state
        self.rig = rig
        self.eye = eye
        self.cal = cal or CalibrationOffset.identity()
        self.dt = dt_ms
        self.t = 0
        self.events = []

    def frame(self, tip, grip=False, x_button=False, joystick=(0.0, 0.0)):
        raw = controller_pose_for_tip(tip, self.rig, self.cal, Hand.RIGHT, self.eye)
        return TickInput(t_ms=self.t, left_pose=Pose(), right_pose=raw,
                         grip_right=grip, button_x_left=x_button,
                         joystick_right=joystick)

    def step(self, tip, **kw):
        from vitreosim.tasks import tick

        out = tick(self.state, self.frame(tip, **kw), self.rig, self.eye, cal=self.cal)
        self.events.extend(out)
        self.t += self.dt
        return out

    def hold(self, tip, duration_ms, **kw):
        out = []
        end = self.t + duration_ms
        while self.t <= end and not self.state.completed:
            out.extend(self.step(tip, **kw))
        return out


@pytest.fixture
def driver_for():
    def make(state, rig, eye, **kw):
        return TipDriver(state, rig, eye, **kw)

    return make
