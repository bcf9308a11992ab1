"""Engine configuration: every tunable constant of the four training tasks."""

from __future__ import annotations

import dataclasses
import json
import math
import os
from dataclasses import dataclass

from .errors import InvalidConfig


@dataclass(frozen=True)
class TaskConfig:
    """All engine constants, exposed so sessions snapshot them into their logs.

    Defaults follow an anatomical adult globe (24 mm diameter).  Timing
    constants (2 s dwell, 200 ms laser repeat) are behavioral requirements
    of the tasks; the remaining geometry values are engine defaults.
    """

    # eye + kinematics
    retina_radius_mm: float = 12.0
    lateral_scale: float = 0.5
    depth_scale: float = 1.0
    ergonomic_rotation_deg: float = 45.0
    eye_rate_deg_s: float = 30.0          # globe rotation speed per unit joystick

    # retinal touch hysteresis
    touch_engage_mm: float = 0.1
    touch_release_mm: float = 0.5

    # navigation training (core vitrectomy)
    nav_sphere_count: int = 10
    nav_sphere_radius_mm: float = 1.5
    nav_depth_min_mm: float = 2.0
    nav_depth_max_mm: float = 10.0
    nav_min_separation_mm: float = 4.0
    dwell_required_ms: int = 2000

    # tremor control (peripheral shaving)
    tremor_colatitude_deg: float = 60.0
    tremor_arc_deg: float = 180.0
    tremor_path_height_mm: float = 1.5   # path floats this far above the retina
    tremor_target_radius_mm: float = 1.2
    path_speed_mm_s: float = 10.0

    # peeling control (membrane peeling)
    peel_rings: int = 4
    peel_sectors: int = 12
    peel_disc_radius_mm: float = 3.0
    grab_radius_mm: float = 1.0
    pull_threshold_mm: float = 0.8

    # laser precision (endolaser)
    laser_break_count: int = 5
    laser_colatitude_deg: float = 60.0
    laser_r_in_mm: float = 1.0
    laser_r_out_mm: float = 2.2
    laser_rows: int = 2
    laser_sectors: int = 24
    repeat_interval_ms: int = 200
    spot_r0_mm: float = 0.3
    spot_growth_per_mm: float = 0.15
    treat_threshold: float = 1.0

    def validate(self) -> "TaskConfig":
        if self.retina_radius_mm <= 0:
            raise InvalidConfig("retina_radius_mm must be positive")
        if self.lateral_scale <= 0 or self.depth_scale <= 0:
            raise InvalidConfig("motion scales must be positive")
        if not (self.touch_release_mm >= self.touch_engage_mm >= 0):
            raise InvalidConfig("touch thresholds must satisfy release >= engage >= 0")
        if self.nav_sphere_count < 1 or self.nav_sphere_radius_mm <= 0:
            raise InvalidConfig("bad navigation sphere parameters")
        if not (0 < self.nav_depth_min_mm < self.nav_depth_max_mm):
            raise InvalidConfig("bad navigation depth range")
        if self.nav_depth_max_mm + self.nav_sphere_radius_mm >= self.retina_radius_mm:
            raise InvalidConfig("navigation spheres would intersect the retina")
        if self.dwell_required_ms <= 0 or self.repeat_interval_ms <= 0:
            raise InvalidConfig("timing constants must be positive")
        if self.tremor_target_radius_mm <= 0 or self.path_speed_mm_s <= 0:
            raise InvalidConfig("bad tremor parameters")
        if not (0 < math.radians(self.tremor_colatitude_deg) < math.pi):
            raise InvalidConfig("tremor path colatitude must be in (0, 180) deg")
        if not (0 <= self.tremor_path_height_mm < self.retina_radius_mm):
            raise InvalidConfig("tremor path height must sit inside the globe")
        if self.peel_rings < 1 or self.peel_sectors < 3 or self.peel_disc_radius_mm <= 0:
            raise InvalidConfig("bad peeling grid")
        if self.grab_radius_mm <= 0 or self.pull_threshold_mm <= 0:
            raise InvalidConfig("bad peeling interaction thresholds")
        if not (self.laser_r_out_mm > self.laser_r_in_mm > 0):
            raise InvalidConfig("need laser_r_out_mm > laser_r_in_mm > 0")
        if self.laser_rows < 1 or self.laser_sectors < 4 or self.laser_break_count < 1:
            raise InvalidConfig("bad laser coverage grid")
        if self.spot_r0_mm <= 0 or self.spot_growth_per_mm < 0:
            raise InvalidConfig("bad laser spot model")
        if self.treat_threshold <= 0:
            raise InvalidConfig("treat_threshold must be positive")
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @staticmethod
    def from_dict(d: dict) -> "TaskConfig":
        known = {f.name for f in dataclasses.fields(TaskConfig)}
        unknown = set(d) - known
        if unknown:
            raise InvalidConfig(f"unknown config keys: {sorted(unknown)}")
        return TaskConfig(**d).validate()


def load_config(path: str | None = None) -> TaskConfig:
    """Load config from an explicit path, $RETINAVR_CONFIG, or defaults."""
    path = path or os.environ.get("RETINAVR_CONFIG")
    if not path:
        return TaskConfig()
    with open(path, "r", encoding="utf-8") as fh:
        return TaskConfig.from_dict(json.load(fh))
