"""Geometric eye model and controller-to-instrument kinematics.

Conventions used throughout the package:

* Lengths are millimeters, angles are radians unless a name says ``_deg``.
* Vectors are plain ``(x, y, z)`` tuples of floats; quaternions are
  ``(w, x, y, z)`` tuples with unit norm.  Tuple math keeps the per-tick
  engine loop cheap and trivially deterministic.
* The *fundus frame* is the frame in which the eye model is at rest
  (eye rotation removed).  All task geometry lives in this frame, and
  ``map_controller_pose`` returns instrument state expressed in it.
* Instruments pivot through a scleral trocar.  The tip is constrained to
  the line through the trocar, so the instrument axis is the direction
  from the trocar to the tip, not the controller orientation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

from .errors import DegenerateRig, NonFiniteInput, OriginOutsideEye, PointOffSurface

Vec3 = tuple[float, float, float]
Quat = tuple[float, float, float, float]

IDENTITY_QUAT: Quat = (1.0, 0.0, 0.0, 0.0)
ORIGIN: Vec3 = (0.0, 0.0, 0.0)


# ---------------------------------------------------------------------------
# vector / quaternion primitives
# ---------------------------------------------------------------------------

def v_add(a: Vec3, b: Vec3) -> Vec3:
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


def v_sub(a: Vec3, b: Vec3) -> Vec3:
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def v_scale(a: Vec3, s: float) -> Vec3:
    return (a[0] * s, a[1] * s, a[2] * s)


def v_dot(a: Vec3, b: Vec3) -> float:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def v_cross(a: Vec3, b: Vec3) -> Vec3:
    return (
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )


def v_norm(a: Vec3) -> float:
    return math.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])


def v_dist(a: Vec3, b: Vec3) -> float:
    dx, dy, dz = a[0] - b[0], a[1] - b[1], a[2] - b[2]
    return math.sqrt(dx * dx + dy * dy + dz * dz)


def v_unit(a: Vec3) -> Vec3:
    n = v_norm(a)
    if n < 1e-12:
        raise ValueError("cannot normalize near-zero vector")
    return (a[0] / n, a[1] / n, a[2] / n)


def v_finite(a: Vec3) -> bool:
    return math.isfinite(a[0]) and math.isfinite(a[1]) and math.isfinite(a[2])


def q_mul(a: Quat, b: Quat) -> Quat:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return (
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )


def q_conj(q: Quat) -> Quat:
    return (q[0], -q[1], -q[2], -q[3])


def q_norm(q: Quat) -> float:
    return math.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3])


def q_normalize(q: Quat) -> Quat:
    n = q_norm(q)
    if n < 1e-12:
        raise ValueError("cannot normalize near-zero quaternion")
    return (q[0] / n, q[1] / n, q[2] / n, q[3] / n)


def q_from_axis_angle(axis: Vec3, angle_rad: float) -> Quat:
    ux, uy, uz = v_unit(axis)
    h = 0.5 * angle_rad
    s = math.sin(h)
    return (math.cos(h), ux * s, uy * s, uz * s)


def q_rotate(q: Quat, v: Vec3) -> Vec3:
    # v' = v + 2 w (u x v) + 2 u x (u x v), u = quaternion vector part
    w, ux, uy, uz = q
    tx = 2.0 * (uy * v[2] - uz * v[1])
    ty = 2.0 * (uz * v[0] - ux * v[2])
    tz = 2.0 * (ux * v[1] - uy * v[0])
    return (
        v[0] + w * tx + (uy * tz - uz * ty),
        v[1] + w * ty + (uz * tx - ux * tz),
        v[2] + w * tz + (ux * ty - uy * tx),
    )


def rot_x(angle_deg: float, v: Vec3) -> Vec3:
    """Rotate a vector about the +x axis."""
    a = math.radians(angle_deg)
    c, s = math.cos(a), math.sin(a)
    return (v[0], c * v[1] - s * v[2], s * v[1] + c * v[2])


@dataclass(frozen=True, slots=True)
class Pose:
    """Rigid pose: position in mm plus unit orientation quaternion."""

    position: Vec3 = ORIGIN
    orientation: Quat = IDENTITY_QUAT

    def is_finite(self) -> bool:
        p, q = self.position, self.orientation
        return (math.isfinite(p[0]) and math.isfinite(p[1]) and math.isfinite(p[2])
                and math.isfinite(q[0]) and math.isfinite(q[1])
                and math.isfinite(q[2]) and math.isfinite(q[3]))


IDENTITY_POSE = Pose()


# ---------------------------------------------------------------------------
# eye model and surface helpers
# ---------------------------------------------------------------------------

@dataclass(slots=True)
class EyeModel:
    """Spherical globe with the fundus on its inner surface.

    ``posterior_pole_dir`` points from the center toward the macula.
    ``eye_rotation`` is the globe rotation imposed by the right controller
    joystick; identity means the fundus frame and world frame coincide.
    """

    center: Vec3 = ORIGIN
    retina_radius: float = 12.0
    posterior_pole_dir: Vec3 = (0.0, 0.0, -1.0)
    eye_rotation: Quat = IDENTITY_QUAT

    def __post_init__(self):
        if self.retina_radius <= 0:
            raise ValueError("retina_radius must be positive")
        self.posterior_pole_dir = v_unit(self.posterior_pole_dir)

    def pole_basis(self) -> tuple[Vec3, Vec3, Vec3]:
        """Right-handed basis (e1, e2, e3) with e3 the posterior pole direction."""
        e3 = self.posterior_pole_dir
        aux = (1.0, 0.0, 0.0) if abs(e3[0]) < 0.9 else (0.0, 1.0, 0.0)
        e1 = v_unit(v_cross(aux, e3))
        e2 = v_cross(e3, e1)
        return e1, e2, e3

    def surface_point(self, colatitude_rad: float, azimuth_rad: float) -> Vec3:
        """Point on the retina at polar angle from the posterior pole."""
        e1, e2, e3 = self.pole_basis()
        st, ct = math.sin(colatitude_rad), math.cos(colatitude_rad)
        ca, sa = math.cos(azimuth_rad), math.sin(azimuth_rad)
        d = (
            st * (ca * e1[0] + sa * e2[0]) + ct * e3[0],
            st * (ca * e1[1] + sa * e2[1]) + ct * e3[1],
            st * (ca * e1[2] + sa * e2[2]) + ct * e3[2],
        )
        return v_add(self.center, v_scale(d, self.retina_radius))

    def surface_normal(self, p: Vec3) -> Vec3:
        """Outward unit normal (center -> surface direction) at a surface point."""
        return v_unit(v_sub(p, self.center))

    def tangent_basis(self, p: Vec3) -> tuple[Vec3, Vec3]:
        """Deterministic orthonormal tangent basis at a surface point."""
        n = self.surface_normal(p)
        aux = (1.0, 0.0, 0.0) if abs(n[0]) < 0.9 else (0.0, 1.0, 0.0)
        t1 = v_unit(v_cross(aux, n))
        t2 = v_cross(n, t1)
        return t1, t2

    def clearance(self, tip: Vec3) -> float:
        """Distance from tip to the retinal surface; negative outside the globe."""
        return self.retina_radius - v_dist(tip, self.center)


def sphere_contact(tip: Vec3, center: Vec3, radius: float) -> bool:
    """Closed-ball contact test: the boundary counts as contact."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    return v_dist(tip, center) <= radius


@dataclass(frozen=True, slots=True)
class RaySurfaceHit:
    point: Vec3
    distance: float


def retina_raycast(origin: Vec3, direction: Vec3, eye: EyeModel) -> RaySurfaceHit | None:
    """Forward intersection of a ray from inside the globe with the retina.

    Returns None only when the origin sits on the surface itself and the ray
    points outward (no strictly-forward hit).  Raises OriginOutsideEye when
    the origin lies beyond the retina sphere.
    """
    oc = v_sub(origin, eye.center)
    oc2 = v_dot(oc, oc)
    r2 = eye.retina_radius * eye.retina_radius
    if oc2 > r2 * (1.0 + 1e-12) + 1e-12:
        raise OriginOutsideEye(f"ray origin {origin} outside retina sphere")
    b = v_dot(direction, oc)
    disc = b * b - (oc2 - r2)
    t = -b + math.sqrt(max(disc, 0.0))
    if t <= 1e-9:
        return None
    hit = v_add(origin, v_scale(direction, t))
    return RaySurfaceHit(point=hit, distance=t)


def geodesic_distance_mm(a: Vec3, b: Vec3, eye: EyeModel) -> float:
    """Great-circle distance between two points on the retinal surface."""
    ra = v_sub(a, eye.center)
    rb = v_sub(b, eye.center)
    r = eye.retina_radius
    if abs(v_norm(ra) - r) > 1e-6 or abs(v_norm(rb) - r) > 1e-6:
        raise PointOffSurface("geodesic endpoints must lie on the retinal surface")
    angle = math.atan2(v_norm(v_cross(ra, rb)), v_dot(ra, rb))
    return r * angle


def arc_angle(na: Vec3, nb: Vec3) -> float:
    """Angle between two unit normals; cheap core of the geodesic distance."""
    return math.atan2(v_norm(v_cross(na, nb)), v_dot(na, nb))


# ---------------------------------------------------------------------------
# trocar rig and calibration
# ---------------------------------------------------------------------------

class Hand(str, Enum):
    LEFT = "left"
    RIGHT = "right"


class InstrumentKind(str, Enum):
    LIGHT_PIPE = "light_pipe"
    VITRECTOR = "vitrector"
    LASER_PROBE = "laser_probe"


@dataclass(slots=True)
class TrocarRig:
    """Scleral entry points plus the fulcrum motion mapping parameters.

    Lateral controller displacement (perpendicular to the trocar axis) is
    inverted and scaled by ``lateral_scale``; displacement along the trocar
    axis is scaled by ``depth_scale``.  ``rest_depth_mm`` is the insertion
    depth of the tip when the calibrated displacement is zero; the default
    (one retina radius) rests both tips at the eye center.
    """

    trocar_left: Vec3
    trocar_right: Vec3
    lateral_scale: float = 0.5
    depth_scale: float = 1.0
    ergonomic_rotation_deg: float = 45.0
    rest_depth_mm: float = 12.0
    _cos_erg: float = field(init=False, repr=False, compare=False, default=1.0)
    _sin_erg: float = field(init=False, repr=False, compare=False, default=0.0)

    def __post_init__(self):
        if self.lateral_scale <= 0 or self.depth_scale <= 0:
            raise DegenerateRig("motion scales must be positive")
        if v_dist(self.trocar_left, self.trocar_right) < 1e-9:
            raise DegenerateRig("trocars coincide")
        a = math.radians(self.ergonomic_rotation_deg)
        self._cos_erg = math.cos(a)
        self._sin_erg = math.sin(a)

    def trocar(self, hand: Hand) -> Vec3:
        return self.trocar_left if hand == Hand.LEFT else self.trocar_right

    def validate_on_eye(self, eye: EyeModel) -> None:
        for t in (self.trocar_left, self.trocar_right):
            if abs(v_dist(t, eye.center) - eye.retina_radius) > 1e-6:
                raise DegenerateRig(f"trocar {t} not on the retina sphere")


def default_rig(eye: EyeModel, lateral_scale: float = 0.5, depth_scale: float = 1.0) -> TrocarRig:
    """Standard two-port setup: trocars anterior to the equator, 90 deg apart."""
    colat = math.radians(135.0)
    return TrocarRig(
        trocar_left=eye.surface_point(colat, math.radians(135.0)),
        trocar_right=eye.surface_point(colat, math.radians(45.0)),
        lateral_scale=lateral_scale,
        depth_scale=depth_scale,
        rest_depth_mm=eye.retina_radius,
    )


@dataclass(frozen=True, slots=True)
class CalibrationOffset:
    """Per-hand rigid offsets that re-zero the controller rest pose."""

    pose_offset_left: Pose = IDENTITY_POSE
    pose_offset_right: Pose = IDENTITY_POSE

    @staticmethod
    def identity() -> "CalibrationOffset":
        return CalibrationOffset()

    @staticmethod
    def from_rest_poses(left_rest: Pose, right_rest: Pose) -> "CalibrationOffset":
        """Offsets such that applying them to the rest poses yields identity."""
        def offset(rest: Pose) -> Pose:
            q = q_conj(q_normalize(rest.orientation))
            t = v_scale(q_rotate(q, rest.position), -1.0)
            return Pose(position=t, orientation=q)

        return CalibrationOffset(offset(left_rest), offset(right_rest))

    def _offset(self, hand: Hand) -> Pose:
        return self.pose_offset_left if hand == Hand.LEFT else self.pose_offset_right

    def apply(self, hand: Hand, pose: Pose) -> Pose:
        off = self._offset(hand)
        if off is IDENTITY_POSE:
            return pose
        return Pose(
            position=v_add(q_rotate(off.orientation, pose.position), off.position),
            orientation=q_mul(off.orientation, pose.orientation),
        )

    def unapply(self, hand: Hand, pose: Pose) -> Pose:
        off = self._offset(hand)
        if off is IDENTITY_POSE:
            return pose
        qi = q_conj(off.orientation)
        return Pose(
            position=q_rotate(qi, v_sub(pose.position, off.position)),
            orientation=q_mul(qi, pose.orientation),
        )


@dataclass(frozen=True, slots=True)
class InstrumentState:
    """Mapped instrument: tip and shaft direction in the fundus frame."""

    kind: InstrumentKind
    tip: Vec3
    axis: Vec3
    inside_eye: bool


_HAND_KIND = {Hand.LEFT: InstrumentKind.LIGHT_PIPE, Hand.RIGHT: InstrumentKind.VITRECTOR}


def map_controller_pose(
    raw: Pose,
    rig: TrocarRig,
    cal: CalibrationOffset,
    hand: Hand,
    eye: EyeModel,
    kind: InstrumentKind | None = None,
) -> InstrumentState:
    """Map a raw controller pose to instrument state in the fundus frame.

    Pipeline: calibration offset, fixed ergonomic rotation about x, fulcrum
    kinematics about the trocar (lateral inversion + scaling, depth scaling),
    clamp of the tip inside the globe, then removal of the globe rotation.
    """
    if not raw.is_finite():
        raise NonFiniteInput("controller pose contains non-finite values")
    trocar = rig.trocar(hand)
    to_center = v_sub(eye.center, trocar)
    u = v_unit(to_center)

    p = cal.apply(hand, raw).position
    delta = (p[0], rig._cos_erg * p[1] - rig._sin_erg * p[2],
             rig._sin_erg * p[1] + rig._cos_erg * p[2])
    axial = v_dot(delta, u)
    lateral = v_sub(delta, v_scale(u, axial))

    rest_tip = v_add(trocar, v_scale(u, rig.rest_depth_mm))
    tip_raw = v_add(
        rest_tip,
        v_sub(v_scale(u, rig.depth_scale * axial), v_scale(lateral, rig.lateral_scale)),
    )

    shaft = v_sub(tip_raw, trocar)
    length = v_norm(shaft)
    axis = v_scale(shaft, 1.0 / length) if length > 1e-12 else u
    # Chord length from the trocar along the shaft; the tip may not pass
    # through the far sclera, nor retract behind the entry point.
    exit_len = 2.0 * v_dot(to_center, axis)
    length = min(length, max(exit_len, 0.0))
    tip_world = v_add(trocar, v_scale(axis, length))

    if eye.eye_rotation == IDENTITY_QUAT:
        tip, axis_fundus = tip_world, axis
    else:
        q_inv = q_conj(eye.eye_rotation)
        tip = v_add(eye.center, q_rotate(q_inv, v_sub(tip_world, eye.center)))
        axis_fundus = q_rotate(q_inv, axis)
    inside = v_dist(tip, eye.center) <= eye.retina_radius + 1e-9
    return InstrumentState(
        kind=kind or _HAND_KIND[hand], tip=tip, axis=axis_fundus, inside_eye=inside
    )


def controller_pose_for_tip(
    tip_fundus: Vec3,
    rig: TrocarRig,
    cal: CalibrationOffset,
    hand: Hand,
    eye: EyeModel,
) -> Pose:
    """Inverse of ``map_controller_pose`` for tips strictly inside the globe.

    Used by trajectory generators to plan in tip space.  The clamp never
    engages for interior tips, so forward(inverse(tip)) == tip.
    """
    if not v_finite(tip_fundus):
        raise NonFiniteInput("target tip contains non-finite values")
    trocar = rig.trocar(hand)
    u = v_unit(v_sub(eye.center, trocar))
    tip_world = v_add(eye.center, q_rotate(eye.eye_rotation, v_sub(tip_fundus, eye.center)))

    rest_tip = v_add(trocar, v_scale(u, rig.rest_depth_mm))
    d = v_sub(tip_world, rest_tip)
    axial = v_dot(d, u)
    lateral = v_sub(d, v_scale(u, axial))
    delta = v_sub(
        v_scale(u, axial / rig.depth_scale),
        v_scale(lateral, 1.0 / rig.lateral_scale),
    )
    raw_position = rot_x(-rig.ergonomic_rotation_deg, delta)
    return cal.unapply(hand, Pose(position=raw_position))


# ---------------------------------------------------------------------------
# retinal touch episodes
# ---------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class TouchEpisodeTracker:
    """Hysteresis counter for iatrogenic retinal touch episodes.

    Contact engages when the tip clearance drops to ``engage_threshold_mm``
    and releases only once clearance recovers to ``release_threshold_mm``,
    so one brush against the retina counts as one episode regardless of the
    input frame rate.
    """

    engage_threshold_mm: float = 0.1
    release_threshold_mm: float = 0.5
    in_contact: bool = False
    touch_count: int = 0

    def __post_init__(self):
        if not (self.release_threshold_mm >= self.engage_threshold_mm >= 0.0):
            raise ValueError("need release_threshold >= engage_threshold >= 0")


def update_touch(tracker: TouchEpisodeTracker, tip: Vec3, eye: EyeModel) -> TouchEpisodeTracker:
    """Advance the touch tracker by one frame; a new episode increments the count once."""
    clearance = eye.clearance(tip)
    if not tracker.in_contact:
        if clearance <= tracker.engage_threshold_mm:
            return replace(tracker, in_contact=True, touch_count=tracker.touch_count + 1)
        return tracker
    if clearance >= tracker.release_threshold_mm:
        return replace(tracker, in_contact=False)
    return tracker
