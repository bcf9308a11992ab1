"""The four training-task state machines and their per-tick evolution.

Each task advances through ``tick(state, input, rig, eye)``: instruments are
mapped through the fulcrum kinematics, the retinal-touch tracker is updated
from the working-instrument tip, and the task-specific rule runs.  State is
single-owner and mutated in place; identical (seed, input sequence) pairs
produce bit-identical event streams and metrics.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass, field
from enum import Enum

from . import events as ev
from .config import TaskConfig
from .errors import (
    InvalidConfig,
    NonFiniteInput,
    NonMonotonicTimestamp,
    SeedPlacementFailure,
    TaskAlreadyComplete,
    TaskNotComplete,
)
from .events import TaskEvent
from .geometry import (
    CalibrationOffset,
    EyeModel,
    Hand,
    InstrumentKind,
    InstrumentState,
    Pose,
    TouchEpisodeTracker,
    TrocarRig,
    Vec3,
    arc_angle,
    map_controller_pose,
    q_from_axis_angle,
    q_mul,
    q_normalize,
    retina_raycast,
    update_touch,
    v_add,
    v_dist,
    v_dot,
    v_scale,
    v_sub,
)


_IDENTITY_CAL = CalibrationOffset.identity()


class TaskKind(str, Enum):
    NAVIGATION = "navigation"
    TREMOR = "tremor"
    PEELING = "peeling"
    LASER = "laser"


@dataclass(frozen=True)
class TickInput:
    """One controller frame.  ``t_ms`` must be strictly increasing."""

    t_ms: int
    left_pose: Pose
    right_pose: Pose
    grip_right: bool = False
    button_x_left: bool = False
    joystick_right: tuple[float, float] = (0.0, 0.0)


# ---------------------------------------------------------------------------
# per-task state
# ---------------------------------------------------------------------------

@dataclass
class TargetSphere:
    center: Vec3
    radius: float
    collected: bool = False


@dataclass
class NavigationState:
    spheres: list[TargetSphere]
    active_contact: int | None = None
    dwell_ms: float = 0.0
    exits: int = 0


@dataclass
class TremorPath:
    """Circular arc at fixed colatitude from the posterior pole.

    The arc floats slightly inside the retina (shaving happens near the
    surface, not on it), on a concentric sphere of ``sphere_radius``.
    """

    e1: Vec3
    e2: Vec3
    e3: Vec3
    center: Vec3
    sphere_radius: float   # radius of the sphere carrying the path (inside the retina)
    colatitude_rad: float
    arc_rad: float

    @property
    def ring_radius(self) -> float:
        return self.sphere_radius * math.sin(self.colatitude_rad)

    @property
    def length_mm(self) -> float:
        return self.ring_radius * self.arc_rad

    def point_at(self, s_mm: float) -> Vec3:
        phi = s_mm / self.ring_radius
        st, ct = math.sin(self.colatitude_rad), math.cos(self.colatitude_rad)
        ca, sa = math.cos(phi), math.sin(phi)
        d = (
            st * (ca * self.e1[0] + sa * self.e2[0]) + ct * self.e3[0],
            st * (ca * self.e1[1] + sa * self.e2[1]) + ct * self.e3[1],
            st * (ca * self.e1[2] + sa * self.e2[2]) + ct * self.e3[2],
        )
        return v_add(self.center, v_scale(d, self.sphere_radius))

    def deviation_mm(self, tip: Vec3) -> float:
        """Distance from tip to the nearest point of the ideal curve."""
        w = v_sub(tip, self.center)
        px, py = v_dot(w, self.e1), v_dot(w, self.e2)
        phi = math.atan2(py, px) if (px, py) != (0.0, 0.0) else 0.0
        if phi < 0.0:
            phi += 2.0 * math.pi
        phi = min(phi, self.arc_rad)  # azimuths beyond the arc clamp to its end
        return v_dist(tip, self.point_at(phi * self.ring_radius))


@dataclass
class TremorState:
    path: TremorPath
    target_radius: float
    s_mm: float = 0.0
    tracking_started: bool = False
    in_contact: bool = False
    exits: int = 0
    contact_ms: float = 0.0
    dev_weighted_sum: float = 0.0
    dev_weight_ms: float = 0.0
    max_dev_mm: float = 0.0

    @property
    def sphere_center(self) -> Vec3:
        return self.path.point_at(self.s_mm)

    @property
    def mean_dev_mm(self) -> float:
        return self.dev_weighted_sum / self.dev_weight_ms if self.dev_weight_ms > 0 else 0.0


@dataclass
class MembranePatch:
    center: Vec3
    ring: int
    sector: int
    attached: bool = True


@dataclass
class PeelingState:
    patches: list[MembranePatch]
    neighbors: list[list[int]]
    outer_ring: int
    grasped_patch: int | None = None
    grasp_anchor: Vec3 | None = None
    pull_crossings: int = 0
    grasps: int = 0

    def detached_count(self) -> int:
        return sum(1 for p in self.patches if not p.attached)

    def eligible(self, idx: int) -> bool:
        """A patch can detach from the outer ring or next to a detached patch."""
        p = self.patches[idx]
        if not p.attached:
            return False
        if p.ring == self.outer_ring:
            return True
        return any(not self.patches[j].attached for j in self.neighbors[idx])


@dataclass
class CoverageCell:
    center: Vec3
    normal: Vec3
    accumulated: float = 0.0


@dataclass
class RetinalBreak:
    center: Vec3
    normal: Vec3
    t1: Vec3
    t2: Vec3
    r_in: float
    r_out: float
    cells: list[CoverageCell]
    treated: bool = False


@dataclass
class LaserSpot:
    position: Vec3
    radius_mm: float
    intensity: float
    t_ms: int
    break_index: int
    geodesic_mm: float
    local_uv: tuple[float, float] | None


@dataclass
class LaserState:
    breaks: list[RetinalBreak]
    spots: list[LaserSpot] = field(default_factory=list)
    next_fire_t: int | None = None


@dataclass
class TaskState:
    """Full state of one running task, including shared bookkeeping."""

    kind: TaskKind
    config: TaskConfig
    seed: int
    nav: NavigationState | None = None
    tremor: TremorState | None = None
    peel: PeelingState | None = None
    laser: LaserState | None = None
    touch: TouchEpisodeTracker = field(default_factory=TouchEpisodeTracker)
    elapsed_ms: int = 0
    completed: bool = False
    magnified: bool = False
    t0_ms: int | None = None
    last_t_ms: int | None = None
    prev_grip: bool = False
    prev_button_x: bool = False


# ---------------------------------------------------------------------------
# deterministic layout generation
# ---------------------------------------------------------------------------

_LAYOUT_RESTARTS = 200
_PLACE_TRIES = 400


def _nav_layout(config: TaskConfig, eye: EyeModel, rng: random.Random) -> list[TargetSphere]:
    n = config.nav_sphere_count
    lo, hi = config.nav_depth_min_mm, config.nav_depth_max_mm
    bin_w = (hi - lo) / n
    for _ in range(_LAYOUT_RESTARTS):
        centers: list[Vec3] = []
        ok = True
        for i in range(n):
            # depth stratified per sphere index so the set spans the range
            placed = False
            for _ in range(_PLACE_TRIES):
                depth = lo + (i + rng.random()) * bin_w
                cos_t = 1.0 - 2.0 * rng.random()
                sin_t = math.sqrt(max(0.0, 1.0 - cos_t * cos_t))
                phi = 2.0 * math.pi * rng.random()
                d = (sin_t * math.cos(phi), sin_t * math.sin(phi), cos_t)
                c = v_add(eye.center, v_scale(d, depth))
                if all(v_dist(c, o) >= config.nav_min_separation_mm for o in centers):
                    centers.append(c)
                    placed = True
                    break
            if not placed:
                ok = False
                break
        if ok:
            return [TargetSphere(center=c, radius=config.nav_sphere_radius_mm) for c in centers]
    raise SeedPlacementFailure("could not place navigation spheres with required separation")


def _tremor_layout(config: TaskConfig, eye: EyeModel) -> TremorState:
    e1, e2, e3 = eye.pole_basis()
    path = TremorPath(
        e1=e1, e2=e2, e3=e3,
        center=eye.center,
        sphere_radius=eye.retina_radius - config.tremor_path_height_mm,
        colatitude_rad=math.radians(config.tremor_colatitude_deg),
        arc_rad=math.radians(config.tremor_arc_deg),
    )
    return TremorState(path=path, target_radius=config.tremor_target_radius_mm)


def _peel_layout(config: TaskConfig, eye: EyeModel) -> PeelingState:
    rings, sectors = config.peel_rings, config.peel_sectors
    patches: list[MembranePatch] = []
    for j in range(rings):
        rho = (j + 0.5) * config.peel_disc_radius_mm / rings
        colat = rho / eye.retina_radius
        for k in range(sectors):
            c = eye.surface_point(colat, 2.0 * math.pi * k / sectors)
            patches.append(MembranePatch(center=c, ring=j, sector=k))
    neighbors: list[list[int]] = []
    for j in range(rings):
        for k in range(sectors):
            adj = [j * sectors + (k - 1) % sectors, j * sectors + (k + 1) % sectors]
            if j > 0:
                adj.append((j - 1) * sectors + k)
            if j < rings - 1:
                adj.append((j + 1) * sectors + k)
            neighbors.append(sorted(adj))
    return PeelingState(patches=patches, neighbors=neighbors, outer_ring=rings - 1)


def _laser_layout(config: TaskConfig, eye: EyeModel) -> LaserState:
    breaks: list[RetinalBreak] = []
    colat = math.radians(config.laser_colatitude_deg)
    row_w = (config.laser_r_out_mm - config.laser_r_in_mm) / config.laser_rows
    for b in range(config.laser_break_count):
        center = eye.surface_point(colat, 2.0 * math.pi * b / config.laser_break_count)
        normal = eye.surface_normal(center)
        t1, t2 = eye.tangent_basis(center)
        cells: list[CoverageCell] = []
        for i in range(config.laser_rows):
            rho = config.laser_r_in_mm + (i + 0.5) * row_w
            beta = rho / eye.retina_radius
            sb, cb = math.sin(beta), math.cos(beta)
            for k in range(config.laser_sectors):
                psi = 2.0 * math.pi * (k + 0.5) / config.laser_sectors
                d = (
                    cb * normal[0] + sb * (math.cos(psi) * t1[0] + math.sin(psi) * t2[0]),
                    cb * normal[1] + sb * (math.cos(psi) * t1[1] + math.sin(psi) * t2[1]),
                    cb * normal[2] + sb * (math.cos(psi) * t1[2] + math.sin(psi) * t2[2]),
                )
                cells.append(CoverageCell(
                    center=v_add(eye.center, v_scale(d, eye.retina_radius)),
                    normal=d,
                ))
        breaks.append(RetinalBreak(
            center=center, normal=normal, t1=t1, t2=t2,
            r_in=config.laser_r_in_mm, r_out=config.laser_r_out_mm, cells=cells,
        ))
    return LaserState(breaks=breaks)


def make_eye(config: TaskConfig) -> EyeModel:
    return EyeModel(retina_radius=config.retina_radius_mm)


def make_rig(config: TaskConfig, eye: EyeModel) -> TrocarRig:
    rig = TrocarRig(
        trocar_left=eye.surface_point(math.radians(135.0), math.radians(135.0)),
        trocar_right=eye.surface_point(math.radians(135.0), math.radians(45.0)),
        lateral_scale=config.lateral_scale,
        depth_scale=config.depth_scale,
        ergonomic_rotation_deg=config.ergonomic_rotation_deg,
        rest_depth_mm=eye.retina_radius,
    )
    rig.validate_on_eye(eye)
    return rig


def init_task(kind: TaskKind, config: TaskConfig, seed: int) -> TaskState:
    """Build the deterministic task layout for a seed."""
    config.validate()
    if not isinstance(seed, int):
        raise InvalidConfig("seed must be an integer")
    eye = make_eye(config)
    rng = random.Random(seed)
    state = TaskState(
        kind=kind, config=config, seed=seed,
        touch=TouchEpisodeTracker(
            engage_threshold_mm=config.touch_engage_mm,
            release_threshold_mm=config.touch_release_mm,
        ),
    )
    if kind == TaskKind.NAVIGATION:
        state.nav = NavigationState(spheres=_nav_layout(config, eye, rng))
    elif kind == TaskKind.TREMOR:
        state.tremor = _tremor_layout(config, eye)
    elif kind == TaskKind.PEELING:
        state.peel = _peel_layout(config, eye)
    elif kind == TaskKind.LASER:
        state.laser = _laser_layout(config, eye)
    else:
        raise InvalidConfig(f"unknown task kind {kind!r}")
    return state


def layout_dict(state: TaskState) -> dict:
    """JSON-safe description of the generated layout (for clients and hashing)."""
    if state.kind == TaskKind.NAVIGATION:
        return {
            "kind": state.kind.value,
            "spheres": [
                {"center": list(s.center), "radius": s.radius} for s in state.nav.spheres
            ],
        }
    if state.kind == TaskKind.TREMOR:
        p = state.tremor.path
        return {
            "kind": state.kind.value,
            "colatitude_rad": p.colatitude_rad,
            "arc_rad": p.arc_rad,
            "length_mm": p.length_mm,
            "target_radius": state.tremor.target_radius,
            "polyline": [list(p.point_at(p.length_mm * i / 64)) for i in range(65)],
        }
    if state.kind == TaskKind.PEELING:
        return {
            "kind": state.kind.value,
            "patches": [
                {"center": list(p.center), "ring": p.ring, "sector": p.sector}
                for p in state.peel.patches
            ],
        }
    return {
        "kind": state.kind.value,
        "breaks": [
            {
                "center": list(b.center),
                "r_in": b.r_in,
                "r_out": b.r_out,
                "cells": [list(c.center) for c in b.cells],
            }
            for b in state.laser.breaks
        ],
    }


def layout_hash(state: TaskState) -> str:
    blob = json.dumps(layout_dict(state), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# per-task rules
# ---------------------------------------------------------------------------

def navigation_rule(state: TaskState, tip: Vec3, dt_ms: float, t_ms: int,
                    out: list[TaskEvent]) -> None:
    nav = state.nav
    contact_idx: int | None = None
    best = math.inf
    for i, s in enumerate(nav.spheres):
        if s.collected:
            continue
        d = v_dist(tip, s.center)
        if d <= s.radius and d < best:
            best, contact_idx = d, i

    if nav.active_contact is not None:
        if contact_idx == nav.active_contact:
            nav.dwell_ms += dt_ms
            if nav.dwell_ms >= state.config.dwell_required_ms:
                nav.spheres[nav.active_contact].collected = True
                out.append(TaskEvent(t_ms, ev.SPHERE_COLLECTED,
                                     {"sphere": nav.active_contact}))
                nav.active_contact = None
                nav.dwell_ms = 0.0
        else:
            # contact lost before the dwell completed: full reset
            nav.exits += 1
            out.append(TaskEvent(t_ms, ev.SPHERE_EXITED, {"sphere": nav.active_contact}))
            nav.active_contact = contact_idx
            nav.dwell_ms = 0.0
    elif contact_idx is not None:
        nav.active_contact = contact_idx
        nav.dwell_ms = 0.0

    if all(s.collected for s in nav.spheres):
        state.completed = True


def tremor_rule(state: TaskState, tip: Vec3, dt_ms: float, t_ms: int,
                out: list[TaskEvent]) -> None:
    tr = state.tremor
    contact = v_dist(tip, tr.sphere_center) <= tr.target_radius

    if tr.tracking_started and dt_ms > 0:
        dev = tr.path.deviation_mm(tip)
        tr.dev_weighted_sum += dev * dt_ms
        tr.dev_weight_ms += dt_ms
        if dev > tr.max_dev_mm:
            tr.max_dev_mm = dev

    if contact:
        if dt_ms > 0:
            tr.s_mm = min(tr.path.length_mm, tr.s_mm + state.config.path_speed_mm_s * dt_ms / 1000.0)
            tr.contact_ms += dt_ms
        tr.tracking_started = True
        tr.in_contact = True
    else:
        if tr.in_contact:
            tr.exits += 1
            out.append(TaskEvent(t_ms, ev.SPHERE_EXITED, {"s_mm": tr.s_mm}))
        tr.in_contact = False

    if tr.s_mm >= tr.path.length_mm:
        state.completed = True


def peeling_rule(state: TaskState, tip: Vec3, grip: bool, grip_rising: bool,
                 t_ms: int, out: list[TaskEvent]) -> None:
    pl = state.peel
    cfg = state.config

    if grip_rising:
        nearest, best = None, math.inf
        for i, p in enumerate(pl.patches):
            if not p.attached:
                continue
            d = v_dist(tip, p.center)
            if d <= cfg.grab_radius_mm and d < best:
                nearest, best = i, d
        if nearest is not None:
            pl.grasped_patch = nearest
            pl.grasp_anchor = tip
            pl.pull_crossings = 0
            pl.grasps += 1
        # a rising edge away from any attached patch is a no-op, not a grasp

    if grip and pl.grasped_patch is not None:
        owed = int(v_dist(tip, pl.grasp_anchor) / cfg.pull_threshold_mm)
        while pl.pull_crossings < owed:
            pl.pull_crossings += 1
            target = pl.grasped_patch if pl.patches[pl.grasped_patch].attached else None
            if target is not None:
                if not pl.eligible(target):
                    continue  # pulling an interior patch does nothing
            else:
                target = _nearest_frontier_patch(pl, tip)
                if target is None:
                    break
            pl.patches[target].attached = False
            out.append(TaskEvent(t_ms, ev.PATCH_DETACHED, {"patch": target}))

    if not grip and pl.grasped_patch is not None:
        pl.grasped_patch = None
        pl.grasp_anchor = None
        pl.pull_crossings = 0

    if pl.detached_count() == len(pl.patches):
        state.completed = True


def _nearest_frontier_patch(pl: PeelingState, tip: Vec3) -> int | None:
    """Nearest attached patch adjacent to the detached region."""
    best_idx, best = None, (math.inf, -1)
    for i, p in enumerate(pl.patches):
        if not p.attached:
            continue
        if not any(not pl.patches[j].attached for j in pl.neighbors[i]):
            continue
        key = (v_dist(tip, p.center), i)
        if key < best:
            best, best_idx = key, i
    return best_idx


def laser_rule(state: TaskState, probe: InstrumentState, grip: bool, grip_rising: bool,
               t_ms: int, eye: EyeModel, out: list[TaskEvent]) -> None:
    ls = state.laser
    cfg = state.config

    fire_times: list[int] = []
    if grip_rising:
        fire_times.append(t_ms)
        ls.next_fire_t = t_ms + cfg.repeat_interval_ms
    elif grip and ls.next_fire_t is not None:
        while ls.next_fire_t <= t_ms:
            fire_times.append(ls.next_fire_t)
            ls.next_fire_t += cfg.repeat_interval_ms
    if not grip:
        ls.next_fire_t = None

    for ft in fire_times:
        _fire_spot(state, probe, ft, eye, out)

    if all(b.treated for b in ls.breaks):
        state.completed = True


def _fire_spot(state: TaskState, probe: InstrumentState, t_ms: int, eye: EyeModel,
               out: list[TaskEvent]) -> None:
    ls = state.laser
    cfg = state.config
    hit = retina_raycast(probe.tip, probe.axis, eye)
    if hit is None:
        out.append(TaskEvent(t_ms, ev.SHOT_MISSED, {}))
        return

    radius = cfg.spot_r0_mm + cfg.spot_growth_per_mm * hit.distance
    intensity = (cfg.spot_r0_mm / radius) ** 2
    spot_normal = eye.surface_normal(hit.point)

    # nearest break gets the spot for reporting purposes
    b_idx = min(
        range(len(ls.breaks)),
        key=lambda i: arc_angle(spot_normal, ls.breaks[i].normal),
    )
    brk = ls.breaks[b_idx]
    geo = arc_angle(spot_normal, brk.normal) * eye.retina_radius
    cos_g = v_dot(spot_normal, brk.normal)
    if cos_g > 1e-6:
        w = v_scale(spot_normal, eye.retina_radius / cos_g)
        uv = (v_dot(w, brk.t1), v_dot(w, brk.t2))
    else:
        uv = None  # beyond the tangent hemisphere; kept global-only

    spot = LaserSpot(
        position=hit.point, radius_mm=radius, intensity=intensity, t_ms=t_ms,
        break_index=b_idx, geodesic_mm=geo, local_uv=uv,
    )
    ls.spots.append(spot)
    out.append(TaskEvent(t_ms, ev.SPOT_FIRED, {
        "position": list(hit.point), "radius_mm": radius,
        "intensity": intensity, "break": b_idx,
    }))

    # geodesic reach compared through the chord length (monotone on [0, pi]):
    # arc <= reach  <=>  |na - nb| <= 2 sin(reach / 2)
    reach = min(radius / eye.retina_radius, math.pi)
    chord2_spot = (2.0 * math.sin(0.5 * reach)) ** 2
    thr = cfg.treat_threshold
    sx, sy, sz = spot_normal
    for i, b in enumerate(ls.breaks):
        skip_arc = min((b.r_out + radius) / eye.retina_radius + 1e-9, math.pi)
        chord2_skip = (2.0 * math.sin(0.5 * skip_arc)) ** 2
        bn = b.normal
        dbx, dby, dbz = sx - bn[0], sy - bn[1], sz - bn[2]
        if dbx * dbx + dby * dby + dbz * dbz > chord2_skip:
            continue
        changed = False
        for cell in b.cells:
            cn = cell.normal
            dx, dy, dz = sx - cn[0], sy - cn[1], sz - cn[2]
            if dx * dx + dy * dy + dz * dz <= chord2_spot:
                cell.accumulated += intensity
                changed = True
        if changed and not b.treated and all(c.accumulated >= thr for c in b.cells):
            b.treated = True
            out.append(TaskEvent(t_ms, ev.BREAK_TREATED, {"break": i}))


# ---------------------------------------------------------------------------
# tick dispatch
# ---------------------------------------------------------------------------

def tick(
    state: TaskState,
    inp: TickInput,
    rig: TrocarRig,
    eye: EyeModel,
    cal: CalibrationOffset | None = None,
) -> list[TaskEvent]:
    """Advance one frame; returns the events emitted during this tick."""
    if state.completed:
        raise TaskAlreadyComplete(f"{state.kind.value} task already completed")
    t = inp.t_ms
    if state.last_t_ms is not None and t <= state.last_t_ms:
        raise NonMonotonicTimestamp(f"t_ms {t} not after {state.last_t_ms}")
    cal = cal or _IDENTITY_CAL
    dt = 0.0 if state.last_t_ms is None else float(t - state.last_t_ms)
    if state.t0_ms is None:
        state.t0_ms = t
    out: list[TaskEvent] = []

    # eye rotation from the right joystick, world-frame yaw/pitch rates
    jx = min(1.0, max(-1.0, inp.joystick_right[0]))
    jy = min(1.0, max(-1.0, inp.joystick_right[1]))
    if dt > 0.0 and (jx != 0.0 or jy != 0.0):
        rate = math.radians(state.config.eye_rate_deg_s) * dt / 1000.0
        dq = (1.0, 0.0, 0.0, 0.0)
        if jx != 0.0:
            dq = q_mul(dq, q_from_axis_angle((0.0, 1.0, 0.0), rate * jx))
        if jy != 0.0:
            dq = q_mul(dq, q_from_axis_angle((1.0, 0.0, 0.0), rate * jy))
        eye.eye_rotation = q_normalize(q_mul(dq, eye.eye_rotation))

    # the light pipe drives no task rule; it is validated here and mapped on
    # demand by snapshot consumers
    if not inp.left_pose.is_finite():
        raise NonFiniteInput("left controller pose contains non-finite values")
    right_kind = (
        InstrumentKind.LASER_PROBE if state.kind == TaskKind.LASER else InstrumentKind.VITRECTOR
    )
    right = map_controller_pose(inp.right_pose, rig, cal, Hand.RIGHT, eye, kind=right_kind)

    new_touch = update_touch(state.touch, right.tip, eye)
    if new_touch.touch_count > state.touch.touch_count:
        out.append(TaskEvent(t, ev.RETINAL_TOUCH, {"count": new_touch.touch_count}))
    state.touch = new_touch

    grip_rising = inp.grip_right and not state.prev_grip
    if state.kind == TaskKind.NAVIGATION:
        navigation_rule(state, right.tip, dt, t, out)
    elif state.kind == TaskKind.TREMOR:
        tremor_rule(state, right.tip, dt, t, out)
    elif state.kind == TaskKind.PEELING:
        peeling_rule(state, right.tip, inp.grip_right, grip_rising, t, out)
    else:
        laser_rule(state, right, inp.grip_right, grip_rising, t, eye, out)

    if inp.button_x_left and not state.prev_button_x:
        state.magnified = not state.magnified
        out.append(TaskEvent(t, ev.MAGNIFICATION_TOGGLED, {"on": state.magnified}))

    state.elapsed_ms = t - state.t0_ms
    if state.completed:
        out.append(TaskEvent(t, ev.TASK_COMPLETED, {"elapsed_ms": state.elapsed_ms}))

    state.last_t_ms = t
    state.prev_grip = inp.grip_right
    state.prev_button_x = inp.button_x_left
    return out


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MetricsReport:
    module: str
    completed: bool
    completion_time_s: float
    retinal_touches: int
    module_specific: dict

    def to_dict(self) -> dict:
        return {
            "module": self.module,
            "completed": self.completed,
            "completion_time_s": self.completion_time_s,
            "retinal_touches": self.retinal_touches,
            "module_specific": self.module_specific,
        }

    @staticmethod
    def from_dict(d: dict) -> "MetricsReport":
        return MetricsReport(
            module=d["module"], completed=d["completed"],
            completion_time_s=d["completion_time_s"],
            retinal_touches=d["retinal_touches"],
            module_specific=d["module_specific"],
        )


def finalize_metrics(state: TaskState, force: bool = False) -> MetricsReport:
    """Produce the per-session metrics; incomplete sessions need ``force``."""
    if not state.completed and not force:
        raise TaskNotComplete(f"{state.kind.value} task is not completed")
    if state.kind == TaskKind.NAVIGATION:
        specific: dict = {"sphere_exits": state.nav.exits}
    elif state.kind == TaskKind.TREMOR:
        tr = state.tremor
        specific = {
            "sphere_exits": tr.exits,
            "mean_dev_mm": tr.mean_dev_mm,
            "max_dev_mm": tr.max_dev_mm,
        }
    elif state.kind == TaskKind.PEELING:
        specific = {"grasps": state.peel.grasps}
    else:
        ls = state.laser
        specific = {
            "laser_spots": len(ls.spots),
            "spot_coordinates": [
                {
                    "break": s.break_index,
                    "global": list(s.position),
                    "local": list(s.local_uv) if s.local_uv is not None else None,
                    "geodesic_mm": s.geodesic_mm,
                    "radius_mm": s.radius_mm,
                    "intensity": s.intensity,
                    "t_ms": s.t_ms,
                }
                for s in ls.spots
            ],
            "per_break_treated": [b.treated for b in ls.breaks],
        }
    return MetricsReport(
        module=state.kind.value,
        completed=state.completed,
        completion_time_s=state.elapsed_ms / 1000.0,
        retinal_touches=state.touch.touch_count,
        module_specific=specific,
    )


def snapshot_dict(state: TaskState, right: InstrumentState | None = None,
                  left: InstrumentState | None = None) -> dict:
    """Lightweight live view of a task for streaming clients."""
    snap: dict = {
        "kind": state.kind.value,
        "elapsed_ms": state.elapsed_ms,
        "retinal_touches": state.touch.touch_count,
        "completed": state.completed,
        "magnified": state.magnified,
    }
    if right is not None:
        snap["right_tip"] = list(right.tip)
        snap["right_axis"] = list(right.axis)
    if left is not None:
        snap["left_tip"] = list(left.tip)
    if state.kind == TaskKind.NAVIGATION:
        nav = state.nav
        snap["spheres"] = [
            {"collected": s.collected, "active": i == nav.active_contact}
            for i, s in enumerate(nav.spheres)
        ]
        snap["dwell_ms"] = nav.dwell_ms
        snap["exits"] = nav.exits
    elif state.kind == TaskKind.TREMOR:
        tr = state.tremor
        snap["s_mm"] = tr.s_mm
        snap["path_length_mm"] = tr.path.length_mm
        snap["sphere_center"] = list(tr.sphere_center)
        snap["exits"] = tr.exits
        snap["mean_dev_mm"] = tr.mean_dev_mm
        snap["max_dev_mm"] = tr.max_dev_mm
    elif state.kind == TaskKind.PEELING:
        pl = state.peel
        snap["patches"] = [p.attached for p in pl.patches]
        snap["grasps"] = pl.grasps
        snap["grasped_patch"] = pl.grasped_patch
    else:
        ls = state.laser
        thr = state.config.treat_threshold
        snap["breaks"] = [
            {
                "treated": b.treated,
                "coverage": [min(1.0, c.accumulated / thr) for c in b.cells],
            }
            for b in ls.breaks
        ]
        snap["laser_spots"] = len(ls.spots)
    return snap
