"""Seeded generators of human-like controller input with tunable skill.

Each generator plans instrument-tip trajectories in the fundus frame, maps
them back to raw controller poses through the inverse fulcrum kinematics,
and runs the task engine in closed loop, reacting to engine state exactly
as a human watching the scene would.  Hand noise is an Ornstein-Uhlenbeck
process (mean-reverting, 150 ms correlation time), so the jitter has the
low-frequency drift character of real tremor rather than white noise.

Everything is a pure function of (kind, profile, seed, run_index).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace

from .config import TaskConfig
from .errors import GenerationTimeout, InvalidConfig
from .geometry import (
    CalibrationOffset,
    Hand,
    Pose,
    Vec3,
    controller_pose_for_tip,
    v_add,
    v_dist,
    v_dot,
    v_norm,
    v_scale,
    v_sub,
    v_unit,
)
from .sessionlog import SessionHeader, SessionLog
from .tasks import (
    RetinalBreak,
    TaskKind,
    TaskState,
    TickInput,
    init_task,
    layout_hash,
    make_eye,
    make_rig,
    tick,
)

FRAME_DT_MS = 20
OU_TAU_MS = 150.0

GRASP_FEW_LARGE = "few_large_pulls"
GRASP_MANY_SMALL = "many_small_pulls"


@dataclass(frozen=True)
class SkillProfile:
    """Behavioral knobs of a simulated trainee.

    ``caution`` scales approach margins, dwell overshoot, and deliberate
    pauses; ``recklessness`` is the rate of deliberate over-travel toward
    the retina; ``center_bias`` is the fraction of laser aims drawn toward
    the tear center instead of the treatment annulus.
    """

    name: str
    tremor_sd_mm: float
    speed_factor: float
    caution: float
    recklessness: float
    grasp_strategy: str
    aim_sd_mm: float
    center_bias: float

    def validate(self) -> "SkillProfile":
        if self.tremor_sd_mm < 0 or self.aim_sd_mm < 0:
            raise InvalidConfig("noise magnitudes must be >= 0")
        if self.speed_factor <= 0:
            raise InvalidConfig("speed_factor must be positive")
        for fname in ("caution", "recklessness", "center_bias"):
            v = getattr(self, fname)
            if not 0.0 <= v <= 1.0:
                raise InvalidConfig(f"{fname} must be in [0, 1]")
        if self.grasp_strategy not in (GRASP_FEW_LARGE, GRASP_MANY_SMALL):
            raise InvalidConfig(f"unknown grasp strategy {self.grasp_strategy!r}")
        return self


# Frozen presets, calibrated once against the published group envelopes
# (expert mean completion time inside the reported min-max range per task)
# and then left untouched.
NOVICE = SkillProfile(
    name="novice",
    tremor_sd_mm=0.30,
    speed_factor=0.8,
    caution=0.30,
    recklessness=0.60,
    grasp_strategy=GRASP_FEW_LARGE,
    aim_sd_mm=0.35,
    center_bias=0.45,
)
EXPERT = SkillProfile(
    name="expert",
    tremor_sd_mm=0.15,
    speed_factor=1.0,
    caution=0.85,
    recklessness=0.05,
    grasp_strategy=GRASP_MANY_SMALL,
    aim_sd_mm=0.12,
    center_bias=0.02,
)

PROFILES = {"novice": NOVICE, "expert": EXPERT}

_TIME_CAP_MS = {
    TaskKind.NAVIGATION: 400_000,
    TaskKind.TREMOR: 400_000,
    TaskKind.PEELING: 500_000,
    TaskKind.LASER: 800_000,
}

# Deliberate over-travel toward the retina is mostly a free-navigation
# behavior; close-to-surface tasks express recklessness through their
# working clearance instead.
_EXCURSION_TASK_SCALE = {
    TaskKind.NAVIGATION: 1.0,
    TaskKind.TREMOR: 0.7,
    TaskKind.PEELING: 0.25,
    TaskKind.LASER: 0.06,
}


def participant_meta(profile: SkillProfile, seed: int) -> tuple[str, float, str]:
    """Stable (participant_id, age, sex) for a seed; runs share the identity."""
    rng = random.Random(f"meta:{profile.name}:{seed}")
    if profile.name == "novice":
        age = min(38.0, max(24.0, rng.gauss(28.2, 3.6)))
        sex = "f" if rng.random() < 0.7 else "m"
    else:
        age = min(72.0, max(33.0, rng.gauss(47.1, 12.3)))
        sex = "f" if rng.random() < 0.3 else "m"
    return f"{profile.name}-{seed:04d}", round(age, 1), sex


class _Driver:
    """Closed-loop session driver: plans tips, emits frames, ticks the engine."""

    def __init__(self, kind: TaskKind, profile: SkillProfile, seed: int,
                 run_index: int, config: TaskConfig):
        self.kind = kind
        self.profile = profile
        self.config = config
        self.state: TaskState = init_task(kind, config, seed)
        self.eye = make_eye(config)
        self.rig = make_rig(config, self.eye)
        self.cal = CalibrationOffset.identity()
        self.rng = random.Random(f"motion:{profile.name}:{kind.value}:{seed}:{run_index}")
        self.frames: list[TickInput] = []
        self.events = []
        self.t_ms = 0
        self.plan: Vec3 = (0.0, 0.0, 0.0)  # rest tip: the eye center
        self.ou = [0.0, 0.0, 0.0]
        self.grip = False
        self.excursion: list[Vec3] | None = None

        # learning curve: repetition damps noise and pauses, speeds movement
        lvl = max(0, run_index - 1)
        self.noise_scale = 1.0 - 0.10 * lvl
        self.pause_scale = 1.0 - 0.15 * lvl
        self.speed = profile.speed_factor * (1.0 + 0.08 * lvl)

        self.sd = profile.tremor_sd_mm * self.noise_scale
        self.ou_alpha = math.exp(-FRAME_DT_MS / OU_TAU_MS)
        self.ou_beta = self.sd * math.sqrt(1.0 - self.ou_alpha * self.ou_alpha)
        self.excursion_rate = (0.06 * profile.recklessness * self.noise_scale
                               * _EXCURSION_TASK_SCALE[kind])
        self.cap_ms = _TIME_CAP_MS[kind]

    # -- frame plumbing ------------------------------------------------

    def _noisy_tip(self) -> Vec3:
        for i in range(3):
            self.ou[i] = self.ou[i] * self.ou_alpha + self.ou_beta * self.rng.gauss(0.0, 1.0)
        tip = (self.plan[0] + self.ou[0], self.plan[1] + self.ou[1], self.plan[2] + self.ou[2])
        # keep strictly inside the globe; grazing depth still registers a touch
        r = v_dist(tip, self.eye.center)
        limit = self.eye.retina_radius - 0.02
        if r > limit:
            tip = v_add(self.eye.center, v_scale(v_sub(tip, self.eye.center), limit / r))
        return tip

    def emit(self, x_button: bool = False) -> None:
        if self.state.completed:
            return
        if self.t_ms > self.cap_ms:
            raise GenerationTimeout(
                f"{self.profile.name} could not complete {self.kind.value} "
                f"within {self.cap_ms / 1000:.0f} s of simulated time")
        if self.excursion:
            self.plan = self.excursion.pop(0)
        elif self.excursion_rate > 0.0 and \
                self.rng.random() < self.excursion_rate * FRAME_DT_MS / 1000.0:
            self._start_excursion()
        tip = self._noisy_tip()
        raw = controller_pose_for_tip(tip, self.rig, self.cal, Hand.RIGHT, self.eye)
        frame = TickInput(
            t_ms=self.t_ms,
            left_pose=Pose(),
            right_pose=raw,
            grip_right=self.grip,
            button_x_left=x_button,
        )
        self.frames.append(frame)
        self.events.extend(tick(self.state, frame, self.rig, self.eye, cal=self.cal))
        self.t_ms += FRAME_DT_MS

    def _start_excursion(self) -> None:
        # deliberate over-travel: dive toward the nearest retina point and back
        away = v_sub(self.plan, self.eye.center)
        n = v_unit(away) if v_norm(away) > 1e-9 else (0.0, 0.0, -1.0)
        dive = v_add(self.eye.center, v_scale(n, self.eye.retina_radius - 0.05))
        start = self.plan
        steps_out = max(2, int(v_dist(start, dive) / (30.0 * FRAME_DT_MS / 1000.0)))
        path = [_lerp(start, dive, (i + 1) / steps_out) for i in range(steps_out)]
        path += [dive] * 2
        path += [_lerp(dive, start, (i + 1) / steps_out) for i in range(steps_out)]
        self.excursion = path

    def wait(self, duration_ms: float, x_button: bool = False) -> None:
        end = self.t_ms + duration_ms
        while self.t_ms < end and not self.state.completed:
            self.emit(x_button=x_button)

    def move_to(self, target: Vec3, v_mm_s: float, tol: float = 0.05) -> None:
        step = v_mm_s * FRAME_DT_MS / 1000.0
        while not self.state.completed:
            d = v_dist(self.plan, target)
            if d <= tol:
                return
            if d <= step:
                self.plan = target
            else:
                self.plan = v_add(self.plan, v_scale(v_sub(target, self.plan), step / d))
            self.emit()

    # -- randomness helpers ---------------------------------------------

    def ball(self, radius: float) -> Vec3:
        if radius <= 0.0:
            return (0.0, 0.0, 0.0)
        g = (self.rng.gauss(0, 1), self.rng.gauss(0, 1), self.rng.gauss(0, 1))
        n = v_norm(g)
        if n < 1e-12:
            return (0.0, 0.0, 0.0)
        return v_scale(g, radius * self.rng.random() ** (1.0 / 3.0) / n)

    # -- task scripts ----------------------------------------------------

    def run_navigation(self) -> None:
        prof = self.profile
        v_travel = 7.2 * self.speed
        hold_jitter = (0.9 * (1.0 - prof.caution) + 0.3 * prof.tremor_sd_mm) * self.noise_scale
        settle_ms = (550.0 + 750.0 * prof.caution) * self.pause_scale
        regroup_ms = (800.0 + 950.0 * prof.caution) * self.pause_scale
        slip_p = 0.17 * (1.0 - prof.caution)  # attention slips break the dwell
        reaim_ms = 600.0
        sphere_r = self.config.nav_sphere_radius_mm
        remaining = set(range(len(self.state.nav.spheres)))
        while remaining and not self.state.completed:
            idx = min(remaining,
                      key=lambda i: v_dist(self.plan, self.state.nav.spheres[i].center))
            center = self.state.nav.spheres[idx].center
            self.move_to(center, v_travel, tol=0.2)
            self.wait(settle_ms)
            next_reaim = self.t_ms
            while not self.state.nav.spheres[idx].collected and not self.state.completed:
                if self.t_ms >= next_reaim:
                    if self.rng.random() < slip_p:
                        off = self.ball(1.0)
                        mag = sphere_r * (1.1 + 0.5 * self.rng.random())
                        off = v_scale(off, mag / v_norm(off)) if v_norm(off) > 1e-9 \
                            else (mag, 0.0, 0.0)
                        self.plan = v_add(center, off)
                    else:
                        self.plan = v_add(center, self.ball(hold_jitter))
                    next_reaim = self.t_ms + reaim_ms
                self.emit()
            remaining.discard(idx)
            self.wait(regroup_ms)

    def run_tremor(self) -> None:
        # stop-and-go tracking: ride the moving sphere for a while, drift off
        # (sphere halts), come back.  The ride/lapse duty cycle sets the pace.
        prof = self.profile
        tr = self.state.tremor
        v_chase = 13.0 * self.speed
        ride_mean_ms = 240.0 + 90.0 * prof.caution
        lapse_mean_ms = (5600.0 - 700.0 * prof.caution) * self.pause_scale
        touch_floor = 0.25 + 0.6 * prof.caution
        self.move_to(tr.sphere_center, v_chase, tol=0.3)
        phase_end: float | None = None
        aim_offset: Vec3 = (0.0, 0.0, 0.0)
        riding = True
        while not self.state.completed:
            if tr.tracking_started and phase_end is None:
                # first contact opens a ride phase
                phase_end = self.t_ms + abs(self.rng.gauss(ride_mean_ms, 0.4 * ride_mean_ms))
            if tr.tracking_started and self.t_ms >= phase_end:
                riding = not riding
                if riding:
                    aim_offset = (0.0, 0.0, 0.0)
                    phase_end = self.t_ms + abs(self.rng.gauss(ride_mean_ms, 0.4 * ride_mean_ms))
                else:
                    mag = max(1.6, self.rng.gauss(2.3, 0.4))  # always clear of the contact ball
                    off = self.ball(1.0)
                    off = v_scale(off, mag / v_norm(off)) if v_norm(off) > 1e-9 else (mag, 0.0, 0.0)
                    n_pole = v_unit(v_sub(tr.sphere_center, self.eye.center))
                    # reflect lapses that would park the tip against the retina
                    if self.config.tremor_path_height_mm - v_dot(off, n_pole) < touch_floor:
                        off = v_sub(off, v_scale(n_pole, 2.0 * v_dot(off, n_pole)))
                    aim_offset = off
                    phase_end = self.t_ms + abs(self.rng.gauss(lapse_mean_ms, 0.35 * lapse_mean_ms))
            target = v_add(tr.sphere_center, aim_offset)
            d = v_dist(self.plan, target)
            step = v_chase * FRAME_DT_MS / 1000.0
            if d > 1e-9:
                self.plan = target if d <= step else v_add(
                    self.plan, v_scale(v_sub(target, self.plan), step / d))
            self.emit()

    def run_peeling(self) -> None:
        cfg, prof = self.config, self.profile
        pl = self.state.peel
        hover = max(0.15, 0.45 + 0.35 * prof.caution - 0.10 * prof.recklessness)
        v_travel = 16.0 * self.speed
        v_pull = (1.6 + 2.8 * prof.recklessness) * self.speed
        pre_pause = (200.0 + 1400.0 * prof.caution) * self.pause_scale
        pulls_per_grasp = 6 if prof.grasp_strategy == GRASP_FEW_LARGE else 5
        aim_sd = prof.aim_sd_mm + 0.15 * (1.0 - prof.caution)
        pole = v_add(self.eye.center,
                     v_scale(self.eye.posterior_pole_dir, self.eye.retina_radius))

        while not self.state.completed:
            candidates = [i for i in range(len(pl.patches)) if pl.eligible(i)]
            if not candidates:
                break
            candidates.sort(key=lambda i: v_dist(self.plan, pl.patches[i].center))
            pick = candidates[0] if prof.caution >= 0.5 else \
                self.rng.choice(candidates[: min(4, len(candidates))])
            patch = pl.patches[pick]
            n = v_unit(v_sub(patch.center, self.eye.center))
            aim = v_add(patch.center, self.ball(aim_sd))
            aim = v_sub(aim, v_scale(n, v_dot(v_sub(aim, patch.center), n)))  # keep tangential
            grasp_point = v_sub(aim, v_scale(n, hover))
            self.move_to(grasp_point, v_travel, tol=0.08)
            self.wait(pre_pause)
            if self.state.completed:
                break

            self.grip = True
            self.emit()  # rising edge
            if pl.grasped_patch is None:
                # missed the membrane; let go and retry
                self.grip = False
                self.wait(150.0 * self.pause_scale)
                continue
            # pull up and away from the macula center until the wanted number
            # of detachments happened (engine decides what actually detaches)
            radial = v_sub(patch.center, pole)
            radial = v_sub(radial, v_scale(n, v_dot(radial, n)))
            out_dir = v_unit(radial) if v_norm(radial) > 1e-6 else v_unit(v_cross_any(n))
            pull_dir = v_unit(v_add(v_scale(out_dir, 1.0), v_scale(n, -0.55)))
            before = pl.detached_count()
            travel_cap = (pulls_per_grasp + 0.6) * cfg.pull_threshold_mm
            anchor = self.plan
            while (not self.state.completed
                   and pl.detached_count() - before < pulls_per_grasp
                   and v_dist(self.plan, anchor) < travel_cap):
                self.plan = v_add(self.plan, v_scale(pull_dir, v_pull * FRAME_DT_MS / 1000.0))
                self.emit()
            self.grip = False
            self.wait((100.0 + 300.0 * prof.caution) * self.pause_scale)

    def run_laser(self) -> None:
        cfg, prof = self.config, self.profile
        ls = self.state.laser
        hover = 1.2 - 0.5 * prof.caution
        v_travel = 20.0 * self.speed
        v_sweep = 3.0 * self.speed
        sector_dwell = 260.0 * self.pause_scale
        mid_rho = 0.5 * (cfg.laser_r_in_mm + cfg.laser_r_out_mm)

        order = sorted(range(len(ls.breaks)),
                       key=lambda i: v_dist(self.plan, ls.breaks[i].center))
        for b_idx in order:
            brk = ls.breaks[b_idx]
            if brk.treated:
                continue
            self.grip = False
            self.move_to(self._probe_hover(self._annulus_point(brk, mid_rho, 0.0), hover),
                         v_travel, tol=0.15)
            self.grip = True
            for sweep in range(24):
                if brk.treated or self.state.completed:
                    break
                for k in range(cfg.laser_sectors):
                    if brk.treated or self.state.completed:
                        break
                    psi = 2.0 * math.pi * (k + 0.5) / cfg.laser_sectors
                    aim = self._draw_aim(brk, mid_rho, psi)
                    self.move_to(self._probe_hover(aim, hover), v_sweep, tol=0.06)
                    self.wait(sector_dwell)
                if brk.treated or self.state.completed:
                    break
                # repair pass: dwell on the least-treated cells until done
                cells = sorted(
                    range(len(brk.cells)),
                    key=lambda i: brk.cells[i].accumulated,
                )
                for ci in cells:
                    if brk.treated or self.state.completed:
                        break
                    if brk.cells[ci].accumulated >= cfg.treat_threshold:
                        continue
                    target = v_add(brk.cells[ci].center, self.ball(prof.aim_sd_mm * 0.6))
                    self.move_to(self._probe_hover(target, hover * 0.95), v_sweep, tol=0.05)
                    deadline = self.t_ms + 8 * cfg.repeat_interval_ms
                    while (brk.cells[ci].accumulated < cfg.treat_threshold
                           and self.t_ms < deadline
                           and not brk.treated and not self.state.completed):
                        self.emit()
            self.grip = False
            if not self.state.completed:
                self.emit()

    def _annulus_point(self, brk: RetinalBreak, rho: float, psi: float) -> Vec3:
        r = self.eye.retina_radius
        beta = rho / r
        sb, cb = math.sin(beta), math.cos(beta)
        d = (
            cb * brk.normal[0] + sb * (math.cos(psi) * brk.t1[0] + math.sin(psi) * brk.t2[0]),
            cb * brk.normal[1] + sb * (math.cos(psi) * brk.t1[1] + math.sin(psi) * brk.t2[1]),
            cb * brk.normal[2] + sb * (math.cos(psi) * brk.t1[2] + math.sin(psi) * brk.t2[2]),
        )
        return v_add(self.eye.center, v_scale(d, r))

    def _probe_hover(self, surface_target: Vec3, clearance: float) -> Vec3:
        """Tip on the shaft line through the target, at the given perpendicular
        clearance above the retina (shaft distance grows with incidence)."""
        shaft = v_unit(v_sub(surface_target, self.rig.trocar_right))
        n = v_unit(v_sub(surface_target, self.eye.center))
        cos_inc = max(0.25, v_dot(shaft, n))
        return v_sub(surface_target, v_scale(shaft, clearance / cos_inc))

    def _draw_aim(self, brk: RetinalBreak, mid_rho: float, psi: float) -> Vec3:
        prof = self.profile
        if self.rng.random() < prof.center_bias:
            rho = self.rng.random() * 0.8 * brk.r_in
            psi = psi + self.rng.gauss(0.0, 0.6)
        else:
            rho = max(0.05, self.rng.gauss(mid_rho, prof.aim_sd_mm * 0.7))
            psi = psi + self.rng.gauss(0.0, prof.aim_sd_mm / max(mid_rho, 1e-6))
        return self._annulus_point(brk, rho, psi)


def _lerp(a: Vec3, b: Vec3, t: float) -> Vec3:
    return (a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t)


def v_cross_any(n: Vec3) -> Vec3:
    aux = (1.0, 0.0, 0.0) if abs(n[0]) < 0.9 else (0.0, 1.0, 0.0)
    return (
        aux[1] * n[2] - aux[2] * n[1],
        aux[2] * n[0] - aux[0] * n[2],
        aux[0] * n[1] - aux[1] * n[0],
    )


def generate_session_with_report(
    kind: TaskKind,
    profile: SkillProfile,
    seed: int,
    run_index: int = 1,
    config: TaskConfig | None = None,
):
    """Generate a session; returns (SessionLog, live MetricsReport).

    The report comes from the live engine state of the generating run, not
    from a replay, so it can anchor replay-equivalence checks.
    """
    from .tasks import finalize_metrics

    profile.validate()
    config = (config or TaskConfig()).validate()
    driver = _Driver(kind, profile, seed, run_index, config)
    if kind == TaskKind.NAVIGATION:
        driver.run_navigation()
    elif kind == TaskKind.TREMOR:
        driver.run_tremor()
    elif kind == TaskKind.PEELING:
        driver.run_peeling()
    else:
        driver.run_laser()
    if not driver.state.completed:
        raise GenerationTimeout(
            f"{profile.name} planner stalled on {kind.value} (seed {seed})")
    participant_id, age, sex = participant_meta(profile, seed)
    header = SessionHeader(
        module=kind,
        seed=seed,
        config=config,
        participant_id=participant_id,
        group=profile.name,
        age=age,
        sex=sex,
        run_index=run_index,
        layout_hash=layout_hash(init_task(kind, config, seed)),
    )
    log = SessionLog(header=header, frames=driver.frames, events=driver.events)
    return log, finalize_metrics(driver.state)


def generate_session(
    kind: TaskKind,
    profile: SkillProfile,
    seed: int,
    run_index: int = 1,
    config: TaskConfig | None = None,
) -> SessionLog:
    """Produce a complete, engine-completable session for a simulated trainee."""
    return generate_session_with_report(kind, profile, seed, run_index, config)[0]
