/**
 * Renderer-independent scene model.  Built from the session layout and then
 * updated exclusively from server snapshots; the client never recomputes any
 * task rule locally, so every displayed count originates server-side.
 */
import type { LayoutT, SnapshotT, Vec3T } from "./protocol.js";

export interface SphereVisual {
  center: Vec3T;
  radius: number;
  collected: boolean;
  active: boolean;
}

export interface PatchVisual {
  center: Vec3T;
  attached: boolean;
}

export interface BreakVisual {
  center: Vec3T;
  rIn: number;
  rOut: number;
  cells: Vec3T[];
  coverage: number[]; // 0..1 per cell
  treated: boolean;
}

export interface SceneState {
  module: string;
  rightTip: Vec3T;
  rightAxis: Vec3T;
  leftTip: Vec3T;
  magnified: boolean;
  completed: boolean;
  elapsedMs: number;
  touches: number;
  spheres: SphereVisual[];
  pathPolyline: Vec3T[];
  trackingSphere: Vec3T | null;
  trackingRadius: number;
  pathProgress: number; // 0..1
  patches: PatchVisual[];
  breaks: BreakVisual[];
  progress: { done: number; total: number; label: string };
}

export function initScene(layout: LayoutT): SceneState {
  const state: SceneState = {
    module: layout.kind,
    rightTip: [0, 0, 0],
    rightAxis: [0, 0, 1],
    leftTip: [0, 0, 0],
    magnified: false,
    completed: false,
    elapsedMs: 0,
    touches: 0,
    spheres: [],
    pathPolyline: [],
    trackingSphere: null,
    trackingRadius: 0,
    pathProgress: 0,
    patches: [],
    breaks: [],
    progress: { done: 0, total: 0, label: "" },
  };
  switch (layout.kind) {
    case "navigation":
      state.spheres = layout.spheres.map((s) => ({
        center: s.center,
        radius: s.radius,
        collected: false,
        active: false,
      }));
      state.progress = { done: 0, total: layout.spheres.length, label: "spheres" };
      break;
    case "tremor":
      state.pathPolyline = layout.polyline;
      state.trackingSphere = layout.polyline[0] ?? null;
      state.trackingRadius = layout.target_radius;
      state.progress = { done: 0, total: 100, label: "path %" };
      break;
    case "peeling":
      state.patches = layout.patches.map((p) => ({ center: p.center, attached: true }));
      state.progress = { done: 0, total: layout.patches.length, label: "patches" };
      break;
    case "laser":
      state.breaks = layout.breaks.map((b) => ({
        center: b.center,
        rIn: b.r_in,
        rOut: b.r_out,
        cells: b.cells,
        coverage: b.cells.map(() => 0),
        treated: false,
      }));
      state.progress = { done: 0, total: layout.breaks.length, label: "breaks" };
      break;
  }
  return state;
}

export function applySnapshot(state: SceneState, snap: SnapshotT): SceneState {
  const next: SceneState = { ...state };
  next.elapsedMs = snap.elapsed_ms;
  next.touches = snap.retinal_touches;
  next.completed = snap.completed;
  next.magnified = snap.magnified;
  if (snap.right_tip) next.rightTip = snap.right_tip;
  if (snap.right_axis) next.rightAxis = snap.right_axis;
  if (snap.left_tip) next.leftTip = snap.left_tip;

  if (snap.kind === "navigation" && snap.spheres) {
    next.spheres = state.spheres.map((s, i) => ({
      ...s,
      collected: snap.spheres![i].collected,
      active: snap.spheres![i].active,
    }));
    const done = next.spheres.filter((s) => s.collected).length;
    next.progress = { ...state.progress, done };
  } else if (snap.kind === "tremor") {
    if (snap.sphere_center) next.trackingSphere = snap.sphere_center;
    const frac =
      snap.path_length_mm && snap.path_length_mm > 0
        ? (snap.s_mm ?? 0) / snap.path_length_mm
        : 0;
    next.pathProgress = frac;
    next.progress = { ...state.progress, done: Math.round(frac * 100) };
  } else if (snap.kind === "peeling" && snap.patches) {
    next.patches = state.patches.map((p, i) => ({
      ...p,
      attached: snap.patches![i],
    }));
    const done = next.patches.filter((p) => !p.attached).length;
    next.progress = { ...state.progress, done };
  } else if (snap.kind === "laser" && snap.breaks) {
    next.breaks = state.breaks.map((b, i) => ({
      ...b,
      treated: snap.breaks![i].treated,
      coverage: snap.breaks![i].coverage,
    }));
    const done = next.breaks.filter((b) => b.treated).length;
    next.progress = { ...state.progress, done };
  }
  return next;
}

/** Fold a server event into the scene so visuals react within one render
 * frame; still purely wire-driven, no task rule is recomputed locally. */
export function applyEvent(
  state: SceneState,
  event: { type: string; data: Record<string, unknown> }
): SceneState {
  const next = { ...state };
  switch (event.type) {
    case "sphere_collected": {
      const i = event.data["sphere"] as number;
      next.spheres = state.spheres.map((s, j) =>
        j === i ? { ...s, collected: true, active: false } : s
      );
      next.progress = {
        ...state.progress,
        done: next.spheres.filter((s) => s.collected).length,
      };
      break;
    }
    case "patch_detached": {
      const i = event.data["patch"] as number;
      next.patches = state.patches.map((p, j) =>
        j === i ? { ...p, attached: false } : p
      );
      next.progress = {
        ...state.progress,
        done: next.patches.filter((p) => !p.attached).length,
      };
      break;
    }
    case "break_treated": {
      const i = event.data["break"] as number;
      next.breaks = state.breaks.map((b, j) =>
        j === i ? { ...b, treated: true } : b
      );
      next.progress = {
        ...state.progress,
        done: next.breaks.filter((b) => b.treated).length,
      };
      break;
    }
    case "retinal_touch":
      next.touches = event.data["count"] as number;
      break;
    case "magnification_toggled":
      next.magnified = event.data["on"] as boolean;
      break;
    case "task_completed":
      next.completed = true;
      break;
  }
  return next;
}

/** Canonical serialization of the scene; stable across runs for a fixed
 * snapshot stream (the determinism oracle hashes this). */
export function canonicalSceneJson(state: SceneState): string {
  const round = (x: number) => Math.round(x * 1e9) / 1e9;
  const vec = (v: Vec3T) => v.map(round);
  return JSON.stringify({
    module: state.module,
    rightTip: vec(state.rightTip),
    leftTip: vec(state.leftTip),
    magnified: state.magnified,
    completed: state.completed,
    elapsedMs: state.elapsedMs,
    touches: state.touches,
    spheres: state.spheres.map((s) => [vec(s.center), s.collected, s.active]),
    trackingSphere: state.trackingSphere ? vec(state.trackingSphere) : null,
    pathProgress: round(state.pathProgress),
    patches: state.patches.map((p) => p.attached),
    breaks: state.breaks.map((b) => [b.treated, b.coverage.map(round)]),
    progress: state.progress,
  });
}

export async function sceneHash(state: SceneState): Promise<string> {
  const bytes = new TextEncoder().encode(canonicalSceneJson(state));
  const digest = await crypto.subtle.digest("SHA-256", bytes);
  return Array.from(new Uint8Array(digest))
    .map((b) => b.toString(16).padStart(2, "0"))
    .join("");
}
