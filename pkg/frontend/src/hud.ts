/**
 * HUD panels: live timer, touch counter, per-module progress, and the
 * post-session report with the per-break laser heatmap.  Counts are taken
 * verbatim from server snapshots/events, never recomputed.
 */
import type { HeatmapDocT, MetricsReportT, TaskEventT } from "./protocol.js";
import type { SceneState } from "./sceneState.js";

export interface HudModel {
  timerS: number;
  touches: number;
  progressText: string;
  lastEvent: string;
}

export function hudModel(state: SceneState, lastEvent: string): HudModel {
  const p = state.progress;
  return {
    timerS: state.elapsedMs / 1000,
    touches: state.touches,
    progressText: `${p.done}/${p.total} ${p.label}`,
    lastEvent,
  };
}

export class Hud {
  private root: HTMLElement;
  private lastEvent = "";

  constructor(root: HTMLElement) {
    this.root = root;
    this.root.innerHTML = `
      <div class="hud-row"><span id="hud-timer">0.0 s</span>
        <span id="hud-touches">touches: 0</span>
        <span id="hud-progress"></span></div>
      <div class="hud-row" id="hud-event"></div>
      <div id="hud-report" hidden></div>`;
  }

  private set(id: string, text: string): void {
    const el = this.root.querySelector(`#${id}`);
    if (el) el.textContent = text;
  }

  update(state: SceneState): void {
    const m = hudModel(state, this.lastEvent);
    this.set("hud-timer", `${m.timerS.toFixed(1)} s`);
    this.set("hud-touches", `touches: ${m.touches}`);
    this.set("hud-progress", m.progressText);
    this.set("hud-event", m.lastEvent);
  }

  onEvent(event: TaskEventT): void {
    this.lastEvent = `${event.type} @ ${(event.t_ms / 1000).toFixed(1)}s`;
  }

  showCompleted(metrics: MetricsReportT, heatmap: HeatmapDocT | null): void {
    const report = this.root.querySelector("#hud-report") as HTMLElement;
    if (!report) return;
    report.hidden = false;
    const rows = Object.entries(metrics.module_specific)
      .filter(([, v]) => typeof v === "number" || typeof v === "boolean")
      .map(([k, v]) => `<tr><td>${k}</td><td>${String(v)}</td></tr>`)
      .join("");
    report.innerHTML = `
      <h3>session ${metrics.completed ? "completed" : "aborted"}</h3>
      <table>
        <tr><td>completion time</td><td>${metrics.completion_time_s.toFixed(2)} s</td></tr>
        <tr><td>retinal touches</td><td>${metrics.retinal_touches}</td></tr>
        ${rows}
      </table>
      <div id="heatmap-panel"></div>`;
    if (heatmap) {
      renderHeatmapPanel(
        report.querySelector("#heatmap-panel") as HTMLElement,
        heatmap
      );
    }
  }
}

/** Sum of all binned counts plus drops; must equal the metrics spot count. */
export function heatmapPanelTotal(doc: HeatmapDocT): number {
  const binned = doc.grids.reduce((acc, g) => acc + g.total, 0);
  const dropped = doc.grids.reduce((acc, g) => acc + g.dropped, 0);
  return binned + dropped;
}

export function renderHeatmapPanel(el: HTMLElement, doc: HeatmapDocT): void {
  el.innerHTML = "";
  const title = document.createElement("div");
  title.textContent = `laser spots: ${doc.laser_spots} (binned ${heatmapPanelTotal(doc) -
    doc.grids.reduce((a, g) => a + g.dropped, 0)}, outside extent ${doc.grids.reduce(
    (a, g) => a + g.dropped, 0)})`;
  el.appendChild(title);
  for (const grid of doc.grids) {
    const canvas = document.createElement("canvas");
    canvas.width = canvas.height = grid.counts.length * 6;
    canvas.dataset.break = String(grid.break);
    canvas.dataset.total = String(grid.total);
    const ctx = canvas.getContext("2d");
    if (ctx) {
      grid.normalized.forEach((row, i) =>
        row.forEach((vN, j) => {
          // viridis-ish two-stop ramp: dark purple to yellow
          const r = Math.round(68 + vN * (253 - 68));
          const g = Math.round(1 + vN * (231 - 1));
          const b = Math.round(84 + vN * (37 - 84));
          ctx.fillStyle = `rgb(${r},${g},${b})`;
          ctx.fillRect(j * 6, i * 6, 6, 6);
        })
      );
    }
    el.appendChild(canvas);
  }
}
