import { JSDOM } from "jsdom";
import { beforeEach, describe, expect, it } from "vitest";
import { Hud, heatmapPanelTotal, hudModel } from "../src/hud.js";
import type { HeatmapDocT } from "../src/protocol.js";
import { initScene, applySnapshot } from "../src/sceneState.js";

let dom: JSDOM;

beforeEach(() => {
  dom = new JSDOM("<!doctype html><html><body><div id='hud'></div></body></html>");
  (globalThis as Record<string, unknown>).document = dom.window.document;
  (globalThis as Record<string, unknown>).HTMLElement = dom.window.HTMLElement;
});

const layout = {
  kind: "navigation" as const,
  spheres: Array.from({ length: 10 }, (_, i) => ({
    center: [i, 0, 0] as [number, number, number],
    radius: 1.5,
  })),
};

describe("hud", () => {
  it("starts at zero and tracks snapshots", () => {
    const scene = initScene(layout);
    const m0 = hudModel(scene, "");
    expect(m0.timerS).toBe(0);
    expect(m0.touches).toBe(0);
    expect(m0.progressText).toBe("0/10 spheres");

    const hud = new Hud(dom.window.document.getElementById("hud") as HTMLElement);
    hud.update(scene);
    expect(dom.window.document.getElementById("hud-timer")!.textContent).toBe("0.0 s");

    const next = applySnapshot(scene, {
      kind: "navigation",
      elapsed_ms: 12_340,
      retinal_touches: 2,
      completed: false,
      magnified: false,
      spheres: scene.spheres.map((_, i) => ({ collected: i < 3, active: i === 3 })),
      dwell_ms: 500,
      exits: 1,
    });
    hud.onEvent({ t_ms: 12_000, type: "retinal_touch", data: { count: 2 } });
    hud.update(next);
    expect(dom.window.document.getElementById("hud-touches")!.textContent).toBe(
      "touches: 2");
    expect(dom.window.document.getElementById("hud-progress")!.textContent).toBe(
      "3/10 spheres");
    expect(dom.window.document.getElementById("hud-event")!.textContent).toContain(
      "retinal_touch");
  });

  it("heatmap panel conserves the metrics spot count", () => {
    const doc: HeatmapDocT = {
      session_id: "s",
      laser_spots: 10,
      extent_mm: 6.6,
      grids: [0, 1].map((b) => ({
        break: b,
        counts: [[b === 0 ? 3 : 2, 0], [0, 2]],
        total: b === 0 ? 5 : 4,
        dropped: b === 0 ? 1 : 0,
        normalized: [[1, 0], [0, 0.5]],
      })),
    };
    expect(heatmapPanelTotal(doc)).toBe(doc.laser_spots);
  });

  it("completed report renders metrics and heatmap canvases", () => {
    const hud = new Hud(dom.window.document.getElementById("hud") as HTMLElement);
    const doc: HeatmapDocT = {
      session_id: "s",
      laser_spots: 4,
      extent_mm: 6.6,
      grids: [{
        break: 0,
        counts: [[4]],
        total: 4,
        dropped: 0,
        normalized: [[1]],
      }],
    };
    hud.showCompleted(
      {
        module: "laser",
        completed: true,
        completion_time_s: 88.2,
        retinal_touches: 1,
        module_specific: { laser_spots: 4 },
      },
      doc
    );
    const report = dom.window.document.getElementById("hud-report")!;
    expect(report.hidden).toBe(false);
    expect(report.textContent).toContain("88.20 s");
    const canvases = report.querySelectorAll("canvas");
    expect(canvases.length).toBe(1);
    expect(canvases[0].dataset.total).toBe("4");
  });
});
