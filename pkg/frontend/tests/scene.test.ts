import { readFileSync } from "node:fs";
import { webcrypto } from "node:crypto";
import { beforeAll, describe, expect, it } from "vitest";
import { Layout, ServerMessage, type SnapshotT } from "../src/protocol.js";
import {
  applyEvent,
  applySnapshot,
  canonicalSceneJson,
  initScene,
  sceneHash,
  type SceneState,
} from "../src/sceneState.js";

beforeAll(() => {
  if (!globalThis.crypto?.subtle) {
    (globalThis as Record<string, unknown>).crypto = webcrypto;
  }
});

const stream = readFileSync(
  new URL("./fixtures/navigation_stream.jsonl", import.meta.url),
  "utf-8"
)
  .trim()
  .split("\n")
  .map((l) => ServerMessage.parse(JSON.parse(l)));

function reduceStream(): SceneState {
  const created = stream[0];
  if (created.type !== "session_created") throw new Error("bad fixture");
  let scene = initScene(created.layout);
  for (const msg of stream) {
    if (msg.type === "state_snapshot") scene = applySnapshot(scene, msg.snapshot);
    else if (msg.type === "event") scene = applyEvent(scene, msg.event);
  }
  return scene;
}

describe("scene state reduction", () => {
  it("collected spheres turn green/removed per the snapshot", () => {
    const created = stream[0];
    if (created.type !== "session_created") throw new Error("bad fixture");
    let scene = initScene(created.layout);
    expect(scene.spheres.every((s) => !s.collected)).toBe(true);
    const snapWithCollected = stream.find(
      (m) => m.type === "state_snapshot" && m.snapshot.spheres?.some((s) => s.collected)
    );
    expect(snapWithCollected).toBeDefined();
    scene = applySnapshot(scene, (snapWithCollected as { snapshot: SnapshotT }).snapshot);
    expect(scene.spheres.some((s) => s.collected)).toBe(true);
    expect(scene.progress.done).toBeGreaterThan(0);
  });

  it("full fixture stream ends with all spheres collected", () => {
    const scene = reduceStream();
    expect(scene.spheres.every((s) => s.collected)).toBe(true);
    expect(scene.completed).toBe(true);
    expect(scene.progress.done).toBe(10);
  });

  it("scene hash is deterministic across replays of the stream", async () => {
    const a = await sceneHash(reduceStream());
    const b = await sceneHash(reduceStream());
    expect(a).toBe(b);
    expect(a).toMatch(/^[0-9a-f]{64}$/);
    // canonical form is also byte-stable
    expect(canonicalSceneJson(reduceStream())).toBe(canonicalSceneJson(reduceStream()));
  });

  it("treated breaks show the green marker state", () => {
    const laserLayout = Layout.parse({
      kind: "laser",
      breaks: [
        {
          center: [0, 0, -12],
          r_in: 1.0,
          r_out: 2.2,
          cells: [[0.5, 0, -11.9], [0, 0.5, -11.9]],
        },
      ],
    });
    let scene = initScene(laserLayout);
    expect(scene.breaks[0].treated).toBe(false);
    scene = applySnapshot(scene, {
      kind: "laser",
      elapsed_ms: 1000,
      retinal_touches: 0,
      completed: false,
      magnified: false,
      breaks: [{ treated: true, coverage: [1.0, 0.6] }],
      laser_spots: 12,
    });
    expect(scene.breaks[0].treated).toBe(true);
    expect(scene.breaks[0].coverage).toEqual([1.0, 0.6]);
    expect(scene.progress.done).toBe(1);
  });

  it("magnification flag passes through as a view-only toggle", () => {
    const created = stream[0];
    if (created.type !== "session_created") throw new Error("bad fixture");
    let scene = initScene(created.layout);
    scene = applySnapshot(scene, {
      kind: "navigation",
      elapsed_ms: 0,
      retinal_touches: 0,
      completed: false,
      magnified: true,
      spheres: scene.spheres.map(() => ({ collected: false, active: false })),
      dwell_ms: 0,
      exits: 0,
    });
    expect(scene.magnified).toBe(true);
    expect(scene.spheres.every((s) => !s.collected)).toBe(true);
  });
});
