/**
 * Application wiring: URL parameters pick the server and module, pointer
 * lock gives surgical-feel relative mouse input, and the render loop pushes
 * encoder frames to the server while applying snapshots to the scene.
 *
 *   index.html?server=ws://127.0.0.1:8713&module=navigation&seed=42
 */
import { SessionClient } from "./client.js";
import { Hud } from "./hud.js";
import { InputEncoder } from "./input.js";
import { HeatmapDoc, type LayoutT, type ModuleNameT } from "./protocol.js";
import { SceneRenderer } from "./renderer.js";
import { applyEvent, applySnapshot, initScene, type SceneState } from "./sceneState.js";

function param(name: string, fallback: string): string {
  return new URLSearchParams(window.location.search).get(name) ?? fallback;
}

export function startApp(): void {
  const serverWs = param("server", "ws://127.0.0.1:8713");
  const module = param("module", "navigation") as ModuleNameT;
  const seed = parseInt(param("seed", "42"), 10);

  const canvas = document.getElementById("scene") as HTMLCanvasElement;
  const hud = new Hud(document.getElementById("hud") as HTMLElement);
  const banner = document.getElementById("banner") as HTMLElement;
  let renderer: SceneRenderer | null = null;
  let scene: SceneState | null = null;
  let running = false;

  const encoder = new InputEncoder();
  encoder.attach(document);
  canvas.addEventListener("click", () => canvas.requestPointerLock());

  const client = new SessionClient(`${serverWs}/ws`, {
    onCreated: (msg) => {
      scene = initScene(msg.layout as LayoutT);
      renderer = new SceneRenderer(canvas);
      renderer.buildLayout(scene);
      running = true;
    },
    onSnapshot: (msg) => {
      if (!scene) return;
      scene = applySnapshot(scene, msg.snapshot);
    },
    onEvent: (msg) => {
      hud.onEvent(msg.event);
      if (scene) scene = applyEvent(scene, msg.event);
    },
    onCompleted: async (msg) => {
      running = false;
      let heatmap = null;
      if (msg.metrics.module === "laser") {
        try {
          const http = serverWs.replace(/^ws/, "http");
          const sid = msg.log.split("-").pop()!.replace(".session.jsonl", "");
          const res = await fetch(`${http}/sessions/${sid}/heatmap`);
          heatmap = HeatmapDoc.parse(await res.json());
        } catch {
          heatmap = null;
        }
      }
      hud.showCompleted(msg.metrics, heatmap);
    },
    onError: (msg) => {
      banner.hidden = false;
      banner.textContent = `error ${msg.code}: ${msg.message}`;
      running = false;
    },
    onClose: () => {
      if (running) {
        banner.hidden = false;
        banner.textContent = "connection lost - reload to reconnect";
      }
    },
  });

  client.ready().then(() => {
    client.hello();
    client.createSession(module, seed, {
      participant_id: param("participant", "ui-user"),
      group: "novice",
      run_index: 1,
    });
  });

  setInterval(() => {
    if (running) client.sendFrame(encoder.tick());
  }, 16);

  const loop = () => {
    if (scene && renderer) {
      renderer.apply(scene);
      renderer.render();
      hud.update(scene);
    }
    requestAnimationFrame(loop);
  };
  requestAnimationFrame(loop);
}

startApp();
