import { JSDOM } from "jsdom";
import { beforeEach, describe, expect, it } from "vitest";
import { InputEncoder } from "../src/input.js";

let dom: JSDOM;

beforeEach(() => {
  dom = new JSDOM("<!doctype html><html><body></body></html>");
});

function mouse(dx: number, dy: number): Event {
  // jsdom MouseEvent drops movementX/Y from the init dict; set explicitly
  const ev = new dom.window.MouseEvent("mousemove");
  Object.defineProperty(ev, "movementX", { value: dx });
  Object.defineProperty(ev, "movementY", { value: dy });
  return ev;
}

function wheel(deltaY: number): Event {
  return new dom.window.WheelEvent("wheel", { deltaY });
}

function key(type: "keydown" | "keyup", code: string): Event {
  return new dom.window.KeyboardEvent(type, { code });
}

describe("input encoder bindings", () => {
  it("timestamps are strictly increasing at the configured cadence", () => {
    const enc = new InputEncoder({ frameIntervalMs: 16 });
    const times = Array.from({ length: 20 }, () => enc.tick().t_ms);
    for (let i = 1; i < times.length; i++) {
      expect(times[i] - times[i - 1]).toBe(16);
    }
    expect(times[0]).toBe(0);
  });

  it("mouse motion drives right-hand lateral displacement", () => {
    const enc = new InputEncoder({ mouseSensitivity: 0.02 });
    enc.attach(dom.window.document);
    dom.window.document.dispatchEvent(mouse(100, -50));
    const f = enc.tick();
    expect(f.right[0]).toBeCloseTo(2.0, 9);
    expect(f.right[1]).toBeCloseTo(1.0, 9); // screen y inverts
    expect(f.left[0]).toBe(0);
  });

  it("wheel drives depth; shift redirects to the light pipe", () => {
    const enc = new InputEncoder({ scrollSensitivity: 0.25 });
    enc.attach(dom.window.document);
    dom.window.document.dispatchEvent(wheel(200));
    dom.window.document.dispatchEvent(key("keydown", "ShiftLeft"));
    dom.window.document.dispatchEvent(mouse(50, 0));
    dom.window.document.dispatchEvent(key("keyup", "ShiftLeft"));
    const f = enc.tick();
    expect(f.right[2]).toBeCloseTo(0.5, 9);
    expect(f.left[0]).toBeCloseTo(1.0, 9); // moved while in light-pipe mode
  });

  it("space holds grip, X holds the magnification button", () => {
    const enc = new InputEncoder();
    enc.attach(dom.window.document);
    dom.window.document.dispatchEvent(key("keydown", "Space"));
    dom.window.document.dispatchEvent(key("keydown", "KeyX"));
    expect(enc.tick().grip).toBe(true);
    expect(enc.tick().x).toBe(true);
    dom.window.document.dispatchEvent(key("keyup", "Space"));
    dom.window.document.dispatchEvent(key("keyup", "KeyX"));
    const f = enc.tick();
    expect(f.grip).toBe(false);
    expect(f.x).toBe(false);
  });

  it("arrow keys map to the eye-rotation joystick", () => {
    const enc = new InputEncoder();
    enc.attach(dom.window.document);
    dom.window.document.dispatchEvent(key("keydown", "ArrowRight"));
    dom.window.document.dispatchEvent(key("keydown", "ArrowUp"));
    expect(enc.tick().js).toEqual([1, 1]);
    dom.window.document.dispatchEvent(key("keyup", "ArrowRight"));
    dom.window.document.dispatchEvent(key("keydown", "ArrowLeft"));
    expect(enc.tick().js).toEqual([-1, 1]);
  });
});
