/**
 * Desktop control bindings: pointer-lock mouse and keyboard stand in for the
 * VR controllers.  The encoder accumulates controller-space displacement and
 * emits protocol-valid frames with strictly increasing timestamps at a fixed
 * cadence.
 *
 *   mouse x/y        -> active-hand lateral displacement
 *   wheel            -> active-hand depth displacement
 *   Space (hold)     -> right grip (grasp / laser trigger)
 *   KeyX (press)     -> left X button (magnification toggle)
 *   Shift (hold)     -> light-pipe positioning mode (left hand active)
 *   arrow keys       -> right joystick (eye rotation)
 */
import { FrameRecord, type FrameRecordT } from "./protocol.js";

export interface BindingConfig {
  mouseSensitivity: number; // mm per pixel of pointer motion
  scrollSensitivity: number; // mm per wheel notch (deltaY of 100)
  frameIntervalMs: number; // timestamp step per emitted frame
}

export const DEFAULT_BINDINGS: BindingConfig = {
  mouseSensitivity: 0.02,
  scrollSensitivity: 0.25,
  frameIntervalMs: 16,
};

const IDENTITY_QUAT = [1, 0, 0, 0];

export class InputEncoder {
  readonly config: BindingConfig;
  private right: [number, number, number] = [0, 0, 0];
  private left: [number, number, number] = [0, 0, 0];
  private grip = false;
  private xButton = false;
  private lightPipeMode = false;
  private arrows = { up: false, down: false, left: false, right: false };
  private tMs = 0;
  private started = false;

  constructor(config: Partial<BindingConfig> = {}) {
    this.config = { ...DEFAULT_BINDINGS, ...config };
  }

  attach(target: EventTarget): void {
    target.addEventListener("mousemove", this.onMouseMove as EventListener);
    target.addEventListener("wheel", this.onWheel as EventListener);
    target.addEventListener("keydown", this.onKeyDown as EventListener);
    target.addEventListener("keyup", this.onKeyUp as EventListener);
  }

  detach(target: EventTarget): void {
    target.removeEventListener("mousemove", this.onMouseMove as EventListener);
    target.removeEventListener("wheel", this.onWheel as EventListener);
    target.removeEventListener("keydown", this.onKeyDown as EventListener);
    target.removeEventListener("keyup", this.onKeyUp as EventListener);
  }

  private onMouseMove = (ev: MouseEvent): void => {
    const hand = this.lightPipeMode ? this.left : this.right;
    hand[0] += ev.movementX * this.config.mouseSensitivity;
    hand[1] -= ev.movementY * this.config.mouseSensitivity; // screen y is down
  };

  private onWheel = (ev: WheelEvent): void => {
    const hand = this.lightPipeMode ? this.left : this.right;
    hand[2] += (ev.deltaY / 100) * this.config.scrollSensitivity;
  };

  private onKeyDown = (ev: KeyboardEvent): void => {
    switch (ev.code) {
      case "Space":
        this.grip = true;
        break;
      case "KeyX":
        this.xButton = true;
        break;
      case "ShiftLeft":
      case "ShiftRight":
        this.lightPipeMode = true;
        break;
      case "ArrowUp":
        this.arrows.up = true;
        break;
      case "ArrowDown":
        this.arrows.down = true;
        break;
      case "ArrowLeft":
        this.arrows.left = true;
        break;
      case "ArrowRight":
        this.arrows.right = true;
        break;
    }
  };

  private onKeyUp = (ev: KeyboardEvent): void => {
    switch (ev.code) {
      case "Space":
        this.grip = false;
        break;
      case "KeyX":
        this.xButton = false;
        break;
      case "ShiftLeft":
      case "ShiftRight":
        this.lightPipeMode = false;
        break;
      case "ArrowUp":
        this.arrows.up = false;
        break;
      case "ArrowDown":
        this.arrows.down = false;
        break;
      case "ArrowLeft":
        this.arrows.left = false;
        break;
      case "ArrowRight":
        this.arrows.right = false;
        break;
    }
  };

  joystick(): [number, number] {
    return [
      (this.arrows.right ? 1 : 0) - (this.arrows.left ? 1 : 0),
      (this.arrows.up ? 1 : 0) - (this.arrows.down ? 1 : 0),
    ];
  }

  /** Emit the next frame; timestamps are monotone by construction. */
  tick(): FrameRecordT {
    if (this.started) {
      this.tMs += this.config.frameIntervalMs;
    }
    this.started = true;
    const frame = {
      type: "frame" as const,
      t_ms: this.tMs,
      left: [...this.left, ...IDENTITY_QUAT],
      right: [...this.right, ...IDENTITY_QUAT],
      grip: this.grip,
      x: this.xButton,
      js: this.joystick(),
    };
    return FrameRecord.parse(frame); // protocol-valid or throw
  }
}
