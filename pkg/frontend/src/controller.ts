/**
 * Virtual 6-DOF controller driven by pointer + keyboard.
 *
 * Pointer drags move the tip in a camera-aligned plane, the wheel moves it
 * along the view direction, and held keys rotate the controller about its
 * own side/up/forward axes at a fixed angular rate (pitch W/S, yaw A/D,
 * roll Q/E). While the trigger (primary pointer button) is held, poses are
 * sampled on a fixed cadence of at least 30 Hz.
 */
import type { PoseWire } from "./protocol.js";
import {
  Quat,
  QUAT_IDENTITY,
  quatFromAxisAngle,
  quatMultiply,
  quatNormalize,
  quatRotate,
  V3,
} from "./quat.js";

export interface CameraBasis {
  right: V3;
  up: V3;
  forward: V3; // pointing INTO the scene
}

const DEFAULT_BASIS: CameraBasis = {
  right: [1, 0, 0],
  up: [0, 1, 0],
  forward: [0, 0, -1],
};

export interface ControllerOptions {
  moveScale?: number;  // meters per pointer unit
  depthStep?: number;  // meters per wheel notch
  rotRate?: number;    // rad/s while a rotation key is held
}

export class VirtualController {
  position: V3 = [0, 0.1, 0];
  orientation: Quat = [...QUAT_IDENTITY] as Quat;
  trigger = false;
  basis: CameraBasis = DEFAULT_BASIS;
  readonly moveScale: number;
  readonly depthStep: number;
  readonly rotRate: number;
  private held = new Set<string>();

  constructor(opts: ControllerOptions = {}) {
    this.moveScale = opts.moveScale ?? 0.002;
    this.depthStep = opts.depthStep ?? 0.02;
    this.rotRate = opts.rotRate ?? Math.PI / 2;
  }

  pointerMove(dx: number, dy: number): void {
    const { right, up } = this.basis;
    const sx = dx * this.moveScale;
    const sy = -dy * this.moveScale; // screen y grows downward
    this.position = [
      this.position[0] + right[0] * sx + up[0] * sy,
      this.position[1] + right[1] * sx + up[1] * sy,
      this.position[2] + right[2] * sx + up[2] * sy,
    ];
  }

  wheel(notches: number): void {
    const f = this.basis.forward;
    const s = notches * this.depthStep;
    this.position = [
      this.position[0] + f[0] * s,
      this.position[1] + f[1] * s,
      this.position[2] + f[2] * s,
    ];
  }

  keyDown(key: string): void {
    this.held.add(key.toLowerCase());
  }

  keyUp(key: string): void {
    this.held.delete(key.toLowerCase());
  }

  /** Integrate held rotation keys over dt seconds (controller-local axes). */
  tick(dt: number): void {
    const steps: Array<[V3, number]> = [];
    const rate = this.rotRate * dt;
    if (this.held.has("w")) steps.push([[1, 0, 0], rate]);   // pitch up
    if (this.held.has("s")) steps.push([[1, 0, 0], -rate]);
    if (this.held.has("a")) steps.push([[0, 1, 0], rate]);   // yaw left
    if (this.held.has("d")) steps.push([[0, 1, 0], -rate]);
    if (this.held.has("q")) steps.push([[0, 0, 1], rate]);   // roll ccw
    if (this.held.has("e")) steps.push([[0, 0, 1], -rate]);
    for (const [localAxis, angle] of steps) {
      const worldAxis = quatRotate(this.orientation, localAxis);
      this.orientation = quatNormalize(
        quatMultiply(quatFromAxisAngle(worldAxis, angle), this.orientation),
      );
    }
  }

  samplePose(t: number): PoseWire {
    return {
      t,
      p: [this.position[0], this.position[1], this.position[2]],
      q: [
        this.orientation[0],
        this.orientation[1],
        this.orientation[2],
        this.orientation[3],
      ],
      trig: this.trigger,
    };
  }
}

/**
 * Fixed-cadence pose sampler: emits while the trigger is held.
 * Clock injectable for tests; default cadence 60 Hz (spec floor is 30).
 */
export class PoseSampler {
  private lastEmit: number | null = null;
  readonly period: number;

  constructor(
    private controller: VirtualController,
    private emit: (pose: PoseWire) => void,
    hz = 60,
  ) {
    if (hz < 30) throw new Error("pose sampling must be at least 30 Hz");
    this.period = 1 / hz;
  }

  /** Advance to time t (seconds), emitting any due samples. */
  advance(t: number): void {
    if (!this.controller.trigger) {
      this.lastEmit = null;
      return;
    }
    if (this.lastEmit === null) {
      this.lastEmit = t;
      this.emit(this.controller.samplePose(t));
      return;
    }
    while (t - this.lastEmit >= this.period) {
      this.lastEmit += this.period;
      this.emit(this.controller.samplePose(this.lastEmit));
    }
  }
}
