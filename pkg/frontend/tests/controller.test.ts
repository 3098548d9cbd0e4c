import { describe, expect, it } from "vitest";

import { PoseSampler, VirtualController } from "../src/controller.js";
import { quatFromAxisAngle, quatRotate } from "../src/quat.js";
import type { PoseWire } from "../src/protocol.js";

describe("VirtualController", () => {
  it("straight horizontal drag with the default basis moves along +X", () => {
    const c = new VirtualController({ moveScale: 0.001 });
    const y0 = c.position[1];
    c.pointerMove(100, 0);
    expect(c.position[0]).toBeCloseTo(0.1, 12);
    expect(c.position[1]).toBeCloseTo(y0, 12);
    expect(c.position[2]).toBeCloseTo(0, 12);
    expect(c.orientation).toEqual([1, 0, 0, 0]); // untouched
  });

  it("vertical drag moves along camera up (screen y inverted)", () => {
    const c = new VirtualController({ moveScale: 0.001 });
    const y0 = c.position[1];
    c.pointerMove(0, -50);
    expect(c.position[1]).toBeCloseTo(y0 + 0.05, 12);
  });

  it("wheel moves along the view direction", () => {
    const c = new VirtualController({ depthStep: 0.02 });
    c.wheel(3);
    expect(c.position[2]).toBeCloseTo(-0.06, 12); // default forward is -Z
  });

  it("held roll key rotates about the controller forward axis", () => {
    const c = new VirtualController({ rotRate: Math.PI / 2 });
    c.keyDown("q");
    c.tick(1.0); // one second at 90 deg/s
    const expected = quatFromAxisAngle([0, 0, 1], Math.PI / 2);
    for (let i = 0; i < 4; i++) {
      expect(c.orientation[i]).toBeCloseTo(expected[i], 9);
    }
    // side axis swung from +X to +Y: a drawn strip ribbon visibly twists
    const side = quatRotate(c.orientation, [1, 0, 0]);
    expect(side[0]).toBeCloseTo(0, 9);
    expect(side[1]).toBeCloseTo(1, 9);
  });

  it("pitch and yaw act about the current local axes", () => {
    const c = new VirtualController({ rotRate: Math.PI / 2 });
    c.keyDown("w");
    c.tick(0.5); // 45 deg pitch about local +X
    c.keyUp("w");
    const up = quatRotate(c.orientation, [0, 1, 0]);
    expect(up[1]).toBeCloseTo(Math.SQRT1_2, 6);
    expect(up[2]).toBeCloseTo(Math.SQRT1_2, 6);
  });
});

describe("PoseSampler", () => {
  it("emits at the fixed cadence while the trigger is held", () => {
    const c = new VirtualController();
    const out: PoseWire[] = [];
    const sampler = new PoseSampler(c, (p) => out.push(p), 60);
    c.trigger = true;
    for (let t = 0; t <= 0.5001; t += 0.004) sampler.advance(t);
    // 0.5 s at 60 Hz: first sample + 30 periodic samples
    expect(out.length).toBeGreaterThanOrEqual(30);
    expect(out.length).toBeLessThanOrEqual(32);
    const dts = out.slice(2).map((p, i) => p.t - out[i + 1].t);
    for (const dt of dts) expect(dt).toBeCloseTo(1 / 60, 9);
    expect(out.every((p) => p.trig)).toBe(true);
  });

  it("stops emitting when the trigger is released", () => {
    const c = new VirtualController();
    const out: PoseWire[] = [];
    const sampler = new PoseSampler(c, (p) => out.push(p), 60);
    c.trigger = true;
    sampler.advance(0.0);
    sampler.advance(0.1);
    const n = out.length;
    c.trigger = false;
    sampler.advance(0.2);
    sampler.advance(0.3);
    expect(out.length).toBe(n);
  });

  it("rejects a cadence below 30 Hz", () => {
    const c = new VirtualController();
    expect(() => new PoseSampler(c, () => undefined, 10)).toThrow();
  });

  it("scripted input replay matches a hand-authored message fixture", () => {
    const c = new VirtualController({ moveScale: 0.001, depthStep: 0.01 });
    const out: PoseWire[] = [];
    const sampler = new PoseSampler(c, (p) => out.push(p), 50);
    c.trigger = true;
    sampler.advance(0.0);
    c.pointerMove(100, 0);
    sampler.advance(0.02);
    c.wheel(1);
    sampler.advance(0.04);
    const expected: PoseWire[] = [
      { t: 0.0, p: [0, 0.1, 0], q: [1, 0, 0, 0], trig: true },
      { t: 0.02, p: [0.1, 0.1, 0], q: [1, 0, 0, 0], trig: true },
      { t: 0.04, p: [0.1, 0.1, -0.01], q: [1, 0, 0, 0], trig: true },
    ];
    expect(out).toEqual(expected);
  });
});
