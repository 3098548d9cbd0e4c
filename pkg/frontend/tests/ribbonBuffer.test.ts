import { describe, expect, it } from "vitest";

import { RibbonModel, StrokeBuffer, quadNormal } from "../src/ribbonBuffer.js";
import type { RulingWire, SessionDoc } from "../src/protocol.js";

function ruling(cx: number, cy: number, cz: number, dx: number, dy: number,
                dz: number, half: number, pose: number): RulingWire {
  return {
    left: [cx - dx * half, cy - dy * half, cz - dz * half],
    right: [cx + dx * half, cy + dy * half, cz + dz * half],
    center: [cx, cy, cz],
    pose,
  };
}

/** Server-style rulings for a straight flat stroke along +Z. */
function flatStroke(n: number): RulingWire[] {
  const out: RulingWire[] = [];
  for (let i = 0; i < n; i++) out.push(ruling(0, 0, i * 0.05, 1, 0, 0, 0.02, i));
  return out;
}

/** Rulings twisting a quarter turn about the path (roll-modifier stroke). */
function twistedStroke(n: number): RulingWire[] {
  const out: RulingWire[] = [];
  for (let i = 0; i < n; i++) {
    const a = (Math.PI / 2) * (i / (n - 1));
    out.push(ruling(0, 0, i * 0.05, Math.cos(a), Math.sin(a), 0, 0.02, i));
  }
  return out;
}

describe("StrokeBuffer", () => {
  it("counts quads as rulings minus one", () => {
    const buf = new StrokeBuffer("strip");
    expect(buf.appendRulings(flatStroke(1))).toBe(0);
    expect(buf.quadCount).toBe(0);
    expect(buf.appendRulings(flatStroke(3).slice(1))).toBe(2);
    expect(buf.quadCount).toBe(2);
    expect(buf.positions.length).toBe(2 * 18);
  });

  it("appends without reallocating when capacity suffices", () => {
    const buf = new StrokeBuffer("strip", 128);
    buf.appendRulings(flatStroke(10));
    const gen = buf.generation;
    const backing = buf.backing;
    buf.appendRulings([ruling(0, 0, 99, 1, 0, 0, 0.02, 10)]);
    expect(buf.generation).toBe(gen);
    expect(buf.backing).toBe(backing); // same array, only the range grew
  });

  it("grows by doubling when needed and keeps old content", () => {
    const buf = new StrokeBuffer("strip", 1);
    buf.appendRulings(flatStroke(40));
    expect(buf.quadCount).toBe(39);
    expect(buf.generation).toBeGreaterThan(0);
    const n = quadNormal(buf, 0);
    expect(Math.abs(n[1])).toBeCloseTo(1, 9); // flat stroke in the XZ plane
  });

  it("flat stroke stays planar, twisted stroke twists", () => {
    const flat = new StrokeBuffer("strip");
    flat.appendRulings(flatStroke(20));
    for (let q = 0; q < flat.quadCount; q++) {
      expect(Math.abs(quadNormal(flat, q)[1])).toBeCloseTo(1, 9);
    }
    const twisted = new StrokeBuffer("strip");
    twisted.appendRulings(twistedStroke(20));
    const first = quadNormal(twisted, 0);
    const last = quadNormal(twisted, twisted.quadCount - 1);
    const dot = first[0] * last[0] + first[1] * last[1] + first[2] * last[2];
    // a quarter-turn roll leaves the end normals nearly orthogonal
    expect(Math.abs(dot)).toBeLessThan(0.2);
  });
});

describe("RibbonModel", () => {
  function snapshotDoc(strokes: Array<{ id: number; rulings: RulingWire[] }>): SessionDoc {
    return {
      brush: "strip",
      correction_count: 0,
      stroke_open: false,
      strokes: strokes.map((s) => ({
        id: s.id, brush: "strip" as const, width: 0.04, rulings: s.rulings,
      })),
    };
  }

  it("delta-built buffer checksum matches the snapshot rebuild", () => {
    // the acceptance check: geometry arriving piecewise over deltas must be
    // byte-identical to the same geometry restored from a snapshot
    const viaDeltas = new RibbonModel();
    viaDeltas.beginStroke("strip");
    const stroke = flatStroke(30);
    for (let i = 0; i < stroke.length; i += 7) {
      viaDeltas.applyDelta(stroke.slice(i, i + 7));
    }
    viaDeltas.endStroke(0);

    const viaSnapshot = new RibbonModel();
    viaSnapshot.rebuildFromSnapshot(snapshotDoc([{ id: 0, rulings: stroke }]));

    expect(viaDeltas.checksum()).toBe(viaSnapshot.checksum());
    expect(viaDeltas.totalQuads).toBe(29);
  });

  it("undo snapshot rebuild drops the stroke", () => {
    const model = new RibbonModel();
    model.beginStroke("strip");
    model.applyDelta(flatStroke(5));
    model.endStroke(0);
    expect(model.totalQuads).toBe(4);
    model.rebuildFromSnapshot(snapshotDoc([]));
    expect(model.totalQuads).toBe(0);
    expect(model.strokes.length).toBe(0);
  });

  it("checksum distinguishes different geometry", () => {
    const a = new RibbonModel();
    a.rebuildFromSnapshot(snapshotDoc([{ id: 0, rulings: flatStroke(10) }]));
    const b = new RibbonModel();
    b.rebuildFromSnapshot(snapshotDoc([{ id: 0, rulings: twistedStroke(10) }]));
    expect(a.checksum()).not.toBe(b.checksum());
  });

  it("handles a 10k-quad stress stroke quickly", () => {
    const model = new RibbonModel();
    model.beginStroke("strip");
    const big: RulingWire[] = [];
    for (let i = 0; i <= 10000; i++) {
      const a = (i / 10000) * Math.PI * 20;
      big.push(ruling(0.4 * Math.cos(a), i / 10000, 0.4 * Math.sin(a),
                      1, 0, 0, 0.01, i));
    }
    const t0 = performance.now();
    model.applyDelta(big);
    const checksum = model.checksum();
    const ms = performance.now() - t0;
    expect(model.totalQuads).toBe(10000);
    expect(checksum).toHaveLength(8);
    // geometry-side budget: well under one 33 ms frame on desktop hardware
    expect(ms).toBeLessThan(200);
  });
});
