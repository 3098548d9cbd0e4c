/**
 * Ribbon vertex buffers built exclusively from server geometry.
 *
 * The UI never derives ruling positions itself: deltas append the server's
 * rulings to a growable Float32Array (two triangles per quad, matching the
 * kernel's shared-diagonal triangulation), and snapshots rebuild the same
 * layout from scratch. Equal geometry therefore yields byte-equal buffers,
 * which the checksum verifies.
 */
import type { BrushKind, RulingWire, SessionDoc } from "./protocol.js";

const FLOATS_PER_QUAD = 18; // 2 triangles x 3 vertices x xyz

export class StrokeBuffer {
  readonly brush: BrushKind;
  private data: Float32Array;
  private rulingCount = 0;
  private lastLeft: [number, number, number] | null = null;
  private lastRight: [number, number, number] | null = null;
  /** incremented whenever the backing array is reallocated */
  generation = 0;

  constructor(brush: BrushKind, capacityQuads = 64) {
    this.brush = brush;
    this.data = new Float32Array(capacityQuads * FLOATS_PER_QUAD);
  }

  get quadCount(): number {
    return Math.max(0, this.rulingCount - 1);
  }

  get rulings(): number {
    return this.rulingCount;
  }

  /** Used portion of the vertex buffer (view, not a copy). */
  get positions(): Float32Array {
    return this.data.subarray(0, this.quadCount * FLOATS_PER_QUAD);
  }

  /** Full backing store; rendering uses it with a draw range. */
  get backing(): Float32Array {
    return this.data;
  }

  appendRulings(rulings: RulingWire[]): number {
    let newQuads = 0;
    for (const r of rulings) {
      if (this.lastLeft !== null && this.lastRight !== null) {
        this.ensureCapacity(this.quadCount + 1);
        const base = this.quadCount * FLOATS_PER_QUAD;
        const l0 = this.lastLeft;
        const r0 = this.lastRight;
        const l1 = r.left;
        const r1 = r.right;
        // triangles (l0, r0, r1) and (l0, r1, l1)
        this.data.set(
          [
            l0[0], l0[1], l0[2], r0[0], r0[1], r0[2], r1[0], r1[1], r1[2],
            l0[0], l0[1], l0[2], r1[0], r1[1], r1[2], l1[0], l1[1], l1[2],
          ],
          base,
        );
        newQuads += 1;
      }
      this.lastLeft = [r.left[0], r.left[1], r.left[2]];
      this.lastRight = [r.right[0], r.right[1], r.right[2]];
      this.rulingCount += 1;
    }
    return newQuads;
  }

  private ensureCapacity(quads: number): void {
    const needed = quads * FLOATS_PER_QUAD;
    if (needed <= this.data.length) return;
    let cap = this.data.length || FLOATS_PER_QUAD;
    while (cap < needed) cap *= 2;
    const grown = new Float32Array(cap);
    grown.set(this.data);
    this.data = grown;
    this.generation += 1;
  }
}

export interface StrokeEntry {
  id: number;
  buffer: StrokeBuffer;
}

/** Pure scene model: stroke buffers keyed by stroke id plus the live one. */
export class RibbonModel {
  strokes: StrokeEntry[] = [];
  live: StrokeBuffer | null = null;
  liveBrush: BrushKind = "strip";

  beginStroke(brush: BrushKind): StrokeBuffer {
    this.live = new StrokeBuffer(brush);
    this.liveBrush = brush;
    return this.live;
  }

  applyDelta(rulings: RulingWire[]): number {
    if (!this.live) this.live = new StrokeBuffer(this.liveBrush);
    return this.live.appendRulings(rulings);
  }

  endStroke(id: number): void {
    if (this.live) {
      this.strokes.push({ id, buffer: this.live });
      this.live = null;
    }
  }

  rebuildFromSnapshot(session: SessionDoc): void {
    this.strokes = session.strokes.map((s) => {
      const buffer = new StrokeBuffer(s.brush, Math.max(1, s.rulings.length));
      buffer.appendRulings(s.rulings);
      return { id: s.id, buffer };
    });
    this.live = null;
  }

  get totalQuads(): number {
    let total = this.strokes.reduce((acc, s) => acc + s.buffer.quadCount, 0);
    if (this.live) total += this.live.quadCount;
    return total;
  }

  /** FNV-1a over every stroke's used vertex bytes, in stroke order. */
  checksum(): string {
    let h = 0x811c9dc5;
    const mix = (buf: Float32Array) => {
      const bytes = new Uint8Array(buf.buffer, buf.byteOffset, buf.byteLength);
      for (let i = 0; i < bytes.length; i++) {
        h ^= bytes[i];
        h = Math.imul(h, 0x01000193) >>> 0;
      }
    };
    for (const s of this.strokes) mix(s.buffer.positions);
    if (this.live) mix(this.live.positions);
    return h.toString(16).padStart(8, "0");
  }
}

/** Per-quad unit normal of a buffer quad (diagnostics and tests). */
export function quadNormal(buf: StrokeBuffer, quad: number): [number, number, number] {
  const p = buf.positions;
  const o = quad * FLOATS_PER_QUAD;
  // diagonal cross product: (r1 - l0) x (l1 - r0)
  const d1 = [p[o + 6] - p[o], p[o + 7] - p[o + 1], p[o + 8] - p[o + 2]];
  const d2 = [p[o + 15] - p[o + 3], p[o + 16] - p[o + 4], p[o + 17] - p[o + 5]];
  const n: [number, number, number] = [
    d1[1] * d2[2] - d1[2] * d2[1],
    d1[2] * d2[0] - d1[0] * d2[2],
    d1[0] * d2[1] - d1[1] * d2[0],
  ];
  const len = Math.hypot(n[0], n[1], n[2]) || 1;
  return [n[0] / len, n[1] / len, n[2] / len];
}
