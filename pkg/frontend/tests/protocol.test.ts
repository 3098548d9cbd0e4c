import { describe, expect, it } from "vitest";

import { Channel, parseServerMessage, ServerMessage } from "../src/protocol.js";

class FakeTransport {
  sent: string[] = [];
  send(text: string): void {
    this.sent.push(text);
  }
  last(): Record<string, unknown> {
    return JSON.parse(this.sent[this.sent.length - 1]);
  }
}

function serverMsg(seq: number, type = "metrics_update"): ServerMessage {
  return { type, seq, ack: 0 } as unknown as ServerMessage;
}

describe("Channel", () => {
  it("numbers client messages sequentially", () => {
    const t = new FakeTransport();
    const ch = new Channel(t);
    ch.hello();
    ch.setBrush("normal");
    ch.sendEvent({ type: "undo" });
    const seqs = t.sent.map((s) => JSON.parse(s).seq);
    expect(seqs).toEqual([1, 2, 3]);
  });

  it("encodes poses exactly like a hand-authored fixture", () => {
    const t = new FakeTransport();
    const ch = new Channel(t);
    ch.sendPose({ t: 1.25, p: [0.1, 0.2, 0.3], q: [1, 0, 0, 0], trig: true });
    expect(t.last()).toEqual({
      type: "pose", seq: 1, t: 1.25, p: [0.1, 0.2, 0.3],
      q: [1, 0, 0, 0], trig: true,
    });
  });

  it("accepts in-order server messages", () => {
    const ch = new Channel(new FakeTransport());
    expect(ch.accept(serverMsg(1))).toBe(true);
    expect(ch.accept(serverMsg(2))).toBe(true);
    expect(ch.needsResync).toBe(false);
  });

  it("flags a resync on a server seq gap and re-requests the surface", () => {
    const t = new FakeTransport();
    const ch = new Channel(t);
    ch.setSurface("torus", { major_radius: 0.4 });
    expect(ch.accept(serverMsg(1))).toBe(true);
    expect(ch.accept(serverMsg(5))).toBe(false); // gap: 2..4 lost
    expect(ch.needsResync).toBe(true);
    ch.requestSnapshot();
    const last = t.last();
    expect(last.type).toBe("set_surface");
    expect(last.surface).toBe("torus");
    expect(ch.needsResync).toBe(false);
  });

  it("snapshot heals the resync state", () => {
    const ch = new Channel(new FakeTransport());
    expect(ch.accept(serverMsg(1))).toBe(true);
    expect(ch.accept(serverMsg(3))).toBe(false);
    const snap = {
      type: "snapshot", seq: 4, ack: 0,
      session: { brush: "strip", correction_count: 0, strokes: [], stroke_open: false },
      surface: null,
      metrics: {
        correction_count: 0, stroke_count: 0, quad_count: 0, pitch_total: 0,
        yaw_total: 0, roll_total: 0, weighted_total: 0, effort_steps: 0,
        divergence_mean: 0,
      },
    } as unknown as ServerMessage;
    expect(ch.accept(snap)).toBe(true);
    expect(ch.needsResync).toBe(false);
    expect(ch.accept(serverMsg(5))).toBe(true);
  });

  it("parseServerMessage rejects junk", () => {
    expect(parseServerMessage("{not json")).toBeNull();
    expect(parseServerMessage('{"no_type": 1}')).toBeNull();
    expect(parseServerMessage('{"type": "hello", "seq": 1}')).not.toBeNull();
  });
});
