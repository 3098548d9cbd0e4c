/**
 * Wire protocol types and the client-side sequencing layer.
 *
 * Every client message carries a strictly increasing `seq`; every server
 * message carries its own `seq` plus `ack` (the highest client seq the
 * server has processed). A gap in the server seq stream means we missed
 * geometry, so the channel flags that a full snapshot resync is needed.
 */

export type BrushKind = "normal" | "strip";

export interface PoseWire {
  t: number;
  p: [number, number, number];
  q: [number, number, number, number]; // wxyz
  trig: boolean;
}

export interface RulingWire {
  left: [number, number, number];
  right: [number, number, number];
  center: [number, number, number];
  pose: number;
}

export interface StrokeDoc {
  id: number;
  brush: BrushKind;
  width: number;
  rulings: RulingWire[];
}

export interface SessionDoc {
  brush: BrushKind;
  correction_count: number;
  strokes: StrokeDoc[];
  stroke_open: boolean;
}

export interface MetricsPayload {
  correction_count: number;
  stroke_count: number;
  quad_count: number;
  pitch_total: number;
  yaw_total: number;
  roll_total: number;
  weighted_total: number;
  effort_steps: number;
  divergence_mean: number;
}

export type ServerMessage =
  | ({ type: "hello"; seq: number; ack: number; session: number; version: string } & {
      surface: SurfaceDescriptor | null;
    })
  | {
      type: "ribbon_delta";
      seq: number;
      ack: number;
      stroke_open: boolean;
      start_index: number;
      rulings: RulingWire[];
      quads: number;
      divergence: number[];
    }
  | ({ type: "metrics_update"; seq: number; ack: number } & MetricsPayload)
  | {
      type: "snapshot";
      seq: number;
      ack: number;
      session: SessionDoc;
      surface: SurfaceDescriptor | null;
      metrics: MetricsPayload;
    }
  | { type: "error"; seq: number; ack: number; message: string; offending: number | null };

export interface SurfaceDescriptor {
  kind: string;
  params: Record<string, number>;
}

export type EventWire =
  | { type: "stroke_begin"; brush?: BrushKind; width?: number }
  | { type: "stroke_end" }
  | { type: "undo" }
  | { type: "redo" }
  | { type: "erase"; stroke: number }
  | { type: "set_brush"; brush: BrushKind };

export interface Transport {
  send(text: string): void;
}

/** Client-side channel: numbers outgoing messages, watches server ordering. */
export class Channel {
  private seq = 0;
  private lastServerSeq = 0;
  private surface: { surface: string; params?: Record<string, number> } | null = null;
  /** set when a server-seq gap was observed and a snapshot resync is due */
  needsResync = false;
  readonly sent: Array<Record<string, unknown>> = [];

  constructor(private transport: Transport, private keepLog = false) {}

  private post(msg: Record<string, unknown>): number {
    this.seq += 1;
    const full = { ...msg, seq: this.seq };
    if (this.keepLog) this.sent.push(full);
    this.transport.send(JSON.stringify(full));
    return this.seq;
  }

  hello(): number {
    return this.post({ type: "hello" });
  }

  setBrush(brush: BrushKind): number {
    return this.post({ type: "set_brush", brush });
  }

  setSurface(surface: string, params?: Record<string, number>): number {
    this.surface = { surface, params };
    return this.post({ type: "set_surface", surface, params: params ?? {} });
  }

  sendEvent(event: EventWire): number {
    return this.post({ type: "event", event });
  }

  sendPose(pose: PoseWire): number {
    return this.post({ type: "pose", ...pose });
  }

  /** Re-request a full snapshot (re-selecting the surface returns one). */
  requestSnapshot(): number {
    this.needsResync = false;
    if (this.surface) {
      return this.post({
        type: "set_surface",
        surface: this.surface.surface,
        params: this.surface.params ?? {},
      });
    }
    return this.post({ type: "set_surface", surface: null });
  }

  /** Track server-side ordering; true if the message is safe to apply. */
  accept(msg: ServerMessage): boolean {
    if (typeof msg.seq !== "number") return false;
    if (this.lastServerSeq !== 0 && msg.seq !== this.lastServerSeq + 1) {
      this.needsResync = true;
      this.lastServerSeq = msg.seq;
      return msg.type === "snapshot"; // snapshots are always safe anchors
    }
    this.lastServerSeq = msg.seq;
    if (msg.type === "snapshot") this.needsResync = false;
    return true;
  }
}

export function parseServerMessage(text: string): ServerMessage | null {
  try {
    const msg = JSON.parse(text);
    if (msg && typeof msg.type === "string") return msg as ServerMessage;
    return null;
  } catch {
    return null;
  }
}
