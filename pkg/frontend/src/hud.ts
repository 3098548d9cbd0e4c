/**
 * Metrics HUD: mirrors the latest metrics_update payload verbatim; no
 * client-side recomputation.
 */
import type { MetricsPayload } from "./protocol.js";

export class Hud {
  latest: MetricsPayload | null = null;
  frameTimes: number[] = [];

  constructor(private el: HTMLElement | null = null) {}

  update(payload: MetricsPayload): void {
    this.latest = payload;
    this.render();
  }

  recordFrame(ms: number): void {
    this.frameTimes.push(ms);
    if (this.frameTimes.length > 240) this.frameTimes.shift();
  }

  medianFrameMs(): number {
    if (!this.frameTimes.length) return 0;
    const sorted = [...this.frameTimes].sort((a, b) => a - b);
    return sorted[Math.floor(sorted.length / 2)];
  }

  private deg(rad: number): string {
    return ((rad * 180) / Math.PI).toFixed(1);
  }

  render(extra = ""): void {
    if (!this.el) return;
    const m = this.latest;
    const rows = m
      ? [
          `strokes ${m.stroke_count}  quads ${m.quad_count}  corrections ${m.correction_count}`,
          `pitch ${this.deg(m.pitch_total)}°  yaw ${this.deg(m.yaw_total)}°  roll ${this.deg(m.roll_total)}°`,
          `weighted effort ${m.weighted_total.toFixed(3)}  divergence ${this.deg(m.divergence_mean)}°`,
        ]
      : ["no metrics yet"];
    rows.push(`frame median ${this.medianFrameMs().toFixed(1)} ms ${extra}`);
    this.el.textContent = rows.join("\n");
  }
}
