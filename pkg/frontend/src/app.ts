/**
 * Sandbox wiring: websocket connection, virtual controller input, scene
 * updates from server geometry, HUD, downloads, and a stress harness for
 * the frame-time budget.
 */
import { PoseSampler, VirtualController } from "./controller.js";
import { Hud } from "./hud.js";
import {
  BrushKind,
  Channel,
  parseServerMessage,
  RulingWire,
  ServerMessage,
} from "./protocol.js";
import { RibbonModel, StrokeBuffer } from "./ribbonBuffer.js";
import { SandboxScene, StrokeMesh } from "./scene.js";

const SURFACES = ["sphere", "hemisphere", "torus", "cylinder", "cone",
                  "square", "circle", "triangle", "ellipsoid", "saddle"];

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

export function startApp(): void {
  const canvas = el<HTMLCanvasElement>("canvas");
  const scene = new SandboxScene(canvas);
  const hud = new Hud(el<HTMLElement>("hud"));
  const banner = el<HTMLElement>("banner");
  const model = new RibbonModel();
  const controller = new VirtualController();
  let brush: BrushKind = "strip";
  let liveMesh: StrokeMesh | null = null;
  let sessionId: number | null = null;
  let drawingEnabled = false;

  const ws = new WebSocket(`ws://${location.host}/ws`);
  const channel = new Channel({ send: (text) => ws.send(text) });

  const sampler = new PoseSampler(controller, (pose) => channel.sendPose(pose), 60);

  function rebuildSceneFromModel(): void {
    scene.removeAllStrokes();
    for (const s of model.strokes) {
      scene.addStroke(s.buffer, s.buffer.brush).sync();
    }
    liveMesh = model.live ? scene.addStroke(model.live, model.live.brush) : null;
    liveMesh?.sync();
  }

  function handleServer(msg: ServerMessage): void {
    if (!channel.accept(msg)) {
      channel.requestSnapshot();
      return;
    }
    switch (msg.type) {
      case "hello":
        sessionId = msg.session;
        updateDownloadLinks();
        break;
      case "ribbon_delta": {
        model.applyDelta(msg.rulings as RulingWire[]);
        if (!liveMesh && model.live) liveMesh = scene.addStroke(model.live, brush);
        liveMesh?.sync();
        break;
      }
      case "metrics_update":
        hud.update(msg);
        break;
      case "snapshot":
        model.rebuildFromSnapshot(msg.session);
        rebuildSceneFromModel();
        scene.setGhost(msg.surface);
        hud.update(msg.metrics);
        break;
      case "error":
        banner.textContent = `server: ${msg.message}`;
        break;
    }
    if (channel.needsResync) channel.requestSnapshot();
  }

  ws.onopen = () => {
    drawingEnabled = true;
    banner.textContent = "";
    channel.hello();
    channel.setSurface("sphere");
  };
  ws.onclose = () => {
    drawingEnabled = false;
    banner.textContent = "disconnected - drawing disabled";
  };
  ws.onmessage = (ev) => {
    const msg = parseServerMessage(String(ev.data));
    if (msg) handleServer(msg);
  };

  // ---- input ---------------------------------------------------------------

  let orbiting = false;
  canvas.addEventListener("pointerdown", (ev) => {
    if (ev.button === 2 || ev.shiftKey) {
      orbiting = true;
    } else if (ev.button === 0 && drawingEnabled) {
      controller.trigger = true;
      model.beginStroke(brush);
      liveMesh = null;
      channel.sendEvent({ type: "stroke_begin", brush });
    }
    canvas.setPointerCapture(ev.pointerId);
  });
  canvas.addEventListener("pointerup", (ev) => {
    if (orbiting) {
      orbiting = false;
    } else if (controller.trigger) {
      controller.trigger = false;
      channel.sendEvent({ type: "stroke_end" });
      if (model.live) {
        model.endStroke(model.strokes.length);
        liveMesh = null;
      }
    }
    canvas.releasePointerCapture(ev.pointerId);
  });
  canvas.addEventListener("pointermove", (ev) => {
    if (orbiting) {
      scene.orbit(ev.movementX * 0.005, ev.movementY * 0.005);
    } else {
      controller.basis = scene.cameraBasis();
      controller.pointerMove(ev.movementX, ev.movementY);
    }
  });
  canvas.addEventListener("wheel", (ev) => {
    ev.preventDefault();
    if (ev.ctrlKey) scene.zoom(ev.deltaY > 0 ? 1.1 : 0.9);
    else controller.wheel(ev.deltaY > 0 ? -1 : 1);
  }, { passive: false });
  canvas.addEventListener("contextmenu", (ev) => ev.preventDefault());
  window.addEventListener("keydown", (ev) => controller.keyDown(ev.key));
  window.addEventListener("keyup", (ev) => controller.keyUp(ev.key));

  // ---- toolbar ---------------------------------------------------------------

  const brushButton = el<HTMLButtonElement>("brush");
  brushButton.onclick = () => {
    brush = brush === "strip" ? "normal" : "strip";
    brushButton.textContent = `brush: ${brush}`;
    channel.setBrush(brush);
  };
  const surfaceSelect = el<HTMLSelectElement>("surface");
  for (const name of SURFACES) {
    const opt = document.createElement("option");
    opt.value = opt.textContent = name;
    surfaceSelect.appendChild(opt);
  }
  surfaceSelect.onchange = () => channel.setSurface(surfaceSelect.value);
  el<HTMLButtonElement>("undo").onclick = () => channel.sendEvent({ type: "undo" });
  el<HTMLButtonElement>("redo").onclick = () => channel.sendEvent({ type: "redo" });

  function updateDownloadLinks(): void {
    if (sessionId === null) return;
    el<HTMLAnchorElement>("dl-session").href = `/sessions/${sessionId}/session.json`;
    el<HTMLAnchorElement>("dl-poses").href = `/sessions/${sessionId}/poses.jsonl`;
    el<HTMLAnchorElement>("dl-obj").href = `/sessions/${sessionId}/drawing.obj`;
  }

  // stress harness for the frame-budget check: appends a synthetic 10k-quad
  // helix through the same buffer/mesh path the server geometry uses
  el<HTMLButtonElement>("stress").onclick = () => {
    const buf = new StrokeBuffer("strip", 16);
    const rulings: RulingWire[] = [];
    for (let i = 0; i <= 10000; i++) {
      const a = (i / 10000) * Math.PI * 20;
      const r = 0.4;
      const c: [number, number, number] = [r * Math.cos(a), 0.5 * (i / 10000), r * Math.sin(a)];
      rulings.push({
        left: [c[0] - 0.01, c[1], c[2]],
        right: [c[0] + 0.01, c[1], c[2]],
        center: c,
        pose: i,
      });
    }
    buf.appendRulings(rulings);
    scene.addStroke(buf, "strip").sync();
    banner.textContent = "stress: +10,000 quads (watch the frame median)";
  };

  // ---- frame loop ------------------------------------------------------------

  let lastFrame = performance.now();
  let lastTick = lastFrame;
  function frame(now: number): void {
    hud.recordFrame(now - lastFrame);
    lastFrame = now;
    const dt = Math.min(0.1, (now - lastTick) / 1000);
    lastTick = now;
    controller.tick(dt);
    sampler.advance(now / 1000);
    scene.setGizmo(
      [controller.position[0], controller.position[1], controller.position[2]],
      [controller.orientation[0], controller.orientation[1],
       controller.orientation[2], controller.orientation[3]],
      brush,
    );
    const rect = canvas.getBoundingClientRect();
    scene.resize(rect.width, rect.height);
    scene.render();
    hud.render();
    requestAnimationFrame(frame);
  }
  requestAnimationFrame(frame);
}

startApp();
