"""Realtime bridge for the sandbox UI.

One session per connection. Clients stream JSON messages ({"type": ...,
"seq": n}) over a websocket; the server answers with ribbon deltas, throttled
metrics updates, snapshots after corrections, and errors. Every outbound
message carries "ack", the highest client seq processed so far, and "seq",
the server's own monotonically increasing counter.

The protocol layer (ServiceSession) is transport-independent and is driven
directly in tests; the FastAPI app wires it to a websocket, serves the UI
bundle, and exposes health + download endpoints.
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Callable

from fastapi import WebSocket, WebSocketDisconnect

from . import __version__
from .brush import BrushKind, RibbonBuilder, Ruling, quad_raw_normal
from .errors import ProtocolError, RibbonLabError
from .geom import frame_of, rotation_between
from .metrics import DEFAULT_WEIGHTS
from .session import (Erase, Redo, SetBrush, Session, StrokeBegin, StrokeEnd,
                      StrokePoint, Undo, event_from_dict, pose_from_dict,
                      pose_to_dict)
from .surfaces import create_surface

METRICS_MIN_INTERVAL = 0.1  # seconds between metrics_update messages

_session_ids = itertools.count(1)


def _ruling_doc(r: Ruling) -> dict:
    return {"left": list(r.left.as_tuple()), "right": list(r.right.as_tuple()),
            "center": list(r.center.as_tuple()), "pose": r.source_pose_index}


@dataclass
class _LiveStroke:
    builder: RibbonBuilder
    poses: list = field(default_factory=list)
    divergence_sum: float = 0.0
    divergence_count: int = 0


class ServiceSession:
    """Per-connection protocol state machine.

    handle_message(dict) -> list[dict] applies one client message and
    returns the outbound messages. A message whose envelope is valid (a
    dict with the expected next seq) consumes its seq even if the payload
    is rejected, so the client numbering never desynchronizes; payload
    errors leave the session state itself unchanged.
    """

    def __init__(self, clock: Callable[[], float] = time.monotonic,
                 weights: tuple[float, float, float] = DEFAULT_WEIGHTS):
        self.session_id = next(_session_ids)
        self.session = Session()
        self.clock = clock
        self.weights = weights
        self.surface_descriptor: dict | None = None
        self._client_seq = 0
        self._server_seq = 0
        self._live: _LiveStroke | None = None
        self._effort = [0.0, 0.0, 0.0]    # pitch, yaw, roll accumulated, radians
        self._effort_steps = 0
        self._last_metrics_at: float | None = None
        self._metrics_dirty = False

    # -- outbound helpers ------------------------------------------------------

    def _out(self, type_: str, **fields) -> dict:
        self._server_seq += 1
        msg = {"type": type_, "seq": self._server_seq, "ack": self._client_seq}
        msg.update(fields)
        return msg

    def _error(self, message: str, offending_seq: int | None = None) -> dict:
        return self._out("error", message=message, offending=offending_seq)

    def _metrics_payload(self) -> dict:
        w = self.weights
        weighted = (w[0] * self._effort[0] + w[1] * self._effort[1]
                    + w[2] * self._effort[2])
        quad_count = sum(s.strip.quad_count for s in self.session.strokes)
        if self._live is not None:
            quad_count += max(0, len(self._live.builder.rulings) - 1)
        div_mean = 0.0
        if self._live is not None and self._live.divergence_count:
            div_mean = self._live.divergence_sum / self._live.divergence_count
        return {
            "correction_count": self.session.correction_count,
            "stroke_count": len(self.session.strokes),
            "quad_count": quad_count,
            "pitch_total": self._effort[0],
            "yaw_total": self._effort[1],
            "roll_total": self._effort[2],
            "weighted_total": weighted,
            "effort_steps": self._effort_steps,
            "divergence_mean": div_mean,
        }

    def _metrics_update(self, force: bool = False) -> list[dict]:
        """Emit metrics at most every METRICS_MIN_INTERVAL; coalesce otherwise."""
        now = self.clock()
        if not force and self._last_metrics_at is not None \
                and now - self._last_metrics_at < METRICS_MIN_INTERVAL:
            self._metrics_dirty = True
            return []
        self._last_metrics_at = now
        self._metrics_dirty = False
        return [self._out("metrics_update", **self._metrics_payload())]

    def snapshot_message(self) -> dict:
        return self._out("snapshot", session=self.session.state_doc(),
                         surface=self.surface_descriptor,
                         metrics=self._metrics_payload())

    # -- inbound ---------------------------------------------------------------

    def handle_message(self, msg: dict) -> list[dict]:
        if not isinstance(msg, dict) or "type" not in msg:
            return [self._error("message must be an object with a 'type' field")]
        seq = msg.get("seq")
        if not isinstance(seq, int) or seq != self._client_seq + 1:
            return [self._error(
                f"out-of-order seq {seq!r}, expected {self._client_seq + 1}",
                offending_seq=seq if isinstance(seq, int) else None)]
        self._client_seq = seq
        kind = msg["type"]
        handler = getattr(self, f"_handle_{kind}", None)
        if handler is None:
            return [self._error(f"unknown message type {kind!r}", offending_seq=seq)]
        try:
            return handler(msg)
        except (RibbonLabError, ValueError, KeyError, TypeError) as exc:
            return [self._error(str(exc), offending_seq=seq)]

    def _handle_hello(self, msg: dict) -> list[dict]:
        return [self._out("hello", session=self.session_id, version=__version__,
                          surface=self.surface_descriptor)]

    def _handle_set_brush(self, msg: dict) -> list[dict]:
        try:
            brush = BrushKind(str(msg.get("brush", "")))
        except ValueError:
            raise ProtocolError(f"unknown brush {msg.get('brush')!r}")
        self.session.apply_event(SetBrush(brush=brush))
        return self._metrics_update()

    def _handle_set_surface(self, msg: dict) -> list[dict]:
        name = msg.get("surface")
        if name is None:
            self.surface_descriptor = None
        else:
            surface = create_surface(str(name), msg.get("params") or {})
            self.surface_descriptor = surface.descriptor()
        return [self.snapshot_message()]

    def _handle_event(self, msg: dict) -> list[dict]:
        event = event_from_dict(msg.get("event") or {})
        if isinstance(event, StrokePoint):
            return self._apply_pose(event)
        if isinstance(event, StrokeBegin):
            self.session.apply_event(event)
            params = self.session.open_stroke_params
            assert params is not None
            brush, width = params
            self._live = _LiveStroke(
                builder=RibbonBuilder(brush, width, self.session.epsilon))
            return self._metrics_update()
        if isinstance(event, StrokeEnd):
            self.session.apply_event(event)
            self._live = None
            return self._metrics_update(force=True)
        if isinstance(event, (Undo, Redo, Erase)):
            self.session.apply_event(event)
            out = [self.snapshot_message()]
            out.extend(self._metrics_update(force=True))
            return out
        if isinstance(event, SetBrush):
            self.session.apply_event(event)
            return self._metrics_update()
        raise ProtocolError(f"unsupported event {event!r}")

    def _handle_pose(self, msg: dict) -> list[dict]:
        return self._apply_pose(StrokePoint(pose=pose_from_dict(msg)))

    def _apply_pose(self, event: StrokePoint) -> list[dict]:
        if self._live is None or not self.session.stroke_open:
            raise ProtocolError("pose outside an open stroke")
        live = self._live
        prev_pose = live.poses[-1] if live.poses else None
        self.session.apply_event(event)  # validates ordering, appends to stroke
        live.poses.append(event.pose)
        if prev_pose is not None:
            axis, angle = rotation_between(prev_pose.orientation, event.pose.orientation)
            frame = frame_of(prev_pose)
            vx, vy, vz = axis.x * angle, axis.y * angle, axis.z * angle
            self._effort[0] += abs(vx * frame.side.x + vy * frame.side.y + vz * frame.side.z)
            self._effort[1] += abs(vx * frame.up.x + vy * frame.up.y + vz * frame.up.z)
            self._effort[2] += abs(vx * frame.forward.x + vy * frame.forward.y
                                   + vz * frame.forward.z)
            self._effort_steps += 1

        before = len(live.builder.rulings)
        new_rulings = live.builder.feed(event.pose)
        out: list[dict] = []
        if new_rulings:
            after = len(live.builder.rulings)
            new_quads = max(0, after - 1) - max(0, before - 1)
            divergence = []
            for qi in range(max(0, before - 1), max(0, after - 1)):
                raw = quad_raw_normal(live.builder.rulings[qi], live.builder.rulings[qi + 1])
                if raw is None:
                    continue
                src = live.builder.rulings[qi + 1].source_pose_index
                up = frame_of(live.poses[src]).up
                d = abs(raw.normalized().dot(up))
                divergence.append(math.acos(min(1.0, d)))
            live.divergence_sum += sum(divergence)
            live.divergence_count += len(divergence)
            out.append(self._out(
                "ribbon_delta",
                stroke_open=True,
                start_index=before,
                rulings=[_ruling_doc(r) for r in new_rulings],
                quads=new_quads,
                divergence=divergence,
            ))
        out.extend(self._metrics_update())
        return out


# ---------------------------------------------------------------------------
# FastAPI app
# ---------------------------------------------------------------------------


def create_app(ui_dir: str | None = None):
    """Build the FastAPI app: /ws protocol endpoint, /health, downloads, UI."""
    import io
    import json as _json
    import os

    from fastapi import FastAPI
    from fastapi.responses import (HTMLResponse, JSONResponse,
                                   PlainTextResponse, Response)

    from .objio import write_obj

    app = FastAPI(title="ribbonlab service")
    started = time.monotonic()
    live_sessions: dict[int, ServiceSession] = {}

    @app.get("/health")
    def health():
        return {"version": __version__, "uptime_s": time.monotonic() - started}

    @app.get("/sessions/{sid}/session.json")
    def session_json(sid: int):
        state = live_sessions.get(sid)
        if state is None:
            return JSONResponse({"error": "unknown session"}, status_code=404)
        return JSONResponse(state.session.save_doc())

    @app.get("/sessions/{sid}/poses.jsonl")
    def poses_jsonl(sid: int):
        state = live_sessions.get(sid)
        if state is None:
            return JSONResponse({"error": "unknown session"}, status_code=404)
        lines = []
        for stroke in state.session.strokes:
            for pose in stroke.poses:
                lines.append(_json.dumps(pose_to_dict(pose), sort_keys=True,
                                         separators=(",", ":")))
        return PlainTextResponse("\n".join(lines) + ("\n" if lines else ""))

    @app.get("/sessions/{sid}/drawing.obj")
    def drawing_obj(sid: int):
        state = live_sessions.get(sid)
        if state is None:
            return JSONResponse({"error": "unknown session"}, status_code=404)
        buf = io.StringIO()
        write_obj([s.strip for s in state.session.strokes], buf)
        return Response(buf.getvalue(), media_type="model/obj")

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        state = ServiceSession()
        live_sessions[state.session_id] = state
        try:
            while True:
                text = await ws.receive_text()
                try:
                    msg = _json.loads(text)
                except _json.JSONDecodeError as exc:
                    await ws.send_text(_json.dumps(state._error(f"bad JSON: {exc}")))
                    continue
                for out in state.handle_message(msg):
                    await ws.send_text(_json.dumps(out))
        except WebSocketDisconnect:
            pass
        finally:
            live_sessions.pop(state.session_id, None)

    if ui_dir and os.path.isdir(ui_dir):
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    else:
        @app.get("/")
        def index():
            return HTMLResponse(
                "<html><body><h1>ribbonlab service</h1>"
                "<p>No UI bundle found. Build the frontend and pass its dist "
                "directory via <code>ribbonlab serve --ui-dir</code>.</p>"
                "</body></html>")

    return app


def serve(port: int = 8765, host: str = "127.0.0.1", ui_dir: str | None = None) -> None:
    import uvicorn
    uvicorn.run(create_app(ui_dir=ui_dir), host=host, port=port, log_level="warning")
