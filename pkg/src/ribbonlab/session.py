"""Drawing-session state machine: strokes, undo/redo/erase with correction
counting, and persistence.

Correction accounting mirrors the study protocol: every applied undo,
redo, or erase increments correction_count by one; undo/redo on an empty
stack change nothing and are not counted. Undo granularity is the whole
stroke, and erase removes a whole named stroke (restorable by undo).

File formats:

- pose stream: JSON lines, {"t": s, "p": [x,y,z], "q": [w,x,y,z], "trig": bool}
- event log: JSON lines, one {"type": ...} object per event
- session save: one canonical JSON document {meta, events, built_strokes_digest}
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .brush import (DEFAULT_EPSILON, DEFAULT_WIDTH, BrushKind, RibbonStrip,
                    build_ribbon)
from .errors import (ContractError, InvalidPoseError, ParseError,
                     ProtocolError, StrokeNotFoundError)
from .geom import Pose, UnitQuat, Vec3

FORMAT_VERSION = 1


# ---------------------------------------------------------------------------
# events
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StrokeBegin:
    brush: BrushKind | None = None   # None -> session's active brush
    width: float | None = None       # None -> session default width


@dataclass(frozen=True)
class StrokePoint:
    pose: Pose


@dataclass(frozen=True)
class StrokeEnd:
    pass


@dataclass(frozen=True)
class Undo:
    pass


@dataclass(frozen=True)
class Redo:
    pass


@dataclass(frozen=True)
class Erase:
    stroke_id: int


@dataclass(frozen=True)
class SetBrush:
    brush: BrushKind


SessionEvent = StrokeBegin | StrokePoint | StrokeEnd | Undo | Redo | Erase | SetBrush


def event_to_dict(event: SessionEvent) -> dict:
    if isinstance(event, StrokeBegin):
        d: dict = {"type": "stroke_begin"}
        if event.brush is not None:
            d["brush"] = event.brush.value
        if event.width is not None:
            d["width"] = event.width
        return d
    if isinstance(event, StrokePoint):
        p = event.pose
        return {"type": "stroke_point", "t": p.timestamp,
                "p": list(p.position.as_tuple()),
                "q": list(p.orientation.as_tuple()), "trig": p.trigger}
    if isinstance(event, StrokeEnd):
        return {"type": "stroke_end"}
    if isinstance(event, Undo):
        return {"type": "undo"}
    if isinstance(event, Redo):
        return {"type": "redo"}
    if isinstance(event, Erase):
        return {"type": "erase", "stroke": event.stroke_id}
    if isinstance(event, SetBrush):
        return {"type": "set_brush", "brush": event.brush.value}
    raise ContractError(f"unknown event {event!r}")


def event_from_dict(d: dict) -> SessionEvent:
    try:
        kind = d["type"]
    except (KeyError, TypeError):
        raise ParseError("event object lacks a 'type' tag")
    if kind == "stroke_begin":
        brush = BrushKind(d["brush"]) if "brush" in d else None
        width = float(d["width"]) if "width" in d else None
        return StrokeBegin(brush=brush, width=width)
    if kind == "stroke_point":
        return StrokePoint(pose=pose_from_dict(d))
    if kind == "stroke_end":
        return StrokeEnd()
    if kind == "undo":
        return Undo()
    if kind == "redo":
        return Redo()
    if kind == "erase":
        return Erase(stroke_id=int(d["stroke"]))
    if kind == "set_brush":
        return SetBrush(brush=BrushKind(d["brush"]))
    raise ParseError(f"unknown event type {kind!r}")


def pose_to_dict(pose: Pose) -> dict:
    return {"t": pose.timestamp, "p": list(pose.position.as_tuple()),
            "q": list(pose.orientation.as_tuple()), "trig": pose.trigger}


def pose_from_dict(d: dict) -> Pose:
    try:
        px, py, pz = (float(x) for x in d["p"])
        qw, qx, qy, qz = (float(x) for x in d["q"])
        pose = Pose(position=Vec3(px, py, pz),
                    orientation=UnitQuat(qw, qx, qy, qz),
                    timestamp=float(d["t"]),
                    trigger=bool(d.get("trig", True)))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed pose record: {exc}")
    if not all(math.isfinite(x) for x in (px, py, pz, qw, qx, qy, qz, pose.timestamp)):
        raise ParseError("pose record contains non-finite values")
    if not pose.orientation.is_unit():
        raise InvalidPoseError(
            f"orientation norm {pose.orientation.norm():.12f} is not unit")
    if pose.timestamp < 0:
        raise ParseError("pose timestamp must be >= 0")
    return pose


# ---------------------------------------------------------------------------
# session state
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Stroke:
    stroke_id: int
    brush: BrushKind
    width: float
    poses: tuple[Pose, ...]
    strip: RibbonStrip


class _Command:
    """Reversible stroke-list edit for the undo/redo stacks."""

    def undo(self, session: "Session") -> None:
        raise NotImplementedError

    def redo(self, session: "Session") -> None:
        raise NotImplementedError


@dataclass
class _AddStroke(_Command):
    stroke: Stroke
    index: int

    def undo(self, session: "Session") -> None:
        session.strokes.pop(self.index)

    def redo(self, session: "Session") -> None:
        session.strokes.insert(self.index, self.stroke)


@dataclass
class _EraseStroke(_Command):
    stroke: Stroke
    index: int

    def undo(self, session: "Session") -> None:
        session.strokes.insert(self.index, self.stroke)

    def redo(self, session: "Session") -> None:
        session.strokes.pop(self.index)


class Session:
    """Single-writer drawing session.

    Events are applied strictly in order from one source; the full event
    log is retained so the live state is always reconstructible by replay.
    """

    def __init__(self, width: float = DEFAULT_WIDTH, epsilon: float = DEFAULT_EPSILON,
                 brush: BrushKind = BrushKind.STRIP):
        self.width = width
        self.epsilon = epsilon
        self.brush = BrushKind(brush)
        self.initial_brush = self.brush
        self.strokes: list[Stroke] = []
        self.correction_count = 0
        self.events: list[SessionEvent] = []
        self._undo_stack: list[_Command] = []
        self._redo_stack: list[_Command] = []
        self._next_id = 0
        self._open: tuple[BrushKind, float, list[Pose]] | None = None

    # -- inspection ----------------------------------------------------------

    @property
    def stroke_open(self) -> bool:
        return self._open is not None

    @property
    def open_stroke_params(self) -> tuple[BrushKind, float] | None:
        """(brush, width) of the currently open stroke, if any."""
        if self._open is None:
            return None
        return (self._open[0], self._open[1])

    @property
    def undo_depth(self) -> int:
        return len(self._undo_stack)

    @property
    def redo_depth(self) -> int:
        return len(self._redo_stack)

    def live_stroke_ids(self) -> list[int]:
        return [s.stroke_id for s in self.strokes]

    @property
    def started_at(self) -> float | None:
        for ev in self.events:
            if isinstance(ev, StrokePoint):
                return ev.pose.timestamp
        return None

    @property
    def elapsed(self) -> float:
        """Span of pose timestamps carried in the log, seconds."""
        ts = [ev.pose.timestamp for ev in self.events if isinstance(ev, StrokePoint)]
        if len(ts) < 2:
            return 0.0
        return max(ts) - min(ts)

    # -- event application ----------------------------------------------------

    def apply_event(self, event: SessionEvent) -> "Session":
        """Apply one event, mutating and returning this session."""
        if isinstance(event, StrokeBegin):
            if self._open is not None:
                raise ProtocolError("stroke already open")
            brush = event.brush if event.brush is not None else self.brush
            width = event.width if event.width is not None else self.width
            if width <= 0:
                raise ContractError("stroke width must be positive")
            self._open = (BrushKind(brush), float(width), [])
        elif isinstance(event, StrokePoint):
            if self._open is None:
                raise ProtocolError("stroke point outside an open stroke")
            pose = event.pose
            if not pose.trigger:
                raise ProtocolError("stroke points must have the trigger engaged")
            if not pose.orientation.is_unit():
                raise InvalidPoseError("stroke point carries a non-unit orientation")
            points = self._open[2]
            if points and pose.timestamp <= points[-1].timestamp:
                raise ProtocolError("pose timestamps must be strictly increasing")
            points.append(pose)
        elif isinstance(event, StrokeEnd):
            if self._open is None:
                raise ProtocolError("no open stroke to end")
            brush, width, points = self._open
            self._open = None
            strip = build_ribbon(points, brush, width, self.epsilon)
            stroke = Stroke(stroke_id=self._next_id, brush=brush, width=width,
                            poses=tuple(points), strip=strip)
            self._next_id += 1
            cmd = _AddStroke(stroke=stroke, index=len(self.strokes))
            self.strokes.append(stroke)
            self._undo_stack.append(cmd)
            self._redo_stack.clear()
        elif isinstance(event, Undo):
            if self._undo_stack:
                cmd = self._undo_stack.pop()
                cmd.undo(self)
                self._redo_stack.append(cmd)
                self.correction_count += 1
        elif isinstance(event, Redo):
            if self._redo_stack:
                cmd = self._redo_stack.pop()
                cmd.redo(self)
                self._undo_stack.append(cmd)
                self.correction_count += 1
        elif isinstance(event, Erase):
            index = next((i for i, s in enumerate(self.strokes)
                          if s.stroke_id == event.stroke_id), None)
            if index is None:
                raise StrokeNotFoundError(f"no live stroke with id {event.stroke_id}")
            stroke = self.strokes.pop(index)
            self._undo_stack.append(_EraseStroke(stroke=stroke, index=index))
            self._redo_stack.clear()
            self.correction_count += 1
        elif isinstance(event, SetBrush):
            self.brush = BrushKind(event.brush)
        else:
            raise ContractError(f"unknown event {event!r}")
        self.events.append(event)
        return self

    # -- digests & persistence -------------------------------------------------

    def strokes_digest(self) -> str:
        """SHA-256 over the canonical serialization of all live ribbons."""
        doc = [_strip_doc(s) for s in self.strokes]
        blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return "sha256:" + hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def state_doc(self) -> dict:
        """Canonical live-state document (used for equality in tests and snapshots)."""
        return {
            "brush": self.brush.value,
            "correction_count": self.correction_count,
            "strokes": [_strip_doc(s) for s in self.strokes],
            "stroke_open": self.stroke_open,
        }

    def save_doc(self) -> dict:
        return {
            "meta": {
                "version": FORMAT_VERSION,
                "width": self.width,
                "epsilon": self.epsilon,
                "brush": self.brush.value,
                "initial_brush": self.initial_brush.value,
                "correction_count": self.correction_count,
                "started_at": self.started_at,
                "elapsed": self.elapsed,
            },
            "events": [event_to_dict(ev) for ev in self.events],
            "built_strokes_digest": self.strokes_digest(),
        }


def _strip_doc(stroke: Stroke) -> dict:
    return {
        "id": stroke.stroke_id,
        "brush": stroke.brush.value,
        "width": stroke.width,
        "rulings": [
            {"left": list(r.left.as_tuple()), "right": list(r.right.as_tuple()),
             "center": list(r.center.as_tuple()), "pose": r.source_pose_index}
            for r in stroke.strip.rulings
        ],
    }


def replay(events: Iterable[SessionEvent], width: float = DEFAULT_WIDTH,
           epsilon: float = DEFAULT_EPSILON,
           brush: BrushKind = BrushKind.STRIP) -> Session:
    """Deterministically reconstruct a session from an event log."""
    session = Session(width=width, epsilon=epsilon, brush=brush)
    for event in events:
        session.apply_event(event)
    return session


# ---------------------------------------------------------------------------
# files
# ---------------------------------------------------------------------------


def _canonical_dumps(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def write_pose_jsonl(poses: Sequence[Pose], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for pose in poses:
            fh.write(_canonical_dumps(pose_to_dict(pose)).rstrip("\n") + "\n")


def read_pose_jsonl(path: str) -> list[Pose]:
    poses: list[Pose] = []
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(str(exc), line=i)
            try:
                poses.append(pose_from_dict(d))
            except (ParseError, InvalidPoseError) as exc:
                raise ParseError(str(exc), line=i)
    return poses


def write_event_log(events: Sequence[SessionEvent], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ev in events:
            fh.write(_canonical_dumps(event_to_dict(ev)).rstrip("\n") + "\n")


def read_event_log(path: str) -> list[SessionEvent]:
    events: list[SessionEvent] = []
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(str(exc), line=i)
            try:
                events.append(event_from_dict(d))
            except (ParseError, InvalidPoseError, ValueError) as exc:
                raise ParseError(str(exc), line=i)
    return events


def save_session(session: Session, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_canonical_dumps(session.save_doc()))


def load_session(path: str) -> Session:
    """Load a saved session by replaying its embedded event log.

    The stored ribbon digest is recomputed and verified, so geometry
    drift between writer and reader fails loudly.
    """
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(str(exc))
    try:
        meta = doc["meta"]
        events = [event_from_dict(d) for d in doc["events"]]
        stored = doc["built_strokes_digest"]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed session document: {exc}")
    session = replay(events, width=float(meta.get("width", DEFAULT_WIDTH)),
                     epsilon=float(meta.get("epsilon", DEFAULT_EPSILON)),
                     brush=BrushKind(meta.get("initial_brush", meta.get("brush", "strip"))))
    if session.strokes_digest() != stored:
        raise ContractError("session digest mismatch: stored geometry differs from replay")
    return session
