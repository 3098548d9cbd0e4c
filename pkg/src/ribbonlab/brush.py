"""Ribbon brush kernels: ruled quad-strip geometry from pose streams.

Two brush models are implemented:

- normal brush: the classic disk interface. Each ruling direction is
  n_c x (p_cur - p_prev) where n_c is the controller up axis, so rulings
  stay orthogonal to the swept trajectory but the resulting ribbon normal
  need not match the controller normal.
- strip brush: the ruling is the controller side axis itself, centered at
  the tip. Rulings are free to be non-orthogonal to the trajectory.

Both kernels share the resample gate (a new ruling only after the tip has
moved at least epsilon from the previous one) and produce RibbonStrip
values whose quads connect consecutive ruling endpoints.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import ContractError, DegenerateMotionError, ZeroCrossError
from .geom import Pose, Vec3, frame_of

DEFAULT_WIDTH = 0.03     # meters; commercial-scale default, CLI-overridable
DEFAULT_EPSILON = 0.005  # meters; resample gate distance

_CROSS_TOL = 1e-9
_DEGENERATE_AREA = 1e-14  # m^2; both quad triangles below this = fully degenerate


class BrushKind(str, enum.Enum):
    NORMAL = "normal"
    STRIP = "strip"


@dataclass(frozen=True)
class Ruling:
    """One straight ruling segment: endpoints, midpoint, and source sample index."""

    left: Vec3
    right: Vec3
    center: Vec3
    source_pose_index: int

    @staticmethod
    def from_center(center: Vec3, direction: Vec3, width: float, index: int) -> "Ruling":
        half = direction * (0.5 * width)
        return Ruling(left=center - half, right=center + half, center=center,
                      source_pose_index=index)


@dataclass(frozen=True)
class RibbonStrip:
    """Ordered rulings plus the implied quad mesh of one stroke."""

    rulings: tuple[Ruling, ...]
    width: float
    brush_kind: BrushKind

    @property
    def quad_count(self) -> int:
        return max(0, len(self.rulings) - 1)

    def is_empty(self) -> bool:
        return len(self.rulings) == 0

    def quad(self, i: int) -> tuple[Vec3, Vec3, Vec3, Vec3]:
        """Quad i as (left_i, right_i, right_i+1, left_i+1)."""
        a, b = self.rulings[i], self.rulings[i + 1]
        return (a.left, a.right, b.right, b.left)


def _ruling_from_motion(n_c: Vec3, motion: Vec3, center: Vec3, width: float,
                        index: int) -> Ruling:
    if motion.norm() == 0.0:
        raise DegenerateMotionError("consecutive positions coincide")
    c = n_c.cross(motion.normalized())
    if c.norm() < _CROSS_TOL:
        raise ZeroCrossError("controller normal is parallel to the motion")
    return Ruling.from_center(center, c.normalized(), width, index)


def normal_brush_ruling(n_c: Vec3, p_prev: Vec3, p_cur: Vec3, width: float,
                        index: int = 0) -> Ruling:
    """Ruling at p_cur with direction normalize(n_c x (p_cur - p_prev)).

    Raises DegenerateMotionError when the positions coincide and
    ZeroCrossError when n_c is parallel to the motion (cross norm < 1e-9
    after normalizing the motion).
    """
    if width <= 0.0:
        raise ContractError("ribbon width must be positive")
    return _ruling_from_motion(n_c, p_cur - p_prev, p_cur, width, index)


def strip_brush_ruling(pose: Pose, width: float, index: int = 0) -> Ruling:
    """Ruling along the controller side axis, centered at the tip.

    Independent of the motion direction: the orthogonality constraint of
    the normal brush is deliberately not enforced here.
    """
    if width <= 0.0:
        raise ContractError("ribbon width must be positive")
    frame = frame_of(pose)  # raises InvalidPoseError on bad orientation
    return Ruling.from_center(pose.position, frame.side, width, index)


def resample_gate(last_center: Vec3 | None, candidate_tip: Vec3, epsilon: float) -> bool:
    """True when the candidate tip is at least epsilon away from the last center.

    The first sample of a stroke (no last center) is always accepted;
    the boundary distance == epsilon is accepted.
    """
    if epsilon < 0.0:
        raise ContractError("epsilon must be >= 0")
    if last_center is None:
        return True
    return candidate_tip.distance_to(last_center) >= epsilon


class RibbonBuilder:
    """Incremental ribbon construction; feed poses one at a time.

    The offline build_ribbon and the realtime service share this class,
    which is what makes online and offline geometry bit-identical.

    Normal-brush bootstrapping: the first accepted sample contributes no
    ruling until a second accepted sample defines motion; at that point
    its ruling is emitted retroactively using the first motion vector, so
    after two accepted samples the ribbon has one quad.
    """

    def __init__(self, brush: BrushKind, width: float = DEFAULT_WIDTH,
                 epsilon: float = DEFAULT_EPSILON):
        if width <= 0.0:
            raise ContractError("ribbon width must be positive")
        if epsilon < 0.0:
            raise ContractError("epsilon must be >= 0")
        self.brush = BrushKind(brush)
        self.width = width
        self.epsilon = epsilon
        self.rulings: list[Ruling] = []
        self.diagnostics: list[str] = []
        self._fed = 0
        self._last_t: float | None = None
        self._last_accepted_tip: Vec3 | None = None
        self._pending: tuple[int, Pose] | None = None  # normal brush: sample awaiting motion

    def feed(self, pose: Pose) -> list[Ruling]:
        """Feed one pose; returns the rulings appended by this sample (0..2)."""
        if not pose.trigger:
            raise ContractError("builder expects trigger-engaged samples only")
        if self._last_t is not None and pose.timestamp <= self._last_t:
            raise ContractError("pose timestamps must be strictly increasing")
        self._last_t = pose.timestamp
        index = self._fed
        self._fed += 1

        if not resample_gate(self._last_accepted_tip, pose.position, self.epsilon):
            return []

        if self.brush is BrushKind.STRIP:
            ruling = strip_brush_ruling(pose, self.width, index)
            if not self._append(ruling):
                return []
            self._last_accepted_tip = pose.position
            return [ruling]
        return self._feed_normal(pose, index)

    def _feed_normal(self, pose: Pose, index: int) -> list[Ruling]:
        if self._pending is None and not self.rulings:
            self._pending = (index, pose)
            self._last_accepted_tip = pose.position
            return []

        assert self._last_accepted_tip is not None
        motion = pose.position - self._last_accepted_tip
        if motion.norm() == 0.0:
            self.diagnostics.append(f"sample {index}: consecutive positions coincide")
            return []

        appended: list[Ruling] = []
        if self._pending is not None:
            first_index, first_pose = self._pending
            try:
                first = _ruling_from_motion(frame_of(first_pose).up, motion,
                                            first_pose.position, self.width, first_index)
            except ZeroCrossError as exc:
                self.diagnostics.append(f"sample {first_index}: {exc}")
            else:
                self.rulings.append(first)
                appended.append(first)
            self._pending = None

        try:
            cur = _ruling_from_motion(frame_of(pose).up, motion, pose.position,
                                      self.width, index)
        except ZeroCrossError as exc:
            self.diagnostics.append(f"sample {index}: {exc}")
            return appended
        if self._append(cur):
            appended.append(cur)
            self._last_accepted_tip = pose.position
        return appended

    def _append(self, ruling: Ruling) -> bool:
        """Append unless the new quad would be fully degenerate."""
        if self.rulings and _quad_fully_degenerate(self.rulings[-1], ruling):
            self.diagnostics.append(
                f"sample {ruling.source_pose_index}: skipped, quad fully degenerate")
            return False
        self.rulings.append(ruling)
        return True

    def strip(self) -> RibbonStrip:
        """Ribbon built so far; a lone ruling still counts as content here.

        build_ribbon collapses sub-2-ruling results to the empty ribbon.
        """
        return RibbonStrip(tuple(self.rulings), self.width, self.brush)


def build_ribbon(poses: Iterable[Pose], brush: BrushKind, width: float = DEFAULT_WIDTH,
                 epsilon: float = DEFAULT_EPSILON,
                 diagnostics: list[str] | None = None) -> RibbonStrip:
    """Build a ribbon from a time-ordered, trigger-engaged pose stream.

    Degenerate samples (zero motion, normal parallel to motion, fully
    degenerate quads) are skipped with a diagnostic rather than aborting
    the stroke. Fewer than 2 accepted samples produce an empty ribbon,
    which is a valid result, not an error.
    """
    builder = RibbonBuilder(brush, width, epsilon)
    for pose in poses:
        builder.feed(pose)
    if diagnostics is not None:
        diagnostics.extend(builder.diagnostics)
    strip = builder.strip()
    if len(strip.rulings) < 2:
        return RibbonStrip((), width, BrushKind(brush))
    return strip


def _triangle_cross(a: Vec3, b: Vec3, c: Vec3) -> Vec3:
    return (b - a).cross(c - a)


def _quad_fully_degenerate(r0: Ruling, r1: Ruling) -> bool:
    t1 = _triangle_cross(r0.left, r0.right, r1.right)
    t2 = _triangle_cross(r0.left, r1.right, r1.left)
    return t1.norm() < 2.0 * _DEGENERATE_AREA and t2.norm() < 2.0 * _DEGENERATE_AREA


def quad_raw_normal(r0: Ruling, r1: Ruling) -> Vec3 | None:
    """Unnormalized quad normal: sum of the two triangle normals.

    With the shared-diagonal triangulation this equals the cross product
    of the quad diagonals. None when fully degenerate.
    """
    t1 = _triangle_cross(r0.left, r0.right, r1.right)
    t2 = _triangle_cross(r0.left, r1.right, r1.left)
    s = t1 + t2
    if s.norm() < 1e-15:
        return None
    return s


def quad_normals(strip: RibbonStrip, diagnostics: list[str] | None = None) -> list[Vec3]:
    """Per-quad unit normals, sign-flipped so consecutive dots stay >= 0.

    Degenerate quads inherit the previous quad's normal (diagnostic
    recorded); a leading run of degenerate quads inherits the first valid
    normal found after it.
    """
    if strip.quad_count < 1:
        raise ContractError("quad_normals requires at least one quad")
    normals: list[Vec3 | None] = []
    for i in range(strip.quad_count):
        raw = quad_raw_normal(strip.rulings[i], strip.rulings[i + 1])
        if raw is None:
            if diagnostics is not None:
                diagnostics.append(f"quad {i}: degenerate, normal carried over")
            normals.append(normals[-1] if normals else None)
        else:
            n = raw.normalized()
            if normals and normals[-1] is not None and n.dot(normals[-1]) < 0.0:
                n = -n
            normals.append(n)
    first_valid = next((n for n in normals if n is not None), None)
    if first_valid is None:
        raise ContractError("all quads are degenerate")
    return [n if n is not None else first_valid for n in normals]


def normal_divergence(strip: RibbonStrip, controller_normals: Sequence[Vec3]) -> list[float]:
    """Per-quad angle between the quad normal and the controller normal, in [0, pi/2].

    Sign folding (|dot|) makes the result independent of either normal's
    orientation. Reported for both kernels; for the strip brush the quad
    normal is simply whatever the swept rulings produce.
    """
    if len(controller_normals) != strip.quad_count:
        raise ContractError(
            f"expected {strip.quad_count} controller normals, got {len(controller_normals)}")
    qns = quad_normals(strip)
    out = []
    for qn, cn in zip(qns, controller_normals):
        d = abs(qn.dot(cn.normalized()))
        out.append(math.acos(min(1.0, d)))
    return out


def controller_normals_for(strip: RibbonStrip, poses: Sequence[Pose]) -> list[Vec3]:
    """Controller up axes for each quad, taken from the pose whose arrival formed it."""
    return [frame_of(poses[r.source_pose_index]).up for r in strip.rulings[1:]]
