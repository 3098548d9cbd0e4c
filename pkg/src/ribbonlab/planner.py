"""Stroke planner: synthesizes pose streams that surface a reference shape
with side-by-side strokes under either brush model.

Each brush constrains one controller axis exactly (normal brush: up axis
equals the surface normal; strip brush: side axis equals the intended
ruling direction, the surface tangent orthogonal to the path tangent).
The remaining rotation about that axis is free, and the planner picks it
to minimize the same weighted rotation-vector cost the wrist-effort
metric charges, one step at a time. The resulting chains are idealized
minimal-rotation lower bounds for each brush, which is the fair basis for
comparing them.

Stroke topology per shape: straight parallel paths on planar shapes,
generators on cone/cylinder, meridians on sphere-like shapes, tube loops
on the torus, iso-lines on the saddle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .brush import BrushKind
from .errors import ContractError, SingularityError
from .geom import Pose, UnitQuat, Vec3, quat_between_vectors
from .metrics import DEFAULT_WEIGHTS
from .surfaces import ReferenceSurface

DEFAULT_OVERLAP = 0.2
DEFAULT_SPEED = 0.5              # m/s along the stroke path
DEFAULT_SAMPLES_PER_STROKE = 200

_COARSE_SCAN = 64                # free-angle scan resolution over [-pi, pi)
_GOLDEN_TOL = 1e-7               # radians
_FIXED_POINT_TOL = 1e-9          # constraint already satisfied -> keep prev


@dataclass(frozen=True)
class StrokePlan:
    surface_id: str
    brush: BrushKind
    uv_paths: tuple[np.ndarray, ...]   # each (n, 2) float array
    spacing: float
    overlap: float
    samples_per_stroke: int


# ---------------------------------------------------------------------------
# coverage planning
# ---------------------------------------------------------------------------


def _cross_arc_table(surface: ReferenceSurface, n: int = 1024) -> tuple[np.ndarray, np.ndarray]:
    """Cross-parameter grid and cumulative world arc across strokes.

    The local stretch at cross value w is the maximum |dS/d(cross)| along
    the stroke at w, so marching by stride in arc units keeps adjacent
    paths at most stride apart in world space.
    """
    shape = surface.shape
    cross_is_v = shape.stroke_cross == "v"
    u0, u1, v0, v1 = surface.domain
    w_lo, w_hi = (v0, v1) if cross_is_v else (u0, u1)
    periodic = shape.v_periodic if cross_is_v else shape.u_periodic
    ws = np.linspace(w_lo, w_hi, n, endpoint=not periodic)
    stretch = np.empty(n)
    for i, w in enumerate(ws):
        a, b = shape.along_interval(w)
        mid = np.linspace(a, b, 17) if b > a else np.array([(a + b) / 2.0])
        if cross_is_v:
            _, Su, Sv, *_ = shape.derivs(mid, np.full_like(mid, w))
            d = Sv
        else:
            _, Su, Sv, *_ = shape.derivs(np.full_like(mid, w), mid)
            d = Su
        stretch[i] = float(np.max(np.linalg.norm(d, axis=-1)))
    dw = np.diff(ws, append=ws[-1] + (ws[1] - ws[0]) if periodic else ws[-1:])
    if periodic:
        seg = 0.5 * (stretch + np.roll(stretch, -1)) * (ws[1] - ws[0])
        arc = np.concatenate([[0.0], np.cumsum(seg)])
        ws = np.concatenate([ws, [w_hi]])
    else:
        seg = 0.5 * (stretch[:-1] + stretch[1:]) * np.diff(ws)
        arc = np.concatenate([[0.0], np.cumsum(seg)])
    return ws, arc


def _sample_path_by_arc(surface: ReferenceSurface, w: float, samples: int) -> np.ndarray | None:
    """Arc-length-uniform (u, v) polyline for the stroke at cross value w."""
    shape = surface.shape
    a, b = shape.along_interval(w)
    if not (b - a > 0):
        return None
    fine = np.linspace(a, b, max(4 * samples, 64))
    if shape.stroke_cross == "v":
        uv = np.stack([fine, np.full_like(fine, w)], axis=-1)
    else:
        uv = np.stack([np.full_like(fine, w), fine], axis=-1)
    pts = surface.evaluate_many(uv[:, 0], uv[:, 1])
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=-1)
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    total = float(arc[-1])
    if total < 1e-9:
        return None
    targets = np.linspace(0.0, total, samples)
    along = np.interp(targets, arc, fine)
    if shape.stroke_cross == "v":
        return np.stack([along, np.full_like(along, w)], axis=-1)
    return np.stack([np.full_like(along, w), along], axis=-1)


def coverage_plan(surface: ReferenceSurface, width: float,
                  overlap: float = DEFAULT_OVERLAP,
                  brush: BrushKind = BrushKind.STRIP,
                  samples_per_stroke: int = DEFAULT_SAMPLES_PER_STROKE,
                  spacing: float | None = None) -> StrokePlan:
    """Iso-parameter stroke paths spaced so adjacent ribbons overlap.

    Stride between path centerlines is width * (1 - overlap) unless an
    explicit spacing is given. A shape narrower than the ribbon collapses
    to a single-stroke plan. The construction is verified by sampling: if
    any domain point ends up farther than width/2 from every path, the
    stride is halved and the plan rebuilt (at most 3 times).
    """
    if width <= 0:
        raise ContractError("width must be positive")
    if not (0 <= overlap < 1):
        raise ContractError("overlap must lie in [0, 1)")
    stride = spacing if spacing is not None else width * (1.0 - overlap)
    if stride <= 0:
        raise ContractError("stroke spacing must be positive")

    shape = surface.shape
    cross_is_v = shape.stroke_cross == "v"
    periodic = shape.v_periodic if cross_is_v else shape.u_periodic
    ws, arc = _cross_arc_table(surface)
    total = float(arc[-1])

    for _ in range(4):
        if periodic:
            k = max(1, int(math.ceil(total / stride)))
            targets = np.arange(k) * (total / k)
        elif width >= total:
            targets = np.array([total / 2.0])
        else:
            k = int(math.ceil((total - width) / stride)) + 1
            targets = width / 2.0 + np.arange(k) * stride
        cross_values = np.interp(targets, arc, ws)
        paths = []
        for w in cross_values:
            path = _sample_path_by_arc(surface, float(w), samples_per_stroke)
            if path is not None:
                paths.append(path)
        if not paths:
            raise ContractError(f"no usable stroke paths on {surface.kind}")
        if _plan_covers(surface, paths, width):
            break
        stride *= 0.5
    return StrokePlan(
        surface_id=surface.kind,
        brush=BrushKind(brush),
        uv_paths=tuple(paths),
        spacing=float(stride),
        overlap=float(overlap),
        samples_per_stroke=int(samples_per_stroke),
    )


def _plan_covers(surface: ReferenceSurface, paths: list[np.ndarray], width: float,
                 check_points: int = 2048) -> bool:
    """Sampled check of the coverage postcondition.

    Distances are measured to the discrete path samples, which overstate
    the distance to the continuous path by at most half the largest
    along-path segment; the allowance below accounts for that.
    """
    pts_per_path = [surface.evaluate_many(p[:, 0], p[:, 1]) for p in paths]
    seg_max = max(float(np.max(np.linalg.norm(np.diff(p, axis=0), axis=-1)))
                  for p in pts_per_path if len(p) > 1)
    pts = np.concatenate(pts_per_path)
    grid, _ = surface.sample_grid(check_points)
    d, _ = cKDTree(pts).query(grid)
    return bool(np.max(d) <= width / 2.0 + seg_max / 2.0 + 1e-9)


# ---------------------------------------------------------------------------
# free-angle orientation choice
# ---------------------------------------------------------------------------


def _constraint(normal: Vec3, path_tangent: Vec3, brush: BrushKind) -> tuple[Vec3, Vec3]:
    """(local canonical axis, world target direction) for the brush constraint."""
    if BrushKind(brush) is BrushKind.NORMAL:
        return Vec3(0.0, 1.0, 0.0), normal
    ruling = normal.cross(path_tangent)
    if ruling.norm() < 1e-9:
        raise SingularityError("ruling direction undefined: tangent parallel to normal")
    return Vec3(1.0, 0.0, 0.0), ruling.normalized()


def _step_cost_terms(prev: UnitQuat, q_base: UnitQuat, target: Vec3):
    """Constants for cost(theta) of rot(target, theta) * q_base relative to prev.

    The relative rotation is linear in (cos(theta/2), sin(theta/2)):
    r(theta) = cos(theta/2) * C + sin(theta/2) * (0, target) * C.
    """
    c = q_base.multiply(prev.conjugate())
    t = UnitQuat(0.0, target.x, target.y, target.z)
    b = t.multiply(c)
    prev_s = prev.rotate(Vec3(1.0, 0.0, 0.0))
    prev_u = prev.rotate(Vec3(0.0, 1.0, 0.0))
    prev_f = prev.rotate(Vec3(0.0, 0.0, 1.0))
    return c.as_tuple(), b.as_tuple(), prev_s, prev_u, prev_f


def _cost_scalar(theta: float, cq, bq, s: Vec3, u: Vec3, f: Vec3,
                 weights: tuple[float, float, float]) -> float:
    ch = math.cos(0.5 * theta)
    sh = math.sin(0.5 * theta)
    rw = ch * cq[0] + sh * bq[0]
    rx = ch * cq[1] + sh * bq[1]
    ry = ch * cq[2] + sh * bq[2]
    rz = ch * cq[3] + sh * bq[3]
    if rw < 0.0:
        rw, rx, ry, rz = -rw, -rx, -ry, -rz
    vn = math.sqrt(rx * rx + ry * ry + rz * rz)
    if vn == 0.0:
        return 0.0
    scale = 2.0 * math.atan2(vn, rw) / vn
    vx, vy, vz = rx * scale, ry * scale, rz * scale
    return (weights[0] * abs(vx * s.x + vy * s.y + vz * s.z)
            + weights[1] * abs(vx * u.x + vy * u.y + vz * u.z)
            + weights[2] * abs(vx * f.x + vy * f.y + vz * f.z))


def _cost_array(thetas: np.ndarray, cq, bq, s: Vec3, u: Vec3, f: Vec3,
                weights: tuple[float, float, float]) -> np.ndarray:
    ch = np.cos(0.5 * thetas)
    sh = np.sin(0.5 * thetas)
    r = ch[:, None] * np.array(cq) + sh[:, None] * np.array(bq)
    flip = r[:, 0] < 0.0
    r[flip] *= -1.0
    vn = np.linalg.norm(r[:, 1:], axis=-1)
    scale = np.where(vn > 0.0, 2.0 * np.arctan2(vn, r[:, 0]) / np.maximum(vn, 1e-300), 0.0)
    v = r[:, 1:] * scale[:, None]
    axes = np.array([s.as_tuple(), u.as_tuple(), f.as_tuple()])
    comps = np.abs(v @ axes.T)
    return comps @ np.array(weights, dtype=float)


def _golden_min(fn, a: float, b: float, tol: float) -> tuple[float, float]:
    """Golden-section minimum of fn on [a, b]; returns (x, fn(x))."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    inv_phi2 = (3.0 - math.sqrt(5.0)) / 2.0
    h = b - a
    if h <= tol:
        x = 0.5 * (a + b)
        return x, fn(x)
    n = int(math.ceil(math.log(tol / h) / math.log(inv_phi)))
    c = a + inv_phi2 * h
    d = a + inv_phi * h
    yc = fn(c)
    yd = fn(d)
    for _ in range(n - 1):
        if yc < yd:
            b, d, yd = d, c, yc
            h *= inv_phi
            c = a + inv_phi2 * h
            yc = fn(c)
        else:
            a, c, yc = c, d, yd
            h *= inv_phi
            d = a + inv_phi * h
            yd = fn(d)
    return (c, yc) if yc < yd else (d, yd)


def orient_for_brush(surface: ReferenceSurface, uv: tuple[float, float],
                     path_tangent: Vec3, brush: BrushKind,
                     prev_orientation: UnitQuat | None,
                     weights: tuple[float, float, float] = DEFAULT_WEIGHTS) -> UnitQuat:
    """Controller orientation satisfying the brush constraint exactly, with
    the free rotation about the constrained axis chosen to minimize the
    single-step wrist cost from the previous orientation.

    With no previous orientation the free angle instead points the forward
    axis as close as possible to the path tangent (closed form). If the
    previous orientation already satisfies the constraint it is returned
    unchanged (step cost exactly zero).
    """
    normal = surface.normal(uv[0], uv[1])  # raises SingularityError at poles/apex
    return _orient(normal, path_tangent, brush, prev_orientation, weights)


def _orient(normal: Vec3, path_tangent: Vec3, brush: BrushKind,
            prev_orientation: UnitQuat | None,
            weights: tuple[float, float, float]) -> UnitQuat:
    tangent = path_tangent.normalized()
    axis_local, target = _constraint(normal, tangent, brush)

    if prev_orientation is not None:
        prev_axis = prev_orientation.rotate(axis_local)
        if (prev_axis - target).norm() < _FIXED_POINT_TOL:
            return prev_orientation

    q_base = quat_between_vectors(axis_local, target)

    if prev_orientation is None:
        f0 = q_base.rotate(Vec3(0.0, 0.0, 1.0))
        a = f0.dot(tangent)
        b = target.cross(f0).dot(tangent)
        theta = math.atan2(b, a) if (a != 0.0 or b != 0.0) else 0.0
        return UnitQuat.from_axis_angle(target, theta).multiply(q_base).normalized().canonical()

    cq, bq, s, u, f = _step_cost_terms(prev_orientation, q_base, target)
    thetas = np.linspace(-math.pi, math.pi, _COARSE_SCAN, endpoint=False)
    costs = _cost_array(thetas, cq, bq, s, u, f, weights)
    j = int(np.argmin(costs))
    span = 2.0 * math.pi / _COARSE_SCAN
    theta_g, cost_g = _golden_min(
        lambda th: _cost_scalar(th, cq, bq, s, u, f, weights),
        float(thetas[j]) - span, float(thetas[j]) + span, _GOLDEN_TOL)
    theta = theta_g if cost_g <= float(costs[j]) else float(thetas[j])
    return UnitQuat.from_axis_angle(target, theta).multiply(q_base).normalized().canonical()


# ---------------------------------------------------------------------------
# pose synthesis
# ---------------------------------------------------------------------------


def plan_to_poses(plan: StrokePlan, surface: ReferenceSurface,
                  speed: float = DEFAULT_SPEED,
                  weights: tuple[float, float, float] = DEFAULT_WEIGHTS,
                  start_time: float = 0.0,
                  diagnostics: list[str] | None = None) -> list[list[Pose]]:
    """Sample every planned path into a timed, oriented pose stream.

    Paths are already arc-length-uniform; timestamps advance at the given
    speed, the trigger is engaged within strokes and released between them
    (no samples are emitted between strokes), and orientations chain
    through orient_for_brush along each stroke. Samples at singular points
    are skipped with a diagnostic.
    """
    if speed <= 0:
        raise ContractError("speed must be positive")
    streams: list[list[Pose]] = []
    t = start_time
    last_point: Vec3 | None = None
    for path in plan.uv_paths:
        pts = surface.evaluate_many(path[:, 0], path[:, 1])
        n = len(pts)
        if n < 2:
            continue
        tangents = np.empty_like(pts)
        tangents[1:-1] = pts[2:] - pts[:-2]
        tangents[0] = pts[1] - pts[0]
        tangents[-1] = pts[-1] - pts[-2]
        norms = np.linalg.norm(tangents, axis=-1, keepdims=True)
        tangents = tangents / np.maximum(norms, 1e-300)
        normals = surface.normals_many(path[:, 0], path[:, 1])

        if last_point is not None:
            gap = float(np.linalg.norm(pts[0] - np.array(last_point.as_tuple())))
            t += max(gap / speed, 1e-6)
        stream: list[Pose] = []
        prev_q: UnitQuat | None = None
        seg = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(pts, axis=0), axis=-1))])
        for j in range(n):
            if not np.all(np.isfinite(normals[j])):
                if diagnostics is not None:
                    diagnostics.append(
                        f"stroke {len(streams)} sample {j}: singular surface point")
                continue
            normal = Vec3(float(normals[j, 0]), float(normals[j, 1]), float(normals[j, 2]))
            tangent = Vec3(float(tangents[j, 0]), float(tangents[j, 1]), float(tangents[j, 2]))
            try:
                q = _orient(normal, tangent, plan.brush, prev_q, weights)
            except SingularityError as exc:
                if diagnostics is not None:
                    diagnostics.append(f"stroke {len(streams)} sample {j}: {exc}")
                continue
            prev_q = q
            ts = t + float(seg[j]) / speed + j * 1e-12
            stream.append(Pose(
                position=Vec3(float(pts[j, 0]), float(pts[j, 1]), float(pts[j, 2])),
                orientation=q,
                timestamp=ts,
                trigger=True,
            ))
        if len(stream) >= 2:
            streams.append(stream)
            t = stream[-1].timestamp
            last_point = stream[-1].position
    return streams
