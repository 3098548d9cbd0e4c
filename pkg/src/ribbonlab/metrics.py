"""Drawing metrics: geometric accuracy against a reference surface and
kinematic wrist-rotation effort from a pose stream.

The effort model is a kinematic proxy, not a biomechanical one: each
consecutive pose pair contributes its minimal relative rotation, expressed
as a rotation vector in the earlier pose's controller frame, and the
absolute components about the side / up / forward axes accumulate into
pitch / yaw / roll totals. Yaw is weighted heaviest by default because
adjusting it requires twisting the wrist sideways, which has the smallest
comfortable range of motion. Absolute weighted totals are model-dependent;
only comparisons between brushes under identical weights are meaningful.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .brush import RibbonStrip, quad_raw_normal
from .errors import ContractError
from .geom import Pose
from .surfaces import ReferenceSurface

DEFAULT_WEIGHTS = (1.0, 3.0, 1.0)  # (w_pitch, w_yaw, w_roll)


@dataclass(frozen=True)
class EffortReport:
    """Accumulated per-step rotation about the controller's own axes, radians."""

    pitch_total: float
    yaw_total: float
    roll_total: float
    weighted_total: float
    step_count: int
    weights: tuple[float, float, float]

    def __add__(self, other: "EffortReport") -> "EffortReport":
        if self.weights != other.weights:
            raise ContractError("cannot combine effort reports with different weights")
        return EffortReport(
            self.pitch_total + other.pitch_total,
            self.yaw_total + other.yaw_total,
            self.roll_total + other.roll_total,
            self.weighted_total + other.weighted_total,
            self.step_count + other.step_count,
            self.weights,
        )

    @staticmethod
    def zero(weights: tuple[float, float, float] = DEFAULT_WEIGHTS) -> "EffortReport":
        return EffortReport(0.0, 0.0, 0.0, 0.0, 0, tuple(weights))


@dataclass(frozen=True)
class AccuracyReport:
    mean_dist: float
    rms_dist: float
    max_dist: float
    mean_normal_dev: float
    max_normal_dev: float
    coverage_fraction: float
    tau: float
    sample_count: int


def _pose_quats(poses: Sequence[Pose]) -> np.ndarray:
    q = np.array([p.orientation.as_tuple() for p in poses], dtype=float)
    norms = np.linalg.norm(q, axis=-1)
    if np.any(np.abs(norms - 1.0) > 1e-9):
        raise ContractError("pose stream contains non-unit orientations")
    return q


def _quat_rotate_vec(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate constant vector v by each quaternion row of q."""
    w = q[:, 0:1]
    u = q[:, 1:4]
    c = np.cross(u, v[None, :]) + w * v[None, :]
    return v[None, :] + 2.0 * np.cross(u, c)


def wrist_effort(poses: Sequence[Pose],
                 weights: tuple[float, float, float] = DEFAULT_WEIGHTS) -> EffortReport:
    """Accumulate wrist rotation over a pose stream.

    For each consecutive pair the minimal relative rotation is taken, the
    rotation vector (angle * axis) is expressed in the FIRST pose's
    controller frame, and |side|, |up|, |forward| components accumulate
    into pitch, yaw, and roll. This decomposition is order-free, unlike
    sequential Euler extraction, so large steps carry no gimbal artifacts.
    """
    poses = list(poses)
    if len(poses) < 2:
        raise ContractError("wrist_effort needs at least 2 poses")
    w_pitch, w_yaw, w_roll = (float(w) for w in weights)
    if min(w_pitch, w_yaw, w_roll) < 0:
        raise ContractError("effort weights must be >= 0")

    q = _pose_quats(poses)
    a, b = q[:-1], q[1:]
    # r = b * conj(a), vectorized wxyz product
    aw, ax, ay, az = a[:, 0], -a[:, 1], -a[:, 2], -a[:, 3]
    bw, bx, by, bz = b[:, 0], b[:, 1], b[:, 2], b[:, 3]
    rw = bw * aw - bx * ax - by * ay - bz * az
    rx = bw * ax + bx * aw + by * az - bz * ay
    ry = bw * ay + by * aw + bz * ax - bx * az
    rz = bw * az + bz * aw + bx * ay - by * ax
    flip = rw < 0.0
    rw = np.where(flip, -rw, rw)
    rx = np.where(flip, -rx, rx)
    ry = np.where(flip, -ry, ry)
    rz = np.where(flip, -rz, rz)
    vec_norm = np.sqrt(rx * rx + ry * ry + rz * rz)
    angle = 2.0 * np.arctan2(vec_norm, rw)
    scale = np.where(vec_norm > 0.0, angle / np.maximum(vec_norm, 1e-300), 0.0)
    rotvec = np.stack([rx, ry, rz], axis=-1) * scale[:, None]

    side = _quat_rotate_vec(a, np.array([1.0, 0.0, 0.0]))
    up = _quat_rotate_vec(a, np.array([0.0, 1.0, 0.0]))
    fwd = _quat_rotate_vec(a, np.array([0.0, 0.0, 1.0]))
    pitch = float(np.sum(np.abs(np.sum(rotvec * side, axis=-1))))
    yaw = float(np.sum(np.abs(np.sum(rotvec * up, axis=-1))))
    roll = float(np.sum(np.abs(np.sum(rotvec * fwd, axis=-1))))
    return EffortReport(
        pitch_total=pitch,
        yaw_total=yaw,
        roll_total=roll,
        weighted_total=w_pitch * pitch + w_yaw * yaw + w_roll * roll,
        step_count=len(poses) - 1,
        weights=(w_pitch, w_yaw, w_roll),
    )


def _ribbon_samples(strips: Sequence[RibbonStrip]) -> tuple[np.ndarray, list[tuple[RibbonStrip, int]]]:
    """Per-quad sample points (4 vertices + center) and (strip, quad) index pairs."""
    pts = []
    quads: list[tuple[RibbonStrip, int]] = []
    for strip in strips:
        for i in range(strip.quad_count):
            a, b, c, d = strip.quad(i)
            center = (a + b + c + d) * 0.25
            pts.extend([a.as_tuple(), b.as_tuple(), c.as_tuple(), d.as_tuple(),
                        center.as_tuple()])
            quads.append((strip, i))
    return np.asarray(pts, dtype=float), quads


def accuracy_report(strips: Sequence[RibbonStrip], surface: ReferenceSurface,
                    tau: float | None = None, coverage_samples: int = 10000) -> AccuracyReport:
    """Geometric fidelity of drawn ribbons against the reference scaffold.

    Distances: every quad contributes its 4 vertices and center, projected
    to the surface. Normal deviation: per quad, the angle between the quad
    normal and the surface normal at the quad center's nearest point,
    folded to [0, pi/2]. Coverage: fraction of a dense surface sampling
    whose nearest ribbon sample lies within tau (default: half the width
    of the first strip).
    """
    strips = [s for s in strips]
    if not strips or all(s.quad_count == 0 for s in strips):
        raise ContractError("accuracy_report needs at least one non-empty ribbon")
    if tau is None:
        tau = strips[0].width / 2.0
    if tau <= 0:
        raise ContractError("tau must be positive")

    pts, quads = _ribbon_samples(strips)
    _, dists, _ = surface.project_points(pts)
    mean_dist = float(np.mean(dists))
    rms_dist = float(np.sqrt(np.mean(dists ** 2)))
    max_dist = float(np.max(dists))

    centers = pts[4::5]
    _, _, uv = surface.project_points(centers)
    # clamp uv into the sampling margin so parameterization-singular spots
    # (sphere poles, cone apex) still yield a well-defined normal
    u0, u1, v0, v1 = surface.sampling_domain()
    uu = uv[:, 0] if surface.shape.u_periodic else np.clip(uv[:, 0], u0, u1)
    vv = uv[:, 1] if surface.shape.v_periodic else np.clip(uv[:, 1], v0, v1)
    surf_normals = surface.normals_many(uu, vv)

    devs = []
    for (strip, qi), sn in zip(quads, surf_normals):
        raw = quad_raw_normal(strip.rulings[qi], strip.rulings[qi + 1])
        if raw is None or not np.all(np.isfinite(sn)):
            continue
        qn = np.array(raw.normalized().as_tuple())
        d = abs(float(qn @ sn))
        devs.append(math.acos(min(1.0, d)))
    if not devs:
        raise ContractError("no valid quads for normal deviation")
    mean_dev = float(np.mean(devs))
    max_dev = float(np.max(devs))

    grid_pts, _ = surface.sample_grid(coverage_samples)
    tree = cKDTree(pts)
    near, _ = tree.query(grid_pts)
    coverage = float(np.mean(near <= tau))

    return AccuracyReport(
        mean_dist=mean_dist,
        rms_dist=rms_dist,
        max_dist=max_dist,
        mean_normal_dev=mean_dev,
        max_normal_dev=max_dev,
        coverage_fraction=coverage,
        tau=float(tau),
        sample_count=len(pts),
    )


# ---------------------------------------------------------------------------
# CSV emission: one row per (shape, brush) drawing
# ---------------------------------------------------------------------------

METRICS_COLUMNS = [
    "shape", "brush", "mean_dist", "rms_dist", "max_dist",
    "mean_normal_dev", "max_normal_dev", "coverage",
    "pitch_total", "yaw_total", "roll_total", "weighted_total",
    "stroke_count", "correction_count", "runtime_s",
]


@dataclass(frozen=True)
class MetricsRow:
    shape: str
    brush: str
    accuracy: AccuracyReport
    effort: EffortReport
    stroke_count: int
    correction_count: int
    runtime_s: float

    def as_list(self) -> list:
        a, e = self.accuracy, self.effort
        return [
            self.shape, self.brush,
            repr(a.mean_dist), repr(a.rms_dist), repr(a.max_dist),
            repr(a.mean_normal_dev), repr(a.max_normal_dev), repr(a.coverage_fraction),
            repr(e.pitch_total), repr(e.yaw_total), repr(e.roll_total),
            repr(e.weighted_total),
            str(self.stroke_count), str(self.correction_count), repr(self.runtime_s),
        ]


def write_metrics_csv(rows: Iterable[MetricsRow], path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRICS_COLUMNS)
        for row in rows:
            writer.writerow(row.as_list())


def read_metrics_csv(path: str) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
