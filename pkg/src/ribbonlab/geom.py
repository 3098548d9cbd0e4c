"""Core 3D value types: vectors, unit quaternions, controller poses.

Conventions (used everywhere in the package):

- World space is right-handed with +Y up.
- Quaternions are wxyz scalar-first and act on column vectors: a pose
  orientation maps controller-local axes into world space.
- The controller local frame is side=+X, up=+Y, forward=+Z. Its "up" axis
  is the disk normal of the classic brush tip; "side" is the ruling axis
  of the strip-style brush.
- All types are immutable values and all operations are pure functions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ContractError, InvalidPoseError

UNIT_TOL = 1e-9


@dataclass(frozen=True)
class Vec3:
    """Immutable 3D vector (meters, or unitless for directions)."""

    x: float
    y: float
    z: float

    def __add__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def __mul__(self, s: float) -> "Vec3":
        return Vec3(self.x * s, self.y * s, self.z * s)

    __rmul__ = __mul__

    def __neg__(self) -> "Vec3":
        return Vec3(-self.x, -self.y, -self.z)

    def dot(self, other: "Vec3") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def cross(self, other: "Vec3") -> "Vec3":
        return Vec3(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )

    def norm(self) -> float:
        return math.sqrt(self.dot(self))

    def normalized(self) -> "Vec3":
        n = self.norm()
        if n == 0.0:
            raise ContractError("cannot normalize a zero vector")
        return Vec3(self.x / n, self.y / n, self.z / n)

    def distance_to(self, other: "Vec3") -> float:
        return (self - other).norm()

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)

    def is_finite(self) -> bool:
        return math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)

    @staticmethod
    def zero() -> "Vec3":
        return Vec3(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class UnitQuat:
    """Unit quaternion, wxyz order.

    q and -q encode the same rotation; `canonical()` picks the w >= 0
    representative for comparisons.
    """

    w: float
    x: float
    y: float
    z: float

    def norm(self) -> float:
        return math.sqrt(self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z)

    def normalized(self) -> "UnitQuat":
        n = self.norm()
        if n == 0.0:
            raise ContractError("cannot normalize a zero quaternion")
        return UnitQuat(self.w / n, self.x / n, self.y / n, self.z / n)

    def is_unit(self, tol: float = UNIT_TOL) -> bool:
        return abs(self.norm() - 1.0) <= tol

    def canonical(self) -> "UnitQuat":
        if self.w < 0.0 or (self.w == 0.0 and (self.x, self.y, self.z) < (0.0, 0.0, 0.0)):
            return UnitQuat(-self.w, -self.x, -self.y, -self.z)
        return self

    def conjugate(self) -> "UnitQuat":
        return UnitQuat(self.w, -self.x, -self.y, -self.z)

    def multiply(self, other: "UnitQuat") -> "UnitQuat":
        w0, x0, y0, z0 = self.w, self.x, self.y, self.z
        w1, x1, y1, z1 = other.w, other.x, other.y, other.z
        return UnitQuat(
            w0 * w1 - x0 * x1 - y0 * y1 - z0 * z1,
            w0 * x1 + x0 * w1 + y0 * z1 - z0 * y1,
            w0 * y1 + y0 * w1 + z0 * x1 - x0 * z1,
            w0 * z1 + z0 * w1 + x0 * y1 - y0 * x1,
        )

    def __matmul__(self, other: "UnitQuat") -> "UnitQuat":
        return self.multiply(other)

    def rotate(self, v: Vec3) -> Vec3:
        # q v q* expanded: v' = v + 2 u x (u x v + w v), u = (x, y, z)
        ux, uy, uz = self.x, self.y, self.z
        cx = uy * v.z - uz * v.y + self.w * v.x
        cy = uz * v.x - ux * v.z + self.w * v.y
        cz = ux * v.y - uy * v.x + self.w * v.z
        return Vec3(
            v.x + 2.0 * (uy * cz - uz * cy),
            v.y + 2.0 * (uz * cx - ux * cz),
            v.z + 2.0 * (ux * cy - uy * cx),
        )

    def dot(self, other: "UnitQuat") -> float:
        return self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.w, self.x, self.y, self.z)

    @staticmethod
    def identity() -> "UnitQuat":
        return UnitQuat(1.0, 0.0, 0.0, 0.0)

    @staticmethod
    def from_axis_angle(axis: Vec3, angle: float) -> "UnitQuat":
        a = axis.normalized()
        half = 0.5 * angle
        s = math.sin(half)
        return UnitQuat(math.cos(half), a.x * s, a.y * s, a.z * s)


def quat_between_vectors(a: Vec3, b: Vec3) -> UnitQuat:
    """Shortest-arc rotation taking direction a to direction b.

    For antiparallel inputs the rotation axis is the deterministic
    perpendicular of a (180-degree turn).
    """
    an = a.normalized()
    bn = b.normalized()
    d = an.dot(bn)
    if d < -1.0 + 1e-12:
        return UnitQuat.from_axis_angle(_any_perpendicular(an), math.pi)
    c = an.cross(bn)
    q = UnitQuat(1.0 + d, c.x, c.y, c.z)
    return q.normalized()


def _any_perpendicular(v: Vec3) -> Vec3:
    if abs(v.x) <= abs(v.y) and abs(v.x) <= abs(v.z):
        return v.cross(Vec3(1.0, 0.0, 0.0)).normalized()
    if abs(v.y) <= abs(v.z):
        return v.cross(Vec3(0.0, 1.0, 0.0)).normalized()
    return v.cross(Vec3(0.0, 0.0, 1.0)).normalized()


@dataclass(frozen=True)
class Pose:
    """Timestamped 6-DOF controller sample.

    Timestamps within one stream are strictly increasing; the builders and
    the session state machine enforce that at ingestion.
    """

    position: Vec3
    orientation: UnitQuat
    timestamp: float
    trigger: bool = True


@dataclass(frozen=True)
class ControllerFrame:
    """Controller local axes expressed in world space (orthonormal, right-handed)."""

    up: Vec3
    forward: Vec3
    side: Vec3


def frame_of(pose: Pose) -> ControllerFrame:
    """World-space controller frame of a pose: side=+X, up=+Y, forward=+Z rotated.

    Raises InvalidPoseError when the orientation drifts from unit norm by
    more than 1e-9; bad samples are rejected, never silently renormalized.
    """
    q = pose.orientation
    if not q.is_unit():
        raise InvalidPoseError(f"orientation norm {q.norm():.12f} is not unit")
    return ControllerFrame(
        up=q.rotate(Vec3(0.0, 1.0, 0.0)),
        forward=q.rotate(Vec3(0.0, 0.0, 1.0)),
        side=q.rotate(Vec3(1.0, 0.0, 0.0)),
    )


def rotation_between(a: UnitQuat, b: UnitQuat) -> tuple[Vec3, float]:
    """Minimal rotation (axis, angle) taking orientation a to orientation b.

    angle lies in [0, pi]. For the identity rotation the axis is
    undefined; +Z is returned by convention.
    """
    if not a.is_unit() or not b.is_unit():
        raise InvalidPoseError("rotation_between requires unit quaternions")
    r = b.multiply(a.conjugate()).canonical()
    s = math.sqrt(r.x * r.x + r.y * r.y + r.z * r.z)
    angle = 2.0 * math.atan2(s, r.w)
    if s < 1e-300:
        return Vec3(0.0, 0.0, 1.0), 0.0
    return Vec3(r.x / s, r.y / s, r.z / s), angle
