"""Analytic reference surfaces: the ten study shapes made executable.

Each shape is a parametric patch S(u, v) with closed-form first and second
derivatives, from which normals, fundamental forms, and principal
curvatures follow. Nearest-point projection is closed-form for planar
shapes and surfaces of revolution, and grid-seeded Newton refinement for
the ellipsoid and saddle.

Conventions:

- surface_normal returns the OUTWARD unit normal (for planar/open shapes,
  the +Z side of the local frame).
- principal curvatures use the concave-side-positive convention (measured
  against the inward normal), so sphere, hemisphere, cone, cylinder,
  ellipsoid, and the torus outer region all report positive curvature.
  This matches the usual planar/parabolic/spherical/elliptic/hyperbolic
  shape taxonomy.
- Every evaluation accepts scalars or numpy arrays of (u, v).
- Shapes carry a rigid placement (rotation + translation); curvatures are
  placement-invariant, points/normals are mapped to world space.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import ContractError, DomainError, SingularityError
from .geom import UnitQuat, Vec3

PARAM_MARGIN = 1e-3       # interior sampling margin, parameter space
_SINGULAR_NORM = 1e-12    # |Su x Sv| below this counts as a singular point
TOL_PLANAR = 1e-6         # 1/m, |k| below this counts as zero
TOL_UMBILIC = 1e-3        # relative k_min ~ k_max tolerance


class CurvatureClass(enum.Enum):
    PLANAR = "planar"
    PARABOLIC = "parabolic"
    ELLIPTIC = "elliptic"
    HYPERBOLIC = "hyperbolic"
    SPHERICAL_UMBILIC = "spherical_umbilic"


@dataclass(frozen=True)
class CurvatureSample:
    point: Vec3
    normal: Vec3
    k_min: float
    k_max: float
    klass: CurvatureClass


@dataclass(frozen=True)
class ProjectionResult:
    nearest: Vec3
    distance: float
    uv: tuple[float, float]


@dataclass(frozen=True)
class Placement:
    """Rigid transform from surface-local to world coordinates."""

    rotation: UnitQuat = UnitQuat.identity()
    translation: Vec3 = Vec3.zero()

    def is_identity(self) -> bool:
        return (self.rotation.canonical() == UnitQuat.identity()
                and self.translation == Vec3.zero())

    def matrix(self) -> np.ndarray:
        q = self.rotation
        w, x, y, z = q.w, q.x, q.y, q.z
        return np.array([
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ])

    def points_to_world(self, pts: np.ndarray) -> np.ndarray:
        if self.is_identity():
            return pts
        t = np.array(self.translation.as_tuple())
        return pts @ self.matrix().T + t

    def points_to_local(self, pts: np.ndarray) -> np.ndarray:
        if self.is_identity():
            return pts
        t = np.array(self.translation.as_tuple())
        return (pts - t) @ self.matrix()

    def dirs_to_world(self, dirs: np.ndarray) -> np.ndarray:
        if self.is_identity():
            return dirs
        return dirs @ self.matrix().T

    def dirs_to_local(self, dirs: np.ndarray) -> np.ndarray:
        if self.is_identity():
            return dirs
        return dirs @ self.matrix()


def _stack3(x, y, z) -> np.ndarray:
    return np.stack(np.broadcast_arrays(x, y, z), axis=-1).astype(float)


class _ShapeGeometry:
    """Base class for local-frame shape definitions."""

    name = "?"
    closed = False
    u_periodic = False
    v_periodic = False
    normal_sign = 1.0     # outward normal = normal_sign * normalize(Su x Sv)
    stroke_cross = "v"    # parameter that strokes march ACROSS (the other runs along)

    def __init__(self):
        self._seed_cache: tuple[cKDTree, np.ndarray] | None = None

    # domain is (u_min, u_max, v_min, v_max)
    domain: tuple[float, float, float, float]

    def params(self) -> dict[str, float]:
        raise NotImplementedError

    def point(self, u, v) -> np.ndarray:
        raise NotImplementedError

    def derivs(self, u, v) -> tuple[np.ndarray, ...]:
        """(S, Su, Sv, Suu, Suv, Svv), each shaped (..., 3)."""
        raise NotImplementedError

    def contains_mask(self, u, v) -> np.ndarray:
        u0, u1, v0, v1 = self.domain
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        ok_u = np.ones_like(u, dtype=bool) if self.u_periodic else (u >= u0 - 1e-12) & (u <= u1 + 1e-12)
        ok_v = np.ones_like(v, dtype=bool) if self.v_periodic else (v >= v0 - 1e-12) & (v <= v1 + 1e-12)
        return ok_u & ok_v & self._predicate(u, v)

    def _predicate(self, u, v) -> np.ndarray:
        return np.ones(np.broadcast(np.asarray(u), np.asarray(v)).shape, dtype=bool)

    def sampling_domain(self) -> tuple[float, float, float, float]:
        u0, u1, v0, v1 = self.domain
        if not self.u_periodic:
            u0, u1 = u0 + PARAM_MARGIN, u1 - PARAM_MARGIN
        if not self.v_periodic:
            v0, v1 = v0 + PARAM_MARGIN, v1 - PARAM_MARGIN
        return u0, u1, v0, v1

    def along_interval(self, w: float) -> tuple[float, float]:
        """Along-parameter interval of the stroke path at cross value w."""
        u0, u1, v0, v1 = self.sampling_domain()
        return (u0, u1) if self.stroke_cross == "v" else (v0, v1)

    def project_local(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(nearest (N,3), uv (N,2)) in the local frame; defaults to iterative."""
        return self._project_iterative(pts)

    # -- iterative projection (grid seed + Newton refinement) ----------------

    _seed_resolution = (64, 64)

    def _seed_tree(self) -> tuple[cKDTree, np.ndarray]:
        if self._seed_cache is None:
            nu, nv = self._seed_resolution
            u0, u1, v0, v1 = self.sampling_domain()
            us = np.linspace(u0, u1, nu, endpoint=not self.u_periodic)
            vs = np.linspace(v0, v1, nv, endpoint=not self.v_periodic)
            uu, vv = np.meshgrid(us, vs, indexing="ij")
            mask = self.contains_mask(uu, vv)
            uv = np.stack([uu[mask], vv[mask]], axis=-1)
            pts = self.point(uv[:, 0], uv[:, 1])
            self._seed_cache = (cKDTree(pts), uv)
        return self._seed_cache

    def _project_iterative(self, pts: np.ndarray, iters: int = 30) -> tuple[np.ndarray, np.ndarray]:
        """Levenberg-Marquardt refinement of grid-seeded nearest points.

        Per-point damping adapts on acceptance/rejection, so indefinite
        Hessians (saddle regions, far queries) stay harmless; the iterate
        is monotonically non-increasing in distance by construction.
        """
        tree, seed_uv = self._seed_tree()
        _, idx = tree.query(pts)
        u0, u1, v0, v1 = self.domain
        best_uv = seed_uv[idx].copy()
        s = self.point(best_uv[:, 0], best_uv[:, 1])
        best_d2 = np.sum((s - pts) ** 2, axis=-1)
        lam = np.full(len(pts), 1e-6)
        for _ in range(iters):
            S, Su, Sv, Suu, Suv, Svv = self.derivs(best_uv[:, 0], best_uv[:, 1])
            e = S - pts
            gu = np.sum(e * Su, axis=-1)
            gv = np.sum(e * Sv, axis=-1)
            huu = np.sum(Su * Su, axis=-1) + np.sum(e * Suu, axis=-1)
            huv = np.sum(Su * Sv, axis=-1) + np.sum(e * Suv, axis=-1)
            hvv = np.sum(Sv * Sv, axis=-1) + np.sum(e * Svv, axis=-1)
            auu = huu + lam * (1.0 + np.abs(huu))
            avv = hvv + lam * (1.0 + np.abs(hvv))
            det = auu * avv - huv * huv
            det = np.where(np.abs(det) < 1e-300, 1e-300, det)
            du = -(avv * gu - huv * gv) / det
            dv = -(-huv * gu + auu * gv) / det
            cand = best_uv + np.stack([du, dv], axis=-1)
            if self.u_periodic:
                cand[:, 0] = np.mod(cand[:, 0] - u0, u1 - u0) + u0
            else:
                cand[:, 0] = np.clip(cand[:, 0], u0, u1)
            if self.v_periodic:
                cand[:, 1] = np.mod(cand[:, 1] - v0, v1 - v0) + v0
            else:
                cand[:, 1] = np.clip(cand[:, 1], v0, v1)
            s = self.point(cand[:, 0], cand[:, 1])
            d2 = np.sum((s - pts) ** 2, axis=-1)
            better = d2 < best_d2
            best_d2 = np.where(better, d2, best_d2)
            best_uv[better] = cand[better]
            lam = np.clip(np.where(better, lam * 0.4, lam * 4.0), 1e-12, 1e8)
        nearest = self.point(best_uv[:, 0], best_uv[:, 1])
        return nearest, best_uv


# ---------------------------------------------------------------------------
# planar shapes: S(u, v) = (u, v, 0) with per-shape region predicates
# ---------------------------------------------------------------------------


class _PlanarShape(_ShapeGeometry):
    stroke_cross = "v"

    def point(self, u, v):
        return _stack3(u, v, np.zeros_like(np.asarray(u, dtype=float)))

    def derivs(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        zero = np.zeros(np.broadcast(u, v).shape)
        one = np.ones_like(zero)
        S = _stack3(u + zero, v + zero, zero)
        Su = _stack3(one, zero, zero)
        Sv = _stack3(zero, one, zero)
        Z = _stack3(zero, zero, zero)
        return S, Su, Sv, Z, Z, Z

    def _clamp_region(self, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def project_local(self, pts):
        u, v = self._clamp_region(pts[:, 0], pts[:, 1])
        nearest = _stack3(u, v, np.zeros_like(u))
        return nearest, np.stack([u, v], axis=-1)


class Square(_PlanarShape):
    name = "square"

    def __init__(self, size: float = 1.0):
        super().__init__()
        if size <= 0:
            raise ContractError("square size must be positive")
        self.size = size
        h = size / 2.0
        self.domain = (-h, h, -h, h)

    def params(self):
        return {"size": self.size}

    def _clamp_region(self, x, y):
        h = self.size / 2.0
        return np.clip(x, -h, h), np.clip(y, -h, h)


class Triangle(_PlanarShape):
    """Equilateral triangle, centroid at the origin."""

    name = "triangle"

    def __init__(self, size: float = 1.0):
        super().__init__()
        if size <= 0:
            raise ContractError("triangle size must be positive")
        self.size = size
        s3 = math.sqrt(3.0)
        self.vertices = np.array([
            [-size / 2.0, -size * s3 / 6.0],
            [size / 2.0, -size * s3 / 6.0],
            [0.0, size * s3 / 3.0],
        ])
        self.domain = (-size / 2.0, size / 2.0, -size * s3 / 6.0, size * s3 / 3.0)

    def params(self):
        return {"size": self.size}

    def _bary(self, x, y):
        a, b, c = self.vertices
        det = (b[1] - c[1]) * (a[0] - c[0]) + (c[0] - b[0]) * (a[1] - c[1])
        w0 = ((b[1] - c[1]) * (x - c[0]) + (c[0] - b[0]) * (y - c[1])) / det
        w1 = ((c[1] - a[1]) * (x - c[0]) + (a[0] - c[0]) * (y - c[1])) / det
        return w0, w1, 1.0 - w0 - w1

    def _predicate(self, u, v):
        w0, w1, w2 = self._bary(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
        eps = -1e-9
        return (w0 >= eps) & (w1 >= eps) & (w2 >= eps)

    def along_interval(self, w):
        # chord of the iso-v line inside the triangle
        a, b, c = self.vertices
        half = (c[1] - w) / (c[1] - a[1]) * (self.size / 2.0)
        half = max(0.0, half)
        return (-half, half)

    def _clamp_region(self, x, y):
        w0, w1, w2 = self._bary(x, y)
        inside = (w0 >= 0) & (w1 >= 0) & (w2 >= 0)
        px, py = x.copy(), y.copy()
        if not np.all(inside):
            qx, qy = x[~inside], y[~inside]
            best_d2 = np.full(qx.shape, np.inf)
            bx = np.zeros_like(qx)
            by = np.zeros_like(qy)
            verts = self.vertices
            for i in range(3):
                a = verts[i]
                b = verts[(i + 1) % 3]
                ab = b - a
                t = np.clip(((qx - a[0]) * ab[0] + (qy - a[1]) * ab[1]) / (ab @ ab), 0.0, 1.0)
                cx = a[0] + t * ab[0]
                cy = a[1] + t * ab[1]
                d2 = (qx - cx) ** 2 + (qy - cy) ** 2
                take = d2 < best_d2
                best_d2 = np.where(take, d2, best_d2)
                bx = np.where(take, cx, bx)
                by = np.where(take, cy, by)
            px[~inside] = bx
            py[~inside] = by
        return px, py


class Disk(_PlanarShape):
    name = "circle"

    def __init__(self, radius: float = 0.5):
        super().__init__()
        if radius <= 0:
            raise ContractError("circle radius must be positive")
        self.radius = radius
        self.domain = (-radius, radius, -radius, radius)

    def params(self):
        return {"radius": self.radius}

    def _predicate(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        return u * u + v * v <= self.radius * self.radius * (1 + 1e-12)

    def along_interval(self, w):
        half = math.sqrt(max(0.0, self.radius ** 2 - w ** 2))
        return (-half, half)

    def _clamp_region(self, x, y):
        rho = np.hypot(x, y)
        scale = np.where(rho > self.radius, self.radius / np.maximum(rho, 1e-300), 1.0)
        return x * scale, y * scale


# ---------------------------------------------------------------------------
# surfaces of revolution (axis = local +Z)
# ---------------------------------------------------------------------------


class Cone(_ShapeGeometry):
    """Lateral cone surface; apex up at (0, 0, height), v in [0, 1] from apex."""

    name = "cone"
    u_periodic = True
    normal_sign = -1.0
    stroke_cross = "u"  # strokes run along the straight generators

    def __init__(self, radius: float = 0.25, height: float = 0.5):
        super().__init__()
        if radius <= 0 or height <= 0:
            raise ContractError("cone radius and height must be positive")
        self.radius = radius
        self.height = height
        self.domain = (0.0, 2 * math.pi, 0.0, 1.0)

    def params(self):
        return {"radius": self.radius, "height": self.height}

    def point(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        return _stack3(v * self.radius * np.cos(u), v * self.radius * np.sin(u),
                       self.height * (1.0 - v))

    def derivs(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        cu, su = np.cos(u), np.sin(u)
        rb, h = self.radius, self.height
        zero = np.zeros(np.broadcast(u, v).shape)
        S = _stack3(v * rb * cu, v * rb * su, h * (1.0 - v) + zero)
        Su = _stack3(-v * rb * su, v * rb * cu, zero)
        Sv = _stack3(rb * cu + zero, rb * su + zero, -h + zero)
        Suu = _stack3(-v * rb * cu, -v * rb * su, zero)
        Suv = _stack3(-rb * su + zero, rb * cu + zero, zero)
        Svv = _stack3(zero, zero, zero)
        return S, Su, Sv, Suu, Suv, Svv

    def project_local(self, pts):
        rho = np.hypot(pts[:, 0], pts[:, 1])
        u = np.arctan2(pts[:, 1], pts[:, 0])
        # profile segment apex (0, h) -> rim (radius, 0), parameterized by v
        ax, az = 0.0, self.height
        bx, bz = self.radius, 0.0
        dx, dz = bx - ax, bz - az
        t = ((rho - ax) * dx + (pts[:, 2] - az) * dz) / (dx * dx + dz * dz)
        v = np.clip(t, 0.0, 1.0)
        prho = ax + v * dx
        pz = az + v * dz
        nearest = _stack3(prho * np.cos(u), prho * np.sin(u), pz)
        return nearest, np.stack([np.mod(u, 2 * math.pi), v], axis=-1)


class Cylinder(_ShapeGeometry):
    """Lateral cylinder surface along local +Z, v in [-h/2, h/2]."""

    name = "cylinder"
    u_periodic = True
    normal_sign = 1.0
    stroke_cross = "u"

    def __init__(self, radius: float = 0.25, height: float = 0.6):
        super().__init__()
        if radius <= 0 or height <= 0:
            raise ContractError("cylinder radius and height must be positive")
        self.radius = radius
        self.height = height
        self.domain = (0.0, 2 * math.pi, -height / 2.0, height / 2.0)

    def params(self):
        return {"radius": self.radius, "height": self.height}

    def point(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        return _stack3(self.radius * np.cos(u), self.radius * np.sin(u), v)

    def derivs(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        cu, su = np.cos(u), np.sin(u)
        r = self.radius
        zero = np.zeros(np.broadcast(u, v).shape)
        one = np.ones_like(zero)
        S = _stack3(r * cu + zero, r * su + zero, v + zero)
        Su = _stack3(-r * su + zero, r * cu + zero, zero)
        Sv = _stack3(zero, zero, one)
        Suu = _stack3(-r * cu + zero, -r * su + zero, zero)
        Suv = _stack3(zero, zero, zero)
        Svv = _stack3(zero, zero, zero)
        return S, Su, Sv, Suu, Suv, Svv

    def project_local(self, pts):
        rho = np.hypot(pts[:, 0], pts[:, 1])
        safe = np.maximum(rho, 1e-300)
        nx = np.where(rho > 0, pts[:, 0] / safe, 1.0)
        ny = np.where(rho > 0, pts[:, 1] / safe, 0.0)
        z = np.clip(pts[:, 2], self.domain[2], self.domain[3])
        nearest = _stack3(self.radius * nx, self.radius * ny, z)
        u = np.mod(np.arctan2(ny, nx), 2 * math.pi)
        return nearest, np.stack([u, z], axis=-1)


class _SpheroidBase(_ShapeGeometry):
    """Shared sin/cos machinery for sphere, hemisphere, ellipsoid."""

    u_periodic = True
    normal_sign = -1.0
    stroke_cross = "u"  # meridian strokes

    a: float
    b: float
    c: float

    def point(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        sv, cv = np.sin(v), np.cos(v)
        return _stack3(self.a * sv * np.cos(u), self.b * sv * np.sin(u), self.c * cv)

    def derivs(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        su, cu = np.sin(u), np.cos(u)
        sv, cv = np.sin(v), np.cos(v)
        a, b, c = self.a, self.b, self.c
        zero = np.zeros(np.broadcast(u, v).shape)
        S = _stack3(a * sv * cu, b * sv * su, c * cv + zero)
        Su = _stack3(-a * sv * su, b * sv * cu, zero)
        Sv = _stack3(a * cv * cu, b * cv * su, -c * sv + zero)
        Suu = _stack3(-a * sv * cu, -b * sv * su, zero)
        Suv = _stack3(-a * cv * su, b * cv * cu, zero)
        Svv = _stack3(-a * sv * cu, -b * sv * su, -c * cv + zero)
        return S, Su, Sv, Suu, Suv, Svv


class Sphere(_SpheroidBase):
    name = "sphere"
    closed = True

    def __init__(self, radius: float = 0.5):
        super().__init__()
        if radius <= 0:
            raise ContractError("sphere radius must be positive")
        self.radius = radius
        self.a = self.b = self.c = radius
        self.domain = (0.0, 2 * math.pi, 0.0, math.pi)

    def params(self):
        return {"radius": self.radius}

    def project_local(self, pts):
        d = np.linalg.norm(pts, axis=-1)
        safe = np.maximum(d, 1e-300)
        n = np.where(d[:, None] > 0, pts / safe[:, None], np.array([1.0, 0.0, 0.0]))
        nearest = self.radius * n
        u = np.mod(np.arctan2(n[:, 1], n[:, 0]), 2 * math.pi)
        v = np.arccos(np.clip(n[:, 2], -1.0, 1.0))
        return nearest, np.stack([u, v], axis=-1)


class Hemisphere(_SpheroidBase):
    """Upper half sphere; rim (v = pi/2) is an open boundary."""

    name = "hemisphere"

    def __init__(self, radius: float = 0.5):
        super().__init__()
        if radius <= 0:
            raise ContractError("hemisphere radius must be positive")
        self.radius = radius
        self.a = self.b = self.c = radius
        self.domain = (0.0, 2 * math.pi, 0.0, math.pi / 2.0)

    def params(self):
        return {"radius": self.radius}

    def project_local(self, pts):
        d = np.linalg.norm(pts, axis=-1)
        safe = np.maximum(d, 1e-300)
        n = np.where(d[:, None] > 0, pts / safe[:, None], np.array([0.0, 0.0, 1.0]))
        # radial projection that lands below the rim clamps to the rim circle
        below = n[:, 2] < 0.0
        if np.any(below):
            rho = np.hypot(n[:, 0], n[:, 1])
            safe_rho = np.maximum(rho, 1e-300)
            rx = np.where(rho > 0, n[:, 0] / safe_rho, 1.0)
            ry = np.where(rho > 0, n[:, 1] / safe_rho, 0.0)
            n = n.copy()
            n[below, 0] = rx[below]
            n[below, 1] = ry[below]
            n[below, 2] = 0.0
        nearest = self.radius * n
        u = np.mod(np.arctan2(n[:, 1], n[:, 0]), 2 * math.pi)
        v = np.arccos(np.clip(n[:, 2], 0.0, 1.0))
        return nearest, np.stack([u, v], axis=-1)


class Ellipsoid(_SpheroidBase):
    name = "ellipsoid"
    closed = True
    _seed_resolution = (96, 48)

    def __init__(self, a: float = 0.5, b: float = 0.4, c: float = 0.3):
        super().__init__()
        if min(a, b, c) <= 0:
            raise ContractError("ellipsoid semi-axes must be positive")
        self.a, self.b, self.c = a, b, c
        self.domain = (0.0, 2 * math.pi, 0.0, math.pi)

    def params(self):
        return {"a": self.a, "b": self.b, "c": self.c}


class Torus(_ShapeGeometry):
    name = "torus"
    closed = True
    u_periodic = True
    v_periodic = True
    normal_sign = 1.0
    stroke_cross = "u"  # strokes loop around the tube (along v)

    def __init__(self, major_radius: float = 0.35, minor_radius: float = 0.15):
        super().__init__()
        if minor_radius <= 0 or major_radius <= 0:
            raise ContractError("torus radii must be positive")
        if major_radius <= minor_radius:
            raise ContractError("torus requires major_radius > minor_radius")
        self.major_radius = major_radius
        self.minor_radius = minor_radius
        self.domain = (0.0, 2 * math.pi, 0.0, 2 * math.pi)

    def params(self):
        return {"major_radius": self.major_radius, "minor_radius": self.minor_radius}

    def point(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        R, r = self.major_radius, self.minor_radius
        w = R + r * np.cos(v)
        return _stack3(w * np.cos(u), w * np.sin(u), r * np.sin(v))

    def derivs(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        cu, su = np.cos(u), np.sin(u)
        cv, sv = np.cos(v), np.sin(v)
        R, r = self.major_radius, self.minor_radius
        w = R + r * cv
        zero = np.zeros(np.broadcast(u, v).shape)
        S = _stack3(w * cu, w * su, r * sv + zero)
        Su = _stack3(-w * su, w * cu, zero)
        Sv = _stack3(-r * sv * cu, -r * sv * su, r * cv + zero)
        Suu = _stack3(-w * cu, -w * su, zero)
        Suv = _stack3(r * sv * su, -r * sv * cu, zero)
        Svv = _stack3(-r * cv * cu, -r * cv * su, -r * sv + zero)
        return S, Su, Sv, Suu, Suv, Svv

    def project_local(self, pts):
        R, r = self.major_radius, self.minor_radius
        rho = np.hypot(pts[:, 0], pts[:, 1])
        u = np.arctan2(pts[:, 1], pts[:, 0])
        dx = rho - R
        dz = pts[:, 2]
        dn = np.hypot(dx, dz)
        safe = np.maximum(dn, 1e-300)
        ex = np.where(dn > 0, dx / safe, 1.0)
        ez = np.where(dn > 0, dz / safe, 0.0)
        prho = R + r * ex
        pz = r * ez
        nearest = _stack3(prho * np.cos(u), prho * np.sin(u), pz)
        v = np.mod(np.arctan2(ez, ex), 2 * math.pi)
        return nearest, np.stack([np.mod(u, 2 * math.pi), v], axis=-1)


class Saddle(_ShapeGeometry):
    """Hyperbolic paraboloid z = coeff * (u^2 - v^2) over a square extent."""

    name = "saddle"
    normal_sign = 1.0
    stroke_cross = "v"

    def __init__(self, coeff: float = 1.0, extent: float = 0.4):
        super().__init__()
        if coeff <= 0 or extent <= 0:
            raise ContractError("saddle coeff and extent must be positive")
        self.coeff = coeff
        self.extent = extent
        self.domain = (-extent, extent, -extent, extent)

    def params(self):
        return {"coeff": self.coeff, "extent": self.extent}

    def point(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        return _stack3(u, v, self.coeff * (u * u - v * v))

    def derivs(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        c = self.coeff
        zero = np.zeros(np.broadcast(u, v).shape)
        one = np.ones_like(zero)
        S = _stack3(u + zero, v + zero, c * (u * u - v * v))
        Su = _stack3(one, zero, 2 * c * u + zero)
        Sv = _stack3(zero, one, -2 * c * v + zero)
        Suu = _stack3(zero, zero, 2 * c * one)
        Suv = _stack3(zero, zero, zero)
        Svv = _stack3(zero, zero, -2 * c * one)
        return S, Su, Sv, Suu, Suv, Svv


SHAPE_CLASSES: dict[str, type[_ShapeGeometry]] = {
    cls.name: cls
    for cls in (Square, Triangle, Disk, Cone, Cylinder, Hemisphere, Sphere,
                Ellipsoid, Torus, Saddle)
}

# accepted spelling aliases for parameter overrides
_PARAM_ALIASES = {
    "r": {"torus": "minor_radius", "sphere": "radius", "circle": "radius",
          "hemisphere": "radius", "cone": "radius", "cylinder": "radius"},
    "R": {"torus": "major_radius"},
    "h": {"cone": "height", "cylinder": "height"},
}


class ReferenceSurface:
    """A placed analytic shape with normals, curvature, and projection."""

    def __init__(self, shape: _ShapeGeometry, placement: Placement | None = None):
        self.shape = shape
        self.placement = placement or Placement()

    # -- descriptive ---------------------------------------------------------

    @property
    def kind(self) -> str:
        return self.shape.name

    @property
    def closed(self) -> bool:
        return self.shape.closed

    @property
    def domain(self) -> tuple[float, float, float, float]:
        return self.shape.domain

    def sampling_domain(self) -> tuple[float, float, float, float]:
        return self.shape.sampling_domain()

    def params(self) -> dict[str, float]:
        return self.shape.params()

    def descriptor(self) -> dict:
        d = {"kind": self.kind, "params": self.params()}
        if not self.placement.is_identity():
            d["placement"] = {
                "rotation": list(self.placement.rotation.as_tuple()),
                "translation": list(self.placement.translation.as_tuple()),
            }
        return d

    def contains(self, u: float, v: float) -> bool:
        return bool(self.shape.contains_mask(u, v))

    def _require_domain(self, u, v):
        if not np.all(self.shape.contains_mask(u, v)):
            raise DomainError(f"(u, v) outside the {self.kind} domain")

    # -- evaluation ----------------------------------------------------------

    def evaluate_many(self, u, v) -> np.ndarray:
        return self.placement.points_to_world(self.shape.point(u, v))

    def evaluate(self, u: float, v: float) -> Vec3:
        self._require_domain(u, v)
        p = np.asarray(self.evaluate_many(u, v), dtype=float).reshape(3)
        return Vec3(float(p[0]), float(p[1]), float(p[2]))

    def local_derivs(self, u, v):
        """Local-frame (S, Su, Sv, Suu, Suv, Svv); norms are placement-invariant."""
        return self.shape.derivs(u, v)

    def normals_many(self, u, v) -> np.ndarray:
        """Outward unit normals; near-singular points yield non-finite rows."""
        _, Su, Sv, *_ = self.shape.derivs(u, v)
        raw = np.cross(Su, Sv)
        nn = np.linalg.norm(raw, axis=-1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            n = self.shape.normal_sign * raw / np.where(nn < _SINGULAR_NORM, np.nan, nn)
        return self.placement.dirs_to_world(n)

    def normal(self, u: float, v: float) -> Vec3:
        self._require_domain(u, v)
        n = np.asarray(self.normals_many(u, v), dtype=float).reshape(3)
        if not np.all(np.isfinite(n)):
            raise SingularityError(f"singular parameterization point on {self.kind}")
        return Vec3(float(n[0]), float(n[1]), float(n[2]))

    # -- curvature -----------------------------------------------------------

    def _forms(self, u, v):
        S, Su, Sv, Suu, Suv, Svv = self.shape.derivs(u, v)
        E = np.sum(Su * Su, axis=-1)
        F = np.sum(Su * Sv, axis=-1)
        G = np.sum(Sv * Sv, axis=-1)
        raw = np.cross(Su, Sv)
        rn = np.linalg.norm(raw, axis=-1)
        with np.errstate(invalid="ignore", divide="ignore"):
            n_curv = -self.shape.normal_sign * raw / np.where(
                rn < _SINGULAR_NORM, np.nan, rn)[..., None]
        L = np.sum(Suu * n_curv, axis=-1)
        M = np.sum(Suv * n_curv, axis=-1)
        N = np.sum(Svv * n_curv, axis=-1)
        return E, F, G, L, M, N

    def principal_curvatures_many(self, u, v) -> tuple[np.ndarray, np.ndarray]:
        E, F, G, L, M, N = self._forms(u, v)
        a2 = E * G - F * F
        a1 = -(E * N + G * L - 2.0 * F * M)
        a0 = L * N - M * M
        disc = np.maximum(a1 * a1 - 4.0 * a2 * a0, 0.0)
        sq = np.sqrt(disc)
        k1 = (-a1 - sq) / (2.0 * a2)
        k2 = (-a1 + sq) / (2.0 * a2)
        return np.minimum(k1, k2), np.maximum(k1, k2)

    def principal_curvatures(self, u: float, v: float) -> tuple[float, float]:
        self._require_domain(u, v)
        kmin, kmax = self.principal_curvatures_many(u, v)
        kmin = float(np.asarray(kmin).reshape(()))
        kmax = float(np.asarray(kmax).reshape(()))
        if not (math.isfinite(kmin) and math.isfinite(kmax)):
            raise SingularityError(f"singular parameterization point on {self.kind}")
        return kmin, kmax

    def normal_curvature(self, u: float, v: float, direction: Vec3) -> float:
        """Normal curvature along a tangent direction: II(t,t) / I(t,t)."""
        self._require_domain(u, v)
        d = direction.normalized()
        n = self.normal(u, v)
        if abs(d.dot(n)) > 1e-6:
            raise ContractError("direction is not tangent to the surface")
        dl = self.placement.dirs_to_local(np.array(d.as_tuple())[None, :])[0]
        E, F, G, L, M, N = (float(np.asarray(x).reshape(())) for x in self._forms(u, v))
        _, Su, Sv, *_ = self.shape.derivs(u, v)
        Su = np.asarray(Su, dtype=float).reshape(3)
        Sv = np.asarray(Sv, dtype=float).reshape(3)
        bu = float(dl @ Su)
        bv = float(dl @ Sv)
        det = E * G - F * F
        if det < _SINGULAR_NORM:
            raise SingularityError(f"singular parameterization point on {self.kind}")
        a = (G * bu - F * bv) / det
        b = (-F * bu + E * bv) / det
        ii = L * a * a + 2.0 * M * a * b + N * b * b
        i1 = E * a * a + 2.0 * F * a * b + G * b * b
        return ii / i1

    def curvature_sample(self, u: float, v: float) -> CurvatureSample:
        kmin, kmax = self.principal_curvatures(u, v)
        return CurvatureSample(
            point=self.evaluate(u, v),
            normal=self.normal(u, v),
            k_min=kmin,
            k_max=kmax,
            klass=classify_curvature(kmin, kmax),
        )

    # -- projection ----------------------------------------------------------

    def project_points(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Vectorized nearest points: (nearest (N,3), distance (N,), uv (N,2))."""
        pts = np.asarray(pts, dtype=float).reshape(-1, 3)
        local = self.placement.points_to_local(pts)
        nearest_local, uv = self.shape.project_local(local)
        nearest = self.placement.points_to_world(nearest_local)
        dist = np.linalg.norm(nearest - pts, axis=-1)
        return nearest, dist, uv

    def project(self, point: Vec3) -> ProjectionResult:
        nearest, dist, uv = self.project_points(np.array([point.as_tuple()]))
        n = nearest[0]
        return ProjectionResult(
            nearest=Vec3(float(n[0]), float(n[1]), float(n[2])),
            distance=float(dist[0]),
            uv=(float(uv[0, 0]), float(uv[0, 1])),
        )

    # -- sampling -------------------------------------------------------------

    def sample_grid(self, n: int = 10000) -> tuple[np.ndarray, np.ndarray]:
        """Roughly n surface points on a regular (u, v) grid over the sampling domain."""
        u0, u1, v0, v1 = self.sampling_domain()
        side = max(2, int(math.ceil(math.sqrt(n))))
        us = np.linspace(u0, u1, side, endpoint=not self.shape.u_periodic)
        vs = np.linspace(v0, v1, side, endpoint=not self.shape.v_periodic)
        uu, vv = np.meshgrid(us, vs, indexing="ij")
        mask = self.shape.contains_mask(uu, vv)
        uv = np.stack([uu[mask], vv[mask]], axis=-1)
        return self.evaluate_many(uv[:, 0], uv[:, 1]), uv


# ---------------------------------------------------------------------------
# spec-level operations
# ---------------------------------------------------------------------------


def evaluate(surface: ReferenceSurface, u: float, v: float) -> Vec3:
    return surface.evaluate(u, v)


def surface_normal(surface: ReferenceSurface, u: float, v: float) -> Vec3:
    return surface.normal(u, v)


def principal_curvatures(surface: ReferenceSurface, u: float, v: float) -> tuple[float, float]:
    return surface.principal_curvatures(u, v)


def normal_curvature(surface: ReferenceSurface, u: float, v: float, direction: Vec3) -> float:
    return surface.normal_curvature(u, v, direction)


def project_to_surface(surface: ReferenceSurface, point: Vec3) -> ProjectionResult:
    return surface.project(point)


def classify_curvature(k_min: float, k_max: float, tol_planar: float = TOL_PLANAR,
                       tol_umbilic: float = TOL_UMBILIC) -> CurvatureClass:
    """Shape taxonomy from the signs/magnitudes of the principal curvatures."""
    if k_min > k_max:
        raise ContractError("k_min must not exceed k_max")
    small_min = abs(k_min) <= tol_planar
    small_max = abs(k_max) <= tol_planar
    if small_min and small_max:
        return CurvatureClass.PLANAR
    if small_min or small_max:
        return CurvatureClass.PARABOLIC
    if (k_min < 0.0) != (k_max < 0.0):
        return CurvatureClass.HYPERBOLIC
    if abs(k_max - k_min) <= tol_umbilic * max(abs(k_min), abs(k_max)):
        return CurvatureClass.SPHERICAL_UMBILIC
    return CurvatureClass.ELLIPTIC


# ---------------------------------------------------------------------------
# registry + plain-text parameter overrides
# ---------------------------------------------------------------------------


def surface_names() -> list[str]:
    return sorted(SHAPE_CLASSES)


def create_surface(name: str, params: dict[str, float] | None = None,
                   placement: Placement | None = None) -> ReferenceSurface:
    """Instantiate a registry shape with optional parameter overrides."""
    key = name.strip().lower()
    if key == "disk":
        key = "circle"
    if key not in SHAPE_CLASSES:
        raise ContractError(f"unknown surface {name!r}; known: {', '.join(surface_names())}")
    cls = SHAPE_CLASSES[key]
    kwargs: dict[str, float] = {}
    for raw_k, val in (params or {}).items():
        k = _PARAM_ALIASES.get(raw_k, {}).get(key, raw_k)
        kwargs[k] = float(val)
    try:
        shape = cls(**kwargs)
    except TypeError as exc:
        raise ContractError(f"bad parameters for {key}: {exc}") from exc
    return ReferenceSurface(shape, placement)


def parse_key_values(text: str) -> dict[str, str]:
    """Parse `key=value` lines (blank lines and # comments ignored)."""
    out: dict[str, str] = {}
    for i, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ContractError(f"config line {i}: expected key=value, got {line!r}")
        k, v = body.split("=", 1)
        out[k.strip()] = v.strip()
    return out
