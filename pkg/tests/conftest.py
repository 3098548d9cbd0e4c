"""Shared test fixtures and independent oracles.

The oracles here deliberately avoid the library's analytic code paths:
curvature comes from central finite differences of the point evaluator
only, rotations are checked by recomposition, and nearest points by dense
grids. Tolerances follow the documented contracts.
"""
from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ribbonlab.geom import Pose, UnitQuat, Vec3

settings.register_profile(
    "ci", derandomize=True, deadline=None,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ci")


def rng(seed: int = 0) -> np.random.Generator:
    return np.random.default_rng(seed)


def random_unit_quat(r: np.random.Generator) -> UnitQuat:
    q = r.normal(size=4)
    q = q / np.linalg.norm(q)
    return UnitQuat(float(q[0]), float(q[1]), float(q[2]), float(q[3]))


def random_pose_stream(r: np.random.Generator, n: int, step: float = 0.02) -> list[Pose]:
    """Random walk of n trigger-engaged poses with strictly increasing time."""
    pos = r.normal(size=3) * 0.1
    poses = []
    t = 0.0
    for i in range(n):
        t += 0.01 + float(r.random()) * 0.01
        pos = pos + r.normal(size=3) * step
        poses.append(Pose(
            position=Vec3(float(pos[0]), float(pos[1]), float(pos[2])),
            orientation=random_unit_quat(r),
            timestamp=t,
            trigger=True,
        ))
    return poses


# ---------------------------------------------------------------------------
# finite-difference curvature oracle
# ---------------------------------------------------------------------------


def fd_surface_normal(surface, u: float, v: float, h: float = 1e-5) -> np.ndarray:
    """Outward normal from central differences of the local point evaluator."""
    S = lambda uu, vv: np.asarray(surface.shape.point(uu, vv), float).reshape(3)
    Su = (S(u + h, v) - S(u - h, v)) / (2 * h)
    Sv = (S(u, v + h) - S(u, v - h)) / (2 * h)
    n = np.cross(Su, Sv)
    n = n / np.linalg.norm(n)
    return surface.shape.normal_sign * n


def fd_principal_curvatures(surface, u: float, v: float,
                            h: float = 1e-4) -> tuple[float, float]:
    """Shape-operator eigenvalues from finite differences of point evaluation.

    Uses the same documented sign convention as the library (curvature
    measured against the inward normal) but shares no derivative code.
    h ~ 1e-4 balances truncation against roundoff for second differences.
    """
    S = lambda uu, vv: np.asarray(surface.shape.point(uu, vv), float).reshape(3)
    Su = (S(u + h, v) - S(u - h, v)) / (2 * h)
    Sv = (S(u, v + h) - S(u, v - h)) / (2 * h)
    Suu = (S(u + h, v) - 2 * S(u, v) + S(u - h, v)) / h ** 2
    Svv = (S(u, v + h) - 2 * S(u, v) + S(u, v - h)) / h ** 2
    Suv = (S(u + h, v + h) - S(u + h, v - h) - S(u - h, v + h)
           + S(u - h, v - h)) / (4 * h ** 2)
    n = np.cross(Su, Sv)
    n = n / np.linalg.norm(n)
    n_curv = -surface.shape.normal_sign * n
    E, F, G = Su @ Su, Su @ Sv, Sv @ Sv
    L, M, N = Suu @ n_curv, Suv @ n_curv, Svv @ n_curv
    a2 = E * G - F * F
    a1 = -(E * N + G * L - 2 * F * M)
    a0 = L * N - M * M
    disc = max(a1 * a1 - 4 * a2 * a0, 0.0)
    k1 = (-a1 - math.sqrt(disc)) / (2 * a2)
    k2 = (-a1 + math.sqrt(disc)) / (2 * a2)
    return (min(k1, k2), max(k1, k2))


def random_domain_points(surface, r: np.random.Generator, n: int,
                         margin: float = 0.05) -> list[tuple[float, float]]:
    """Random in-domain (u, v) samples, keeping a margin from non-periodic
    parameter ends where FD second differences lose accuracy."""
    u0, u1, v0, v1 = surface.sampling_domain()
    if not surface.shape.u_periodic:
        u0, u1 = u0 + margin * (u1 - u0), u1 - margin * (u1 - u0)
    if not surface.shape.v_periodic:
        v0, v1 = v0 + margin * (v1 - v0), v1 - margin * (v1 - v0)
    out = []
    while len(out) < n:
        u = float(r.uniform(u0, u1))
        v = float(r.uniform(v0, v1))
        if surface.contains(u, v):
            out.append((u, v))
    return out


@pytest.fixture
def seeded_rng() -> np.random.Generator:
    return rng(12345)
