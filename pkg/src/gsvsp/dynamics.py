"""Planar two-link arm with point masses at the distal link ends, plus the quintic reference trajectory."""

from __future__ import annotations

import bisect
import functools
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError


@dataclass(frozen=True)
class RobotParams:
    L1: float
    L2: float
    m1: float
    m2: float
    gravity: float = 0.0

    def __post_init__(self):
        if min(self.L1, self.L2, self.m1, self.m2) <= 0:
            raise InvalidInputError(f"link lengths and masses must be positive: {self}")


TRUE_PARAMS = RobotParams(L1=1.10, L2=0.85, m1=0.40, m2=0.90)
MEASURED_PARAMS = RobotParams(L1=1.08, L2=0.83, m1=0.44, m2=0.99)


def mass_matrix(q, p: RobotParams) -> np.ndarray:
    c2 = np.cos(q[1])
    m22 = p.L2 ** 2 * p.m2
    m12 = m22 + p.L1 * p.L2 * p.m2 * c2
    m11 = m22 + 2.0 * p.L1 * p.L2 * p.m2 * c2 + p.L1 ** 2 * (p.m1 + p.m2)
    return np.array([[m11, m12], [m12, m22]])


def gravity_torque(q, p: RobotParams) -> np.ndarray:
    if p.gravity == 0.0:
        return np.zeros(2)
    c1, c12 = np.cos(q[0]), np.cos(q[0] + q[1])
    g2 = p.m2 * p.L2 * p.gravity * c12
    return np.array([g2 + (p.m1 + p.m2) * p.L1 * p.gravity * c1, g2])


def nonlinear_forces(q, qdot, p: RobotParams) -> np.ndarray:
    """Velocity-product (Coriolis/centripetal) torques, sign convention ``M qdd = f_non + u``."""
    h = p.m2 * p.L1 * p.L2 * np.sin(q[1])
    f = np.array([h * (qdot[1] ** 2 + 2.0 * qdot[0] * qdot[1]), -h * qdot[0] ** 2])
    return f - gravity_torque(q, p)


def forward_dynamics(q, qdot, u, p: RobotParams) -> np.ndarray:
    M = mass_matrix(q, p)
    rhs = nonlinear_forces(q, qdot, p) + np.asarray(u, dtype=float)
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    return np.array([M[1, 1] * rhs[0] - M[0, 1] * rhs[1], M[0, 0] * rhs[1] - M[1, 0] * rhs[0]]) / det


def kinetic_energy(q, qdot, p: RobotParams) -> float:
    qdot = np.asarray(qdot, dtype=float)
    return 0.5 * float(qdot @ mass_matrix(q, p) @ qdot)


@dataclass(frozen=True)
class TrajectorySpec:
    """Knot times (s) and joint-angle pairs (deg) joined by quintic smoothstep segments."""

    knot_times: tuple[float, ...] = (0.0, 0.5, 1.0, 2.0, 3.0, 5.0, 6.0, 6.5, 7.5, 8.5)
    knot_angles_deg: tuple[tuple[float, float], ...] = field(default=(
        (-90.0, 150.0), (-90.0, 150.0),
        (-60.0, 90.0), (-60.0, 90.0),
        (45.0, 60.0),
        (60.0, 45.0),
        (90.0, -60.0), (90.0, -60.0),
        (150.0, -90.0), (150.0, -90.0),
    ))

    def __post_init__(self):
        t = np.asarray(self.knot_times, dtype=float)
        a = np.asarray(self.knot_angles_deg, dtype=float)
        if t.ndim != 1 or len(t) < 2 or a.shape != (len(t), 2):
            raise InvalidInputError("need at least two knots, each with a pair of angles")
        if np.any(np.diff(t) <= 0):
            raise InvalidInputError("knot times must be strictly ascending")
        if np.any(a < -90.0) or np.any(a > 150.0):
            raise InvalidInputError("knot angles must lie in [-90, 150] deg")
        object.__setattr__(self, "knot_times", tuple(float(x) for x in t))
        object.__setattr__(self, "knot_angles_deg", tuple((float(r[0]), float(r[1])) for r in a))

    @property
    def end_time(self) -> float:
        return self.knot_times[-1]


def smoothstep5(eta: float) -> float:
    return eta ** 3 * (10.0 + eta * (-15.0 + 6.0 * eta))


def smoothstep5_rate(eta: float) -> float:
    return 30.0 * eta ** 2 * (1.0 - eta) ** 2


def trajectory_eval(spec: TrajectorySpec, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Desired angles (rad) and rates (rad/s) at time ``t``; holds the last knot afterwards."""
    if t < 0:
        raise InvalidInputError(f"t must be non-negative, got {t}")
    times = spec.knot_times
    angles = _knots_rad(spec)
    if t >= times[-1]:
        return angles[-1].copy(), np.zeros(2)
    k = bisect.bisect_right(times, t) - 1
    t0 = times[k]
    if t == t0:
        return angles[k].copy(), np.zeros(2)
    h = times[k + 1] - t0
    eta = (t - t0) / h
    span = angles[k + 1] - angles[k]
    return smoothstep5(eta) * span + angles[k], (smoothstep5_rate(eta) / h) * span


@functools.lru_cache(maxsize=16)
def _knots_rad(spec: TrajectorySpec) -> np.ndarray:
    return np.deg2rad(np.array(spec.knot_angles_deg))
