"""Closed-loop tracking simulation, RMS metrics and the passivity audit.

Loop: ``u = Kp e + y_c`` with controller input ``u_c = e_dot`` (or ``-q_dot``
when ``controller_input = "negative_rate"``), where ``e = theta_d - q``. Plant
and controller states are integrated together by fixed-step classical RK4.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import TRUE_PARAMS, RobotParams, TrajectorySpec, forward_dynamics, kinetic_energy, trajectory_eval
from .errors import InvalidInputError, SimulationError
from .gs_controller import GsController
from .scheduling import GsPassivityIndices
from .signals import SampledSignal, cumulative_inner_product, snap_index

CONTROLLER_INPUTS = ("rate_error", "negative_rate")


@dataclass(frozen=True)
class SimConfig:
    step: float = 1e-3
    horizon: float = 8.5
    mode: str = "matrix"
    gravity: float = 0.0
    controller_input: str = "rate_error"

    def __post_init__(self):
        if not self.step > 0:
            raise InvalidInputError("step must be positive")
        if not self.horizon >= self.step:
            raise InvalidInputError("horizon must be at least one step")
        if self.controller_input not in CONTROLLER_INPUTS:
            raise InvalidInputError(f"controller_input must be one of {CONTROLLER_INPUTS}")

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.step))


@dataclass
class SimulationLog:
    step: float
    mode: str
    channels: dict[str, np.ndarray] = field(default_factory=dict)
    n_sub: int = 0

    @property
    def times(self) -> np.ndarray:
        return self.step * np.arange(len(self.channels["q"]))

    def signal(self, name: str) -> SampledSignal:
        if name not in self.channels:
            raise InvalidInputError(f"log has no channel {name!r}")
        return SampledSignal(self.step, self.channels[name])

    def __len__(self) -> int:
        return len(self.channels["q"])


def run_closed_loop(cfg: SimConfig, ctrl: GsController, Kp, plant: RobotParams = TRUE_PARAMS,
                    traj: TrajectorySpec | None = None) -> SimulationLog:
    traj = traj or TrajectorySpec()
    if cfg.gravity != plant.gravity:
        plant = RobotParams(plant.L1, plant.L2, plant.m1, plant.m2, cfg.gravity)
    Kp = np.asarray(Kp, dtype=float)
    h = cfg.step
    n_steps = cfg.n_steps
    use_ref_rate = cfg.controller_input == "rate_error"
    nc = ctrl.n_states
    N = ctrl.N

    def rhs(t, x):
        q, qd = x[:2], x[2:4]
        th, thd = trajectory_eval(traj, t)
        e = th - q
        ed = thd - qd
        u_c = ed if use_ref_rate else -qd
        xcdot, y_c, u_list, y_list = ctrl.evaluate(x[4:], t, u_c)
        u = Kp @ e + y_c
        dx = np.empty_like(x)
        dx[:2] = qd
        dx[2:4] = forward_dynamics(q, qd, u, plant)
        dx[4:] = xcdot
        return dx, (th, thd, e, ed, u, u_c, y_c, u_list, y_list)

    th0, _ = trajectory_eval(traj, 0.0)
    x = np.concatenate([th0, np.zeros(2), np.zeros(nc)])

    m = n_steps + 1
    logs = {k: np.empty((m, 2)) for k in ("q", "qdot", "theta_d", "thetadot_d", "e", "edot", "u", "u_c", "y_c")}
    for i in range(N):
        logs[f"u{i + 1}"] = np.empty((m, 2))
        logs[f"y{i + 1}"] = np.empty((m, 2))

    # overflow is expected on divergence; it is caught by the finiteness check below
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(m):
            t = k * h
            k1, (th, thd, e, ed, u, u_c, y_c, u_list, y_list) = rhs(t, x)
            if not (np.all(np.isfinite(x)) and np.all(np.isfinite(k1))):
                raise SimulationError(f"state diverged at t = {t:.6g} s", t)
            logs["q"][k] = x[:2]
            logs["qdot"][k] = x[2:4]
            logs["theta_d"][k] = th
            logs["thetadot_d"][k] = thd
            logs["e"][k] = e
            logs["edot"][k] = ed
            logs["u"][k] = u
            logs["u_c"][k] = u_c
            logs["y_c"][k] = y_c
            for i in range(N):
                logs[f"u{i + 1}"][k] = u_list[i]
                logs[f"y{i + 1}"][k] = y_list[i]
            if k == n_steps:
                break
            k2 = rhs(t + 0.5 * h, x + 0.5 * h * k1)[0]
            k3 = rhs(t + 0.5 * h, x + 0.5 * h * k2)[0]
            k4 = rhs(t + h, x + h * k3)[0]
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return SimulationLog(step=h, mode=ctrl.mode, channels=logs, n_sub=N)


@dataclass(frozen=True)
class Metrics:
    mode: str
    rms_e_deg: tuple[float, float]
    rms_edot_degps: tuple[float, float]

    def as_row(self) -> list[float]:
        return [*self.rms_e_deg, *self.rms_edot_degps]

    def to_dict(self) -> dict:
        return {"mode": self.mode, "rms_e_deg": list(self.rms_e_deg), "rms_edot_degps": list(self.rms_edot_degps)}


def _rms(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return np.sqrt(np.mean(a ** 2, axis=0))


def rms_metrics(log: SimulationLog) -> Metrics:
    if len(log) == 0:
        raise InvalidInputError("empty log")
    e = _rms(np.rad2deg(log.channels["e"]))
    ed = _rms(np.rad2deg(log.channels["edot"]))
    return Metrics(log.mode, (float(e[0]), float(e[1])), (float(ed[0]), float(ed[1])))


@dataclass
class AuditReport:
    horizons: np.ndarray
    margins: np.ndarray
    slacks: np.ndarray
    combined: tuple[float, float, float]

    @property
    def min_margin(self) -> float:
        return float(self.margins.min())

    @property
    def passed(self) -> bool:
        return bool(np.all(self.margins >= self.slacks))

    def to_dict(self) -> dict:
        return {
            "combined_beta": self.combined[0],
            "combined_delta": self.combined[1],
            "combined_epsilon": self.combined[2],
            "min_margin": self.min_margin,
            "passed": self.passed,
            "margins": [{"T": float(T), "margin": float(mg), "slack": float(s)}
                        for T, mg, s in zip(self.horizons, self.margins, self.slacks)],
        }


def passivity_audit(log: SimulationLog, idx: GsPassivityIndices, n_horizons: int = 50) -> AuditReport:
    """Check the combined ISP/OSP inequality of the scheduled controller at evenly spaced horizons."""
    for name in ("u_c", "y_c"):
        if name not in log.channels:
            raise InvalidInputError(f"log is missing channel {name!r}")
    uc, yc = log.signal("u_c"), log.signal("y_c")
    beta, delta, eps = idx.combined
    cross = cumulative_inner_product(uc, yc)
    uu = cumulative_inner_product(uc, uc)
    yy = cumulative_inner_product(yc, yc)
    horizons = np.linspace(0.0, uc.duration, n_horizons + 1)[1:]
    ks = np.array([snap_index(uc, T) for T in horizons])
    margins = cross[ks] - beta - delta * uu[ks] - eps * yy[ks]
    slacks = -1e-8 * (1.0 + uu[ks])
    return AuditReport(horizons, margins, slacks, (beta, delta, eps))


# times where the default scheduling signals switch branch (s3 also jumps at 7 s)
SCHEDULE_BREAKPOINTS = (0.2, 3.0, 5.0, 5.8, 7.0)


def power_balance_residual(log: SimulationLog, plant: RobotParams = TRUE_PARAMS,
                           breakpoints=SCHEDULE_BREAKPOINTS) -> tuple[np.ndarray, np.ndarray]:
    """``|dKE/dt - qdot^T u|`` divided by the peak power, with its sample times.

    The kinetic-energy rate uses a fourth-order central difference. Stencils
    that straddle a breakpoint are dropped, since the torque is only piecewise
    smooth there.
    """
    q, qd, u = log.channels["q"], log.channels["qdot"], log.channels["u"]
    if len(q) < 5:
        raise InvalidInputError("need at least five samples")
    h = log.step
    ke = np.array([kinetic_energy(a, b, plant) for a, b in zip(q, qd)])
    rate = (-ke[4:] + 8.0 * ke[3:-1] - 8.0 * ke[1:-3] + ke[:-4]) / (12.0 * h)
    power = np.einsum("ij,ij->i", qd, u)
    peak = max(float(np.abs(power).max()), np.finfo(float).tiny)
    t = h * np.arange(2, len(q) - 2)
    keep = np.ones(len(t), dtype=bool)
    for b in breakpoints:
        keep &= np.abs(t - b) > 2.5 * h
    return t[keep], np.abs(rate - power[2:-2])[keep] / peak
