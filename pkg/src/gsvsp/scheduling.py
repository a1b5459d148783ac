"""Scheduling signals, scheduling matrices and the passivity indices they induce.

The gain-scheduled controller feeds ``u_i = Phi_i(t) u_c`` to subcontroller ``i``
and returns ``y_c = sum_i alpha_i Phi_i(t)^T y_i``. Whether the composition is
ISP/OSP depends on how many of the ``Phi_i`` are full rank at each time. This
module evaluates the matrices, classifies them on a time grid and combines the
subcontroller indices into indices for the whole controller.

The coefficient pairs that mix scheduling signals inside the matrices are
called ``mix_mu*``/``mix_nu*``; ``nu_sv`` always denotes a smallest singular
value.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import linalg
from .errors import CertificationError, InvalidInputError

MODES = ("matrix", "scalar", "unscheduled")


@dataclass(frozen=True)
class ScalarScheduleSet:
    """Knot constants of the three piecewise-quartic scheduling signals."""

    s1_end: float = 3.0
    s2_center: float = 3.0
    s2_half_width: float = 2.8
    s2_start: float = 0.2
    s2_end: float = 5.8
    s3_center: float = 7.5
    s3_half_width: float = 2.5
    s3_start: float = 5.0
    s3_end: float = 7.0

    def __call__(self, t: float) -> tuple[float, float, float]:
        if t < 0:
            raise InvalidInputError(f"t must be non-negative, got {t}")
        s1 = 1.0 - (t / self.s1_end) ** 4 if t <= self.s1_end else 0.0
        if self.s2_start <= t <= self.s2_end:
            s2 = 1.0 - ((t - self.s2_center) / self.s2_half_width) ** 4
        else:
            s2 = 0.0
        if t < self.s3_start:
            s3 = 0.0
        elif t <= self.s3_end:
            s3 = 1.0 - ((t - self.s3_center) / self.s3_half_width) ** 4
        else:
            s3 = 1.0
        return s1, s2, s3


DEFAULT_SIGNALS = ScalarScheduleSet()


def eval_scalar_signals(t: float, signals: ScalarScheduleSet = DEFAULT_SIGNALS) -> tuple[float, float, float]:
    return signals(t)


@dataclass(frozen=True)
class SchedulingMatrixSet:
    """``N`` scheduling matrices ``Phi_i(t)`` of size ``n x n`` with output gains ``alpha_i``.

    ``evaluator(t, context)`` returns the list of matrices. ``context`` is
    passed through untouched so state-dependent schedules can be plugged in;
    the built-in schedules depend on time only.
    """

    alphas: tuple[float, ...]
    n: int
    evaluator: Callable[..., Sequence[np.ndarray]] = field(repr=False)
    mode: str = "custom"
    blackout: tuple[float, float] | None = None

    def __post_init__(self):
        if any(not a > 0 for a in self.alphas):
            raise InvalidInputError(f"all alpha_i must be positive, got {self.alphas}")

    @property
    def N(self) -> int:
        return len(self.alphas)

    def matrices(self, t: float, context=None) -> list[np.ndarray]:
        if t < 0:
            raise InvalidInputError(f"t must be non-negative, got {t}")
        if self.blackout is not None and self.blackout[0] <= t <= self.blackout[1]:
            return [np.zeros((self.n, self.n)) for _ in self.alphas]
        return list(self.evaluator(t, context))

    def with_blackout(self, interval) -> "SchedulingMatrixSet":
        """Copy of this set whose matrices are forced to zero on ``interval``."""
        return SchedulingMatrixSet(self.alphas, self.n, self.evaluator, self.mode,
                                   None if interval is None else (float(interval[0]), float(interval[1])))

    @classmethod
    def constant(cls, mats: Sequence[np.ndarray], alphas: Sequence[float] | None = None):
        mats = [np.atleast_2d(np.asarray(M, dtype=float)) for M in mats]
        n = mats[0].shape[0]
        alphas = tuple(alphas) if alphas is not None else (1.0,) * len(mats)
        return cls(alphas, n, lambda t, ctx=None: mats)


def matrix_schedule(mix_mu1=2.0, mix_nu1=4.0, mix_mu2=1.0, mix_nu2=2.0, alphas=(2.0, 1.0, 2.0),
                    signals: ScalarScheduleSet = DEFAULT_SIGNALS) -> SchedulingMatrixSet:
    """Diagonal / lower-triangular scheduling matrices built from the three signals."""

    def evaluate(t, context=None):
        s1, s2, s3 = signals(t)
        return [
            np.array([[mix_mu1 * s1 + mix_nu1 * s2, 0.0], [0.0, s1]]),
            np.array([[s2, 0.0], [s2, s2]]),
            np.array([[mix_mu2 * s3 + mix_nu2 * s2, 0.0], [0.0, s3]]),
        ]

    return SchedulingMatrixSet(tuple(float(a) for a in alphas), 2, evaluate, "matrix")


def scalar_schedule(signals: ScalarScheduleSet = DEFAULT_SIGNALS, n: int = 2) -> SchedulingMatrixSet:
    eye = np.eye(n)

    def evaluate(t, context=None):
        return [s * eye for s in signals(t)]

    return SchedulingMatrixSet((1.0, 1.0, 1.0), n, evaluate, "scalar")


def unscheduled(n: int = 2) -> SchedulingMatrixSet:
    eye = np.eye(n)
    return SchedulingMatrixSet((1.0,), n, lambda t, ctx=None: [eye], "unscheduled")


def make_schedule(mode: str, **kwargs) -> SchedulingMatrixSet:
    if mode == "matrix":
        return matrix_schedule(**kwargs)
    if mode == "scalar":
        return scalar_schedule()
    if mode == "unscheduled":
        return unscheduled()
    raise InvalidInputError(f"unknown scheduling mode {mode!r}; expected one of {MODES}")


def eval_matrices(schedule: SchedulingMatrixSet, t: float, context=None) -> list[tuple[np.ndarray, float]]:
    return list(zip(schedule.matrices(t, context), schedule.alphas))


# -- activity and singular-value quantities --------------------------------


def full_rank_set(mats: Sequence[np.ndarray], tol: float = 0.0) -> list[int]:
    return [i for i, M in enumerate(mats) if linalg.rank_svd(M, tol) == M.shape[0]]


def stacked_sigma_max(mats: Sequence[np.ndarray]) -> float:
    """Largest singular value of ``Psi = [Phi_1^T ... Phi_N^T]``."""
    return linalg.induced_norm_2(np.hstack([M.T for M in mats]))


def lemma1_terms(mats: Sequence[np.ndarray]) -> float:
    return sum(max(linalg.min_eig_sym(M.T @ M), 0.0) for M in mats)


def lemma1_sum(schedule: SchedulingMatrixSet, t: float, context=None) -> float:
    """``sum_i lambda_min(Phi_i^T Phi_i)`` at time ``t``.

    Rank-deficient matrices contribute zero, so this equals the sum of squared
    smallest singular values over the full-rank matrices only.
    """
    return lemma1_terms(schedule.matrices(t, context))


@dataclass
class ActivityReport:
    grid: np.ndarray
    full_rank: list[list[int]]
    all_zero: np.ndarray
    active: np.ndarray
    strongly_active: np.ndarray
    nu_sv_sq_sum: np.ndarray
    sigma_psi: np.ndarray
    nu_inf: float
    sigma_psi_bar: float

    @property
    def is_active(self) -> bool:
        return bool(np.all(self.active))

    @property
    def is_strongly_active(self) -> bool:
        return bool(np.all(self.strongly_active))

    def first_failing_time(self) -> float | None:
        bad = np.flatnonzero(~self.strongly_active)
        return float(self.grid[bad[0]]) if bad.size else None

    def to_dict(self) -> dict:
        return {
            "grid_start": float(self.grid[0]),
            "grid_end": float(self.grid[-1]),
            "grid_points": int(len(self.grid)),
            "active": self.is_active,
            "strongly_active": self.is_strongly_active,
            "first_failing_time": self.first_failing_time(),
            "nu_inf": self.nu_inf,
            "sigma_psi_bar": self.sigma_psi_bar,
        }


def classify_activity(schedule: SchedulingMatrixSet, grid, tol: float = 0.0) -> ActivityReport:
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise InvalidInputError("grid must be nonempty")
    if np.any(np.diff(grid) <= 0):
        raise InvalidInputError("grid must be strictly ascending")
    F, zero, nu_sq, sig = [], [], [], []
    for t in grid:
        mats = schedule.matrices(float(t))
        idx = full_rank_set(mats, tol)
        F.append(idx)
        zero.append(all(not np.any(M) for M in mats))
        nu_sq.append(sum(linalg.singular_values(mats[i])[-1] ** 2 for i in idx))
        sig.append(stacked_sigma_max(mats))
    all_zero = np.array(zero)
    strongly = np.array([len(f) > 0 for f in F])
    nu_sq = np.array(nu_sq, dtype=float)
    sig = np.array(sig)
    return ActivityReport(
        grid=grid,
        full_rank=F,
        all_zero=all_zero,
        active=~all_zero,
        strongly_active=strongly,
        nu_sv_sq_sum=nu_sq,
        sigma_psi=sig,
        nu_inf=float(nu_sq.min()),
        sigma_psi_bar=float(sig.max()),
    )


def uniform_grid(horizon: float, step: float) -> np.ndarray:
    return step * np.arange(int(round(horizon / step)) + 1)


# -- index composition -----------------------------------------------------


@dataclass(frozen=True)
class SubcontrollerIndices:
    delta: float
    epsilon: float
    beta: float = 0.0

    def __post_init__(self):
        if self.beta > 0 or not self.delta > 0 or not self.epsilon > 0:
            raise InvalidInputError(f"need beta <= 0, delta > 0, epsilon > 0; got {self}")


@dataclass(frozen=True)
class GsPassivityIndices:
    beta_hat: float
    delta_min: float
    delta_hat: float
    beta_bar: float
    epsilon_min: float
    epsilon_bar: float
    nu_inf: float
    sigma_psi_bar: float
    alpha_max: float

    @property
    def combined(self) -> tuple[float, float, float]:
        """``(beta, delta, epsilon)`` of the simultaneous ISP/OSP bound."""
        return 0.5 * (self.beta_hat + self.beta_bar), 0.5 * self.delta_hat, 0.5 * self.epsilon_bar

    def to_dict(self) -> dict:
        d = {k: float(v) for k, v in self.__dict__.items()}
        b, dl, e = self.combined
        d.update(combined_beta=b, combined_delta=dl, combined_epsilon=e)
        return d


def compose_indices(sub: Sequence[SubcontrollerIndices], report: ActivityReport,
                    alphas: Sequence[float]) -> GsPassivityIndices:
    if len(sub) != len(alphas):
        raise InvalidInputError("one SubcontrollerIndices entry is needed per alpha")
    if not report.is_strongly_active:
        t_bad = report.first_failing_time()
        raise CertificationError(f"scheduling matrices are not strongly active at t = {t_bad:g} s", t_bad)
    a = np.asarray(alphas, dtype=float)
    beta = float(sum(ai * s.beta for ai, s in zip(a, sub)))
    delta_min = float(min(ai * s.delta for ai, s in zip(a, sub)))
    eps_min = float(min(ai * s.epsilon for ai, s in zip(a, sub)))
    alpha_max = float(a.max())
    return GsPassivityIndices(
        beta_hat=beta,
        delta_min=delta_min,
        delta_hat=delta_min * report.nu_inf,
        beta_bar=beta,
        epsilon_min=eps_min,
        epsilon_bar=eps_min / (alpha_max ** 2 * report.sigma_psi_bar ** 2),
        nu_inf=report.nu_inf,
        sigma_psi_bar=report.sigma_psi_bar,
        alpha_max=alpha_max,
    )
