"""Parallel bank of VSP subcontrollers combined through scheduling matrices."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidInputError
from .scheduling import SchedulingMatrixSet, make_schedule
from .synthesis import SubcontrollerRealization


@dataclass
class GsController:
    realizations: list[SubcontrollerRealization]
    schedule: SchedulingMatrixSet

    def __post_init__(self):
        if len(self.realizations) != self.schedule.N:
            raise InvalidInputError(
                f"{len(self.realizations)} realizations for {self.schedule.N} scheduling matrices")
        for r in self.realizations:
            if r.model.B.shape[1] != self.schedule.n or r.model.C.shape[0] != self.schedule.n:
                raise InvalidInputError("subcontroller I/O size does not match the schedule")
        sizes = [r.model.n_states for r in self.realizations]
        self._offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
        self._alphas = np.asarray(self.schedule.alphas, dtype=float)
        self._A = _block_diag([r.model.A for r in self.realizations])
        self._B = _block_diag([r.model.B for r in self.realizations])
        self._C = _block_diag([r.model.C for r in self.realizations])
        self._D = _block_diag([r.model.D for r in self.realizations])
        self._alpha_rep = np.repeat(self._alphas, self.schedule.n)

    @property
    def mode(self) -> str:
        return self.schedule.mode

    @property
    def N(self) -> int:
        return len(self.realizations)

    @property
    def n_states(self) -> int:
        return int(self._offsets[-1])

    def blocks(self, state) -> list[np.ndarray]:
        o = self._offsets
        return [state[o[i]:o[i + 1]] for i in range(self.N)]

    def distribute_input(self, t: float, u_c, context=None) -> list[np.ndarray]:
        u_c = np.asarray(u_c, dtype=float)
        return [Phi @ u_c for Phi in self.schedule.matrices(t, context)]

    def collect_output(self, t: float, y_list: Sequence[np.ndarray], context=None) -> np.ndarray:
        mats = self.schedule.matrices(t, context)
        if len(y_list) != len(mats):
            raise InvalidInputError(f"expected {len(mats)} subcontroller outputs, got {len(y_list)}")
        return self._combine(mats, y_list)

    def _combine(self, mats, y_list) -> np.ndarray:
        y_c = np.zeros(self.schedule.n)
        for a, Phi, y in zip(self._alphas, mats, y_list):
            y_c += a * (Phi.T @ y)
        return y_c

    def evaluate(self, state, t: float, u_c, context=None):
        """One pass through the bank: ``(state_derivative, y_c, u_list, y_list)``."""
        stacked = np.vstack(self.schedule.matrices(t, context))
        u_all = stacked @ np.asarray(u_c, dtype=float)
        xdot = self._A @ state + self._B @ u_all
        y_all = self._C @ state + self._D @ u_all
        y_c = stacked.T @ (self._alpha_rep * y_all)
        n = self.schedule.n
        return xdot, y_c, list(u_all.reshape(-1, n)), list(y_all.reshape(-1, n))

    def controller_derivative(self, state, t: float, u_c, context=None) -> np.ndarray:
        return self.evaluate(state, t, u_c, context)[0]

    def controller_output(self, state, t: float, u_c, context=None) -> np.ndarray:
        return self.evaluate(state, t, u_c, context)[1]


def _block_diag(mats) -> np.ndarray:
    rows = sum(M.shape[0] for M in mats)
    cols = sum(M.shape[1] for M in mats)
    out = np.zeros((rows, cols))
    r = c = 0
    for M in mats:
        out[r:r + M.shape[0], c:c + M.shape[1]] = M
        r += M.shape[0]
        c += M.shape[1]
    return out


def build_controller(realizations: Sequence[SubcontrollerRealization], mode: str,
                     **schedule_kwargs) -> GsController:
    """Controller for one of the three comparison modes.

    ``unscheduled`` keeps only the last realization (designed for the end of
    the trajectory).
    """
    blackout = schedule_kwargs.pop("blackout", None)
    schedule = make_schedule(mode, **schedule_kwargs).with_blackout(blackout)
    reals = list(realizations)
    if mode == "unscheduled":
        reals = reals[-1:]
    return GsController(reals, schedule)
