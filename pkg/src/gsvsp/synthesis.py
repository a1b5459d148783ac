"""VSP subcontroller synthesis: prewrapped linearization, LQR, KYP realization, frequency certificates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .dynamics import MEASURED_PARAMS, RobotParams, mass_matrix
from .errors import (CertificationError, ConvergenceError, InvalidInputError, NoSolutionError, NumericError,
                     SynthesisError)
from .scheduling import SubcontrollerIndices

KYP_ATOL = 1e-10
LYAPUNOV_WEIGHTS = ("identity", "riccati")


@dataclass(frozen=True)
class StateSpaceModel:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        mats = [np.atleast_2d(np.asarray(M, dtype=float)) for M in (self.A, self.B, self.C, self.D)]
        A, B, C, D = mats
        n = A.shape[0]
        if A.shape != (n, n) or B.shape[0] != n or C.shape[1] != n or D.shape != (C.shape[0], B.shape[1]):
            raise InvalidInputError(
                f"inconsistent state-space dimensions A{A.shape} B{B.shape} C{C.shape} D{D.shape}")
        if not all(np.all(np.isfinite(M)) for M in mats):
            raise InvalidInputError("state-space matrices must be finite")
        for name, M in zip("ABCD", mats):
            object.__setattr__(self, name, M)

    @property
    def n_states(self) -> int:
        return self.A.shape[0]

    def to_dict(self) -> dict:
        return {k: getattr(self, k).tolist() for k in "ABCD"}

    @classmethod
    def from_dict(cls, d) -> "StateSpaceModel":
        return cls(*(np.array(d[k], dtype=float) for k in "ABCD"))


@dataclass(frozen=True)
class SynthesisConfig:
    """Design weights. Diagonals are stored as tuples so the config stays hashable and JSON-friendly.

    ``q_lqr_scales`` and ``r_lqr_scales`` are Bryson maxima: the weight is the
    inverse square of each entry.
    """

    kp: tuple[float, float] = (35.0, 35.0)
    q_lqr_scales: tuple[float, ...] = (0.33, 0.25, 180.0, 180.0)
    r_lqr_scales: tuple[float, float] = (15.0, 15.0)
    feedthrough: float = 1e-4
    linearization_deg: tuple[float, ...] = (150.0, 60.0, -90.0)
    lyapunov_weight: str = "identity"
    lyapunov_scale: float = 1.0
    omega_min: float = 1e-3
    omega_max: float = 1e5
    omega_points: int = 400

    def __post_init__(self):
        for name in ("kp", "q_lqr_scales", "r_lqr_scales"):
            vals = getattr(self, name)
            if any(not (v > 0 and np.isfinite(v)) for v in vals):
                raise InvalidInputError(f"{name} entries must be positive and finite, got {vals}")
        if len(self.kp) != 2 or len(self.r_lqr_scales) != 2 or len(self.q_lqr_scales) != 4:
            raise InvalidInputError("kp and r_lqr_scales need 2 entries, q_lqr_scales needs 4")
        if not self.feedthrough > 0:
            raise InvalidInputError(f"feedthrough must be positive, got {self.feedthrough}")
        if not self.linearization_deg:
            raise InvalidInputError("need at least one linearization angle")
        if self.lyapunov_weight not in LYAPUNOV_WEIGHTS:
            raise InvalidInputError(f"lyapunov_weight must be one of {LYAPUNOV_WEIGHTS}")
        if not self.lyapunov_scale > 0:
            raise InvalidInputError("lyapunov_scale must be positive")
        if not 0 < self.omega_min < self.omega_max or self.omega_points < 2:
            raise InvalidInputError("need 0 < omega_min < omega_max and at least 2 frequency points")

    @property
    def omega_grid(self) -> np.ndarray:
        return default_omega_grid(self.omega_points, self.omega_min, self.omega_max)

    @property
    def Kp(self) -> np.ndarray:
        return np.diag(self.kp)

    @property
    def Q_lqr(self) -> np.ndarray:
        return np.diag(np.asarray(self.q_lqr_scales, dtype=float) ** -2)

    @property
    def R_lqr(self) -> np.ndarray:
        return np.diag(np.asarray(self.r_lqr_scales, dtype=float) ** -2)


@dataclass
class SubcontrollerRealization:
    model: StateSpaceModel
    P: np.ndarray
    Q: np.ndarray
    K: np.ndarray
    linearization_deg: float | None = None
    indices: SubcontrollerIndices | None = None
    certificate: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {
            "linearization_deg": self.linearization_deg,
            "model": self.model.to_dict(),
            "P": self.P.tolist(),
            "Q": self.Q.tolist(),
            "K": self.K.tolist(),
            "certificate": self.certificate,
        }
        if self.indices is not None:
            d["indices"] = {"beta": self.indices.beta, "delta": self.indices.delta,
                            "epsilon": self.indices.epsilon}
        return d

    @classmethod
    def from_dict(cls, d) -> "SubcontrollerRealization":
        idx = d.get("indices")
        return cls(
            model=StateSpaceModel.from_dict(d["model"]),
            P=np.array(d["P"], dtype=float),
            Q=np.array(d["Q"], dtype=float),
            K=np.array(d["K"], dtype=float),
            linearization_deg=d.get("linearization_deg"),
            indices=SubcontrollerIndices(**idx) if idx else None,
            certificate=d.get("certificate", {}),
        )


def linearize_prewrapped(measured: RobotParams, cfg: SynthesisConfig, theta2_deg: float) -> StateSpaceModel:
    """Rate-output model of the arm with the proportional prewrap closed, linearized at ``q = (0, theta2)``."""
    if not np.isfinite(theta2_deg):
        raise InvalidInputError("linearization angle must be finite")
    Minv = np.linalg.inv(mass_matrix((0.0, np.deg2rad(theta2_deg)), measured))
    Z, I = np.zeros((2, 2)), np.eye(2)
    A = np.block([[Z, I], [-Minv @ cfg.Kp, Z]])
    B = np.vstack([Z, Minv])
    C = np.hstack([Z, I])
    return StateSpaceModel(A, B, C, np.zeros((2, 2)))


def lqr_gain(model: StateSpaceModel, cfg: SynthesisConfig) -> np.ndarray:
    _, K = linalg.solve_care(model.A, model.B, cfg.Q_lqr, cfg.R_lqr)
    return K


def lyapunov_weight(cfg: SynthesisConfig, model: StateSpaceModel, K: np.ndarray) -> np.ndarray:
    n = model.n_states
    if cfg.lyapunov_weight == "identity":
        Q = np.eye(n)
    else:
        # makes the Lyapunov certificate coincide with the Riccati solution
        Q = cfg.Q_lqr + K.T @ cfg.R_lqr @ K
    return cfg.lyapunov_scale * Q


def kyp_realize(model: StateSpaceModel, K, Q_lyap, delta: float) -> SubcontrollerRealization:
    """SPR-plus-feedthrough controller ``(A - BK, P^{-1} K^T, K, delta I)``.

    ``P`` solves the Lyapunov equation for the closed loop with weight
    ``Q_lyap``, so ``P B_c = C_c^T`` holds by construction.
    """
    if not delta > 0:
        raise InvalidInputError(f"feedthrough delta must be positive, got {delta}")
    K = np.atleast_2d(np.asarray(K, dtype=float))
    Ac = model.A - model.B @ K
    try:
        P = linalg.solve_lyapunov(Ac, Q_lyap)
    except (NoSolutionError, ConvergenceError) as exc:
        raise SynthesisError(f"Lyapunov step failed: {exc}") from exc
    Bc = np.linalg.solve(P, K.T)
    Dc = delta * np.eye(K.shape[0])
    real = SubcontrollerRealization(StateSpaceModel(Ac, Bc, K, Dc), P, np.atleast_2d(Q_lyap), K)
    gap = np.max(np.abs(P @ Bc - K.T))
    if gap > KYP_ATOL * max(1.0, linalg.induced_norm_2(K)):
        raise SynthesisError(f"KYP identity P B_c = C_c^T violated by {gap:.3e}")
    return real


def transfer_eval(model: StateSpaceModel, omega: float) -> np.ndarray:
    """``G(j omega) = C (j omega I - A)^{-1} B + D``."""
    n = model.n_states
    M = 1j * omega * np.eye(n) - model.A
    try:
        X = np.linalg.solve(M, model.B.astype(complex))
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"j*{omega} is (numerically) an eigenvalue of A") from exc
    return model.C @ X + model.D


def default_omega_grid(points: int = 400, lo: float = 1e-3, hi: float = 1e5) -> np.ndarray:
    return np.logspace(np.log10(lo), np.log10(hi), points)


def hermitian_min_eigs(model: StateSpaceModel, omegas) -> np.ndarray:
    out = []
    for w in omegas:
        G = transfer_eval(model, float(w))
        out.append(np.linalg.eigvalsh(G + G.conj().T)[0])
    return np.array(out)


def estimate_vsp_indices(real: SubcontrollerRealization, omegas) -> SubcontrollerIndices:
    """Frequency-sampled VSP indices.

    Half of the smallest Hermitian-part eigenvalue floor goes to ``delta``; the
    remaining margin sets ``epsilon`` against the largest gain at each frequency.
    """
    omegas = np.asarray(omegas, dtype=float)
    if omegas.size == 0:
        raise InvalidInputError("frequency grid must be nonempty")
    Gs = [transfer_eval(real.model, float(w)) for w in omegas]
    herm_min = np.array([np.linalg.eigvalsh(G + G.conj().T)[0] for G in Gs])
    delta = 0.5 * herm_min.min() / 2.0
    if not delta > 0:
        raise CertificationError(f"realization is not SPR on the grid (min Hermitian eigenvalue {herm_min.min():.3e})")
    m = Gs[0].shape[0]
    ratios = []
    for G in Gs:
        H = G + G.conj().T - 2.0 * delta * np.eye(m)
        gain = np.linalg.eigvalsh(G.conj().T @ G)[-1]
        ratios.append(np.linalg.eigvalsh(H)[0] / (2.0 * gain))
    eps = float(min(ratios))
    if not eps > 0:
        raise CertificationError(f"no positive output-strictness index on the grid ({eps:.3e})")
    return SubcontrollerIndices(delta=float(delta), epsilon=eps, beta=0.0)


def vsp_margin(real: SubcontrollerRealization, idx: SubcontrollerIndices, omegas) -> float:
    """``min_w lambda_min(G + G^H - 2 delta I - 2 eps G^H G)``; nonnegative means the indices hold."""
    worst = np.inf
    for w in np.asarray(omegas, dtype=float):
        G = transfer_eval(real.model, float(w))
        m = G.shape[0]
        H = G + G.conj().T - 2.0 * idx.delta * np.eye(m) - 2.0 * idx.epsilon * (G.conj().T @ G)
        worst = min(worst, np.linalg.eigvalsh(H)[0])
    return float(worst)


def synthesize_point(theta2_deg: float, cfg: SynthesisConfig, measured: RobotParams = MEASURED_PARAMS,
                     omegas=None) -> SubcontrollerRealization:
    model = linearize_prewrapped(measured, cfg, theta2_deg)
    P_are, K = linalg.solve_care(model.A, model.B, cfg.Q_lqr, cfg.R_lqr)
    real = kyp_realize(model, K, lyapunov_weight(cfg, model, K), cfg.feedthrough)
    real.linearization_deg = float(theta2_deg)
    omegas = cfg.omega_grid if omegas is None else np.asarray(omegas, dtype=float)
    herm = hermitian_min_eigs(real.model, omegas)
    real.indices = estimate_vsp_indices(real, omegas)
    fine = default_omega_grid(4 * len(omegas), omegas[0], omegas[-1])
    real.certificate = {
        "care_residual": linalg.care_residual(model.A, model.B, cfg.Q_lqr, cfg.R_lqr, P_are),
        "lyapunov_residual": linalg.lyapunov_residual(real.model.A, real.P, real.Q),
        "closed_loop_abscissa": linalg.spectral_abscissa(real.model.A),
        "kyp_gap": float(np.max(np.abs(real.P @ real.model.B - real.K.T))),
        "spr_min_hermitian_eig": float(herm.min()),
        "spr_floor": 2.0 * cfg.feedthrough,
        "spr_pass": bool(herm.min() >= 2.0 * cfg.feedthrough * (1 - 1e-6)),
        "vsp_margin_fine_grid": vsp_margin(real, real.indices, fine),
        "omega_points": int(len(omegas)),
    }
    return real


def synthesize_all(cfg: SynthesisConfig, measured: RobotParams = MEASURED_PARAMS) -> list[SubcontrollerRealization]:
    return [synthesize_point(th, cfg, measured) for th in cfg.linearization_deg]
