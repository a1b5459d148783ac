"""Dense linear-algebra kernels: spectra, numerical rank, Lyapunov and Riccati solvers.

Eigenvalue and SVD work is delegated to LAPACK through numpy. The Lyapunov
solver vectorizes the equation into an ``n**2`` linear system, which is cheap
for the 4-state models used here. The Riccati solver extracts the stable
invariant subspace of the Hamiltonian matrix and falls back to Newton-Kleinman
iteration when that subspace basis is badly conditioned.

Every solver checks its own residual before returning.
"""

from __future__ import annotations

import numpy as np

from .errors import ConvergenceError, InvalidInputError, NoSolutionError, SynthesisError

SYMMETRY_RTOL = 1e-10
LYAPUNOV_RTOL = 1e-9
CARE_RTOL = 1e-8
HAMILTONIAN_COND_MAX = 1e8
NEWTON_MAX_ITER = 100
NEWTON_TOL = 1e-13


def _as_matrix(A, name="A") -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    elif A.ndim == 1:
        A = A.reshape(1, -1)
    if A.ndim != 2 or A.size == 0:
        raise InvalidInputError(f"{name} must be a nonempty 2-D matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return A


def _as_square(A, name="A") -> np.ndarray:
    A = _as_matrix(A, name)
    if A.shape[0] != A.shape[1]:
        raise InvalidInputError(f"{name} must be square, got shape {A.shape}")
    return A


def singular_values(A) -> np.ndarray:
    """Singular values of ``A`` in descending order."""
    A = _as_matrix(A)
    return np.linalg.svd(A, compute_uv=False)


def induced_norm_2(A) -> float:
    return float(singular_values(A)[0])


def min_eig_sym(S) -> float:
    """Smallest eigenvalue of the symmetric part of ``S``.

    ``S`` must already be symmetric to within ``SYMMETRY_RTOL`` relative to its
    2-norm; the symmetrization only removes rounding noise.
    """
    S = _as_square(S, "S")
    scale = max(induced_norm_2(S), 1.0)
    if np.max(np.abs(S - S.T)) > SYMMETRY_RTOL * scale:
        raise InvalidInputError("S is not symmetric")
    return float(np.linalg.eigvalsh(0.5 * (S + S.T))[0])


def default_rank_tol(A) -> float:
    A = _as_matrix(A)
    sv = singular_values(A)
    return max(A.shape) * sv[0] * np.finfo(float).eps


def rank_svd(A, tol: float = 0.0) -> int:
    """Numerical rank: number of singular values strictly above ``tol``.

    ``tol = 0`` selects ``max(rows, cols) * sigma_max * eps``.
    """
    if tol < 0:
        raise InvalidInputError("tol must be non-negative")
    A = _as_matrix(A)
    sv = singular_values(A)
    if tol == 0.0:
        tol = max(A.shape) * sv[0] * np.finfo(float).eps
    return int(np.count_nonzero(sv > tol))


def spectral_abscissa(A) -> float:
    return float(np.max(np.linalg.eigvals(_as_square(A)).real))


def is_hurwitz(A) -> bool:
    return spectral_abscissa(A) < 0.0


def _kron_sylvester(A: np.ndarray, Q: np.ndarray) -> np.ndarray:
    # Solves A^T X + X A = -Q via (I kron A^T + A^T kron I) vec(X) = -vec(Q).
    n = A.shape[0]
    eye = np.eye(n)
    L = np.kron(eye, A.T) + np.kron(A.T, eye)
    x = np.linalg.solve(L, -Q.reshape(-1, order="F"))
    X = x.reshape(n, n, order="F")
    return 0.5 * (X + X.T)


def lyapunov_residual(A, P, Q) -> float:
    A, P, Q = (np.asarray(M, dtype=float) for M in (A, P, Q))
    return induced_norm_2(A.T @ P + P @ A + Q)


def solve_lyapunov(A, Q, rtol: float = LYAPUNOV_RTOL) -> np.ndarray:
    """Solve ``A^T P + P A = -Q`` for Hurwitz ``A`` and ``Q = Q^T > 0``.

    Raises
    ------
    NoSolutionError
        If ``A`` is not Hurwitz.
    ConvergenceError
        If the residual exceeds ``rtol * ||Q||_2``.
    """
    A = _as_square(A, "A")
    Q = _as_square(Q, "Q")
    if Q.shape != A.shape:
        raise InvalidInputError(f"Q shape {Q.shape} does not match A shape {A.shape}")
    if min_eig_sym(Q) <= 0:
        raise InvalidInputError("Q must be positive definite")
    if not is_hurwitz(A):
        raise NoSolutionError(f"A is not Hurwitz (spectral abscissa {spectral_abscissa(A):.3e})")
    P = _kron_sylvester(A, Q)
    res = lyapunov_residual(A, P, Q)
    if res > rtol * induced_norm_2(Q):
        raise ConvergenceError(f"Lyapunov residual {res:.3e} exceeds tolerance")
    return P


def care_residual(A, B, Q, R, P) -> float:
    A, B, Q, R, P = (np.asarray(M, dtype=float) for M in (A, B, Q, R, P))
    return induced_norm_2(A.T @ P + P @ A - P @ B @ np.linalg.solve(R, B.T @ P) + Q)


def _hamiltonian_care(A, B, Q, R):
    n = A.shape[0]
    G = B @ np.linalg.solve(R, B.T)
    H = np.block([[A, -G], [-Q, -A.T]])
    w, V = np.linalg.eig(H)
    stable = np.argsort(w.real)[:n]
    if np.any(w[stable].real >= 0):
        return None, np.inf
    U1, U2 = V[:n, stable], V[n:, stable]
    cond = np.linalg.cond(U1)
    if not np.isfinite(cond):
        return None, np.inf
    P = np.real(np.linalg.solve(U1.T, U2.T).T)
    return 0.5 * (P + P.T), cond


def _bass_gain(A, B):
    # Stabilizing gain K = B^T Z^{-1} with (A + bI) Z + Z (A + bI)^T = 2 B B^T.
    n = A.shape[0]
    b = 1.0 + induced_norm_2(A)
    Z = _kron_sylvester((A + b * np.eye(n)).T, -2.0 * B @ B.T)
    return B.T @ np.linalg.inv(Z)


def _newton_kleinman(A, B, Q, R, K0):
    K = K0
    P_prev = None
    for _ in range(NEWTON_MAX_ITER):
        Ak = A - B @ K
        if not is_hurwitz(Ak):
            raise SynthesisError("Newton-Kleinman iterate lost stability")
        P = _kron_sylvester(Ak, Q + K.T @ R @ K)
        K = np.linalg.solve(R, B.T @ P)
        if P_prev is not None and induced_norm_2(P - P_prev) <= NEWTON_TOL * max(1.0, induced_norm_2(P)):
            break
        P_prev = P
    return P


def solve_care(A, B, Q, R, rtol: float = CARE_RTOL):
    """Stabilizing solution of ``A^T P + P A - P B R^{-1} B^T P + Q = 0``.

    Returns ``(P, K)`` with ``K = R^{-1} B^T P`` and ``A - B K`` Hurwitz.
    """
    A = _as_square(A, "A")
    B = _as_matrix(B, "B")
    Q = _as_square(Q, "Q")
    R = _as_square(R, "R")
    n, m = B.shape
    if A.shape[0] != n or Q.shape != A.shape or R.shape != (m, m):
        raise InvalidInputError("inconsistent CARE dimensions")
    if min_eig_sym(Q) < -SYMMETRY_RTOL * max(1.0, induced_norm_2(Q)):
        raise InvalidInputError("Q must be positive semidefinite")
    if min_eig_sym(R) <= 0:
        raise InvalidInputError("R must be positive definite")

    tol = rtol * max(1.0, induced_norm_2(Q))
    P, cond = _hamiltonian_care(A, B, Q, R)
    # an accurate-but-slightly-off subspace solution also gets Newton polishing
    if P is None or cond > HAMILTONIAN_COND_MAX or care_residual(A, B, Q, R, P) > tol:
        K0 = np.linalg.solve(R, B.T @ P) if P is not None else None
        if K0 is None or not is_hurwitz(A - B @ K0):
            K0 = _bass_gain(A, B)
        if not is_hurwitz(A - B @ K0):
            raise SynthesisError("no stabilizing initial gain; (A, B) may not be stabilizable")
        P = _newton_kleinman(A, B, Q, R, K0)

    K = np.linalg.solve(R, B.T @ P)
    res = care_residual(A, B, Q, R, P)
    if res > tol:
        raise SynthesisError(f"CARE residual {res:.3e} exceeds tolerance")
    if not is_hurwitz(A - B @ K):
        raise SynthesisError(
            f"CARE solution is not stabilizing (abscissa {spectral_abscissa(A - B @ K):.3e}, residual {res:.3e})"
        )
    return P, K
