"""SVD-based pseudoinverse, numerical rank and orthogonal projectors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteInput


@dataclass(frozen=True)
class ToleranceParams:
    """Cutoffs standing in for exact rank and exact feasibility.

    rank_rtol: singular values <= rank_rtol * sigma_max count as zero.
    residual_atol: a lift is feasible when ||A u - b|| <= residual_atol * (1 + ||b||).
    """

    rank_rtol: float = 1e-10
    residual_atol: float = 1e-8

    def __post_init__(self):
        for name in ("rank_rtol", "residual_atol"):
            val = getattr(self, name)
            if not (0.0 < val < 1.0):
                raise ValueError(f"{name} must lie in (0, 1), got {val!r}")


DEFAULT_TOL = ToleranceParams()


def _checked(M) -> np.ndarray:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if not np.all(np.isfinite(M)):
        raise NonFiniteInput("matrix has non-finite entries")
    return M


def _svd(M, tol):
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return U, s, Vt, 0
    r = int(np.count_nonzero(s > tol.rank_rtol * s[0]))
    return U, s, Vt, r


def pinv(M, tol: ToleranceParams = DEFAULT_TOL) -> np.ndarray:
    M = _checked(M)
    if M.size == 0:
        return np.zeros(M.shape[::-1])
    U, s, Vt, r = _svd(M, tol)
    return (Vt[:r].T / s[:r]) @ U[:, :r].T


def numerical_rank(M, tol: ToleranceParams = DEFAULT_TOL) -> int:
    M = _checked(M)
    if M.size == 0:
        return 0
    return _svd(M, tol)[3]


def range_projector(M, tol: ToleranceParams = DEFAULT_TOL) -> np.ndarray:
    """Orthogonal projector onto the column space of M (equals M pinv(M))."""
    M = _checked(M)
    if M.size == 0:
        return np.zeros((M.shape[0], M.shape[0]))
    U, _, _, r = _svd(M, tol)
    Ur = U[:, :r]
    return Ur @ Ur.T


def kernel_projector(M, tol: ToleranceParams = DEFAULT_TOL) -> np.ndarray:
    """Orthogonal projector onto the null space of M (equals I - pinv(M) M)."""
    M = _checked(M)
    n = M.shape[1]
    if M.size == 0:
        return np.eye(n)
    _, _, Vt, r = _svd(M, tol)
    Vr = Vt[:r].T
    return np.eye(n) - Vr @ Vr.T
