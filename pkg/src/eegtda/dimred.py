"""Dimension reduction of multichannel segments to low-dimensional trajectories.

Two methods: PCA on the signal correlation matrix, and DyCA, which assumes
part of the dynamics is linear and solves the generalized eigenproblem

    C1 C0^{-1} C1^T u = lambda C2 u

built from the signal/derivative correlation matrices. Eigenvalues near 1
flag projection directions governed by linear differential equations.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import linalg

from .errors import AmbiguousModelError, ConfigError, DataError, InsufficientDataError, NumericalError

REG_FACTOR = 1e-10  # ridge added to C0/C2 as (REG_FACTOR * trace / M) * I
DEFAULT_EIG_THRESHOLD = 0.9


class Method(Enum):
    PCA = "PCA"
    DYCA = "DYCA"


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Reduced W x n point cloud; rows are time instants."""

    points: np.ndarray
    method: Method
    rate: float

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        object.__setattr__(self, "points", pts)
        if pts.ndim != 2 or pts.shape[0] < 2 or pts.shape[1] < 1:
            raise DataError(f"trajectory must be W x n with W >= 2, got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise DataError("trajectory contains non-finite values")


@dataclass(frozen=True, eq=False)
class DycaResult:
    trajectory: Trajectory
    eigenvalues: np.ndarray  # full spectrum, descending
    projection: np.ndarray  # M x n, columns are projection vectors
    m: int


@dataclass(frozen=True, eq=False)
class CorrelationSet:
    C0: np.ndarray
    C1: np.ndarray
    C2: np.ndarray


def derivative(data: np.ndarray, rate: float) -> np.ndarray:
    """Time derivative per channel: central differences inside, one-sided
    first order at the ends, scaled by the sampling rate."""
    data = np.asarray(data, dtype=np.float64)
    w = data.shape[-1]
    if w < 3:
        raise InsufficientDataError(f"derivative needs at least 3 samples, got {w}")
    out = np.empty_like(data)
    out[..., 1:-1] = (data[..., 2:] - data[..., :-2]) * (rate / 2.0)
    out[..., 0] = (data[..., 1] - data[..., 0]) * rate
    out[..., -1] = (data[..., -1] - data[..., -2]) * rate
    return out


def correlations(data: np.ndarray, rate: float) -> CorrelationSet:
    """Signal/derivative correlation matrices of mean-centered data.

    C0 = <q q^T>, C1 = <dq q^T>, C2 = <dq dq^T>, each divided by the
    sample count; C0 and C2 are symmetrized by averaging with their
    transpose.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2:
        raise DataError("expected an M x W matrix")
    w = data.shape[1]
    q = data - data.mean(axis=1, keepdims=True)
    dq = derivative(q, rate)
    c0 = q @ q.T / w
    c1 = dq @ q.T / w
    c2 = dq @ dq.T / w
    c0 = (c0 + c0.T) / 2.0
    c2 = (c2 + c2.T) / 2.0
    return CorrelationSet(C0=c0, C1=c1, C2=c2)


def _sign_fix_columns(mat: np.ndarray) -> np.ndarray:
    """Flip column signs so each column's largest-magnitude entry is positive."""
    out = mat.copy()
    for k in range(out.shape[1]):
        idx = int(np.argmax(np.abs(out[:, k])))
        if out[idx, k] < 0:
            out[:, k] = -out[:, k]
    return out


def pca(segment_data: np.ndarray, n: int, rate: float = 1.0) -> Trajectory:
    """Project onto the n leading eigenvectors of the signal correlation matrix.

    Eigenvectors are ordered by descending eigenvalue and sign-fixed so the
    largest-magnitude entry of each is positive; projections keep their
    natural scale (no variance normalization).
    """
    segment_data = np.asarray(segment_data, dtype=np.float64)
    m_ch, w = segment_data.shape
    if not 1 <= n <= min(m_ch, w - 1):
        raise ConfigError(
            f"n={n} out of range 1..min(M={m_ch}, W-1={w - 1}) for PCA"
        )
    q = segment_data - segment_data.mean(axis=1, keepdims=True)
    c0 = q @ q.T / w
    c0 = (c0 + c0.T) / 2.0
    evals, evecs = np.linalg.eigh(c0)
    order = np.argsort(evals)[::-1]
    vecs = _sign_fix_columns(evecs[:, order[:n]])
    return Trajectory(points=q.T @ vecs, method=Method.PCA, rate=rate)


def _solve_generalized(corr: CorrelationSet):
    """Eigen-decompose C1 C0^{-1} C1^T u = lambda C2 u.

    C0 and C2 get a tiny ridge; C2's Cholesky factor whitens the problem
    into an ordinary symmetric one. Returns (eigenvalues desc, U columns,
    C0^{-1} C1^T) in original coordinates.
    """
    m_ch = corr.C0.shape[0]
    reg0 = REG_FACTOR * np.trace(corr.C0) / m_ch
    reg2 = REG_FACTOR * np.trace(corr.C2) / m_ch
    c0 = corr.C0 + reg0 * np.eye(m_ch)
    c2 = corr.C2 + reg2 * np.eye(m_ch)

    try:
        c0_inv_c1t = np.linalg.solve(c0, corr.C1.T)
    except np.linalg.LinAlgError:
        raise NumericalError("C0 is singular beyond regularization") from None
    a = corr.C1 @ c0_inv_c1t
    a = (a + a.T) / 2.0

    try:
        chol = np.linalg.cholesky(c2)
    except np.linalg.LinAlgError:
        raise NumericalError("C2 is singular beyond regularization") from None
    # whiten: solve L y = a, then L z^T = y^T; eigh on z
    y = linalg.solve_triangular(chol, a, lower=True)
    z = linalg.solve_triangular(chol, y.T, lower=True)
    z = (z + z.T) / 2.0
    evals, evecs = np.linalg.eigh(z)
    order = np.argsort(evals)[::-1]
    evals = evals[order]
    u = linalg.solve_triangular(chol.T, evecs[:, order], lower=False)
    return evals, u, c0_inv_c1t


def dyca(
    segment_data: np.ndarray,
    rate: float,
    n: int,
    m: int,
    eig_threshold: float | None = None,
) -> DycaResult:
    """Dynamical component analysis of one segment.

    Picks the m leading generalized eigenvectors u_i (or all with
    eigenvalue >= eig_threshold when given, which must select exactly m),
    forms complementary vectors v_i = C0^{-1} C1^T u_i, and projects onto
    {u_1..u_m} plus the first n-m of the v_i. Trajectory columns are scaled
    to unit variance with the largest-magnitude-entry-positive convention,
    which makes the result invariant under rescaling the input.
    """
    segment_data = np.asarray(segment_data, dtype=np.float64)
    m_ch = segment_data.shape[0]
    if not 0 <= n - m <= m:
        raise ConfigError(f"need m >= n-m >= 0, got n={n}, m={m}")
    if n < 1 or n > m_ch:
        raise ConfigError(f"n={n} out of range 1..{m_ch}")

    corr = correlations(segment_data, rate)
    evals, u_all, c0_inv_c1t = _solve_generalized(corr)

    if eig_threshold is None:
        chosen = np.arange(m)
    else:
        chosen = np.flatnonzero(evals >= eig_threshold)
        if len(chosen) != m:
            raise AmbiguousModelError(
                f"threshold {eig_threshold} selects {len(chosen)} eigenvalues, "
                f"expected m={m}; spectrum: "
                + ", ".join(f"{v:.6g}" for v in evals)
            )
    u = u_all[:, chosen]
    v = c0_inv_c1t @ u
    projection = np.concatenate([u, v[:, : n - m]], axis=1)

    if np.linalg.matrix_rank(projection) < n:
        raise NumericalError("projection vectors are linearly dependent")

    q = segment_data - segment_data.mean(axis=1, keepdims=True)
    pts = q.T @ projection
    stds = pts.std(axis=0)
    if np.any(stds <= 0) or not np.all(np.isfinite(stds)):
        raise NumericalError("degenerate trajectory component (zero variance)")
    pts = _sign_fix_columns(pts / stds)
    traj = Trajectory(points=pts, method=Method.DYCA, rate=rate)
    return DycaResult(trajectory=traj, eigenvalues=evals, projection=projection, m=m)
