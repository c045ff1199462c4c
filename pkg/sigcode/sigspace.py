"""Signature-space geometry: exact rank, column-span membership, complement bases, log-determinants"""

import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidVectorError

logger = logging.getLogger(__name__)

LOG2 = math.log(2.0)
BASIS_METHODS = ("householder", "gram_schmidt")


def _integer_rows(matrix) -> List[List[int]]:
    array = np.asarray(matrix)
    if array.ndim == 1:
        array = array[:, np.newaxis]
    if array.ndim != 2:
        raise InvalidVectorError(f"expected a matrix, got an array of shape {array.shape}")
    if array.size and array.dtype.kind == "O":
        if not all(float(x).is_integer() for x in array.ravel()):
            raise InvalidVectorError("exact rank needs an integer matrix")
    elif array.size and array.dtype.kind not in "iub":
        if array.dtype.kind != "f" or not np.all(np.isfinite(array)) or not np.all(array == np.round(array)):
            raise InvalidVectorError("exact rank needs an integer matrix")
    return [[int(x) for x in row] for row in array.tolist()]


def exact_rank(matrix) -> int:
    """Rank over the rationals by fraction-free elimination with row-gcd normalization."""
    rows = [row for row in _integer_rows(matrix) if any(row)]
    if not rows:
        return 0
    ncols = len(rows[0])
    rank = 0
    for col in range(ncols):
        pivot = next((r for r in range(rank, len(rows)) if rows[r][col] != 0), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        p_row = rows[rank]
        p = p_row[col]
        for r in range(rank + 1, len(rows)):
            a = rows[r][col]
            if a == 0:
                continue
            reduced = [p * x - a * y for x, y in zip(rows[r], p_row)]
            g = math.gcd(*reduced)
            rows[r] = [x // g for x in reduced] if g > 1 else reduced
        rank += 1
        if rank == len(rows):
            break
    return rank


def in_column_span(s: Sequence[int], S) -> bool:
    """True iff s is a rational combination of the columns of S (K x m)."""
    s_col = np.asarray(s).reshape(-1, 1)
    S = np.asarray(S)
    if S.size == 0:
        return not np.any(s_col)
    if S.ndim != 2 or S.shape[0] != s_col.shape[0]:
        raise InvalidVectorError(f"S has shape {S.shape}, expected ({s_col.shape[0]}, m)")
    return exact_rank(np.hstack([S, s_col])) == exact_rank(S)


def complement_basis(s: Sequence[float], method: str = "householder") -> np.ndarray:
    """K x (K-1) matrix G with orthonormal columns orthogonal to s.

    s = 0 returns the identity I_K.
    """
    v = np.asarray(s, dtype=float)
    if v.ndim != 1 or not np.all(np.isfinite(v)):
        raise InvalidVectorError("signature must be a finite vector")
    K = len(v)
    norm = np.linalg.norm(v)
    if norm == 0.0:
        return np.eye(K)
    if K == 1:
        return np.zeros((1, 0))
    v = v / norm

    if method == "householder":
        u = v.copy()
        u[0] += 1.0 if v[0] >= 0 else -1.0
        reflector = np.eye(K) - 2.0 * np.outer(u, u) / (u @ u)
        return reflector[:, 1:]

    if method == "gram_schmidt":
        basis = [v]
        for e in np.eye(K):
            w = e - sum((b @ e) * b for b in basis)
            w = w - sum((b @ w) * b for b in basis)
            w_norm = np.linalg.norm(w)
            if w_norm > 1e-10:
                basis.append(w / w_norm)
            if len(basis) == K:
                break
        return np.column_stack(basis[1:])

    raise ValueError(f"method must be one of {BASIS_METHODS}, got {method!r}")


def log2det_pd(matrices: np.ndarray) -> np.ndarray:
    """log2 det of (a stack of) Hermitian positive-definite matrices via Cholesky."""
    matrices = np.asarray(matrices)
    if matrices.shape[-1] == 0:
        return np.zeros(matrices.shape[:-2])
    try:
        chol = np.linalg.cholesky(matrices)
        diag = np.abs(np.diagonal(chol, axis1=-2, axis2=-1))
        return 2.0 * np.log(diag).sum(axis=-1) / LOG2
    except np.linalg.LinAlgError:
        logger.debug("Cholesky failed, falling back to slogdet")
        _, logdet = np.linalg.slogdet(matrices)
        return logdet / LOG2


def _check_inputs(s, S, gains_sq, beta_sq: float, gamma: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    s = np.asarray(s, dtype=float)
    S = np.asarray(S, dtype=float)
    gains = np.asarray(gains_sq, dtype=float).reshape(-1)
    K = len(s)
    if S.size == 0 and S.ndim < 3:
        S = np.zeros((K, 0))
    if S.ndim not in (2, 3) or S.shape[-2] != K:
        raise InvalidVectorError(f"S has shape {S.shape}, expected ({K}, m) or (C, {K}, m)")
    if S.shape[-1] != len(gains):
        raise InvalidVectorError(f"{S.shape[-1]} interferer columns but {len(gains)} gains")
    if not (np.all(np.isfinite(s)) and np.all(np.isfinite(S)) and np.all(np.isfinite(gains))):
        raise InvalidVectorError("signatures and gains must be finite")
    if np.any(gains < 0):
        raise InvalidVectorError("gains must be nonnegative")
    for name, value in (("beta_sq", beta_sq), ("gamma", gamma)):
        if not math.isfinite(value) or value <= 0:
            raise InvalidVectorError(f"{name} must be positive and finite, got {value}")
    return s, S, gains


def _interference(S: np.ndarray, gains: np.ndarray) -> np.ndarray:
    return np.einsum("...kj,j,...lj->...kl", S, gains, S)


def det_ratio_terms(
    s: Sequence[float],
    S,
    gains_sq: Sequence[float],
    beta_sq: float,
    gamma: float,
    basis: Optional[np.ndarray] = None,
):
    """(log2 det(I + b G^T S Xi Xi^T S^T G), log2 det(I + b S Xi Xi^T S^T)) with b = beta_sq * gamma.

    The first term is the interference left after projecting away from s.
    S may be one K x m matrix (floats returned) or a stack (C, K, m) (arrays of length C).
    """
    s, S, gains = _check_inputs(s, S, gains_sq, beta_sq, gamma)
    K = len(s)
    scale = beta_sq * gamma
    M = _interference(S, gains)
    den = log2det_pd(np.eye(K) + scale * M)
    G = complement_basis(s) if basis is None else np.asarray(basis, dtype=float)
    if G.shape[1] == 0:
        num = np.zeros_like(den)
    else:
        num = log2det_pd(np.eye(G.shape[1]) + scale * (G.T @ M @ G))
    if S.ndim == 2:
        return float(num), float(den)
    return num, den


def informed_log_det(
    s: Sequence[float],
    S,
    own_gain_sq: float,
    gains_sq: Sequence[float],
    beta_sq: float,
    gamma: float,
):
    """log2 det(I + b (|h_ii|^2 s s^T + S Xi Xi^T S^T)) with b = beta_sq * gamma.

    Accepts a stack of interferer matrices like det_ratio_terms.
    """
    s, S, gains = _check_inputs(s, S, gains_sq, beta_sq, gamma)
    if not math.isfinite(own_gain_sq) or own_gain_sq < 0:
        raise InvalidVectorError(f"own_gain_sq must be finite and nonnegative, got {own_gain_sq}")
    M = own_gain_sq * np.outer(s, s) + _interference(S, gains)
    result = log2det_pd(np.eye(len(s)) + beta_sq * gamma * M)
    return float(result) if S.ndim == 2 else result
