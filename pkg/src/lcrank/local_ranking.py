"""Per-neighborhood ranking regularizers and the global score solve.

Within each neighborhood a ridge-regularized linear predictor maps sparse
codes to ranking scores. Minimizing the prediction error in closed form
leaves a quadratic penalty on the neighborhood's scores:

    min_w ||f_i - w'S_i||^2 + beta*||w||^2  =  f_i' L_i f_i

with the optimal predictor w_i given by a solution operator applied to
f_i. Scattering every L_i onto the full index set yields one n-by-n
penalty matrix, and the scores solve a single symmetric linear system that
balances that penalty against the query-anchoring term.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ._parallel import pmap
from .io import QueryIndicator
from .neighbors import NeighborhoodIndex, gather_local_scores

# Stationarity slack for the score solve, scaled by (1 + delta*y).
_SCORE_RESIDUAL_TOL = 0.5e-7


@dataclass
class ScoreVector:
    """Ranking scores for all points plus the anchor they are pulled to."""

    values: np.ndarray  # shape (n,)
    anchor: float
    ridged: bool = False  # singular system solved with a tiny ridge

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1:
            raise ValueError("scores must be 1-d")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("scores must be finite")
        if self.anchor <= 0:
            raise ValueError("anchor must be > 0")

    @property
    def n(self) -> int:
        return self.values.shape[0]


def predictor_operator(S_i: np.ndarray, beta: float) -> np.ndarray:
    """Operator mapping local scores to the optimal local predictor.

    Computes (S_i S_i' + beta*I)^{-1} S_i through a Cholesky solve; beta > 0
    keeps the system positive definite.
    """
    if beta <= 0:
        raise ValueError("beta must be > 0")
    S_i = np.asarray(S_i, dtype=float)
    if S_i.ndim != 2:
        raise ValueError("local code matrix must be 2-d")
    m = S_i.shape[0]
    B = S_i @ S_i.T + beta * np.eye(m)
    factor = scipy.linalg.cho_factor(B, lower=True)
    return scipy.linalg.cho_solve(factor, S_i)


def local_penalty(S_i: np.ndarray, op: np.ndarray, beta: float) -> np.ndarray:
    """Quadratic score penalty left after eliminating the local predictor.

    With T = I - op'S_i the penalty is T T' + beta * op'op, symmetric PSD;
    f_i' L f_i equals the minimized local objective.
    """
    S_i = np.asarray(S_i, dtype=float)
    op = np.asarray(op, dtype=float)
    if op.shape != S_i.shape:
        raise ValueError(f"operator shape {op.shape} != codes shape {S_i.shape}")
    k = S_i.shape[1]
    T = np.eye(k) - op.T @ S_i
    L = T @ T.T + beta * (op.T @ op)
    return 0.5 * (L + L.T)


def assemble_penalty(
    penalties: list[np.ndarray], index: NeighborhoodIndex, n: int | None = None
) -> np.ndarray:
    """Scatter the per-neighborhood penalties into one n-by-n matrix.

    Entry (a, b) accumulates L_i[j, j'] over every neighborhood i whose
    j-th and j'-th neighbors are a and b; equal to the dense sum of
    H_i L_i H_i' over all selector matrices H_i.
    """
    if n is None:
        n = index.n
    if len(penalties) != index.n or n != index.n:
        raise ValueError("penalty list does not match the neighborhood index")
    M = np.zeros((n, n))
    k = index.k
    for i, L in enumerate(penalties):
        if L.shape != (k, k):
            raise ValueError(f"penalty {i} has shape {L.shape}, expected ({k}, {k})")
        ids = index.neighbor_ids[i]
        np.add.at(M, (ids[:, None], ids[None, :]), L)
    return M


def solve_scores(
    M: np.ndarray,
    queries: QueryIndicator | np.ndarray,
    y: float,
    gamma: float,
    delta: float,
) -> ScoreVector:
    """Solve (gamma*M + delta*diag(lam)) f = delta*y*lam for the scores.

    The system matrix is symmetric PSD. If the direct solve fails or leaves
    a large residual (singular system), a ridge of 1e-10 * trace/n is added
    and the result is flagged as ridged.
    """
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    if delta <= 0:
        raise ValueError("delta must be > 0")
    if y <= 0:
        raise ValueError("y must be > 0")
    lam = queries.values if isinstance(queries, QueryIndicator) else np.asarray(queries)
    lam = lam.astype(float)
    M = np.asarray(M, dtype=float)
    n = lam.shape[0]
    if M.shape != (n, n):
        raise ValueError(f"M has shape {M.shape}, expected ({n}, {n})")

    A = gamma * 0.5 * (M + M.T) + delta * np.diag(lam)
    rhs = delta * y * lam
    allowed = _SCORE_RESIDUAL_TOL * (1.0 + delta * y)

    f = _try_spd_solve(A, rhs)
    if f is not None and np.abs(A @ f - rhs).max() <= allowed:
        return ScoreVector(values=f, anchor=y, ridged=False)

    ridge = 1e-10 * np.trace(A) / n
    f = _try_spd_solve(A + ridge * np.eye(n), rhs)
    if f is None:
        raise np.linalg.LinAlgError("score system is singular even after ridging")
    return ScoreVector(values=f, anchor=y, ridged=True)


def _try_spd_solve(A: np.ndarray, rhs: np.ndarray) -> np.ndarray | None:
    try:
        factor = scipy.linalg.cho_factor(A, lower=True)
        f = scipy.linalg.cho_solve(factor, rhs)
    except (scipy.linalg.LinAlgError, np.linalg.LinAlgError):
        return None
    if not np.all(np.isfinite(f)):
        return None
    return f


def recover_predictors(
    operators: list[np.ndarray], f: np.ndarray | ScoreVector, index: NeighborhoodIndex
) -> np.ndarray:
    """Optimal local predictors for the given scores, one row per point."""
    values = f.values if isinstance(f, ScoreVector) else np.asarray(f, dtype=float)
    if len(operators) != index.n:
        raise ValueError("operator list does not match the neighborhood index")
    m = operators[0].shape[0]
    W = np.empty((index.n, m))
    for i, op in enumerate(operators):
        W[i] = op @ gather_local_scores(values, index, i)
    return W


def local_objective(S_i: np.ndarray, f_i: np.ndarray, w_i: np.ndarray, beta: float) -> float:
    """Prediction error plus ridge penalty for one neighborhood."""
    S_i = np.asarray(S_i, dtype=float)
    f_i = np.asarray(f_i, dtype=float)
    w_i = np.asarray(w_i, dtype=float)
    if S_i.shape != (w_i.shape[0], f_i.shape[0]):
        raise ValueError(
            f"incompatible shapes codes {S_i.shape}, scores {f_i.shape}, predictor {w_i.shape}"
        )
    r = f_i - w_i @ S_i
    return float(r @ r + beta * (w_i @ w_i))


@dataclass
class LocalRankingCache:
    """Per-neighborhood operators and penalties plus their global scatter."""

    predictor_ops: list[np.ndarray]  # n matrices of shape (m, k)
    penalties: list[np.ndarray]  # n symmetric PSD matrices of shape (k, k)
    global_penalty: np.ndarray  # (n, n) symmetric PSD


def build_cache(
    S: np.ndarray, index: NeighborhoodIndex, beta: float, n_threads: int = 0
) -> LocalRankingCache:
    """Compute all per-neighborhood quantities for the current codes."""
    S = np.asarray(S, dtype=float)

    def one(i: int) -> tuple[np.ndarray, np.ndarray]:
        S_i = S[:, index.neighbor_ids[i]]
        op = predictor_operator(S_i, beta)
        return op, local_penalty(S_i, op, beta)

    pairs = pmap(one, range(index.n), n_threads)
    ops = [p[0] for p in pairs]
    penalties = [p[1] for p in pairs]
    return LocalRankingCache(ops, penalties, assemble_penalty(penalties, index))
