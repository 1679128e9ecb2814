"""L1-regularized coding subproblems and the norm-constrained dictionary fit.

Sparse codes are plain float vectors. Both coding variants (reconstruction
only, and reconstruction plus score-consistency terms) reduce to one
canonical problem

    minimize  s'As - 2b's + c + alpha*||s||_1

solved by feature-sign search: an active-set method that guesses the signs
of the nonzero coefficients, solves the resulting unconstrained quadratic,
and line-searches across sign flips.

The dictionary step minimizes the summed reconstruction error subject to a
squared-norm bound on every codeword, via its Lagrange dual over one
nonnegative multiplier per codeword (damped Newton, with a per-coordinate
bisection fallback).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Feasibility slack on the codeword norm bound.
_NORM_SLACK = 1e-9
# Coefficients below this magnitude are treated as exactly zero.
_ZERO_EPS = 1e-14


class ConvergenceError(RuntimeError):
    """An iterative solver failed to reach its stopping conditions."""


@dataclass
class Dictionary:
    """Codeword matrix with columns bounded by ||d_l||^2 <= C."""

    columns: np.ndarray  # shape (d, m)
    C: float

    def __post_init__(self):
        self.columns = np.asarray(self.columns, dtype=float)
        if self.columns.ndim != 2:
            raise ValueError("dictionary columns must form a 2-d array")
        if self.C <= 0:
            raise ValueError("C must be > 0")
        if not np.all(np.isfinite(self.columns)):
            raise ValueError("dictionary entries must be finite")
        norms2 = np.einsum("ij,ij->j", self.columns, self.columns)
        worst = norms2.max(initial=0.0)
        if worst > self.C + _NORM_SLACK:
            raise ValueError(
                f"codeword norm bound violated: max ||d||^2 = {worst:.12g} > C = {self.C:.12g}"
            )

    @property
    def d(self) -> int:
        return self.columns.shape[0]

    @property
    def m(self) -> int:
        return self.columns.shape[1]


@dataclass
class QuadL1Problem:
    """Canonical quadratic-plus-L1 problem s'As - 2b's + c + alpha*||s||_1."""

    A: np.ndarray  # (m, m), symmetric PSD
    b: np.ndarray  # (m,)
    c: float
    alpha: float

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        if self.A.ndim != 2 or self.A.shape[0] != self.A.shape[1]:
            raise ValueError("A must be square")
        if self.b.shape != (self.A.shape[0],):
            raise ValueError(f"b has shape {self.b.shape}, expected ({self.A.shape[0]},)")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        asym = np.abs(self.A - self.A.T).max(initial=0.0)
        if asym > 1e-10 * max(1.0, np.abs(self.A).max(initial=0.0)):
            raise ValueError(f"A must be symmetric, asymmetry {asym:.3g}")
        self.A = 0.5 * (self.A + self.A.T)

    @property
    def m(self) -> int:
        return self.b.shape[0]

    def objective(self, s: np.ndarray) -> float:
        s = np.asarray(s, dtype=float)
        return float(s @ self.A @ s - 2.0 * self.b @ s + self.c + self.alpha * np.abs(s).sum())


def build_plain_problem(x: np.ndarray, D: Dictionary, alpha: float) -> QuadL1Problem:
    """Coding problem for one point: ||x - Ds||^2 + alpha*||s||_1."""
    x = np.asarray(x, dtype=float)
    if x.shape != (D.d,):
        raise ValueError(f"x has shape {x.shape}, expected ({D.d},)")
    B = D.columns
    return QuadL1Problem(A=B.T @ B, b=B.T @ x, c=float(x @ x), alpha=alpha)


def build_augmented_problem(
    x: np.ndarray,
    D: Dictionary,
    alpha: float,
    gamma: float,
    f_i: float,
    owners: np.ndarray,
) -> QuadL1Problem:
    """Coding problem for one point with score-consistency terms.

    ``owners`` stacks the predictor vectors of every neighborhood that
    contains the point (shape (p, m), possibly empty); each adds
    gamma * (f_i - w's)^2 to the plain problem.
    """
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    x = np.asarray(x, dtype=float)
    if x.shape != (D.d,):
        raise ValueError(f"x has shape {x.shape}, expected ({D.d},)")
    W = np.asarray(owners, dtype=float).reshape(-1, D.m)
    B = D.columns
    A = B.T @ B + gamma * (W.T @ W)
    b = B.T @ x + gamma * f_i * W.sum(axis=0)
    c = float(x @ x) + gamma * W.shape[0] * f_i**2
    return QuadL1Problem(A=A, b=b, c=c, alpha=alpha)


def feature_sign_solve(problem: QuadL1Problem, tol: float = 1e-10) -> np.ndarray:
    """Minimize a QuadL1Problem by feature-sign search.

    Returns s satisfying the subgradient conditions within ``tol``:
    |2(As - b)_j| <= alpha where s_j = 0, and 2(As - b)_j + alpha*sign(s_j)
    close to 0 elsewhere. Raises :class:`ConvergenceError` if the sweep
    limit is hit or the objective fails to decrease (symptoms of an
    indefinite A).

    A PSD-singular A (overcomplete dictionaries give rank(A) < m) is made
    positive definite by a relative Tikhonov floor of 1e-12, which keeps
    every reduced active-set system consistent; the induced shift in the
    stationarity conditions, 2e-12 * scale * ||s||, is far below every
    stated tolerance.
    """
    if tol <= 0:
        raise ValueError("tol must be > 0")
    alpha = problem.alpha
    diag_max = np.abs(np.diag(problem.A)).max(initial=0.0)
    A = problem.A + (1e-12 * diag_max) * np.eye(problem.m)
    b = problem.b
    m = problem.m
    s = np.zeros(m)
    theta = np.zeros(m)  # sign guesses, 0 = inactive
    active = np.zeros(m, dtype=bool)
    max_sweeps = 10 * m

    def restricted_objective(idx: np.ndarray, vec: np.ndarray) -> float:
        sub = A[np.ix_(idx, idx)]
        return float(vec @ sub @ vec - 2.0 * b[idx] @ vec + alpha * np.abs(vec).sum())

    best_obj = 0.0  # objective of the zero vector, without the constant c
    for _ in range(max_sweeps):
        grad = 2.0 * (A @ s - b)

        # Activate the worst zero-coefficient violator, if any.
        slack = np.abs(grad) - alpha
        slack[active] = -np.inf
        j = int(np.argmax(slack))
        if slack[j] > tol:
            theta[j] = -np.sign(grad[j])
            active[j] = True
        elif not active.any():
            return s
        else:
            nz = np.flatnonzero(active)
            if np.abs(grad[nz] + alpha * theta[nz]).max() <= tol:
                return s

        # Refine the active set until its stationarity conditions hold.
        for _ in range(max(max_sweeps, 16)):
            idx = np.flatnonzero(active)
            A_act = A[np.ix_(idx, idx)]
            rhs = b[idx] - 0.5 * alpha * theta[idx]
            s_old = s[idx]
            s_new = _reduced_minimizer(A_act, rhs)

            candidate = s_new
            cand_obj = restricted_objective(idx, s_new)
            flipped = np.flatnonzero(np.sign(s_new) != theta[idx])
            for t in flipped:
                denom = s_old[t] - s_new[t]
                if denom == 0.0:
                    continue
                prop = s_old[t] / denom
                if not 0.0 < prop <= 1.0:
                    continue
                crossing = s_old + prop * (s_new - s_old)
                crossing[t] = 0.0
                obj = restricted_objective(idx, crossing)
                if obj < cand_obj:
                    cand_obj = obj
                    candidate = crossing

            # Ill-conditioned reduced solves can leave noise-level wiggle;
            # a macroscopic increase means A is indefinite.
            scale = 1.0 + abs(best_obj)
            if cand_obj > best_obj + 1e-6 * scale:
                raise ConvergenceError(
                    "feature-sign step increased the objective; A is not PSD"
                )
            best_obj = min(best_obj, cand_obj)

            s[idx] = candidate
            dead = idx[np.abs(s[idx]) < _ZERO_EPS]
            s[dead] = 0.0
            active[dead] = False
            theta[dead] = 0.0
            live = np.flatnonzero(active)
            theta[live] = np.sign(s[live])
            if live.size == 0:
                break
            grad = 2.0 * (A @ s - b)
            if np.abs(grad[live] + alpha * theta[live]).max() <= tol:
                break
        else:
            raise ConvergenceError("feature-sign inner loop did not converge")
    else:
        raise ConvergenceError(
            f"feature-sign search did not converge within {max_sweeps} sweeps"
        )
    return s


def _reduced_minimizer(A_act: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Minimizer of the sign-fixed reduced quadratic (A_act PD)."""
    try:
        x = np.linalg.solve(A_act, rhs)
        if np.all(np.isfinite(x)):
            return x
    except np.linalg.LinAlgError:
        pass
    return np.linalg.lstsq(A_act, rhs, rcond=None)[0]


@dataclass
class DictionaryUpdate:
    """Result of the constrained dictionary fit."""

    dictionary: Dictionary
    multipliers: np.ndarray  # one nonnegative dual variable per codeword
    degenerate: bool  # rank-deficient system solved through a tiny ridge


def dictionary_update(
    X: np.ndarray,
    S: np.ndarray,
    C: float,
    tol: float = 1e-9,
    prev: Dictionary | None = None,
) -> DictionaryUpdate:
    """Minimize sum_i ||x_i - D s_i||^2 subject to ||d_l||^2 <= C.

    Solved through the Lagrange dual over per-codeword multipliers: the
    optimal columns are X S' (S S' + Lambda)^{-1}. Codewords whose code row
    is identically zero are unconstrained by the data and keep their value
    from ``prev`` (zero if no previous dictionary is given).
    """
    X = np.asarray(X, dtype=float)
    S = np.asarray(S, dtype=float)
    if X.ndim != 2 or S.ndim != 2 or X.shape[1] != S.shape[1]:
        raise ValueError(f"incompatible shapes X {X.shape}, S {S.shape}")
    if C <= 0:
        raise ValueError("C must be > 0")
    if tol <= 0:
        raise ValueError("tol must be > 0")
    d, _ = X.shape
    m = S.shape[0]
    if prev is not None and prev.columns.shape != (d, m):
        raise ValueError(
            f"previous dictionary has shape {prev.columns.shape}, expected ({d}, {m})"
        )

    columns = np.zeros((d, m)) if prev is None else prev.columns.copy()
    multipliers = np.zeros(m)
    used = np.flatnonzero(np.abs(S).max(axis=1) > 0)
    if used.size == 0:
        return DictionaryUpdate(Dictionary(columns, C), multipliers, degenerate=True)

    Su = S[used]
    G = Su @ Su.T
    P = X @ Su.T
    PtP = P.T @ P
    mu = used.size
    ftol = tol * max(1.0, C)

    def evaluate(lam: np.ndarray):
        """Dual value (up to a constant), gradient and candidate columns."""
        K = G + np.diag(lam)
        try:
            Kinv = np.linalg.inv(K)
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(Kinv)):
            return None
        cols = P @ Kinv
        norms2 = np.einsum("ij,ij->j", cols, cols)
        value = -float(np.sum(PtP * Kinv)) - C * float(lam.sum())
        grad = norms2 - C
        return value, grad, cols, Kinv

    def kkt_residual(lam: np.ndarray, grad: np.ndarray) -> float:
        # min(lam, -grad) vanishes exactly at a KKT point.
        return float(np.abs(np.minimum(lam, -grad)).max())

    lam = np.ones(mu)
    state = evaluate(lam)
    assert state is not None  # G + I is always invertible
    converged = False
    for _ in range(60):
        value, grad, cols, Kinv = state
        if kkt_residual(lam, grad) <= ftol:
            converged = True
            break
        clamped = (lam <= 0.0) & (grad < 0.0)
        free = np.flatnonzero(~clamped)
        if free.size == 0:
            converged = True
            break
        H = -2.0 * (cols.T @ cols) * Kinv  # dual Hessian
        direction = np.zeros(mu)
        try:
            step = np.linalg.solve(H[np.ix_(free, free)], grad[free])
            direction[free] = -step
        except np.linalg.LinAlgError:
            direction[free] = grad[free]
        if direction[free] @ grad[free] <= 0.0:
            direction[:] = 0.0
            direction[free] = grad[free]  # fall back to gradient ascent

        t = 1.0
        accepted = None
        while t >= 1e-14:
            lam_try = np.maximum(lam + t * direction, 0.0)
            trial = evaluate(lam_try)
            if trial is not None and trial[0] > value:
                accepted = (lam_try, trial)
                break
            t *= 0.5
        if accepted is None:
            break
        lam, state = accepted

    if not converged:
        lam, state, converged = _coordinate_bisection(G, P, C, lam, ftol, evaluate, kkt_residual)
        if not converged:
            raise ConvergenceError("dictionary dual did not converge")

    _, grad, cols, _ = state
    degenerate = False
    K = G + np.diag(lam)
    try:
        cols = P @ np.linalg.inv(K)
        if not np.all(np.isfinite(cols)):
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        cols = P @ np.linalg.inv(K + 1e-10 * np.eye(mu))
        degenerate = True

    # Clip any tolerance-level overshoot so the norm bound holds exactly.
    norms2 = np.einsum("ij,ij->j", cols, cols)
    over = norms2 > C
    if over.any():
        cols[:, over] *= np.sqrt(C / norms2[over])

    columns[:, used] = cols
    multipliers[used] = lam
    if used.size < m and prev is None:
        degenerate = True
    return DictionaryUpdate(Dictionary(columns, C), multipliers, degenerate)


def _coordinate_bisection(G, P, C, lam, ftol, evaluate, kkt_residual, sweeps: int = 200):
    """Cyclic per-coordinate maximization of the dictionary dual.

    The dual gradient component is strictly decreasing in its own
    multiplier, so each one-dimensional maximization reduces to a bisection
    for the gradient's zero (or clamping at zero when already nonpositive).
    """
    lam = lam.copy()
    mu = lam.shape[0]

    def grad_at(l: int, v: float) -> float:
        lam_try = lam.copy()
        lam_try[l] = v
        state = evaluate(lam_try)
        if state is None:
            return np.inf  # singular: treat as "multiplier still too small"
        return float(state[1][l])

    state = evaluate(lam)
    for _ in range(sweeps):
        for l in range(mu):
            if grad_at(l, 0.0) <= 0.0:
                lam[l] = 0.0
                continue
            hi = max(1.0, 2.0 * lam[l])
            for _ in range(200):
                if grad_at(l, hi) <= 0.0:
                    break
                hi *= 2.0
            lo = 0.0
            for _ in range(100):
                mid = 0.5 * (lo + hi)
                if grad_at(l, mid) > 0.0:
                    lo = mid
                else:
                    hi = mid
            lam[l] = 0.5 * (lo + hi)
        state = evaluate(lam)
        if state is not None and kkt_residual(lam, state[1]) <= ftol:
            return lam, state, True
    return lam, state, state is not None and kkt_residual(lam, state[1]) <= ftol


def coding_objective(X: np.ndarray, D: Dictionary, S: np.ndarray, alpha: float) -> float:
    """Summed reconstruction error plus L1 penalty over all points."""
    X = np.asarray(X, dtype=float)
    S = np.asarray(S, dtype=float)
    if X.shape[0] != D.d or S.shape[0] != D.m or X.shape[1] != S.shape[1]:
        raise ValueError(
            f"incompatible shapes X {X.shape}, D {D.columns.shape}, S {S.shape}"
        )
    residual = X - D.columns @ S
    return float(np.sum(residual * residual) + alpha * np.abs(S).sum())
