"""Alternating optimization of the joint coding-and-ranking objective.

One outer iteration updates, in order:

1. the per-neighborhood solution operators and score penalties from the
   previous codes,
2. the ranking scores (single symmetric solve),
3. the local predictors (closed form from the new scores),
4. the sparse codes, one point at a time, with predictors and scores
   frozen,
5. the dictionary (norm-constrained least squares through its dual).

Each step exactly minimizes its own block of the objective with the other
blocks held fixed, so the recorded objective is non-increasing. The loop
stops when consecutive objective values differ by at most xi, or after T
iterations.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple

import numpy as np

from ._parallel import pmap, resolve_threads
from .io import DataSet, QueryIndicator, RankedResult, RankEntry
from .local_ranking import (
    ScoreVector,
    build_cache,
    recover_predictors,
    solve_scores,
)
from .neighbors import NeighborhoodIndex, build_knn, gather_local_codes, gather_local_scores
from .sparse_coding import (
    Dictionary,
    build_augmented_problem,
    build_plain_problem,
    dictionary_update,
    feature_sign_solve,
)


class SolverError(RuntimeError):
    """A sub-solver failed; the message names the iteration and step."""


@dataclass
class Hyperparams:
    """All tunables of the joint model.

    ``m`` (dictionary size), ``k`` (neighborhood size) and ``xi`` (stopping
    tolerance) may be left as None and are resolved from the data as
    min(2d, n), min(10, n) and 1e-6*n respectively.
    """

    alpha: float = 0.1  # L1 weight on the codes
    beta: float = 1.0  # ridge weight on the local predictors
    gamma: float = 1.0  # weight of the ranking-consistency terms
    delta: float = 10.0  # weight of the query-anchoring terms
    y: float = 1.0  # anchor value for query scores
    C: float = 1.0  # squared-norm bound per codeword
    m: int | None = None  # dictionary size
    k: int | None = None  # neighborhood size
    xi: float | None = None  # stopping tolerance on |objective change|
    T: int = 50  # maximum outer iterations
    seed: int = 0  # RNG seed for initialization
    code_tol: float = 1e-10  # feature-sign stationarity tolerance
    dict_tol: float = 1e-10  # dictionary dual KKT tolerance

    def validate(self) -> None:
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.beta <= 0:
            raise ValueError("beta must be > 0")
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        if self.delta <= 0:
            raise ValueError("delta must be > 0")
        if self.y <= 0:
            raise ValueError("y must be > 0")
        if self.C <= 0:
            raise ValueError("C must be > 0")
        if self.m is not None and self.m < 1:
            raise ValueError("m must be >= 1")
        if self.k is not None and self.k < 1:
            raise ValueError("k must be >= 1")
        if self.xi is not None and self.xi <= 0:
            raise ValueError("xi must be > 0")
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if self.code_tol <= 0:
            raise ValueError("code_tol must be > 0")
        if self.dict_tol <= 0:
            raise ValueError("dict_tol must be > 0")

    def resolved(self, n: int, d: int) -> "Hyperparams":
        """Concrete hyperparameters for a dataset of n points in d dims."""
        self.validate()
        out = replace(
            self,
            m=self.m if self.m is not None else min(2 * d, n),
            k=self.k if self.k is not None else min(10, n),
            xi=self.xi if self.xi is not None else 1e-6 * n,
        )
        if out.k > n:
            raise ValueError(f"k must be <= n, got k={out.k} with n={n}")
        return out


@dataclass
class ModelState:
    """Everything the alternating loop updates."""

    dictionary: Dictionary
    codes: np.ndarray  # (m, n)
    scores: ScoreVector
    predictors: np.ndarray  # (n, m), one local predictor per row
    iteration: int
    objective: float

    def copy(self) -> "ModelState":
        return ModelState(
            dictionary=Dictionary(self.dictionary.columns.copy(), self.dictionary.C),
            codes=self.codes.copy(),
            scores=ScoreVector(
                self.scores.values.copy(), self.scores.anchor, self.scores.ridged
            ),
            predictors=self.predictors.copy(),
            iteration=self.iteration,
            objective=self.objective,
        )


class ObjectiveParts(NamedTuple):
    total: float
    coding: float
    ranking: float
    query: float


class TraceRow(NamedTuple):
    iteration: int
    objective: float
    delta: float | None  # None on the first row
    coding: float
    ranking: float
    query: float


@dataclass
class ConvergenceTrace:
    rows: list[TraceRow] = field(default_factory=list)

    def objectives(self) -> np.ndarray:
        return np.array([r.objective for r in self.rows])

    def csv_rows(self) -> list[tuple]:
        return [(r.iteration, r.objective, r.delta) for r in self.rows]


@dataclass
class StepRecord:
    """Snapshot handed to the fit callback after each update step."""

    iteration: int
    step: str  # "scores", "predictors", "codes" or "dictionary"
    state: ModelState


def evaluate_objective(
    state: ModelState,
    data: DataSet,
    queries: QueryIndicator,
    index: NeighborhoodIndex,
    hp: Hyperparams,
) -> ObjectiveParts:
    """Objective value split into coding, ranking and query terms."""
    X = data.points.T
    D, S = state.dictionary, state.codes
    f = state.scores.values
    W = state.predictors
    if S.shape != (D.m, data.n) or X.shape[0] != D.d:
        raise ValueError("state dimensions do not match the dataset")
    if f.shape != (data.n,) or W.shape != (data.n, D.m):
        raise ValueError("state dimensions do not match the dataset")

    residual = X - D.columns @ S
    coding = float(np.sum(residual * residual) + hp.alpha * np.abs(S).sum())

    ranking = 0.0
    for i in range(data.n):
        f_i = gather_local_scores(f, index, i)
        S_i = gather_local_codes(S, index, i)
        r = f_i - W[i] @ S_i
        ranking += float(r @ r + hp.beta * (W[i] @ W[i]))
    ranking *= hp.gamma

    lam = queries.values.astype(float)
    dev = f - hp.y
    query = float(hp.delta * np.sum(lam * dev * dev))
    return ObjectiveParts(coding + ranking + query, coding, ranking, query)


def initialize(
    data: DataSet,
    queries: QueryIndicator,
    hp: Hyperparams,
    n_threads: int | None = None,
) -> ModelState:
    """Deterministic starting point.

    The dictionary samples m distinct data points (by seed) rescaled into
    the norm ball; codes solve the reconstruction-only problems; scores
    start at y on the queries and 0 elsewhere; predictors start at zero.
    """
    hp = hp.resolved(data.n, data.d)
    if queries.n != data.n:
        raise ValueError(f"query indicator length {queries.n} != n = {data.n}")
    n, d = data.n, data.d
    if hp.m > n:
        warnings.warn(f"dictionary size m={hp.m} exceeds n={n}; sampling with replacement")
    rng = np.random.default_rng(hp.seed)
    chosen = rng.choice(n, size=hp.m, replace=hp.m > n)

    columns = data.points[chosen].T.copy()
    norms2 = np.einsum("ij,ij->j", columns, columns)
    positive = norms2 > 0
    target = np.minimum(norms2[positive], hp.C)
    columns[:, positive] *= np.sqrt(target / norms2[positive])
    D = Dictionary(columns, hp.C)

    threads = resolve_threads(n_threads)

    def code_one(i: int) -> np.ndarray:
        return feature_sign_solve(build_plain_problem(data.points[i], D, hp.alpha), hp.code_tol)

    S = np.column_stack(pmap(code_one, range(n), threads))
    return ModelState(
        dictionary=D,
        codes=S,
        scores=ScoreVector(values=hp.y * queries.values.astype(float), anchor=hp.y),
        predictors=np.zeros((n, hp.m)),
        iteration=0,
        objective=float("nan"),
    )


def fit(
    data: DataSet,
    queries: QueryIndicator,
    hp: Hyperparams,
    callback: Callable[[StepRecord], None] | None = None,
    n_threads: int | None = None,
) -> tuple[ModelState, ConvergenceTrace]:
    """Run the alternating loop until the objective stalls or T is hit."""
    hp = hp.resolved(data.n, data.d)
    if queries.n != data.n:
        raise ValueError(f"query indicator length {queries.n} != n = {data.n}")
    threads = resolve_threads(n_threads)

    index = _step(0, "neighbors", build_knn, data, hp.k)
    memberships = index.memberships()
    state = _step(0, "initialize", initialize, data, queries, hp, threads)
    X = data.points.T

    def emit(iteration: int, step: str) -> None:
        if callback is None:
            return
        snap = state.copy()
        snap.iteration = iteration
        snap.objective = evaluate_objective(snap, data, queries, index, hp).total
        callback(StepRecord(iteration=iteration, step=step, state=snap))

    emit(0, "initialize")

    trace = ConvergenceTrace()
    prev_total: float | None = None
    for t in range(1, hp.T + 1):
        cache = _step(t, "penalties", build_cache, state.codes, index, hp.beta, threads)

        state.scores = _step(
            t, "scores", solve_scores, cache.global_penalty, queries, hp.y, hp.gamma, hp.delta
        )
        emit(t, "scores")

        state.predictors = _step(
            t, "predictors", recover_predictors, cache.predictor_ops, state.scores, index
        )
        emit(t, "predictors")

        f = state.scores.values
        W = state.predictors

        def code_one(i: int) -> np.ndarray:
            problem = build_augmented_problem(
                X[:, i], state.dictionary, hp.alpha, hp.gamma, f[i], W[memberships[i]]
            )
            return feature_sign_solve(problem, hp.code_tol)

        new_codes = _step(t, "codes", pmap, code_one, range(data.n), threads)
        state.codes = np.column_stack(new_codes)
        emit(t, "codes")

        update = _step(
            t, "dictionary", dictionary_update, X, state.codes, hp.C, hp.dict_tol,
            state.dictionary,
        )
        state.dictionary = update.dictionary
        emit(t, "dictionary")

        parts = evaluate_objective(state, data, queries, index, hp)
        state.iteration = t
        state.objective = parts.total
        delta = None if prev_total is None else abs(prev_total - parts.total)
        trace.rows.append(
            TraceRow(t, parts.total, delta, parts.coding, parts.ranking, parts.query)
        )
        prev_total = parts.total
        if delta is not None and delta <= hp.xi:
            break
    return state, trace


def _step(iteration: int, step: str, fn, *args):
    try:
        return fn(*args)
    except Exception as exc:
        raise SolverError(f"iteration {iteration}, step '{step}': {exc}") from exc


def rank(
    state: ModelState,
    data: DataSet,
    queries: QueryIndicator,
    exclude_queries: bool = False,
) -> RankedResult:
    """Points ordered by decreasing score, ties broken by dataset order."""
    f = state.scores.values
    if f.shape != (data.n,) or queries.n != data.n:
        raise ValueError("state, dataset and queries have inconsistent sizes")
    order = np.lexsort((np.arange(data.n), -f))
    entries = []
    for i in order:
        is_query = bool(queries.values[i])
        if exclude_queries and is_query:
            continue
        entries.append(RankEntry(id=data.ids[i], score=float(f[i]), is_query=is_query))
    return RankedResult(entries=entries, queries_excluded=exclude_queries)
