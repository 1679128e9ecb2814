"""Scikit-learn style wrapper around the joint coding-and-ranking solver."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .io import DataSet, QueryIndicator, RankedResult
from .solver import ConvergenceTrace, Hyperparams, fit as _fit, rank as _rank


class SparseCodingRanker(BaseEstimator):
    """Transductive retrieval by joint sparse coding and score learning.

    Learns a dictionary, sparse codes and a ranking score per training
    point, where scores are anchored at the query points and regularized to
    be locally predictable from the codes. The model is transductive:
    scores exist only for the points passed to :meth:`fit`, and queries
    must be members of that set.

    Parameters
    ----------
    alpha : float, default=0.1
        L1 weight on the sparse codes.
    beta : float, default=1.0
        Ridge weight on the per-neighborhood linear predictors.
    gamma : float, default=1.0
        Weight of the score-consistency (ranking) terms.
    delta : float, default=10.0
        Weight of the query-anchoring terms.
    anchor : float, default=1.0
        Target score for query points.
    C : float, default=1.0
        Squared-norm bound on every dictionary codeword.
    n_components : int or None, default=None
        Dictionary size; None means min(2 * n_features, n_samples).
    n_neighbors : int or None, default=None
        Neighborhood size; None means min(10, n_samples).
    tol : float or None, default=None
        Stop when the objective changes by at most this; None means
        1e-6 * n_samples.
    max_iter : int, default=50
        Maximum number of outer iterations.
    random_state : int, default=0
        Seed for the dictionary initialization.

    Attributes
    ----------
    components_ : ndarray of shape (n_components, n_features)
        Dictionary codewords, one per row.
    codes_ : ndarray of shape (n_samples, n_components)
        Sparse code of each training point.
    scores_ : ndarray of shape (n_samples,)
        Learned ranking scores (higher = more similar to the queries).
    local_weights_ : ndarray of shape (n_samples, n_components)
        Per-neighborhood linear predictors.
    n_iter_ : int
        Outer iterations actually run.
    objective_ : float
        Final objective value.
    trace_ : ConvergenceTrace
        Per-iteration objective values and term breakdown.
    """

    def __init__(
        self,
        alpha: float = 0.1,
        beta: float = 1.0,
        gamma: float = 1.0,
        delta: float = 10.0,
        anchor: float = 1.0,
        C: float = 1.0,
        n_components: int | None = None,
        n_neighbors: int | None = None,
        tol: float | None = None,
        max_iter: int = 50,
        random_state: int = 0,
    ):
        self.alpha = alpha
        self.beta = beta
        self.gamma = gamma
        self.delta = delta
        self.anchor = anchor
        self.C = C
        self.n_components = n_components
        self.n_neighbors = n_neighbors
        self.tol = tol
        self.max_iter = max_iter
        self.random_state = random_state

    def _hyperparams(self) -> Hyperparams:
        return Hyperparams(
            alpha=self.alpha,
            beta=self.beta,
            gamma=self.gamma,
            delta=self.delta,
            y=self.anchor,
            C=self.C,
            m=self.n_components,
            k=self.n_neighbors,
            xi=self.tol,
            T=self.max_iter,
            seed=self.random_state,
        )

    def fit(self, X, y) -> "SparseCodingRanker":
        """Fit on the full point set X with binary query indicator y.

        Parameters
        ----------
        X : array-like of shape (n_samples, n_features)
            All points: database entries plus the user's queries.
        y : array-like of shape (n_samples,)
            1 marks a query point, 0 a database point; at least one 1.
        """
        X = check_array(X, dtype=np.float64)
        y = np.asarray(y).ravel()
        if y.shape[0] != X.shape[0]:
            raise ValueError(f"y has length {y.shape[0]}, expected {X.shape[0]}")
        data = DataSet(points=X, ids=[str(i) for i in range(X.shape[0])])
        queries = QueryIndicator(values=y)

        state, trace = _fit(data, queries, self._hyperparams())

        self._state = state
        self._data = data
        self._queries = queries
        self.components_ = state.dictionary.columns.T.copy()
        self.codes_ = state.codes.T.copy()
        self.scores_ = state.scores.values.copy()
        self.local_weights_ = state.predictors.copy()
        self.n_iter_ = state.iteration
        self.objective_ = state.objective
        self.trace_ = trace
        return self

    def fit_transform(self, X, y) -> np.ndarray:
        """Fit and return the sparse codes, shape (n_samples, n_components)."""
        return self.fit(X, y).codes_

    def ranking(self, exclude_queries: bool = False) -> RankedResult:
        """Ranked retrieval result over the fitted points.

        Ids are the row numbers of X as strings. Ties are broken by row
        order; query rows are dropped when ``exclude_queries`` is set.
        """
        check_is_fitted(self, "scores_")
        return _rank(self._state, self._data, self._queries, exclude_queries)
