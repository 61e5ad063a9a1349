"""scikit-learn style wrapper around tuning, scoring and evaluation."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .datasets import Dataset, augment_inverses
from .evaluation import EvalReport, TieProtocol, evaluate, normalize_mode
from .kg import TemporalKG, Query
from .scoring import DEFAULT_ALPHA, DEFAULT_LAMBDA, RelationParams, combined_score
from .tuning import ALPHA_GRID, LAMBDA_GRID, tune
from .validation import check_quadruples, check_time_order


class RecurrencyBaseline(BaseEstimator):
    """Combined strict/relaxed recurrency forecaster.

    ``fit(X, X_valid=...)`` tunes per-relation ``(lambda, alpha)`` on the
    validation facts. Without ``X_valid`` every relation uses
    ``(default_lambda, default_alpha)``. Rows are ``(s, r, o, t)`` with dense
    integer ids and timesteps.

    Parameters
    ----------
    lambda_grid, alpha_grid : sequences of float
        Candidate values searched one after the other.
    default_lambda, default_alpha : float
        Used for relations that have no validation facts, or for all
        relations when fitting without ``X_valid``.
    mode : {"single", "multi"}
        Whether ground truth of earlier query timesteps joins the history.
    tie : {"random", "expected"}
        Tie protocol for :meth:`evaluate` and :meth:`score`.
    tune_tie : {"random", "expected"}
        Tie protocol during tuning.
    random_state : int
        Master seed of the random tie protocol.
    """

    def __init__(
        self,
        lambda_grid=LAMBDA_GRID,
        alpha_grid=ALPHA_GRID,
        default_lambda=DEFAULT_LAMBDA,
        default_alpha=DEFAULT_ALPHA,
        mode="single",
        tie="random",
        tune_tie="expected",
        pool_directions=False,
        num_entities=None,
        num_rels=None,
        random_state=0,
        n_jobs=1,
    ):
        self.lambda_grid = lambda_grid
        self.alpha_grid = alpha_grid
        self.default_lambda = default_lambda
        self.default_alpha = default_alpha
        self.mode = mode
        self.tie = tie
        self.tune_tie = tune_tie
        self.pool_directions = pool_directions
        self.num_entities = num_entities
        self.num_rels = num_rels
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _dataset(self, train, valid, test) -> Dataset:
        return Dataset(
            name="estimator",
            num_entities=self.num_entities_,
            num_rels=self.num_rels_,
            train=train,
            valid=valid,
            test=test,
        )

    def fit(self, X, y=None, X_valid=None):
        X = check_quadruples(X, "X")
        X_valid = check_quadruples(X_valid, "X_valid") if X_valid is not None else X[:0]
        check_time_order(X, X_valid, names=("X", "X_valid"))
        both = np.concatenate([X, X_valid])
        seen_e = int(max(both[:, 0].max(), both[:, 2].max())) + 1 if len(both) else 0
        seen_r = int(both[:, 1].max()) + 1 if len(both) else 0
        self.num_entities_ = max(self.num_entities or 0, seen_e)
        self.num_rels_ = max(self.num_rels or 0, seen_r)
        if len(X_valid):
            self.tuning_ = tune(
                self._dataset(X, X_valid, X[:0]),
                self.lambda_grid,
                self.alpha_grid,
                TieProtocol(self.tune_tie, self.random_state),
                self.pool_directions,
                self.n_jobs,
            )
            self.params_ = RelationParams(
                dict(self.tuning_.params.values), (float(self.default_lambda), float(self.default_alpha))
            )
        else:
            self.tuning_ = None
            self.params_ = RelationParams.constant(self.default_lambda, self.default_alpha)
        self.history_ = both
        self._kg = None
        return self

    def evaluate(self, X, mode=None) -> EvalReport:
        """Filtered MRR and Hits@k of ``X`` ranked after the fitted history."""
        check_is_fitted(self, "params_")
        X = check_quadruples(X, "X", num_rels=self.num_rels_)
        check_time_order(self.history_, X, names=("history", "X"))
        ds = self._dataset(self.history_, self.history_[:0], X)
        if len(X):
            ds.num_entities = max(ds.num_entities, int(max(X[:, 0].max(), X[:, 2].max())) + 1)
        return evaluate(
            ds, "test", self.params_, normalize_mode(mode or self.mode),
            TieProtocol(self.tie, self.random_state), self.n_jobs,
        )

    def score(self, X, y=None) -> float:
        return self.evaluate(X).mrr

    def _history_kg(self) -> TemporalKG:
        if self._kg is None:
            self._kg = TemporalKG(augment_inverses(self.history_, self.num_rels_).tolist())
        return self._kg

    def decision_function(self, X):
        """Dense ``(n, num_entities)`` combined scores for tail queries ``(s, r, ?, t)``.

        ``r`` may be an inverse id (``r + num_rels``) to score heads. Only the
        fitted history is used, regardless of ``mode``.
        """
        check_is_fitted(self, "params_")
        X = check_quadruples(X, "X", num_rels=2 * self.num_rels_)
        kg = self._history_kg()
        out = np.zeros((len(X), self.num_entities_))
        for i, (s, r, _, t) in enumerate(X.tolist()):
            if kg.max_t is not None and t <= kg.max_t:
                raise ValueError(f"row {i}: query time {t} is not after the history (max {kg.max_t})")
            for e, v in combined_score(kg, Query(s, r, t, -1), self.params_).items():
                if e < self.num_entities_:
                    out[i, e] = v
        return out

    def predict(self, X):
        """Highest-scoring object per row; ties go to the smallest entity id."""
        return np.argmax(self.decision_function(X), axis=1)
