"""Recurrency scoring functions over a :class:`~tkgrb.kg.TemporalKG`.

Score vectors are sparse ``{entity: score}`` dicts; entities that are
missing score 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator, Mapping

from .kg import Query, TemporalKG

ScoreVector = dict
Weighting = Callable[[int, int], float]

DEFAULT_LAMBDA = 1.0001
DEFAULT_ALPHA = 1.0


class ConfigError(Exception):
    """Raised for missing or invalid hyperparameter configuration."""


def decay_weight(t_plus: int, k: int, lmbda: float) -> float:
    """``2 ** (lmbda * (k - t_plus))`` for a past timestep ``k < t_plus``."""
    if k >= t_plus:
        raise ValueError(f"decay needs k < t_plus, got k={k}, t_plus={t_plus}")
    return 2.0 ** (lmbda * (k - t_plus))


def lambda_weighting(lmbda: float) -> Weighting:
    return lambda t_plus, k: 2.0 ** (lmbda * (k - t_plus))


def strict_score_last(kg: TemporalKG, query: Query, weight: Weighting) -> ScoreVector:
    """Weight of the most recent occurrence of each ``(s, r, o)`` before the target time."""
    out = {}
    for o in kg.candidates(query.subject, query.relation):
        times = kg.occurrences(query.subject, query.relation, o, query.target_t)
        if times:
            out[o] = weight(query.target_t, times[-1])
    return out


def strict_score(
    kg: TemporalKG, query: Query, lmbda: float = DEFAULT_LAMBDA, weight: Weighting | None = None
) -> ScoreVector:
    """Decayed, normalised count of past occurrences of each candidate triple.

    The normaliser sums the weight over every timestep from the first one in
    the graph up to ``kg.max_t``, so it is the same for all candidates.
    ``weight`` replaces the exponential decay (used for hand-worked examples).
    """
    if kg.max_t is None:
        return {}
    w = weight or lambda_weighting(lmbda)
    t_plus = query.target_t
    num = {}
    for o in kg.candidates(query.subject, query.relation):
        times = kg.occurrences(query.subject, query.relation, o, t_plus)
        if times:
            total = 0.0
            for k in times:
                total += w(t_plus, k)
            if total > 0:
                num[o] = total
    if not num:
        return {}
    denom = 0.0
    for i in range(kg.min_t, kg.max_t + 1):
        denom += w(t_plus, i)
    return {o: v / denom for o, v in num.items()}


def relaxed_score(kg: TemporalKG, query: Query) -> ScoreVector:
    """Share of the relation's facts that have each entity as object."""
    total = kg.rel_count.get(query.relation, 0)
    if not total:
        return {}
    return {o: c / total for o, c in kg.rel_obj_count[query.relation].items()}


@dataclass
class RelationParams(Mapping):
    """Per-relation ``(lambda, alpha)`` keyed by canonical relation id (inverses included)."""

    values: dict[int, tuple[float, float]] = field(default_factory=dict)
    default: tuple[float, float] | None = None

    @classmethod
    def constant(cls, lmbda: float, alpha: float) -> "RelationParams":
        return cls({}, (float(lmbda), float(alpha)))

    def __getitem__(self, r: int) -> tuple[float, float]:
        try:
            return self.values[r]
        except KeyError:
            if self.default is None:
                raise ConfigError(f"no (lambda, alpha) for relation id {r} and no default") from None
            return self.default

    def __iter__(self) -> Iterator[int]:
        return iter(self.values)

    def __len__(self) -> int:
        return len(self.values)

    def require(self, relations) -> None:
        if self.default is None:
            missing = sorted(set(relations) - set(self.values))
            if missing:
                raise ConfigError(f"params missing relation id(s) {missing[:10]}")

    def with_alpha(self, alpha: float) -> "RelationParams":
        vals = {r: (lam, float(alpha)) for r, (lam, _) in self.values.items()}
        default = None if self.default is None else (self.default[0], float(alpha))
        return RelationParams(vals, default)


def merge_scores(strict: ScoreVector, relaxed: ScoreVector, alpha: float) -> ScoreVector:
    out = {o: (1.0 - alpha) * v for o, v in relaxed.items()}
    for o, v in strict.items():
        out[o] = out.get(o, 0.0) + alpha * v
    return {o: v for o, v in out.items() if v > 0}


def combined_score(kg: TemporalKG, query: Query, params: RelationParams) -> ScoreVector:
    """``alpha * strict + (1 - alpha) * relaxed`` with the relation's own parameters."""
    lmbda, alpha = params[query.relation]
    return merge_scores(strict_score(kg, query, lmbda), relaxed_score(kg, query), alpha)
