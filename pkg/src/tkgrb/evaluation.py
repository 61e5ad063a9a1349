"""Time-aware filtered ranking and MRR / Hits@k reports."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed
from scipy.special import digamma

from . import _engine
from .datasets import Dataset, augment_inverses
from .kg import HEAD, TAIL, Query
from .scoring import RelationParams, ScoreVector

SINGLE = "single"
MULTI = "multi"
HITS_AT = (1, 3, 10)


def normalize_mode(mode: str) -> str:
    m = mode.lower().replace("_", "-")
    if m in ("single", "single-step"):
        return SINGLE
    if m in ("multi", "multi-step"):
        return MULTI
    raise ValueError(f"unknown evaluation mode {mode!r}")


@dataclass(frozen=True)
class TieProtocol:
    """How a gold entity sharing its score with others is ranked.

    ``random`` places it uniformly among the tied block (one draw per query,
    seeded by ``seed`` and the query's index). ``expected`` averages every
    metric over all placements.
    """

    kind: str = "random"
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("random", "expected"):
            raise ValueError(f"unknown tie protocol {self.kind!r}")

    def uniforms(self, n: int) -> np.ndarray:
        return np.random.default_rng(self.seed).random(n)


@dataclass(frozen=True)
class RankOutcome:
    query: Query | None
    rank: float
    num_tied: int
    higher: int


def filter_set(gold_facts_at_t, query: Query) -> set:
    """Other true answers to ``query`` at its own timestep, excluding the gold."""
    return {
        o
        for s, r, o, t in gold_facts_at_t
        if s == query.subject and r == query.relation and t == query.target_t and o != query.gold
    }


def rank_gold(
    scores: ScoreVector,
    gold: int,
    excluded,
    num_entities: int,
    tie: TieProtocol = TieProtocol("expected"),
    rng: np.random.Generator | None = None,
    query: Query | None = None,
) -> RankOutcome:
    excluded = set(excluded)
    if gold in excluded:
        raise ValueError("gold entity must not be filtered")
    g = scores.get(gold, 0.0)
    higher = ties = 0
    for e, v in scores.items():
        if e == gold or e in excluded:
            continue
        if v > g:
            higher += 1
        elif v == g:
            ties += 1
    if g == 0:
        # every entity nobody scored sits at zero too
        ties += num_entities - len(scores.keys() | excluded | {gold})
    if tie.kind == "expected":
        rank = higher + 1 + ties / 2
    else:
        rng = rng if rng is not None else np.random.default_rng(tie.seed)
        rank = higher + 1 + int(rng.integers(0, ties + 1))
    return RankOutcome(query, rank, ties, higher)


def rank_metrics(higher, ties, tie: TieProtocol, uniforms=None):
    """Reciprocal rank and Hits@{1,3,10} per query from ``(higher, ties)`` counts."""
    higher = np.asarray(higher, dtype=float)
    ties = np.asarray(ties, dtype=float)
    if tie.kind == "random":
        if uniforms is None:
            raise ValueError("random tie protocol needs per-query uniforms")
        rank = higher + 1 + np.floor(np.asarray(uniforms) * (ties + 1))
        rank = np.minimum(rank, higher + 1 + ties)
        return 1.0 / rank, {k: (rank <= k).astype(float) for k in HITS_AT}
    block = ties + 1
    rr = np.where(
        ties == 0,
        1.0 / (higher + 1),
        (digamma(higher + ties + 2) - digamma(higher + 1)) / block,
    )
    hits = {k: np.clip(k - higher, 0, block) / block for k in HITS_AT}
    return rr, hits


def _summary(rr, hits) -> dict:
    n = len(rr)
    if not n:
        return {"count": 0, "mrr": 0.0, "h1": 0.0, "h3": 0.0, "h10": 0.0}
    return {
        "count": int(n),
        "mrr": float(rr.mean()),
        "h1": float(hits[1].mean()),
        "h3": float(hits[3].mean()),
        "h10": float(hits[10].mean()),
    }


@dataclass
class EvalReport:
    mode: str
    tie: str
    count: int
    mrr: float
    h1: float
    h3: float
    h10: float
    cells: list = field(default_factory=list)

    @classmethod
    def build(cls, relations, rr, hits, num_rels, mode, tie, labels=None) -> "EvalReport":
        relations = np.asarray(relations)
        cells = []
        for r in np.unique(relations).tolist():
            mask = relations == r
            fwd = r if r < num_rels else r - num_rels
            cell = {
                "relation_id": int(fwd),
                "relation_label": (labels or {}).get(fwd, ""),
                "direction": TAIL if r < num_rels else HEAD,
            }
            cell.update(_summary(rr[mask], {k: v[mask] for k, v in hits.items()}))
            cells.append(cell)
        cells.sort(key=lambda c: (c["relation_id"], c["direction"] != TAIL))
        return cls(mode=mode, tie=tie, cells=cells, **_summary(rr, hits))

    def aggregate(self) -> dict:
        return {k: getattr(self, k) for k in ("count", "mrr", "h1", "h3", "h10")}

    def to_dict(self) -> dict:
        return {"mode": self.mode, "tie": self.tie, "aggregate": self.aggregate(), "relations": self.cells}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        return cls(mode=d["mode"], tie=d["tie"], cells=list(d["relations"]), **d["aggregate"])

    def to_csv(self) -> str:
        cols = ["relation_id", "relation_label", "direction", "count", "mrr", "h1", "h3", "h10"]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for c in self.cells:
            w.writerow([c[k] if isinstance(c[k], str) else repr(c[k]) for k in cols])
        agg = self.aggregate()
        w.writerow(["AGGREGATE", "", "both"] + [repr(agg[k]) for k in cols[3:]])
        return buf.getvalue()


# -- driver ------------------------------------------------------------------


@dataclass
class SplitTasks:
    """Per-relation slices of history and queries for one evaluation run."""

    queries: np.ndarray  # augmented split; row i is query i
    history: np.ndarray
    horizon: _engine.Horizon
    single_step: bool
    num_entities: int
    by_relation: dict = field(default_factory=dict)  # r -> (history rows, query ids)

    def relations(self):
        return sorted(self.by_relation)

    def args(self, r):
        hist_idx, qids = self.by_relation[r]
        return (r, self.history[hist_idx], self.queries[qids], qids, self.num_entities, self.horizon)


def split_tasks(ds: Dataset, split: str, mode: str) -> SplitTasks:
    """History is every split before ``split``; queries are both directions of each fact."""
    single = normalize_mode(mode) == SINGLE
    if split == "valid":
        history = ds.train
    elif split == "test":
        history = np.concatenate([ds.train, ds.valid])
    else:
        raise ValueError(f"can only evaluate on 'valid' or 'test', not {split!r}")
    queries = augment_inverses(ds.split(split), ds.num_rels)
    history = augment_inverses(history, ds.num_rels)
    horizon = _engine.Horizon(history[:, 3], queries[:, 3], single)
    tasks = SplitTasks(queries, history, horizon, single, ds.num_entities)
    hist_by_r = _engine.split_by_relation(history)
    empty = np.zeros(0, np.int64)
    for r, qids in _engine.split_by_relation(queries).items():
        tasks.by_relation[r] = (hist_by_r.get(r, empty), qids)
    return tasks


def run_jobs(jobs, n_jobs: int):
    if n_jobs == 1:
        return [fn(*a, **kw) for fn, a, kw in jobs]
    return Parallel(n_jobs=n_jobs)(jobs)


def _rank_relation(r, history, queries, qids, num_entities, horizon, single, lmbda, alpha):
    block = _engine.prepare_relation(r, history, queries, qids, num_entities, horizon, [lmbda], single)
    higher, ties = block.counts(0, alpha)
    return block.query_ids, higher, ties


def evaluate(
    ds: Dataset,
    split: str,
    params: RelationParams,
    mode: str = SINGLE,
    tie: TieProtocol = TieProtocol(),
    n_jobs: int = 1,
) -> EvalReport:
    """Rank every ``split`` fact in both directions with the combined score.

    Timesteps are processed in order; in single-step mode each timestep's
    facts join the history after its queries are ranked.
    """
    mode = normalize_mode(mode)
    tasks = split_tasks(ds, split, mode)
    params.require(tasks.relations())
    jobs = (
        delayed(_rank_relation)(*tasks.args(r), tasks.single_step, *params[r]) for r in tasks.relations()
    )
    results = run_jobs(jobs, n_jobs)
    n = len(tasks.queries)
    higher = np.zeros(n, np.int64)
    ties = np.zeros(n, np.int64)
    for qids, h, t in results:
        higher[qids] = h
        ties[qids] = t
    return report_from_counts(ds, tasks.queries[:, 1], higher, ties, mode, tie)


def report_from_counts(ds: Dataset, relations, higher, ties, mode, tie: TieProtocol) -> EvalReport:
    uniforms = tie.uniforms(len(higher)) if tie.kind == "random" else None
    rr, hits = rank_metrics(higher, ties, tie, uniforms)
    return EvalReport.build(relations, rr, hits, ds.num_rels, mode, tie.kind, ds.relation_labels)

