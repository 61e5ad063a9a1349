"""Batched ranking over one canonical relation at a time.

Scores for relation ``r`` read only facts with relation ``r``, so every
relation is prepared and ranked on its own slice of history. Preparation walks
the split timesteps once, snapshots the relaxed scores and the decayed
occurrence sums for a list of decay values, and records what the filter
removes. Ranking for any ``(lambda, alpha)`` is then pure array work.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kg import TemporalKG


@dataclass
class Group:
    t_plus: int
    support: np.ndarray  # sorted entities with a nonzero relaxed score
    xi: np.ndarray
    gold_pos: np.ndarray  # index into support, -1 when the gold lies outside
    cand_row: np.ndarray
    cand_pos: np.ndarray
    cand_num: np.ndarray  # (n_candidates, n_lambdas) decayed occurrence sums
    denom: np.ndarray  # (n_lambdas,)
    excl_row: np.ndarray
    excl_pos: np.ndarray
    outside_zero: np.ndarray  # zero-score entities outside support that may tie with the gold


@dataclass
class RelationBlock:
    relation: int
    lambdas: np.ndarray
    query_ids: np.ndarray
    groups: list

    def counts(self, lambda_index: int, alpha: float):
        """Per-query ``(higher, ties)`` in ``query_ids`` order."""
        if not self.groups:
            return np.zeros(0, np.int64), np.zeros(0, np.int64)
        parts = [_group_counts(g, lambda_index, alpha) for g in self.groups]
        return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def _group_counts(g: Group, li: int, alpha: float):
    n_rows = len(g.gold_pos)
    if not len(g.support):
        return np.zeros(n_rows, np.int64), g.outside_zero.copy()
    m = np.empty((n_rows, len(g.support)))
    m[:] = (1.0 - alpha) * g.xi
    if alpha and len(g.cand_row):
        m[g.cand_row, g.cand_pos] += alpha * (g.cand_num[:, li] / g.denom[li])
    gold = np.zeros(n_rows)
    has = np.flatnonzero(g.gold_pos >= 0)
    gold[has] = m[has, g.gold_pos[has]]
    m[has, g.gold_pos[has]] = np.nan
    m[g.excl_row, g.excl_pos] = np.nan
    higher = np.count_nonzero(m > gold[:, None], axis=1)
    ties = np.count_nonzero(m == gold[:, None], axis=1) + np.where(gold == 0, g.outside_zero, 0)
    return higher.astype(np.int64), ties.astype(np.int64)


def _denominators(lambdas: np.ndarray, t_plus: int, first_t, last_t) -> np.ndarray:
    if first_t is None or last_t is None:
        return np.ones(len(lambdas))
    steps = np.arange(first_t, last_t + 1) - t_plus
    return np.power(2.0, lambdas[:, None] * steps[None, :]).sum(axis=1)


def _decayed_sums(objs: dict, t_plus: int, lambdas: np.ndarray):
    keys = sorted(objs)
    lengths = np.fromiter((len(objs[o]) for o in keys), np.int64, len(keys))
    times = np.fromiter((k for o in keys for k in objs[o]), np.int64, int(lengths.sum()))
    w = np.power(2.0, lambdas[:, None] * (times - t_plus)[None, :])
    offsets = np.concatenate([[0], np.cumsum(lengths)[:-1]])
    return np.asarray(keys, np.int64), np.add.reduceat(w, offsets, axis=1).T


class Horizon:
    """First and last history timestep seen by a query at ``t_plus``.

    In single-step mode the split timesteps before ``t_plus`` are part of the
    history, in multi-step mode they never are.
    """

    def __init__(self, history_times, split_times, single_step: bool):
        history_times = np.asarray(history_times, np.int64)
        self.hist_min = int(history_times.min()) if len(history_times) else None
        self.hist_max = int(history_times.max()) if len(history_times) else None
        self.split_times = np.unique(np.asarray(split_times, np.int64))
        self.single_step = single_step

    def __call__(self, t_plus: int):
        lo, hi = self.hist_min, self.hist_max
        if self.single_step:
            earlier = self.split_times[self.split_times < t_plus]
            if len(earlier):
                lo = int(earlier[0]) if lo is None else min(lo, int(earlier[0]))
                hi = int(earlier[-1]) if hi is None else max(hi, int(earlier[-1]))
        return lo, hi


def prepare_relation(
    relation: int,
    history: np.ndarray,
    split: np.ndarray,
    query_ids: np.ndarray,
    num_entities: int,
    horizon: Horizon,
    lambdas,
    single_step: bool,
) -> RelationBlock:
    """Snapshot everything needed to rank ``split`` queries of one relation.

    ``history`` and ``split`` hold only quadruples with this (canonical)
    relation id; each split row is one query whose gold is its object.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    kg = TemporalKG(history.tolist())
    r = relation
    order = np.argsort(split[:, 3], kind="stable")
    split = split[order]
    query_ids = np.asarray(query_ids)[order]
    times = split[:, 3]
    bounds = np.flatnonzero(np.diff(times)) + 1
    starts = np.concatenate([[0], bounds])
    stops = np.concatenate([bounds, [len(split)]])
    groups = []
    for a, b in zip(starts.tolist(), stops.tolist()):
        rows = split[a:b]
        t_plus = int(rows[0, 3])
        objs = kg.rel_obj_count.get(r) or {}
        support = np.asarray(sorted(objs), dtype=np.int64)
        counts = np.asarray([objs[o] for o in support.tolist()], dtype=float)
        xi = counts / counts.sum() if len(counts) else counts
        first_t, last_t = horizon(t_plus)
        denom = _denominators(lambdas, t_plus, first_t, last_t)

        truths: dict[int, set] = {}
        for s, o in rows[:, [0, 2]].tolist():
            truths.setdefault(s, set()).add(o)

        cand_cache = {}
        cand_row, cand_pos, cand_num = [], [], []
        excl_row, excl_pos = [], []
        gold_pos = np.full(len(rows), -1, np.int64)
        outside_zero = np.empty(len(rows), np.int64)
        for i, (s, o) in enumerate(rows[:, [0, 2]].tolist()):
            if s not in cand_cache:
                occ = kg.occ_index.get((s, r))
                if occ:
                    ents, sums = _decayed_sums(occ, t_plus, lambdas)
                    cand_cache[s] = (np.searchsorted(support, ents), sums)
                else:
                    cand_cache[s] = None
            cached = cand_cache[s]
            if cached is not None:
                cand_row.append(np.full(len(cached[0]), i, np.int64))
                cand_pos.append(cached[0])
                cand_num.append(cached[1])
            p = np.searchsorted(support, o)
            inside = p < len(support) and support[p] == o
            if inside:
                gold_pos[i] = p
            n_out = 0
            for e in truths[s]:
                if e == o:
                    continue
                q = np.searchsorted(support, e)
                if q < len(support) and support[q] == e:
                    excl_row.append(i)
                    excl_pos.append(q)
                else:
                    n_out += 1
            outside_zero[i] = num_entities - len(support) - n_out - (0 if inside else 1)

        def _cat(parts, dtype, shape=(0,)):
            return np.concatenate(parts) if parts else np.zeros(shape, dtype)

        groups.append(
            Group(
                t_plus=t_plus,
                support=support,
                xi=xi,
                gold_pos=gold_pos,
                cand_row=_cat(cand_row, np.int64),
                cand_pos=_cat(cand_pos, np.int64),
                cand_num=_cat(cand_num, float, (0, len(lambdas))),
                denom=denom,
                excl_row=np.asarray(excl_row, np.int64),
                excl_pos=np.asarray(excl_pos, np.int64),
                outside_zero=outside_zero,
            )
        )
        if single_step:
            kg.extend(rows.tolist())
    return RelationBlock(relation=r, lambdas=lambdas, query_ids=query_ids, groups=groups)


def split_by_relation(quads: np.ndarray):
    """Map relation id to the row indices of ``quads`` carrying it."""
    if not len(quads):
        return {}
    order = np.argsort(quads[:, 1], kind="stable")
    rels = quads[order, 1]
    cuts = np.flatnonzero(np.diff(rels)) + 1
    return {int(quads[idx[0], 1]): idx for idx in np.split(order, cuts)}
