"""Indexed, append-only store of timestamped facts."""

from __future__ import annotations

import bisect
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, NamedTuple

TAIL = "tail"
HEAD = "head"


class Quadruple(NamedTuple):
    s: int
    r: int
    o: int
    t: int


@dataclass(frozen=True)
class Query:
    """A tail-form prediction task ``(subject, relation, ?, target_t)``.

    Head queries ``(?, r, o, t)`` are stored as ``(o, r + num_rels, ?, t)``
    with ``origin_direction == "head"``.
    """

    subject: int
    relation: int
    target_t: int
    gold: int
    origin_direction: str = TAIL


def inverse_relation(r: int, num_rels: int) -> int:
    return r + num_rels if r < num_rels else r - num_rels


def make_query(s: int, r: int, o: int, t: int, num_rels: int, direction: str = TAIL) -> Query:
    """Build the canonical query for predicting the object (tail) or subject (head) of a fact."""
    if direction == TAIL:
        return Query(s, r, t, o, TAIL)
    if direction == HEAD:
        return Query(o, inverse_relation(r, num_rels), t, s, HEAD)
    raise ValueError(f"unknown direction {direction!r}")


class TemporalKG:
    """Set of quadruples plus the indices the scoring functions read.

    ``occ_index[(s, r)][o]`` is the ascending list of timesteps at which
    ``(s, r, o)`` holds, ``rel_obj_count[r][o]`` counts quadruples with
    relation ``r`` and object ``o``. The store only grows.
    """

    def __init__(self, quads: Iterable[tuple[int, int, int, int]] = ()):
        self.quads: set[Quadruple] = set()
        self.occ_index: dict[tuple[int, int], dict[int, list[int]]] = defaultdict(dict)
        self.rel_obj_count: dict[int, dict[int, int]] = defaultdict(dict)
        self.rel_count: dict[int, int] = defaultdict(int)
        self.max_t: int | None = None
        self.min_t: int | None = None
        for q in quads:
            self.insert(q)

    def __len__(self) -> int:
        return len(self.quads)

    def __contains__(self, q) -> bool:
        return Quadruple(*q) in self.quads

    def insert(self, q) -> "TemporalKG":
        q = Quadruple(*(int(v) for v in q))
        if q in self.quads:
            return self
        self.quads.add(q)
        times = self.occ_index[(q.s, q.r)].setdefault(q.o, [])
        if not times or times[-1] < q.t:
            times.append(q.t)
        else:
            bisect.insort(times, q.t)
        objs = self.rel_obj_count[q.r]
        objs[q.o] = objs.get(q.o, 0) + 1
        self.rel_count[q.r] += 1
        if self.max_t is None or q.t > self.max_t:
            self.max_t = q.t
        if self.min_t is None or q.t < self.min_t:
            self.min_t = q.t
        return self

    def extend(self, quads: Iterable) -> "TemporalKG":
        for q in quads:
            self.insert(q)
        return self

    def occurrences(self, s: int, r: int, o: int, before_t: int | None = None) -> list[int]:
        times = self.occ_index.get((s, r), {}).get(o)
        if not times:
            return []
        if before_t is None:
            return list(times)
        return times[: bisect.bisect_left(times, before_t)]

    def candidates(self, s: int, r: int) -> set[int]:
        return {o for o, times in self.occ_index.get((s, r), {}).items() if times}

    def _index_state(self):
        return (
            {k: {o: list(ts) for o, ts in v.items()} for k, v in self.occ_index.items() if v},
            {r: dict(v) for r, v in self.rel_obj_count.items() if v},
            {r: c for r, c in self.rel_count.items() if c},
            self.max_t,
            self.min_t,
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, TemporalKG):
            return NotImplemented
        return self.quads == other.quads and self._index_state() == other._index_state()

    def check_consistency(self) -> None:
        """Raise ``AssertionError`` if the indices disagree with a one-pass rebuild."""
        rebuilt = TemporalKG(sorted(self.quads))
        assert rebuilt._index_state() == self._index_state(), "index drift"
        for objs in self.occ_index.values():
            for ts in objs.values():
                assert all(a < b for a, b in zip(ts, ts[1:])), "timesteps not strictly ascending"
        for r, objs in self.rel_obj_count.items():
            assert sum(objs.values()) == self.rel_count[r]
