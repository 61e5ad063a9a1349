"""Per-relation selection of the decay and mixing weights, and global sweeps."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np
from joblib import delayed

from . import _engine
from .datasets import Dataset
from .evaluation import (
    SINGLE,
    TieProtocol,
    normalize_mode,
    rank_metrics,
    report_from_counts,
    run_jobs,
    split_tasks,
)
from .kg import HEAD, TAIL
from .scoring import DEFAULT_ALPHA, DEFAULT_LAMBDA, ConfigError, RelationParams

LAMBDA_GRID = (0, 0.0001, 0.0005, 0.001, 0.005, 0.01, 0.02, 0.04, 0.06, 0.08, 0.1, 0.5, 0.9, 1.0001)
ALPHA_GRID = (0, 0.00001, 0.0001, 0.001, 0.01, 0.1, 0.5, 0.9, 0.99, 0.999, 0.9999, 0.99999, 1)


class TuningError(Exception):
    pass


def check_grid(values, name: str, lo=None, hi=None) -> tuple:
    vals = tuple(float(v) for v in values)
    if not vals:
        raise ConfigError(f"{name} grid is empty")
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise ConfigError(f"{name} grid must be strictly ascending: {vals}")
    if (lo is not None and vals[0] < lo) or (hi is not None and vals[-1] > hi):
        raise ConfigError(f"{name} grid outside [{lo}, {hi}]: {vals}")
    return vals


@dataclass
class TuningResult:
    params: RelationParams
    num_rels: int
    valid_mrr: dict = field(default_factory=dict)  # canonical relation -> MRR at the chosen setting
    counts: dict = field(default_factory=dict)  # canonical relation -> number of validation queries
    settings_evaluated: int = 0

    def entries(self) -> list[dict]:
        out = []
        for r in range(2 * self.num_rels):
            lam, alpha = self.params[r]
            out.append(
                {
                    "relation_id": r % self.num_rels,
                    "direction": TAIL if r < self.num_rels else HEAD,
                    "lambda": lam,
                    "alpha": alpha,
                    "valid_mrr": self.valid_mrr.get(r),
                    "count": int(self.counts.get(r, 0)),
                }
            )
        out.sort(key=lambda e: (e["relation_id"], e["direction"] != TAIL))
        return out

    def to_json(self) -> str:
        return json.dumps(self.entries(), indent=2) + "\n"


def params_from_entries(entries, num_rels: int | None = None) -> RelationParams:
    """Inverse of :meth:`TuningResult.entries`; ``num_rels`` defaults to max id + 1."""
    entries = list(entries)
    if num_rels is None:
        num_rels = max(int(e["relation_id"]) for e in entries) + 1
    values = {}
    for e in entries:
        r = int(e["relation_id"])
        if e["direction"] not in (TAIL, HEAD):
            raise ConfigError(f"bad direction {e['direction']!r} in params")
        values[r if e["direction"] == TAIL else r + num_rels] = (float(e["lambda"]), float(e["alpha"]))
    return RelationParams(values)


def load_params(path, num_rels: int | None = None) -> RelationParams:
    with open(path) as fh:
        try:
            entries = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid params JSON ({exc})") from exc
    return params_from_entries(entries, num_rels)


def _first_argmax(values) -> int:
    best = 0
    for i, v in enumerate(values):
        if v > values[best]:
            best = i
    return best


def _tune_unit(unit_args, lambdas, alphas, tie: TieProtocol, uniforms):
    blocks = [_engine.prepare_relation(*args, lambdas, True) for args in unit_args]
    qids = np.concatenate([b.query_ids for b in blocks])
    u = uniforms[qids] if uniforms is not None else None

    def mrr_of(li, alpha):
        counts = [b.counts(li, alpha) for b in blocks]
        higher = np.concatenate([c[0] for c in counts])
        ties = np.concatenate([c[1] for c in counts])
        rr, _ = rank_metrics(higher, ties, tie, u)
        return rr, float(rr.mean())

    lam_scores = [mrr_of(li, 1.0)[1] for li in range(len(lambdas))]
    li = _first_argmax(lam_scores)
    alpha_scores = [mrr_of(li, a)[1] for a in alphas]
    ai = _first_argmax(alpha_scores)
    rr, _ = mrr_of(li, alphas[ai])
    per_rel = {}
    start = 0
    for b in blocks:
        n = len(b.query_ids)
        per_rel[b.relation] = (float(rr[start : start + n].mean()), n)
        start += n
    return float(lambdas[li]), float(alphas[ai]), per_rel


def tune(
    ds: Dataset,
    lambda_grid=LAMBDA_GRID,
    alpha_grid=ALPHA_GRID,
    tie: TieProtocol = TieProtocol("expected"),
    pool_directions: bool = False,
    n_jobs: int = 1,
) -> TuningResult:
    """Pick ``lambda_r`` by validation MRR of the strict score, then ``alpha_r``.

    Each relation direction is tuned on its own validation queries (both
    directions share one setting with ``pool_directions``). Equal MRRs go to
    the earliest grid entry. Relations without validation queries keep
    ``(1.0001, 1)``.
    """
    lambdas = check_grid(lambda_grid, "lambda", lo=0)
    alphas = check_grid(alpha_grid, "alpha", lo=0, hi=1)
    if not len(ds.valid):
        raise TuningError("validation split is empty")
    tasks = split_tasks(ds, "valid", SINGLE)
    R = ds.num_rels
    present = tasks.relations()
    if pool_directions:
        units = sorted({r % R for r in present})
        unit_members = {u: [r for r in (u, u + R) if r in tasks.by_relation] for u in units}
    else:
        unit_members = {r: [r] for r in present}
    uniforms = tie.uniforms(len(tasks.queries)) if tie.kind == "random" else None
    jobs = [
        delayed(_tune_unit)([tasks.args(r) for r in members], lambdas, alphas, tie, uniforms)
        for members in unit_members.values()
    ]
    results = run_jobs(jobs, n_jobs)
    values = {r: (DEFAULT_LAMBDA, DEFAULT_ALPHA) for r in range(2 * R)}
    result = TuningResult(RelationParams(values), R)
    for members, (lam, alpha, per_rel) in zip(unit_members.values(), results):
        for r in members:
            values[r] = (lam, alpha)
            result.valid_mrr[r], result.counts[r] = per_rel[r]
    result.settings_evaluated = len(results) * (len(lambdas) + len(alphas))
    return result


def _sweep_relation(args, lambdas, alphas, single):
    block = _engine.prepare_relation(*args, lambdas, single)
    return block.query_ids, {
        (li, ai): block.counts(li, a) for li in range(len(lambdas)) for ai, a in enumerate(alphas)
    }


def sweep_fixed(
    ds: Dataset,
    lambdas,
    alphas,
    tie: TieProtocol = TieProtocol(),
    modes=(SINGLE,),
    split: str = "test",
    n_jobs: int = 1,
) -> list[dict]:
    """One report row per global ``(lambda, alpha)`` setting and mode."""
    lambdas = tuple(float(v) for v in lambdas)
    alphas = tuple(float(v) for v in alphas)
    rows = []
    for mode in modes:
        mode = normalize_mode(mode)
        tasks = split_tasks(ds, split, mode)
        jobs = [
            delayed(_sweep_relation)(tasks.args(r), lambdas, alphas, tasks.single_step)
            for r in tasks.relations()
        ]
        results = run_jobs(jobs, n_jobs)
        n = len(tasks.queries)
        for li, lam in enumerate(lambdas):
            for ai, alpha in enumerate(alphas):
                higher = np.zeros(n, np.int64)
                ties = np.zeros(n, np.int64)
                for qids, counts in results:
                    higher[qids], ties[qids] = counts[(li, ai)]
                report = report_from_counts(ds, tasks.queries[:, 1], higher, ties, mode, tie)
                rows.append({"mode": mode, "lambda": lam, "alpha": alpha, **report.aggregate(), "report": report})
    return rows


SWEEP_COLUMNS = ["mode", "lambda", "alpha", "count", "mrr", "h1", "h3", "h10"]


def sweep_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for row in rows:
        w.writerow([row[c] if isinstance(row[c], str) else repr(row[c]) for c in SWEEP_COLUMNS])
    return buf.getvalue()


def best_row(rows, mode: str = SINGLE) -> dict:
    cands = [r for r in rows if r["mode"] == normalize_mode(mode)]
    return cands[_first_argmax([r["mrr"] for r in cands])]

