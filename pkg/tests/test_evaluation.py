import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import expected_rr_enumerated, random_dataset, reference_counts
from tkgrb import _engine
from tkgrb.datasets import Dataset
from tkgrb.evaluation import (
    EvalReport,
    TieProtocol,
    evaluate,
    filter_set,
    rank_gold,
    rank_metrics,
    split_tasks,
)
from tkgrb.kg import Query
from tkgrb.scoring import ConfigError, RelationParams

EXPECTED = TieProtocol("expected")


def test_filter_set():
    q = Query(0, 1, 5, gold=2)
    facts = [(0, 1, 2, 5), (0, 1, 3, 5), (0, 1, 4, 4), (9, 1, 7, 5), (0, 2, 8, 5)]
    assert filter_set(facts, q) == {3}
    assert filter_set([(0, 1, 2, 5)], q) == set()


def test_rank_gold_unique_best():
    out = rank_gold({1: 0.9, 2: 0.1}, 1, set(), 10, EXPECTED)
    assert (out.rank, out.num_tied, out.higher) == (1, 0, 0)


def test_rank_gold_absent_gold_five_entities():
    # entities 0..4; gold 0 unscored, 1 and 2 positive, 3 filtered -> only 4 ties with gold
    out = rank_gold({1: 0.5, 2: 0.3}, 0, {3}, 5, EXPECTED)
    assert out.higher == 2 and out.num_tied == 1
    assert out.rank == 3.5


@pytest.mark.parametrize("k", [1, 2, 7, 100])
def test_rank_gold_all_tied(k):
    assert rank_gold({}, 0, set(), k, EXPECTED).rank == (k + 1) / 2


def test_rank_gold_rejects_filtered_gold():
    with pytest.raises(ValueError):
        rank_gold({}, 0, {0}, 3)


scores_st = st.dictionaries(st.integers(0, 19), st.sampled_from([0.1, 0.2, 0.3, 0.5]), max_size=20)


@settings(max_examples=200, deadline=None)
@given(scores_st, st.integers(0, 19), st.sets(st.integers(0, 19), max_size=6))
def test_filtering_never_hurts(scores, gold, excluded):
    excluded.discard(gold)
    filtered = rank_gold(scores, gold, excluded, 20, EXPECTED)
    raw = rank_gold(scores, gold, set(), 20, EXPECTED)
    assert 1 <= filtered.rank <= raw.rank <= 20
    assert filtered.rank <= 20 - len(excluded)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 50), st.integers(0, 60))
def test_expected_metrics_match_enumeration(higher, ties):
    rr, hits = rank_metrics([higher], [ties], EXPECTED)
    assert rr[0] == pytest.approx(float(expected_rr_enumerated(higher, ties)), rel=1e-11)
    ranks = [higher + 1 + j for j in range(ties + 1)]
    for k in (1, 3, 10):
        assert hits[k][0] == pytest.approx(sum(r <= k for r in ranks) / len(ranks), abs=1e-15)


def test_random_ranks_stay_in_tie_block():
    u = np.random.default_rng(0).random(1000)
    rr, _ = rank_metrics(np.full(1000, 4), np.full(1000, 3), TieProtocol("random"), u)
    ranks = np.round(1 / rr).astype(int)
    assert set(ranks.tolist()) == {5, 6, 7, 8}


# -- engine vs scalar reference -------------------------------------------------


def engine_counts(ds, split, params, mode):
    tasks = split_tasks(ds, split, mode)
    higher = np.zeros(len(tasks.queries), np.int64)
    ties = np.zeros(len(tasks.queries), np.int64)
    for r in tasks.relations():
        lam, alpha = params[r]
        block = _engine.prepare_relation(*tasks.args(r), [lam], tasks.single_step)
        h, t = block.counts(0, alpha)
        higher[block.query_ids] = h
        ties[block.query_ids] = t
    return higher, ties


@pytest.mark.parametrize("mode", ["single", "multi"])
@pytest.mark.parametrize("split", ["valid", "test"])
@pytest.mark.parametrize("seed", range(6))
def test_engine_matches_reference(seed, split, mode):
    rng = np.random.default_rng(seed)
    ds = random_dataset(rng, n_ent=7, n_rel=2)
    grid_l = [0.0, 0.04, 0.5, 1.0001]
    grid_a = [0.0, 0.5, 0.99, 1.0]
    params = RelationParams(
        {r: (grid_l[rng.integers(4)], grid_a[rng.integers(4)]) for r in range(2 * ds.num_rels)}
    )
    got = engine_counts(ds, split, params, mode)
    want = reference_counts(ds, split, params, mode == "single")
    np.testing.assert_array_equal(got[0], want[0])
    np.testing.assert_array_equal(got[1], want[1])


def recurring_dataset():
    z = np.zeros((0, 4), np.int64)
    train = np.array([[0, 0, 1, 0], [2, 0, 3, 0], [0, 0, 4, 1], [2, 0, 3, 1]])
    test = np.array([[0, 0, 4, 2], [2, 0, 3, 2]])
    return Dataset("recurring", 5, 1, train, z, test)


@pytest.mark.parametrize("mode", ["single", "multi"])
def test_exact_repeat_of_last_step_is_perfect(mode):
    report = evaluate(recurring_dataset(), "test", RelationParams.constant(1.0001, 1.0), mode, EXPECTED)
    assert report.mrr == 1.0 and report.h1 == 1.0
    assert report.count == 4


def test_one_test_timestep_single_equals_multi():
    ds = random_dataset(np.random.default_rng(3), n_test_t=1)
    params = RelationParams.constant(0.1, 0.9)
    single = evaluate(ds, "test", params, "single", TieProtocol("random", 5))
    multi = evaluate(ds, "test", params, "multi", TieProtocol("random", 5))
    assert single.to_dict()["aggregate"] == multi.to_dict()["aggregate"]
    assert single.cells == multi.cells


def test_evaluate_is_deterministic():
    ds = random_dataset(np.random.default_rng(11))
    params = RelationParams.constant(0.04, 0.99)
    a = evaluate(ds, "test", params, "single", TieProtocol("random", 123))
    b = evaluate(ds, "test", params, "single", TieProtocol("random", 123), n_jobs=2)
    assert a.to_json() == b.to_json()


def test_per_relation_decomposition():
    ds = random_dataset(np.random.default_rng(12), n_rel=3)
    rep = evaluate(ds, "test", RelationParams.constant(0.1, 0.9), "single", TieProtocol("random", 1))
    total = sum(c["count"] for c in rep.cells)
    assert total == rep.count == 2 * len(ds.test)
    for key in ("mrr", "h1", "h3", "h10"):
        assert sum(c["count"] * c[key] for c in rep.cells) / total == pytest.approx(getattr(rep, key), abs=1e-9)
    assert rep.h1 <= rep.h3 <= rep.h10 <= 1
    directions = {(c["relation_id"], c["direction"]) for c in rep.cells}
    assert all(d in ("tail", "head") for _, d in directions)


def test_missing_params_names_relation():
    ds = random_dataset(np.random.default_rng(1))
    with pytest.raises(ConfigError, match="relation"):
        evaluate(ds, "test", RelationParams({0: (0.1, 0.5)}), "single")


def test_report_json_and_csv_agree():
    ds = random_dataset(np.random.default_rng(2))
    rep = evaluate(ds, "test", RelationParams.constant(0.5, 0.9), "multi", TieProtocol("random", 9))
    again = EvalReport.from_dict(json.loads(rep.to_json()))
    assert again == rep
    lines = rep.to_csv().strip().split("\n")
    assert lines[0] == "relation_id,relation_label,direction,count,mrr,h1,h3,h10"
    assert len(lines) == len(rep.cells) + 2
    agg = lines[-1].split(",")
    assert agg[0] == "AGGREGATE" and float(agg[4]) == rep.mrr and int(agg[3]) == rep.count
    for line, cell in zip(lines[1:-1], rep.cells):
        fields = line.split(",")
        assert float(fields[4]) == cell["mrr"] and float(fields[7]) == cell["h10"]


def test_multi_step_not_better_on_recurring_data():
    # facts repeat one step later; multi-step loses access to the newest ones
    rows = []
    for t in range(12):
        rows += [(0, 0, 1 + (t // 2) % 3, t), (4, 0, 5, t), (6, 1, 7, t)]
    rows = np.array(rows)
    ds = Dataset("shifted", 10, 2, rows[rows[:, 3] < 8], np.zeros((0, 4), int), rows[rows[:, 3] >= 8])
    params = RelationParams.constant(1.0001, 1.0)
    single = evaluate(ds, "test", params, "single", EXPECTED)
    multi = evaluate(ds, "test", params, "multi", EXPECTED)
    assert multi.mrr < single.mrr


def test_fraction_helper_sanity():
    assert expected_rr_enumerated(0, 1) == Fraction(3, 4)


def test_rank_gold_scored_but_filtered_entity_is_not_a_tie():
    out = rank_gold({4: 0.3}, 5, {4, 6}, 7, EXPECTED)
    assert (out.higher, out.num_tied) == (0, 4)
