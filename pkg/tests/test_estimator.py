import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from oracles import random_dataset
from tkgrb import RecurrencyBaseline, TieProtocol, evaluate, tune
from tkgrb.scoring import RelationParams
from tkgrb.validation import check_quadruples, check_time_order


@pytest.fixture
def ds():
    return random_dataset(np.random.default_rng(21), n_rel=3)


def test_params_and_clone():
    est = RecurrencyBaseline(lambda_grid=(0.0, 0.5), mode="multi", random_state=4)
    params = est.get_params()
    assert params["lambda_grid"] == (0.0, 0.5) and params["mode"] == "multi"
    twin = clone(est)
    assert twin.get_params() == params
    assert twin.set_params(tie="expected").tie == "expected"


def test_fit_with_validation_matches_tune(ds):
    est = RecurrencyBaseline(num_entities=ds.num_entities, num_rels=ds.num_rels).fit(ds.train, X_valid=ds.valid)
    ref = tune(ds)
    for r in range(2 * ds.num_rels):
        assert est.params_[r] == ref.params[r]
    report = est.evaluate(np.concatenate([ds.test]))
    direct = evaluate(ds, "test", ref.params, "single", TieProtocol("random", 0))
    assert report.to_json() == direct.to_json()
    assert est.score(ds.test) == direct.mrr


def test_fit_without_validation_uses_defaults(ds):
    est = RecurrencyBaseline(default_lambda=0.1, default_alpha=0.9).fit(np.concatenate([ds.train, ds.valid]))
    assert est.tuning_ is None and est.params_[5] == (0.1, 0.9)
    ds.num_entities = est.num_entities_
    want = evaluate(ds, "test", RelationParams.constant(0.1, 0.9), "multi", TieProtocol("random", 0))
    assert est.evaluate(ds.test, mode="multi").mrr == want.mrr


def test_predict_and_decision_function():
    X = np.array([(0, 0, 1, 0), (0, 0, 2, 1), (0, 0, 2, 2), (3, 0, 1, 2)])
    est = RecurrencyBaseline(default_lambda=1.0001, default_alpha=1.0).fit(X)
    scores = est.decision_function([(0, 0, 0, 3), (1, 1, 0, 3)])
    assert scores.shape == (2, 4)
    assert est.predict([(0, 0, 0, 3)]).tolist() == [2]
    # inverse relation id scores heads: who played against object 1?
    assert set(np.flatnonzero(scores[1])) == {0, 3}
    with pytest.raises(ValueError, match="not after"):
        est.decision_function([(0, 0, 0, 2)])


def test_not_fitted():
    with pytest.raises(NotFittedError):
        RecurrencyBaseline().predict([(0, 0, 0, 1)])


def test_validation_helpers():
    assert check_quadruples([[1, 2, 3, 4, 0]]).tolist() == [[1, 2, 3, 4]]
    assert check_quadruples([[1.0, 2.0, 3.0, 4.0]]).dtype == np.int64
    for bad, msg in [([[1, 2, 3]], "4 columns"), ([[1, 2, 3, 4.5]], "integer"), ([[1, -2, 3, 4]], "negative")]:
        with pytest.raises(ValueError, match=msg):
            check_quadruples(bad)
    with pytest.raises(ValueError, match="num_rels"):
        check_quadruples([[0, 3, 0, 0]], num_rels=3)
    with pytest.raises(ValueError, match="not after"):
        check_time_order(np.array([[0, 0, 0, 5]]), np.array([[0, 0, 0, 5]]))
    with pytest.raises(ValueError):
        RecurrencyBaseline().fit([[0, 0, 1, 3]], X_valid=[[0, 0, 1, 2]])
