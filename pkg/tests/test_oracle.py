import math

import numpy as np
import pytest

from flopart.checks import random_instance
from flopart.data import CountSequence
from flopart.labels import Label, LabelKind, LabelSet, validate
from flopart.oracle import OracleError, enumerate_models, oracle_solve, pooled_fit

NONE, START = LabelKind.NO_PEAKS, LabelKind.PEAK_START


def counts(*z):
    return CountSequence.from_counts(np.array(z, dtype=float))


def test_peak_model():
    cost, model = oracle_solve(counts(1, 5, 1), LabelSet.empty(3), 1.0)
    assert cost == pytest.approx(7 - 5 * math.log(5) + 2, rel=1e-12)
    assert model.states == (0, 1, 0)
    assert model.means == pytest.approx((1, 5, 1))


def test_large_penalty_single_segment():
    cost, model = oracle_solve(counts(1, 5, 1), LabelSet.empty(3), 2.0)
    assert model.boundaries == ()
    assert cost == pytest.approx(7 - 7 * math.log(7 / 3), rel=1e-12)
    assert cost == pytest.approx(1.0689, abs=1e-4)


@pytest.mark.parametrize("lam", [0.0, 1.0, 100.0])
def test_no_peaks_pair(lam):
    cost, model = oracle_solve(counts(2, 2), validate([Label(1, 2, NONE)], 2), lam)
    assert model.states == (0, 0) and model.means == (2.0,)
    assert cost == pytest.approx(2 * (2 - 2 * math.log(2)))
    assert cost == pytest.approx(1.2274, abs=1e-4)


def test_pooled_fit_examples():
    data = counts(1, 1, 3, 3)
    means, loss = pooled_fit(data, [(1, 2), (3, 4)], [0])
    assert means == [2.0, 2.0]
    assert loss == pytest.approx(8 - 8 * math.log(2))
    means, _ = pooled_fit(data, [(1, 2), (3, 4)], [])
    assert means == [1.0, 3.0]
    means, loss = pooled_fit(counts(0, 0), [(1, 2)], [])
    assert (means, loss) == ([0.0], 0.0)


def test_pooled_fit_weighted():
    data = CountSequence.from_counts([1.0, 4.0], [3.0, 1.0])
    means, _ = pooled_fit(data, [(1, 1), (2, 2)], [0])
    assert means == [pytest.approx(7 / 4)] * 2


def test_instance_too_large():
    with pytest.raises(OracleError, match="instance too large"):
        oracle_solve(counts(*[1] * 13), LabelSet.empty(13), 1.0)


def test_unsatisfiable_labels():
    # bypass validation to build a contradictory set
    labels = LabelSet((Label(1, 3, NONE), Label(2, 3, START)), 3)
    with pytest.raises(OracleError, match="no feasible model"):
        oracle_solve(counts(1, 2, 3), labels, 1.0)


def test_optimum_bounds_every_candidate():
    rng = np.random.default_rng(0)
    for _ in range(20):
        data, labels = random_instance(rng, n_max=7)
        cost, _ = oracle_solve(data, labels, 1.5)
        for m in enumerate_models(data, labels):
            assert cost <= m.penalized_cost(1.5) + 1e-12


def test_candidates_alternate_and_respect_order():
    rng = np.random.default_rng(1)
    data, labels = random_instance(rng, n_max=7)
    for m in enumerate_models(data, labels):
        for g in m.boundaries:
            assert m.states[g - 1] != m.states[g]


def test_removing_labels_never_increases_cost():
    rng = np.random.default_rng(2)
    for _ in range(40):
        data, labels = random_instance(rng, n_max=8, p_unlabeled=0.0)
        lam = float(rng.choice([0.0, 1.0, 4.0]))
        with_labels = oracle_solve(data, labels, lam)[0]
        without = oracle_solve(data, LabelSet.empty(data.n), lam)[0]
        assert without <= with_labels + 1e-12
