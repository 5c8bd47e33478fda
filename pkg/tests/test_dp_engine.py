import math

import numpy as np
import pytest

from flopart.checks import constraint_violations, random_instance, recomputed_cost
from flopart.cost_function import CostFunction, add_loss, minimize
from flopart.data import CountSequence
from flopart.dp_engine import (
    RuleKind,
    apply_rule,
    decode,
    fill_matrix,
    fit,
    fit_rules,
    get_rule,
    init_costs,
    poisson_loss,
)
from flopart.labels import Label, LabelContext, LabelKind, LabelSet, Position, validate
from flopart.oracle import oracle_solve

START, END, NONE = LabelKind.PEAK_START, LabelKind.PEAK_END, LabelKind.NO_PEAKS


def counts(*z):
    return CountSequence.from_counts(np.array(z, dtype=float))


def seg_tuple(result):
    return [(s.start, s.end, s.state) for s in result.segments]


# --- worked examples ----------------------------------------------------------

def test_peak_model_unlabeled():
    r = fit(counts(1, 5, 1), None, 1.0)
    assert seg_tuple(r) == [(1, 1, 0), (2, 2, 1), (3, 3, 0)]
    assert r.means == pytest.approx([1, 5, 1], rel=1e-9)
    loss = 7 - 5 * math.log(5)
    assert r.total_loss == pytest.approx(loss, rel=1e-9)
    assert r.penalized_cost == pytest.approx(loss + 2, rel=1e-12)
    assert r.penalized_cost == pytest.approx(0.95281, abs=1e-5)
    assert r.peaks == [(2, 2)]


def test_no_peaks_forces_background():
    r = fit(counts(1, 5, 1), [Label(1, 3, NONE)], 1.0)
    assert seg_tuple(r) == [(1, 3, 0)]
    assert r.means[0] == pytest.approx(7 / 3)
    assert r.penalized_cost == pytest.approx(7 - 7 * math.log(7 / 3), rel=1e-12)
    assert r.penalized_cost == pytest.approx(1.06891, abs=1e-5)


@pytest.mark.parametrize("lam", [0.1, 1.0, 50.0])
def test_constant_data_single_segment(lam):
    r = fit(counts(4, 4, 4, 4), None, lam)
    assert seg_tuple(r) == [(1, 4, 0)]
    assert r.means.tolist() == [4.0] * 4
    assert r.penalized_cost == pytest.approx(4 * (4 - 4 * math.log(4)))


def test_start_and_end_labels():
    labels = [Label(1, 2, START), Label(3, 4, END)]
    r = fit(counts(1, 5, 5, 1), labels, 0.0)
    assert r.states.tolist() == [0, 1, 1, 0]
    assert r.means == pytest.approx([1, 5, 5, 1], rel=1e-9)
    assert r.penalized_cost == pytest.approx(12 - 10 * math.log(5), rel=1e-12)
    assert r.penalized_cost == pytest.approx(-4.09438, abs=1e-5)


def test_constant_data_honors_labels():
    labels = [Label(2, 3, START)]
    r = fit(counts(4, 4, 4, 4), labels, 2.0)
    assert r.states.tolist() == [0, 0, 1, 1]
    assert r.penalized_cost == pytest.approx(oracle_solve(counts(4, 4, 4, 4), validate(labels, 4), 2.0)[0])


# --- init / rules ------------------------------------------------------------

def ctx(kind, pos):
    return LabelContext(0, kind, pos)


def test_init_costs_unlabeled():
    rules = (get_rule(0, None), get_rule(1, None))
    c0, c1 = init_costs(3.0, 1.0, rules, (1.0, 5.0))
    for C in (c0, c1):
        (p,) = C.pieces
        assert (p.linear_coef, p.log_coef, p.const_coef) == (1.0, -3.0, 0.0)


@pytest.mark.parametrize(
    "context, infinite_state",
    [
        (ctx(NONE, Position.FIRST), 1),
        (ctx(START, Position.FIRST), 1),
        (ctx(END, Position.FIRST), 0),
    ],
)
def test_init_costs_overrides(context, infinite_state):
    rules = (get_rule(0, context), get_rule(1, context))
    pair = init_costs(3.0, 1.0, rules, (1.0, 5.0))
    assert pair[infinite_state].is_infinite
    assert not pair[1 - infinite_state].is_infinite


def test_get_rule_table():
    assert get_rule(0, None).kind == RuleKind.UNLABELED and get_rule(0, None).mode == 2
    assert get_rule(1, ctx(NONE, Position.INTERIOR)).is_infinite
    assert get_rule(0, ctx(NONE, Position.INTERIOR)).mode == 2
    assert get_rule(0, ctx(START, Position.LAST)).is_infinite
    assert get_rule(0, ctx(START, Position.INTERIOR)).mode == 1
    assert get_rule(0, ctx(START, Position.FIRST)).mode == 2
    assert get_rule(1, ctx(START, Position.FIRST)).is_infinite
    assert get_rule(1, ctx(START, Position.LAST)).mode == 2
    # peakEnd mirrors peakStart with the states swapped
    assert get_rule(1, ctx(END, Position.LAST)).is_infinite
    assert get_rule(1, ctx(END, Position.INTERIOR)).mode == 1
    assert get_rule(0, ctx(END, Position.FIRST)).is_infinite
    with pytest.raises(ValueError):
        get_rule(2, None)


def prev_pair():
    dom = (0.5, 6.0)
    c0 = add_loss(CostFunction.zero(*dom), 1.0)
    c1 = add_loss(CostFunction.zero(*dom), 5.0)
    return c0, c1


def test_apply_rule_interior_stays():
    c0, c1 = prev_pair()
    out = apply_rule(get_rule(0, ctx(START, Position.INTERIOR)), c0, c1, 2.0, 1.0, 1.0, 2)
    (p,) = out.pieces
    assert (p.linear_coef, p.log_coef, p.const_coef) == (2.0, -3.0, 0.0)


def test_apply_rule_with_infinite_other_state():
    c0, _ = prev_pair()
    inf = CostFunction.infinite(*c0.domain)
    out = apply_rule(get_rule(0, None), c0, inf, 2.0, 1.0, 1.0, 2)
    assert out.table[:, 2:5].tolist() == add_loss(c0, 2.0).table[:, 2:5].tolist()


def test_apply_rule_zero_penalty_dominated():
    c0, c1 = prev_pair()
    grid = np.linspace(0.5, 6.0, 500)
    for s, prev in ((0, c0), (1, c1)):
        out = apply_rule(get_rule(s, None), c0, c1, 2.0, 1.0, 0.0, 2)
        stay = add_loss(prev, 2.0)
        assert np.all(out.values(grid) <= stay.values(grid) + 1e-12)


def test_infinite_rule_output():
    c0, c1 = prev_pair()
    assert apply_rule(get_rule(1, ctx(NONE, Position.LAST)), c0, c1, 2.0, 1.0, 1.0, 2).is_infinite


# --- decode ------------------------------------------------------------------

def test_matrix_decode_peak_model():
    m = fill_matrix(counts(1, 5, 1), None, 1.0)
    r = decode(m)
    assert seg_tuple(r) == [(1, 1, 0), (2, 2, 1), (3, 3, 0)]
    assert recomputed_cost(counts(1, 5, 1), r) == pytest.approx(r.penalized_cost, rel=1e-6)
    best = min(minimize(m[s, 3])[1] for s in (0, 1))
    assert r.penalized_cost == best


def test_final_tie_prefers_background():
    r = fit(counts(1, 2, 3), None, 100.0)
    assert seg_tuple(r) == [(1, 3, 0)]
    m = fill_matrix(counts(1, 2, 3), None, 100.0)
    assert minimize(m[0, 3])[1] == pytest.approx(minimize(m[1, 3])[1], rel=1e-12)
    assert decode(m).states.tolist() == [0, 0, 0]


def test_constant_data_single_state_path():
    r = fit(counts(2, 2, 2), None, 0.0)
    assert len(r.segments) == 1


def test_equal_mean_change_is_reported():
    # up change forced by a label where the optimal means are equal
    r = fit(counts(3, 3, 1, 3), [Label(1, 2, START)], 0.0)
    assert r.states[:2].tolist() == [0, 1]
    assert r.segments[0].mean <= r.segments[1].mean + 1e-12
    assert r.change_count >= 1


@pytest.mark.parametrize("seed", range(30))
def test_fill_matrix_matches_fit(seed):
    rng = np.random.default_rng(seed)
    data, labels = random_instance(rng, n_max=15)
    if data.values.min() == data.values.max():
        return
    lam = float(rng.choice([0.0, 0.5, 2.0, 10.0]))
    a = fit(data, labels, lam)
    b = decode(fill_matrix(data, labels, lam))
    assert seg_tuple(a) == seg_tuple(b)
    assert a.penalized_cost == pytest.approx(b.penalized_cost, rel=1e-12)
    assert a.means == pytest.approx(b.means, rel=1e-9)


def test_empty_labels_match_unlabeled_rules():
    rng = np.random.default_rng(0)
    data = CountSequence.from_counts(rng.poisson(3, 300))
    a = fit(data, LabelSet.empty(300), 2.0)
    b = fit_rules(data, np.zeros(300, dtype=np.int8), 2.0)
    assert seg_tuple(a) == seg_tuple(b)
    assert a.penalized_cost == b.penalized_cost


# --- properties vs the oracle -----------------------------------------------

@pytest.mark.parametrize("seed", range(40))
def test_random_instances_match_oracle(seed):
    rng = np.random.default_rng(1000 + seed)
    data, labels = random_instance(rng, n_max=8)
    for lam in (0.0, 1.0, 5.0):
        r = fit(data, labels, lam)
        cost, _ = oracle_solve(data, labels, lam)
        assert r.penalized_cost == pytest.approx(cost, rel=1e-8, abs=1e-12)
        assert constraint_violations(r, labels) == []
        assert recomputed_cost(data, r) == pytest.approx(r.penalized_cost, rel=1e-6, abs=1e-9)


def test_weighted_data_matches_oracle():
    rng = np.random.default_rng(4)
    for _ in range(30):
        n = int(rng.integers(2, 8))
        data = CountSequence.from_counts(rng.poisson(4, n), rng.integers(1, 20, n).astype(float))
        for lam in (0.5, 20.0):
            assert fit(data, None, lam).penalized_cost == pytest.approx(
                oracle_solve(data, LabelSet.empty(n), lam)[0], rel=1e-8)


def test_alternation_and_monotone_penalty():
    rng = np.random.default_rng(2)
    for _ in range(20):
        z = rng.poisson(rng.choice([1, 10], 200))
        data = CountSequence.from_counts(z)
        costs = []
        for lam in (0.0, 0.5, 2.0, 8.0, 32.0):
            r = fit(data, None, lam)
            nz = r.changes[r.changes != 0]
            assert np.all(nz[1:] != nz[:-1])
            costs.append(r.penalized_cost)
        assert np.all(np.diff(costs) >= -1e-9)


def test_peak_end_at_sequence_start():
    r = fit(counts(9, 1, 1), [Label(1, 2, END)], 1.0)
    assert r.states.tolist()[:2] == [1, 0]


def test_peak_start_at_sequence_end():
    r = fit(counts(1, 1, 9), [Label(2, 3, START)], 1.0)
    assert r.states.tolist()[1:] == [0, 1]


def test_poisson_loss_zero_convention():
    assert poisson_loss(0.0, 0.0).item() == 0.0
    assert poisson_loss(2.0, 1.0, 3.0).item() == 3.0


def test_negative_penalty_rejected():
    with pytest.raises(ValueError):
        fit(counts(1, 2), None, -1.0)


def test_labels_validated_in_fit():
    with pytest.raises(ValueError, match="labels overlap or touch"):
        fit(counts(1, 2, 3, 4), [Label(1, 2, START), Label(2, 3, END)], 1.0)
