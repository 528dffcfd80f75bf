import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sigbell import qlinalg as ql
from sigbell.errors import EmptyCell, InvalidBehavior, InvalidInput, NotDichotomic
from sigbell.postselect import alpha_postselected, simulate
from sigbell.scenario import (CHSH, CHSH_COEFFS, Behavior, CountsTable, Scenario, SignallingBudget,
                              behavior_from_counts, bell_value, check_no_signalling, estimate_budgets,
                              uniform_behavior)


def test_scenario_validation_and_counts():
    assert CHSH.strategy_count == 256
    assert Scenario(3, 2, 2, 2).strategy_count == 2**6 * 2**6
    with pytest.raises(InvalidInput):
        Scenario(0, 2, 2, 2)
    with pytest.raises(InvalidInput):
        Scenario(2, 2, True, 2)


def test_behavior_clamps_tiny_negatives_and_renormalizes():
    p = np.full(CHSH.shape, 0.25)
    p[0, 0, 0, 0] = -5e-10
    p[0, 0, 1, 1] = 0.5 + 5e-10
    b = Behavior(CHSH, p)
    assert b.p.min() == 0
    np.testing.assert_allclose(b.p.sum(axis=(2, 3)), 1, atol=1e-15)


@pytest.mark.parametrize("bad", [
    lambda p: p.__setitem__((0, 0, 0, 0), -1e-3),
    lambda p: p.__setitem__((1, 1, 1, 1), 0.3),
    lambda p: p.__setitem__((0, 1, 0, 0), np.nan),
])
def test_behavior_rejects_invalid_tables(bad):
    p = np.full(CHSH.shape, 0.25)
    bad(p)
    with pytest.raises(InvalidBehavior):
        Behavior(CHSH, p)


def test_behavior_rejects_wrong_shape():
    with pytest.raises(InvalidBehavior):
        Behavior(CHSH, np.full((2, 2, 2, 3), 1 / 6))


@pytest.mark.parametrize("kind", ["ideal_quantum_chsh", "pr_box", "uniform", "local_corr"])
def test_standard_behaviors_are_no_signalling(kind):
    r = check_no_signalling(ql.standard_behavior(kind))
    assert r.compliant and r.max_deviation == 0


def test_postselected_behavior_signals_by_closed_form_alpha():
    res = simulate(1.0, 0.5)
    r = check_no_signalling(res.behavior)
    assert not r.compliant
    assert r.max_deviation == pytest.approx(alpha_postselected(1.0, 0.5), abs=1e-12)


def test_estimate_budgets_examples():
    assert np.all(estimate_budgets(ql.standard_behavior("ideal_quantum_chsh")).alpha == 0)
    p = np.full(CHSH.shape, 0.25)
    p[0, 0] = [[0.3, 0.3], [0.2, 0.2]]
    budget = estimate_budgets(Behavior(CHSH, p))
    assert budget.alpha[0, 0, 0, 1] == pytest.approx(0.1, abs=1e-15)
    assert budget.alpha[0, 0, 1, 0] == budget.alpha[0, 0, 0, 1]
    assert np.all(budget.beta == 0)

    res = simulate(1.0, 0.5)
    assert res.budgets.alpha[1, 1, 0, 1] == pytest.approx(alpha_postselected(1.0, 0.5), abs=1e-12)


def test_estimate_budgets_slack_and_clamp():
    b = estimate_budgets(ql.standard_behavior("uniform"), slack=0.2)
    assert b.alpha[0, 0, 0, 1] == pytest.approx(0.2)
    assert b.alpha[0, 0, 0, 0] == 0
    assert np.all(estimate_budgets(ql.standard_behavior("uniform"), slack=3).alpha <= 1)
    with pytest.raises(InvalidInput):
        estimate_budgets(ql.standard_behavior("uniform"), slack=-0.1)


def test_budget_invariants_enforced():
    a = np.zeros(CHSH.alpha_shape)
    a[0, 0, 0, 1] = 0.1
    with pytest.raises(InvalidInput, match="symmetric"):
        SignallingBudget(a, np.zeros(CHSH.beta_shape))
    a[0, 0, 1, 0] = 0.1
    a[0, 0, 0, 0] = 0.1
    with pytest.raises(InvalidInput, match="diagonal"):
        SignallingBudget(a, np.zeros(CHSH.beta_shape))
    assert SignallingBudget.zero(CHSH) <= SignallingBudget.uniform(CHSH, 0.1)


@st.composite
def chsh_tables(draw):
    raw = draw(arrays(float, (2, 2, 4), elements=st.floats(0.01, 1.0)))
    return (raw / raw.sum(axis=2, keepdims=True)).reshape(CHSH.shape)


@settings(max_examples=60, deadline=None)
@given(chsh_tables(), st.floats(0, 0.5))
def test_estimated_budget_is_a_valid_budget(p, slack):
    b = estimate_budgets(Behavior(CHSH, p), slack)
    assert b.matches(CHSH)
    assert np.all((0 <= b.alpha) & (b.alpha <= 1))
    pa = Behavior(CHSH, p).marginal_A()
    assert b.alpha[0, 1, 0, 1] >= abs(pa[1, 0, 0] - pa[1, 1, 0]) - 1e-12


def test_bell_value_examples():
    assert bell_value(ql.standard_behavior("ideal_quantum_chsh"), CHSH_COEFFS) == pytest.approx(2 * math.sqrt(2), abs=1e-12)
    assert bell_value(uniform_behavior(CHSH), CHSH_COEFFS) == 0
    assert bell_value(ql.standard_behavior("pr_box"), CHSH_COEFFS) == pytest.approx(4)
    assert bell_value(ql.standard_behavior("local_corr"), CHSH_COEFFS) == pytest.approx(2)
    with pytest.raises(NotDichotomic):
        bell_value(uniform_behavior(Scenario(2, 2, 3, 2)), CHSH_COEFFS)


def _counts(cells):
    return CountsTable(CHSH, np.array(cells))


def test_counts_without_no_click_give_uniform_behavior():
    c = np.zeros((2, 2, 3, 3), dtype=int)
    c[:, :, :2, :2] = 100
    est = behavior_from_counts(_counts(c))
    np.testing.assert_allclose(est.behavior.p, 0.25)
    np.testing.assert_allclose(est.etaA, 1)
    np.testing.assert_allclose(est.etaB, 1)


def test_counts_efficiency_arithmetic():
    c = np.zeros((2, 2, 3, 3), dtype=int)
    c[:, :, :2, :2] = 25
    c[:, :, 2, :2] = 25  # Alice no-click: n(none) = 50 against n(a) = 50 per outcome
    est = behavior_from_counts(_counts(c))
    np.testing.assert_allclose(est.etaA, 0.5)
    np.testing.assert_allclose(est.etaB, 1)


def test_counts_cell_with_only_no_clicks_is_rejected():
    c = np.zeros((2, 2, 3, 3), dtype=int)
    c[:, :, :2, :2] = 10
    c[1, 0] = 0
    c[1, 0, 2, 2] = 40
    with pytest.raises(EmptyCell):
        behavior_from_counts(_counts(c))


def test_counts_table_validation():
    with pytest.raises(InvalidInput):
        CountsTable(CHSH, np.zeros((2, 2, 2, 2)))
    with pytest.raises(InvalidInput):
        CountsTable(CHSH, -np.ones((2, 2, 3, 3)))
