import itertools
import math

import numpy as np
import pytest

from oracles import local_visibility
from sigbell import qlinalg as ql
from sigbell.correction import corrected_chsh_bound, corrected_full_correlation_bound
from sigbell.errors import InvalidInput, TooLarge
from sigbell.postselect import simulate
from sigbell.scenario import CHSH, CHSH_COEFFS, Behavior, Scenario, SignallingBudget, uniform_behavior
from sigbell.slhv import (dual_visibility, enumerate_strategies, max_bell_value, sample_slhv,
                          strategy_mixture, visibility)

ZERO = SignallingBudget.zero(CHSH)


def test_strategy_count_and_cost_tables():
    table = enumerate_strategies(CHSH)
    assert len(table) == 256
    for s in table:
        assert s.alphaCost.shape == (2, 2, 2, 2)
        np.testing.assert_array_equal(s.alphaCost, s.alphaCost.transpose(0, 1, 3, 2))
    # Alice's output ignores y: no cost
    s = next(s for s in table if np.array_equal(s.dA, [[0, 0], [1, 1]]))
    assert np.all(s.alphaCost == 0)
    # Alice outputs y: every (a, x) flips when y changes
    s = next(s for s in table if np.array_equal(s.dA, [[0, 1], [0, 1]]))
    for a, x in itertools.product(range(2), range(2)):
        assert s.alphaCost[a, x, 0, 1] == 1


def test_strategy_behaviors_are_deterministic_and_distinct():
    table = enumerate_strategies(CHSH)
    seen = {tuple(s.behavior(CHSH).p.ravel()) for s in table}
    assert len(seen) == 256


def test_strategy_cap():
    with pytest.raises(TooLarge):
        enumerate_strategies(Scenario(3, 3, 3, 3))
    with pytest.raises(TooLarge):
        enumerate_strategies(CHSH, cap=100)


def test_local_deterministic_behaviors_have_unit_visibility():
    table = enumerate_strategies(CHSH)
    for s in table:
        if np.all(s.alphaCost == 0) and np.all(s.betaCost == 0):
            assert visibility(s.behavior(CHSH), ZERO).v == pytest.approx(1, abs=1e-9)


def test_textbook_visibilities():
    assert visibility(ql.standard_behavior("ideal_quantum_chsh"), ZERO).v == pytest.approx(1 / math.sqrt(2), abs=1e-9)
    assert visibility(ql.standard_behavior("pr_box"), ZERO).v == pytest.approx(0.5, abs=1e-9)
    assert visibility(ql.standard_behavior("pr_box"), SignallingBudget.uniform(CHSH, 1)).v == pytest.approx(1, abs=1e-9)
    assert visibility(uniform_behavior(CHSH), ZERO).v == pytest.approx(1)


def test_zero_budget_matches_local_polytope_oracle():
    rng = np.random.default_rng(7)
    behaviors = [ql.standard_behavior(k) for k in ("ideal_quantum_chsh", "pr_box", "local_corr")]
    for _ in range(10):
        rho = ql.random_state(4, rng, rank=1)
        A = np.array([ql.basis_measurement(ql.random_unitary(2, rng).T) for _ in range(2)])
        B = np.array([ql.basis_measurement(ql.random_unitary(2, rng).T) for _ in range(2)])
        behaviors.append(ql.behavior_from(rho, A, B))
    for beh in behaviors:
        assert visibility(beh, ZERO).v == pytest.approx(local_visibility(beh.p), abs=1e-8)


def test_zero_budget_oracle_on_larger_scenario():
    sc = Scenario(3, 2, 2, 2)
    rng = np.random.default_rng(8)
    rho = ql.random_state(4, rng, rank=1)
    A = np.array([ql.basis_measurement(ql.random_unitary(2, rng).T) for _ in range(3)])
    B = np.array([ql.basis_measurement(ql.random_unitary(2, rng).T) for _ in range(2)])
    beh = ql.behavior_from(rho, A, B)
    assert beh.scenario == sc
    zero = SignallingBudget.zero(sc)
    assert visibility(beh, zero).v == pytest.approx(local_visibility(beh.p), abs=1e-8)


def test_visibility_grows_with_budget():
    beh = ql.standard_behavior("pr_box")
    vals = [visibility(beh, SignallingBudget.uniform(CHSH, s)).v for s in (0, 0.05, 0.1, 0.2, 0.5)]
    assert all(b >= a - 1e-9 for a, b in zip(vals, vals[1:]))
    assert vals[1] > vals[0]


def test_budget_shape_mismatch():
    with pytest.raises(InvalidInput):
        visibility(ql.standard_behavior("pr_box"), SignallingBudget.zero(Scenario(3, 2, 2, 2)))


def _random_quantum_behaviors(rng, n):
    out = []
    for _ in range(n):
        rho = ql.random_state(4, rng)
        A = np.array([ql.basis_measurement(ql.random_unitary(2, rng).T) for _ in range(2)])
        B = np.array([ql.basis_measurement(ql.random_unitary(2, rng).T) for _ in range(2)])
        out.append(ql.behavior_from(rho, A, B))
    return out


def test_dual_recovers_chsh_facet():
    r = dual_visibility(ql.standard_behavior("ideal_quantum_chsh"), ZERO)
    assert r.objective == pytest.approx(1 / math.sqrt(2), abs=1e-9)
    ineq = r.inequality
    assert ineq.violated_by(ql.standard_behavior("ideal_quantum_chsh"))
    # on no-signalling behaviors, c.p must be an affine, decreasing function of exactly one
    # of the 8 CHSH facets (sign patterns s_xy with an odd number of minus signs)
    sample = _random_quantum_behaviors(np.random.default_rng(11), 24)
    values = np.array([ineq.value(b) for b in sample])
    matches = []
    for signs in itertools.product((1, -1), repeat=4):
        s = np.reshape(signs, (2, 2))
        if np.prod(s) != -1:
            continue
        g = np.array([np.sum(s * b.correlators()) for b in sample])
        X = np.column_stack([g, np.ones_like(g)])
        coef, *_ = np.linalg.lstsq(X, values, rcond=None)
        if np.max(np.abs(X @ coef - values)) < 1e-7 and coef[0] < 0:
            matches.append(s)
    assert len(matches) == 1


def test_dual_on_local_behavior_is_not_violated():
    beh = ql.standard_behavior("local_corr")
    r = dual_visibility(beh, ZERO)
    assert r.objective >= 1 - 1e-9
    assert not r.inequality.violated_by(beh)


def test_inequality_holds_on_sampled_models():
    rng = np.random.default_rng(9)
    for i in range(5):
        e0, e1 = rng.uniform(0.3, 1, size=2)
        res = simulate(e0, e1)
        r = dual_visibility(res.behavior, res.budgets)
        assert r.objective == pytest.approx(visibility(res.behavior, res.budgets).v, abs=1e-7)
        assert r.inequality.bound == pytest.approx(r.inequality.bound_for(res.budgets))
        for s in range(20):
            beh = sample_slhv(CHSH, res.budgets, seed=100 * i + s)
            assert r.inequality.value(beh) >= r.inequality.bound - 1e-8


def test_sampling_is_deterministic_and_inside_polytope():
    budget = SignallingBudget.uniform(CHSH, 0.1)
    a, b = sample_slhv(CHSH, budget, seed=3), sample_slhv(CHSH, budget, seed=3)
    np.testing.assert_array_equal(a.p, b.p)
    assert visibility(a, budget).v == pytest.approx(1, abs=1e-9)
    z = sample_slhv(CHSH, ZERO, seed=4)
    assert visibility(z, ZERO).v == pytest.approx(1, abs=1e-9)


def test_strategy_mixture_reproduces_behavior():
    beh = ql.standard_behavior("local_corr")
    r = visibility(beh, ZERO)
    mixed = strategy_mixture(CHSH, r.weights / r.weights.sum())
    np.testing.assert_allclose(mixed.p, beh.p, atol=1e-9)


def test_corrected_bound_is_sound_and_tight_for_symmetric_budgets():
    rng = np.random.default_rng(10)
    for _ in range(10):
        t = np.triu(rng.uniform(0, 0.1, size=(2, 2, 2, 2)), 1)
        t[1] = t[0]
        budget = SignallingBudget(t + t.transpose(0, 1, 3, 2), np.zeros(CHSH.beta_shape))
        best, _ = max_bell_value(CHSH, budget, np.einsum("xy,ab->xyab", CHSH_COEFFS, [[1, -1], [-1, 1]]))
        bound = corrected_full_correlation_bound(CHSH_COEFFS, 2, budget).total
        assert best == pytest.approx(bound, abs=1e-8)
        assert bound == corrected_chsh_bound(budget)
    best, _ = max_bell_value(CHSH, SignallingBudget.uniform(CHSH, 0.05),
                             np.einsum("xy,ab->xyab", CHSH_COEFFS, [[1, -1], [-1, 1]]))
    assert best == pytest.approx(2.4, abs=1e-9)


def test_non_dichotomic_scenario_runs():
    sc = Scenario(2, 2, 3, 2)
    beh = Behavior(sc, np.full(sc.shape, 1 / 6))
    assert visibility(beh, SignallingBudget.zero(sc)).v == pytest.approx(1)
