import json

import numpy as np
import pytest

from sigbell import formats as fmt
from sigbell import qlinalg as ql
from sigbell.errors import InvalidInput
from sigbell.scenario import CHSH, CountsTable, SignallingBudget
from sigbell.slhv import dual_visibility
from sigbell.witness import mub_witness


def roundtrip(obj):
    return json.loads(fmt.dumps(obj))


def test_float_rounding_and_nonfinite():
    out = roundtrip({"a": 1 / 3, "b": float("nan"), "c": np.float64(np.inf), "d": np.int64(4), "e": np.bool_(True)})
    assert out == {"a": 0.333333333333, "b": None, "c": None, "d": 4, "e": True}


def test_behavior_budget_inequality_roundtrip():
    beh = ql.standard_behavior("ideal_quantum_chsh")
    np.testing.assert_allclose(fmt.behavior_from_dict(roundtrip(fmt.behavior_to_dict(beh))).p, beh.p, atol=1e-12)
    budget = SignallingBudget.uniform(CHSH, 0.05)
    back = fmt.budget_from_dict(roundtrip(fmt.budget_to_dict(budget)))
    np.testing.assert_array_equal(back.alpha, budget.alpha)
    ineq = dual_visibility(beh, SignallingBudget.zero(CHSH)).inequality
    again = fmt.inequality_from_dict(roundtrip(fmt.inequality_to_dict(ineq, "zero")))
    assert again.bound == pytest.approx(ineq.bound, abs=1e-11)
    np.testing.assert_allclose(again.c, ineq.c, atol=1e-11)


def test_counts_roundtrip_uses_null_for_no_click():
    rng = np.random.default_rng(0)
    table = CountsTable(CHSH, rng.integers(0, 50, size=(2, 2, 3, 3)))
    d = roundtrip(fmt.counts_to_dict(table))
    assert "null,null" in d["counts"][0][0] and "0,null" in d["counts"][1][1]
    np.testing.assert_array_equal(fmt.counts_from_dict(d).counts, table.counts)


def test_assemblage_and_witness_roundtrip():
    A = ql.qutrit_signalling_assemblage(0.7, 0.3)
    back = fmt.assemblage_from_dict(roundtrip(fmt.assemblage_to_dict(A)))
    np.testing.assert_allclose(back.sigma, A.sigma, atol=1e-11)
    W = mub_witness(3)
    Wb = fmt.witness_from_dict(roundtrip(fmt.witness_to_dict(W)))
    np.testing.assert_allclose(Wb.operators, W.operators, atol=1e-11)
    assert Wb.schmidtBounds == pytest.approx(W.schmidtBounds, abs=1e-11)


def test_malformed_inputs():
    with pytest.raises(InvalidInput):
        fmt.behavior_from_dict({"mA": 2, "mB": 2, "nA": 2})
    with pytest.raises(InvalidInput):
        fmt.counts_from_dict({"mA": 2, "mB": 2, "nA": 2, "nB": 2, "counts": [[{"0,5": 1}]]})
    with pytest.raises(InvalidInput):
        fmt.counts_from_dict({"mA": 1, "mB": 1, "nA": 2, "nB": 2, "counts": [[{"0,1": 1.5}]]})
    with pytest.raises(InvalidInput):
        fmt.matrix_from_dict({"re": [[1, 0]], "im": [[0]]})
    with pytest.raises(InvalidInput):
        fmt.assemblage_from_dict({"mA": 1, "nA": 2, "dim": 2, "sigma": [[np.eye(2).tolist()]]})
