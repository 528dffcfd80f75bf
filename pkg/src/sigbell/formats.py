"""JSON encodings of the package's data types.

Floats are written with 12 significant digits; complex matrices as
``{"re": [[...]], "im": [[...]]}``; non-finite floats as ``null``.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import InvalidInput
from .qlinalg import Assemblage
from .scenario import Behavior, CountsTable, Scenario, SignallingBudget
from .slhv import SignallingBellInequality
from .witness import SteeringWitness

SIG_DIGITS = 12
NO_CLICK = "null"


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return None
        return float(format(x, f".{SIG_DIGITS}g"))
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2) + "\n"


def load_json(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InvalidInput(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"{path} is not valid JSON: {exc}") from exc


def _field(data: dict, key: str):
    try:
        return data[key]
    except (KeyError, TypeError):
        raise InvalidInput(f"missing field {key!r}") from None


def _scenario(data: dict) -> Scenario:
    try:
        return Scenario(*(int(_field(data, k)) for k in ("mA", "mB", "nA", "nB")))
    except (TypeError, ValueError) as exc:
        raise InvalidInput(f"bad scenario header: {exc}") from exc


def _array(value, what: str) -> np.ndarray:
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvalidInput(f"{what} is not a numeric table") from exc
    return arr


# behavior


def behavior_to_dict(b: Behavior) -> dict:
    sc = b.scenario
    return {"mA": sc.mA, "mB": sc.mB, "nA": sc.nA, "nB": sc.nB, "p": b.p}


def behavior_from_dict(data: dict) -> Behavior:
    return Behavior(_scenario(data), _array(_field(data, "p"), "p"))


# counts


def counts_from_dict(data: dict) -> CountsTable:
    """``counts[x][y]`` maps ``"a,b"`` to a tally; ``"null"`` in either slot is a no-click."""
    sc = _scenario(data)
    cells = _field(data, "counts")
    out = np.zeros((sc.mA, sc.mB, sc.nA + 1, sc.nB + 1), dtype=np.int64)
    try:
        for x in range(sc.mA):
            for y in range(sc.mB):
                for key, n in cells[x][y].items():
                    a, b = (s.strip() for s in key.split(","))
                    ia = sc.nA if a == NO_CLICK else int(a)
                    ib = sc.nB if b == NO_CLICK else int(b)
                    if not (0 <= ia <= sc.nA and 0 <= ib <= sc.nB):
                        raise InvalidInput(f"outcome key {key!r} out of range")
                    if int(n) != n:
                        raise InvalidInput(f"count for {key!r} is not an integer")
                    out[x, y, ia, ib] += int(n)
    except (IndexError, AttributeError, ValueError, TypeError) as exc:
        if isinstance(exc, InvalidInput):
            raise
        raise InvalidInput(f"malformed counts table: {exc}") from exc
    return CountsTable(sc, out)


def counts_to_dict(table: CountsTable) -> dict:
    sc = table.scenario
    label = lambda i, n: NO_CLICK if i == n else str(i)
    cells = [[{f"{label(a, sc.nA)},{label(b, sc.nB)}": int(table.counts[x, y, a, b])
               for a in range(sc.nA + 1) for b in range(sc.nB + 1)}
              for y in range(sc.mB)] for x in range(sc.mA)]
    return {"mA": sc.mA, "mB": sc.mB, "nA": sc.nA, "nB": sc.nB, "counts": cells}


# budget


def budget_to_dict(budget: SignallingBudget) -> dict:
    return {"alpha": budget.alpha, "beta": budget.beta}


def budget_from_dict(data: dict) -> SignallingBudget:
    return SignallingBudget(_array(_field(data, "alpha"), "alpha"), _array(_field(data, "beta"), "beta"))


# inequality


def inequality_to_dict(ineq: SignallingBellInequality, budget_ref: str | None = None) -> dict:
    out = {"c": ineq.c, "mu": ineq.mu, "d": ineq.d, "e": ineq.e, "bound": ineq.bound}
    if budget_ref is not None:
        out["budget_ref"] = budget_ref
    return out


def inequality_from_dict(data: dict) -> SignallingBellInequality:
    return SignallingBellInequality(
        c=_array(_field(data, "c"), "c"), mu=float(_field(data, "mu")),
        d=_array(_field(data, "d"), "d"), e=_array(_field(data, "e"), "e"),
        bound=float(_field(data, "bound")),
    )


# matrices, assemblages, witnesses


def matrix_to_dict(M) -> dict:
    M = np.asarray(M, dtype=complex)
    return {"re": M.real, "im": M.imag}


def matrix_from_dict(data) -> np.ndarray:
    if isinstance(data, dict):
        re = _array(_field(data, "re"), "re")
        im = _array(data.get("im", np.zeros_like(re)), "im")
        if re.shape != im.shape:
            raise InvalidInput("real and imaginary parts differ in shape")
        return re + 1j * im
    return _array(data, "matrix").astype(complex)


def _operator_table(rows, mA: int, nA: int, dim: int, what: str) -> np.ndarray:
    try:
        ops = np.array([[matrix_from_dict(rows[x][a]) for a in range(nA)] for x in range(mA)])
    except (IndexError, TypeError, KeyError) as exc:
        raise InvalidInput(f"malformed {what} table") from exc
    if ops.shape != (mA, nA, dim, dim):
        raise InvalidInput(f"{what} table has shape {ops.shape}, expected {(mA, nA, dim, dim)}")
    return ops


def assemblage_to_dict(A: Assemblage) -> dict:
    return {"mA": A.mA, "nA": A.nA, "dim": A.dim,
            "sigma": [[matrix_to_dict(A.sigma[x, a]) for a in range(A.nA)] for x in range(A.mA)]}


def assemblage_from_dict(data: dict) -> Assemblage:
    mA, nA, dim = (int(_field(data, k)) for k in ("mA", "nA", "dim"))
    return Assemblage(_operator_table(_field(data, "sigma"), mA, nA, dim, "sigma"))


def witness_to_dict(W: SteeringWitness) -> dict:
    mA, nA, dim = W.operators.shape[:3]
    out = {"mA": mA, "nA": nA, "dim": dim,
           "operators": [[matrix_to_dict(W.operators[x, a]) for a in range(nA)] for x in range(mA)],
           "L_LHS": W.lhsBound}
    if W.schmidtBounds is not None:
        out["schmidt_bounds"] = list(W.schmidtBounds)
    return out


def witness_from_dict(data: dict) -> SteeringWitness:
    mA, nA, dim = (int(_field(data, k)) for k in ("mA", "nA", "dim"))
    ops = _operator_table(_field(data, "operators"), mA, nA, dim, "operators")
    sb = data.get("schmidt_bounds")
    return SteeringWitness(ops, float(_field(data, "L_LHS")), tuple(sb) if sb is not None else None)
