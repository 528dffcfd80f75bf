"""Analytic signalling corrections to full-correlation dichotomic Bell inequalities."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, NotDichotomic
from .scenario import CHSH, CHSH_COEFFS, SignallingBudget


@dataclass(frozen=True)
class CorrectedBound:
    base: float
    correction: float
    total: float
    chosenTuples: tuple[tuple[int, ...], tuple[int, ...]]  # (y~_x for each x, x~_y for each y)
    vacuous: bool


def corrected_full_correlation_bound(c, W_LHV: float, budget: SignallingBudget) -> CorrectedBound:
    """``W <= W_LHV + min over (y~, x~) of sum_xy |c_xy| (sum_a alpha[a,x,y,y~_x] + sum_b beta[b,y,x,x~_y])``.

    Each tuple entry appears in its own group of terms, so the minimum is
    taken independently per ``x`` (over ``y~_x``) and per ``y`` (over ``x~_y``).
    """
    c = np.abs(np.asarray(c, dtype=float))
    alpha, beta = budget.alpha, budget.beta
    if alpha.shape[0] != 2 or beta.shape[0] != 2:
        raise NotDichotomic("corrected bound needs two outcomes per party")
    mA, mB = c.shape
    if alpha.shape[1:] != (mA, mB, mB) or beta.shape[1:] != (mB, mA, mA):
        raise InvalidInput("coefficient table does not match the budget shape")

    sa = alpha.sum(axis=0)  # [x, y, y~]
    sb = beta.sum(axis=0)   # [y, x, x~]
    # costA[x, y~] = sum_y |c_xy| sa[x, y, y~]
    costA = np.zeros((mA, mB))
    for x in range(mA):
        for yt in range(mB):
            for y in range(mB):
                costA[x, yt] += c[x, y] * sa[x, y, yt]
    costB = np.zeros((mB, mA))
    for y in range(mB):
        for xt in range(mA):
            for x in range(mA):
                costB[y, xt] += c[x, y] * sb[y, x, xt]
    yt = tuple(int(i) for i in costA.argmin(axis=1))
    xt = tuple(int(i) for i in costB.argmin(axis=1))
    corrA = 0.0
    for x in range(mA):
        corrA += costA[x, yt[x]]
    corrB = 0.0
    for y in range(mB):
        corrB += costB[y, xt[y]]
    correction = corrA + corrB
    total = W_LHV + corrA + corrB
    return CorrectedBound(
        base=float(W_LHV), correction=float(correction), total=float(total),
        chosenTuples=(yt, xt), vacuous=bool(total > c.sum()),
    )


def corrected_chsh_bound(budget: SignallingBudget) -> float:
    """``2 + 2 sum_x alpha[0,x,0,1] + 2 sum_y beta[0,y,0,1]``."""
    if not budget.matches(CHSH):
        raise InvalidInput("corrected CHSH bound needs a CHSH-scenario budget")
    a, b = budget.alpha, budget.beta
    return float(2 + 2 * (a[0, 0, 0, 1] + a[0, 1, 0, 1]) + 2 * (b[0, 0, 0, 1] + b[0, 1, 0, 1]))


def chsh_corrected(budget: SignallingBudget) -> CorrectedBound:
    return corrected_full_correlation_bound(CHSH_COEFFS, 2.0, budget)
