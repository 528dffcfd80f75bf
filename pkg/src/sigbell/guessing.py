"""Minimum-error discrimination of the reduced states as a measure of signalling."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import qlinalg as ql
from .errors import DimensionMismatch, InvalidInput, SolverFailure
from .qlinalg import Assemblage
from .solver import DEFAULT_SETTINGS, ConicProblem, SolverSettings, inner, total, trace

GAP_REJECT = 1e-5


@dataclass(frozen=True)
class GuessingResult:
    pg: float
    povm: np.ndarray = field(repr=False)   # [x, d, d]
    dualZ: np.ndarray = field(repr=False)
    gap: float
    primal: float
    dual: float


def _states(states) -> np.ndarray:
    S = np.asarray(states, dtype=complex)
    if S.ndim != 3 or S.shape[1] != S.shape[2] or len(S) == 0:
        raise DimensionMismatch("states must share one square dimension")
    return np.array([ql.validate_state(s) for s in S])


def _primal(S, settings):
    m, d = len(S), S.shape[1]
    prob = ConicProblem()
    N = [prob.hermitian(f"N{x}", d) for x in range(m)]
    prob.equal("completeness", total(N), np.eye(d))
    prob.maximize(total(inner(N[x], S[x]) for x in range(m)) / m)
    rep = prob.solve(settings)
    rep.require_optimal("guessing primal SDP")
    return rep.objective, np.array([ql.hermitize(rep.primal[f"N{x}"]) for x in range(m)])


def _dual(S, settings):
    m, d = len(S), S.shape[1]
    prob = ConicProblem()
    Z = prob.hermitian("Z", d, psd=False)
    for x in range(m):
        prob.psd(f"dom{x}", Z - S[x] / m)
    prob.minimize(trace(Z))
    rep = prob.solve(settings)
    rep.require_optimal("guessing dual SDP")
    return rep.objective, ql.hermitize(rep.primal["Z"])


def guessing_probability(states, settings: SolverSettings = DEFAULT_SETTINGS) -> GuessingResult:
    """Optimal probability of naming ``x`` from one copy of ``states[x]`` drawn uniformly."""
    S = _states(states)
    p, povm = _primal(S, settings)
    q, Z = _dual(S, settings)
    gap = abs(p - q)
    if gap > GAP_REJECT:
        raise SolverFailure(f"guessing SDPs disagree: primal {p:.10g}, dual {q:.10g}")
    m = len(S)
    pg = float(np.clip(0.5 * (p + q), 1.0 / m, 1.0))
    return GuessingResult(pg=pg, povm=povm, dualZ=Z, gap=gap, primal=p, dual=q)


def helstrom(rho1, rho2) -> float:
    r1, r2 = ql.as_operator(rho1), ql.as_operator(rho2)
    if r1.shape != r2.shape:
        raise DimensionMismatch("states have different dimensions")
    return 0.5 + 0.5 * ql.trace_norm(0.5 * r1 - 0.5 * r2)


def gamma_from_assemblage(assemblage: Assemblage, settings: SolverSettings = DEFAULT_SETTINGS) -> float:
    """Guessing probability of the setting from Bob's reduced states."""
    mu = assemblage.reduced_states()
    if len(mu) == 1:
        return 1.0
    if len(mu) == 2:
        # exact, and free of solver error near gamma = 1/2
        return helstrom(mu[0], mu[1])
    return guessing_probability(mu, settings).pg


def ensure_gamma(gamma: float, mA: int) -> float:
    if not (1.0 / mA - 1e-9 <= gamma <= 1 + 1e-9):
        raise InvalidInput(f"gamma must lie in [1/{mA}, 1], got {gamma}")
    return float(min(max(gamma, 1.0 / mA), 1.0))
