"""Signalling local hidden-variable models.

Deterministic strategies let each party's output depend on *both* settings;
the budgets bound how much, on average, an output is allowed to change when
the other party switches setting.  Because every strategy is deterministic,
the per-strategy signalling costs are 0/1 constants, so membership and the
white-noise visibility are plain linear programs over strategy weights.
"""
from __future__ import annotations

import functools
import itertools
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import InvalidInput, SolverFailure, TooLarge
from .scenario import Behavior, Scenario, SignallingBudget
from .solver import DEFAULT_SETTINGS, LinearProgram, SolverReport, SolverSettings, solve_lp

STRATEGY_CAP = 2**20


@dataclass(frozen=True)
class DeterministicStrategy:
    dA: np.ndarray = field(repr=False)         # [x, y] -> a
    dB: np.ndarray = field(repr=False)         # [x, y] -> b
    alphaCost: np.ndarray = field(repr=False)  # [a, x, y, y']
    betaCost: np.ndarray = field(repr=False)   # [b, y, x, x']

    def behavior(self, scenario: Scenario) -> Behavior:
        p = np.zeros(scenario.shape)
        for x in range(scenario.mA):
            for y in range(scenario.mB):
                p[x, y, self.dA[x, y], self.dB[x, y]] = 1.0
        return Behavior(scenario, p)


def _response_tables(n_out: int, mA: int, mB: int, bob: bool):
    """All maps ``(x, y) -> outcome``, lexicographic over pairs ordered x-major.

    Returns ``maps[i, x, y]`` and ``cost[i, o, s, t, t']``: the 0/1 change of
    the indicator ``[map = o]`` at own setting ``s`` when the other party's
    setting moves ``t -> t'``.
    """
    digits = np.array(list(itertools.product(range(n_out), repeat=mA * mB)), dtype=np.int8)
    maps = digits.reshape(-1, mA, mB)
    own = maps.transpose(0, 2, 1) if bob else maps  # [i, own setting, other setting]
    ind = (own[:, None, :, :] == np.arange(n_out)[None, :, None, None]).astype(np.int8)
    cost = np.abs(ind[:, :, :, :, None] - ind[:, :, :, None, :])
    return maps, cost


class StrategyTable(Sequence):
    """All deterministic signalling strategies of a scenario, Alice's map varying fastest."""

    def __init__(self, scenario: Scenario):
        sc = scenario
        self.scenario = sc
        self.A_maps, self.A_cost = _response_tables(sc.nA, sc.mA, sc.mB, bob=False)  # cost [a, x, y, y']
        self.B_maps, self.B_cost = _response_tables(sc.nB, sc.mA, sc.mB, bob=True)   # cost [b, y, x, x']
        self.NA = len(self.A_maps)
        self.NB = len(self.B_maps)

    def __len__(self) -> int:
        return self.NA * self.NB

    def split(self, lam):
        return np.asarray(lam) % self.NA, np.asarray(lam) // self.NA

    def __getitem__(self, lam):
        if isinstance(lam, slice):
            return [self[i] for i in range(*lam.indices(len(self)))]
        if lam < 0:
            lam += len(self)
        if not 0 <= lam < len(self):
            raise IndexError(lam)
        iA, iB = self.split(lam)
        return DeterministicStrategy(
            dA=self.A_maps[iA].astype(int), dB=self.B_maps[iB].astype(int),
            alphaCost=self.A_cost[iA].astype(int), betaCost=self.B_cost[iB].astype(int),
        )


def enumerate_strategies(scenario: Scenario, cap: int = STRATEGY_CAP) -> StrategyTable:
    count = scenario.strategy_count
    if count > cap:
        raise TooLarge(count, cap)
    return _strategies(scenario)


@functools.lru_cache(maxsize=8)
def _strategies(scenario: Scenario) -> StrategyTable:
    return StrategyTable(scenario)


# ----------------------------------------------------------------- LP model


class _Model:
    """Sparse matrices shared by every LP on one scenario."""

    def __init__(self, table: StrategyTable):
        sc = table.scenario
        self.scenario = sc
        self.table = table
        N = len(table)
        self.N = N
        lam = np.arange(N)
        iA, iB = table.split(lam)
        K = sc.mA * sc.mB
        a = table.A_maps.reshape(table.NA, K)[iA].astype(np.int64)  # [N, k]
        b = table.B_maps.reshape(table.NB, K)[iB].astype(np.int64)
        k = np.arange(K)[None, :]
        rows = (k * sc.nA + a) * sc.nB + b
        self.n_entries = K * sc.nA * sc.nB
        self.D = sp.csr_matrix(
            (np.ones(N * K), (rows.ravel(), np.repeat(lam, K))), shape=(self.n_entries, N)
        )
        # only y < y' (resp. x < x') rows: the tables are symmetric with zero diagonal
        self.alpha_idx = [(o, s, t, u) for o in range(sc.nA) for s in range(sc.mA)
                          for t in range(sc.mB) for u in range(t + 1, sc.mB)]
        self.beta_idx = [(o, s, t, u) for o in range(sc.nB) for s in range(sc.mB)
                         for t in range(sc.mA) for u in range(t + 1, sc.mA)]
        self.R = self._cost_matrix(table.A_cost, self.alpha_idx, iA)
        self.T = self._cost_matrix(table.B_cost, self.beta_idx, iB)

    @staticmethod
    def _cost_matrix(cost, idx, which):
        if not idx:
            return sp.csr_matrix((0, len(which)))
        o, s, t, u = (np.array(c) for c in zip(*idx))
        dense = cost[:, o, s, t, u].T  # [rows, n_party_maps]
        return sp.csr_matrix(dense[:, which].astype(float))

    def budget_rows(self, budget: SignallingBudget):
        if not budget.matches(self.scenario):
            raise InvalidInput("budget shape does not match the scenario")
        al = np.array([budget.alpha[i] for i in self.alpha_idx])
        be = np.array([budget.beta[i] for i in self.beta_idx])
        return al, be

    def full_tables(self, d_rows, e_rows):
        sc = self.scenario
        d = np.zeros(sc.alpha_shape)
        e = np.zeros(sc.beta_shape)
        for val, i in zip(d_rows, self.alpha_idx):
            d[i] = val
        for val, i in zip(e_rows, self.beta_idx):
            e[i] = val
        return d, e


@functools.lru_cache(maxsize=8)
def _model(scenario: Scenario) -> _Model:
    return _Model(_strategies(scenario))


def model_for(scenario: Scenario, cap: int = STRATEGY_CAP) -> _Model:
    enumerate_strategies(scenario, cap)
    return _model(scenario)


# ------------------------------------------------------------- visibility


@dataclass(frozen=True)
class VisibilityResult:
    v: float
    weights: np.ndarray = field(repr=False)
    status: str
    gap: float
    residual: float


def _check(behavior: Behavior, budget: SignallingBudget):
    if not budget.matches(behavior.scenario):
        raise InvalidInput("budget shape does not match the behavior's scenario")


def visibility(behavior: Behavior, budget: SignallingBudget,
               settings: SolverSettings = DEFAULT_SETTINGS, cap: int = STRATEGY_CAP) -> VisibilityResult:
    """Largest ``v <= 1`` with ``v p + (1 - v) u`` in the SLHV polytope of ``budget``."""
    _check(behavior, budget)
    sc = behavior.scenario
    M = model_for(sc, cap)
    N = M.N
    u = 1.0 / (sc.nA * sc.nB)
    p = behavior.p.ravel()
    al, be = M.budget_rows(budget)

    A_eq = sp.vstack([
        sp.hstack([M.D, sp.csr_matrix(-(p - u)[:, None])]),
        sp.hstack([sp.csr_matrix(np.ones((1, N))), sp.csr_matrix((1, 1))]),
    ]).tocsr()
    b_eq = np.concatenate([np.full(M.n_entries, u), [1.0]])
    A_ub = sp.vstack([sp.hstack([M.R, sp.csr_matrix((M.R.shape[0], 1))]),
                      sp.hstack([M.T, sp.csr_matrix((M.T.shape[0], 1))])]).tocsr()
    b_ub = np.concatenate([al, be])
    c = np.zeros(N + 1)
    c[-1] = 1.0
    lb = np.concatenate([np.zeros(N), [-np.inf]])
    ub = np.concatenate([np.full(N, np.inf), [1.0]])
    lp = LinearProgram(c=c, A_eq=A_eq, b_eq=b_eq, A_ub=A_ub if A_ub.shape[0] else None,
                       b_ub=b_ub if A_ub.shape[0] else None, lb=lb, ub=ub, maximize=True)
    rep = solve_lp(lp, settings).require_optimal("visibility LP")
    x = rep.primal["x"]
    return VisibilityResult(v=float(x[-1]), weights=np.clip(x[:-1], 0, None), status=rep.status,
                            gap=rep.gap, residual=rep.residual)


@dataclass(frozen=True)
class SignallingBellInequality:
    """``sum c[x,y,a,b] p(a,b|x,y) >= bound`` for every SLHV model within the budget."""

    c: np.ndarray = field(repr=False)   # [x, y, a, b]
    mu: float
    d: np.ndarray = field(repr=False)   # [a, x, y, y']
    e: np.ndarray = field(repr=False)   # [b, y, x, x']
    bound: float

    def value(self, behavior: Behavior) -> float:
        return float(np.sum(self.c * behavior.p))

    def bound_for(self, budget: SignallingBudget) -> float:
        return float(self.mu - np.sum(self.d * budget.alpha) - np.sum(self.e * budget.beta))

    def violated_by(self, behavior: Behavior, tol: float = 1e-8) -> bool:
        return self.value(behavior) < self.bound - tol


@dataclass(frozen=True)
class DualResult:
    objective: float
    inequality: SignallingBellInequality
    status: str
    residual: float


def dual_visibility(behavior: Behavior, budget: SignallingBudget,
                    settings: SolverSettings = DEFAULT_SETTINGS, cap: int = STRATEGY_CAP) -> DualResult:
    """Solve the LP dual of :func:`visibility` and read off the certifying inequality.

    Variables ``(c, mu, d >= 0, e >= 0)``; minimize
    ``1 - mu + c.p + d.alpha + e.beta`` subject to
    ``c.D_l + d.R_l + e.T_l >= mu`` for every strategy ``l`` and
    ``1 + c.(p - u) >= 0`` (the cap ``v <= 1`` turns the usual equality into this inequality).
    """
    _check(behavior, budget)
    sc = behavior.scenario
    M = model_for(sc, cap)
    u = 1.0 / (sc.nA * sc.nB)
    p = behavior.p.ravel()
    al, be = M.budget_rows(budget)
    nc, nd, ne = M.n_entries, len(al), len(be)
    n = nc + 1 + nd + ne

    strat_rows = sp.hstack([-M.D.T, sp.csr_matrix(np.ones((M.N, 1))), -M.R.T, -M.T.T]).tocsr()
    cap_row = sp.csr_matrix(np.concatenate([-(p - u), np.zeros(1 + nd + ne)])[None, :])
    A_ub = sp.vstack([strat_rows, cap_row]).tocsr()
    b_ub = np.concatenate([np.zeros(M.N), [1.0]])
    obj = np.concatenate([p, [-1.0], al, be])
    lb = np.concatenate([np.full(nc + 1, -np.inf), np.zeros(nd + ne)])
    rep = solve_lp(LinearProgram(c=obj, A_ub=A_ub, b_ub=b_ub, lb=lb), settings)
    rep.require_optimal("dual visibility LP")
    z = rep.primal["x"]
    c = z[:nc].reshape(sc.shape)
    mu = float(z[nc])
    d, e = M.full_tables(z[nc + 1: nc + 1 + nd], z[nc + 1 + nd:])
    d, e = np.clip(d, 0, None), np.clip(e, 0, None)
    bound = float(mu - np.sum(d * budget.alpha) - np.sum(e * budget.beta))
    ineq = SignallingBellInequality(c=c, mu=mu, d=d, e=e, bound=bound)
    return DualResult(objective=1.0 + rep.objective, inequality=ineq, status=rep.status, residual=rep.residual)


def sample_slhv(scenario: Scenario, budget: SignallingBudget, seed: int,
                settings: SolverSettings = DEFAULT_SETTINGS, cap: int = STRATEGY_CAP) -> Behavior:
    """A vertex of the SLHV polytope: maximize a seeded random direction over strategy weights."""
    if not budget.matches(scenario):
        raise InvalidInput("budget shape does not match the scenario")
    M = model_for(scenario, cap)
    rng = np.random.default_rng(seed)
    w = rng.normal(size=M.n_entries)
    obj = M.D.T @ w
    al, be = M.budget_rows(budget)
    A_ub = sp.vstack([M.R, M.T]).tocsr()
    b_ub = np.concatenate([al, be])
    lp = LinearProgram(c=obj, A_eq=sp.csr_matrix(np.ones((1, M.N))), b_eq=np.array([1.0]),
                       A_ub=A_ub if A_ub.shape[0] else None, b_ub=b_ub if A_ub.shape[0] else None,
                       maximize=True)
    rep = solve_lp(lp, settings, method="highs-ds")
    if not rep.ok:
        raise SolverFailure(f"sampling LP: {rep.status} {rep.message}", rep)
    q = np.clip(rep.primal["x"], 0, None)
    q /= q.sum()
    return Behavior(scenario, (M.D @ q).reshape(scenario.shape))


def strategy_mixture(scenario: Scenario, weights) -> Behavior:
    M = _model(scenario)
    return Behavior(scenario, (M.D @ np.asarray(weights)).reshape(scenario.shape))


def max_bell_value(scenario: Scenario, budget: SignallingBudget, functional,
                   settings: SolverSettings = DEFAULT_SETTINGS) -> tuple[float, Behavior]:
    """Maximize a linear functional ``sum F[x,y,a,b] p`` over the SLHV polytope."""
    M = model_for(scenario)
    F = np.asarray(functional, dtype=float).ravel()
    al, be = M.budget_rows(budget)
    A_ub = sp.vstack([M.R, M.T]).tocsr()
    lp = LinearProgram(c=M.D.T @ F, A_eq=sp.csr_matrix(np.ones((1, M.N))), b_eq=np.array([1.0]),
                       A_ub=A_ub if A_ub.shape[0] else None,
                       b_ub=np.concatenate([al, be]) if A_ub.shape[0] else None, maximize=True)
    rep = solve_lp(lp, settings).require_optimal("Bell maximization LP")
    q = np.clip(rep.primal["x"], 0, None)
    return rep.objective, Behavior(scenario, (M.D @ (q / q.sum())).reshape(scenario.shape))
