"""Bell scenarios, behaviors, signalling budgets and raw-count ingestion.

All probability tables use the layout ``p[x, y, a, b]``.  Budgets use
``alpha[a, x, y, y']`` for Alice (changes of her marginal when Bob switches
setting) and ``beta[b, y, x, x']`` for Bob.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyCell, InvalidBehavior, InvalidInput, NotDichotomic

log = logging.getLogger(__name__)

NEG_CLAMP = 1e-9
NORM_TOL = 1e-8
EFFICIENCY_SPREAD_WARN = 1e-2


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Scenario:
    mA: int
    mB: int
    nA: int
    nB: int

    def __post_init__(self):
        for name in ("mA", "mB", "nA", "nB"):
            val = getattr(self, name)
            if not isinstance(val, (int, np.integer)) or isinstance(val, bool) or val < 1:
                raise InvalidInput(f"{name} must be a positive integer, got {val!r}")
        if self.strategy_count >= 2**63:
            raise InvalidInput("strategy space does not fit in a signed 64-bit count")

    @property
    def strategy_count(self) -> int:
        k = self.mA * self.mB
        return self.nA**k * self.nB**k

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return (self.mA, self.mB, self.nA, self.nB)

    @property
    def alpha_shape(self):
        return (self.nA, self.mA, self.mB, self.mB)

    @property
    def beta_shape(self):
        return (self.nB, self.mB, self.mA, self.mA)

    @property
    def is_dichotomic(self) -> bool:
        return self.nA == 2 and self.nB == 2


CHSH = Scenario(2, 2, 2, 2)


@dataclass(frozen=True)
class Behavior:
    """Joint conditional distribution ``p(a,b|x,y)``.

    Entries in ``[-1e-9, 0)`` are clamped to zero and the affected rows
    renormalized; anything more negative, or rows that do not sum to one
    within ``NORM_TOL``, is rejected.
    """

    scenario: Scenario
    p: np.ndarray = field(repr=False)

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        if p.shape != self.scenario.shape:
            raise InvalidBehavior(f"table shape {p.shape} does not match scenario {self.scenario.shape}")
        if not np.all(np.isfinite(p)):
            raise InvalidBehavior("behavior contains non-finite entries")
        if p.min() < -NEG_CLAMP:
            raise InvalidBehavior(f"negative probability {p.min():.3g} below clamp tolerance")
        p = np.clip(p, 0.0, None)
        sums = p.sum(axis=(2, 3))
        if np.max(np.abs(sums - 1.0)) > NORM_TOL:
            raise InvalidBehavior(f"rows not normalized (max deviation {np.max(np.abs(sums - 1)):.3g})")
        p = p / sums[:, :, None, None]
        object.__setattr__(self, "p", _frozen(p))

    @classmethod
    def from_array(cls, p) -> "Behavior":
        p = np.asarray(p, dtype=float)
        if p.ndim != 4:
            raise InvalidBehavior("behavior table must be 4-dimensional [x][y][a][b]")
        return cls(Scenario(*map(int, p.shape)), p)

    def marginal_A(self) -> np.ndarray:
        """``pa[x, y, a] = p(a|x,y)``."""
        return self.p.sum(axis=3)

    def marginal_B(self) -> np.ndarray:
        """``pb[x, y, b] = p(b|x,y)``."""
        return self.p.sum(axis=2)

    def mix(self, other: "Behavior", weight: float) -> "Behavior":
        """``(1 - weight) * self + weight * other``."""
        if other.scenario != self.scenario:
            raise InvalidBehavior("cannot mix behaviors of different scenarios")
        return Behavior(self.scenario, (1 - weight) * self.p + weight * other.p)

    def correlators(self) -> np.ndarray:
        if not self.scenario.is_dichotomic:
            raise NotDichotomic("correlators need two outcomes per party")
        sign = np.array([1.0, -1.0])
        return np.einsum("xyab,a,b->xy", self.p, sign, sign)


def uniform_behavior(scenario: Scenario) -> Behavior:
    return Behavior(scenario, np.full(scenario.shape, 1.0 / (scenario.nA * scenario.nB)))


@dataclass(frozen=True)
class SignallingBudget:
    alpha: np.ndarray = field(repr=False)
    beta: np.ndarray = field(repr=False)

    def __post_init__(self):
        alpha = np.array(self.alpha, dtype=float)
        beta = np.array(self.beta, dtype=float)
        for name, t in (("alpha", alpha), ("beta", beta)):
            if t.ndim != 4 or t.shape[2] != t.shape[3]:
                raise InvalidInput(f"{name} must have shape [o][s][t][t]")
            if np.any(t < 0) or np.any(t > 1) or not np.all(np.isfinite(t)):
                raise InvalidInput(f"{name} entries must lie in [0, 1]")
            if not np.array_equal(t, t.transpose(0, 1, 3, 2)):
                raise InvalidInput(f"{name} must be symmetric in its last two indices")
            if np.any(np.diagonal(t, axis1=2, axis2=3) != 0):
                raise InvalidInput(f"{name} diagonal entries must be zero")
        if alpha.shape[1] != beta.shape[2] or beta.shape[1] != alpha.shape[2]:
            raise InvalidInput("alpha and beta setting counts disagree")
        object.__setattr__(self, "alpha", _frozen(alpha))
        object.__setattr__(self, "beta", _frozen(beta))

    @classmethod
    def zero(cls, scenario: Scenario) -> "SignallingBudget":
        return cls(np.zeros(scenario.alpha_shape), np.zeros(scenario.beta_shape))

    @classmethod
    def uniform(cls, scenario: Scenario, value: float) -> "SignallingBudget":
        """Every off-diagonal entry set to ``value``."""
        a = np.full(scenario.alpha_shape, float(value))
        b = np.full(scenario.beta_shape, float(value))
        a *= 1 - np.eye(scenario.mB)
        b *= 1 - np.eye(scenario.mA)
        return cls(a, b)

    def matches(self, scenario: Scenario) -> bool:
        return self.alpha.shape == scenario.alpha_shape and self.beta.shape == scenario.beta_shape

    def __le__(self, other: "SignallingBudget") -> bool:
        return bool(np.all(self.alpha <= other.alpha) and np.all(self.beta <= other.beta))


@dataclass(frozen=True)
class NoSignallingReport:
    max_deviation: float
    compliant: bool
    worst_entry: tuple


def _pairwise_gaps(scenario: Scenario, behavior: Behavior):
    pa = behavior.marginal_A()  # [x, y, a]
    pb = behavior.marginal_B()  # [x, y, b]
    # alpha[a, x, y, y'] = |p(a|x,y) - p(a|x,y')|
    alpha = np.abs(pa[:, :, None, :] - pa[:, None, :, :]).transpose(3, 0, 1, 2)
    # beta[b, y, x, x'] = |p(b|x,y) - p(b|x',y)|
    beta = np.abs(pb[:, None, :, :] - pb[None, :, :, :]).transpose(3, 2, 0, 1)
    return alpha, beta


def check_no_signalling(behavior: Behavior, tol: float = 1e-9) -> NoSignallingReport:
    alpha, beta = _pairwise_gaps(behavior.scenario, behavior)
    ia = np.unravel_index(np.argmax(alpha), alpha.shape)
    ib = np.unravel_index(np.argmax(beta), beta.shape)
    if alpha[ia] >= beta[ib]:
        worst, idx = float(alpha[ia]), ("A",) + tuple(int(i) for i in ia)
    else:
        worst, idx = float(beta[ib]), ("B",) + tuple(int(i) for i in ib)
    return NoSignallingReport(worst, worst <= tol, idx)


def estimate_budgets(behavior: Behavior, slack: float = 0.0) -> SignallingBudget:
    """Budgets equal to the observed marginal changes, plus a uniform slack."""
    if slack < 0:
        raise InvalidInput("slack must be nonnegative")
    alpha, beta = _pairwise_gaps(behavior.scenario, behavior)
    sc = behavior.scenario
    alpha = np.clip(alpha + slack, 0.0, 1.0) * (1 - np.eye(sc.mB))
    beta = np.clip(beta + slack, 0.0, 1.0) * (1 - np.eye(sc.mA))
    # enforce exact symmetry against rounding in the subtraction
    alpha = np.maximum(alpha, alpha.transpose(0, 1, 3, 2))
    beta = np.maximum(beta, beta.transpose(0, 1, 3, 2))
    return SignallingBudget(alpha, beta)


CHSH_COEFFS = np.array([[1.0, 1.0], [1.0, -1.0]])


def bell_value(behavior: Behavior, coefficients) -> float:
    """Full-correlation Bell expression ``sum_xy c[x,y] E_xy``."""
    c = np.asarray(coefficients, dtype=float)
    E = behavior.correlators()
    if c.shape != E.shape:
        raise InvalidInput(f"coefficient shape {c.shape} does not match settings {E.shape}")
    return float(np.sum(c * E))


@dataclass(frozen=True)
class CountsTable:
    """Raw event counts ``counts[x, y, a~, b~]``; the last outcome index is the no-click symbol."""

    scenario: Scenario
    counts: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.counts)
        sc = self.scenario
        if c.shape != (sc.mA, sc.mB, sc.nA + 1, sc.nB + 1):
            raise InvalidInput(f"counts shape {c.shape} does not match scenario with no-click outcomes")
        if np.any(c < 0) or not np.all(np.equal(np.mod(c, 1), 0)):
            raise InvalidInput("counts must be nonnegative integers")
        c = c.astype(np.int64)
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)


@dataclass(frozen=True)
class CountsEstimate:
    behavior: Behavior
    etaA: np.ndarray  # [a, x]
    etaB: np.ndarray  # [b, y]


def _local_efficiency(n_outcome: np.ndarray, n_none: np.ndarray) -> np.ndarray:
    """``n(a) / (n(a) + n(none))`` with NaN where the denominator is zero."""
    denom = n_outcome + n_none
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(denom > 0, n_outcome / np.where(denom > 0, denom, 1), np.nan)


def _average_over_columns(eta: np.ndarray, party: str) -> np.ndarray:
    """Average ``eta[setting, other_setting, outcome]`` over the other party's settings."""
    out = np.full((eta.shape[0], eta.shape[2]), np.nan)
    worst = 0.0
    for s in range(eta.shape[0]):
        for o in range(eta.shape[2]):
            col = eta[s, :, o]
            col = col[np.isfinite(col)]
            if col.size:
                out[s, o] = col.mean()
                worst = max(worst, float(col.max() - col.min()))
    if worst > EFFICIENCY_SPREAD_WARN:
        log.warning("%s efficiency estimates vary across the other party's settings by %.3g", party, worst)
    return out.T


def behavior_from_counts(table: CountsTable) -> CountsEstimate:
    """Post-selected frequencies plus per-outcome detection efficiencies."""
    sc = table.scenario
    c = table.counts.astype(float)
    clicks = c[:, :, : sc.nA, : sc.nB]
    totals = clicks.sum(axis=(2, 3))
    empty = np.argwhere(totals == 0)
    if empty.size:
        x, y = empty[0]
        raise EmptyCell(f"setting pair (x={x}, y={y}) has no joint click events")
    p = clicks / totals[:, :, None, None]

    # Alice: n_xy(a, .) summed over Bob's column including no-click
    nA_out = c[:, :, : sc.nA, :].sum(axis=3)           # [x, y, a]
    nA_none = c[:, :, sc.nA, :].sum(axis=2)            # [x, y]
    etaA_xy = _local_efficiency(nA_out, nA_none[:, :, None])
    nB_out = c[:, :, :, : sc.nB].sum(axis=2)           # [x, y, b]
    nB_none = c[:, :, :, sc.nB].sum(axis=2)            # [x, y]
    etaB_xy = _local_efficiency(nB_out, nB_none[:, :, None])

    etaA = _average_over_columns(etaA_xy, "Alice")                       # [a, x]
    etaB = _average_over_columns(etaB_xy.transpose(1, 0, 2), "Bob")      # [b, y]
    return CountsEstimate(Behavior(sc, p), etaA, etaB)
