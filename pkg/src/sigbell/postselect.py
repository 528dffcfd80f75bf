"""Post-selection on joint detection events with outcome-dependent efficiencies.

An inefficient detector that registers outcome ``a`` of setting ``x`` with
probability ``eta[a, x]`` turns a POVM ``{A_a}`` into ``{eta_a A_a}`` plus a
no-click element.  Keeping only joint clicks renormalizes every ``(x, y)``
cell by its own click probability ``N_xy``, which differs between cells when
the efficiencies depend on the outcome.  That cell-dependence is what shows
up as apparent signalling.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import qlinalg as ql
from .errors import AllNoClick, InvalidInput, SigbellError
from .scenario import CHSH, CHSH_COEFFS, Behavior, Scenario, SignallingBudget, bell_value, estimate_budgets
from .slhv import visibility
from .solver import DEFAULT_SETTINGS, SolverSettings

NO_CLICK_FLOOR = 1e-12
QUANTUM = "quantum"
LOCAL = "local"
_RATIO = {QUANTUM: math.sqrt(2.0), LOCAL: 2.0}


@dataclass(frozen=True)
class DetectorModel:
    etaA: np.ndarray  # [a, x]
    etaB: np.ndarray  # [b, y]

    def __post_init__(self):
        for name in ("etaA", "etaB"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.ndim != 2 or not np.all(np.isfinite(arr)) or arr.min() < 0 or arr.max() > 1:
                raise InvalidInput(f"{name} must be a 2-d table with entries in [0, 1]")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def outcome_only(cls, eta0: float, eta1: float, scenario: Scenario = CHSH) -> "DetectorModel":
        """Efficiency depends only on the outcome: the same for both parties and all settings."""
        if scenario.nA != 2 or scenario.nB != 2:
            raise InvalidInput("outcome-only efficiencies need two outcomes per party")
        row = np.array([eta0, eta1], dtype=float)[:, None]
        return cls(np.repeat(row, scenario.mA, axis=1), np.repeat(row, scenario.mB, axis=1))

    @classmethod
    def perfect(cls, scenario: Scenario) -> "DetectorModel":
        return cls(np.ones((scenario.nA, scenario.mA)), np.ones((scenario.nB, scenario.mB)))


@dataclass(frozen=True)
class PostselectResult:
    behavior: Behavior
    normalization: np.ndarray = field(repr=False)  # [x, y]
    budgets: SignallingBudget = field(repr=False)
    extended: np.ndarray = field(repr=False)       # [x, y, a~, b~], last index is no-click


def inefficient_povms(povms, eta) -> np.ndarray:
    """``povms[x][a]`` and ``eta[a][x]`` to ``out[x][a~]`` with the no-click element last."""
    M = np.asarray(povms, dtype=complex)
    eta = np.asarray(eta, dtype=float)
    m, n, d, _ = M.shape
    if eta.shape != (n, m):
        raise InvalidInput(f"efficiency table must have shape {(n, m)}, got {eta.shape}")
    if eta.min() < 0 or eta.max() > 1:
        raise InvalidInput("efficiencies must lie in [0, 1]")
    ql.validate_povms(M)
    out = np.empty((m, n + 1, d, d), dtype=complex)
    out[:, :n] = eta.T[:, :, None, None] * M
    out[:, n] = np.eye(d) - out[:, :n].sum(axis=1)
    return out


def _postselect_table(ext: np.ndarray, scenario: Scenario) -> PostselectResult:
    clicks = ext[:, :, :-1, :-1]
    N = clicks.sum(axis=(2, 3))
    if N.min() <= NO_CLICK_FLOOR:
        x, y = np.unravel_index(np.argmin(N), N.shape)
        raise AllNoClick(f"no joint detections in cell x={x}, y={y} (N={N.min():.3g})")
    beh = Behavior(scenario, clicks / N[:, :, None, None])
    return PostselectResult(behavior=beh, normalization=N, budgets=estimate_budgets(beh, 0.0), extended=ext)


def postselected_behavior(state, povmsA, povmsB, detector: DetectorModel) -> PostselectResult:
    A = inefficient_povms(povmsA, detector.etaA)
    B = inefficient_povms(povmsB, detector.etaB)
    ext = ql.born_table(np.asarray(state, dtype=complex), A, B)
    m_a, n_a = A.shape[0], A.shape[1] - 1
    m_b, n_b = B.shape[0], B.shape[1] - 1
    return _postselect_table(ext, Scenario(m_a, m_b, n_a, n_b))


def postselect_behavior(behavior: Behavior, detector: DetectorModel) -> PostselectResult:
    """Apply local outcome-dependent detection directly to a behavior.

    A click on outcome ``a`` of setting ``x`` happens with probability
    ``etaA[a, x]`` independently of everything else, so
    ``p(a, b, click | x, y) = etaA[a, x] etaB[b, y] p(a, b | x, y)``.
    """
    sc = behavior.scenario
    eA, eB = detector.etaA, detector.etaB
    if eA.shape != (sc.nA, sc.mA) or eB.shape != (sc.nB, sc.mB):
        raise InvalidInput("detector shape does not match the behavior's scenario")
    clicks = np.einsum("ax,by,xyab->xyab", eA, eB, behavior.p)
    ext = np.zeros((sc.mA, sc.mB, sc.nA + 1, sc.nB + 1))
    ext[:, :, :-1, :-1] = clicks
    ext[:, :, -1, :-1] = np.einsum("ax,by,xyab->xyb", 1 - eA, eB, behavior.p)
    ext[:, :, :-1, -1] = np.einsum("ax,by,xyab->xya", eA, 1 - eB, behavior.p)
    ext[:, :, -1, -1] = np.einsum("ax,by,xyab->xy", 1 - eA, 1 - eB, behavior.p)
    return _postselect_table(ext, sc)


# ------------------------------------------------------- outcome-only CHSH


def tsirelson_strategy():
    """Maximally entangled two-qubit state with the standard CHSH measurements."""
    A, B = ql.chsh_measurements()
    return ql.max_entangled(2), A, B


def simulate(eta0: float, eta1: float, strategy: str = QUANTUM) -> PostselectResult:
    det = DetectorModel.outcome_only(eta0, eta1)
    if strategy == QUANTUM:
        rho, A, B = tsirelson_strategy()
        return postselected_behavior(rho, A, B, det)
    if strategy == LOCAL:
        return postselect_behavior(ql.standard_behavior("local_corr"), det)
    raise InvalidInput(f"unknown strategy {strategy!r}")


def normalization(eta0: float, eta1: float, strategy: str = QUANTUM) -> np.ndarray:
    """Joint click probability ``N[x, y]`` for the outcome-only model."""
    r = _ratio(strategy)
    s, dl = eta0 + eta1, eta0 - eta1
    sign = np.array([[1.0, 1.0], [1.0, -1.0]])
    return 0.25 * (s * s + sign * dl * dl / r)


def chsh_postselected(eta0: float, eta1: float) -> float:
    e0, e1 = float(eta0), float(eta1)
    r2 = math.sqrt(2.0)
    num = e0**4 + 16 * r2 * e1 * e0**3 - 2 * e1**2 * e0**2 + 16 * r2 * e1**3 * e0 + e1**4
    den = e0**4 + 12 * e1 * e0**3 + 6 * e1**2 * e0**2 + 12 * e1**3 * e0 + e1**4
    if den == 0:
        raise AllNoClick("both efficiencies vanish")
    return 2 * num / den


def alpha_postselected(eta0: float, eta1: float, variant: str = QUANTUM) -> float:
    """The only nonzero budget entry, ``alpha[a][1][0][1]`` (equal for both outcomes)."""
    r = _ratio(variant)
    s, dl = eta0 + eta1, eta0 - eta1
    return abs(eta1 * ((s + dl / r) / (s * s - dl * dl / r) - (s - dl / r) / (s * s + dl * dl / r)))


def _ratio(strategy: str) -> float:
    try:
        return _RATIO[strategy]
    except KeyError:
        raise InvalidInput(f"unknown strategy {strategy!r}") from None


# -------------------------------------------------------------- grid scan

SCAN_FIELDS = ("eta0", "eta1", "chsh", "visibility", "max_signalling", "status")


@dataclass(frozen=True)
class GridSpec:
    n: int = 21
    lo: float = 0.5
    hi: float = 1.0

    def __post_init__(self):
        if self.n < 1 or not (0 < self.lo <= self.hi <= 1):
            raise InvalidInput("grid needs n >= 1 and 0 < lo <= hi <= 1")

    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n)


def _scan_point(args):
    eta0, eta1, strategy, budget_mode, settings = args
    row = {"eta0": float(eta0), "eta1": float(eta1), "chsh": float("nan"),
           "visibility": float("nan"), "max_signalling": float("nan"), "status": "ok"}
    try:
        res = simulate(eta0, eta1, strategy)
        row["chsh"] = bell_value(res.behavior, CHSH_COEFFS)
        row["max_signalling"] = float(max(res.budgets.alpha.max(), res.budgets.beta.max()))
        if budget_mode == "data":
            budget = res.budgets
        elif budget_mode == "zero":
            budget = SignallingBudget.zero(CHSH)
        else:
            budget = budget_mode
        row["visibility"] = visibility(res.behavior, budget, settings).v
    except SigbellError as exc:
        row["status"] = f"{type(exc).__name__}: {exc}".replace("\n", " ")
    return row


def scan_grid(strategy: str = QUANTUM, grid: GridSpec = GridSpec(), budget_mode="data",
              settings: SolverSettings = DEFAULT_SETTINGS, jobs: int = 1) -> list[dict]:
    """Visibility and CHSH value at every ``(eta0, eta1)`` grid point, sorted by ``(eta0, eta1)``.

    ``budget_mode`` is ``"data"`` (budgets estimated from each post-selected
    behavior), ``"zero"`` or a fixed :class:`SignallingBudget`.
    """
    _ratio(strategy)
    if isinstance(budget_mode, str) and budget_mode not in ("data", "zero"):
        raise InvalidInput(f"unknown budget mode {budget_mode!r}")
    vals = grid.values()
    tasks = [(e0, e1, strategy, budget_mode, settings) for e0 in vals for e1 in vals]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_scan_point, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        rows = [_scan_point(t) for t in tasks]
    return sorted(rows, key=lambda r: (r["eta0"], r["eta1"]))


def format_float(x: float) -> str:
    return format(float(x), ".12g")


def scan_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SCAN_FIELDS)
    for r in rows:
        w.writerow([format_float(r[k]) for k in SCAN_FIELDS[:-1]] + [r["status"]])
    return buf.getvalue()
