"""Signalling local hidden-state models with a guessing-probability budget.

A hidden variable ``lambda`` fixes Alice's output for every setting and
prepares a hidden state for Bob that may depend on Alice's setting.  The
amount of that dependence is limited by asking that Bob could guess ``x``
from the hidden states with average success at most ``gamma``.  Using the
dual form of the guessing probability, ``Z_lambda >= sigma~_{lambda,x} / mA``
with ``sum tr Z_lambda <= gamma``, membership becomes one SDP.
"""
from __future__ import annotations

import itertools
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from . import qlinalg as ql
from .errors import InvalidArgs, InvalidGamma, SolverFailure, TooLarge
from .guessing import gamma_from_assemblage
from .qlinalg import Assemblage
from .solver import DEFAULT_SETTINGS, ConicProblem, SolverReport, SolverSettings, total, trace

RESPONSE_CAP = 2**16
FEASIBILITY_TOL = 1e-7
ZERO_TOL = 1e-6
BISECTION_STEPS = 40
BISECTION_TOL = 1e-6


def enumerate_response_functions(mA: int, nA: int, cap: int = RESPONSE_CAP) -> np.ndarray:
    """All maps ``x -> a`` as rows ``lam[x]``, lexicographic with the last setting fastest."""
    if mA < 1 or nA < 1:
        raise InvalidArgs("settings and outcomes must be positive")
    count = nA**mA
    if count > cap:
        raise TooLarge(count, cap, "response functions")
    return np.array(list(itertools.product(range(nA), repeat=mA)), dtype=int).reshape(count, mA)


def check_gamma(gamma: float, mA: int) -> float:
    if not np.isfinite(gamma) or gamma < 1.0 / mA - 1e-9 or gamma > 1 + 1e-9:
        raise InvalidGamma(f"gamma must lie in [1/{mA}, 1], got {gamma}")
    return float(min(max(gamma, 1.0 / mA), 1.0))


@dataclass(frozen=True)
class SlhsCertificate:
    feasible: bool
    gamma: float
    gammaMin: float               # smallest budget admitting a model
    hiddenStates: np.ndarray = field(repr=False)  # [lambda, x, d, d]
    zOps: np.ndarray = field(repr=False)          # [lambda, d, d]
    pLambda: np.ndarray = field(repr=False)
    responses: np.ndarray = field(repr=False)     # [lambda, x]
    witness: np.ndarray = field(repr=False)       # F[x, a, d, d], sum tr(F sigma') <= gamma on SLHS_gamma
    witnessValue: float
    report: SolverReport = field(repr=False, compare=False)

    def reconstruct(self) -> np.ndarray:
        """``sum_lambda D(a|x, lambda) sigma~_{lambda,x}`` as ``[x, a, d, d]``."""
        lam_count, mA = self.responses.shape
        nA = self.witness.shape[1]
        d = self.zOps.shape[1]
        out = np.zeros((mA, nA, d, d), dtype=complex)
        for lam in range(lam_count):
            for x in range(mA):
                out[x, self.responses[lam, x]] += self.hiddenStates[lam, x]
        return out

    def decomposition(self) -> "Decomposition":
        """Split into an LHS part and a signalling part with weight ``t = mA sum tr Z - 1``."""
        lam_count, mA = self.responses.shape
        nA, d = self.witness.shape[1], self.zOps.shape[1]
        t = float(mA * sum(np.trace(Z).real for Z in self.zOps) - 1)
        lhs = np.zeros((mA, nA, d, d), dtype=complex)
        tau = np.zeros_like(lhs)
        for lam in range(lam_count):
            for x in range(mA):
                a = self.responses[lam, x]
                lhs[x, a] += mA * self.zOps[lam] / (1 + t)
                tau[x, a] += mA * self.zOps[lam] - self.hiddenStates[lam, x]
        if t > 1e-12:
            tau /= t
        else:
            tau = lhs.copy()
        return Decomposition(t=t, lhs=lhs, tau=tau)


@dataclass(frozen=True)
class Decomposition:
    t: float
    lhs: np.ndarray = field(repr=False)  # [x, a, d, d]
    tau: np.ndarray = field(repr=False)

    def recombine(self) -> np.ndarray:
        return (1 + self.t) * self.lhs - self.t * self.tau


@dataclass(frozen=True)
class RobustnessResult:
    value: float
    gamma: float
    certificate: np.ndarray = field(repr=False)       # optimal SLHS_gamma assemblage [x, a, d, d]
    noiseAssemblage: np.ndarray | str = field(repr=False)
    report: SolverReport = field(repr=False, compare=False)


class _Model:
    """Hidden-state variables shared by the three SLHS programs."""

    def __init__(self, prob: ConicProblem, mA: int, nA: int, d: int):
        self.prob = prob
        self.mA, self.nA, self.d = mA, nA, d
        self.responses = enumerate_response_functions(mA, nA)
        L = len(self.responses)
        self.p = prob.nonneg("p", L)
        self.Z = [prob.hermitian(f"Z{l}", d, psd=False) for l in range(L)]
        self.S = [[prob.hermitian(f"S{l}_{x}", d) for x in range(mA)] for l in range(L)]
        for l in range(L):
            for x in range(mA):
                prob.psd(f"dom{l}_{x}", self.Z[l] - self.S[l][x] / mA)
                prob.equal(f"weight{l}_{x}", trace(self.S[l][x]), self.p[l])
        self.tr_Z = total(trace(Z) for Z in self.Z)

    def assembled(self, x: int, a: int):
        terms = [self.S[l][x] for l in range(len(self.responses)) if self.responses[l, x] == a]
        if not terms:
            return np.zeros((self.d, self.d))
        return total(terms)

    def values(self, rep: SolverReport):
        L = len(self.responses)
        S = np.array([[ql.hermitize(rep.primal[f"S{l}_{x}"]) for x in range(self.mA)] for l in range(L)])
        Z = np.array([ql.hermitize(rep.primal[f"Z{l}"]) for l in range(L)])
        return S, Z, np.clip(rep.primal["p"], 0, None)


def _sigma(assemblage: Assemblage) -> np.ndarray:
    return np.asarray(assemblage.sigma)


def slhs_membership(assemblage: Assemblage, gamma: float,
                    settings: SolverSettings = DEFAULT_SETTINGS) -> SlhsCertificate:
    """Decide whether the assemblage has an SLHS model with guessing budget ``gamma``.

    Solves for the smallest budget ``gamma_min`` admitting a model; the
    assemblage is a member iff ``gamma_min <= gamma``.  The equality duals
    ``F[x, a]`` give a linear witness with ``sum tr(F sigma') <= gamma_min(sigma')``
    for every assemblage, hence ``<= gamma`` on the whole SLHS_gamma set.
    """
    sigma = _sigma(assemblage)
    mA, nA, d = assemblage.mA, assemblage.nA, assemblage.dim
    gamma = check_gamma(gamma, mA)
    prob = ConicProblem()
    m = _Model(prob, mA, nA, d)
    for x in range(mA):
        for a in range(nA):
            prob.equal(f"fit{x}_{a}", m.assembled(x, a), sigma[x, a])
    prob.minimize(m.tr_Z)
    rep = prob.solve(settings)
    rep.require_optimal("SLHS membership SDP")
    S, Z, p = m.values(rep)
    gmin = float(rep.objective)
    F = np.array([[_gradient(rep.dual[f"fit{x}_{a}"]) for a in range(nA)] for x in range(mA)])
    wval = float(sum(np.trace(F[x, a] @ sigma[x, a]).real for x in range(mA) for a in range(nA)))
    return SlhsCertificate(
        feasible=gmin <= gamma + FEASIBILITY_TOL, gamma=gamma, gammaMin=gmin,
        hiddenStates=S, zOps=Z, pLambda=p, responses=m.responses,
        witness=F, witnessValue=wval, report=rep,
    )


def _gradient(dual) -> np.ndarray:
    # cvxpy's equality dual y enters the Lagrangian as + <y, lhs - rhs>; the
    # derivative of the optimal value with respect to the right-hand side is -y,
    # and the inner product pairs with the conjugate.
    return ql.hermitize(-np.conj(np.asarray(dual)).T)


def slhs_robustness(assemblage: Assemblage, gamma: float,
                    settings: SolverSettings = DEFAULT_SETTINGS) -> RobustnessResult:
    """Smallest ``r`` with ``(sigma + r tau) / (1 + r)`` in SLHS_gamma for some assemblage ``tau``."""
    sigma = _sigma(assemblage)
    mA, nA, d = assemblage.mA, assemblage.nA, assemblage.dim
    gamma = check_gamma(gamma, mA)
    prob = ConicProblem()
    m = _Model(prob, mA, nA, d)
    bar = [[m.assembled(x, a) for a in range(nA)] for x in range(mA)]
    scale = total(trace(bar[x][a]) for x in range(mA) for a in range(nA)) / mA
    for x in range(mA):
        for a in range(nA):
            prob.psd(f"dominate{x}_{a}", bar[x][a] - sigma[x, a])
    prob.less("budget", m.tr_Z, gamma * scale)
    prob.minimize(scale - 1)
    rep = prob.solve(settings)
    rep.require_optimal("SLHS robustness SDP")
    S, _, _ = m.values(rep)
    r = max(0.0, float(rep.objective))
    member = _assemble(S, m.responses, nA) / (1 + r)
    if r > 1e-12:
        tau = ((1 + r) * member - sigma) / r
    else:
        tau = sigma.copy()
    return RobustnessResult(value=r, gamma=gamma, certificate=member, noiseAssemblage=tau, report=rep)


def slhs_white_noise_robustness(assemblage: Assemblage, gamma: float,
                                settings: SolverSettings = DEFAULT_SETTINGS) -> RobustnessResult:
    """Smallest ``eps >= 0`` with ``(sigma + eps * 1/(d nA)) / (1 + eps)`` in SLHS_gamma."""
    sigma = _sigma(assemblage)
    mA, nA, d = assemblage.mA, assemblage.nA, assemblage.dim
    gamma = check_gamma(gamma, mA)
    prob = ConicProblem()
    m = _Model(prob, mA, nA, d)
    eps = prob.nonneg("eps")
    noise = np.eye(d) / (d * nA)
    for x in range(mA):
        for a in range(nA):
            prob.equal(f"mix{x}_{a}", m.assembled(x, a), sigma[x, a] + eps * noise)
    prob.less("budget", m.tr_Z, gamma * (1 + eps))
    prob.minimize(eps)
    rep = prob.solve(settings)
    rep.require_optimal("SLHS white-noise SDP")
    S, _, _ = m.values(rep)
    e = max(0.0, float(rep.primal["eps"]))
    return RobustnessResult(value=e, gamma=gamma, certificate=_assemble(S, m.responses, nA) / (1 + e),
                            noiseAssemblage="white", report=rep)


def _assemble(S, responses, nA) -> np.ndarray:
    L, mA = responses.shape
    d = S.shape[-1]
    out = np.zeros((mA, nA, d, d), dtype=complex)
    for l in range(L):
        for x in range(mA):
            out[x, responses[l, x]] += S[l, x]
    return out


def critical_visibility(family: Callable[[float], Assemblage], gamma: float, measure: str = "whitenoise",
                        settings: SolverSettings = DEFAULT_SETTINGS, steps: int = BISECTION_STEPS,
                        tol: float = BISECTION_TOL, threshold: float = ZERO_TOL) -> float:
    """Bisection on ``[0, 1]`` for the visibility where the robustness first becomes positive.

    ``family(v)`` must be robust (positive value) at ``v = 1`` and a member at ``v = 0``.
    """
    fn = {"whitenoise": slhs_white_noise_robustness, "robustness": slhs_robustness}[measure]
    lo, hi = 0.0, 1.0
    for _ in range(steps):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if fn(family(mid), gamma, settings).value > threshold:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class Table1Report:
    Pg: float
    SR: float
    SR_whitenoise: float
    gamma: float
    status: str = "optimal"


def table1_pipeline(assemblage: Assemblage, settings: SolverSettings = DEFAULT_SETTINGS) -> Table1Report:
    """Guessing probability of the data, then both robustnesses at that budget."""
    pg = gamma_from_assemblage(assemblage, settings)
    gamma = check_gamma(pg, assemblage.mA)
    try:
        sr = slhs_robustness(assemblage, gamma, settings).value
        srw = slhs_white_noise_robustness(assemblage, gamma, settings).value
    except SolverFailure as exc:
        return Table1Report(Pg=pg, SR=float("nan"), SR_whitenoise=float("nan"), gamma=gamma,
                            status=f"solver failure: {exc}")
    return Table1Report(Pg=pg, SR=sr, SR_whitenoise=srw, gamma=gamma)
