"""Linear steering witnesses, their signalling-adjusted bounds and Schmidt-number certification."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import qlinalg as ql
from .errors import DimensionMismatch, InvalidArgs, InvalidGamma
from .guessing import gamma_from_assemblage
from .qlinalg import Assemblage
from .solver import DEFAULT_SETTINGS, SolverSettings

TIGHT = "tight"
LINEAR = "linear"
CERTIFY_TOL = 1e-9


@dataclass(frozen=True)
class SteeringWitness:
    operators: np.ndarray = field(repr=False)  # W[x, a, d, d]
    lhsBound: float
    schmidtBounds: tuple[float, ...] | None = None  # entry n-1 bounds Schmidt number <= n

    def __post_init__(self):
        W = np.array(self.operators, dtype=complex)
        if W.ndim != 4 or W.shape[2] != W.shape[3]:
            raise DimensionMismatch("witness operators must have shape (settings, outcomes, d, d)")
        for x in range(W.shape[0]):
            for a in range(W.shape[1]):
                if not ql.is_hermitian(W[x, a], 1e-9) or not ql.is_psd(W[x, a]):
                    raise InvalidArgs(f"witness operator ({x}, {a}) is not PSD")
        W.setflags(write=False)
        object.__setattr__(self, "operators", W)
        if self.schmidtBounds is not None:
            object.__setattr__(self, "schmidtBounds", tuple(float(b) for b in self.schmidtBounds))

    @property
    def dim(self) -> int:
        return self.operators.shape[2]


def evaluate_witness(assemblage: Assemblage, witness: SteeringWitness) -> float:
    sigma = np.asarray(assemblage.sigma)
    W = witness.operators
    if sigma.shape != W.shape:
        raise DimensionMismatch(f"assemblage shape {sigma.shape[:3]} does not match witness {W.shape[:3]}")
    return float(np.real(np.einsum("xaij,xaji->", sigma, W)))


def adjusted_bound(lhsBound: float, mA: int, gamma: float, mode: str = TIGHT) -> float:
    """Witness bound valid for every SLHS model with guessing budget ``gamma``.

    ``linear`` multiplies by ``1 + mA gamma``; ``tight`` by ``1 + max(0, mA gamma - 1)``,
    which reduces to the plain bound at the no-signalling value ``gamma = 1/mA``.
    """
    if mA < 1:
        raise InvalidArgs("mA must be positive")
    if not np.isfinite(gamma) or gamma < 1.0 / mA - 1e-12 or gamma > 1 + 1e-12:
        raise InvalidGamma(f"gamma must lie in [1/{mA}, 1], got {gamma}")
    if mode == LINEAR:
        return lhsBound * (1 + mA * gamma)
    if mode == TIGHT:
        return lhsBound * (1 + max(0.0, mA * gamma - 1))
    raise InvalidArgs(f"unknown adjustment mode {mode!r}")


def schmidt_bound(d: int, n: int) -> float:
    """``(1 + 1/sqrt d)(1 + (sqrt n - 1)/(sqrt n + 1))``; at ``n = d`` this is exactly 2."""
    if not (isinstance(d, (int, np.integer)) and isinstance(n, (int, np.integer))) or not 1 <= n <= d:
        raise InvalidArgs(f"need integers 1 <= n <= d, got d={d}, n={n}")
    if n == d:
        return 2.0
    rn = math.sqrt(n)
    return (1 + 1 / math.sqrt(d)) * (1 + (rn - 1) / (rn + 1))


def mub_witness(d: int) -> SteeringWitness:
    """Transposed projectors of the computational (setting 0) and Fourier (setting 1) bases."""
    if d < 2:
        raise InvalidArgs("dimension must be at least 2")
    bases = [ql.computational_basis(d), ql.fourier_basis(d)]
    W = np.array([[ql.proj(v).T for v in B] for B in bases])
    return SteeringWitness(W, schmidt_bound(d, 1), tuple(schmidt_bound(d, n) for n in range(1, d + 1)))


@dataclass(frozen=True)
class CertificationReport:
    value: float
    gamma: float
    certifiedSN: int | None
    adjustedCertifiedSN: int | None
    bounds: tuple[float, ...]
    adjustedBounds: tuple[float, ...]


def _certified(value: float, bounds) -> int | None:
    # value above the Schmidt-number-n bound certifies Schmidt number >= n + 1
    best = None
    for n, b in enumerate(bounds, start=1):
        if value > b + CERTIFY_TOL:
            best = n + 1
    return best


def certification_report(assemblage: Assemblage, witness: SteeringWitness, mode: str = TIGHT,
                         gamma: float | None = None,
                         settings: SolverSettings = DEFAULT_SETTINGS) -> CertificationReport:
    if witness.schmidtBounds is None:
        raise InvalidArgs("witness carries no Schmidt-number bounds")
    value = evaluate_witness(assemblage, witness)
    if gamma is None:
        gamma = gamma_from_assemblage(assemblage, settings)
    mA = assemblage.mA
    gamma = min(max(gamma, 1.0 / mA), 1.0)
    bounds = witness.schmidtBounds
    adj = tuple(adjusted_bound(b, mA, gamma, mode) for b in bounds)
    return CertificationReport(
        value=value, gamma=float(gamma),
        certifiedSN=_certified(value, bounds[:-1]),
        adjustedCertifiedSN=_certified(value, adj[:-1]),
        bounds=bounds, adjustedBounds=adj,
    )
