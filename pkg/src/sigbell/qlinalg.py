"""Small dense Hermitian linear algebra and the quantum models used across the package.

Operators are plain complex ``numpy`` arrays.  Measurement families are indexed
``[setting][outcome]`` (shape ``(m, n, d, d)``) and so are assemblages.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, InvalidInput, InvalidPOVM, NotPSD
from .scenario import CHSH, Behavior

HERM_TOL = 1e-12
PSD_TOL = 1e-9
MAX_DIM = 64

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)


def as_operator(M, dim: int | None = None) -> np.ndarray:
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"operator must be square, got shape {M.shape}")
    if dim is not None and M.shape[0] != dim:
        raise DimensionMismatch(f"expected dimension {dim}, got {M.shape[0]}")
    if M.shape[0] > MAX_DIM:
        raise DimensionMismatch(f"dimension {M.shape[0]} exceeds the supported maximum {MAX_DIM}")
    return M


def is_hermitian(M, tol: float = HERM_TOL) -> bool:
    M = np.asarray(M)
    return bool(np.max(np.abs(M - M.conj().T), initial=0.0) <= tol)


def hermitize(M) -> np.ndarray:
    M = np.asarray(M, dtype=complex)
    return (M + M.conj().T) / 2


def eigs_hermitian(M) -> tuple[np.ndarray, np.ndarray]:
    return np.linalg.eigh(hermitize(M))


def is_psd(M, tol: float = PSD_TOL) -> bool:
    return bool(np.linalg.eigvalsh(hermitize(M))[0] >= -tol)


def sqrt_psd(M) -> np.ndarray:
    w, V = eigs_hermitian(M)
    if w[0] < -PSD_TOL:
        raise NotPSD(f"smallest eigenvalue {w[0]:.3g} is negative")
    w = np.clip(w, 0.0, None)
    return (V * np.sqrt(w)) @ V.conj().T


def trace_norm(M) -> float:
    return float(np.sum(np.abs(np.linalg.eigvalsh(hermitize(M)))))


def kron(*ops) -> np.ndarray:
    out = np.array([[1.0 + 0j]])
    for op in ops:
        out = np.kron(out, op)
    return out


def partial_trace_A(M, dA: int, dB: int) -> np.ndarray:
    """Trace out the first tensor factor of an operator on ``C^dA (x) C^dB``."""
    M = np.asarray(M)
    if M.shape != (dA * dB, dA * dB):
        raise DimensionMismatch(f"operator of shape {M.shape} is not on {dA}x{dB}")
    return np.einsum("ijik->jk", M.reshape(dA, dB, dA, dB))


def ket(d: int, i: int) -> np.ndarray:
    v = np.zeros(d, dtype=complex)
    v[i] = 1
    return v


def proj(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())


def computational_basis(d: int) -> np.ndarray:
    return np.eye(d, dtype=complex)


def fourier_basis(d: int) -> np.ndarray:
    """Row ``a`` is ``|f_a> = sum_j w^{aj} |j> / sqrt(d)``, ``w = exp(2 pi i / d)``."""
    j = np.arange(d)
    return np.exp(2j * np.pi * np.outer(j, j) / d) / np.sqrt(d)


def basis_measurement(basis) -> np.ndarray:
    """Rank-one projective measurement from the rows of ``basis``; shape ``(n, d, d)``."""
    return np.array([proj(v) for v in basis])


def pauli_measurements() -> np.ndarray:
    """Projectors of X, Y, Z in that setting order; shape ``(3, 2, 2, 2)``, outcome 0 = +1."""
    return np.array([[(I2 + P) / 2, (I2 - P) / 2] for P in (X, Y, Z)])


def chsh_measurements() -> tuple[np.ndarray, np.ndarray]:
    """Tsirelson-optimal projectors: A0 = Z, A1 = X, B0/B1 = (Z +/- X)/sqrt 2."""
    obsA = [Z, X]
    obsB = [(Z + X) / np.sqrt(2), (Z - X) / np.sqrt(2)]
    toproj = lambda O: [(I2 + O) / 2, (I2 - O) / 2]
    return np.array([toproj(O) for O in obsA]), np.array([toproj(O) for O in obsB])


def max_entangled(d: int) -> np.ndarray:
    """Projector onto ``sum_i |ii> / sqrt(d)``."""
    v = np.zeros(d * d, dtype=complex)
    v[:: d + 1] = 1 / np.sqrt(d)
    return proj(v)


def isotropic_state(d: int, v: float) -> np.ndarray:
    if not 0 <= v <= 1:
        raise InvalidInput("visibility must lie in [0, 1]")
    return v * max_entangled(d) + (1 - v) * np.eye(d * d) / d**2


def validate_state(rho, dim: int | None = None) -> np.ndarray:
    rho = as_operator(rho, dim)
    if not is_hermitian(rho, 1e-9) or not is_psd(rho):
        raise InvalidInput("state must be Hermitian PSD")
    if abs(np.trace(rho).real - 1) > 1e-9:
        raise InvalidInput("state must have unit trace")
    return rho


def validate_povms(povms, dim: int | None = None) -> np.ndarray:
    """Check ``povms[x][a]`` are PSD and each setting sums to the identity."""
    P = np.asarray(povms, dtype=complex)
    if P.ndim != 4 or P.shape[2] != P.shape[3]:
        raise InvalidPOVM("measurements must have shape (settings, outcomes, d, d)")
    if dim is not None and P.shape[2] != dim:
        raise DimensionMismatch(f"measurement dimension {P.shape[2]} does not match {dim}")
    d = P.shape[2]
    for x in range(P.shape[0]):
        for a in range(P.shape[1]):
            if not is_psd(P[x, a]):
                raise InvalidPOVM(f"element ({x}, {a}) is not PSD")
        if np.max(np.abs(P[x].sum(axis=0) - np.eye(d))) > 1e-9:
            raise InvalidPOVM(f"setting {x} does not sum to the identity")
    return P


@dataclass(frozen=True)
class Assemblage:
    """Subnormalized conditional states ``sigma[x, a]`` on Bob's space."""

    sigma: np.ndarray = field(repr=False)

    def __post_init__(self):
        s = np.array(self.sigma, dtype=complex)
        if s.ndim != 4 or s.shape[2] != s.shape[3]:
            raise DimensionMismatch("assemblage must have shape (mA, nA, d, d)")
        if s.shape[2] > MAX_DIM:
            raise DimensionMismatch(f"dimension exceeds {MAX_DIM}")
        s = (s + s.conj().swapaxes(-1, -2)) / 2
        for x in range(s.shape[0]):
            for a in range(s.shape[1]):
                if np.linalg.eigvalsh(s[x, a])[0] < -PSD_TOL:
                    raise InvalidInput(f"sigma[{x}][{a}] is not PSD")
            tr = np.trace(s[x].sum(axis=0)).real
            if abs(tr - 1) > 1e-9:
                raise InvalidInput(f"setting {x} has total trace {tr}, expected 1")
        s.setflags(write=False)
        object.__setattr__(self, "sigma", s)

    @property
    def mA(self) -> int:
        return self.sigma.shape[0]

    @property
    def nA(self) -> int:
        return self.sigma.shape[1]

    @property
    def dim(self) -> int:
        return self.sigma.shape[2]

    def reduced_states(self) -> np.ndarray:
        """``mu[x] = sum_a sigma[x, a]``."""
        return self.sigma.sum(axis=1)

    def mix(self, other: "Assemblage", weight: float) -> "Assemblage":
        return Assemblage((1 - weight) * self.sigma + weight * other.sigma)


def assemblage_from(state, measurements, dA: int | None = None) -> Assemblage:
    """``sigma[x, a] = tr_A[(M[x, a] (x) 1) rho]``."""
    M = np.asarray(measurements, dtype=complex)
    if M.ndim != 4:
        raise InvalidPOVM("measurements must have shape (settings, outcomes, d, d)")
    dA = M.shape[2] if dA is None else dA
    rho = as_operator(state)
    if rho.shape[0] % dA:
        raise DimensionMismatch(f"state dimension {rho.shape[0]} is not a multiple of {dA}")
    dB = rho.shape[0] // dA
    validate_state(rho)
    validate_povms(M, dA)
    eye = np.eye(dB)
    sigma = np.array([[partial_trace_A(np.kron(Mxa, eye) @ rho, dA, dB) for Mxa in Mx] for Mx in M])
    return Assemblage(sigma)


def behavior_from(state, povmsA, povmsB) -> Behavior:
    """``p[x, y, a, b] = tr[(A[x,a] (x) B[y,b]) rho]``."""
    A = np.asarray(povmsA, dtype=complex)
    B = np.asarray(povmsB, dtype=complex)
    dA, dB = A.shape[2], B.shape[2]
    rho = as_operator(state, dA * dB)
    return Behavior.from_array(born_table(rho, A, B))


def born_table(rho, A, B) -> np.ndarray:
    """Raw Born-rule table for measurement families ``A[x, a]``, ``B[y, b]``."""
    dA, dB = A.shape[2], B.shape[2]
    r = np.asarray(rho).reshape(dA, dB, dA, dB)
    # rho[(k,l),(i,j)] = r[k,l,i,j];  tr[(A (x) B) rho] = sum A[i,k] B[j,l] r[k,l,i,j]
    return np.real(np.einsum("xaik,ybjl,klij->xyab", A, B, r))


def standard_behavior(kind: str) -> Behavior:
    """Closed-form CHSH-scenario behaviors.

    ``local_corr`` is the isotropic CHSH behavior with correlator 1/2: it sits
    exactly on the CHSH facet with value 2.
    """
    x, y, a, b = np.meshgrid(*[np.arange(2)] * 4, indexing="ij")
    sign = (-1.0) ** (a + b + x * y)
    if kind == "ideal_quantum_chsh":
        p = 0.25 * (1 + sign / np.sqrt(2))
    elif kind == "pr_box":
        p = 0.25 * (1 + sign)
    elif kind == "local_corr":
        p = 0.25 * (1 + sign / 2)
    elif kind == "uniform":
        p = np.full(CHSH.shape, 0.25)
    else:
        raise InvalidInput(f"unknown behavior kind {kind!r}")
    return Behavior(CHSH, p)


def conjugate_assemblage(assemblage: Assemblage, reduced) -> Assemblage:
    """Rebuild ``sigma[x, a] = sqrt(mu_x) s_hat[x, a] sqrt(mu_x)`` with ``s_hat`` the
    assemblage normalized to sum to the identity per setting.

    Used to give a no-signalling assemblage prescribed, setting-dependent reduced states.
    """
    s = assemblage.sigma
    mu = np.asarray(reduced, dtype=complex)
    if mu.shape != (s.shape[0], s.shape[2], s.shape[2]):
        raise DimensionMismatch("need one reduced state per setting")
    out = np.empty_like(s)
    for x in range(s.shape[0]):
        red = s[x].sum(axis=0)
        inv_sqrt = np.linalg.pinv(sqrt_psd(red))
        root = sqrt_psd(mu[x])
        for a in range(s.shape[1]):
            s_hat = inv_sqrt @ s[x, a] @ inv_sqrt
            out[x, a] = root @ s_hat @ root
    return Assemblage(out)


def qutrit_reduced_states(k: float) -> np.ndarray:
    if not 0 <= k <= 1:
        raise InvalidInput("k must lie in [0, 1]")
    mix = np.eye(3) / 3
    plus12 = (ket(3, 1) + ket(3, 2)) / np.sqrt(2)
    return np.array([k * proj(ket(3, 0)) + (1 - k) * mix, k * proj(plus12) + (1 - k) * mix])


def qutrit_measurements() -> np.ndarray:
    """Alice's computational and Fourier basis measurements on a qutrit."""
    return np.array([basis_measurement(computational_basis(3)), basis_measurement(fourier_basis(3))])


def qutrit_signalling_assemblage(v: float, k: float) -> Assemblage:
    """Isotropic two-qutrit steering with reduced states forced to ``mu_x(k)``.

    The unconditioned prepared states ``v |phi><phi|^T + (1 - v) 1/3`` are those
    steered by Alice's computational/Fourier measurements on the isotropic
    state; conjugating by ``sqrt(mu_x)`` gives ``sum_a sigma[x, a] = mu_x``.
    """
    if not 0 <= v <= 1:
        raise InvalidInput("v must lie in [0, 1]")
    mu = qutrit_reduced_states(k)
    M = qutrit_measurements()
    sigma = np.empty((2, 3, 3, 3), dtype=complex)
    for x in range(2):
        root = sqrt_psd(mu[x])
        for a in range(3):
            s_hat = v * M[x, a].T + (1 - v) * np.eye(3) / 3
            sigma[x, a] = root @ s_hat @ root
    return Assemblage(sigma)


def random_state(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = d if rank is None else rank
    G = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    G = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    Q, R = np.linalg.qr(G)
    return Q * (np.diag(R) / np.abs(np.diag(R)))
