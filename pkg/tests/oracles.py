"""Reference computations written directly against scipy/cvxpy, sharing no code with sigbell."""
from __future__ import annotations

import itertools

import cvxpy as cp
import numpy as np
from scipy.optimize import linprog


def local_vertices(mA=2, mB=2, nA=2, nB=2) -> np.ndarray:
    """Deterministic local behaviors ``a = f(x), b = g(y)`` as rows of flattened ``p[x, y, a, b]``."""
    rows = []
    for f in itertools.product(range(nA), repeat=mA):
        for g in itertools.product(range(nB), repeat=mB):
            p = np.zeros((mA, mB, nA, nB))
            for x in range(mA):
                for y in range(mB):
                    p[x, y, f[x], g[y]] = 1
            rows.append(p.ravel())
    return np.array(rows)


def local_visibility(p: np.ndarray) -> float:
    """Largest ``v <= 1`` with ``v p + (1 - v) u`` a mixture of local deterministic vertices."""
    mA, mB, nA, nB = p.shape
    V = local_vertices(mA, mB, nA, nB)
    u = np.full(p.size, 1 / (nA * nB))
    n = len(V)
    # variables [q_1..q_n, v]; v q-mixture equals v p + (1 - v) u
    A_eq = np.vstack([np.hstack([V.T, -(p.ravel() - u)[:, None]]), np.hstack([np.ones(n), 0])[None, :]])
    b_eq = np.concatenate([u, [1]])
    c = np.zeros(n + 1)
    c[-1] = -1
    res = linprog(c, A_eq=A_eq, b_eq=b_eq, bounds=[(0, None)] * n + [(None, 1)], method="highs")
    assert res.status == 0
    return float(res.x[-1])


def _responses(mA, nA):
    return list(itertools.product(range(nA), repeat=mA))


def lhs_member_reference(sigma: np.ndarray) -> float:
    """Largest ``t`` with ``sigma[x,a] = sum_l D(a|x,l) s_l`` and ``s_l >= t 1``; member iff ``t >= 0``."""
    mA, nA, d, _ = sigma.shape
    lams = _responses(mA, nA)
    s = [cp.Variable((d, d), hermitian=True) for _ in lams]
    t = cp.Variable()
    cons = [s_l - t * np.eye(d) >> 0 for s_l in s]
    for x in range(mA):
        for a in range(nA):
            cons.append(sum(s_l for s_l, lam in zip(s, lams) if lam[x] == a) == sigma[x, a])
    cp.Problem(cp.Maximize(t), cons).solve(solver=cp.SCS, eps=1e-9, max_iters=200000)
    return float(t.value)


def steering_robustness_reference(sigma: np.ndarray) -> float:
    """Standard steering robustness ``min sum tr s_l - 1`` with ``sum_l D s_l >= sigma[x,a]``."""
    mA, nA, d, _ = sigma.shape
    lams = _responses(mA, nA)
    s = [cp.Variable((d, d), hermitian=True) for _ in lams]
    cons = [s_l >> 0 for s_l in s]
    for x in range(mA):
        for a in range(nA):
            cons.append(sum(s_l for s_l, lam in zip(s, lams) if lam[x] == a) - sigma[x, a] >> 0)
    prob = cp.Problem(cp.Minimize(cp.real(sum(cp.trace(s_l) for s_l in s)) - 1), cons)
    prob.solve(solver=cp.SCS, eps=1e-9, max_iters=200000)
    return float(prob.value)


def lhs_assemblage(rng, mA: int, nA: int, d: int, hidden: int = 6) -> np.ndarray:
    """``sigma[x,a] = sum_l q_l p(a|x,l) rho_l`` from an explicit random LHS model."""
    q = rng.dirichlet(np.ones(hidden))
    resp = rng.dirichlet(np.ones(nA), size=(hidden, mA))  # [l, x, a]
    sigma = np.zeros((mA, nA, d, d), dtype=complex)
    for l in range(hidden):
        G = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        rho = G @ G.conj().T
        rho /= np.trace(rho).real
        for x in range(mA):
            for a in range(nA):
                sigma[x, a] += q[l] * resp[l, x, a] * rho
    return sigma
