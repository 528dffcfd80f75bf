"""Thin, uniform front-end to one LP backend (HiGHS) and one SDP backend (Clarabel).

Optimization code elsewhere in the package builds either a :class:`LinearProgram`
(matrix form) or a :class:`ConicProblem` (declared variables plus named
constraints) and never talks to scipy or cvxpy directly.  Complex Hermitian
PSD blocks are passed through cvxpy, which lowers them to the real symmetric
embedding of size ``2d`` before handing them to Clarabel.
"""
from __future__ import annotations

import json
import os
import warnings
from dataclasses import dataclass, field, replace
from typing import Any

import cvxpy as cp
import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .errors import SolverFailure

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NUMERICAL_FAILURE = "numerical_failure"

SETTINGS_ENV = "SIGBELL_SOLVER_SETTINGS"


@dataclass(frozen=True)
class SolverSettings:
    feas_tol: float = 1e-8
    gap_tol: float = 1e-8
    max_iter: int | None = None
    verbose: bool = False
    # reports above these are downgraded to numerical_failure
    accept_residual: float = 1e-6
    accept_gap: float = 1e-6

    @classmethod
    def from_env(cls) -> "SolverSettings":
        """Defaults, overridden by the JSON file named in ``$SIGBELL_SOLVER_SETTINGS`` if set."""
        path = os.environ.get(SETTINGS_ENV)
        if not path:
            return cls()
        with open(path) as fh:
            return cls(**json.load(fh))

    def with_overrides(self, **kwargs) -> "SolverSettings":
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})


DEFAULT_SETTINGS = SolverSettings()


@dataclass
class SolverReport:
    status: str
    primal: dict[str, np.ndarray] = field(default_factory=dict)
    dual: dict[str, np.ndarray] = field(default_factory=dict)
    objective: float = float("nan")
    gap: float = float("nan")
    residual: float = float("nan")
    iterations: int | None = None
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL

    def require_optimal(self, what: str = "problem") -> "SolverReport":
        if not self.ok:
            raise SolverFailure(
                f"{what}: solver status {self.status} (residual {self.residual:.3g}, gap {self.gap:.3g}) {self.message}",
                self,
            )
        return self


# --------------------------------------------------------------------------- LP


@dataclass
class LinearProgram:
    """``min/max c @ x`` s.t. ``A_ub @ x <= b_ub``, ``A_eq @ x == b_eq``, ``lb <= x <= ub``."""

    c: np.ndarray
    A_ub: Any = None
    b_ub: np.ndarray | None = None
    A_eq: Any = None
    b_eq: np.ndarray | None = None
    lb: np.ndarray | None = None
    ub: np.ndarray | None = None
    maximize: bool = False

    def __post_init__(self):
        n = len(self.c)
        self.c = np.asarray(self.c, dtype=float)
        if self.lb is None:
            self.lb = np.zeros(n)
        if self.ub is None:
            self.ub = np.full(n, np.inf)
        self.lb = np.asarray(self.lb, dtype=float)
        self.ub = np.asarray(self.ub, dtype=float)
        for A, b in ((self.A_ub, self.b_ub), (self.A_eq, self.b_eq)):
            if A is not None and (A.shape[1] != n or A.shape[0] != len(b)):
                raise ValueError("constraint matrix dimensions disagree with variables")


_LP_STATUS = {0: OPTIMAL, 1: NUMERICAL_FAILURE, 2: INFEASIBLE, 3: UNBOUNDED, 4: NUMERICAL_FAILURE}


def solve_lp(lp: LinearProgram, settings: SolverSettings = DEFAULT_SETTINGS, method: str = "highs") -> SolverReport:
    """Solve with HiGHS.  Duals follow the sensitivity convention of the *stated* sense:
    ``dual["eq"][i] = d objective / d b_eq[i]`` (same for ``ub``, ``lower``, ``upper``)."""
    sign = -1.0 if lp.maximize else 1.0
    bounds = np.column_stack([np.where(np.isinf(lp.lb), None, lp.lb), np.where(np.isinf(lp.ub), None, lp.ub)])
    options = {
        "primal_feasibility_tolerance": settings.feas_tol,
        "dual_feasibility_tolerance": settings.feas_tol,
        "disp": settings.verbose,
    }
    if method == "highs-ipm":
        options["ipm_optimality_tolerance"] = settings.gap_tol
    if settings.max_iter is not None:
        options["maxiter"] = settings.max_iter
    res = linprog(
        sign * lp.c,
        A_ub=lp.A_ub, b_ub=lp.b_ub, A_eq=lp.A_eq, b_eq=lp.b_eq,
        bounds=bounds, method=method, options=options,
    )
    status = _LP_STATUS.get(res.status, NUMERICAL_FAILURE)
    report = SolverReport(status=status, message=str(res.message), iterations=int(getattr(res, "nit", 0) or 0))
    if res.x is None:
        return report

    x = np.asarray(res.x)
    report.primal["x"] = x
    report.objective = float(lp.c @ x)
    duals = {}
    dual_obj = 0.0
    resid = [0.0]
    if lp.A_eq is not None:
        y = sign * np.asarray(res.eqlin.marginals)
        duals["eq"] = y
        dual_obj += float(lp.b_eq @ y)
        resid.append(float(np.max(np.abs(lp.A_eq @ x - lp.b_eq), initial=0.0)))
    if lp.A_ub is not None:
        y = sign * np.asarray(res.ineqlin.marginals)
        duals["ub"] = y
        dual_obj += float(lp.b_ub @ y)
        resid.append(float(np.max(lp.A_ub @ x - lp.b_ub, initial=0.0)))
    lo = sign * np.asarray(res.lower.marginals)
    hi = sign * np.asarray(res.upper.marginals)
    duals["lower"], duals["upper"] = lo, hi
    fin_lo, fin_hi = np.isfinite(lp.lb), np.isfinite(lp.ub)
    dual_obj += float(lp.lb[fin_lo] @ lo[fin_lo]) + float(lp.ub[fin_hi] @ hi[fin_hi])
    resid.append(float(np.max(np.concatenate([lp.lb - x, x - lp.ub]), initial=0.0)))
    report.dual = duals
    report.residual = max(resid)
    report.gap = abs(report.objective - dual_obj)
    if status == OPTIMAL and (report.residual > settings.accept_residual or report.gap > settings.accept_gap):
        report.status = NUMERICAL_FAILURE
        report.message += f" (residual {report.residual:.3g}, gap {report.gap:.3g})"
    return report


def trace(expr):
    """Real part of the trace; accepts numpy arrays or variable expressions."""
    if isinstance(expr, np.ndarray):
        return float(np.real(np.trace(expr)))
    return cp.real(cp.trace(expr))


def inner(A, B):
    """``Re tr(A B)`` for Hermitian arguments."""
    return cp.real(cp.trace(A @ B))


def total(exprs):
    exprs = list(exprs)
    out = exprs[0]
    for e in exprs[1:]:
        out = out + e
    return out


class ConicProblem:
    """A conic program with named variables and named constraints.

    Variables are nonnegative scalars/vectors, free scalars/vectors or
    Hermitian PSD blocks.  Constraints are affine equalities, affine
    inequalities (``lhs <= rhs``) and linear matrix inequalities
    (``expr >> 0``).  Every constraint's dual is returned in the report.
    """

    def __init__(self):
        self._vars: dict[str, cp.Variable] = {}
        self._cons: dict[str, cp.Constraint] = {}
        self._objective = None
        self._maximize = False
        self._dual_scale: dict[str, float] = {}

    # variables
    def nonneg(self, name: str, shape=()) -> cp.Variable:
        return self._add_var(name, cp.Variable(shape, nonneg=True, name=name))

    def free(self, name: str, shape=()) -> cp.Variable:
        return self._add_var(name, cp.Variable(shape, name=name))

    def hermitian(self, name: str, dim: int, psd: bool = True) -> cp.Variable:
        var = self._add_var(name, cp.Variable((dim, dim), hermitian=True, name=name))
        if psd:
            self.psd(f"{name}.psd", var)
        return var

    def _add_var(self, name, var):
        if name in self._vars:
            raise ValueError(f"duplicate variable {name}")
        self._vars[name] = var
        return var

    # constraints
    def _add_con(self, name, con):
        if name in self._cons:
            raise ValueError(f"duplicate constraint {name}")
        self._cons[name] = con
        return con

    def equal(self, name: str, lhs, rhs):
        return self._add_con(name, lhs == rhs)

    def less(self, name: str, lhs, rhs):
        return self._add_con(name, lhs <= rhs)

    def psd(self, name: str, expr):
        # symmetrize so cvxpy accepts expressions that are Hermitian only up to rounding
        con = self._add_con(name, (expr + expr.H) / 2 >> 0)
        if con.args[0].is_complex():
            # the real embedding of a complex block halves the reported dual
            self._dual_scale[name] = 2.0
        return con

    # objective
    def minimize(self, expr):
        self._objective, self._maximize = expr, False

    def maximize(self, expr):
        self._objective, self._maximize = expr, True

    def solve(self, settings: SolverSettings = DEFAULT_SETTINGS) -> SolverReport:
        if self._objective is None:
            self.minimize(cp.Constant(0.0))
        obj = cp.Maximize(self._objective) if self._maximize else cp.Minimize(self._objective)
        prob = cp.Problem(obj, list(self._cons.values()))
        opts = dict(
            tol_feas=settings.feas_tol,
            tol_gap_abs=settings.gap_tol,
            tol_gap_rel=settings.gap_tol,
        )
        if settings.max_iter is not None:
            opts["max_iter"] = settings.max_iter
        try:
            data, chain, inverse = prob.get_problem_data(cp.CLARABEL)
            raw = chain.solve_via_data(prob, data, warm_start=False, verbose=settings.verbose, solver_opts=opts)
            with warnings.catch_warnings():
                # accuracy is judged below from the measured residual and gap
                warnings.simplefilter("ignore", UserWarning)
                prob.unpack_results(raw, chain, inverse)
        except cp.error.SolverError as exc:
            return SolverReport(status=NUMERICAL_FAILURE, message=str(exc))
        st = prob.status
        if st in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
            return SolverReport(status=INFEASIBLE, message=st)
        if st in (cp.UNBOUNDED, cp.UNBOUNDED_INACCURATE):
            return SolverReport(status=UNBOUNDED, message=st)
        report = SolverReport(
            # Clarabel's "almost solved" is kept when the checks below pass
            status=OPTIMAL if st == cp.OPTIMAL or str(raw.status) == "AlmostSolved" else NUMERICAL_FAILURE,
            message=st,
            objective=float(prob.value),
            iterations=int(raw.iterations),
        )
        report.primal = {k: np.asarray(v.value) for k, v in self._vars.items()}
        report.dual = {k: _dual_array(c) * self._dual_scale.get(k, 1.0) for k, c in self._cons.items()}
        # backend primal and dual objectives of the canonicalized problem
        report.gap = abs(float(raw.obj_val) - float(raw.obj_val_dual))
        report.residual = max([_violation(c) for c in self._cons.values()] + [float(raw.r_dual)])
        if report.ok and (report.residual > settings.accept_residual or report.gap > settings.accept_gap):
            report.status = NUMERICAL_FAILURE
            report.message += f" (residual {report.residual:.3g}, gap {report.gap:.3g})"
        return report


def _dual_array(con) -> np.ndarray:
    val = con.dual_value
    return np.asarray(val) if val is not None else np.array(np.nan)


def _violation(con) -> float:
    v = con.violation()
    return float(np.max(np.abs(v))) if np.size(v) else 0.0
