"""Command-line interface.

Exit codes: 0 success, 2 malformed input, 3 solver failure,
4 nonclassicality certified (visibility below one, or steering detected).
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import formats as fmt
from . import postselect as ps
from .correction import corrected_chsh_bound, corrected_full_correlation_bound
from .errors import InvalidInput, SigbellError, SolverFailure
from .guessing import gamma_from_assemblage, guessing_probability
from .scenario import CHSH_COEFFS, Scenario, SignallingBudget, behavior_from_counts, bell_value, check_no_signalling, estimate_budgets
from .slhs import ZERO_TOL, check_gamma, slhs_membership, slhs_robustness, slhs_white_noise_robustness, table1_pipeline
from .slhv import dual_visibility, sample_slhv, visibility
from .solver import SolverSettings
from .witness import LINEAR, TIGHT, adjusted_bound, certification_report, evaluate_witness, schmidt_bound

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_SOLVER = 3
EXIT_CERTIFIED = 4
# visibilities this close to one are treated as solver noise, not a certificate
CERTIFY_MARGIN = 1e-7

log = logging.getLogger("sigbell")


def _settings(args) -> SolverSettings:
    s = SolverSettings.from_env()
    return s.with_overrides(feas_tol=args.tol, gap_tol=args.tol, max_iter=args.max_iter)


def _emit(args, text: str) -> None:
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


def _budget(args, behavior):
    mode = args.budget
    if mode == "data":
        return estimate_budgets(behavior, args.slack), None
    if mode == "zero":
        return SignallingBudget.zero(behavior.scenario), None
    return fmt.budget_from_dict(fmt.load_json(mode)), mode


def _behavior(path):
    return fmt.behavior_from_dict(fmt.load_json(path))


def _assemblage(path):
    return fmt.assemblage_from_dict(fmt.load_json(path))


# commands


def cmd_ns_check(args):
    b = _behavior(args.behavior)
    r = check_no_signalling(b, args.ns_tol)
    _emit(args, fmt.dumps({"max_deviation": r.max_deviation, "compliant": r.compliant,
                           "worst_entry": list(r.worst_entry) if r.worst_entry else None}))
    return EXIT_OK


def cmd_budget(args):
    b = _behavior(args.behavior)
    _emit(args, fmt.dumps(fmt.budget_to_dict(estimate_budgets(b, args.slack))))
    return EXIT_OK


def cmd_visibility(args):
    b = _behavior(args.behavior)
    budget, _ = _budget(args, b)
    r = visibility(b, budget, _settings(args))
    _emit(args, fmt.dumps({"v": r.v, "status": r.status, "gap": r.gap}))
    return EXIT_CERTIFIED if r.v < 1 - CERTIFY_MARGIN else EXIT_OK


def cmd_inequality(args):
    b = _behavior(args.behavior)
    budget, ref = _budget(args, b)
    r = dual_visibility(b, budget, _settings(args))
    _emit(args, fmt.dumps(fmt.inequality_to_dict(r.inequality, ref)))
    return EXIT_OK


def cmd_chsh_bound(args):
    budget = fmt.budget_from_dict(fmt.load_json(args.budget))
    _emit(args, fmt.dumps({"bound": corrected_chsh_bound(budget)}))
    return EXIT_OK


def cmd_bell_bound(args):
    data = fmt.load_json(args.coeffs)
    c = data["c"] if isinstance(data, dict) and "c" in data else data
    budget = fmt.budget_from_dict(fmt.load_json(args.budget))
    r = corrected_full_correlation_bound(np.asarray(c, dtype=float), args.lhv, budget)
    _emit(args, fmt.dumps({"base": r.base, "correction": r.correction, "total": r.total,
                           "chosen_tuples": {"y_tilde": r.chosenTuples[0], "x_tilde": r.chosenTuples[1]},
                           "vacuous": r.vacuous}))
    return EXIT_OK


def cmd_ingest_counts(args):
    table = fmt.counts_from_dict(fmt.load_json(args.counts))
    est = behavior_from_counts(table)
    _emit(args, fmt.dumps({"behavior": fmt.behavior_to_dict(est.behavior), "etaA": est.etaA, "etaB": est.etaB}))
    return EXIT_OK


def cmd_guess(args):
    A = _assemblage(args.assemblage)
    if A.mA == 1:
        _emit(args, fmt.dumps({"Pg": 1.0, "gap": 0.0}))
        return EXIT_OK
    r = guessing_probability(A.reduced_states(), _settings(args))
    _emit(args, fmt.dumps({"Pg": r.pg, "gap": r.gap}))
    return EXIT_OK


def cmd_steer(args):
    A = _assemblage(args.assemblage)
    settings = _settings(args)
    gamma = gamma_from_assemblage(A, settings) if args.gamma == "auto" else _float(args.gamma, "--gamma")
    gamma = check_gamma(gamma, A.mA)
    if args.measure == "membership":
        c = slhs_membership(A, gamma, settings)
        out = {"measure": "membership", "gamma": gamma, "feasible": c.feasible, "gamma_min": c.gammaMin,
               "witness_value": c.witnessValue, "witness": [[fmt.matrix_to_dict(F) for F in row] for row in c.witness]}
        certified = not c.feasible
    else:
        fn = slhs_robustness if args.measure == "robustness" else slhs_white_noise_robustness
        r = fn(A, gamma, settings)
        out = {"measure": args.measure, "gamma": gamma, "value": r.value, "status": r.report.status}
        certified = r.value > ZERO_TOL
    _emit(args, fmt.dumps(out))
    return EXIT_CERTIFIED if certified else EXIT_OK


def cmd_report(args):
    r = table1_pipeline(_assemblage(args.assemblage), _settings(args))
    _emit(args, fmt.dumps({"Pg": r.Pg, "SR": r.SR, "SR_whitenoise": r.SR_whitenoise,
                           "gamma": r.gamma, "status": r.status}))
    return EXIT_OK


def cmd_witness_adjust(args):
    _emit(args, fmt.dumps({"bound": adjusted_bound(args.lhs_bound, args.mA, args.gamma, args.mode), "mode": args.mode}))
    return EXIT_OK


def cmd_schmidt_bound(args):
    _emit(args, fmt.dumps({"d": args.d, "n": args.n, "bound": schmidt_bound(args.d, args.n)}))
    return EXIT_OK


def cmd_witness_eval(args):
    A = _assemblage(args.assemblage)
    W = fmt.witness_from_dict(fmt.load_json(args.witness))
    out = {"value": evaluate_witness(A, W), "L_LHS": W.lhsBound}
    if W.schmidtBounds is not None:
        gamma = None if args.gamma == "auto" else _float(args.gamma, "--gamma")
        r = certification_report(A, W, args.mode, gamma, _settings(args))
        out.update({"gamma": r.gamma, "mode": args.mode, "certified_sn": r.certifiedSN,
                    "adjusted_certified_sn": r.adjustedCertifiedSN, "adjusted_bounds": r.adjustedBounds})
    _emit(args, fmt.dumps(out))
    return EXIT_OK


def cmd_postselect_sim(args):
    r = ps.simulate(args.eta0, args.eta1, args.strategy)
    _emit(args, fmt.dumps({"eta0": args.eta0, "eta1": args.eta1, "strategy": args.strategy,
                           "chsh": bell_value(r.behavior, CHSH_COEFFS), "normalization": r.normalization,
                           "behavior": fmt.behavior_to_dict(r.behavior), "budget": fmt.budget_to_dict(r.budgets)}))
    return EXIT_OK


def cmd_postselect_scan(args):
    grid = ps.GridSpec(args.grid, args.min, args.max)
    rows = ps.scan_grid(args.strategy, grid, args.budget, _settings(args), jobs=args.jobs)
    _emit(args, ps.scan_to_csv(rows) if args.format == "csv" else fmt.dumps(rows))
    return EXIT_OK


def cmd_sample(args):
    budget = fmt.budget_from_dict(fmt.load_json(args.budget))
    sc = Scenario(budget.alpha.shape[1], budget.alpha.shape[2], budget.alpha.shape[0], budget.beta.shape[0])
    b = sample_slhv(sc, budget, args.seed, _settings(args))
    _emit(args, fmt.dumps(fmt.behavior_to_dict(b)))
    return EXIT_OK


def _float(text: str, flag: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise InvalidInput(f"{flag} expects a number or 'auto', got {text!r}") from None


# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-o", "--output", help="write the result here instead of stdout")
    common.add_argument("--tol", type=float, help="solver feasibility and gap tolerance (default 1e-8)")
    common.add_argument("--max-iter", type=int, help="solver iteration cap")
    verb = common.add_mutually_exclusive_group()
    verb.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    verb.add_argument("-q", "--quiet", action="store_true", help="only log errors")

    p = argparse.ArgumentParser(prog="sigbell", description="Nonlocality and steering tests that tolerate bounded signalling.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, parents=[common], help=help_, description=help_)
        sp.set_defaults(func=fn)
        return sp

    def budget_flags(sp):
        sp.add_argument("--budget", default="data", metavar="{data,zero,FILE}",
                        help="budget estimated from the behavior (default), all-zero, or read from a file")
        sp.add_argument("--slack", type=float, default=0.0, help="additive slack for data budgets")

    sp = add("ns-check", cmd_ns_check, "no-signalling diagnostics of a behavior")
    sp.add_argument("behavior")
    sp.add_argument("--ns-tol", type=float, default=1e-9, help="compliance tolerance")

    sp = add("budget", cmd_budget, "signalling budget estimated from a behavior")
    sp.add_argument("behavior")
    sp.add_argument("--slack", type=float, default=0.0)

    sp = add("visibility", cmd_visibility, "white-noise visibility against the SLHV polytope (exit 4 if below 1)")
    sp.add_argument("behavior")
    budget_flags(sp)

    sp = add("inequality", cmd_inequality, "signalling Bell inequality from the dual LP")
    sp.add_argument("behavior")
    budget_flags(sp)

    sp = add("chsh-bound", cmd_chsh_bound, "signalling-corrected CHSH bound")
    sp.add_argument("--budget", required=True)

    sp = add("bell-bound", cmd_bell_bound, "signalling-corrected bound of a full-correlation inequality")
    sp.add_argument("--coeffs", required=True, help="JSON table c[x][y] (or {'c': ...})")
    sp.add_argument("--lhv", type=float, required=True, help="local bound of the inequality")
    sp.add_argument("--budget", required=True)

    sp = add("ingest-counts", cmd_ingest_counts, "post-selected behavior and efficiencies from raw counts")
    sp.add_argument("counts")

    sp = add("guess", cmd_guess, "guessing probability of Alice's setting from Bob's reduced states")
    sp.add_argument("assemblage")

    sp = add("steer", cmd_steer, "SLHS membership or robustness (exit 4 if steering is detected)")
    sp.add_argument("assemblage")
    sp.add_argument("--gamma", default="auto", help="guessing budget, or 'auto' to take it from the data")
    sp.add_argument("--measure", choices=("membership", "robustness", "whitenoise"), default="membership")

    sp = add("report", cmd_report, "guessing probability and both robustnesses at the data's budget")
    sp.add_argument("assemblage")

    sp = add("witness-adjust", cmd_witness_adjust, "steering-witness bound adjusted for signalling")
    sp.add_argument("--lhs-bound", type=float, required=True)
    sp.add_argument("--mA", type=int, required=True)
    sp.add_argument("--gamma", type=float, required=True)
    sp.add_argument("--mode", choices=(TIGHT, LINEAR), default=TIGHT)

    sp = add("schmidt-bound", cmd_schmidt_bound, "Schmidt-number bound of the transposed-MUB witness")
    sp.add_argument("-d", type=int, required=True)
    sp.add_argument("-n", type=int, required=True)

    sp = add("witness-eval", cmd_witness_eval, "evaluate a steering witness, with Schmidt-number certification")
    sp.add_argument("assemblage")
    sp.add_argument("witness")
    sp.add_argument("--mode", choices=(TIGHT, LINEAR), default=TIGHT)
    sp.add_argument("--gamma", default="auto")

    sp = add("sample", cmd_sample, "random SLHV behavior under a budget")
    sp.add_argument("--budget", required=True)
    sp.add_argument("--seed", type=int, default=0)

    pp = sub.add_parser("postselect", help="detection-efficiency post-selection")
    psub = pp.add_subparsers(dest="action", required=True)
    sp = psub.add_parser("sim", parents=[common], help="post-selected behavior at one efficiency point")
    sp.set_defaults(func=cmd_postselect_sim)
    sp.add_argument("--eta0", type=float, required=True)
    sp.add_argument("--eta1", type=float, required=True)
    sp.add_argument("--strategy", choices=(ps.QUANTUM, ps.LOCAL), default=ps.QUANTUM)
    sp = psub.add_parser("scan", parents=[common], help="visibility over an efficiency grid")
    sp.set_defaults(func=cmd_postselect_scan)
    sp.add_argument("--grid", type=int, default=21)
    sp.add_argument("--min", type=float, default=0.5)
    sp.add_argument("--max", type=float, default=1.0)
    sp.add_argument("--strategy", choices=(ps.QUANTUM, ps.LOCAL), default=ps.QUANTUM)
    sp.add_argument("--budget", choices=("data", "zero"), default="data")
    sp.add_argument("--jobs", type=int, default=1, help="worker processes for grid points")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.INFO if args.verbose else logging.ERROR if args.quiet else logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except SolverFailure as exc:
        log.error("%s", exc)
        return EXIT_SOLVER
    except (SigbellError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
