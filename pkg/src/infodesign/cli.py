"""Command-line front end for solving, verifying and simulating information design problems.

Exit codes: 0 success, 1 invalid input or failed verification, 2 no
feasible designer strategy, 3 internal error.  JSON goes to ``--out`` (or
stdout); diagnostics and timings go to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__, instances
from .beliefs import MemoizationUnsound, TreeTooLarge, build_tree, check_assumption2
from .congestion import CongestionParams, generate_congestion
from .lp import NumericalBreakdown, ToleranceConfig
from .model import ParseError, ValidationError, Variant, load_problem, save_problem, to_dict
from .report import report
from .solver import AssumptionViolation, backward_induct, load_solution
from .verify import TooLarge, brute_force_cisr, cisr_check, monte_carlo

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE, EXIT_INTERNAL = 0, 1, 2, 3


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def _emit(doc: dict, out: str | None) -> None:
    text = json.dumps(doc) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _tolerances(args) -> ToleranceConfig:
    return ToleranceConfig(feasibility=args.tol_feas, cisr=args.tol_cisr)


def cmd_solve(args) -> int:
    spec = load_problem(args.problem)
    sol = backward_induct(spec, memoize=args.memoize, tol=_tolerances(args), force=args.force,
                          scan_all=args.scan_all, threads=args.threads, symmetrize=args.symmetrize,
                          a2_seed=args.seed)
    _emit(sol.to_dict(record_time=args.record_time), args.out)
    _err(f"solver wall time {sol.stats.wall_time:.3f} s, {sol.stats.lps_solved} LPs")
    if args.out is not None:
        print(report(sol, spec))
    if not sol.solved:
        _err("infeasible at " + ", ".join(sol.infeasible_nodes))
        return EXIT_INFEASIBLE
    return EXIT_OK


def _gain_table(cr, bf=None) -> str:
    rows = [f"{'agent':>5}  {'max gain':>12}  {'result':>6}  worst location"]
    for i, gain in enumerate(cr.max_gain):
        w = cr.worst[i]
        where = "-" if w is None else (f"t={w['time']} node {w['node_key']} m={w['m']} p={w['p']} "
                                       f"target {w['target']} best {w['best']}")
        rows.append(f"{i + 1:>5}  {gain:>12.3e}  {'pass' if gain <= cr.tol else 'FAIL':>6}  {where}")
    if bf is not None:
        verdict = "pass" if bf.passes else "FAIL"
        rows.append(f"brute force: {verdict}, max gain {np.max(bf.max_gain):.3e}, "
                    f"{sum(bf.strategies)} deviations enumerated")
    return "\n".join(rows)


def cmd_verify(args) -> int:
    spec = load_problem(args.problem)
    sol = load_solution(args.solution, spec)
    if not sol.solved:
        _err("solution is not solved: " + ", ".join(sol.infeasible_nodes))
        return EXIT_INVALID
    cr = cisr_check(spec, sol, args.tol)
    bf = None
    if args.brute_force:
        try:
            bf = brute_force_cisr(spec, sol, args.tol)
        except TooLarge as exc:
            _err(f"brute force skipped: {exc}")
    print(_gain_table(cr, bf))
    if args.out is not None:
        doc = {"cisr": cr.to_dict()}
        if bf is not None:
            doc["brute_force"] = {"passes": bf.passes, "max_gain": bf.max_gain.tolist(),
                                  "strategies": bf.strategies, "worst_node": bf.worst_node}
        _emit(doc, args.out)
    ok = cr.passes and (bf is None or bf.passes)
    return EXIT_OK if ok else EXIT_INVALID


def cmd_simulate(args) -> int:
    spec = load_problem(args.problem)
    sol = load_solution(args.solution, spec)
    if not sol.solved:
        _err("solution is not solved")
        return EXIT_INVALID
    res = monte_carlo(spec, sol, args.episodes, args.seed)
    doc = res.to_dict()
    doc["J0"] = sol.J0
    _emit(doc, args.out)
    return EXIT_OK


def cmd_inspect(args) -> int:
    spec = load_problem(args.problem)
    tree = build_tree(spec, memoize=args.memoize, threads=args.threads)
    levels = []
    for t, level in enumerate(tree.levels):
        shape = spec.spaces[t].belief_shape
        rows = []
        for k, nd in enumerate(level):
            support = [[*map(int, np.unravel_index(j, shape)), float(nd.belief.ravel()[j])]
                       for j in np.flatnonzero(nd.belief.ravel() > 0)]
            rows.append({"class_id": k, "path": list(nd.path), "node_key": nd.node_key,
                         "belief_key": nd.belief_key, "multiplicity": nd.multiplicity,
                         "support": support, "children": {str(z): c for z, c in sorted(nd.children.items())}})
        levels.append(rows)
    _emit({"memoized": tree.memoized, "num_nodes": tree.num_nodes(), "levels": levels}, args.out)
    return EXIT_OK


def cmd_check(args) -> int:
    spec = load_problem(args.problem)
    rep = check_assumption2(spec, trials=args.trials, seed=args.seed)
    _emit(rep.to_dict(), args.out)
    return EXIT_OK if rep.passes else EXIT_INVALID


def cmd_example(args) -> int:
    if args.name == "congestion":
        spec = generate_congestion(CongestionParams(k=args.k, t=args.t, a=args.a, theta1=args.theta1,
                                                    theta2=args.theta2, p1=args.p1, rho=args.rho))
    elif args.name == "persuasion":
        spec = instances.static_persuasion(args.p1)
    elif args.name == "dominated":
        spec = instances.dominated_target()
    elif args.name == "hidden-action":
        spec = instances.hidden_action()
    else:
        spec = instances.random_problem(np.random.default_rng(args.seed), Variant(args.variant))
    if args.out is None:
        _emit(to_dict(spec), None)
    else:
        save_problem(spec, args.out)
    return EXIT_OK


def _common(p: argparse.ArgumentParser, out: bool = True) -> None:
    p.add_argument("--problem", required=True, help="problem JSON file")
    if out:
        p.add_argument("--out", help="output JSON path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="infodesign", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="compute the designer strategy")
    _common(p)
    p.add_argument("--memoize", action=argparse.BooleanOptionalAction, default=True,
                   help="solve one program per belief class (default on)")
    p.add_argument("--force", action="store_true", help="solve even if beliefs look strategy dependent")
    p.add_argument("--tol-feas", type=float, default=1e-7, help="LP feasibility tolerance")
    p.add_argument("--tol-cisr", type=float, default=0.0, help="slack on the obedience constraints")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int, default=0, help="seed for the belief-independence check")
    p.add_argument("--scan-all", action="store_true", help="list every infeasible node of the failing level")
    p.add_argument("--symmetrize", action="store_true",
                   help="replace kernels by their agent-permutation average when that stays optimal")
    p.add_argument("--record-time", action="store_true", help="include wall time in the JSON")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="check that target strategies are best responses")
    _common(p)
    p.add_argument("--solution", required=True)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--brute-force", action="store_true", help="also enumerate deterministic deviations")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="Monte Carlo estimate of expected rewards")
    _common(p)
    p.add_argument("--solution", required=True)
    p.add_argument("--episodes", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("inspect", help="dump the common-information tree")
    _common(p)
    p.add_argument("--memoize", action=argparse.BooleanOptionalAction, default=False)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("check-assumptions", help="test whether beliefs depend on the strategy profile")
    _common(p)
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("example", help="write a built-in instance")
    p.add_argument("name", choices=["congestion", "persuasion", "dominated", "hidden-action", "random"])
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--t", type=int, default=2)
    p.add_argument("--a", type=float, default=1.5)
    p.add_argument("--theta1", type=float, default=1.2)
    p.add_argument("--theta2", type=float, default=2.8)
    p.add_argument("--p1", type=float, default=0.5)
    p.add_argument("--rho", type=float, default=0.9)
    p.add_argument("--seed", type=int, default=0, help="seed for the random instance")
    p.add_argument("--variant", default="MultiAgent", choices=[v.value for v in Variant])
    p.add_argument("--out")
    p.set_defaults(func=cmd_example)
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    """Parse ``argv`` and dispatch; returns the exit code."""
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        code = args.func(args)
    except (ParseError, ValidationError, MemoizationUnsound, AssumptionViolation) as exc:
        _err(f"error: {exc}")
        return EXIT_INVALID
    except (NumericalBreakdown, TreeTooLarge) as exc:
        _err(f"internal error: {exc}")
        return EXIT_INTERNAL
    except (OSError, KeyError, ValueError) as exc:
        # unreadable files and malformed solution documents
        _err(f"error: {type(exc).__name__}: {exc}")
        return EXIT_INVALID
    except RuntimeError as exc:
        _err(f"internal error: {exc}")
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001 - last-resort exit code
        _err(f"internal error: {type(exc).__name__}: {exc}")
        return EXIT_INTERNAL
    _err(f"{args.command} finished in {time.perf_counter() - start:.3f} s")
    return code


def main() -> None:
    sys.exit(run())
