"""Command-line driver: ``clinch run|verify|generate|example1``.

Exit codes: 0 when every check passes, 1 when some check fails, 2 on bad input.
"""
from __future__ import annotations

import argparse
import os
import sys
import time
from fractions import Fraction

from . import __version__
from .auction import TRACE_FULL, TRACE_SUMMARY, Outcome, Scenario, run
from .errors import ClinchingError, ScenarioError
from .payment import Agent
from .polymatroid import KINDS, SubmodularFunction
from .scenario_io import (
    MIXES, build_run_report, check_dict, dump, emit_scenario, generate, jsonable, load_scenario,
    scenario_hash, scenario_to_dict,
)
from .verification import FAIL, basic_checks, pareto_check, structure_checks, vcg_baseline, verify_scenario

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def example1_scenario(epsilon="1/4") -> Scenario:
    """Two slots with click rates 2 and 1; a high-value agent with average
    budget 1 and a low-value agent with average budget 2."""
    f = SubmodularFunction.sponsored_search([2, 1])
    agents = (Agent.make(10, [(0, 1)]), Agent.make(2, [(0, 2)]))
    return Scenario(f, agents, Fraction(epsilon))


def _write(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_run(args) -> int:
    scenario = load_scenario(args.scenario)
    start = time.perf_counter()
    outcome, trace = run(scenario, trace=args.trace, invariants=args.check_invariants)
    elapsed = time.perf_counter() - start
    checks = basic_checks(scenario.f, scenario.agents, outcome, clinching=True)
    checks += structure_checks(scenario, outcome, trace)
    timing = {"run_seconds": round(elapsed, 6)} if args.timing else None
    report = build_run_report(scenario, outcome, trace, checks, timing)
    _write(dump(report), args.out)
    failed = any(c.status == FAIL for c in checks)
    if args.check_invariants:
        failed |= any(not cp.invariants.ok for cp in trace.checkpoints)
    return EXIT_FAIL if failed else EXIT_OK


def _cmd_verify(args) -> int:
    scenario = load_scenario(args.scenario)
    everything = not (args.pareto or args.ic or args.oracle)
    rep = verify_scenario(
        scenario,
        pareto=everything or args.pareto,
        ic=everything or args.ic,
        oracle=everything or args.oracle,
    )
    doc = {
        "tool": {"name": "clinching", "version": __version__},
        "scenario_sha256": scenario_hash(scenario),
        "assumption1": {"holds": not rep.assumption1, "violations": rep.assumption1},
        "ok": rep.ok,
        "checks": [check_dict(c) for c in rep.checks],
    }
    _write(dump(doc), args.out)
    return EXIT_OK if rep.ok else EXIT_FAIL


def _cmd_generate(args) -> int:
    seed = args.seed
    if seed is None:
        env = os.environ.get("CLINCH_SEED")
        if env is None:
            raise ScenarioError("no --seed given and CLINCH_SEED is unset")
        try:
            seed = int(env)
        except ValueError:
            raise ScenarioError(f"CLINCH_SEED={env!r} is not an integer") from None
    try:
        s = generate(seed, n=args.n, kind=args.kind, v_max=Fraction(args.v_max),
                     epsilon=Fraction(args.epsilon), mix=args.mix, shuffle_order=args.shuffle_order)
    except (ValueError, ZeroDivisionError) as exc:
        raise ScenarioError(str(exc)) from None
    _write(emit_scenario(s), args.out)
    return EXIT_OK


def example1_report() -> tuple[dict, bool]:
    scenario = example1_scenario()
    f, agents = scenario.f, scenario.agents
    vcg = vcg_baseline(f, agents)
    refutation = pareto_check(f, agents, vcg)
    clinch_outcome, _ = run(scenario, trace=TRACE_SUMMARY)
    clinch_pareto = pareto_check(f, agents, clinch_outcome)
    expected = (
        vcg == Outcome((Fraction(1), Fraction(2)), (Fraction(0), Fraction(1)))
        and not refutation.efficient
        and refutation.optimum == 18 and refutation.welfare == 14
        and clinch_pareto.efficient
    )
    doc = {
        "tool": {"name": "clinching", "version": __version__},
        "scenario": scenario_to_dict(scenario),
        "scenario_sha256": scenario_hash(scenario),
        "vcg_on_truncated_values": {"x": jsonable(vcg.x), "payments": jsonable(vcg.payments)},
        "vcg_pareto": {
            "efficient": refutation.efficient,
            "welfare": jsonable(refutation.welfare),
            "lp_optimum": jsonable(refutation.optimum),
            "improvement": jsonable(refutation.improvement),
        },
        "clinching": {
            "x": jsonable(clinch_outcome.x),
            "payments": jsonable(clinch_outcome.payments),
            "pareto_efficient": clinch_pareto.efficient,
            "lp_optimum": jsonable(clinch_pareto.optimum),
        },
        "reproduced": expected,
    }
    return doc, expected


def _cmd_example1(args) -> int:
    doc, ok = example1_report()
    _write(dump(doc), args.out)
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clinch", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the auction and write a report")
    p.add_argument("scenario")
    p.add_argument("--check-invariants", action="store_true",
                   help="evaluate the three checkpoint invariants and record them")
    p.add_argument("--trace", choices=(TRACE_FULL, TRACE_SUMMARY), default=TRACE_SUMMARY)
    p.add_argument("--timing", action="store_true",
                   help="add wall-clock timing (makes the report nondeterministic)")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("verify", help="run the verification suite (all parts if none chosen)")
    p.add_argument("scenario")
    p.add_argument("--pareto", action="store_true")
    p.add_argument("--ic", action="store_true")
    p.add_argument("--oracle", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("generate", help="emit a random scenario")
    p.add_argument("--seed", type=int, help="defaults to $CLINCH_SEED")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--kind", choices=KINDS, default=KINDS[0])
    p.add_argument("--v-max", default="6")
    p.add_argument("--epsilon", default="1/2")
    p.add_argument("--mix", choices=MIXES, default="mixed")
    p.add_argument("--shuffle-order", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("example1", help="two-slot example where VCG on truncated values is inefficient")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_example1)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"clinch: {exc}", file=sys.stderr)
        for v in getattr(exc, "violations", None) or []:
            print(f"  - {v}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"clinch: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ClinchingError as exc:
        print(f"clinch: {exc}", file=sys.stderr)
        return EXIT_FAIL
