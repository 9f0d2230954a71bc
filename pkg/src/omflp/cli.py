"""Command-line workbench.

Subcommands:

* ``validate <instance>``  -- metric axioms plus both cost-model checks.
* ``gen <kind> ... -o f``  -- write a generated instance document.
* ``opt <instance>``       -- exact optimum; refuses over-limit instances
                              with a machine-readable reason.
* ``run --algorithm ... --seed N <instance>`` -- one verified run.
* ``bench --config f -o out.csv`` -- trial sweep to CSV.

``OMFLP_THREADS`` caps the bench worker count (default 1, which keeps CI
runs bit-reproducible).  All default output is deterministic; pass
``--timings`` to bench to fill the runtime column at the cost of
reproducibility.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

from .adversary import GenParams, gen_gx, gen_random, gen_thm1
from .bench import ALGORITHMS, run_experiment, run_trial, resolve_opt
from .errors import FormatError, GenerationError, InvariantViolation, OmflpError, OracleLimitError
from .instance import (
    check_condition1,
    check_subadditivity,
    indices_from_config,
    parse_instance,
    serialize_instance,
    validate_metric,
)
from .numeric import number_to_json, parse_number
from .oracle import OracleLimits, solve_opt_bruteforce
from .primal_dual import run_pd, trace_to_document
from .randomized import run_rand_traced
from .randomized import trace_to_document as rand_trace_to_document
from .solution import evaluate_cost, solution_to_document


def _emit(doc) -> None:
    sys.stdout.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _read_instance(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_instance(fh.read())


def _cmd_validate(args) -> int:
    inst = _read_instance(args.instance)
    metric_report = validate_metric(inst.metric.dist)
    cond1 = check_condition1(inst.cost, inst.metric)
    subadd = check_subadditivity(inst.cost, inst.metric)
    doc = {
        "metric_issues": [
            {"kind": i.kind, "where": list(i.where), "detail": i.detail}
            for i in metric_report.issues
        ],
        "condition1_violations": len(cond1),
        "subadditivity_violations": len(subadd),
        "ok": metric_report.ok and not cond1 and not subadd,
    }
    _emit(doc)
    return 0 if doc["ok"] else 1


def _cmd_gen(args) -> int:
    if args.kind == "thm1":
        inst = gen_thm1(args.s_size, args.seed)
    elif args.kind == "gx":
        inst = gen_gx(args.s_size, parse_number(args.x), args.seed)
    elif args.kind == "random":
        params = GenParams(
            num_points=args.num_points,
            S_size=args.s_size,
            n=args.n,
            metric_kind=args.metric,
            cost_kind=args.cost_kind,
            max_set_size=args.max_set_size,
        )
        inst = gen_random(params, args.seed)
    else:
        raise FormatError(f"unknown generator kind {args.kind!r}")
    text = serialize_instance(inst)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_opt(args) -> int:
    inst = _read_instance(args.instance)
    limits = OracleLimits(
        max_points=args.limit_points,
        max_commodities=args.limit_commodities,
        max_requests=args.limit_requests,
    )
    try:
        result = solve_opt_bruteforce(inst, limits)
    except OracleLimitError as exc:
        _emit({"error": "oracle_limits", "reason": exc.reason})
        return 2
    _emit(
        {
            "cost": number_to_json(result.cost),
            "nodes_explored": result.nodes_explored,
            "solution": solution_to_document(inst, result.solution),
        }
    )
    return 0


def _cmd_run(args) -> int:
    inst = _read_instance(args.instance)
    if args.algorithm not in ALGORITHMS:
        raise FormatError(f"unknown algorithm {args.algorithm!r}")
    doc = {"algorithm": args.algorithm, "seed": args.seed}
    if args.algorithm == "pd":
        solution, state = run_pd(inst, check_invariants=True)
        doc["dual_total"] = number_to_json(state.dual_total)
        if args.trace:
            doc["trace"] = trace_to_document(inst, state)
    elif args.algorithm == "rand":
        solution, traces = run_rand_traced(inst, args.seed)
        if args.trace:
            doc["trace"] = rand_trace_to_document(inst, traces, args.seed)
    else:
        runner, _ = ALGORITHMS[args.algorithm]
        solution = runner(inst, args.seed)
    cost = evaluate_cost(inst, solution)
    doc["cost"] = {
        "construction": number_to_json(cost.construction),
        "connection": number_to_json(cost.connection),
        "total": number_to_json(cost.total),
    }
    doc["solution"] = solution_to_document(inst, solution)
    _emit(doc)
    return 0


def _cmd_bench(args) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        config = json.load(fh, parse_float=Fraction)
    threads = int(os.environ.get("OMFLP_THREADS", "1"))
    csv_text, violations = run_experiment(
        config,
        base_dir=os.path.dirname(os.path.abspath(args.config)),
        threads=max(1, threads),
        record_runtime=args.timings,
    )
    out_path = args.output or config.get("output")
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(csv_text)
    else:
        sys.stdout.write(csv_text)
    for line in violations:
        sys.stderr.write(f"invariant violation: {line}\n")
    return 1 if violations else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="omflp")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check metric axioms and cost-model assumptions")
    p.add_argument("instance")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("gen", help="generate an instance document")
    p.add_argument("kind", choices=["thm1", "gx", "random"])
    p.add_argument("--s-size", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--x", default="1", help="poly exponent in [0,2] (gx only)")
    p.add_argument("--num-points", type=int, default=3)
    p.add_argument("--n", type=int, default=6)
    p.add_argument("--metric", choices=["line", "matrix"], default="line")
    p.add_argument(
        "--cost-kind", choices=["table", "size_based", "poly"], default="size_based"
    )
    p.add_argument("--max-set-size", type=int, default=1)
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("opt", help="exact optimum by enumeration")
    p.add_argument("instance")
    p.add_argument("--limit-points", type=int, default=4)
    p.add_argument("--limit-commodities", type=int, default=4)
    p.add_argument("--limit-requests", type=int, default=10)
    p.set_defaults(func=_cmd_opt)

    p = sub.add_parser("run", help="run one algorithm over an instance")
    p.add_argument("instance")
    p.add_argument(
        "--algorithm", required=True, choices=sorted(ALGORITHMS.keys())
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trace", action="store_true", help="include the event trace")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("bench", help="run an experiment config to CSV")
    p.add_argument("--config", required=True)
    p.add_argument("-o", "--output")
    p.add_argument(
        "--timings",
        action="store_true",
        help="fill runtime_ms (breaks byte-reproducibility)",
    )
    p.set_defaults(func=_cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FormatError, GenerationError) as exc:
        _emit({"error": "bad_input", "detail": str(exc)})
        return 2
    except InvariantViolation as exc:
        _emit({"error": "invariant_violation", "detail": str(exc)})
        return 1
    except OmflpError as exc:
        _emit({"error": "failure", "detail": str(exc)})
        return 2


if __name__ == "__main__":
    sys.exit(main())
