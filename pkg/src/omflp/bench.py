"""Trial runner: algorithms over instances, ratio estimation, CSV emission.

A trial is a pure function of (instance, algorithm, seed), so trials can run
in any order and across any number of workers without changing results; rows
are emitted in config order and aggregate rows (seed column ``mean``) follow
the trial rows of each (instance, algorithm) pair.  The ``runtime_ms``
column stays empty unless timings are requested, keeping default output
byte-reproducible.

Every trial re-checks hard invariants: feasibility for all algorithms, and
for the primal-dual run also per-event condition maintenance plus the
three-times-investment cost bound.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

from .adversary import GenParams, gen_gx, gen_random, gen_thm1
from .baselines import run_no_prediction, run_per_commodity
from .errors import FormatError, InvariantViolation, OmflpError, OracleLimitError
from .instance import Instance, parse_instance
from .numeric import Num, exact_div, number_to_json
from .oracle import OracleLimits, solve_opt_bruteforce
from .primal_dual import run_pd
from .randomized import run_rand
from .solution import Solution, check_feasible, evaluate_cost

CSV_HEADER = "instance_id,algorithm,seed,alg_cost,opt_cost,opt_is_exact,ratio,n,S_size,runtime_ms"

#: algorithm name -> (runner, deterministic)
ALGORITHMS: Dict[str, Tuple[Callable[[Instance, int], Solution], bool]] = {
    "pd": (lambda inst, seed: run_pd(inst)[0], True),
    "rand": (run_rand, False),
    "per-commodity": (run_per_commodity, False),
    "no-prediction": (lambda inst, seed: run_no_prediction(inst), True),
}


@dataclass(frozen=True)
class TrialResult:
    instance_id: str
    algorithm: str
    seed: int
    alg_cost: Num
    opt_cost: Num
    opt_is_exact: bool
    ratio: Optional[Num]
    n: int
    S_size: int
    runtime_ms: Optional[float]


def resolve_opt(inst: Instance, limits: Optional[OracleLimits] = None) -> Tuple[Num, bool]:
    """Exact optimum when the oracle can afford it, else the known bound.

    Raises ``OmflpError`` when neither source is available.
    """
    try:
        result = solve_opt_bruteforce(inst, limits)
        return result.cost, True
    except OracleLimitError:
        if inst.known_opt_upper_bound is not None:
            return inst.known_opt_upper_bound, False
        raise OmflpError(
            "no optimum source: instance exceeds oracle limits and carries no "
            "known optimum bound"
        )


def run_trial(
    inst: Instance,
    instance_id: str,
    algorithm: str,
    seed: int,
    opt_cost: Num,
    opt_is_exact: bool,
    record_runtime: bool = False,
) -> TrialResult:
    """One verified run; hard-invariant failures raise ``InvariantViolation``."""
    if algorithm not in ALGORITHMS:
        raise FormatError(f"unknown algorithm {algorithm!r}")
    runner, _ = ALGORITHMS[algorithm]
    start = time.perf_counter()
    if algorithm == "pd":
        solution, state = run_pd(inst, check_invariants=True)
    else:
        solution = runner(inst, seed)
        state = None
    elapsed_ms = (time.perf_counter() - start) * 1000.0

    report = check_feasible(inst, solution)
    if not report.ok:
        raise InvariantViolation(
            f"{algorithm} on {instance_id}: infeasible solution ({report.issues[0]})"
        )
    cost = evaluate_cost(inst, solution)
    if state is not None:
        bound = 3 * state.dual_total
        if cost.total > bound + 1e-9:
            raise InvariantViolation(
                f"pd on {instance_id}: cost {cost.total} exceeds 3x investment {bound}"
            )
    ratio = exact_div(cost.total, opt_cost) if opt_cost > 0 else None
    return TrialResult(
        instance_id=instance_id,
        algorithm=algorithm,
        seed=seed,
        alg_cost=cost.total,
        opt_cost=opt_cost,
        opt_is_exact=opt_is_exact,
        ratio=ratio,
        n=inst.n,
        S_size=inst.num_commodities,
        runtime_ms=elapsed_ms if record_runtime else None,
    )


def estimate_ratio(
    inst: Instance,
    algorithm: str,
    trials: int,
    base_seed: int,
    limits: Optional[OracleLimits] = None,
) -> dict:
    """Ratio statistics over deterministic per-trial seeds base_seed + index.

    With only a known optimum bound available the figures are lower estimates
    of the true ratio, labelled ``ratio_lower``.
    """
    if algorithm not in ALGORITHMS:
        raise FormatError(f"unknown algorithm {algorithm!r}")
    opt_cost, opt_is_exact = resolve_opt(inst, limits)
    _, deterministic = ALGORITHMS[algorithm]
    count = 1 if deterministic else trials
    ratios: List[float] = []
    for t in range(count):
        result = run_trial(inst, "adhoc", algorithm, base_seed + t, opt_cost, opt_is_exact)
        if result.ratio is None:
            raise OmflpError("optimum cost is zero; ratio undefined")
        ratios.append(float(result.ratio))
    mean = sum(ratios) / len(ratios)
    var = sum((x - mean) ** 2 for x in ratios) / len(ratios)
    return {
        "label": "ratio" if opt_is_exact else "ratio_lower",
        "opt_is_exact": opt_is_exact,
        "trials": len(ratios),
        "mean": mean,
        "stddev": math.sqrt(var),
        "max": max(ratios),
    }


# ---------------------------------------------------------------------------
# experiment configs


def build_generated_instance(spec: dict) -> Instance:
    kind = spec.get("kind")
    if kind == "thm1":
        return gen_thm1(int(spec["S_size"]), int(spec["seed"]))
    if kind == "gx":
        from .numeric import parse_number

        return gen_gx(int(spec["S_size"]), parse_number(spec["x"]), int(spec["seed"]))
    if kind == "random":
        params = GenParams(
            num_points=int(spec["num_points"]),
            S_size=int(spec["S_size"]),
            n=int(spec["n"]),
            metric_kind=spec.get("metric", "line"),
            cost_kind=spec.get("cost_kind", "size_based"),
            max_set_size=int(spec.get("max_set_size", 1)),
        )
        return gen_random(params, int(spec["seed"]))
    raise FormatError(f"unknown generator kind {kind!r}")


def _load_config_instances(config: dict, base_dir: str) -> List[Tuple[str, Instance]]:
    out = []
    for entry in config.get("instances", []):
        if "path" in entry:
            path = entry["path"]
            if not os.path.isabs(path):
                path = os.path.join(base_dir, path)
            with open(path, "r", encoding="utf-8") as fh:
                inst = parse_instance(fh.read())
            default_id = os.path.splitext(os.path.basename(path))[0]
        elif "gen" in entry:
            inst = build_generated_instance(entry["gen"])
            g = entry["gen"]
            default_id = "-".join(str(g[k]) for k in sorted(g))
        else:
            raise FormatError("instance entry needs a 'path' or a 'gen' spec")
        out.append((str(entry.get("id", default_id)), inst))
    return out


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    rendered = number_to_json(value)
    return str(rendered)


def _row(result: TrialResult, seed_label: Optional[str] = None) -> str:
    return ",".join(
        [
            result.instance_id,
            result.algorithm,
            str(result.seed) if seed_label is None else seed_label,
            _fmt(result.alg_cost),
            _fmt(result.opt_cost),
            "true" if result.opt_is_exact else "false",
            _fmt(result.ratio),
            str(result.n),
            str(result.S_size),
            "" if result.runtime_ms is None else repr(result.runtime_ms),
        ]
    )


def _trial_job(args):
    inst, instance_id, algorithm, seed, opt_cost, opt_is_exact, record_runtime = args
    try:
        return run_trial(
            inst, instance_id, algorithm, seed, opt_cost, opt_is_exact, record_runtime
        ), None
    except (InvariantViolation, OmflpError) as exc:
        return None, f"{instance_id}/{algorithm}/seed={seed}: {exc}"


def run_experiment(
    config: dict,
    base_dir: str = ".",
    threads: int = 1,
    record_runtime: bool = False,
    oracle_limits: Optional[OracleLimits] = None,
) -> Tuple[str, List[str]]:
    """Run all (instance, algorithm, trial) combinations; returns (csv, violations)."""
    instances = _load_config_instances(config, base_dir)
    algorithms = config.get("algorithms", [])
    for name in algorithms:
        if name not in ALGORITHMS:
            raise FormatError(f"unknown algorithm {name!r}")
    trials = int(config.get("trials", 1))
    base_seed = int(config.get("base_seed", 0))

    jobs = []
    job_groups: List[Tuple[str, str, List[int]]] = []  # (instance_id, algorithm, job ids)
    for instance_id, inst in instances:
        opt_cost, opt_is_exact = resolve_opt(inst, oracle_limits)
        for algorithm in algorithms:
            _, deterministic = ALGORITHMS[algorithm]
            count = 1 if deterministic else trials
            ids = []
            for t in range(count):
                ids.append(len(jobs))
                jobs.append(
                    (inst, instance_id, algorithm, base_seed + t, opt_cost, opt_is_exact, record_runtime)
                )
            job_groups.append((instance_id, algorithm, ids))

    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(_trial_job, jobs))
    else:
        outcomes = [_trial_job(job) for job in jobs]

    lines = [CSV_HEADER]
    violations: List[str] = []
    for instance_id, algorithm, ids in job_groups:
        results = []
        for i in ids:
            result, problem = outcomes[i]
            if problem is not None:
                violations.append(problem)
                continue
            results.append(result)
            lines.append(_row(result))
        if results:
            mean_cost = exact_div(sum(r.alg_cost for r in results), len(results))
            ratios = [r.ratio for r in results]
            mean_ratio = (
                exact_div(sum(ratios), len(ratios)) if all(r is not None for r in ratios) else None
            )
            lines.append(
                _row(
                    TrialResult(
                        instance_id=instance_id,
                        algorithm=algorithm,
                        seed=results[0].seed,
                        alg_cost=mean_cost,
                        opt_cost=results[0].opt_cost,
                        opt_is_exact=results[0].opt_is_exact,
                        ratio=mean_ratio,
                        n=results[0].n,
                        S_size=results[0].S_size,
                        runtime_ms=None,
                    ),
                    seed_label="mean",
                )
            )
    return "\n".join(lines) + "\n", violations
