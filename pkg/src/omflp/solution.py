"""Facilities, assignments, cost evaluation, and the request-splitting transform.

A solution opens facilities (point, configuration, paid cost) and assigns
every request to a set of facilities that jointly cover its demand.  The
connection cost counts the distance to each *distinct* connected facility
once per request, no matter how many commodities that facility covers for it.

``split_requests`` rewrites an instance into the alternate cost model where
connections are paid per commodity: each request of demand size k becomes k
consecutive single-commodity requests at the same point.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .errors import FormatError, InfeasibleSolutionError
from .instance import (
    Instance,
    Request,
    config_from_indices,
    facility_cost,
    indices_from_config,
)
from .numeric import Num, number_to_json, parse_number
from .validation import ValidationIssue, ValidationReport


@dataclass(frozen=True, eq=True)
class Facility:
    id: int
    point: int
    config: int  # nonempty bitmask
    paid_cost: Num


@dataclass(frozen=True, eq=True)
class Assignment:
    request_index: int
    connections: Tuple[Tuple[int, int], ...]  # (facility id, covered mask), sorted


@dataclass(frozen=True, eq=True)
class Solution:
    facilities: Tuple[Facility, ...]
    assignments: Tuple[Assignment, ...]


@dataclass(frozen=True)
class CostBreakdown:
    construction: Num
    connection: Num

    @property
    def total(self) -> Num:
        return self.construction + self.connection


def make_solution(facilities, assignments) -> Solution:
    """Normalise connection order so equal solutions compare equal."""
    norm_assignments = tuple(
        Assignment(a.request_index, tuple(sorted(a.connections)))
        for a in sorted(assignments, key=lambda a: a.request_index)
    )
    return Solution(tuple(facilities), norm_assignments)


def check_feasible(inst: Instance, sol: Solution) -> ValidationReport:
    """Report structural problems and uncovered (request, commodity) pairs."""
    issues: List[ValidationIssue] = []
    by_id: Dict[int, Facility] = {}
    for fac in sol.facilities:
        if fac.id in by_id:
            issues.append(ValidationIssue("duplicate-facility-id", (fac.id,), "facility ids must be unique"))
        by_id[fac.id] = fac
        if fac.config == 0:
            issues.append(ValidationIssue("empty-config", (fac.id,), "facility offers nothing"))

    if len(sol.assignments) != inst.n:
        issues.append(
            ValidationIssue(
                "assignment-count",
                (len(sol.assignments), inst.n),
                "need exactly one assignment per request",
            )
        )

    for a in sol.assignments:
        if not 0 <= a.request_index < inst.n:
            issues.append(ValidationIssue("bad-request", (a.request_index,), "unknown request"))
            continue
        req = inst.requests[a.request_index]
        covered = 0
        seen_fids = set()
        for fid, mask in a.connections:
            if fid not in by_id:
                issues.append(
                    ValidationIssue("unknown-facility", (a.request_index, fid), "assignment references a missing facility")
                )
                continue
            if fid in seen_fids:
                issues.append(
                    ValidationIssue("repeated-facility", (a.request_index, fid), "facility listed twice in one assignment")
                )
            seen_fids.add(fid)
            fac = by_id[fid]
            if mask & ~(fac.config & req.commodities):
                issues.append(
                    ValidationIssue(
                        "cover-outside-config",
                        (a.request_index, fid),
                        "covered set must lie inside facility config and request demand",
                    )
                )
            covered |= mask & fac.config
        missing = req.commodities & ~covered
        for e in indices_from_config(missing):
            issues.append(
                ValidationIssue("uncovered", (a.request_index, e), f"commodity {e} of request {a.request_index} unserved")
            )
    return ValidationReport(tuple(issues))


def evaluate_cost(inst: Instance, sol: Solution) -> CostBreakdown:
    """Construction plus connection cost of a feasible solution.

    Raises ``InfeasibleSolutionError`` naming the first uncovered
    (request, commodity) pair if the solution is not feasible.
    """
    report = check_feasible(inst, sol)
    for issue in report.issues:
        if issue.kind == "uncovered":
            raise InfeasibleSolutionError(issue.where[0], issue.where[1])
        raise FormatError(f"malformed solution: {issue.kind} at {issue.where}: {issue.detail}")

    construction: Num = 0
    for fac in sol.facilities:
        construction = construction + fac.paid_cost

    by_id = {fac.id: fac for fac in sol.facilities}
    connection: Num = 0
    for a in sol.assignments:
        req = inst.requests[a.request_index]
        # distance per distinct facility, regardless of covered multiplicity
        for fid in {fid for fid, _ in a.connections}:
            connection = connection + inst.d(req.point, by_id[fid].point)
    return CostBreakdown(construction=construction, connection=connection)


def split_requests(inst: Instance) -> Instance:
    """Expand each request into one single-commodity request per demanded item.

    The split requests are consecutive, in ascending commodity order, at the
    original point; metric and cost model are unchanged.
    """
    new_requests: List[Request] = []
    for req in inst.requests:
        for e in req.commodity_list():
            new_requests.append(
                Request(point=req.point, commodities=1 << e, arrival_index=len(new_requests))
            )
    return Instance(
        metric=inst.metric,
        cost=inst.cost,
        num_commodities=inst.num_commodities,
        requests=tuple(new_requests),
        known_opt_upper_bound=inst.known_opt_upper_bound,
    )


def lift_solution_to_split(inst: Instance, split: Instance, sol: Solution) -> Solution:
    """Carry a solution of ``inst`` over to ``split_requests(inst)``.

    Each split request connects to the facility that covered its commodity in
    the original assignment.
    """
    by_id = {fac.id: fac for fac in sol.facilities}
    assignments: List[Assignment] = []
    k = 0
    for a in sorted(sol.assignments, key=lambda a: a.request_index):
        req = inst.requests[a.request_index]
        for e in req.commodity_list():
            target = None
            for fid, mask in a.connections:
                if mask & (1 << e) and by_id[fid].config & (1 << e):
                    target = fid
                    break
            if target is None:
                raise InfeasibleSolutionError(a.request_index, e)
            assignments.append(Assignment(k, ((target, 1 << e),)))
            k += 1
    return make_solution(sol.facilities, assignments)


# ---------------------------------------------------------------------------
# document format (mirrors the instance format, used for golden traces)


def solution_to_document(inst: Instance, sol: Solution) -> dict:
    return {
        "facilities": [
            {
                "id": fac.id,
                "point": inst.metric.point_ids[fac.point],
                "config": indices_from_config(fac.config),
                "cost": number_to_json(fac.paid_cost),
            }
            for fac in sol.facilities
        ],
        "assignments": [
            {
                "request": a.request_index,
                "connections": [
                    {"facility": fid, "covers": indices_from_config(mask)}
                    for fid, mask in a.connections
                ],
            }
            for a in sol.assignments
        ],
    }


def serialize_solution(inst: Instance, sol: Solution) -> str:
    return json.dumps(solution_to_document(inst, sol), indent=2, sort_keys=True) + "\n"


def solution_from_document(inst: Instance, doc: dict) -> Solution:
    facilities = []
    for fdoc in doc.get("facilities", []):
        point = inst.metric.index_of(str(fdoc["point"]))
        config = config_from_indices(fdoc["config"], inst.num_commodities)
        facilities.append(
            Facility(
                id=int(fdoc["id"]),
                point=point,
                config=config,
                paid_cost=parse_number(fdoc["cost"]),
            )
        )
    assignments = []
    for adoc in doc.get("assignments", []):
        conns = tuple(
            (int(c["facility"]), config_from_indices(c["covers"], inst.num_commodities))
            for c in adoc.get("connections", [])
        )
        assignments.append(Assignment(int(adoc["request"]), conns))
    return make_solution(facilities, assignments)


def parse_solution(inst: Instance, text: str) -> Solution:
    try:
        doc = json.loads(text, parse_float=Fraction)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid document: {exc}") from exc
    return solution_from_document(inst, doc)
