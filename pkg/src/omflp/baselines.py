"""Reference strategies to measure against.

``run_per_commodity`` decomposes the problem into one single-commodity
instance per commodity, runs the randomized engine on each, and merges the
results; requests demanding k commodities pay k separate connections.

``run_no_prediction`` is the intentionally weak greedy that never offers a
commodity before it is requested: per uncovered commodity it either connects
to the nearest open facility offering it or opens the cheapest singleton
facility (cost plus distance), whichever is cheaper.
"""

from __future__ import annotations

from typing import Dict, List, Tuple

import numpy as np

from .instance import CostModel, Instance, Request, TABLE
from .numeric import INF, Num
from .solution import Assignment, Facility, Solution, make_solution
from .randomized import run_rand


def _single_commodity_view(inst: Instance, e: int) -> Tuple[Instance, List[int]]:
    """Restrict to commodity e: singleton costs, subsequence of its requests."""
    table = {
        (m, 1): inst.fcost(m, 1 << e) for m in range(inst.metric.size)
    }
    cost = CostModel(kind=TABLE, num_commodities=1, table=table)
    requests = []
    origin = []
    for req in inst.requests:
        if req.commodities & (1 << e):
            requests.append(
                Request(point=req.point, commodities=1, arrival_index=len(requests))
            )
            origin.append(req.arrival_index)
    sub = Instance(
        metric=inst.metric,
        cost=cost,
        num_commodities=1,
        requests=tuple(requests),
        known_opt_upper_bound=None,
    )
    return sub, origin


def _sub_seed(seed: int, e: int) -> int:
    return int(np.random.SeedSequence((seed, e)).generate_state(1, np.uint64)[0])


def run_per_commodity(inst: Instance, seed: int) -> Solution:
    """Solve each commodity separately with the randomized engine and merge."""
    facilities: List[Facility] = []
    conns_per_request: Dict[int, Dict[int, int]] = {
        r.arrival_index: {} for r in inst.requests
    }
    for e in range(inst.num_commodities):
        sub, origin = _single_commodity_view(inst, e)
        if not sub.requests:
            continue
        sub_solution = run_rand(sub, _sub_seed(seed, e))
        remap = {}
        for fac in sub_solution.facilities:
            fid = len(facilities)
            remap[fac.id] = fid
            facilities.append(
                Facility(
                    id=fid,
                    point=fac.point,
                    config=1 << e,
                    paid_cost=inst.fcost(fac.point, 1 << e),
                )
            )
        for a in sub_solution.assignments:
            target = conns_per_request[origin[a.request_index]]
            for sub_fid, _ in a.connections:
                fid = remap[sub_fid]
                target[fid] = target.get(fid, 0) | (1 << e)
    assignments = [
        Assignment(r, tuple(sorted(conns.items())))
        for r, conns in conns_per_request.items()
    ]
    return make_solution(facilities, assignments)


def run_no_prediction(inst: Instance) -> Solution:
    """Deterministic greedy that only ever opens singleton facilities."""
    facilities: List[Facility] = []
    assignments: List[Assignment] = []
    for req in inst.requests:
        conns: Dict[int, int] = {}
        for e in req.commodity_list():
            bit = 1 << e
            connect_fid = None
            connect_cost: Num = INF
            for fac in facilities:
                if fac.config & bit:
                    d = inst.d(req.point, fac.point)
                    if d < connect_cost:
                        connect_cost, connect_fid = d, fac.id
            open_point = None
            open_cost: Num = INF
            for m in range(inst.metric.size):
                c = inst.fcost(m, bit) + inst.d(req.point, m)
                if c < open_cost:
                    open_cost, open_point = c, m
            if connect_cost <= open_cost:
                fid = connect_fid
            else:
                fid = len(facilities)
                facilities.append(
                    Facility(
                        id=fid,
                        point=open_point,
                        config=bit,
                        paid_cost=inst.fcost(open_point, bit),
                    )
                )
            conns[fid] = conns.get(fid, 0) | bit
        assignments.append(Assignment(req.arrival_index, tuple(sorted(conns.items()))))
    return make_solution(facilities, assignments)
