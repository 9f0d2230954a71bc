"""Randomized online algorithm driven by power-of-two cost classes.

For every configuration of interest (each singleton and the full set), the
distinct facility costs rounded down to powers of two form the *classes*
``C_1 < C_2 < ...``.  The distance table ``d(C_i, m)`` holds the distance
from ``m`` to the nearest point whose class is *at most* ``i`` (cumulative
reading), so the table is non-increasing in ``i`` and the per-class distance
improvements telescope.  A literal per-class table is available behind a
flag for comparison; it can produce negative improvements.

Per request, two budgets are computed from the current facility sets: the
per-commodity small-route bound ``X`` and the single-large-facility bound
``Z``.  Seeding ``d(C_0) := min(Z, X)``, each class of each configuration
flips an independent coin with success probability proportional to its
distance improvement divided by its class cost (small-facility coins are
additionally scaled by the commodity's share of ``X``).  Probabilities are
clamped into [0, 1]; clamp events are counted.  After the coins, the request
connects by the cheaper of the large route and the per-commodity route; a
deterministic fallback opening keeps every run feasible.

Randomness: one independent generator per request, keyed by (seed, arrival
index), so trial parallelism cannot change results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .instance import Instance, Request, full_config, indices_from_config
from .numeric import INF, Num, exact_div, number_to_json
from .solution import Assignment, Facility, Solution, make_solution


def _pow2_floor(value: Num) -> Num:
    """Largest power of two that is <= value; exact for exact inputs."""
    if value <= 0:
        raise ValueError("costs must be strictly positive")
    exp = math.floor(math.log2(float(value)))
    # float log can be off by one at powers of two; settle it exactly
    for cand in (exp + 1, exp, exp - 1):
        p = 2**cand if cand >= 0 else _half_power(-cand)
        if p <= value:
            return p
    raise AssertionError("unreachable")


def _half_power(k: int):
    from fractions import Fraction

    return Fraction(1, 2**k)


@dataclass(frozen=True)
class ConfigClasses:
    """Classes for one configuration: values, point classes, distance tables."""

    config: int
    values: Tuple[Num, ...]  # ascending distinct powers of two
    point_class: Tuple[int, ...]  # 1-based class index per point
    # dist[i][m]: distance from m to nearest point of class <= i+1 (cumulative)
    dist: Tuple[Tuple[Num, ...], ...]
    # nearest[i][m]: the point realising dist[i][m] (lowest index on ties)
    nearest: Tuple[Tuple[int, ...], ...]
    # literal variant: distance to nearest point of class exactly i+1
    dist_literal: Tuple[Tuple[Num, ...], ...]
    nearest_literal: Tuple[Tuple[int, ...], ...]


@dataclass(frozen=True)
class ClassIndex:
    per_commodity: Tuple[ConfigClasses, ...]  # index e -> classes for {e}
    full: ConfigClasses  # classes for the all-commodity configuration


def _build_config_classes(inst: Instance, config: int) -> ConfigClasses:
    M = inst.metric.size
    floors = [_pow2_floor(inst.fcost(m, config)) for m in range(M)]
    values = sorted(set(floors))
    index_of = {v: i + 1 for i, v in enumerate(values)}
    point_class = tuple(index_of[f] for f in floors)

    dist_rows: List[Tuple[Num, ...]] = []
    near_rows: List[Tuple[int, ...]] = []
    lit_dist_rows: List[Tuple[Num, ...]] = []
    lit_near_rows: List[Tuple[int, ...]] = []
    for i in range(1, len(values) + 1):
        cum_d, cum_p, lit_d, lit_p = [], [], [], []
        for m in range(M):
            best_c: Num = INF
            best_cp = -1
            best_l: Num = INF
            best_lp = -1
            for p in range(M):
                d = inst.d(m, p)
                if point_class[p] <= i and d < best_c:
                    best_c, best_cp = d, p
                if point_class[p] == i and d < best_l:
                    best_l, best_lp = d, p
            cum_d.append(best_c)
            cum_p.append(best_cp)
            lit_d.append(best_l)
            lit_p.append(best_lp)
        dist_rows.append(tuple(cum_d))
        near_rows.append(tuple(cum_p))
        lit_dist_rows.append(tuple(lit_d))
        lit_near_rows.append(tuple(lit_p))
    return ConfigClasses(
        config=config,
        values=tuple(values),
        point_class=point_class,
        dist=tuple(dist_rows),
        nearest=tuple(near_rows),
        dist_literal=tuple(lit_dist_rows),
        nearest_literal=tuple(lit_near_rows),
    )


def build_classes(inst: Instance) -> ClassIndex:
    per_commodity = tuple(
        _build_config_classes(inst, 1 << e) for e in range(inst.num_commodities)
    )
    return ClassIndex(
        per_commodity=per_commodity,
        full=_build_config_classes(inst, full_config(inst.num_commodities)),
    )


# ---------------------------------------------------------------------------
# run state


@dataclass
class RandState:
    inst: Instance
    facilities: List[Facility] = field(default_factory=list)

    def open_facility(self, point: int, config: int) -> Optional[int]:
        """Open unless a facility at the point already offers a superset."""
        for fac in self.facilities:
            if fac.point == point and fac.config & config == config:
                return None
        fid = len(self.facilities)
        self.facilities.append(
            Facility(
                id=fid, point=point, config=config, paid_cost=self.inst.fcost(point, config)
            )
        )
        return fid

    def dist_offering(self, e: int, point: int) -> Num:
        bit = 1 << e
        best: Num = INF
        for fac in self.facilities:
            if fac.config & bit:
                d = self.inst.d(point, fac.point)
                if d < best:
                    best = d
        return best

    def nearest_offering(self, e: int, point: int) -> Optional[int]:
        bit = 1 << e
        best = None
        for fac in self.facilities:
            if fac.config & bit:
                key = (self.inst.d(point, fac.point), fac.point, fac.id)
                if best is None or key < best[0]:
                    best = (key, fac.id)
        return None if best is None else best[1]

    def dist_large(self, point: int) -> Num:
        full = full_config(self.inst.num_commodities)
        best: Num = INF
        for fac in self.facilities:
            if fac.config & full == full:
                d = self.inst.d(point, fac.point)
                if d < best:
                    best = d
        return best

    def nearest_large(self, point: int) -> Optional[int]:
        full = full_config(self.inst.num_commodities)
        best = None
        for fac in self.facilities:
            if fac.config & full == full:
                key = (self.inst.d(point, fac.point), fac.point, fac.id)
                if best is None or key < best[0]:
                    best = (key, fac.id)
        return None if best is None else best[1]


def compute_budgets(
    state: RandState, classes: ClassIndex, req: Request
) -> Tuple[Dict[int, Num], Num, Num]:
    """Small-route budgets per commodity, their sum, and the large-route budget.

    Each budget is the cheaper of connecting to an existing facility and
    building the best class (class cost plus distance to it); empty facility
    sets contribute infinity to the outer minimum.
    """
    x_map: Dict[int, Num] = {}
    for e in req.commodity_list():
        cc = classes.per_commodity[e]
        best = state.dist_offering(e, req.point)
        for i, c in enumerate(cc.values):
            cand = c + cc.dist[i][req.point]
            if cand < best:
                best = cand
        x_map[e] = best
    x_total: Num = 0
    for v in x_map.values():
        x_total = x_total + v
    cc = classes.full
    z: Num = state.dist_large(req.point)
    for i, c in enumerate(cc.values):
        cand = c + cc.dist[i][req.point]
        if cand < z:
            z = cand
    return x_map, x_total, z


@dataclass
class CoinRecord:
    config: int  # bitmask of the configuration the coin belongs to
    class_index: int  # 1-based
    p_raw: Num  # before clamping (can be negative or exceed 1)
    p: Num  # after clamping into [0, 1]
    heads: bool
    opened_point: Optional[int]  # None if tails or superset-skipped
    skipped: bool


@dataclass
class RequestTrace:
    request: int
    x_map: Dict[int, Num]
    x_total: Num
    z: Num
    coins: List[CoinRecord] = field(default_factory=list)
    fallback_points: List[Tuple[int, int]] = field(default_factory=list)  # (e, point)
    connections: Tuple[Tuple[int, int], ...] = ()
    clamp_events: int = 0
    # telescoping data per configuration: (sum of raw improvements, d(C_0) - d(C_last))
    telescoping: Dict[int, Tuple[Num, Num]] = field(default_factory=dict)


def _class_coins(
    cc: ConfigClasses,
    point: int,
    budget: Num,
    share: Num,
    rng,
    state: RandState,
    trace: RequestTrace,
    literal: bool,
) -> None:
    """Flip one coin per class of one configuration; open on success."""
    dist = cc.dist_literal if literal else cc.dist
    near = cc.nearest_literal if literal else cc.nearest
    prev: Num = budget
    raw_charge: Num = 0
    last: Num = dist[-1][point] if dist else budget
    for i, c in enumerate(cc.values):
        d_i = dist[i][point]
        improvement = prev - d_i
        p_raw = exact_div(improvement, c) * share
        raw_charge = raw_charge + p_raw * c
        p = p_raw
        if p < 0:
            p = 0
            trace.clamp_events += 1
        elif p > 1:
            p = 1
            trace.clamp_events += 1
        heads = rng.random() < float(p)
        opened_point = None
        skipped = False
        if heads:
            target = near[i][point]
            if target >= 0:
                fid = state.open_facility(target, cc.config)
                if fid is None:
                    skipped = True
                else:
                    opened_point = target
        trace.coins.append(
            CoinRecord(
                config=cc.config,
                class_index=i + 1,
                p_raw=p_raw,
                p=p,
                heads=heads,
                opened_point=opened_point,
                skipped=skipped,
            )
        )
        prev = d_i
    trace.telescoping[cc.config] = (raw_charge, (budget - last) * share)


def step_rand(
    state: RandState,
    classes: ClassIndex,
    inst: Instance,
    req: Request,
    rng,
    literal: bool = False,
) -> RequestTrace:
    """Serve one request: budgets, class coins, openings, connection, fallback."""
    x_map, x_total, z = compute_budgets(state, classes, req)
    trace = RequestTrace(request=req.arrival_index, x_map=x_map, x_total=x_total, z=z)
    budget = z if z <= x_total else x_total

    for e in req.commodity_list():
        if x_total > 0:
            share = exact_div(x_map[e], x_total)
        else:
            # zero budget: an open facility already serves e at distance zero
            share = 0
        _class_coins(classes.per_commodity[e], req.point, budget, share, rng, state, trace, literal)
    _class_coins(classes.full, req.point, budget, 1, rng, state, trace, literal)

    # feasibility fallback: open the small facility realising the inner
    # minimum of the commodity's budget
    for e in req.commodity_list():
        if state.dist_offering(e, req.point) == INF:
            cc = classes.per_commodity[e]
            best = None
            for i, c in enumerate(cc.values):
                key = (c + cc.dist[i][req.point], i, cc.nearest[i][req.point])
                if best is None or key < best:
                    best = key
            assert best is not None
            target = best[2]
            state.open_facility(target, 1 << e)
            trace.fallback_points.append((e, target))

    # connect: single large facility vs per-commodity nearest, whichever is
    # cheaper (ties prefer the single connection)
    large_fid = state.nearest_large(req.point)
    large_cost: Num = INF if large_fid is None else inst.d(req.point, state.facilities[large_fid].point)
    small_cost: Num = 0
    small_targets: Dict[int, int] = {}
    for e in req.commodity_list():
        fid = state.nearest_offering(e, req.point)
        assert fid is not None  # fallback guarantees coverage
        small_targets[e] = fid
        small_cost = small_cost + inst.d(req.point, state.facilities[fid].point)
    if large_fid is not None and large_cost <= small_cost:
        connections = ((large_fid, req.commodities),)
    else:
        grouped: Dict[int, int] = {}
        for e, fid in small_targets.items():
            grouped[fid] = grouped.get(fid, 0) | (1 << e)
        connections = tuple(sorted(grouped.items()))
    trace.connections = connections
    return trace


def _request_rng(seed: int, arrival_index: int):
    return np.random.default_rng(np.random.SeedSequence((seed, arrival_index)))


def run_rand(inst: Instance, seed: int, literal: bool = False) -> Solution:
    solution, _ = run_rand_traced(inst, seed, literal=literal)
    return solution


def run_rand_traced(
    inst: Instance, seed: int, literal: bool = False
) -> Tuple[Solution, List[RequestTrace]]:
    """Seed-reproducible run; returns the solution and per-request traces."""
    classes = build_classes(inst)
    state = RandState(inst)
    traces: List[RequestTrace] = []
    assignments: List[Assignment] = []
    for req in inst.requests:
        rng = _request_rng(seed, req.arrival_index)
        trace = step_rand(state, classes, inst, req, rng, literal=literal)
        traces.append(trace)
        assignments.append(Assignment(req.arrival_index, trace.connections))
    return make_solution(state.facilities, assignments), traces


def trace_to_document(inst: Instance, traces: List[RequestTrace], seed: int) -> dict:
    """Golden-trace export: budgets, coins, openings, and connections."""

    def config_name(mask: int) -> str:
        if mask == full_config(inst.num_commodities):
            return "all"
        return ",".join(str(e) for e in indices_from_config(mask))

    return {
        "seed": seed,
        "requests": [
            {
                "request": t.request,
                "budgets": {
                    "per_commodity": {
                        str(e): number_to_json(v) for e, v in sorted(t.x_map.items())
                    },
                    "small_route": number_to_json(t.x_total),
                    "large_route": number_to_json(t.z),
                },
                "coins": [
                    {
                        "config": config_name(c.config),
                        "class": c.class_index,
                        "p": number_to_json(c.p),
                        "heads": c.heads,
                        "opened": None
                        if c.opened_point is None
                        else inst.metric.point_ids[c.opened_point],
                        "skipped": c.skipped,
                    }
                    for c in t.coins
                ],
                "fallback": [
                    {"commodity": e, "point": inst.metric.point_ids[p]}
                    for e, p in t.fallback_points
                ],
                "connections": [
                    {"facility": fid, "covers": indices_from_config(mask)}
                    for fid, mask in t.connections
                ],
                "clamp_events": t.clamp_events,
            }
            for t in traces
        ],
    }
