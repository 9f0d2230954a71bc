"""Deterministic event-driven primal-dual online algorithm.

Every commodity a request demands carries an investment value that grows at
unit rate while the commodity is unserved.  Four tightness conditions stop
the growth:

1. connect-small: the investment reaches the distance of the nearest open
   facility offering the commodity; connect there, freeze.
2. connect-large: the request's total investment reaches the distance of the
   nearest facility offering everything; freeze all, connect the whole
   request there, and drop any temporary facilities it opened.
3. open-small: at some point, the investment past the distance plus the
   reinvested surplus of earlier requests covers the singleton construction
   cost; open a *temporary* single-commodity facility there and freeze.
4. open-large: same with the all-commodity cost and the pooled investments
   of all of the request's commodities; open a permanent full facility,
   then proceed as in 2.

Temporary facilities take part in distance queries immediately; they become
permanent when the request finishes without a connect-large/open-large
event.  Earlier requests reinvest ``min(investment, current distance to the
facility set)`` toward new facilities, which is what the surplus sums below
compute.  All four conditions are maintained as invariants; the optional
per-event checker verifies them after every event.

Arithmetic is exact (Fraction) whenever the instance data is exact, so
tie-breaking and tightness detection are reliable; float instances use a
small tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .errors import InvariantViolation
from .instance import Instance, Request, full_config, indices_from_config
from .numeric import EPS_TIGHT, INF, Num, is_exact, number_to_json, pos_part
from .solution import Assignment, Facility, Solution, make_solution

CONNECT_SMALL = 1
CONNECT_LARGE = 2
OPEN_SMALL = 3
OPEN_LARGE = 4

EVENT_NAMES = {
    CONNECT_SMALL: "connect_small",
    CONNECT_LARGE: "connect_large",
    OPEN_SMALL: "open_small",
    OPEN_LARGE: "open_large",
}


@dataclass(frozen=True)
class Event:
    kind: int
    raise_amount: Num
    commodity: Optional[int] = None
    point: Optional[int] = None


@dataclass(frozen=True)
class TraceEntry:
    request: int
    kind: int
    commodity: Optional[int]
    point: Optional[int]
    raise_amount: Num
    dual_total: Num  # sum of all investments after the event


@dataclass
class _Fac:
    point: int
    config: int
    paid_cost: Num
    temporary: bool


class DualState:
    """Mutable run state: investments, facility sets, and the event trace."""

    def __init__(self, inst: Instance):
        self.inst = inst
        self.full = full_config(inst.num_commodities)
        self.eps: Num = 0 if inst.exact else EPS_TIGHT
        self.a: Dict[Tuple[int, int], Num] = {}
        self.frozen: set = set()
        self.facilities: Dict[int, _Fac] = {}
        self._next_fid = 0
        self.trace: List[TraceEntry] = []
        self.dual_total: Num = 0
        # bookkeeping for the request currently being served
        self.current: Optional[Request] = None
        self.unserved: int = 0
        self.serving: Dict[int, int] = {}  # commodity -> facility id
        self.request_temps: List[int] = []
        self.connect_large_to: Optional[int] = None
        self.request_connections: Dict[int, Tuple[Tuple[int, int], ...]] = {}

    # -- facility set queries ------------------------------------------------

    def open_facility(self, point: int, config: int, temporary: bool) -> int:
        fid = self._next_fid
        self._next_fid += 1
        self.facilities[fid] = _Fac(
            point=point,
            config=config,
            paid_cost=self.inst.fcost(point, config),
            temporary=temporary,
        )
        return fid

    def small_facilities(self, e: int) -> List[Tuple[int, _Fac]]:
        bit = 1 << e
        return [
            (fid, fac)
            for fid, fac in self.facilities.items()
            if fac.config == bit
        ]

    def large_facilities(self) -> List[Tuple[int, _Fac]]:
        return [
            (fid, fac)
            for fid, fac in self.facilities.items()
            if fac.config & self.full == self.full
        ]

    def dist_offering(self, e: int, point: int) -> Num:
        """Distance from a point to the nearest open facility offering e."""
        bit = 1 << e
        best: Num = INF
        for fac in self.facilities.values():
            if fac.config & bit:
                d = self.inst.d(point, fac.point)
                if d < best:
                    best = d
        return best

    def dist_large(self, point: int) -> Num:
        best: Num = INF
        for fac in self.facilities.values():
            if fac.config & self.full == self.full:
                d = self.inst.d(point, fac.point)
                if d < best:
                    best = d
        return best

    def request_dual_sum(self, r: int, commodities: int) -> Num:
        total: Num = 0
        for e in indices_from_config(commodities):
            total = total + self.a.get((r, e), 0)
        return total

    def freeze(self, r: int, e: int) -> None:
        key = (r, e)
        if key in self.frozen:
            raise InvariantViolation(f"investment {key} frozen twice")
        self.frozen.add(key)


def _div(value: Num, k: int) -> Num:
    if is_exact(value):
        return Fraction(value) / k
    return value / k


def _surplus_small(state: DualState, e: int, m: int, before: int) -> Num:
    """Reinvested surplus of earlier requests toward a singleton facility at m."""
    inst = state.inst
    bit = 1 << e
    total: Num = 0
    for j in range(before):
        rq = inst.requests[j]
        if not rq.commodities & bit:
            continue
        a_je = state.a.get((j, e), 0)
        cap = state.dist_offering(e, rq.point)
        bid = a_je if a_je <= cap else cap
        total = total + pos_part(bid - inst.d(m, rq.point))
    return total


def _surplus_large(state: DualState, m: int, before: int) -> Num:
    """Reinvested surplus of earlier requests toward a full facility at m."""
    inst = state.inst
    total: Num = 0
    for j in range(before):
        rq = inst.requests[j]
        sum_aj = state.request_dual_sum(j, rq.commodities)
        cap = state.dist_large(rq.point)
        bid = sum_aj if sum_aj <= cap else cap
        total = total + pos_part(bid - inst.d(m, rq.point))
    return total


def constraint_slack(
    state: DualState,
    inst: Instance,
    req: Request,
    which: int,
    e: Optional[int] = None,
    m: Optional[int] = None,
) -> Num:
    """RHS minus LHS of one of the four conditions at the current state.

    Conditions 1 and 2 apply to the request currently raising its
    investments; 3 and 4 hold for every request at every point.  Distances to
    empty facility sets are infinite, making the slack infinite.
    """
    r = req.arrival_index
    if which == 1:
        if e is None:
            raise ValueError("condition 1 needs a commodity")
        return state.dist_offering(e, req.point) - state.a.get((r, e), 0)
    if which == 2:
        return state.dist_large(req.point) - state.request_dual_sum(r, req.commodities)
    if which == 3:
        if e is None or m is None:
            raise ValueError("condition 3 needs a commodity and a point")
        first = pos_part(state.a.get((r, e), 0) - inst.d(m, req.point))
        return inst.fcost(m, 1 << e) - first - _surplus_small(state, e, m, r)
    if which == 4:
        if m is None:
            raise ValueError("condition 4 needs a point")
        first = pos_part(
            state.request_dual_sum(r, req.commodities) - inst.d(m, req.point)
        )
        return inst.fcost(m, state.full) - first - _surplus_large(state, m, r)
    raise ValueError(f"unknown condition {which}")


def next_event(
    state: DualState, inst: Instance, req: Request, unserved: Optional[int] = None
) -> Event:
    """Smallest nonnegative simultaneous raise that makes a condition tight.

    Ties break by kind (connect before open, small before large), then lowest
    commodity index, then lowest point index.  Open-small candidates are
    always finite, so an event always exists.
    """
    U = state.unserved if unserved is None else unserved
    if U == 0:
        raise ValueError("no unserved commodities")
    r = req.arrival_index
    active = indices_from_config(U)
    k = len(active)
    sum_a = state.request_dual_sum(r, req.commodities)
    rp = req.point
    candidates: List[Tuple[Num, int, int, int]] = []

    # earlier-request bids are constant within one event; cache them
    bids_small: Dict[int, List[Tuple[int, Num]]] = {}
    for e in active:
        bit = 1 << e
        lst = []
        for j in range(r):
            rq = inst.requests[j]
            if rq.commodities & bit:
                a_je = state.a.get((j, e), 0)
                cap = state.dist_offering(e, rq.point)
                lst.append((rq.point, a_je if a_je <= cap else cap))
        bids_small[e] = lst
    bids_large: List[Tuple[int, Num]] = []
    for j in range(r):
        rq = inst.requests[j]
        sum_aj = state.request_dual_sum(j, rq.commodities)
        cap = state.dist_large(rq.point)
        bids_large.append((rq.point, sum_aj if sum_aj <= cap else cap))

    for e in active:
        d_fe = state.dist_offering(e, rp)
        if d_fe < INF:
            candidates.append(
                (pos_part(d_fe - state.a.get((r, e), 0)), CONNECT_SMALL, e, -1)
            )
    d_hat = state.dist_large(rp)
    if d_hat < INF:
        candidates.append((pos_part(_div(d_hat - sum_a, k)), CONNECT_LARGE, -1, -1))
    for e in active:
        a_re = state.a.get((r, e), 0)
        for m in range(inst.metric.size):
            phi: Num = 0
            for p, bid in bids_small[e]:
                phi = phi + pos_part(bid - inst.d(m, p))
            t3 = inst.d(m, rp) + inst.fcost(m, 1 << e) - phi - a_re
            candidates.append((pos_part(t3), OPEN_SMALL, e, m))
    for m in range(inst.metric.size):
        psi: Num = 0
        for p, bid in bids_large:
            psi = psi + pos_part(bid - inst.d(m, p))
        t4 = inst.d(m, rp) + inst.fcost(m, state.full) - psi - sum_a
        candidates.append((pos_part(_div(t4, k)), OPEN_LARGE, -1, m))

    t_min = min(c[0] for c in candidates)
    eligible = [c for c in candidates if c[0] <= t_min + state.eps]
    t, kind, e, m = min(eligible, key=lambda c: (c[1], c[2], c[3]))
    return Event(
        kind=kind,
        raise_amount=t,
        commodity=e if e >= 0 else None,
        point=m if m >= 0 else None,
    )


def _nearest(state: DualState, point: int, fids) -> int:
    best = None
    for fid in fids:
        fac = state.facilities[fid]
        key = (state.inst.d(point, fac.point), fac.point, fid)
        if best is None or key < best[0]:
            best = (key, fid)
    assert best is not None
    return best[1]


def apply_event(state: DualState, inst: Instance, req: Request, ev: Event) -> None:
    """Raise the active investments by the event amount and act on it."""
    r = req.arrival_index
    bitfull = state.full
    for e in indices_from_config(state.unserved):
        state.a[(r, e)] = state.a.get((r, e), 0) + ev.raise_amount
        state.dual_total = state.dual_total + ev.raise_amount

    if ev.kind == CONNECT_SMALL:
        e = ev.commodity
        offering = [
            fid for fid, fac in state.facilities.items() if fac.config & (1 << e)
        ]
        target = _nearest(state, req.point, offering)
        state.serving[e] = target
        state.freeze(r, e)
        state.unserved &= ~(1 << e)
    elif ev.kind == OPEN_SMALL:
        e = ev.commodity
        fid = state.open_facility(ev.point, 1 << e, temporary=True)
        state.request_temps.append(fid)
        state.serving[e] = fid
        state.freeze(r, e)
        state.unserved &= ~(1 << e)
    else:
        if ev.kind == OPEN_LARGE:
            state.open_facility(ev.point, bitfull, temporary=False)
        for fid in state.request_temps:
            del state.facilities[fid]
        state.request_temps.clear()
        for e in indices_from_config(state.unserved):
            state.freeze(r, e)
        state.unserved = 0
        larges = [
            fid
            for fid, fac in state.facilities.items()
            if fac.config & bitfull == bitfull
        ]
        state.connect_large_to = _nearest(state, req.point, larges)
        state.serving.clear()

    state.trace.append(
        TraceEntry(
            request=r,
            kind=ev.kind,
            commodity=ev.commodity,
            point=ev.point,
            raise_amount=ev.raise_amount,
            dual_total=state.dual_total,
        )
    )


def _begin_request(state: DualState, req: Request) -> None:
    state.current = req
    state.unserved = req.commodities
    state.serving = {}
    state.request_temps = []
    state.connect_large_to = None
    for e in req.commodity_list():
        state.a[(req.arrival_index, e)] = 0


def _finish_request(state: DualState, req: Request) -> None:
    # surviving temporaries become permanent
    for fid in state.request_temps:
        state.facilities[fid].temporary = False
    state.request_temps = []
    if state.connect_large_to is not None:
        connections = ((state.connect_large_to, req.commodities),)
    else:
        grouped: Dict[int, int] = {}
        for e, fid in state.serving.items():
            grouped[fid] = grouped.get(fid, 0) | (1 << e)
        connections = tuple(sorted(grouped.items()))
    state.request_connections[req.arrival_index] = connections
    state.current = None


def run_pd(inst: Instance, check_invariants: bool = False) -> Tuple[Solution, DualState]:
    """Serve the request sequence in arrival order; deterministic.

    With ``check_invariants`` the four conditions are re-verified after every
    event (slower); a violation raises ``InvariantViolation``.
    """
    state = DualState(inst)
    for req in inst.requests:
        _begin_request(state, req)
        while state.unserved:
            ev = next_event(state, inst, req)
            apply_event(state, inst, req, ev)
            if check_invariants:
                assert_invariants(state, inst, req)
        _finish_request(state, req)
    return _build_solution(state), state


def _build_solution(state: DualState) -> Solution:
    renumber = {}
    facilities = []
    for fid in sorted(state.facilities):
        fac = state.facilities[fid]
        assert not fac.temporary
        renumber[fid] = len(facilities)
        facilities.append(
            Facility(
                id=len(facilities),
                point=fac.point,
                config=fac.config,
                paid_cost=fac.paid_cost,
            )
        )
    assignments = []
    for r in sorted(state.request_connections):
        conns = tuple(
            (renumber[fid], mask) for fid, mask in state.request_connections[r]
        )
        assignments.append(Assignment(r, conns))
    return make_solution(facilities, assignments)


# ---------------------------------------------------------------------------
# invariant checking


def assert_invariants(state: DualState, inst: Instance, req: Request) -> Num:
    """Verify all four conditions after an event; returns the minimum slack.

    Conditions 3 and 4 are checked for every request seen so far and every
    point; 1 and 2 for the still-raising commodities of the current request.
    Raises ``InvariantViolation`` if any slack falls below the tolerance.
    """
    eps = EPS_TIGHT
    r_cur = req.arrival_index
    processed = inst.requests[: r_cur + 1]
    M = inst.metric.size
    min_slack: Num = INF

    def note(slack: Num, label: str):
        nonlocal min_slack
        if slack < min_slack:
            min_slack = slack
        if slack < -eps:
            raise InvariantViolation(f"{label}: slack {slack} below -{eps}")

    seen_mask = 0
    for rq in processed:
        seen_mask |= rq.commodities

    # cached facility-set distances per processed request
    dmin_small = {
        e: [state.dist_offering(e, rq.point) for rq in processed]
        for e in indices_from_config(seen_mask)
    }
    dmin_large = [state.dist_large(rq.point) for rq in processed]
    sums = [state.request_dual_sum(j, rq.commodities) for j, rq in enumerate(processed)]

    if state.unserved:
        for e in indices_from_config(state.unserved):
            note(dmin_small[e][r_cur] - state.a.get((r_cur, e), 0), f"cond1 e={e}")
        note(dmin_large[r_cur] - sums[r_cur], "cond2")

    for e in indices_from_config(seen_mask):
        bit = 1 << e
        for m in range(M):
            f_em = inst.fcost(m, bit)
            running: Num = 0
            for j, rq in enumerate(processed):
                if not rq.commodities & bit:
                    continue
                a_je = state.a.get((j, e), 0)
                d_mj = inst.d(m, rq.point)
                note(f_em - pos_part(a_je - d_mj) - running, f"cond3 e={e} m={m} r={j}")
                cap = dmin_small[e][j]
                bid = a_je if a_je <= cap else cap
                running = running + pos_part(bid - d_mj)

    for m in range(M):
        f_sm = inst.fcost(m, state.full)
        running = 0
        for j, rq in enumerate(processed):
            d_mj = inst.d(m, rq.point)
            note(f_sm - pos_part(sums[j] - d_mj) - running, f"cond4 m={m} r={j}")
            cap = dmin_large[j]
            bid = sums[j] if sums[j] <= cap else cap
            running = running + pos_part(bid - d_mj)

    return min_slack


# ---------------------------------------------------------------------------
# trace export


def trace_to_document(inst: Instance, state: DualState) -> list:
    return [
        {
            "request": t.request,
            "event": EVENT_NAMES[t.kind],
            "commodity": t.commodity,
            "point": None if t.point is None else inst.metric.point_ids[t.point],
            "raise": number_to_json(t.raise_amount),
            "dual_total": number_to_json(t.dual_total),
        }
        for t in state.trace
    ]
