"""Exact offline optimum for desk-scale instances, plus dual-side checkers.

The solver enumerates one configuration per point (merging facilities at a
point never hurts once the cost model is subadditive, which is enforced as a
precondition) and, for every configuration vector, the cheapest way to
connect each request: a minimum-weight cover of its demand by the open
facilities, found by enumerating facility subsets.  Configuration vectors
whose construction cost alone already exceeds the incumbent are pruned.

``solve_opt_vectorized`` is an independent cross-check that enumerates the
per-request facility subsets first, scanning the whole vector space with
numpy and no pruning.  On integer-valued instances both routes are exact and
must agree to the digit.

``check_dual_feasibility`` verifies the packing constraints of the scaled
dual: for every point and nonempty configuration, the clipped sum of scaled
investments minus distances stays below the construction cost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .errors import OmflpError, OracleLimitError
from .instance import Instance, check_subadditivity, full_config
from .numeric import EPS_TIGHT, INF, Num, is_exact, pos_part
from .solution import Assignment, Facility, Solution, make_solution


def harmonic(n: int) -> Num:
    """n-th harmonic number as an exact partial sum."""
    if n < 0:
        raise ValueError("harmonic number needs n >= 0")
    total = Fraction(0)
    for k in range(1, n + 1):
        total += Fraction(1, k)
    return int(total) if total.denominator == 1 else total


def gamma(S_size: int, n: int) -> Num:
    """Dual scaling factor 1 / (5 * sqrt(|S|) * H_n), exact for square |S|."""
    if S_size < 1:
        raise ValueError("need at least one commodity")
    if n < 1:
        raise ValueError("need at least one request")
    h = harmonic(n)
    r = math.isqrt(S_size)
    if r * r == S_size:
        return Fraction(1, 5 * r) / Fraction(h)
    return 1.0 / (5.0 * math.sqrt(S_size) * float(h))


@dataclass(frozen=True)
class OracleLimits:
    max_points: int = 4
    max_commodities: int = 4
    max_requests: int = 10
    max_vectors: int = 1 << 20


@dataclass(frozen=True)
class OptResult:
    solution: Solution
    cost: Num
    nodes_explored: int


def _check_limits(inst: Instance, limits: OracleLimits) -> None:
    reasons = {}
    if inst.metric.size > limits.max_points:
        reasons["points"] = {"have": inst.metric.size, "max": limits.max_points}
    if inst.num_commodities > limits.max_commodities:
        reasons["commodities"] = {"have": inst.num_commodities, "max": limits.max_commodities}
    if inst.n > limits.max_requests:
        reasons["requests"] = {"have": inst.n, "max": limits.max_requests}
    vectors = (1 << inst.num_commodities) ** inst.metric.size
    if vectors > limits.max_vectors:
        reasons["vectors"] = {"have": vectors, "max": limits.max_vectors}
    if reasons:
        raise OracleLimitError(reasons)


def _require_subadditive(inst: Instance) -> None:
    if check_subadditivity(inst.cost, inst.metric):
        raise OmflpError(
            "exact solver requires a subadditive cost model "
            "(one facility per point is otherwise not exhaustive)"
        )


def solve_opt_bruteforce(inst: Instance, limits: Optional[OracleLimits] = None) -> OptResult:
    """Exact optimum by enumeration; refuses over-limit instances explicitly."""
    limits = limits or OracleLimits()
    _check_limits(inst, limits)
    _require_subadditive(inst)

    M = inst.metric.size
    full = full_config(inst.num_commodities)
    # candidate configurations per point, cheap first; mask 0 means "no facility"
    options: List[List[Tuple[Num, int]]] = []
    for m in range(M):
        opts = [(0, 0)]
        opts.extend((inst.fcost(m, mask), mask) for mask in range(1, full + 1))
        opts.sort(key=lambda t: (t[0], t[1]))
        options.append(opts)
    demands = [r.commodities for r in inst.requests]
    dists = [[inst.d(r.point, m) for m in range(M)] for r in inst.requests]

    best_cost: Num = INF
    best_vector: Optional[Tuple[int, ...]] = None
    nodes = 0
    vector = [0] * M

    def leaf():
        nonlocal best_cost, best_vector, nodes
        open_points = [m for m in range(M) if vector[m]]
        construction: Num = 0
        for m in open_points:
            construction = construction + inst.fcost(m, vector[m])
        total = construction
        for r in range(len(demands)):
            covered_best = _best_cover_cost(open_points, vector, demands[r], dists[r])
            if covered_best is None:
                return  # this vector cannot serve request r
            total = total + covered_best
            if total > best_cost:
                return
        candidate = tuple(vector)
        if total < best_cost or (total == best_cost and (best_vector is None or candidate < best_vector)):
            best_cost = total
            best_vector = candidate

    def dfs(m: int, construction: Num):
        nonlocal nodes
        nodes += 1
        if construction > best_cost:
            return
        if m == M:
            leaf()
            return
        for fc, mask in options[m]:
            if construction + fc > best_cost:
                break  # options are sorted by cost
            vector[m] = mask
            dfs(m + 1, construction + fc)
        vector[m] = 0

    dfs(0, 0)
    assert best_vector is not None
    solution = _solution_for_vector(inst, best_vector)
    return OptResult(solution=solution, cost=best_cost, nodes_explored=nodes)


def _best_cover_cost(open_points, vector, demand, dist_row) -> Optional[Num]:
    best = None
    k = len(open_points)
    for t in range(1, 1 << k):
        union = 0
        cost: Num = 0
        tt = t
        idx = 0
        while tt:
            if tt & 1:
                m = open_points[idx]
                union |= vector[m]
                cost = cost + dist_row[m]
            tt >>= 1
            idx += 1
        if union & demand == demand and (best is None or cost < best):
            best = cost
    return best


def _solution_for_vector(inst: Instance, vector: Tuple[int, ...]) -> Solution:
    facilities = []
    fid_of_point = {}
    for m, mask in enumerate(vector):
        if mask:
            fid_of_point[m] = len(facilities)
            facilities.append(
                Facility(id=len(facilities), point=m, config=mask, paid_cost=inst.fcost(m, mask))
            )
    open_points = sorted(fid_of_point)
    assignments = []
    for r, req in enumerate(inst.requests):
        dist_row = [inst.d(req.point, m) for m in range(inst.metric.size)]
        best = None
        best_set: Optional[Tuple[int, ...]] = None
        k = len(open_points)
        for t in range(1, 1 << k):
            members = [open_points[i] for i in range(k) if t & (1 << i)]
            union = 0
            cost: Num = 0
            for m in members:
                union |= vector[m]
                cost = cost + dist_row[m]
            if union & req.commodities == req.commodities and (best is None or cost < best):
                best = cost
                best_set = tuple(members)
        assert best_set is not None
        # each commodity goes to the first facility (by point order) offering it
        covers: Dict[int, int] = {}
        for e in req.commodity_list():
            for m in best_set:
                if vector[m] & (1 << e):
                    fid = fid_of_point[m]
                    covers[fid] = covers.get(fid, 0) | (1 << e)
                    break
        assignments.append(Assignment(r, tuple(sorted(covers.items()))))
    return make_solution(facilities, assignments)


def solve_opt_vectorized(inst: Instance, limits: Optional[OracleLimits] = None) -> float:
    """Cross-check optimum: full scan with per-request facility subsets outermost.

    Exact on integer-valued instances (all arithmetic stays within float64
    integer range); approximate otherwise.
    """
    import numpy as np

    limits = limits or OracleLimits()
    _check_limits(inst, limits)
    _require_subadditive(inst)

    M = inst.metric.size
    base = 1 << inst.num_commodities
    N = base**M
    v = np.arange(N)
    # point 0 is the most significant digit so ascending index = ascending
    # lexicographic configuration vector
    idx = [(v // base ** (M - 1 - m)) % base for m in range(M)]

    cost_by_mask = []
    for m in range(M):
        arr = np.zeros(base, dtype=np.float64)
        for mask in range(1, base):
            arr[mask] = float(inst.fcost(m, mask))
        cost_by_mask.append(arr)
    total = np.zeros(N, dtype=np.float64)
    for m in range(M):
        total += cost_by_mask[m][idx[m]]

    for req in inst.requests:
        best = np.full(N, np.inf)
        for t in range(1, 1 << M):
            members = [m for m in range(M) if t & (1 << m)]
            union = np.zeros(N, dtype=np.int64)
            for m in members:
                union |= idx[m]
            ok = (union & req.commodities) == req.commodities
            # subset cost is a scalar: distances do not depend on the vector
            cost_t = float(sum(inst.d(req.point, m) for m in members))
            np.minimum(best, np.where(ok, cost_t, np.inf), out=best)
        total += best

    i = int(np.argmin(total))
    result = float(total[i])
    if math.isinf(result):
        raise OmflpError("no feasible configuration vector found")
    return result


# ---------------------------------------------------------------------------
# dual feasibility


@dataclass(frozen=True)
class DualCertificate:
    a: Dict[Tuple[int, int], Num]  # (request index, commodity) -> investment
    gamma: Num

    def __post_init__(self):
        for key, value in self.a.items():
            if value < 0:
                raise ValueError(f"negative dual value at {key}")


@dataclass(frozen=True)
class DualViolation:
    point: int
    config: int
    lhs: Num
    rhs: Num


def check_dual_feasibility(
    inst: Instance, cert: DualCertificate, eps: Optional[float] = None
) -> List[DualViolation]:
    """All (point, nonempty config) packing constraints of the scaled dual.

    Checking the full request set suffices: every summand is clipped at zero,
    so no subset of requests can do worse.
    """
    S = inst.num_commodities
    if S > 12:
        raise ValueError("dual check enumerates all configs; |S| <= 12 required")
    if eps is None:
        exact = inst.exact and is_exact(cert.gamma) and all(
            is_exact(value) for value in cert.a.values()
        )
        eps = 0 if exact else EPS_TIGHT

    full = full_config(S)
    violations: List[DualViolation] = []
    scaled: Dict[Tuple[int, int], Num] = {
        key: cert.gamma * value for key, value in cert.a.items()
    }
    for m in range(inst.metric.size):
        for config in range(1, full + 1):
            lhs: Num = 0
            for r, req in enumerate(inst.requests):
                inside = req.commodities & config
                if not inside:
                    continue
                invested: Num = 0
                e = 0
                mask = inside
                while mask:
                    if mask & 1:
                        invested = invested + scaled.get((r, e), 0)
                    mask >>= 1
                    e += 1
                lhs = lhs + pos_part(invested - inst.d(req.point, m))
            rhs = inst.fcost(m, config)
            if lhs > rhs + eps:
                violations.append(DualViolation(m, config, lhs, rhs))
    return violations
