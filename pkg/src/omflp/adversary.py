"""Instance generators: worst-case single-point families and seeded fuzz.

``gen_thm1`` builds the single-point family that forces any online strategy
to choose between overbuilding singleton facilities and predicting unseen
commodities: costs depend only on configuration size via
``g(k) = ceil(k / sqrt(|S|))``, and the sequence requests a random
``sqrt(|S|)``-subset of commodities one at a time.  Covering exactly that
subset with one facility costs 1, which is attached as the known optimum
upper bound.

``gen_gx`` keeps the same sequence shape with the polynomial cost family
``k ** (x/2)``, bound ``|S| ** (x/4)``.

``gen_random`` produces seeded fuzz instances whose cost models pass the
subadditivity and per-commodity floor checks by construction (and are
re-checked, with rejection as a safety net).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Optional

from .errors import GenerationError
from .instance import (
    POLY,
    SIZE_BASED,
    TABLE,
    CostModel,
    Instance,
    MetricSpace,
    Request,
    build_line_metric,
    check_condition1,
    check_subadditivity,
    config_from_indices,
    validate_metric,
)
from .instance import _poly_value  # poly cost helper shared with the cost model
from .numeric import Num


def gen_thm1(S_size: int, seed: int) -> Instance:
    """Single-point lower-bound instance with ceiling costs; known OPT bound 1."""
    root = math.isqrt(S_size)
    if root * root != S_size:
        raise GenerationError(f"S_size must be a perfect square, got {S_size}")
    rng = random.Random(seed)
    chosen = rng.sample(range(S_size), root)  # sampled order is the arrival order
    metric = MetricSpace(point_ids=("p0",), dist=((0,),))
    g = tuple((k + root - 1) // root for k in range(1, S_size + 1))
    cost = CostModel(kind=SIZE_BASED, num_commodities=S_size, g=g)
    requests = tuple(
        Request(point=0, commodities=1 << e, arrival_index=i)
        for i, e in enumerate(chosen)
    )
    return Instance(
        metric=metric,
        cost=cost,
        num_commodities=S_size,
        requests=requests,
        known_opt_upper_bound=1,
    )


def gen_gx(S_size: int, x: Num, seed: int) -> Instance:
    """Same sequence shape as gen_thm1 with polynomial costs k ** (x/2)."""
    if not 0 <= x <= 2:
        raise GenerationError(f"exponent x must lie in [0, 2], got {x}")
    root = math.isqrt(S_size)
    if root * root != S_size:
        raise GenerationError(f"S_size must be a perfect square, got {S_size}")
    rng = random.Random(seed)
    chosen = rng.sample(range(S_size), root)
    metric = MetricSpace(point_ids=("p0",), dist=((0,),))
    cost = CostModel(kind=POLY, num_commodities=S_size, x=x)
    requests = tuple(
        Request(point=0, commodities=1 << e, arrival_index=i)
        for i, e in enumerate(chosen)
    )
    return Instance(
        metric=metric,
        cost=cost,
        num_commodities=S_size,
        requests=requests,
        known_opt_upper_bound=_poly_value(root, x),
    )


@dataclass(frozen=True)
class GenParams:
    num_points: int
    S_size: int
    n: int
    metric_kind: str = "line"  # "line" | "matrix"
    cost_kind: str = SIZE_BASED  # "table" | "size_based" | "poly"
    max_set_size: int = 1


ORACLE_SOLVABLE = GenParams(
    num_points=3, S_size=3, n=6, metric_kind="line", cost_kind=TABLE, max_set_size=2
)


def _concave_profile(rng: random.Random, S: int) -> tuple:
    """g(k) as a prefix sum of nonincreasing positive increments."""
    increments = sorted((rng.randint(1, 9) for _ in range(S)), reverse=True)
    g = []
    total = 0
    for d in increments:
        total += d
        g.append(total)
    return tuple(g)


def _gen_metric(rng: random.Random, params: GenParams) -> MetricSpace:
    M = params.num_points
    if params.metric_kind == "line":
        coords = rng.sample(range(0, 10 * M + 1), M)
        return build_line_metric(coords)
    if params.metric_kind == "matrix":
        # embed on an integer grid; L1 distances satisfy the axioms
        pts = [(rng.randint(0, 6 * M), rng.randint(0, 6 * M)) for _ in range(M)]
        dist = tuple(
            tuple(abs(a[0] - b[0]) + abs(a[1] - b[1]) for b in pts) for a in pts
        )
        return MetricSpace(
            point_ids=tuple(f"p{i}" for i in range(M)), dist=dist
        )
    raise GenerationError(f"unknown metric kind {params.metric_kind!r}")


def _gen_cost(rng: random.Random, params: GenParams) -> CostModel:
    S = params.S_size
    if params.cost_kind == SIZE_BASED:
        return CostModel(kind=SIZE_BASED, num_commodities=S, g=_concave_profile(rng, S))
    if params.cost_kind == POLY:
        from fractions import Fraction

        return CostModel(kind=POLY, num_commodities=S, x=Fraction(rng.randint(0, 8), 4))
    if params.cost_kind == TABLE:
        table = {}
        for m in range(params.num_points):
            scale = rng.randint(1, 4)
            profile = _concave_profile(rng, S)
            # raising singleton entries keeps both model conditions intact
            bump = {e: rng.randint(1, 3) for e in range(S)}
            for mask in range(1, 1 << S):
                size = mask.bit_count()
                value = scale * profile[size - 1]
                if size == 1:
                    value *= bump[mask.bit_length() - 1]
                table[(m, mask)] = value
        return CostModel(kind=TABLE, num_commodities=S, table=table)
    raise GenerationError(f"unknown cost kind {params.cost_kind!r}")


def gen_random(params: GenParams, seed: int, tries: int = 100) -> Instance:
    """Seeded fuzz instance; the cost model always passes both model checks."""
    if params.num_points < 1 or params.S_size < 1 or params.n < 0:
        raise GenerationError("num_points and S_size must be positive, n nonnegative")
    if not 1 <= params.max_set_size <= params.S_size:
        raise GenerationError("max_set_size must lie in [1, S_size]")
    rng = random.Random(seed)
    for _ in range(tries):
        metric = _gen_metric(rng, params)
        cost = _gen_cost(rng, params)
        if not validate_metric(metric.dist).ok:
            continue
        if check_condition1(cost, metric) or check_subadditivity(cost, metric):
            continue
        requests = []
        for i in range(params.n):
            size = rng.randint(1, params.max_set_size)
            commodities = config_from_indices(
                rng.sample(range(params.S_size), size), params.S_size
            )
            requests.append(
                Request(point=rng.randrange(params.num_points), commodities=commodities, arrival_index=i)
            )
        return Instance(
            metric=metric,
            cost=cost,
            num_commodities=params.S_size,
            requests=tuple(requests),
            known_opt_upper_bound=None,
        )
    raise GenerationError(
        "could not generate a valid instance within the retry budget; "
        "try different parameters"
    )
