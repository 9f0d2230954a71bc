"""Problem instances: metric spaces, construction-cost models, request sequences.

An instance is a finite (pseudo-)metric over points, a number of commodities,
a construction-cost model assigning a positive cost to every (point,
configuration) pair, and an ordered request sequence.  Configurations and
request demand sets are bitmasks over commodity indices ``0..S-1``.

Cost models come in three kinds:

* ``table``      -- explicit cost per (point, nonempty configuration);
                    missing entries are an error, never defaulted.
* ``size_based`` -- cost ``g(k)`` depends only on the configuration size.
* ``poly``       -- ``|config| ** (x/2)`` for an exponent ``x`` in [0, 2].

Two model assumptions are checkable: subadditivity (covering a configuration
with two facilities is never cheaper than one), and the floor condition that
the per-commodity cost is minimised by the full configuration.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .errors import FormatError, MissingCostError
from .numeric import (
    EPS_METRIC,
    Num,
    all_exact,
    is_exact,
    normalize,
    number_to_json,
    parse_number,
)
from .validation import ValidationIssue, ValidationReport

TABLE = "table"
SIZE_BASED = "size_based"
POLY = "poly"

COST_KINDS = (TABLE, SIZE_BASED, POLY)


def config_from_indices(indices: Iterable[int], num_commodities: int) -> int:
    mask = 0
    for e in indices:
        if not 0 <= e < num_commodities:
            raise FormatError(
                f"commodity index {e} out of range for |S|={num_commodities}"
            )
        mask |= 1 << e
    return mask


def indices_from_config(mask: int) -> List[int]:
    out = []
    e = 0
    while mask:
        if mask & 1:
            out.append(e)
        mask >>= 1
        e += 1
    return out


def full_config(num_commodities: int) -> int:
    return (1 << num_commodities) - 1


# ---------------------------------------------------------------------------
# metric spaces


@dataclass(frozen=True, eq=True)
class MetricSpace:
    """Finite pseudo-metric: symmetric, zero diagonal, triangle inequality.

    Zero distance between distinct points is allowed.
    """

    point_ids: Tuple[str, ...]
    dist: Tuple[Tuple[Num, ...], ...]
    coords: Optional[Tuple[Num, ...]] = None  # present for line-built metrics

    def __post_init__(self):
        index = {pid: i for i, pid in enumerate(self.point_ids)}
        object.__setattr__(self, "_index", index)

    @property
    def size(self) -> int:
        return len(self.point_ids)

    def index_of(self, point_id) -> int:
        try:
            return self._index[point_id]
        except KeyError:
            raise FormatError(f"unknown point id {point_id!r}") from None

    def d(self, i: int, j: int) -> Num:
        return self.dist[i][j]


def validate_metric(dist: Sequence[Sequence[Num]], eps: Optional[float] = None) -> ValidationReport:
    """Check metric axioms; the report lists every violation with indices.

    ``eps`` defaults to 0 for exact matrices and to a small float tolerance
    when any entry is a float.
    """
    n = len(dist)
    for row in dist:
        if len(row) != n:
            raise FormatError("distance matrix is not square")
    if eps is None:
        eps = 0 if all_exact(v for row in dist for v in row) else EPS_METRIC

    issues = []
    for i in range(n):
        if not (-eps <= dist[i][i] <= eps):
            issues.append(
                ValidationIssue("diagonal", (i,), f"dist[{i}][{i}] = {dist[i][i]} != 0")
            )
    for i in range(n):
        for j in range(n):
            if dist[i][j] < -eps:
                issues.append(
                    ValidationIssue("negative", (i, j), f"dist[{i}][{j}] = {dist[i][j]} < 0")
                )
            if j > i and abs(dist[i][j] - dist[j][i]) > eps:
                issues.append(
                    ValidationIssue(
                        "symmetry", (i, j), f"dist[{i}][{j}] != dist[{j}][{i}]"
                    )
                )
    for i in range(n):
        for j in range(n):
            for k in range(n):
                if dist[i][k] > dist[i][j] + dist[j][k] + eps:
                    issues.append(
                        ValidationIssue(
                            "triangle",
                            (i, j, k),
                            f"dist[{i}][{k}] = {dist[i][k]} > "
                            f"{dist[i][j]} + {dist[j][k]}",
                        )
                    )
    return ValidationReport(tuple(issues))


def build_line_metric(coords: Sequence[Num], point_ids: Optional[Sequence[str]] = None) -> MetricSpace:
    """Metric induced by positions on a line: d(i, j) = |coords[i] - coords[j]|."""
    if not coords:
        raise FormatError("line metric needs at least one coordinate")
    coords = tuple(normalize(c) for c in coords)
    if point_ids is None:
        point_ids = tuple(f"p{i}" for i in range(len(coords)))
    else:
        point_ids = tuple(point_ids)
        if len(point_ids) != len(coords):
            raise FormatError("point ids and coordinates disagree in length")
    dist = tuple(
        tuple(abs(a - b) for b in coords) for a in coords
    )
    return MetricSpace(point_ids=point_ids, dist=dist, coords=coords)


# ---------------------------------------------------------------------------
# cost models


@dataclass(frozen=True, eq=True)
class CostModel:
    """Construction cost of opening a configuration at a point."""

    kind: str
    num_commodities: int
    table: Optional[Dict[Tuple[int, int], Num]] = None  # (point, config mask) -> cost
    g: Optional[Tuple[Num, ...]] = None  # g[k-1] = cost of a size-k configuration
    x: Optional[Num] = None  # poly exponent in [0, 2]

    def __post_init__(self):
        if self.kind not in COST_KINDS:
            raise FormatError(f"unknown cost kind {self.kind!r}")
        if self.kind == TABLE and self.table is None:
            raise FormatError("table cost model needs entries")
        if self.kind == SIZE_BASED:
            if self.g is None or len(self.g) != self.num_commodities:
                raise FormatError("size_based cost model needs g(1..|S|)")
        if self.kind == POLY:
            if self.x is None or not (0 <= self.x <= 2):
                raise FormatError("poly cost model needs x in [0, 2]")


def _poly_value(k: int, x: Num) -> Num:
    """k ** (x/2), exact where the result is rational."""
    if x == 0:
        return 1
    if x == 2:
        return k
    if x == 1:
        r = math.isqrt(k)
        if r * r == k:
            return r
    return float(k) ** (float(x) / 2.0)


def facility_cost(cost: CostModel, point: int, config: int) -> Num:
    """Cost of opening configuration ``config`` (bitmask) at point index ``point``."""
    if config == 0:
        raise ValueError("configurations must be nonempty")
    size = config.bit_count()
    if size > cost.num_commodities:
        raise ValueError("configuration exceeds the commodity universe")
    if cost.kind == TABLE:
        try:
            return cost.table[(point, config)]
        except KeyError:
            raise MissingCostError(
                f"no table entry for point {point}, config {indices_from_config(config)}"
            ) from None
    if cost.kind == SIZE_BASED:
        return cost.g[size - 1]
    return _poly_value(size, cost.x)


@dataclass(frozen=True)
class Condition1Violation:
    point: Optional[int]  # None for size-only checks
    config: Optional[int]  # bitmask, or None with `size` set
    size: int
    per_item: Num
    per_full: Num


def check_condition1(cost: CostModel, metric: MetricSpace) -> List[Condition1Violation]:
    """Find (point, config) pairs where the per-commodity cost beats the full set.

    The model assumption is f(config)/|config| >= f(S)/|S| everywhere; the
    returned list is empty iff it holds.  Size-based and poly kinds are
    checked over sizes only (their cost ignores the point).
    """
    S = cost.num_commodities
    full = full_config(S)
    violations: List[Condition1Violation] = []
    if cost.kind == TABLE:
        if S > 20:
            raise ValueError("table condition check enumerates all configs; |S| <= 20 required")
        for m in range(metric.size):
            f_full = facility_cost(cost, m, full)
            for config in range(1, full + 1):
                size = config.bit_count()
                f = facility_cost(cost, m, config)
                if f * S < f_full * size:
                    violations.append(
                        Condition1Violation(m, config, size, Fraction(f) / size, Fraction(f_full) / S)
                    )
        return violations
    # For poly, k ** (x/2 - 1) is nonincreasing in k for x <= 2, so the
    # condition holds analytically; sizes are enumerated as a numeric guard.
    for size in range(1, S + 1):
        f = (
            cost.g[size - 1]
            if cost.kind == SIZE_BASED
            else _poly_value(size, cost.x)
        )
        f_s = cost.g[S - 1] if cost.kind == SIZE_BASED else _poly_value(S, cost.x)
        lhs = f * S
        rhs = f_s * size
        tol = 0 if (is_exact(lhs) and is_exact(rhs)) else 1e-12 * max(abs(float(lhs)), abs(float(rhs)), 1.0)
        if lhs < rhs - tol:
            violations.append(
                Condition1Violation(None, None, size, Fraction(f) / size if is_exact(f) else f / size,
                                    Fraction(f_s) / S if is_exact(f_s) else f_s / S)
            )
    return violations


@dataclass(frozen=True)
class SubadditivityViolation:
    point: Optional[int]
    config: Optional[int]
    part_a: Optional[int]
    part_b: Optional[int]
    sizes: Tuple[int, int, int]  # (|config|, |a|, |b|) for size-only checks


def check_subadditivity(cost: CostModel, metric: MetricSpace) -> List[SubadditivityViolation]:
    """Find covers (a, b) of a configuration that undercut its cost.

    A violation is f(config) > f(a) + f(b) for a union cover a | b == config.
    Poly costs are subadditive analytically for x in [0, 2]; size-based costs
    are checked over size triples, table costs over explicit subsets.
    """
    S = cost.num_commodities
    full = full_config(S)
    violations: List[SubadditivityViolation] = []
    if cost.kind == POLY:
        return violations
    if cost.kind == SIZE_BASED:
        g = cost.g
        for k in range(1, S + 1):
            for i in range(1, k + 1):
                for j in range(max(1, k - i), k + 1):
                    if g[k - 1] > g[i - 1] + g[j - 1]:
                        violations.append(
                            SubadditivityViolation(None, None, None, None, (k, i, j))
                        )
        return violations
    if S > 12:
        raise ValueError("table subadditivity check enumerates covers; |S| <= 12 required")
    for m in range(metric.size):
        for config in range(1, full + 1):
            f = facility_cost(cost, m, config)
            sub = config
            # `a` over nonempty proper-and-improper subsets of config
            while True:
                a = sub
                if a:
                    rest = config & ~a
                    # b must contain config \ a and may overlap a
                    extra = a
                    while True:
                        b = rest | extra
                        if b and f > facility_cost(cost, m, a) + facility_cost(cost, m, b):
                            violations.append(
                                SubadditivityViolation(
                                    m, config, a, b,
                                    (config.bit_count(), a.bit_count(), b.bit_count()),
                                )
                            )
                        if extra == 0:
                            break
                        extra = (extra - 1) & a
                if sub == 0:
                    break
                sub = (sub - 1) & config
    return violations


# ---------------------------------------------------------------------------
# requests and instances


@dataclass(frozen=True, eq=True)
class Request:
    point: int  # index into metric.point_ids
    commodities: int  # nonempty bitmask over S
    arrival_index: int

    def commodity_list(self) -> List[int]:
        return indices_from_config(self.commodities)


@dataclass(frozen=True, eq=True)
class Instance:
    metric: MetricSpace
    cost: CostModel
    num_commodities: int
    requests: Tuple[Request, ...]
    known_opt_upper_bound: Optional[Num] = None

    def __post_init__(self):
        if self.metric.size == 0:
            raise FormatError("instance needs at least one point")
        if self.num_commodities < 1:
            raise FormatError("instance needs at least one commodity")
        if self.cost.num_commodities != self.num_commodities:
            raise FormatError("cost model and instance disagree on |S|")
        full = full_config(self.num_commodities)
        for i, r in enumerate(self.requests):
            if r.arrival_index != i:
                raise FormatError("request arrival indices must be 0,1,2,... in order")
            if not 0 <= r.point < self.metric.size:
                raise FormatError(f"request {i} references unknown point index {r.point}")
            if r.commodities == 0 or r.commodities & ~full:
                raise FormatError(f"request {i} demand set must be a nonempty subset of S")
        object.__setattr__(self, "_exact", self._compute_exact())

    def _compute_exact(self) -> bool:
        vals: List[Num] = [v for row in self.metric.dist for v in row]
        if self.cost.kind == TABLE:
            vals.extend(self.cost.table.values())
        elif self.cost.kind == SIZE_BASED:
            vals.extend(self.cost.g)
        else:
            vals.append(self.cost.x)
            # irrational powers make evaluated costs floats
            if self.cost.x not in (0, 2):
                return False
        return all_exact(vals)

    @property
    def exact(self) -> bool:
        """True when every value an algorithm can derive stays rational."""
        return self._exact

    @property
    def n(self) -> int:
        return len(self.requests)

    def d(self, i: int, j: int) -> Num:
        return self.metric.dist[i][j]

    def fcost(self, point: int, config: int) -> Num:
        return facility_cost(self.cost, point, config)


# ---------------------------------------------------------------------------
# document format


def _cost_to_document(cost: CostModel, metric: MetricSpace) -> dict:
    if cost.kind == TABLE:
        entries = []
        for (point, config) in sorted(cost.table.keys()):
            entries.append(
                {
                    "point": metric.point_ids[point],
                    "config": indices_from_config(config),
                    "cost": number_to_json(cost.table[(point, config)]),
                }
            )
        return {"kind": "table", "entries": entries}
    if cost.kind == SIZE_BASED:
        return {"kind": "size_based", "g": [number_to_json(v) for v in cost.g]}
    return {"kind": "poly", "x": number_to_json(cost.x)}


def instance_to_document(inst: Instance) -> dict:
    metric = inst.metric
    if metric.coords is not None:
        metric_doc = {"kind": "line", "coords": [number_to_json(c) for c in metric.coords]}
    else:
        metric_doc = {
            "kind": "matrix",
            "dist": [[number_to_json(v) for v in row] for row in metric.dist],
        }
    doc = {
        "points": list(metric.point_ids),
        "metric": metric_doc,
        "num_commodities": inst.num_commodities,
        "cost": _cost_to_document(inst.cost, metric),
        "requests": [
            {
                "point": metric.point_ids[r.point],
                "commodities": r.commodity_list(),
            }
            for r in inst.requests
        ],
    }
    if inst.known_opt_upper_bound is not None:
        doc["opt_upper_bound"] = number_to_json(inst.known_opt_upper_bound)
    return doc


def serialize_instance(inst: Instance) -> str:
    return json.dumps(instance_to_document(inst), indent=2, sort_keys=True) + "\n"


def _require(doc: dict, key: str):
    if key not in doc:
        raise FormatError(f"missing field {key!r}")
    return doc[key]


def instance_from_document(doc: dict) -> Instance:
    if not isinstance(doc, dict):
        raise FormatError("instance document must be an object")
    point_ids = tuple(str(p) for p in _require(doc, "points"))
    if len(set(point_ids)) != len(point_ids):
        raise FormatError("point ids must be distinct")
    metric_doc = _require(doc, "metric")
    kind = _require(metric_doc, "kind")
    if kind == "line":
        coords = [parse_number(v) for v in _require(metric_doc, "coords")]
        metric = build_line_metric(coords, point_ids)
    elif kind == "matrix":
        rows = _require(metric_doc, "dist")
        if len(rows) != len(point_ids):
            raise FormatError("distance matrix size disagrees with points")
        dist = tuple(tuple(parse_number(v) for v in row) for row in rows)
        metric = MetricSpace(point_ids=point_ids, dist=dist)
    else:
        raise FormatError(f"unknown metric kind {kind!r}")
    report = validate_metric(metric.dist)
    if not report.ok:
        first = report.issues[0]
        raise FormatError(f"metric axiom violated: {first.kind} at {first.where}")

    S = _require(doc, "num_commodities")
    if not isinstance(S, int) or S < 1:
        raise FormatError("num_commodities must be a positive integer")

    cost_doc = _require(doc, "cost")
    ckind = _require(cost_doc, "kind")
    if ckind == "table":
        table: Dict[Tuple[int, int], Num] = {}
        for entry in _require(cost_doc, "entries"):
            point = metric.index_of(str(_require(entry, "point")))
            config = config_from_indices(_require(entry, "config"), S)
            if config == 0:
                raise FormatError("table entries must have nonempty configs")
            value = parse_number(_require(entry, "cost"))
            if value <= 0:
                raise FormatError("costs must be strictly positive")
            table[(point, config)] = value
        cost = CostModel(kind=TABLE, num_commodities=S, table=table)
    elif ckind == "size_based":
        g = tuple(parse_number(v) for v in _require(cost_doc, "g"))
        if any(v <= 0 for v in g):
            raise FormatError("costs must be strictly positive")
        cost = CostModel(kind=SIZE_BASED, num_commodities=S, g=g)
    elif ckind == "poly":
        x = parse_number(_require(cost_doc, "x"))
        cost = CostModel(kind=POLY, num_commodities=S, x=x)
    else:
        raise FormatError(f"unknown cost kind {ckind!r}")

    requests = []
    for i, rdoc in enumerate(_require(doc, "requests")):
        point = metric.index_of(str(_require(rdoc, "point")))
        commodities = config_from_indices(_require(rdoc, "commodities"), S)
        if commodities == 0:
            raise FormatError(f"request {i} demands no commodities")
        requests.append(Request(point=point, commodities=commodities, arrival_index=i))

    bound = doc.get("opt_upper_bound")
    return Instance(
        metric=metric,
        cost=cost,
        num_commodities=S,
        requests=tuple(requests),
        known_opt_upper_bound=parse_number(bound) if bound is not None else None,
    )


def parse_instance(text: str) -> Instance:
    try:
        doc = json.loads(text, parse_float=Fraction)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid document: {exc}") from exc
    return instance_from_document(doc)
