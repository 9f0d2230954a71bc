"""Exact-friendly number handling.

Instance documents carry decimal or rational ``p/q`` literals; both parse to
exact values (``int`` or ``Fraction``) so that tightness comparisons in the
event engines are reliable.  Floats enter only where a cost model takes an
irrational power.  Engines pick their comparison tolerance from whether the
data at hand is exact: zero for exact runs, ``EPS_TIGHT`` otherwise.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Union

Num = Union[int, Fraction, float]

INF = float("inf")

# slack / tie tolerance for runs that involve floats
EPS_TIGHT = 1e-9

# tolerance for metric axiom checks on float matrices
EPS_METRIC = 1e-9


def is_exact(value: Num) -> bool:
    return not isinstance(value, float)


def all_exact(values: Iterable[Num]) -> bool:
    return all(is_exact(v) for v in values)


def normalize(value: Num) -> Num:
    """Collapse integral Fractions to int; leave everything else alone."""
    if isinstance(value, Fraction) and value.denominator == 1:
        return int(value)
    return value


def parse_number(raw) -> Num:
    """Parse a document value: int, decimal string, or rational "p/q" string.

    The JSON loader is configured with ``parse_float=Fraction`` so decimal
    literals arrive here already exact.
    """
    if isinstance(raw, bool):
        raise ValueError(f"expected a number, got boolean {raw!r}")
    if isinstance(raw, int):
        return raw
    if isinstance(raw, Fraction):
        return normalize(raw)
    if isinstance(raw, float):
        # only reachable through direct API use; keep the value honest
        return raw
    if isinstance(raw, str):
        try:
            return normalize(Fraction(raw))
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"cannot parse number literal {raw!r}") from exc
    raise ValueError(f"cannot parse number of type {type(raw).__name__}")


def number_to_json(value: Num):
    """Render a number for a JSON document: int, float, or "p/q" string."""
    if isinstance(value, bool):
        raise ValueError("booleans are not numbers")
    if isinstance(value, int):
        return value
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return int(value)
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, float):
        return value
    raise ValueError(f"cannot serialize number of type {type(value).__name__}")


def sqrt_num(k: int) -> Num:
    """Square root, exact (int) for perfect squares, float otherwise."""
    if k < 0:
        raise ValueError("sqrt of negative value")
    r = math.isqrt(k)
    if r * r == k:
        return r
    return math.sqrt(k)


def pos_part(value: Num) -> Num:
    """max(value, 0) that preserves exactness."""
    return value if value > 0 else 0


def exact_div(num: Num, den: Num) -> Num:
    """Division that stays exact (Fraction) when both operands are exact."""
    if is_exact(num) and is_exact(den):
        return Fraction(num) / Fraction(den)
    return float(num) / float(den)
