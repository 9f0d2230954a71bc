"""A restricted weighted set-cover family with a harmonic-weight guarantee.

Elements ``0..n-1`` arrive in order.  Every element ``i`` splits its
predecessors into two disjoint sets ``A_i`` and ``B_i`` with
``A_i | B_i = {0..i-1}``, and the ``B`` sets form a chain: ``B_i <= B_j``
whenever ``i < j``.  Two sets are purchasable per element: the singleton
``{i}`` at weight ``c / (|B_i| + 1)`` and ``{i} | A_i`` at weight ``c``.

The block-based greedy below covers everything at weight at most
``2 * c * H_n``: at each round it looks at the maximal trailing block of
elements sharing the final ``B`` set, buys whichever of the two choices is
cheaper per covered element (at most ``2c/n``), removes the covered elements,
renumbers, and repeats.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import FrozenSet, List, Optional, Tuple

from .errors import FormatError
from .numeric import Num, is_exact
from .oracle import harmonic
from .validation import ValidationIssue, ValidationReport


@dataclass(frozen=True, eq=True)
class COrderedInstance:
    c: Num  # >= 1
    a_sets: Tuple[FrozenSet[int], ...]  # a_sets[i] subset of {0..i-1}
    b_sets: Tuple[FrozenSet[int], ...]

    def __post_init__(self):
        if self.c < 1:
            raise FormatError("weight parameter c must be >= 1")
        if len(self.a_sets) != len(self.b_sets):
            raise FormatError("need one (A, B) pair per element")

    @property
    def n(self) -> int:
        return len(self.a_sets)


def validate_cordered(inst: COrderedInstance) -> ValidationReport:
    issues: List[ValidationIssue] = []
    for i in range(inst.n):
        earlier = frozenset(range(i))
        a, b = inst.a_sets[i], inst.b_sets[i]
        if a & b:
            issues.append(ValidationIssue("overlap", (i,), f"A_{i} and B_{i} intersect"))
        if (a | b) != earlier:
            issues.append(
                ValidationIssue("partition", (i,), f"A_{i} | B_{i} != {{0..{i - 1}}}")
            )
        if i + 1 < inst.n and not b <= inst.b_sets[i + 1]:
            issues.append(
                ValidationIssue("chain", (i, i + 1), f"B_{i} is not contained in B_{i + 1}")
            )
    return ValidationReport(tuple(issues))


def weight_bound(c: Num, n: int) -> Num:
    """Guaranteed covering weight: 2 * c * H_n."""
    if c < 1:
        raise ValueError("c must be >= 1")
    if n < 1:
        raise ValueError("n must be >= 1")
    h = harmonic(n)
    return 2 * c * h if is_exact(c) else 2 * float(c) * float(h)


def greedy_cover(
    inst: COrderedInstance, validate_rounds: bool = False
) -> Tuple[Tuple[FrozenSet[int], ...], Num]:
    """Cover all elements; returns (chosen sets in original ids, total weight).

    Each round's weight per covered element is at most ``2c / n_current``,
    so the total never exceeds ``weight_bound(c, n)``.
    """
    report = validate_cordered(inst)
    if not report.ok:
        first = report.issues[0]
        raise FormatError(f"invalid instance: {first.kind} at {first.where}")

    n = inst.n
    if n == 0:
        return (), 0
    c = inst.c
    # bitmask views, element k <-> bit k, in the current numbering
    a_mask = [_mask(s) for s in inst.a_sets]
    b_mask = [_mask(s) for s in inst.b_sets]
    original = list(range(n))  # current index -> original element id

    chosen: List[FrozenSet[int]] = []
    total: Num = 0
    while n > 0:
        last_b = b_mask[n - 1]
        size_b = last_b.bit_count()
        # the trailing block: elements whose B set equals the final one
        start = n - 1
        while start > 0 and b_mask[start - 1] == last_b:
            start -= 1
        single_per = _div(c, size_b + 1)
        bundle_covers = (1 << (n - 1)) | a_mask[n - 1]
        bundle_per = _div(c, bundle_covers.bit_count())
        per_element_cap = _div(2 * c, n)
        if bundle_per <= single_per:
            covered = bundle_covers
            round_weight = c
            chosen.append(frozenset(original[i] for i in _bits(covered)))
            assert bundle_per <= per_element_cap
        else:
            covered = 0
            round_weight = 0
            for i in range(start, n):
                covered |= 1 << i
                round_weight = round_weight + single_per
                chosen.append(frozenset((original[i],)))
            assert single_per <= per_element_cap
        total = total + round_weight

        # covered elements never appear in any B set, so removal keeps the
        # chain intact; renumber the survivors
        assert all(not (b & covered) for b in b_mask)
        remap = {}
        survivors = []
        for i in range(n):
            if not covered & (1 << i):
                remap[i] = len(survivors)
                survivors.append(i)
        a_mask = [_compress(a_mask[i], remap) for i in survivors]
        b_mask = [_compress(b_mask[i], remap) for i in survivors]
        original = [original[i] for i in survivors]
        n = len(survivors)
        if validate_rounds and n:
            sub = COrderedInstance(
                c=c,
                a_sets=tuple(frozenset(_bits(m)) for m in a_mask),
                b_sets=tuple(frozenset(_bits(m)) for m in b_mask),
            )
            sub_report = validate_cordered(sub)
            if not sub_report.ok:
                raise AssertionError(f"round left an invalid instance: {sub_report.issues[0]}")
    return tuple(chosen), total


def gen_random_cordered(n: int, c: Num, seed: int) -> COrderedInstance:
    """Random valid instance: B chains grow as prefixes of one frozen permutation."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = random.Random(seed)
    perm = list(range(n))
    rng.shuffle(perm)
    cuts = sorted(rng.randint(0, n) for _ in range(n))  # nondecreasing prefix sizes
    a_sets = []
    b_sets = []
    for i in range(n):
        prefix = set(perm[: cuts[i]])
        earlier = set(range(i))
        b = frozenset(prefix & earlier)
        a_sets.append(frozenset(earlier - b))
        b_sets.append(b)
    return COrderedInstance(c=c, a_sets=tuple(a_sets), b_sets=tuple(b_sets))


def _mask(s: FrozenSet[int]) -> int:
    m = 0
    for k in s:
        m |= 1 << k
    return m


def _bits(mask: int):
    k = 0
    while mask:
        if mask & 1:
            yield k
        mask >>= 1
        k += 1


def _compress(mask: int, remap: dict) -> int:
    out = 0
    for k in _bits(mask):
        if k in remap:
            out |= 1 << remap[k]
    return out


def _div(value: Num, denom: int) -> Num:
    if is_exact(value):
        return Fraction(value, denom)
    return value / denom
