"""Monotone subsequence extraction through the ultrapower.

Plugging a sequence into the quotient produces a class ``u``; the index
sets A = {n : u_n < u}, B = {n : u_n = u}, C = {n : u_n > u} partition
the naturals and exactly one of them measures 1.  The measure-one part
dictates the extraction: enumerate B for a constant subsequence, or walk
A (resp. C) greedily taking the earliest later term that is strictly
larger (resp. smaller) than the current one.

For tame sequences the three sets are built symbolically.  Committing
the residue tower at the sequence's period pins which class tail the
measure concentrates on; the tail is a rational function there, so ``u``
is either a standard rational c (tail identically c), or sits an
infinitesimal above/below the tail's rational limit L, or is infinite.
In each case A/B/C are sign sets of ``seq - c`` or ``seq - L``, and the
classification needs only the measures of B and A, with C implied.

A prefix-peak cross-check is also provided: a term is a prefix-peak when
it strictly exceeds everything after it within the prefix.  Peaks form a
strictly decreasing subsequence; when only the trivial final peak
exists, the greedy increasing walk from index 0 is returned instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Optional

from .errors import (
    AmbiguousAtHorizon,
    BeyondHorizon,
    ExhaustedAtHorizon,
    InconsistentLedger,
    PreconditionFailed,
    PrefixTooShort,
    SearchBoundExceeded,
    UndefinedAtIndex,
)
from .index_sets import DEFAULT_HORIZON, ExactSet, IndexSet, SampledSet, empty_set
from .oracle import OracleState
from .ultrapower import (
    Const,
    Hyper,
    Ordering,
    SequenceExpr,
    Sub,
    compare,
    default_bound_schedule,
    embed,
    eval_expr,
    exact_sign_partition,
    is_finite,
    sampled_sign_partition,
    st,
    tail_behavior,
)

DEFAULT_SEARCH_BOUND = 100_000


class Case(Enum):
    CONSTANT = "ConstantCase"
    INCREASING = "IncreasingCase"
    DECREASING = "DecreasingCase"


class Direction(Enum):
    STRICTLY_INCREASING = "StrictlyIncreasing"
    STRICTLY_DECREASING = "StrictlyDecreasing"
    CONSTANT = "Constant"


@dataclass(frozen=True)
class Trichotomy:
    case: Case
    below: IndexSet  # A = {n : u_n < u}
    equal: IndexSet  # B = {n : u_n = u}
    above: IndexSet  # C = {n : u_n > u}
    u: Hyper

    @property
    def sets(self) -> tuple[IndexSet, IndexSet, IndexSet]:
        return (self.below, self.equal, self.above)


@dataclass(frozen=True)
class Extraction:
    indices: tuple
    direction: Direction
    values: tuple

    def check(self) -> None:
        """Assert the declared shape; raises InconsistentLedger on a bug."""
        ok = all(a < b for a, b in zip(self.indices, self.indices[1:]))
        vals = self.values
        if self.direction is Direction.STRICTLY_INCREASING:
            ok = ok and all(a < b for a, b in zip(vals, vals[1:]))
        elif self.direction is Direction.STRICTLY_DECREASING:
            ok = ok and all(a > b for a, b in zip(vals, vals[1:]))
        else:
            ok = ok and all(a == b for a, b in zip(vals, vals[1:]))
        if not ok:
            raise InconsistentLedger(f"extraction violates {self.direction.value}")


def classify(
    seq: SequenceExpr,
    state: OracleState,
    horizon: int = DEFAULT_HORIZON,
    st_eps: Fraction = Fraction(1, 10**6),
) -> Trichotomy:
    """Decide which of A, B, C carries the measure and return all three.

    Tame sequences take the symbolic route (exact sets, two ledger
    queries).  Other sequences locate the class through finiteness and
    standard-part queries first; their sets are sampled at ``horizon``
    and the eps-resolved standard part decides borderline terms, so keep
    ``st_eps`` small relative to the term spacing.
    """
    u = Hyper(seq, state)
    info = tail_behavior(seq, state)
    if info is not None:
        below, equal, above = _symbolic_sets(seq, info)
    else:
        below, equal, above = _sampled_sets(seq, u, horizon, st_eps)

    if state.measure(equal) == 1:
        case = Case.CONSTANT
    elif state.measure(below) == 1:
        case = Case.INCREASING
    else:
        case = Case.DECREASING
        if isinstance(above, ExactSet):
            r = state.committed_residue(above.modulus)
            if r not in above.residues:
                raise InconsistentLedger("no trichotomy part carries the measure")
    return Trichotomy(case, below, equal, above, u)


def _symbolic_sets(seq: SequenceExpr, info) -> tuple[IndexSet, IndexSet, IndexSet]:
    if info.kind in ("+inf", "-inf"):
        part = exact_sign_partition(seq)
        if info.kind == "+inf":  # every term is below the class
            return part.defined, empty_set(), empty_set()
        return empty_set(), empty_set(), part.defined
    part = exact_sign_partition(Sub(seq, Const(info.limit)))
    if info.kind == "constant":
        return part.negatives, part.zeros, part.positives
    # u sits an infinitesimal to one side of the limit; terms equal to the
    # limit land on the opposite side of u, and u equals no standard value.
    if info.side > 0:
        return part.negatives.union(part.zeros), empty_set(), part.positives
    return part.negatives, empty_set(), part.positives.union(part.zeros)


def _term(seq: SequenceExpr, n: int) -> Optional[Fraction]:
    try:
        return eval_expr(seq, n)
    except UndefinedAtIndex:
        return None


def _sampled_sets(
    seq: SequenceExpr, u: Hyper, horizon: int, st_eps: Fraction
) -> tuple[IndexSet, IndexSet, IndexSet]:
    state = u.oracle
    if not is_finite(u):
        side = compare(u, embed(0, state))
        part = sampled_sign_partition(seq, horizon)
        if side == Ordering.GT:
            return part.defined, empty_set(), empty_set()
        return empty_set(), empty_set(), part.defined

    bound = next(
        r
        for r in default_bound_schedule()
        if compare(u, embed(r, state)) == Ordering.LT
        and compare(embed(-r, state), u) == Ordering.LT
    )
    # Narrow the class's position among the standard rationals as far as
    # the ledger can witness; an EQ verdict pins it exactly.  Every
    # stipulation concentrates the core, so stop while enough witnesses
    # remain for the per-term adjudications below.
    lo, hi = -bound, bound
    exact_value = None
    headroom = 8 * state.witness_quota
    while hi - lo > st_eps:
        mid = (lo + hi) / 2
        try:
            side = compare(u, embed(mid, state))
        except AmbiguousAtHorizon:
            break
        if side == Ordering.EQ:
            exact_value = mid
            break
        if side == Ordering.LT:
            hi = mid
        else:
            lo = mid
        tail = state.ledger[-2:]
        if any(d.reason == "Stipulated" and d.witness_count < headroom for d in tail):
            break

    if exact_value is not None:
        part = sampled_sign_partition(Sub(seq, Const(exact_value)), horizon)
        return part.negatives, part.zeros, part.positives

    # The ledger certifies lo < u < hi.  Terms outside the band are
    # placed directly; a term value inside it is sided by asking the
    # oracle where it falls relative to the tail, memoized per value.
    side_memo: dict[Fraction, int] = {}

    def side_of(v: Fraction) -> int:
        if v <= lo:
            return -1
        if v >= hi:
            return 1
        cached = side_memo.get(v)
        if cached is None:
            above_v = SampledSet(
                lambda m, v=v: (t := _term(seq, m)) is not None and t > v,
                horizon,
                f"terms-above({v})",
            )
            if state.measure(above_v) == 1:
                cached = -1
            else:
                equal_v = SampledSet(
                    lambda m, v=v: _term(seq, m) == v, horizon, f"terms-equal({v})"
                )
                cached = 0 if state.measure(equal_v) == 1 else 1
            side_memo[v] = cached
        return cached

    def mk(which: int, label: str) -> SampledSet:
        def fn(n: int) -> bool:
            v = _term(seq, n)
            return v is not None and side_of(v) == which

        return SampledSet(fn, horizon, label)

    below = mk(-1, "below-class")
    equal = mk(0, "equal-class")
    above = mk(1, "above-class")
    # Resolve memberships eagerly so the classifying measure queries do
    # not interleave with the per-value queries above.
    for n in range(min(horizon, state.h_fip)):
        below.member(n)
        equal.member(n)
        above.member(n)
    return below, equal, above


def extract(
    tri: Trichotomy, count: int, search_bound: int = DEFAULT_SEARCH_BOUND
) -> Extraction:
    """Extract ``count`` terms of the guaranteed monotone subsequence.

    Constant case: the first members of B.  Increasing case: start at
    min(A) and repeatedly take the earliest later index in A whose term
    strictly exceeds the current one; decreasing is the mirror image.
    The search bound is an evaluation quota shared by the whole walk;
    exceeding it reports the horizon, it does not refute the guarantee.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    seq = tri.u.expr
    budget = search_bound

    if tri.case is Case.CONSTANT:
        indices = []
        try:
            for n in tri.equal.members():
                budget -= 1
                if budget < 0:
                    raise SearchBoundExceeded(f"spent {search_bound} steps enumerating B")
                indices.append(n)
                if len(indices) == count:
                    break
        except (ExhaustedAtHorizon, BeyondHorizon) as e:
            raise SearchBoundExceeded(str(e)) from e
        values = tuple(eval_expr(seq, n) for n in indices)
        out = Extraction(tuple(indices), Direction.CONSTANT, values)
        out.check()
        return out

    increasing = tri.case is Case.INCREASING
    source = tri.below if increasing else tri.above
    indices: list[int] = []
    values: list[Fraction] = []
    try:
        for n in source.members():
            budget -= 1
            if budget < 0:
                raise SearchBoundExceeded(
                    f"spent {search_bound} evaluations after {len(indices)} terms"
                )
            v = eval_expr(seq, n)
            if not indices or (v > values[-1] if increasing else v < values[-1]):
                indices.append(n)
                values.append(v)
                if len(indices) == count:
                    break
    except (ExhaustedAtHorizon, BeyondHorizon) as e:
        raise SearchBoundExceeded(str(e)) from e
    direction = Direction.STRICTLY_INCREASING if increasing else Direction.STRICTLY_DECREASING
    out = Extraction(tuple(indices), direction, tuple(values))
    out.check()
    return out


def peaks(seq: SequenceExpr, prefix_len: int) -> Extraction:
    """Finite-prefix peak analysis.

    A term at index i is a prefix-peak when it strictly exceeds every
    later term of the prefix.  Two or more peaks yield the strictly
    decreasing subsequence of peak values.  Otherwise the only peak is
    the final index and the greedy increasing walk from index 0 is
    returned.  This is a cross-check device: the prefix semantics decide
    what an infinite-stream definition cannot.
    """
    if prefix_len < 1:
        raise PrefixTooShort("prefix must contain at least one term")
    values = [eval_expr(seq, n) for n in range(prefix_len)]
    peak_idx = []
    running_max = None
    for i in range(prefix_len - 1, -1, -1):
        if running_max is None or values[i] > running_max:
            peak_idx.append(i)
            running_max = values[i]
    peak_idx.reverse()
    if len(peak_idx) >= 2:
        out = Extraction(
            tuple(peak_idx), Direction.STRICTLY_DECREASING, tuple(values[i] for i in peak_idx)
        )
        out.check()
        return out
    indices = [0]
    for j in range(1, prefix_len):
        if values[j] > values[indices[-1]]:
            indices.append(j)
    out = Extraction(
        tuple(indices), Direction.STRICTLY_INCREASING, tuple(values[i] for i in indices)
    )
    out.check()
    return out


def extract_decreasing_above_st(
    u_seq: SequenceExpr,
    state: OracleState,
    count: int,
    search_bound: int = DEFAULT_SEARCH_BOUND,
    st_eps: Fraction = Fraction(1, 10**9),
) -> Extraction:
    """Strictly decreasing subsequence of a finite class sitting above
    its standard part.

    Starts at the least index with term above st(u) and repeatedly takes
    the earliest later term strictly between st(u) and the current term
    (each step lands closer to the class).  Requires u > st(u); the
    mirror statement is obtained by negating the sequence.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    u = Hyper(u_seq, state)
    if not is_finite(u):
        raise PreconditionFailed("class is not finite")
    u0 = st(u, st_eps)
    if compare(u, embed(u0, state)) != Ordering.GT:
        raise PreconditionFailed(f"class does not exceed its standard part {u0}")

    indices: list[int] = []
    values: list[Fraction] = []
    n = 0
    budget = search_bound
    while len(indices) < count:
        budget -= 1
        if budget < 0:
            raise SearchBoundExceeded(
                f"spent {search_bound} evaluations after {len(indices)} terms"
            )
        try:
            v = eval_expr(u_seq, n)
        except UndefinedAtIndex:
            n += 1
            continue
        if v > u0 and (not values or v < values[-1]):
            indices.append(n)
            values.append(v)
        n += 1
    out = Extraction(tuple(indices), Direction.STRICTLY_DECREASING, tuple(values))
    out.check()
    return out
