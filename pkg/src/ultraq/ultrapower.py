"""Exact hyperrational numbers as sequence classes.

A sequence is a closed-form expression over exact rationals (the DSL
AST below).  A ``Hyper`` is such an expression bound to an oracle state;
two of them are equal when their terms agree on a measure-one set, and
``u < v`` exactly when the index set ``{n : u_n < v_n}`` measures 1.

The work horse is the *tame* analysis: rational functions of the index
combined with periodic and residue-piecewise nodes reduce, on each
residue class modulo a common period, to a single rational function.
Eventual signs of rational functions are decided exactly from leading
coefficients, with Sturm-chain thresholds bounding where sign changes
can still happen, so comparison sets come out as exact eventually
periodic sets and every verdict is reproducible.  Expressions containing
seeded random nodes fall back to sampled sets with honest horizons.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from math import lcm
from typing import Callable, NamedTuple, Optional

from . import polyq as P
from .errors import (
    DivisionByZeroClass,
    MixedOracles,
    NotDecidedAtBound,
    NotFinite,
    PreconditionFailed,
    UndefinedAtIndex,
)
from .index_sets import DEFAULT_HORIZON, ExactSet, IndexSet, SampledSet, empty_set
from .oracle import OracleState

# ---------------------------------------------------------------------------
# Sequence expressions


class SequenceExpr:
    """Base class for closed-form exact-rational sequences."""

    __slots__ = ()


@dataclass(frozen=True)
class Const(SequenceExpr):
    value: Fraction


@dataclass(frozen=True)
class Var(SequenceExpr):
    """The index variable n."""


@dataclass(frozen=True)
class Add(SequenceExpr):
    lhs: SequenceExpr
    rhs: SequenceExpr


@dataclass(frozen=True)
class Sub(SequenceExpr):
    lhs: SequenceExpr
    rhs: SequenceExpr


@dataclass(frozen=True)
class Mul(SequenceExpr):
    lhs: SequenceExpr
    rhs: SequenceExpr


@dataclass(frozen=True)
class Div(SequenceExpr):
    lhs: SequenceExpr
    rhs: SequenceExpr


@dataclass(frozen=True)
class Pow(SequenceExpr):
    base: SequenceExpr
    exponent: int  # >= 0; negative powers are parsed into Div


@dataclass(frozen=True)
class Periodic(SequenceExpr):
    """Cycled literal pattern: term n is values[n mod len(values)]."""

    values: tuple


@dataclass(frozen=True)
class PrefixThen(SequenceExpr):
    """Explicit finite list of leading terms, then a tail expression."""

    prefix: tuple
    tail: SequenceExpr


@dataclass(frozen=True)
class IfMod(SequenceExpr):
    """Residue-piecewise: then-branch on n = residue (mod modulus)."""

    modulus: int
    residue: int
    then_branch: SequenceExpr
    else_branch: SequenceExpr


@dataclass(frozen=True)
class Rand(SequenceExpr):
    """Seeded pseudorandom rationals in [lo, hi].  Deterministic per index."""

    seed: int
    lo: Fraction
    hi: Fraction


@dataclass(frozen=True)
class GuardedInv(SequenceExpr):
    """Field inverse representative: 1/u_n where u_n is nonzero, else 0."""

    inner: SequenceExpr


@dataclass(frozen=True)
class FuncSeq(SequenceExpr):
    """Opaque callback sequence (used for computed witnesses).  Never tame."""

    fn: Callable[[int], Fraction]
    label: str


def constant(q) -> Const:
    return Const(Fraction(q))


_RAND_DENOM = 10**6


def _rand_value(node: Rand, n: int) -> Fraction:
    rng = random.Random(node.seed * (2**40) + n)
    t = Fraction(rng.randint(0, _RAND_DENOM), _RAND_DENOM)
    return node.lo + (node.hi - node.lo) * t


def eval_expr(expr: SequenceExpr, n: int) -> Fraction:
    """Exact value of the n-th term.  Raises UndefinedAtIndex on a zero
    denominator anywhere in the term's evaluation."""
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, Var):
        return Fraction(n)
    if isinstance(expr, Add):
        return eval_expr(expr.lhs, n) + eval_expr(expr.rhs, n)
    if isinstance(expr, Sub):
        return eval_expr(expr.lhs, n) - eval_expr(expr.rhs, n)
    if isinstance(expr, Mul):
        return eval_expr(expr.lhs, n) * eval_expr(expr.rhs, n)
    if isinstance(expr, Div):
        den = eval_expr(expr.rhs, n)
        if den == 0:
            raise UndefinedAtIndex(n)
        return eval_expr(expr.lhs, n) / den
    if isinstance(expr, Pow):
        return eval_expr(expr.base, n) ** expr.exponent
    if isinstance(expr, Periodic):
        return expr.values[n % len(expr.values)]
    if isinstance(expr, PrefixThen):
        if n < len(expr.prefix):
            return expr.prefix[n]
        return eval_expr(expr.tail, n)
    if isinstance(expr, IfMod):
        branch = expr.then_branch if n % expr.modulus == expr.residue else expr.else_branch
        return eval_expr(branch, n)
    if isinstance(expr, Rand):
        return _rand_value(expr, n)
    if isinstance(expr, GuardedInv):
        v = eval_expr(expr.inner, n)
        return 1 / v if v != 0 else Fraction(0)
    if isinstance(expr, FuncSeq):
        return Fraction(expr.fn(n))
    raise TypeError(f"not a sequence expression: {expr!r}")


def to_dsl(expr: SequenceExpr) -> str:
    """Render an expression in the textual DSL."""
    if isinstance(expr, Const):
        v = expr.value
        s = str(v)
        return s if v >= 0 else f"({s})"
    if isinstance(expr, Var):
        return "n"
    if isinstance(expr, Add):
        return f"({to_dsl(expr.lhs)} + {to_dsl(expr.rhs)})"
    if isinstance(expr, Sub):
        return f"({to_dsl(expr.lhs)} - {to_dsl(expr.rhs)})"
    if isinstance(expr, Mul):
        return f"({to_dsl(expr.lhs)} * {to_dsl(expr.rhs)})"
    if isinstance(expr, Div):
        return f"({to_dsl(expr.lhs)} / {to_dsl(expr.rhs)})"
    if isinstance(expr, Pow):
        return f"({to_dsl(expr.base)})^{expr.exponent}"
    if isinstance(expr, Periodic):
        return "per[" + ",".join(str(v) for v in expr.values) + "]"
    if isinstance(expr, PrefixThen):
        return "prefix[" + ",".join(str(v) for v in expr.prefix) + "; " + to_dsl(expr.tail) + "]"
    if isinstance(expr, IfMod):
        return (
            f"ifmod({expr.modulus},{expr.residue}; "
            f"{to_dsl(expr.then_branch)}; {to_dsl(expr.else_branch)})"
        )
    if isinstance(expr, Rand):
        return f"rand({expr.seed},{expr.lo},{expr.hi})"
    if isinstance(expr, GuardedInv):
        return f"inv({to_dsl(expr.inner)})"
    if isinstance(expr, FuncSeq):
        return f"<{expr.label}>"
    raise TypeError(f"not a sequence expression: {expr!r}")


# ---------------------------------------------------------------------------
# Tame analysis: piecewise rational reduction per residue class.

RatFunc = tuple  # (num: Poly, den: Poly); den is never the zero polynomial

_RF_ZERO: RatFunc = (P.ZERO, P.ONE)


class _NotTame(Exception):
    pass


@dataclass(frozen=True)
class TameForm:
    """Piecewise-rational normal form of a tame expression.

    For ``n >= start`` with ``n`` not in ``special`` and ``a = n mod
    modulus``: if ``funcs[a]`` is None the term is undefined (the whole
    class is dead), otherwise the term equals ``funcs[a]`` evaluated at
    n.  Indices below ``start`` or in ``special`` say nothing; callers
    evaluate those pointwise.
    """

    modulus: int
    start: int
    special: frozenset
    funcs: tuple


def _rf_add(f: RatFunc, g: RatFunc) -> RatFunc:
    return (P.p_add(P.p_mul(f[0], g[1]), P.p_mul(g[0], f[1])), P.p_mul(f[1], g[1]))


def _rf_sub(f: RatFunc, g: RatFunc) -> RatFunc:
    return (P.p_sub(P.p_mul(f[0], g[1]), P.p_mul(g[0], f[1])), P.p_mul(f[1], g[1]))


def _rf_mul(f: RatFunc, g: RatFunc) -> RatFunc:
    return (P.p_mul(f[0], g[0]), P.p_mul(f[1], g[1]))


def _combine(
    a: TameForm, b: TameForm, op: Callable[[RatFunc, RatFunc], Optional[RatFunc]]
) -> TameForm:
    m = lcm(a.modulus, b.modulus)
    special = set(a.special) | set(b.special)
    funcs = []
    for r in range(m):
        fa, fb = a.funcs[r % a.modulus], b.funcs[r % b.modulus]
        if fa is None or fb is None:
            funcs.append(None)
        else:
            funcs.append(op(fa, fb))
    return TameForm(m, max(a.start, b.start), frozenset(special), tuple(funcs))


def _div_forms(a: TameForm, b: TameForm) -> TameForm:
    m = lcm(a.modulus, b.modulus)
    special = set(a.special) | set(b.special)
    funcs = []
    for r in range(m):
        fa, fb = a.funcs[r % a.modulus], b.funcs[r % b.modulus]
        if fa is None or fb is None:
            funcs.append(None)
            continue
        num_b = fb[0]
        if not num_b:  # divisor identically zero on the class
            funcs.append(None)
            continue
        special.update(P.natural_roots(num_b))  # isolated zeros of the divisor
        funcs.append((P.p_mul(fa[0], fb[1]), P.p_mul(fa[1], num_b)))
    return TameForm(m, max(a.start, b.start), frozenset(special), tuple(funcs))


def _tame(expr: SequenceExpr) -> TameForm:
    if isinstance(expr, Const):
        return TameForm(1, 0, frozenset(), ((P.const(expr.value), P.ONE),))
    if isinstance(expr, Var):
        return TameForm(1, 0, frozenset(), ((P.X, P.ONE),))
    if isinstance(expr, Add):
        return _combine(_tame(expr.lhs), _tame(expr.rhs), _rf_add)
    if isinstance(expr, Sub):
        return _combine(_tame(expr.lhs), _tame(expr.rhs), _rf_sub)
    if isinstance(expr, Mul):
        return _combine(_tame(expr.lhs), _tame(expr.rhs), _rf_mul)
    if isinstance(expr, Div):
        return _div_forms(_tame(expr.lhs), _tame(expr.rhs))
    if isinstance(expr, Pow):
        base = _tame(expr.base)
        funcs = []
        for f in base.funcs:
            if f is None:
                funcs.append(None)
                continue
            acc: RatFunc = (P.ONE, P.ONE)
            for _ in range(expr.exponent):
                acc = _rf_mul(acc, f)
            funcs.append(acc)
        return TameForm(base.modulus, base.start, base.special, tuple(funcs))
    if isinstance(expr, Periodic):
        m = len(expr.values)
        return TameForm(m, 0, frozenset(), tuple((P.const(v), P.ONE) for v in expr.values))
    if isinstance(expr, PrefixThen):
        tail = _tame(expr.tail)
        return TameForm(
            tail.modulus, max(tail.start, len(expr.prefix)), tail.special, tail.funcs
        )
    if isinstance(expr, IfMod):
        a, b = _tame(expr.then_branch), _tame(expr.else_branch)
        m = lcm(expr.modulus, lcm(a.modulus, b.modulus))
        funcs = []
        for r in range(m):
            src = a if r % expr.modulus == expr.residue else b
            funcs.append(src.funcs[r % src.modulus])
        return TameForm(
            m, max(a.start, b.start), frozenset(a.special | b.special), tuple(funcs)
        )
    if isinstance(expr, GuardedInv):
        inner = _tame(expr.inner)
        special = set(inner.special)
        funcs = []
        for f in inner.funcs:
            if f is None:
                funcs.append(None)
                continue
            if not f[0]:  # inner identically zero on the class: inverse is 0
                funcs.append(_RF_ZERO)
                continue
            special.update(P.natural_roots(f[0]))  # value overridden to 0 there
            funcs.append((f[1], f[0]))
        return TameForm(inner.modulus, inner.start, frozenset(special), tuple(funcs))
    raise _NotTame(expr)


@lru_cache(maxsize=4096)
def tame_form(expr: SequenceExpr) -> Optional[TameForm]:
    """Piecewise-rational form of ``expr``, or None outside the tame
    fragment (random nodes, opaque callbacks, oversized root bounds)."""
    try:
        return _tame(expr)
    except (_NotTame, P.ThresholdTooLarge):
        return None


def _evsign(f: RatFunc) -> int:
    """Eventual sign of a rational function as n grows (0 iff identically 0)."""
    if not f[0]:
        return 0
    s = 1 if P.lead(f[0]) > 0 else -1
    return s if P.lead(f[1]) > 0 else -s


def _limit(f: RatFunc) -> tuple[str, Optional[Fraction]]:
    """Limit of a rational function: ('finite', q) or ('+inf'/'-inf', None)."""
    num, den = f
    if not num:
        return "finite", Fraction(0)
    dn, dd = P.degree(num), P.degree(den)
    if dn < dd:
        return "finite", Fraction(0)
    if dn == dd:
        return "finite", P.lead(num) / P.lead(den)
    return ("+inf" if _evsign(f) > 0 else "-inf"), None


class SignPartition(NamedTuple):
    negatives: IndexSet
    zeros: IndexSet
    positives: IndexSet
    defined: IndexSet


def _sign_at(expr: SequenceExpr, n: int) -> Optional[int]:
    try:
        v = eval_expr(expr, n)
    except UndefinedAtIndex:
        return None
    return (v > 0) - (v < 0)


def exact_sign_partition(expr: SequenceExpr) -> Optional[SignPartition]:
    """Partition of the defined indices by term sign, as exact sets.

    Returns None when the expression is not tame or its root bounds are
    too large to scan; callers then fall back to sampled sets.
    """
    tf = tame_form(expr)
    if tf is None:
        return None
    m = tf.modulus
    tails: list[Optional[int]] = []  # eventual sign per class; None = dead class
    scan_to = tf.start
    if tf.special:
        scan_to = max(scan_to, 1 + max(tf.special))
    try:
        for f in tf.funcs:
            if f is None:
                tails.append(None)
                continue
            tails.append(_evsign(f))
            if f[0]:
                scan_to = max(scan_to, P.sign_threshold(f[0]))
            scan_to = max(scan_to, P.sign_threshold(f[1]))
    except P.ThresholdTooLarge:
        return None

    neg_r = {r for r in range(m) if tails[r] == -1}
    zero_r = {r for r in range(m) if tails[r] == 0}
    pos_r = {r for r in range(m) if tails[r] == 1}
    def_r = {r for r in range(m) if tails[r] is not None}

    neg_e, zero_e, pos_e, def_e = {}, {}, {}, {}
    for n in range(scan_to):
        s = _sign_at(expr, n)
        neg_e[n] = s == -1
        zero_e[n] = s == 0
        pos_e[n] = s == 1
        def_e[n] = s is not None
    return SignPartition(
        ExactSet.make(scan_to, m, neg_r, neg_e),
        ExactSet.make(scan_to, m, zero_r, zero_e),
        ExactSet.make(scan_to, m, pos_r, pos_e),
        ExactSet.make(scan_to, m, def_r, def_e),
    )


def sampled_sign_partition(expr: SequenceExpr, horizon: int = DEFAULT_HORIZON) -> SignPartition:
    label = to_dsl(expr)
    return SignPartition(
        SampledSet(lambda n: _sign_at(expr, n) == -1, horizon, f"neg({label})"),
        SampledSet(lambda n: _sign_at(expr, n) == 0, horizon, f"zero({label})"),
        SampledSet(lambda n: _sign_at(expr, n) == 1, horizon, f"pos({label})"),
        SampledSet(lambda n: _sign_at(expr, n) is not None, horizon, f"def({label})"),
    )


def sign_partition(expr: SequenceExpr, horizon: int = DEFAULT_HORIZON) -> SignPartition:
    part = exact_sign_partition(expr)
    if part is None:
        part = sampled_sign_partition(expr, horizon)
    return part


def sign_set(expr: SequenceExpr, horizon: int = DEFAULT_HORIZON) -> tuple[IndexSet, IndexSet, IndexSet]:
    """The triple ({e_n < 0}, {e_n = 0}, {e_n > 0}); exact when tame."""
    part = sign_partition(expr, horizon)
    return part.negatives, part.zeros, part.positives


def defined_set(expr: SequenceExpr, horizon: int = DEFAULT_HORIZON) -> IndexSet:
    return sign_partition(expr, horizon).defined


# ---------------------------------------------------------------------------
# Tail behavior along the oracle's committed residue class.


@dataclass(frozen=True)
class TailInfo:
    """How a tame sequence behaves on the measure-one residue class.

    ``kind`` is 'constant' (class value equals ``limit`` identically),
    'finite' (proper limit ``limit``, approached from the side given by
    ``side``: +1 above, -1 below), or '+inf' / '-inf'.
    """

    kind: str
    limit: Optional[Fraction]
    side: int


def tail_behavior(expr: SequenceExpr, state: OracleState) -> Optional[TailInfo]:
    """Pin the tower at the expression's period and read off the class
    tail.  Returns None when the expression is not tame; raises
    PreconditionFailed when the winning class is undefined."""
    tf = tame_form(expr)
    if tf is None:
        return None
    r = state.committed_residue(tf.modulus)
    g = tf.funcs[r]
    if g is None:
        raise PreconditionFailed("sequence is undefined on a measure-one residue class")
    if P.degree(g[0]) <= 0 and P.degree(g[1]) <= 0:
        value = (g[0][0] / g[1][0]) if g[0] else Fraction(0)
        return TailInfo("constant", value, 0)
    kind, limit = _limit(g)
    if kind != "finite":
        return TailInfo(kind, None, 0)
    side = _evsign(_rf_sub(g, (P.const(limit), P.ONE)))
    if side == 0:  # non-constant ratfunc equal to its limit: reduced constant
        return TailInfo("constant", limit, 0)
    return TailInfo("finite", limit, side)


# ---------------------------------------------------------------------------
# Hyperrationals


class Ordering(Enum):
    LT = "LT"
    EQ = "EQ"
    GT = "GT"


def default_bound_schedule():
    return [Fraction(2) ** k for k in range(65)]


class Hyper:
    """Equivalence class of a sequence, bound to one oracle state.

    Termwise arithmetic never touches the oracle; equality and order do,
    and inherit its single-owner requirement.  Arithmetic with plain
    ints/Fractions embeds them as constant sequences.
    """

    __slots__ = ("expr", "oracle")

    def __init__(self, expr: SequenceExpr, oracle: OracleState):
        self.expr = expr
        self.oracle = oracle

    def _coerce(self, other) -> "Hyper":
        if isinstance(other, Hyper):
            if other.oracle is not self.oracle:
                raise MixedOracles("operands are bound to different oracle states")
            return other
        return Hyper(constant(other), self.oracle)

    def __add__(self, other):
        o = self._coerce(other)
        return Hyper(Add(self.expr, o.expr), self.oracle)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return Hyper(Sub(self.expr, o.expr), self.oracle)

    def __rsub__(self, other):
        o = self._coerce(other)
        return Hyper(Sub(o.expr, self.expr), self.oracle)

    def __mul__(self, other):
        o = self._coerce(other)
        return Hyper(Mul(self.expr, o.expr), self.oracle)

    __rmul__ = __mul__

    def __neg__(self):
        return Hyper(Sub(Const(Fraction(0)), self.expr), self.oracle)

    def inv(self) -> "Hyper":
        return inv(self)

    def compare(self, other) -> Ordering:
        return compare(self, self._coerce(other))

    def is_finite(self, bound_schedule=None) -> bool:
        return is_finite(self, bound_schedule)

    def st(self, eps=Fraction(1, 10**9)) -> Fraction:
        return st(self, eps)

    def __repr__(self) -> str:
        return f"[⟨{to_dsl(self.expr)}⟩]"


def embed(q, state: OracleState) -> Hyper:
    """The canonical copy of a standard rational: its constant sequence."""
    return Hyper(constant(q), state)


def add(u: Hyper, v: Hyper) -> Hyper:
    return u + v


def sub(u: Hyper, v: Hyper) -> Hyper:
    return u - v


def mul(u: Hyper, v: Hyper) -> Hyper:
    return u * v


def neg(u: Hyper) -> Hyper:
    return -u


def inv(u: Hyper) -> Hyper:
    """Multiplicative inverse of a nonzero class.

    The representative takes the value 0 on the (measure-zero) set where
    the original terms vanish; any value there gives the same class.
    """
    part = sign_partition(u.expr)
    if u.oracle.measure(part.zeros) == 1:
        raise DivisionByZeroClass("class is zero on a measure-one set")
    return Hyper(GuardedInv(u.expr), u.oracle)


def compare(u: Hyper, v: Hyper) -> Ordering:
    """Three-way order on classes, decided by the measure of the sign
    sets of the termwise difference."""
    if u.oracle is not v.oracle:
        raise MixedOracles("operands are bound to different oracle states")
    state = u.oracle
    diff = Sub(u.expr, v.expr)
    part = sign_partition(diff)
    if state.measure(part.negatives) == 1:
        return Ordering.LT
    if state.measure(part.zeros) == 1:
        return Ordering.EQ
    if isinstance(part.defined, ExactSet):
        r = state.committed_residue(part.defined.modulus)
        if r not in part.defined.residues:
            raise PreconditionFailed("difference is undefined on a measure-one set")
    return Ordering.GT


def is_finite(u: Hyper, bound_schedule=None) -> bool:
    """Whether some standard rational bounds |u|.

    Tame classes are decided exactly from the degree of the rational
    function on the committed residue class; otherwise the bound
    schedule is tried via comparisons, and running out raises
    NotDecidedAtBound."""
    info = tail_behavior(u.expr, u.oracle)
    if info is not None:
        return info.kind in ("constant", "finite")
    schedule = default_bound_schedule() if bound_schedule is None else bound_schedule
    for r in schedule:
        bound = embed(r, u.oracle)
        if compare(u, bound) == Ordering.LT and compare(embed(-r, u.oracle), u) == Ordering.LT:
            return True
    raise NotDecidedAtBound(f"|u| not bounded by any r in the schedule ({len(list(schedule))} entries)")


def st_exact(u: Hyper) -> Optional[Fraction]:
    """Standard part through the tame fast path, or None if unavailable.
    Raises NotFinite for a tame infinite element."""
    info = tail_behavior(u.expr, u.oracle)
    if info is None:
        return None
    if info.kind in ("+inf", "-inf"):
        raise NotFinite(f"class diverges to {info.kind} on its residue class")
    return info.limit


def st(u: Hyper, eps=Fraction(1, 10**9)) -> Fraction:
    """Standard part: the unique standard number infinitely close to a
    finite class.

    Tame classes with a rational limit return it exactly (eps ignored).
    Otherwise bisection on comparisons narrows an enclosing interval to
    width <= eps, starting from the finiteness bound."""
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    exact = st_exact(u)
    if exact is not None:
        return exact
    if not is_finite(u):
        raise NotFinite("standard part of an infinite element")
    bound = next(r for r in default_bound_schedule()
                 if compare(u, embed(r, u.oracle)) == Ordering.LT
                 and compare(embed(-r, u.oracle), u) == Ordering.LT)
    lo, hi = -bound, bound
    while hi - lo > eps:
        mid = (lo + hi) / 2
        side = compare(u, embed(mid, u.oracle))
        if side == Ordering.EQ:
            return mid
        if side == Ordering.LT:
            hi = mid
        else:
            lo = mid
    return (lo + hi) / 2
