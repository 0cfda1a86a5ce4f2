"""Dense univariate polynomials over exact rationals.

Just enough real-root machinery for eventual-sign analysis: Sturm
chains, root counting above a point, and an integer threshold past which
a polynomial's sign stops changing.  Coefficients are ``Fraction``s
stored low degree first with no trailing zeros; the zero polynomial
is the empty tuple.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable

Poly = tuple  # tuple[Fraction, ...]

ZERO: Poly = ()
ONE: Poly = (Fraction(1),)
X: Poly = (Fraction(0), Fraction(1))

# Beyond this, pointwise scanning below the sign threshold is refused
# and callers fall back to sampled (horizon-limited) representations.
SCAN_LIMIT = 50_000


class ThresholdTooLarge(Exception):
    """Real-root bound exceeds what pointwise scanning can afford."""


def poly(coeffs: Iterable) -> Poly:
    cs = [Fraction(c) for c in coeffs]
    while cs and cs[-1] == 0:
        cs.pop()
    return tuple(cs)


def const(c) -> Poly:
    return poly([c])


def degree(p: Poly) -> int:
    return len(p) - 1


def lead(p: Poly) -> Fraction:
    return p[-1]


def p_eval(p: Poly, x) -> Fraction:
    acc = Fraction(0)
    for c in reversed(p):
        acc = acc * x + c
    return acc


def p_add(a: Poly, b: Poly) -> Poly:
    n = max(len(a), len(b))
    return poly([(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)])


def p_neg(a: Poly) -> Poly:
    return tuple(-c for c in a)


def p_sub(a: Poly, b: Poly) -> Poly:
    return p_add(a, p_neg(b))


def p_mul(a: Poly, b: Poly) -> Poly:
    if not a or not b:
        return ZERO
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, ca in enumerate(a):
        for j, cb in enumerate(b):
            out[i + j] += ca * cb
    return poly(out)


def p_scale(a: Poly, s) -> Poly:
    return poly([c * s for c in a])


def p_divmod(a: Poly, b: Poly) -> tuple[Poly, Poly]:
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    q = [Fraction(0)] * max(len(a) - len(b) + 1, 0)
    r = list(a)
    while len(r) >= len(b) and any(c != 0 for c in r):
        while r and r[-1] == 0:
            r.pop()
        if len(r) < len(b):
            break
        f = r[-1] / b[-1]
        k = len(r) - len(b)
        q[k] = f
        for i, c in enumerate(b):
            r[k + i] -= f * c
        r.pop()
    return poly(q), poly(r)


def p_deriv(p: Poly) -> Poly:
    return poly([i * c for i, c in enumerate(p)][1:])


def p_gcd(a: Poly, b: Poly) -> Poly:
    while b:
        a, b = b, p_divmod(a, b)[1]
    if not a:
        return ZERO
    return p_scale(a, 1 / lead(a))  # monic


def squarefree(p: Poly) -> Poly:
    g = p_gcd(p, p_deriv(p))
    if degree(g) < 1:
        return p
    q, r = p_divmod(p, g)
    assert not r, "gcd must divide"
    return q


def _shrink(p: Poly) -> Poly:
    # Positive rescaling keeps Sturm signs while containing coefficient growth.
    m = max(abs(c) for c in p)
    return p_scale(p, 1 / m) if m else p


def sturm_chain(p: Poly) -> list[Poly]:
    chain = [_shrink(p)]
    d = p_deriv(p)
    if d:
        chain.append(_shrink(d))
        while True:
            r = p_divmod(chain[-2], chain[-1])[1]
            if not r:
                break
            chain.append(_shrink(p_neg(r)))
    return chain


def _sign(x) -> int:
    return (x > 0) - (x < 0)


def _variations(signs: list[int]) -> int:
    seq = [s for s in signs if s != 0]
    return sum(1 for a, b in zip(seq, seq[1:]) if a != b)


def _variations_at(chain: list[Poly], x) -> int:
    return _variations([_sign(p_eval(p, x)) for p in chain])


def _variations_at_inf(chain: list[Poly]) -> int:
    return _variations([_sign(lead(p)) for p in chain])


def cauchy_root_bound(p: Poly) -> int:
    """An integer strictly above the absolute value of every real root."""
    if degree(p) < 1:
        return 1
    m = max(abs(c) for c in p[:-1])
    b = 1 + m / abs(lead(p))
    return int(b) + 1


def sign_threshold(p: Poly) -> int:
    """Smallest natural ``T`` with ``sign(p(n)) == sign(lead(p))`` and
    ``p(n) != 0`` for every integer ``n >= T``.

    Raises ThresholdTooLarge when the bound exceeds SCAN_LIMIT.
    """
    if not p:
        raise ValueError("the zero polynomial has no sign threshold")
    if degree(p) == 0:
        return 0
    s = squarefree(p)
    chain = sturm_chain(s)
    vinf = _variations_at_inf(chain)

    def roots_above(x) -> int:
        # Distinct real roots in (x, +inf).
        return _variations_at(chain, x) - vinf

    if roots_above(0) == 0:
        t = 1 if p_eval(p, 0) == 0 else 0
    else:
        lo, hi = 0, cauchy_root_bound(p)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if roots_above(mid) > 0:
                lo = mid
            else:
                hi = mid
        t = hi + 1
    if t > SCAN_LIMIT:
        raise ThresholdTooLarge(t)
    return t


def natural_roots(p: Poly) -> list[int]:
    """All roots of ``p`` that are natural numbers.  ``p`` must be nonzero."""
    t = sign_threshold(p)
    return [n for n in range(t) if p_eval(p, n) == 0]
