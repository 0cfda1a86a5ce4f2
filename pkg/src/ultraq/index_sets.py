"""Symbolic subsets of the natural numbers.

Two carriers.  ``ExactSet`` is an eventually periodic set in canonical
normal form: a finite list of membership overrides below a threshold,
then a union of residue classes modulo a minimal modulus.  This class of
sets is closed under the Boolean operations and has decidable equality,
which is what the measure oracle's ledger needs.  ``SampledSet`` wraps a
membership callback and honestly refuses to answer beyond a fixed
horizon.

Both kinds are immutable after construction and safe to share.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from math import gcd, lcm
from typing import Callable, Iterator, Mapping

from .errors import (
    BeyondHorizon,
    EmptySet,
    ExhaustedAtHorizon,
    ParseError,
    UndecidableOnSampled,
)

DEFAULT_HORIZON = 10_000


def _divisors(m: int) -> list[int]:
    return [d for d in range(1, m + 1) if m % d == 0]


@dataclass(frozen=True)
class ExactSet:
    """Eventually periodic set, always in canonical form.

    For ``n >= threshold`` membership is ``n % modulus in residues``;
    below the threshold the finitely many overrides in ``exceptions``
    apply, defaulting to the same residue rule.  Canonical means: the
    modulus is minimal, every stored exception actually deviates from
    the residue rule, and the threshold is one past the largest
    exception (or zero).  Two exact sets are extensionally equal iff
    their fields are identical, so ``==`` decides set equality.
    """

    threshold: int
    modulus: int
    residues: frozenset
    exceptions: tuple

    def __post_init__(self):
        object.__setattr__(self, "_emap", dict(self.exceptions))

    @classmethod
    def make(cls, threshold: int, modulus: int, residues, exceptions: Mapping[int, bool] = ()) -> "ExactSet":
        """Canonicalize and build.  ``exceptions`` maps index -> membership."""
        if modulus < 1:
            raise ValueError("modulus must be >= 1")
        rset = {r % modulus for r in residues}
        emap = dict(exceptions)
        for k in emap:
            if not 0 <= k < threshold:
                raise ValueError("exception indices must lie below the threshold")
        # Minimal modulus: smallest divisor whose shifts fix the residue set.
        for d in _divisors(modulus):
            if all((r in rset) == (((r + d) % modulus) in rset) for r in range(modulus)):
                rset = {r for r in rset if r < d}
                modulus = d
                break
        pruned = {k: v for k, v in emap.items() if v != ((k % modulus) in rset)}
        threshold = 1 + max(pruned) if pruned else 0
        return cls(threshold, modulus, frozenset(rset), tuple(sorted(pruned.items())))

    # -- queries ---------------------------------------------------------

    def member(self, n: int) -> bool:
        e = self._emap.get(n)
        if e is not None:
            return e
        return (n % self.modulus) in self.residues

    def is_finite(self) -> bool:
        return not self.residues

    def is_cofinite(self) -> bool:
        return len(self.residues) == self.modulus

    def members(self) -> Iterator[int]:
        if self.is_finite():
            for k, v in self.exceptions:
                if v:
                    yield k
            return
        n = 0
        while True:
            if self.member(n):
                yield n
            n += 1

    # -- algebra ---------------------------------------------------------

    def complement(self) -> "ExactSet":
        return ExactSet.make(
            self.threshold,
            self.modulus,
            set(range(self.modulus)) - self.residues,
            {k: not v for k, v in self.exceptions},
        )

    def intersect(self, other: "IndexSet") -> "IndexSet":
        if isinstance(other, SampledSet):
            return other.intersect(self)
        m = lcm(self.modulus, other.modulus)
        rset = {
            r
            for r in range(m)
            if (r % self.modulus) in self.residues and (r % other.modulus) in other.residues
        }
        n = max(self.threshold, other.threshold)
        emap = {k: self.member(k) and other.member(k) for k in range(n)}
        return ExactSet.make(n, m, rset, emap)

    def union(self, other: "IndexSet") -> "IndexSet":
        if isinstance(other, SampledSet):
            return other.union(self)
        m = lcm(self.modulus, other.modulus)
        rset = {
            r
            for r in range(m)
            if (r % self.modulus) in self.residues or (r % other.modulus) in other.residues
        }
        n = max(self.threshold, other.threshold)
        emap = {k: self.member(k) or other.member(k) for k in range(n)}
        return ExactSet.make(n, m, rset, emap)

    def is_subset(self, other: "ExactSet") -> bool:
        return self.intersect(other) == self

    # -- presentation ----------------------------------------------------

    def to_json(self) -> dict:
        return {
            "kind": "exact",
            "N": self.threshold,
            "m": self.modulus,
            "R": sorted(self.residues),
            "E": [[k, v] for k, v in self.exceptions],
        }

    def __repr__(self) -> str:
        if self.is_finite():
            return "{" + ",".join(str(k) for k, v in self.exceptions if v) + "}"
        body = f"mod({self.modulus},{{{','.join(map(str, sorted(self.residues)))}}})"
        if self.exceptions:
            body += f"@N={self.threshold}"
        return body


class SampledSet:
    """Membership callback with an explicit horizon.

    Never reports membership at or beyond the horizon; evaluated answers
    are cached so repeated witness scans stay cheap.
    """

    def __init__(self, fn: Callable[[int], bool], horizon: int = DEFAULT_HORIZON, label: str = "sampled"):
        self.fn = fn
        self.horizon = horizon
        self.label = label
        self._cache: dict[int, bool] = {}

    def member(self, n: int) -> bool:
        if n >= self.horizon:
            raise BeyondHorizon(f"{self.label}: membership of {n} is beyond horizon {self.horizon}")
        v = self._cache.get(n)
        if v is None:
            v = bool(self.fn(n))
            self._cache[n] = v
        return v

    def members(self) -> Iterator[int]:
        for n in range(self.horizon):
            if self.member(n):
                yield n
        raise ExhaustedAtHorizon(f"{self.label}: enumeration exhausted at horizon {self.horizon}")

    def witnesses(self, limit: int | None = None) -> list[int]:
        lim = self.horizon if limit is None else min(limit, self.horizon)
        return [n for n in range(lim) if self.member(n)]

    def complement(self) -> "SampledSet":
        return SampledSet(lambda n: not self.member(n), self.horizon, f"!({self.label})")

    def intersect(self, other: "IndexSet") -> "SampledSet":
        h = min(self.horizon, other.horizon) if isinstance(other, SampledSet) else self.horizon
        return SampledSet(
            lambda n: self.member(n) and other.member(n), h, f"({self.label})&({_label(other)})"
        )

    def union(self, other: "IndexSet") -> "SampledSet":
        h = min(self.horizon, other.horizon) if isinstance(other, SampledSet) else self.horizon
        return SampledSet(
            lambda n: self.member(n) or other.member(n), h, f"({self.label})|({_label(other)})"
        )

    def to_json(self) -> dict:
        return {"kind": "sampled", "H": self.horizon, "members": self.witnesses()}

    def __repr__(self) -> str:
        return f"sampled[{self.label}; H={self.horizon}]"


IndexSet = ExactSet | SampledSet


def _label(s: IndexSet) -> str:
    return s.label if isinstance(s, SampledSet) else repr(s)


# -- spec-level operations -------------------------------------------------


def complement(s: IndexSet) -> IndexSet:
    return s.complement()


def intersect(s: IndexSet, t: IndexSet) -> IndexSet:
    return s.intersect(t)


def union(s: IndexSet, t: IndexSet) -> IndexSet:
    return s.union(t)


def is_finite_set(s: IndexSet) -> bool:
    if isinstance(s, SampledSet):
        raise UndecidableOnSampled("finiteness of a sampled set is undecidable")
    return s.is_finite()


def is_cofinite_set(s: IndexSet) -> bool:
    if isinstance(s, SampledSet):
        raise UndecidableOnSampled("cofiniteness of a sampled set is undecidable")
    return s.is_cofinite()


def nth_member(s: IndexSet, k: int) -> int:
    """The k-th smallest member, 0-based."""
    if k < 0:
        raise ValueError("k must be a natural number")
    if isinstance(s, SampledSet):
        seen = 0
        for n in range(s.horizon):
            if s.member(n):
                if seen == k:
                    return n
                seen += 1
        raise ExhaustedAtHorizon(
            f"{s.label}: fewer than {k + 1} witnesses below horizon {s.horizon}"
        )
    seen = 0
    for n in s.members():
        if seen == k:
            return n
        seen += 1
    raise EmptySet(f"set has only {seen} members, member {k} requested")


# -- convenience constructors ----------------------------------------------


def from_residues(modulus: int, residues) -> ExactSet:
    return ExactSet.make(0, modulus, residues)


def finite_set(members) -> ExactSet:
    ms = sorted(set(members))
    n = ms[-1] + 1 if ms else 0
    return ExactSet.make(n, 1, set(), {k: True for k in ms})


def cofinite_except(holes) -> ExactSet:
    hs = sorted(set(holes))
    n = hs[-1] + 1 if hs else 0
    return ExactSet.make(n, 1, {0}, {k: False for k in hs})


def full_set() -> ExactSet:
    return ExactSet.make(0, 1, {0})


def empty_set() -> ExactSet:
    return ExactSet.make(0, 1, set())


def tail_set(start: int) -> ExactSet:
    """The set {n : n >= start}."""
    return ExactSet.make(start, 1, {0}, {k: False for k in range(start)})


# -- serialization -----------------------------------------------------------


def set_to_json(s: IndexSet) -> dict:
    return s.to_json()


def set_from_json(doc: dict) -> IndexSet:
    if doc.get("kind") == "sampled":
        members = set(doc["members"])
        return SampledSet(lambda n: n in members, doc["H"], label="restored")
    emap = {int(k): bool(v) for k, v in doc.get("E", [])}
    return ExactSet.make(doc["N"], doc["m"], set(doc["R"]), emap)


# -- textual set expressions --------------------------------------------------
#
# Grammar used by the CLI `measure` command:
#   expr   := term ('|' term)*
#   term   := factor ('&' factor)*
#   factor := '!' factor | atom
#   atom   := 'finite{a,b,...}' | 'mod(m,{r,...})' | 'cofinite_except{a,...}'
#           | 'tail(N)' | '(' expr ')'


class _SetParser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, msg: str):
        raise ParseError(msg, self.pos)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str):
        if self.peek() != ch:
            self.error(f"expected {ch!r}")
        self.pos += 1

    def integer(self) -> int:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if start == self.pos:
            self.error("expected an integer")
        return int(self.text[start:self.pos])

    def int_list(self) -> list[int]:
        self.expect("{")
        out = []
        if self.peek() != "}":
            out.append(self.integer())
            while self.peek() == ",":
                self.pos += 1
                out.append(self.integer())
        self.expect("}")
        return out

    def parse(self) -> IndexSet:
        s = self.expr()
        self.skip_ws()
        if self.pos != len(self.text):
            self.error("trailing input")
        return s

    def expr(self) -> IndexSet:
        s = self.term()
        while self.peek() == "|":
            self.pos += 1
            s = s.union(self.term())
        return s

    def term(self) -> IndexSet:
        s = self.factor()
        while self.peek() == "&":
            self.pos += 1
            s = s.intersect(self.factor())
        return s

    def factor(self) -> IndexSet:
        if self.peek() == "!":
            self.pos += 1
            return self.factor().complement()
        return self.atom()

    def atom(self) -> IndexSet:
        if self.peek() == "(":
            self.pos += 1
            s = self.expr()
            self.expect(")")
            return s
        for name in ("cofinite_except", "finite", "mod", "tail"):
            if self.text.startswith(name, self.pos):
                self.pos += len(name)
                if name == "finite":
                    return finite_set(self.int_list())
                if name == "cofinite_except":
                    return cofinite_except(self.int_list())
                if name == "mod":
                    self.expect("(")
                    m = self.integer()
                    self.expect(",")
                    rs = self.int_list()
                    self.expect(")")
                    if m < 1:
                        self.error("modulus must be >= 1")
                    if any(r >= m for r in rs):
                        self.error("residue out of range")
                    return from_residues(m, rs)
                self.expect("(")
                n = self.integer()
                self.expect(")")
                return tail_set(n)
        self.error("expected a set expression")


def parse_set_expr(text: str) -> IndexSet:
    """Parse the textual set grammar.  Raises ParseError with an offset."""
    return _SetParser(text).parse()


def set_to_text(s: IndexSet) -> str:
    return json.dumps(set_to_json(s), sort_keys=True)
