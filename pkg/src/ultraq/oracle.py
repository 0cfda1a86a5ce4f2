"""Lazy two-valued finitely additive measure on subsets of the naturals.

The state is the finite fragment of a free ultrafilter that the session
has actually touched: a residue tower (one committed residue per
modulus, compatible along divisors), plus a ledger of every decision
taken.  Cofinite sets always measure 1 and finite sets 0, so the state
extends the Frechet filter by construction.  Eventually periodic sets
are decided by the tower; everything else is *stipulated* by counting
witnesses against the core of all prior decisions, which preserves the
finite intersection property.

Decisions are deterministic: replaying the same query sequence from a
fresh state rebuilds an identical ledger and tower.  The constructed
fragment does depend on query order; that is accepted and documented.

A state has a single logical owner; serialize concurrent access.
``fork`` yields an independent copy for what-if exploration.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from math import gcd

from .errors import (
    AmbiguousAtHorizon,
    ConflictsWithLedger,
    InconsistentLedger,
    IncompatibleResidue,
)
from .index_sets import (
    ExactSet,
    IndexSet,
    SampledSet,
    _divisors,
    set_from_json,
    set_to_json,
)

DEFAULT_FIP_HORIZON = 10_000
DEFAULT_WITNESS_QUOTA = 20

REASON_COFINITE = "Cofinite"
REASON_FINITE = "Finite"
REASON_RESIDUE = "Residue"
REASON_STIPULATED = "Stipulated"


@dataclass(frozen=True)
class Decision:
    index_set: IndexSet
    verdict: int
    reason: str
    witness_count: int

    def to_json(self) -> dict:
        return {
            "set": set_to_json(self.index_set),
            "verdict": self.verdict,
            "reason": self.reason,
            "witness_count": self.witness_count,
        }


class OracleState:
    """Partial free ultrafilter with a decision ledger.

    ``h_fip`` bounds every witness search and ``witness_quota`` is the
    number of core witnesses a decision must retain.  Failures surface
    as AmbiguousAtHorizon rather than silent guesses.
    """

    def __init__(self, h_fip: int = DEFAULT_FIP_HORIZON, witness_quota: int = DEFAULT_WITNESS_QUOTA):
        self.h_fip = h_fip
        self.witness_quota = witness_quota
        self.tower: dict[int, int] = {}
        self.ledger: list[Decision] = []
        self.on_decision = None  # optional hook, receives each new Decision
        self._exact_cache: dict[ExactSet, int] = {}
        self._sampled_cache: dict[int, int] = {}
        self._sampled_refs: list[SampledSet] = []

    # -- core of the partial ultrafilter ----------------------------------

    def _core_member(self, n: int) -> bool:
        """Is ``n`` compatible with every decision taken so far?

        The core is the intersection of the committed residue classes,
        all verdict-1 sets, and the complements of all verdict-0 sets
        (an ultrafilter that rules a set negligible rules its complement
        dominant, so both sides constrain later decisions).
        """
        for m, r in self.tower.items():
            if n % m != r:
                return False
        for d in self.ledger:
            if d.index_set.member(n) != (d.verdict == 1):
                return False
        return True

    def _effective_horizon(self, *extra: IndexSet) -> int:
        limit = self.h_fip
        for d in self.ledger:
            if isinstance(d.index_set, SampledSet):
                limit = min(limit, d.index_set.horizon)
        for s in extra:
            if isinstance(s, SampledSet):
                limit = min(limit, s.horizon)
        return limit

    def _class_witnesses(self, modulus: int, residue: int, limit: int, need: int) -> int:
        count = 0
        for n in range(residue, limit, modulus):
            if self._core_member(n):
                count += 1
                if count >= need:
                    return count
        return count

    # -- residue tower ------------------------------------------------------

    def _candidates(self, modulus: int) -> list[int]:
        items = sorted(self.tower.items())
        out = []
        for r in range(modulus):
            if all(r % gcd(modulus, m) == rm % gcd(modulus, m) for m, rm in items):
                out.append(r)
        return out

    def committed_residue(self, modulus: int) -> int:
        """The tower's residue at ``modulus``, committing the divisor
        chain bottom-up if absent.

        Each absent divisor gets the smallest residue that is compatible
        with the existing tower and whose class retains the witness
        quota against the core.
        """
        if modulus == 1:
            return 0
        for d in _divisors(modulus)[1:]:
            if d in self.tower:
                continue
            limit = self._effective_horizon()
            chosen = None
            for r in self._candidates(d):
                if self._class_witnesses(d, r, limit, self.witness_quota) >= self.witness_quota:
                    chosen = r
                    break
            if chosen is None:
                raise AmbiguousAtHorizon(
                    f"no residue class mod {d} keeps {self.witness_quota} core witnesses below {limit}"
                )
            self.tower[d] = chosen
        return self.tower[modulus]

    def force_residue(self, modulus: int, residue: int) -> None:
        """Pin the tower at ``modulus`` to ``residue``.

        Every divisor residue is derived and committed alongside.  Fails
        with IncompatibleResidue against an already committed tower and
        with ConflictsWithLedger when the forced class cannot retain the
        witness quota against stipulated decisions.
        """
        if not 0 <= residue < modulus:
            raise ValueError("residue out of range")
        if modulus == 1:
            return
        for m, rm in sorted(self.tower.items()):
            g = gcd(modulus, m)
            if residue % g != rm % g:
                raise IncompatibleResidue(
                    f"r_{modulus}={residue} contradicts committed r_{m}={rm}"
                )
        limit = self._effective_horizon()
        if self._class_witnesses(modulus, residue, limit, self.witness_quota) < self.witness_quota:
            raise ConflictsWithLedger(
                f"class {residue} mod {modulus} lacks {self.witness_quota} core witnesses below {limit}"
            )
        for d in _divisors(modulus)[1:]:
            if d not in self.tower:
                self.tower[d] = residue % d

    # -- the measure ---------------------------------------------------------

    def measure(self, s: IndexSet) -> int:
        """Measure of ``s``: 0 or 1.  Decisions are cached and ledgered."""
        if isinstance(s, ExactSet):
            return self._measure_exact(s)
        return self._measure_sampled(s)

    def _measure_exact(self, s: ExactSet) -> int:
        cached = self._exact_cache.get(s)
        if cached is not None:
            return cached
        if s.is_finite():
            verdict, reason = 0, REASON_FINITE
        elif s.is_cofinite():
            verdict, reason = 1, REASON_COFINITE
        else:
            r = self.committed_residue(s.modulus)
            verdict = 1 if r in s.residues else 0
            reason = REASON_RESIDUE
        comp = self._exact_cache.get(s.complement())
        if comp is not None and comp == verdict:
            raise InconsistentLedger(f"{s!r} and its complement both measure {verdict}")
        self._record(Decision(s, verdict, reason, 0))
        self._exact_cache[s] = verdict
        return verdict

    def _measure_sampled(self, s: SampledSet) -> int:
        cached = self._sampled_cache.get(id(s))
        if cached is not None:
            return cached
        limit = self._effective_horizon(s)
        count_in = count_out = 0
        for n in range(limit):
            if self._core_member(n):
                if s.member(n):
                    count_in += 1
                else:
                    count_out += 1
        if max(count_in, count_out) < self.witness_quota:
            raise AmbiguousAtHorizon(
                f"{s.label}: neither side reaches {self.witness_quota} witnesses below {limit}"
            )
        verdict = 1 if count_in >= count_out else 0  # ties prefer the queried set
        self._record(Decision(s, verdict, REASON_STIPULATED, count_in if verdict else count_out))
        self._sampled_cache[id(s)] = verdict
        self._sampled_refs.append(s)  # keep ids stable for the cache
        return verdict

    def _record(self, decision: Decision) -> None:
        self.ledger.append(decision)
        if self.on_decision is not None:
            self.on_decision(decision)

    # -- lifecycle -----------------------------------------------------------

    def fork(self) -> "OracleState":
        """Independent copy; subsequent queries on either state are isolated."""
        other = OracleState(self.h_fip, self.witness_quota)
        other.tower = dict(self.tower)
        other.ledger = list(self.ledger)
        other._exact_cache = dict(self._exact_cache)
        other._sampled_cache = dict(self._sampled_cache)
        other._sampled_refs = list(self._sampled_refs)
        return other

    # -- persistence -----------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "tower": [[m, r] for m, r in sorted(self.tower.items())],
            "ledger": [d.to_json() for d in self.ledger],
            "H": self.h_fip,
            "W": self.witness_quota,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "OracleState":
        state = cls(doc["H"], doc["W"])
        state.tower = {int(m): int(r) for m, r in doc["tower"]}
        for entry in doc["ledger"]:
            s = set_from_json(entry["set"])
            d = Decision(s, int(entry["verdict"]), entry["reason"], int(entry["witness_count"]))
            state.ledger.append(d)
            if isinstance(s, ExactSet):
                state._exact_cache[s] = d.verdict
            else:
                state._sampled_cache[id(s)] = d.verdict
                state._sampled_refs.append(s)
        return state

    def ledger_digest(self) -> str:
        payload = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()

    def __repr__(self) -> str:
        return (
            f"OracleState(tower={sorted(self.tower.items())}, "
            f"decisions={len(self.ledger)}, H={self.h_fip}, W={self.witness_quota})"
        )


def measure(state: OracleState, s: IndexSet) -> int:
    return state.measure(s)


def fork(state: OracleState) -> OracleState:
    return state.fork()


def force_residue(state: OracleState, modulus: int, residue: int) -> None:
    state.force_residue(modulus, residue)
