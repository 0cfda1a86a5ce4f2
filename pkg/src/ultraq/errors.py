"""Exception hierarchy.

Four families, mirrored by the CLI's exit codes: parse errors (2),
horizon/ambiguity reports (3), precondition violations (4), and internal
invariant breaches (5).  Horizon errors are honest "cannot decide within
the configured search depth" reports, never silent wrong answers.
"""

from __future__ import annotations


class UltraqError(Exception):
    """Base class for every error raised by this package."""


class ParseError(UltraqError):
    """Malformed textual input.  Carries the byte offset of the problem."""

    def __init__(self, message: str, offset: int = 0):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class DivisionByConstantZero(ParseError):
    """A quotient whose denominator is a constant zero expression."""


class HorizonError(UltraqError):
    """A question that cannot be answered within a finite search horizon."""


class BeyondHorizon(HorizonError):
    """Membership asked of a sampled set past its horizon."""


class ExhaustedAtHorizon(HorizonError):
    """A sampled set ran out of witnesses below its horizon."""


class UndecidableOnSampled(HorizonError):
    """Finiteness/cofiniteness asked of a sampled set."""


class AmbiguousAtHorizon(HorizonError):
    """Neither a set nor its complement reached the witness quota."""


class NotDecidedAtBound(HorizonError):
    """Finiteness of a sequence class undecided within the bound schedule."""


class SearchBoundExceeded(HorizonError):
    """A subsequence search spent its evaluation quota."""


class MembershipUndecided(HorizonError):
    """Star-membership of a point could not be measured."""


class PreconditionError(UltraqError):
    """An operation was called outside its stated domain."""


class EmptySet(PreconditionError):
    """An enumeration asked for a member that does not exist."""


class UndefinedAtIndex(PreconditionError):
    """A sequence evaluated where a denominator vanishes."""

    def __init__(self, index: int, message: str = ""):
        super().__init__(message or f"sequence undefined at index {index}")
        self.index = index


class MixedOracles(PreconditionError):
    """Two hyperrationals bound to different oracle states were combined."""


class DivisionByZeroClass(PreconditionError):
    """Inverse of a class that is zero almost everywhere."""


class NotFinite(PreconditionError):
    """Standard part of an infinite element."""


class IncompatibleResidue(PreconditionError):
    """A forced residue contradicts the committed tower."""


class ConflictsWithLedger(PreconditionError):
    """A forced residue leaves the decision ledger without witnesses."""


class PrefixTooShort(PreconditionError):
    """Peak analysis of an empty prefix."""


class PreconditionFailed(PreconditionError):
    """Generic precondition violation with a descriptive message."""


class NotNested(PreconditionError):
    """A set family that fails the nestedness check."""


class EmptyLevel(PreconditionError):
    """A set family with an empty materialized level."""


class FIPViolated(PreconditionError):
    """A family whose finite intersection property fails."""

    def __init__(self, levels: tuple[int, ...]):
        super().__init__(f"empty intersection among levels {sorted(levels)}")
        self.levels = tuple(sorted(levels))


class NotBounded(PreconditionError):
    """Cantor intersection asked of an unbounded family."""


class InconsistentLedger(UltraqError):
    """An internal oracle invariant was breached.  Always a bug."""
