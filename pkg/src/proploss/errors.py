"""Exception types shared across the package.

Every error a caller can act on derives from DomainError, so the CLI can map
any domain failure to exit code 1 with the class name on stderr.
"""

from __future__ import annotations


class DomainError(Exception):
    """Base class for all expected, caller-visible failures."""


class ParseError(DomainError):
    """DSL syntax error with byte offset and the token set expected there."""

    def __init__(self, message: str, offset: int, expected: frozenset[str]):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset
        self.expected = expected


class UnboundVariable(DomainError):
    """A variable occurrence has no enclosing quantifier binding it."""

    def __init__(self, var: str, offset: int | None = None):
        where = "" if offset is None else f" at byte {offset}"
        super().__init__(f"unbound variable '{var}'{where}")
        self.var = var
        self.offset = offset


class PatternMismatch(DomainError):
    """Prompt does not fit the requested (or any) template class."""


class AmbiguousClass(DomainError):
    """Prompt matches more than one template class and none was specified."""


class UnsupportedForm(DomainError):
    """Proposition is well-formed but outside the compilable fragment."""


class UnboundPredicate(DomainError):
    """A predicate in the proposition has no token channel in the binding."""


class ShapeMismatch(DomainError):
    """Stack shape is incompatible with the compiled graph or binding."""


class NonCrispInput(DomainError):
    """Classical oracle was given a map containing values other than 0 or 1."""


class BoundaryInput(DomainError):
    """Gradient check input lies within h of a clamp boundary."""


class BadShape(DomainError):
    """Requested logit/stack geometry is unusable (K < 2 or empty image)."""


class AmapFormatError(DomainError):
    """Attention-map file violates the AMAP text format."""


class ManifestError(DomainError):
    """Run manifest is missing keys or holds unparseable values."""
