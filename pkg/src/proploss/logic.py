"""Proposition AST, DSL parser, canonical printer, and Iff normalization.

The AST mirrors predicate logic restricted to unary predicates: atoms apply a
predicate name to a quantified variable, connectives are the usual five, and
quantifiers bind one variable each. Nodes are frozen dataclasses compared
structurally, so parse/print round-trips can be asserted with plain equality.

Concrete syntax is documented in GRAMMAR.md. Quantifier bodies extend as far
right as possible; `->` associates right, `<->` left; `!` binds tightest.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import reduce
from typing import Union

from .errors import ParseError, UnboundVariable

_IDENT_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*")
_KEYWORDS = frozenset({"forall", "exists", "true", "false"})


def _check_ident(name: str, kind: str) -> None:
    if not _IDENT_RE.fullmatch(name) or name in _KEYWORDS:
        raise ValueError(f"invalid {kind} name: {name!r}")


@dataclass(frozen=True)
class TrueProp:
    def __str__(self) -> str:
        return print_dsl(self)


@dataclass(frozen=True)
class FalseProp:
    def __str__(self) -> str:
        return print_dsl(self)


@dataclass(frozen=True)
class Atom:
    pred: str
    var: str

    def __post_init__(self) -> None:
        _check_ident(self.pred, "predicate")
        _check_ident(self.var, "variable")

    def __str__(self) -> str:
        return print_dsl(self)


@dataclass(frozen=True)
class Not:
    p: "Proposition"

    def __str__(self) -> str:
        return print_dsl(self)


@dataclass(frozen=True)
class And:
    p: "Proposition"
    q: "Proposition"

    def __str__(self) -> str:
        return print_dsl(self)


@dataclass(frozen=True)
class Or:
    p: "Proposition"
    q: "Proposition"

    def __str__(self) -> str:
        return print_dsl(self)


@dataclass(frozen=True)
class Implies:
    p: "Proposition"
    q: "Proposition"

    def __str__(self) -> str:
        return print_dsl(self)


@dataclass(frozen=True)
class Iff:
    p: "Proposition"
    q: "Proposition"

    def __str__(self) -> str:
        return print_dsl(self)


@dataclass(frozen=True)
class Forall:
    var: str
    body: "Proposition"

    def __post_init__(self) -> None:
        _check_ident(self.var, "variable")

    def __str__(self) -> str:
        return print_dsl(self)


@dataclass(frozen=True)
class Exists:
    var: str
    body: "Proposition"

    def __post_init__(self) -> None:
        _check_ident(self.var, "variable")

    def __str__(self) -> str:
        return print_dsl(self)


Proposition = Union[
    TrueProp, FalseProp, Atom, Not, And, Or, Implies, Iff, Forall, Exists
]

TRUE = TrueProp()
FALSE = FalseProp()


def free_vars(p: Proposition) -> frozenset[str]:
    """Set of variables occurring free in p."""
    if isinstance(p, (TrueProp, FalseProp)):
        return frozenset()
    if isinstance(p, Atom):
        return frozenset({p.var})
    if isinstance(p, Not):
        return free_vars(p.p)
    if isinstance(p, (And, Or, Implies, Iff)):
        return free_vars(p.p) | free_vars(p.q)
    if isinstance(p, (Forall, Exists)):
        return free_vars(p.body) - {p.var}
    raise TypeError(f"not a proposition: {p!r}")


def predicates(p: Proposition) -> frozenset[str]:
    """Set of predicate names occurring in p."""
    if isinstance(p, Atom):
        return frozenset({p.pred})
    if isinstance(p, Not):
        return predicates(p.p)
    if isinstance(p, (And, Or, Implies, Iff)):
        return predicates(p.p) | predicates(p.q)
    if isinstance(p, (Forall, Exists)):
        return predicates(p.body)
    return frozenset()


def ordered_predicates(p: Proposition) -> tuple[str, ...]:
    """Predicate names in order of first appearance (left to right)."""
    seen: list[str] = []

    def walk(node: Proposition) -> None:
        if isinstance(node, Atom):
            if node.pred not in seen:
                seen.append(node.pred)
        elif isinstance(node, Not):
            walk(node.p)
        elif isinstance(node, (And, Or, Implies, Iff)):
            walk(node.p)
            walk(node.q)
        elif isinstance(node, (Forall, Exists)):
            walk(node.body)

    walk(p)
    return tuple(seen)


def is_closed(p: Proposition) -> bool:
    return not free_vars(p)


# ---------------------------------------------------------------------------
# Tokenizer
# ---------------------------------------------------------------------------

# Longest symbols first so "<->" is not read as "<" + "->".
_SYMBOLS = ("<->", "->", "(", ")", ".", "!", "&", "|")


@dataclass(frozen=True)
class _Token:
    kind: str  # symbol text, "IDENT", or "EOF"
    text: str
    offset: int  # byte offset into the UTF-8 encoding of the source


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    # Byte offsets are reported against the UTF-8 encoding of the input.
    data = text
    i = 0
    n = len(data)
    while i < n:
        c = data[i]
        if c.isspace():
            i += 1
            continue
        offset = len(data[:i].encode("utf-8"))
        matched = False
        for sym in _SYMBOLS:
            if data.startswith(sym, i):
                tokens.append(_Token(sym, sym, offset))
                i += len(sym)
                matched = True
                break
        if matched:
            continue
        m = _IDENT_RE.match(data, i)
        if m:
            word = m.group(0)
            kind = word if word in _KEYWORDS else "IDENT"
            tokens.append(_Token(kind, word, offset))
            i = m.end()
            continue
        raise ParseError(
            f"unexpected character {c!r}", offset, frozenset({"token"})
        )
    tokens.append(_Token("EOF", "", len(data.encode("utf-8"))))
    return tokens


# ---------------------------------------------------------------------------
# Recursive-descent parser, one function per grammar production
# ---------------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.scope: list[str] = []

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            self.fail(frozenset({kind}))
        return self.advance()

    def fail(self, expected: frozenset[str]) -> None:
        tok = self.peek()
        shown = tok.text if tok.kind != "EOF" else "end of input"
        raise ParseError(
            f"unexpected {shown!r}, expected one of {sorted(expected)}",
            tok.offset,
            expected,
        )

    def parse(self) -> Proposition:
        p = self.prop()
        if self.peek().kind != "EOF":
            self.fail(frozenset({"EOF", "<->", "->", "|", "&"}))
        return p

    def prop(self) -> Proposition:
        if self.peek().kind in ("forall", "exists"):
            return self.quant()
        return self.iff()

    def quant(self) -> Proposition:
        kw = self.advance()
        var = self.expect("IDENT").text
        self.expect(".")
        self.scope.append(var)
        body = self.prop()
        self.scope.pop()
        return Forall(var, body) if kw.kind == "forall" else Exists(var, body)

    def iff(self) -> Proposition:
        left = self.imp()
        while self.peek().kind == "<->":
            self.advance()
            left = Iff(left, self.imp())
        return left

    def imp(self) -> Proposition:
        parts = [self.or_()]
        while self.peek().kind == "->":
            self.advance()
            parts.append(self.or_())
        return reduce(lambda rhs, lhs: Implies(lhs, rhs), reversed(parts[:-1]), parts[-1])

    def or_(self) -> Proposition:
        left = self.and_()
        while self.peek().kind == "|":
            self.advance()
            left = Or(left, self.and_())
        return left

    def and_(self) -> Proposition:
        left = self.unary()
        while self.peek().kind == "&":
            self.advance()
            left = And(left, self.unary())
        return left

    def unary(self) -> Proposition:
        if self.peek().kind == "!":
            self.advance()
            return Not(self.unary())
        return self.atom()

    def atom(self) -> Proposition:
        tok = self.peek()
        if tok.kind == "true":
            self.advance()
            return TRUE
        if tok.kind == "false":
            self.advance()
            return FALSE
        if tok.kind == "(":
            self.advance()
            p = self.prop()
            self.expect(")")
            return p
        if tok.kind == "IDENT":
            pred = self.advance().text
            self.expect("(")
            var_tok = self.expect("IDENT")
            if var_tok.text not in self.scope:
                raise UnboundVariable(var_tok.text, var_tok.offset)
            self.expect(")")
            return Atom(pred, var_tok.text)
        self.fail(frozenset({"true", "false", "IDENT", "(", "!"}))
        raise AssertionError("unreachable")


def parse_dsl(text: str) -> Proposition:
    """Parse DSL text into a closed Proposition.

    Raises ParseError (with byte offset and expected-token set) on syntax
    errors and UnboundVariable when an atom references a variable with no
    enclosing quantifier.
    """
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# Canonical printer with minimal parenthesization
# ---------------------------------------------------------------------------

# Precedence levels, loosest binding first. Quantifiers are level 0 because
# their body swallows everything to the right.
_LEVEL_QUANT = 0
_LEVEL_IFF = 1
_LEVEL_IMP = 2
_LEVEL_OR = 3
_LEVEL_AND = 4
_LEVEL_UNARY = 5
_LEVEL_ATOM = 6


def _level(p: Proposition) -> int:
    if isinstance(p, (Forall, Exists)):
        return _LEVEL_QUANT
    if isinstance(p, Iff):
        return _LEVEL_IFF
    if isinstance(p, Implies):
        return _LEVEL_IMP
    if isinstance(p, Or):
        return _LEVEL_OR
    if isinstance(p, And):
        return _LEVEL_AND
    if isinstance(p, Not):
        return _LEVEL_UNARY
    return _LEVEL_ATOM


def _render(p: Proposition, min_level: int) -> str:
    if isinstance(p, TrueProp):
        s = "true"
    elif isinstance(p, FalseProp):
        s = "false"
    elif isinstance(p, Atom):
        s = f"{p.pred}({p.var})"
    elif isinstance(p, Not):
        s = "!" + _render(p.p, _LEVEL_UNARY)
    elif isinstance(p, And):
        s = f"{_render(p.p, _LEVEL_AND)} & {_render(p.q, _LEVEL_AND + 1)}"
    elif isinstance(p, Or):
        s = f"{_render(p.p, _LEVEL_OR)} | {_render(p.q, _LEVEL_OR + 1)}"
    elif isinstance(p, Implies):
        # Right-associative: the right child prints at the same level.
        s = f"{_render(p.p, _LEVEL_IMP + 1)} -> {_render(p.q, _LEVEL_IMP)}"
    elif isinstance(p, Iff):
        # Left-associative: the left child prints at the same level.
        s = f"{_render(p.p, _LEVEL_IFF)} <-> {_render(p.q, _LEVEL_IFF + 1)}"
    elif isinstance(p, Forall):
        s = f"forall {p.var}. {_render(p.body, _LEVEL_QUANT)}"
    elif isinstance(p, Exists):
        s = f"exists {p.var}. {_render(p.body, _LEVEL_QUANT)}"
    else:
        raise TypeError(f"not a proposition: {p!r}")
    if _level(p) < min_level:
        return f"({s})"
    return s


def print_dsl(p: Proposition) -> str:
    """Render p as canonical DSL with minimal parenthesization.

    parse_dsl(print_dsl(p)) is structurally equal to p.
    """
    return _render(p, _LEVEL_QUANT)


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------


def normalize(p: Proposition) -> Proposition:
    """Expand every Iff(p, q) into And(Implies(p, q), Implies(q, p)).

    Nothing else changes: double negation is kept, connectives and
    quantifiers pass through structurally. Idempotent, and degree-preserving
    under both logic backends (biimplication is defined as the conjunction of
    its two directions).
    """
    if isinstance(p, (TrueProp, FalseProp, Atom)):
        return p
    if isinstance(p, Not):
        return Not(normalize(p.p))
    if isinstance(p, And):
        return And(normalize(p.p), normalize(p.q))
    if isinstance(p, Or):
        return Or(normalize(p.p), normalize(p.q))
    if isinstance(p, Implies):
        return Implies(normalize(p.p), normalize(p.q))
    if isinstance(p, Iff):
        left = normalize(p.p)
        right = normalize(p.q)
        return And(Implies(left, right), Implies(right, left))
    if isinstance(p, Forall):
        return Forall(p.var, normalize(p.body))
    if isinstance(p, Exists):
        return Exists(p.var, normalize(p.body))
    raise TypeError(f"not a proposition: {p!r}")
