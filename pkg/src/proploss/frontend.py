"""Template prompts to propositions.

Seven fixed surface patterns (articles optional, case-insensitive) each map
to a fixed logical form over unary predicates. Free-form prompts are out of
scope; the DSL is the escape hatch for anything these templates cannot say.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Mapping

from .errors import AmbiguousClass, PatternMismatch
from .logic import And, Atom, Exists, Forall, Iff, Implies, Not, Or, Proposition
from .stack import SOT_LABEL

_ARTICLES = frozenset({"a", "an", "the"})
_VERB_STEMS = frozenset({"hold", "have", "grasp", "wear", "carry"})
_VAR = "x"


class TemplateClass(enum.Enum):
    EXISTENCE = "Existence"
    CONCURRENT_EXISTENCE = "ConcurrentExistence"
    ADJECTIVE = "Adjective"
    ONE_TO_ONE = "OneToOne"
    POSSESSION = "Possession"
    MULTI_COLOR = "MultiColor"
    NEGATION = "Negation"

    @classmethod
    def from_name(cls, name: str) -> "TemplateClass":
        for member in cls:
            if member.value.lower() == name.lower():
                return member
        raise PatternMismatch(
            f"unknown template class {name!r}; expected one of "
            + ", ".join(m.value for m in cls))


class SlotRole(enum.Enum):
    OBJECT_A = "ObjectA"
    OBJECT_B = "ObjectB"
    ADJ_A = "AdjA"
    ADJ_B = "AdjB"
    SUBJECT = "Subject"
    VERB = "Verb"
    NEGATED_OBJECT = "NegatedObject"


@dataclass(frozen=True)
class PromptTemplate:
    """A recognized prompt: its class and the filled (role, word) slots."""

    cls: TemplateClass
    slots: tuple[tuple[SlotRole, str], ...]

    def word(self, role: SlotRole) -> str:
        for r, w in self.slots:
            if r == role:
                return w
        raise KeyError(role)


@dataclass(frozen=True)
class TokenBinding:
    """Predicate-to-channel binding over a fixed token layout.

    tokens[0] is the reserved start-of-text label; index maps each predicate
    to its channel, injectively and never to channel 0.
    """

    tokens: tuple[str, ...]
    index: Mapping[str, int]

    def __post_init__(self) -> None:
        if not self.tokens or self.tokens[0] != SOT_LABEL:
            raise ValueError(f"tokens[0] must be {SOT_LABEL!r}")
        seen = set()
        for pred, idx in self.index.items():
            if not 1 <= idx < len(self.tokens):
                raise ValueError(f"{pred} bound to out-of-range channel {idx}")
            if idx in seen:
                raise ValueError("binding is not injective")
            seen.add(idx)
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "index", dict(self.index))

    def label_of(self, pred: str) -> str:
        return self.tokens[self.index[pred]]

    def label_map(self) -> dict[str, str]:
        """Predicate -> token label view, the form the compiler consumes."""
        return {pred: self.tokens[idx] for pred, idx in self.index.items()}


def possession_verbs() -> frozenset[str]:
    """Verb stems whose -ing form marks the Possession pattern."""
    return _VERB_STEMS


def match_verb(word: str) -> str | None:
    """The possession stem of an -ing form, or None.

    wearing -> wear, having -> have (restored e), holding -> hold; a doubled
    final consonant is undoubled before lookup.
    """
    if len(word) < 5 or not word.endswith("ing"):
        return None
    base = word[:-3]
    candidates = [base, base + "e"]
    if len(base) >= 2 and base[-1] == base[-2]:
        candidates.append(base[:-1])
    for c in candidates:
        if c in _VERB_STEMS:
            return c
    return None


def _content_words(prompt: str) -> list[str]:
    words = [w for w in prompt.lower().split() if w not in _ARTICLES]
    for w in words:
        if not w.isalpha():
            raise PatternMismatch(f"unexpected token {w!r} in prompt")
    return words


def _matches(words: list[str], cls: TemplateClass) -> tuple[tuple[SlotRole, str], ...] | None:
    R = SlotRole
    if cls is TemplateClass.EXISTENCE:
        if len(words) == 1:
            return ((R.OBJECT_A, words[0]),)
    elif cls is TemplateClass.CONCURRENT_EXISTENCE:
        if len(words) == 3 and words[1] == "and" and "and" not in (words[0], words[2]):
            return ((R.OBJECT_A, words[0]), (R.OBJECT_B, words[2]))
    elif cls is TemplateClass.ADJECTIVE:
        if len(words) == 2 and "and" not in words:
            return ((R.ADJ_A, words[0]), (R.OBJECT_A, words[1]))
    elif cls is TemplateClass.ONE_TO_ONE:
        if len(words) == 5 and words[2] == "and" and "and" not in (
                words[0], words[1], words[3], words[4]):
            return (
                (R.ADJ_A, words[0]), (R.OBJECT_A, words[1]),
                (R.ADJ_B, words[3]), (R.OBJECT_B, words[4]),
            )
    elif cls is TemplateClass.POSSESSION:
        if len(words) == 3 and match_verb(words[1]) is not None:
            return (
                (R.SUBJECT, words[0]), (R.VERB, words[1]),
                (R.OBJECT_A, words[2]),
            )
    elif cls is TemplateClass.MULTI_COLOR:
        if len(words) == 4 and words[1] == "and" and "and" not in (
                words[0], words[2], words[3]):
            return (
                (R.ADJ_A, words[0]), (R.ADJ_B, words[2]),
                (R.OBJECT_A, words[3]),
            )
    elif cls is TemplateClass.NEGATION:
        if len(words) == 2 and words[0] == "without":
            return ((R.NEGATED_OBJECT, words[1]),)
    return None


def match_classes(prompt: str) -> tuple[TemplateClass, ...]:
    """Every template class whose surface pattern fits the prompt."""
    words = _content_words(prompt)
    return tuple(c for c in TemplateClass if _matches(words, c) is not None)


def parse_template(
    prompt: str, cls: TemplateClass | str | None = None
) -> PromptTemplate:
    if isinstance(cls, str):
        cls = TemplateClass.from_name(cls)
    words = _content_words(prompt)
    if cls is not None:
        slots = _matches(words, cls)
        if slots is None:
            raise PatternMismatch(
                f"prompt {prompt!r} does not fit the {cls.value} pattern")
        return PromptTemplate(cls=cls, slots=slots)
    fits = [(c, _matches(words, c)) for c in TemplateClass]
    fits = [(c, s) for c, s in fits if s is not None]
    if not fits:
        raise PatternMismatch(f"prompt {prompt!r} fits no template class")
    if len(fits) > 1:
        raise AmbiguousClass(
            f"prompt {prompt!r} fits multiple classes: "
            + ", ".join(c.value for c, _ in fits))
    return PromptTemplate(cls=fits[0][0], slots=fits[0][1])


def _pred(word: str) -> str:
    return word.capitalize()


def _binding_for(words: list[str]) -> TokenBinding:
    if len(set(words)) != len(words):
        raise PatternMismatch("repeated word in prompt; channels must be distinct")
    return TokenBinding(
        tokens=(SOT_LABEL, *words),
        index={_pred(w): i + 1 for i, w in enumerate(words)},
    )


def build(template: PromptTemplate) -> tuple[Proposition, TokenBinding]:
    """The proposition and binding a template stands for.

    Channel order follows word order in the prompt; conjunct order puts
    existences first, then (bi)implications, then the implicit negatives.
    """
    R = SlotRole
    cls = template.cls
    w = template.word

    def exists(word: str) -> Proposition:
        return Exists(_VAR, Atom(_pred(word), _VAR))

    def atom(word: str) -> Atom:
        return Atom(_pred(word), _VAR)

    if cls is TemplateClass.EXISTENCE:
        x = w(R.OBJECT_A)
        return exists(x), _binding_for([x])
    if cls is TemplateClass.CONCURRENT_EXISTENCE:
        x, y = w(R.OBJECT_A), w(R.OBJECT_B)
        return And(exists(x), exists(y)), _binding_for([x, y])
    if cls is TemplateClass.ADJECTIVE:
        a, x = w(R.ADJ_A), w(R.OBJECT_A)
        prop = And(exists(x), Forall(_VAR, Implies(atom(x), atom(a))))
        return prop, _binding_for([a, x])
    if cls is TemplateClass.ONE_TO_ONE:
        a, x = w(R.ADJ_A), w(R.OBJECT_A)
        b, y = w(R.ADJ_B), w(R.OBJECT_B)
        conjuncts = [
            exists(x),
            exists(y),
            Forall(_VAR, Iff(atom(x), atom(a))),
            Forall(_VAR, Iff(atom(y), atom(b))),
            Forall(_VAR, Implies(atom(x), Not(atom(b)))),
            Forall(_VAR, Implies(atom(y), Not(atom(a)))),
        ]
        prop = conjuncts[0]
        for c in conjuncts[1:]:
            prop = And(prop, c)
        return prop, _binding_for([a, x, b, y])
    if cls is TemplateClass.POSSESSION:
        s, o = w(R.SUBJECT), w(R.OBJECT_A)
        prop = And(
            And(exists(s), exists(o)),
            Forall(_VAR, Implies(atom(o), atom(s))),
        )
        return prop, _binding_for([s, o])
    if cls is TemplateClass.MULTI_COLOR:
        a, b, x = w(R.ADJ_A), w(R.ADJ_B), w(R.OBJECT_A)
        prop = And(
            exists(x),
            Forall(_VAR, Implies(atom(x), Or(atom(a), atom(b)))),
        )
        return prop, _binding_for([a, b, x])
    if cls is TemplateClass.NEGATION:
        x = w(R.NEGATED_OBJECT)
        return Not(exists(x)), _binding_for([x])
    raise PatternMismatch(f"unhandled template class {cls!r}")


def extract(
    prompt: str, cls: TemplateClass | str | None = None
) -> tuple[Proposition, TokenBinding]:
    """Prompt to (proposition, binding); detects the class when not given."""
    return build(parse_template(prompt, cls))
