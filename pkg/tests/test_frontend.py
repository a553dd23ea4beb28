"""Prompt templates: pattern matching, extraction, and token binding."""

import pytest

from proploss import (
    AmbiguousClass, PatternMismatch, SOT_LABEL, TemplateClass, TokenBinding,
    extract, match_classes, parse_template, print_dsl,
)
from proploss.frontend import build, match_verb, possession_verbs


def _dsl(prompt, cls=None):
    p, _ = extract(prompt, cls)
    return print_dsl(p)


# -- one example per template class -------------------------------------------

def test_existence():
    assert _dsl("a dog") == "exists x. Dog(x)"
    assert _dsl("an apple") == "exists x. Apple(x)"


def test_concurrent_existence():
    assert _dsl("a dog and a cat") == \
        "(exists x. Dog(x)) & (exists x. Cat(x))"


def test_adjective():
    assert _dsl("a black dog") == \
        "(exists x. Dog(x)) & (forall x. Dog(x) -> Black(x))"


def test_one_to_one():
    assert _dsl("a black dog and a white cat") == (
        "(exists x. Dog(x)) & (exists x. Cat(x))"
        " & (forall x. Dog(x) <-> Black(x))"
        " & (forall x. Cat(x) <-> White(x))"
        " & (forall x. Dog(x) -> !White(x))"
        " & (forall x. Cat(x) -> !Black(x))"
    )


def test_possession():
    assert _dsl("a man holding a bag") == (
        "(exists x. Man(x)) & (exists x. Bag(x))"
        " & (forall x. Bag(x) -> Man(x))"
    )


def test_multi_color():
    assert _dsl("a green and grey bird") == (
        "(exists x. Bird(x)) & (forall x. Bird(x) -> Green(x) | Grey(x))"
    )


def test_negation():
    assert _dsl("without snow", TemplateClass.NEGATION) == \
        "!(exists x. Snow(x))"


# -- class matching -------------------------------------------------------------

def test_match_classes_unique_cases():
    assert match_classes("a dog") == (TemplateClass.EXISTENCE,)
    assert match_classes("a dog and a cat") == \
        (TemplateClass.CONCURRENT_EXISTENCE,)
    assert match_classes("a man wearing a hat") == (TemplateClass.POSSESSION,)


def test_ambiguous_prompt_requires_explicit_class():
    # `without snow` also reads as adjective A=without, X=snow.
    assert set(match_classes("without snow")) == {
        TemplateClass.ADJECTIVE, TemplateClass.NEGATION}
    with pytest.raises(AmbiguousClass):
        extract("without snow")
    p, _ = extract("without snow", "Negation")
    assert print_dsl(p) == "!(exists x. Snow(x))"


def test_class_accepts_string_name():
    assert _dsl("a dog", "Existence") == "exists x. Dog(x)"


def test_pattern_mismatch():
    with pytest.raises(PatternMismatch):
        extract("a man holding a bag and a cat")
    with pytest.raises(PatternMismatch):
        extract("a black dog", TemplateClass.POSSESSION)
    with pytest.raises(PatternMismatch):
        extract("")


def test_non_possession_verb_is_not_matched():
    # `eating` is not a possession verb, so the possession shape fails.
    with pytest.raises(PatternMismatch):
        extract("a man eating a bag", TemplateClass.POSSESSION)


def test_repeated_word_rejected():
    with pytest.raises(PatternMismatch):
        extract("a dog and a dog")


def test_case_insensitive():
    assert _dsl("A Black DOG") == _dsl("a black dog")


# -- verbs ------------------------------------------------------------------------

def test_possession_verbs_required_stems():
    assert {"hold", "have", "grasp", "wear", "carry"} <= possession_verbs()


@pytest.mark.parametrize("word,stem", [
    ("holding", "hold"), ("wearing", "wear"), ("having", "have"),
    ("grasping", "grasp"), ("carrying", "carry"),
])
def test_match_verb_stems(word, stem):
    assert match_verb(word) == stem


def test_match_verb_rejects_non_possession():
    assert match_verb("eating") is None
    assert match_verb("hold") is None  # bare stem, not the -ing form


# -- token binding -----------------------------------------------------------------

def test_binding_channel_order_follows_prompt():
    _, b = extract("a black dog and a white cat")
    assert b.tokens == (SOT_LABEL, "black", "dog", "white", "cat")
    assert b.index == {"Black": 1, "Dog": 2, "White": 3, "Cat": 4}


def test_binding_is_injective_and_skips_sot():
    for prompt in ("a dog", "a man holding a bag", "a green and grey bird"):
        _, b = extract(prompt)
        assert 0 not in b.index.values()
        assert len(set(b.index.values())) == len(b.index)


def test_label_map_view():
    _, b = extract("a man holding a bag")
    assert b.label_map() == {"Man": "man", "Bag": "bag"}


def test_binding_type():
    _, b = extract("a dog")
    assert isinstance(b, TokenBinding)


# -- metamorphic and structural properties ---------------------------------------

def test_swapped_adjectives_swap_biimplication_partners():
    swapped = _dsl("a white dog and a black cat")
    assert "(forall x. Dog(x) <-> White(x))" in swapped
    assert "(forall x. Cat(x) <-> Black(x))" in swapped
    assert "(forall x. Dog(x) -> !Black(x))" in swapped


def test_extract_deterministic():
    a = extract("a black dog and a white cat")
    b = extract("a black dog and a white cat")
    assert print_dsl(a[0]) == print_dsl(b[0]) and a[1] == b[1]


def test_parse_template_then_build_equals_extract():
    t = parse_template("a man holding a bag")
    assert t.cls == TemplateClass.POSSESSION
    p, b = build(t)
    direct = extract("a man holding a bag")
    assert print_dsl(p) == print_dsl(direct[0])
    assert b == direct[1]
