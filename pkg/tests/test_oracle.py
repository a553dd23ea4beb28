"""Classical truth evaluation on crisp stacks."""

import numpy as np
import pytest

from proploss import (
    AttentionStack, NonCrispInput, SOT_LABEL, UnboundPredicate,
    UnsupportedForm, crisp_oracle, parse_dsl,
)
from proploss.logic import Atom

from _helpers import iter_crisp_stacks


def _crisp(*rows):
    values = np.zeros((1 + len(rows), 1, len(rows[0])))
    for i, row in enumerate(rows):
        values[1 + i] = row
    labels = ["dog", "black", "cat"][: len(rows)]
    return AttentionStack((SOT_LABEL, *labels), values)


def test_existence():
    p = parse_dsl("exists x. Dog(x)")
    b = {"Dog": "dog"}
    assert crisp_oracle(p, _crisp([0, 1, 0]), b)
    assert not crisp_oracle(p, _crisp([0, 0, 0]), b)


def test_forall_implication():
    p = parse_dsl("forall x. Dog(x) -> Black(x)")
    b = {"Dog": "dog", "Black": "black"}
    assert crisp_oracle(p, _crisp([1, 0, 1], [1, 1, 1]), b)
    assert not crisp_oracle(p, _crisp([1, 0, 0], [0, 1, 1]), b)
    assert crisp_oracle(p, _crisp([0, 0, 0], [0, 1, 0]), b)  # vacuous


def test_connective_truth_tables():
    b = {"Dog": "dog", "Black": "black"}
    cases = {
        "forall x. Dog(x) & Black(x)": lambda d, k: d and k,
        "forall x. Dog(x) | Black(x)": lambda d, k: d or k,
        "forall x. Dog(x) -> Black(x)": lambda d, k: (not d) or k,
        "forall x. Dog(x) <-> Black(x)": lambda d, k: d == k,
        "forall x. !Dog(x)": lambda d, k: not d,
    }
    for text, want in cases.items():
        p = parse_dsl(text)
        for d in (0, 1):
            for k in (0, 1):
                s = _crisp([d], [k])
                assert crisp_oracle(p, s, b) == want(d, k), (text, d, k)


def test_constants():
    assert crisp_oracle(parse_dsl("true"), _crisp([0]), {})
    assert not crisp_oracle(parse_dsl("false"), _crisp([0]), {})


def test_quantifier_duality_exhaustive():
    ex = parse_dsl("exists x. Dog(x)")
    dual = parse_dsl("!(forall x. !Dog(x))")
    b = {"Dog": "dog"}
    for s in iter_crisp_stacks(("dog",), 3):
        assert crisp_oracle(ex, s, b) == crisp_oracle(dual, s, b)


def test_rejects_non_crisp():
    values = np.zeros((2, 1, 1))
    values[1] = 0.5
    s = AttentionStack((SOT_LABEL, "dog"), values)
    with pytest.raises(NonCrispInput):
        crisp_oracle(parse_dsl("exists x. Dog(x)"), s, {"Dog": "dog"})


def test_rejects_open_proposition():
    with pytest.raises(UnsupportedForm):
        crisp_oracle(Atom("Dog", "x"), _crisp([1]), {"Dog": "dog"})


def test_rejects_unbound_predicate():
    with pytest.raises(UnboundPredicate):
        crisp_oracle(parse_dsl("exists x. Ox(x)"), _crisp([1]), {})
