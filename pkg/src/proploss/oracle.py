"""Brute-force classical truth evaluation on crisp stacks.

Pixels are the domain of discourse and an intensity of exactly 1 means the
predicate holds at that pixel. The evaluator walks the proposition
recursively with Python booleans; it shares no code with the fuzzy lowering,
so the two can check each other.
"""

from __future__ import annotations

from typing import Mapping

import numpy as np

from .errors import NonCrispInput, ShapeMismatch, UnboundPredicate, UnsupportedForm
from .logic import (
    And, Atom, Exists, FalseProp, Forall, Iff, Implies, Not, Or,
    Proposition, TrueProp, free_vars,
)
from .stack import AttentionStack


def crisp_oracle(
    p: Proposition, stack: AttentionStack, binding: Mapping[str, str]
) -> bool:
    """Classical truth of a closed proposition on a 0/1 stack."""
    if free_vars(p):
        raise UnsupportedForm("oracle requires a closed proposition")
    values = stack.values
    if not np.all((values == 0.0) | (values == 1.0)):
        raise NonCrispInput("every intensity must be exactly 0 or 1")
    planes = stack.planes
    n = stack.n_pixels

    def channel(pred: str) -> int:
        if pred not in binding:
            raise UnboundPredicate(f"predicate {pred} has no token binding")
        label = binding[pred]
        if label not in stack.tokens:
            raise ShapeMismatch(f"stack has no channel labeled {label!r}")
        return stack.tokens.index(label)

    def truth(node: Proposition, env: dict[str, int]) -> bool:
        if isinstance(node, TrueProp):
            return True
        if isinstance(node, FalseProp):
            return False
        if isinstance(node, Atom):
            return planes[channel(node.pred), env[node.var]] == 1.0
        if isinstance(node, Not):
            return not truth(node.p, env)
        if isinstance(node, And):
            return truth(node.p, env) and truth(node.q, env)
        if isinstance(node, Or):
            return truth(node.p, env) or truth(node.q, env)
        if isinstance(node, Implies):
            return (not truth(node.p, env)) or truth(node.q, env)
        if isinstance(node, Iff):
            return truth(node.p, env) == truth(node.q, env)
        if isinstance(node, Forall):
            return all(
                truth(node.body, {**env, node.var: i}) for i in range(n))
        if isinstance(node, Exists):
            return any(
                truth(node.body, {**env, node.var: i}) for i in range(n))
        raise UnsupportedForm(f"cannot evaluate {type(node).__name__}")

    return truth(p, {})
