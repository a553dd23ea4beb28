"""Lowering propositions to differentiable loss tapes.

A closed proposition over unary predicates becomes two tape sections. The
loss section realizes the per-conjunct decomposition: a top-level conjunction
contributes one summand per conjunct, forall-shaped conjuncts become sums (or
means) of per-pixel -log terms, existence conjuncts become -log(1 - r) with r
the product (or geometric mean) of per-pixel complements, and anything else
closes over scalar connective algebra before the final -log. Token channels
referenced anywhere under an implication are min-max normalized there, and
every log input is clamped to [epsilon, 1].

The degree section recomputes the satisfaction degree of the same conjuncts
from raw, unclamped, unnormalized maps, so a crisp stack yields exactly 0 or
1. Both sections share one register file; only the loss section is ever
differentiated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import ShapeMismatch, UnboundPredicate, UnsupportedForm
from .logic import (
    And, Atom, Exists, FalseProp, Forall, Iff, Implies, Not, Or,
    Proposition, TrueProp, free_vars, normalize, print_dsl,
)
from .program import (
    AXPY, CLAMP, EMAX, EMIN, EXP, LOG, MEAN, MUL, NORM, ONEM, PROD,
    Program, RMAX, RMIN, SUM, TapeBuilder,
)
from .stack import SOT_LABEL, AttentionStack
from . import engine as _engine

BACKENDS = ("product", "goedel")
REDUCTIONS = ("paper", "scaled")


@dataclass(frozen=True)
class ConjunctInfo:
    """One top-level conjunct: its printed form, weight, and role."""

    text: str
    weight: float
    negative: bool


@dataclass(frozen=True, eq=False)
class LossGraph:
    """A compiled proposition: tape program plus compilation metadata."""

    program: Program = field(repr=False)
    slot_labels: tuple[str, ...]
    backend: str
    reduction: str
    alpha: float
    epsilon: float
    normalize_implications: bool
    binding: Mapping[str, str]
    normalization_set: frozenset[str]
    conjuncts: tuple[ConjunctInfo, ...]
    prop: Proposition
    source: Proposition


@dataclass(frozen=True)
class ConjunctEval:
    text: str
    weight: float
    loss: float
    degree: float


@dataclass(frozen=True)
class EvalResult:
    degree: float
    loss: float
    conjuncts: tuple[ConjunctEval, ...]


def normalize_map(m: np.ndarray) -> np.ndarray:
    """Min-max normalize a map; a constant map becomes all zeros."""
    m = np.asarray(m, dtype=np.float64)
    mn = m.min()
    r = m.max() - mn
    if r > 0.0:
        return (m - mn) / r
    return np.zeros_like(m)


def compile_proposition(
    p: Proposition,
    binding: Mapping[str, str],
    backend: str = "product",
    reduction: str = "scaled",
    alpha: float = 0.3,
    epsilon: float = 1e-8,
    normalize_implications: bool = True,
) -> LossGraph:
    """Lower a closed proposition to a LossGraph.

    binding maps predicate names to token labels (channel 0 is reserved and
    cannot be bound); a frontend TokenBinding is accepted directly. alpha
    weights the implicit-negative conjuncts, the forall-over-negated-
    consequent implications; everything else gets 1.
    """
    if hasattr(binding, "label_map"):
        binding = binding.label_map()
    if backend not in BACKENDS:
        raise ValueError(f"backend must be one of {BACKENDS}, got {backend!r}")
    if reduction not in REDUCTIONS:
        raise ValueError(
            f"reduction must be one of {REDUCTIONS}, got {reduction!r}")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha!r}")
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    _validate(p, binding)

    source = p
    p = normalize(p)
    conjunct_props = [_push_quantifier_negations(c) for c in _flatten_and(p)]
    weights = []
    infos = []
    for c in conjunct_props:
        neg = _is_implicit_negative(c)
        w = alpha if neg else 1.0
        weights.append(w)
        infos.append(ConjunctInfo(text=print_dsl(c), weight=w, negative=neg))

    lw = _Lowering(binding, backend, reduction, epsilon, normalize_implications)

    loss_regs = [lw.conjunct_loss(c) for c in conjunct_props]
    if backend == "product":
        total = lw.tb.const(0.0)
        for r, w in zip(loss_regs, weights):
            lw.tb.axpy(total, r, w)
    else:
        weighted = []
        for r, w in zip(loss_regs, weights):
            wr = lw.tb.const(0.0)
            lw.tb.axpy(wr, r, w)
            weighted.append(wr)
        total = weighted[0]
        for r in weighted[1:]:
            total = lw.tb.binary(EMAX, total, r)
    lw.tb.mark_loss_end()

    degree_regs = [lw.scalar(c, loss_side=False, norm_ctx=False)
                   for c in conjunct_props]
    droot = degree_regs[0]
    for r in degree_regs[1:]:
        op = MUL if backend == "product" else EMIN
        droot = lw.tb.binary(op, droot, r)

    program = lw.tb.finish(
        loss_reg=total,
        degree_reg=droot,
        conjunct_loss_regs=tuple(loss_regs),
        conjunct_degree_regs=tuple(degree_regs),
        conjunct_weights=tuple(weights),
    )
    return LossGraph(
        program=program,
        slot_labels=tuple(lw.slot_labels),
        backend=backend,
        reduction=reduction,
        alpha=alpha,
        epsilon=epsilon,
        normalize_implications=normalize_implications,
        binding=dict(binding),
        normalization_set=frozenset(lw.normalized_labels),
        conjuncts=tuple(infos),
        prop=p,
        source=source,
    )


def evaluate(
    graph: LossGraph, stack: AttentionStack, engine: str | None = None
) -> tuple[float, float]:
    """(degree, loss) of the compiled proposition on a stack."""
    regs = _run(graph, stack, engine)
    return (
        float(regs[graph.program.degree_reg, 0]),
        float(regs[graph.program.loss_reg, 0]),
    )


def evaluate_detailed(
    graph: LossGraph, stack: AttentionStack, engine: str | None = None
) -> EvalResult:
    """Evaluation including each top-level conjunct's own loss and degree."""
    regs = _run(graph, stack, engine)
    prog = graph.program
    parts = tuple(
        ConjunctEval(
            text=info.text,
            weight=info.weight,
            loss=float(regs[lr, 0]),
            degree=float(regs[dr, 0]),
        )
        for info, lr, dr in zip(
            graph.conjuncts, prog.conjunct_loss_regs, prog.conjunct_degree_regs
        )
    )
    return EvalResult(
        degree=float(regs[prog.degree_reg, 0]),
        loss=float(regs[prog.loss_reg, 0]),
        conjuncts=parts,
    )


def gather_planes(graph: LossGraph, stack: AttentionStack) -> np.ndarray:
    """Select the stack channels the graph reads, in slot order."""
    indices = []
    for label in graph.slot_labels:
        if label not in stack.tokens:
            raise ShapeMismatch(f"stack has no channel labeled {label!r}")
        indices.append(stack.tokens.index(label))
    return np.ascontiguousarray(stack.planes[indices])


def _run(graph: LossGraph, stack: AttentionStack, engine: str | None) -> np.ndarray:
    return _engine.forward(graph.program, gather_planes(graph, stack), engine)


def _flatten_and(p: Proposition) -> list[Proposition]:
    if isinstance(p, And):
        return _flatten_and(p.p) + _flatten_and(p.q)
    return [p]


def _push_quantifier_negations(p: Proposition) -> Proposition:
    """Rewrite the conjunct head so negated quantifiers expose their dual.

    not exists x. b  ==  forall x. not b, and dually; double negation
    cancels. All three rewrites preserve the degree exactly, and they let a
    negated existence take the per-pixel log-sum loss form instead of a
    single log of a many-factor product.
    """
    while isinstance(p, Not):
        inner = p.p
        if isinstance(inner, Not):
            p = inner.p
        elif isinstance(inner, Exists):
            p = Forall(inner.var, Not(inner.body))
        elif isinstance(inner, Forall):
            p = Exists(inner.var, Not(inner.body))
        else:
            break
    return p


def _is_implicit_negative(c: Proposition) -> bool:
    return (
        isinstance(c, Forall)
        and isinstance(c.body, Implies)
        and isinstance(c.body.q, Not)
    )


def _validate(p: Proposition, binding: Mapping[str, str]) -> None:
    fv = free_vars(p)
    if fv:
        raise UnsupportedForm(
            f"proposition must be closed; free variables: {sorted(fv)}")
    for pred, label in binding.items():
        if label == SOT_LABEL:
            raise UnsupportedForm(
                f"predicate {pred} bound to the reserved channel {SOT_LABEL!r}")

    def walk(node: Proposition) -> None:
        if isinstance(node, Atom):
            if node.pred not in binding:
                raise UnboundPredicate(
                    f"predicate {node.pred} has no token binding")
        elif isinstance(node, Not):
            walk(node.p)
        elif isinstance(node, (And, Or, Implies, Iff)):
            union = free_vars(node.p) | free_vars(node.q)
            if len(union) > 1:
                raise UnsupportedForm(
                    "binary connective spans distinct variables: "
                    + ", ".join(sorted(union)))
            walk(node.p)
            walk(node.q)
        elif isinstance(node, (Forall, Exists)):
            outside = free_vars(node.body) - {node.var}
            if outside:
                raise UnsupportedForm(
                    f"quantifier body over {node.var} references "
                    + ", ".join(sorted(outside)))
            walk(node.body)

    walk(p)


class _Lowering:
    """Single-pass tape emission with per-channel leaf caching."""

    def __init__(
        self,
        binding: Mapping[str, str],
        backend: str,
        reduction: str,
        epsilon: float,
        normalize_implications: bool,
    ) -> None:
        self.binding = binding
        self.backend = backend
        self.reduction = reduction
        self.epsilon = epsilon
        self.normalize_implications = normalize_implications
        self.slot_labels: list[str] = []
        self._slot_of: dict[str, int] = {}
        self._raw: dict[int, int] = {}
        self._norm: dict[int, int] = {}
        self.normalized_labels: set[str] = set()
        self.tb = TapeBuilder(n_channels=0)

    # Leaf access.

    def _slot(self, label: str) -> int:
        if label not in self._slot_of:
            self._slot_of[label] = len(self.slot_labels)
            self.slot_labels.append(label)
            self.tb.n_channels = len(self.slot_labels)
        return self._slot_of[label]

    def leaf(self, atom: Atom, normalized: bool) -> int:
        slot = self._slot(self.binding[atom.pred])
        if slot not in self._raw:
            self._raw[slot] = self.tb.load(slot)
        if not normalized:
            return self._raw[slot]
        if slot not in self._norm:
            self._norm[slot] = self.tb.unary(NORM, self._raw[slot])
            self.normalized_labels.add(self.slot_labels[slot])
        return self._norm[slot]

    # Value lowering. vec() produces the per-pixel register of a body with
    # one free pixel variable; scalar() the degree of a closed subterm.
    # loss_side selects clamped logs and implication-scope normalization;
    # the degree side always reads raw maps and unclamped logs.

    def vec(self, p: Proposition, var: str, loss_side: bool, norm_ctx: bool) -> int:
        tb = self.tb
        if isinstance(p, Atom):
            return self.leaf(
                p, loss_side and norm_ctx and self.normalize_implications)
        if isinstance(p, TrueProp):
            return tb.const(1.0)
        if isinstance(p, FalseProp):
            return tb.const(0.0)
        if isinstance(p, Not):
            return tb.unary(ONEM, self.vec(p.p, var, loss_side, norm_ctx))
        if isinstance(p, (Forall, Exists)):
            return self.scalar(p, loss_side, norm_ctx)
        if isinstance(p, Implies):
            a = self.vec(p.p, var, loss_side, True)
            b = self.vec(p.q, var, loss_side, True)
            if self.backend == "product":
                return tb.unary(ONEM, tb.binary(MUL, a, tb.unary(ONEM, b)))
            return tb.binary(EMAX, tb.unary(ONEM, a), b)
        if isinstance(p, And):
            a = self.vec(p.p, var, loss_side, norm_ctx)
            b = self.vec(p.q, var, loss_side, norm_ctx)
            op = MUL if self.backend == "product" else EMIN
            return tb.binary(op, a, b)
        if isinstance(p, Or):
            a = self.vec(p.p, var, loss_side, norm_ctx)
            b = self.vec(p.q, var, loss_side, norm_ctx)
            if self.backend == "product":
                na = tb.unary(ONEM, a)
                nb = tb.unary(ONEM, b)
                return tb.unary(ONEM, tb.binary(MUL, na, nb))
            return tb.binary(EMAX, a, b)
        raise UnsupportedForm(f"cannot lower {type(p).__name__}")

    def scalar(self, p: Proposition, loss_side: bool, norm_ctx: bool) -> int:
        tb = self.tb
        if isinstance(p, TrueProp):
            return tb.const(1.0)
        if isinstance(p, FalseProp):
            return tb.const(0.0)
        if isinstance(p, Forall):
            phi = self.vec(p.body, p.var, loss_side, norm_ctx)
            return self._forall_degree(phi, loss_side)
        if isinstance(p, Exists):
            phi = self.vec(p.body, p.var, loss_side, norm_ctx)
            return self._exists_degree(phi, loss_side)
        if isinstance(p, Not):
            return tb.unary(ONEM, self.scalar(p.p, loss_side, norm_ctx))
        if isinstance(p, Implies):
            a = self.scalar(p.p, loss_side, True)
            b = self.scalar(p.q, loss_side, True)
            if self.backend == "product":
                return tb.unary(ONEM, tb.binary(MUL, a, tb.unary(ONEM, b)))
            return tb.binary(EMAX, tb.unary(ONEM, a), b)
        if isinstance(p, And):
            a = self.scalar(p.p, loss_side, norm_ctx)
            b = self.scalar(p.q, loss_side, norm_ctx)
            op = MUL if self.backend == "product" else EMIN
            return tb.binary(op, a, b)
        if isinstance(p, Or):
            a = self.scalar(p.p, loss_side, norm_ctx)
            b = self.scalar(p.q, loss_side, norm_ctx)
            if self.backend == "product":
                na = tb.unary(ONEM, a)
                nb = tb.unary(ONEM, b)
                return tb.unary(ONEM, tb.binary(MUL, na, nb))
            return tb.binary(EMAX, a, b)
        raise UnsupportedForm(f"cannot lower {type(p).__name__} as a scalar")

    def _forall_degree(self, phi: int, loss_side: bool) -> int:
        tb = self.tb
        if self.backend == "goedel":
            return tb.reduce(RMIN, phi)
        if self.reduction == "paper":
            return tb.reduce(PROD, phi)
        return tb.unary(EXP, tb.reduce(MEAN, self._log(phi, loss_side)))

    def _exists_degree(self, phi: int, loss_side: bool) -> int:
        tb = self.tb
        if self.backend == "goedel":
            return tb.reduce(RMAX, phi)
        comp = tb.unary(ONEM, phi)
        if self.reduction == "paper":
            r = tb.reduce(PROD, comp)
        else:
            r = tb.unary(EXP, tb.reduce(MEAN, self._log(comp, loss_side)))
        return tb.unary(ONEM, r)

    def _log(self, reg: int, loss_side: bool) -> int:
        if loss_side:
            reg = self.tb.unary(CLAMP, reg, f0=self.epsilon, f1=1.0)
        return self.tb.unary(LOG, reg)

    def _neg(self, reg: int) -> int:
        out = self.tb.const(0.0)
        self.tb.axpy(out, reg, -1.0)
        return out

    # Conjunct loss forms.

    def conjunct_loss(self, c: Proposition) -> int:
        tb = self.tb
        if self.backend == "goedel":
            d = self.scalar(c, loss_side=True, norm_ctx=False)
            return tb.unary(ONEM, d)
        if isinstance(c, Forall):
            phi = self.vec(c.body, c.var, loss_side=True, norm_ctx=False)
            logs = self._log(phi, loss_side=True)
            red = SUM if self.reduction == "paper" else MEAN
            return self._neg(tb.reduce(red, logs))
        if isinstance(c, Exists):
            phi = self.vec(c.body, c.var, loss_side=True, norm_ctx=False)
            comp = tb.unary(ONEM, phi)
            if self.reduction == "paper":
                r = tb.reduce(PROD, comp)
            else:
                r = tb.unary(EXP, tb.reduce(MEAN, self._log(comp, True)))
            return self._neg(self._log(tb.unary(ONEM, r), loss_side=True))
        d = self.scalar(c, loss_side=True, norm_ctx=False)
        return self._neg(self._log(d, loss_side=True))
