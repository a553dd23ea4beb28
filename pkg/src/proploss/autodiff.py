"""Gradients of compiled losses, with a finite-difference verifier.

Reverse mode: one backward pass over the tape's loss section yields
d(loss)/d(A_token[pixel]) for every channel the graph reads. Channels the
graph never loads, including the start-of-text channel, get exact zeros.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import engine as _engine
from .compiler import LossGraph, gather_planes
from .errors import BoundaryInput
from .stack import AttentionStack, channel_softmax, channel_softmax_vjp

SOT_INDEX = 0


@dataclass(frozen=True)
class GradientCheckReport:
    """Outcome of comparing reverse-mode against central differences."""

    max_rel_error: float
    worst: tuple[str, int] | None
    passed: bool
    h: float
    tol: float
    n_checked: int


def gradient(
    graph: LossGraph, stack: AttentionStack, engine: str | None = None
) -> np.ndarray:
    """d(loss)/d(values) with the stack's own (K, H, W) shape."""
    return evaluate_with_gradient(graph, stack, engine)[2]


def evaluate_with_gradient(
    graph: LossGraph, stack: AttentionStack, engine: str | None = None
) -> tuple[float, float, np.ndarray]:
    """(degree, loss, gradient field) from one forward and one backward."""
    planes = gather_planes(graph, stack)
    prog = graph.program
    regs = _engine.forward(prog, planes, engine)
    grad_slots = _engine.backward(prog, regs, planes, engine)
    field = np.zeros_like(stack.values)
    flat = field.reshape(field.shape[0], -1)
    for s, label in enumerate(graph.slot_labels):
        flat[stack.tokens.index(label)] += grad_slots[s]
    return (
        float(regs[prog.degree_reg, 0]),
        float(regs[prog.loss_reg, 0]),
        field,
    )


def logit_gradient(
    graph: LossGraph,
    logits: np.ndarray,
    tokens: tuple[str, ...],
    engine: str | None = None,
) -> tuple[float, float, np.ndarray, AttentionStack]:
    """Loss gradient pulled back through the channel softmax to the logits."""
    stack = AttentionStack(tokens, channel_softmax(logits), softmax_normalized=True)
    degree, loss, field = evaluate_with_gradient(graph, stack, engine)
    return degree, loss, channel_softmax_vjp(field, stack.values), stack


def check_gradient(
    graph: LossGraph,
    stack: AttentionStack,
    h: float = 1e-5,
    tol: float = 1e-4,
    engine: str | None = None,
) -> GradientCheckReport:
    """Verify every read entry's derivative by central finite differences.

    rel-err = |g_ad - g_fd| / max(1e-8, |g_ad| + |g_fd|). Checked entries
    must sit away from the clamp boundaries: BoundaryInput if any read
    intensity is within h of epsilon or of 1 - epsilon.
    """
    if not 1e-7 <= h <= 1e-3:
        raise ValueError(f"h must lie in [1e-7, 1e-3], got {h!r}")
    planes = gather_planes(graph, stack)
    eps = graph.epsilon
    if planes.size and (
        planes.min() <= eps + h or planes.max() >= 1.0 - eps - h
    ):
        raise BoundaryInput(
            f"an intensity sits within {h} of a clamp boundary")
    prog = graph.program
    regs = _engine.forward(prog, planes, engine)
    grad = _engine.backward(prog, regs, planes, engine)

    def loss_at(pl: np.ndarray) -> float:
        return float(_engine.forward(prog, pl, engine)[prog.loss_reg, 0])

    return _compare(
        grad, planes, loss_at, graph.slot_labels, h, tol)


def check_gradient_logits(
    graph: LossGraph,
    logits: np.ndarray,
    tokens: tuple[str, ...],
    h: float = 1e-5,
    tol: float = 1e-4,
    engine: str | None = None,
) -> GradientCheckReport:
    """Finite-difference check of the softmax-logit gradient.

    Perturbs raw logits, re-softmaxes, and compares against the chained
    reverse-mode gradient. All channels participate (softmax couples them),
    so entries are indexed by the stack's own token labels.
    """
    if not 1e-7 <= h <= 1e-3:
        raise ValueError(f"h must lie in [1e-7, 1e-3], got {h!r}")
    logits = np.asarray(logits, dtype=np.float64)
    _, _, grad_logits, stack = logit_gradient(graph, logits, tokens, engine)
    eps = graph.epsilon
    read = gather_planes(graph, stack)
    if read.size and (read.min() <= eps + h or read.max() >= 1.0 - eps - h):
        raise BoundaryInput(
            f"a softmaxed intensity sits within {h} of a clamp boundary")
    prog = graph.program

    def loss_at(z_flat: np.ndarray) -> float:
        s = AttentionStack(
            tokens,
            channel_softmax(z_flat.reshape(logits.shape)),
            softmax_normalized=True,
        )
        return float(
            _engine.forward(prog, gather_planes(graph, s), engine)[
                prog.loss_reg, 0]
        )

    flat = logits.reshape(len(tokens), -1)
    return _compare(
        grad_logits.reshape(len(tokens), -1),
        flat,
        lambda pl: loss_at(pl),
        tokens,
        h,
        tol,
    )


def _compare(grad, base, loss_at, labels, h, tol) -> GradientCheckReport:
    max_rel = 0.0
    worst = None
    n_checked = 0
    work = np.array(base, dtype=np.float64)
    for s in range(work.shape[0]):
        for i in range(work.shape[1]):
            keep = work[s, i]
            work[s, i] = keep + h
            up = loss_at(work)
            work[s, i] = keep - h
            down = loss_at(work)
            work[s, i] = keep
            g_fd = (up - down) / (2.0 * h)
            g_ad = grad[s, i]
            rel = abs(g_ad - g_fd) / max(1e-8, abs(g_ad) + abs(g_fd))
            n_checked += 1
            if rel > max_rel:
                max_rel = rel
                worst = (labels[s], i)
    return GradientCheckReport(
        max_rel_error=max_rel,
        worst=worst,
        passed=max_rel <= tol,
        h=h,
        tol=tol,
        n_checked=n_checked,
    )
