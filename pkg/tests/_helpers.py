"""Stack generators shared across test modules.

interior_stack() rejection-samples stacks whose tape stays away from every
kink: clamp lower bounds, min-max normalization argmin/argmax switches, and
min/max winner ties. Central differences at step h are only trustworthy on
such stacks, so the finite-difference tests draw from here.
"""

import itertools

import numpy as np

from proploss import SOT_LABEL, AttentionStack, channel_softmax
from proploss.compiler import LossGraph, gather_planes
from proploss.engine import backward, forward
from proploss.program import CLAMP, EMAX, EMIN, NORM, RMAX, RMIN
from proploss.stack import channel_softmax_vjp


def tokens_for(binding) -> tuple[str, ...]:
    """Channel layout covering a binding: start-of-text plus each label."""
    seen: list[str] = []
    for label in binding.values():
        if label not in seen:
            seen.append(label)
    return (SOT_LABEL, *seen)


def random_stack(tokens, shape_hw, rng, lo=0.05, hi=0.95) -> AttentionStack:
    h, w = shape_hw
    return AttentionStack(
        tuple(tokens), rng.uniform(lo, hi, (len(tokens), h, w)))


def stack_is_interior(graph: LossGraph, stack: AttentionStack,
                      margin: float) -> bool:
    """True when no tape value sits within margin of a kink."""
    planes = gather_planes(graph, stack)
    prog = graph.program
    regs = forward(prog, planes, "python")
    vec = prog.reg_is_vec

    def row(r: int) -> np.ndarray:
        return regs[r] if vec[r] else regs[r, :1]

    for i in range(prog.code.shape[0]):
        op, _, a, b, _ = prog.code[i]
        if op == CLAMP:
            # inputs exactly 0 are pinned there by a normalization extreme
            # and stay flat under h-sized moves; only values strictly inside
            # (0, lo + margin) can cross the clamp boundary
            x = row(a)
            unpinned = x[x != 0.0]
            if unpinned.size and unpinned.min() < prog.faux[i, 0] + margin:
                return False
        elif op == NORM:
            ch = np.sort(regs[a])
            if ch[-1] - ch[0] < 0.25:
                return False  # keep the normalization well-conditioned
            if len(ch) > 1 and (ch[1] - ch[0] < margin
                                or ch[-1] - ch[-2] < margin):
                return False
        elif op in (RMIN, RMAX) and vec[a]:
            ch = np.sort(regs[a])
            gap = ch[1] - ch[0] if op == RMIN else ch[-1] - ch[-2]
            if len(ch) > 1 and gap < margin:
                return False
        elif op in (EMIN, EMAX):
            if np.abs(row(a) - row(b)).min() < margin:
                return False
    return True


def _fd_floor(loss: float, h: float, tol: float) -> float:
    """Smallest nonzero derivative central differences can certify.

    The loss value carries about eps * (1 + |loss|) of rounding noise, the
    difference quotient amplifies that by 1/(2h), and the check divides by
    tol; nonzero derivatives under this floor are unverifiable at step h, so
    the samplers reject such stacks. Exact zeros are exempt: away from the
    kinks the loss is bit-identically flat there, so the quotient is exactly
    zero as well. Factor 3 keeps headroom.
    """
    return 3.0 * 2.2e-16 * (1.0 + abs(loss)) / (2.0 * h) / tol


def _resolvable(grad: np.ndarray, loss: float, h: float, tol: float) -> bool:
    nonzero = np.abs(grad[grad != 0.0])
    return nonzero.size == 0 or nonzero.min() >= _fd_floor(loss, h, tol)


def _plane_gradient(graph, stack):
    planes = gather_planes(graph, stack)
    prog = graph.program
    regs = forward(prog, planes, "python")
    grad = backward(prog, regs, planes, "python")
    return grad, float(regs[prog.loss_reg, 0])


def interior_stack(graph, tokens, shape_hw, rng, h=1e-5, tol=1e-4,
                   margin=None, max_tries=1000) -> AttentionStack:
    margin = 50.0 * h if margin is None else margin
    for _ in range(max_tries):
        s = random_stack(tokens, shape_hw, rng)
        if not stack_is_interior(graph, s, margin):
            continue
        grad, loss = _plane_gradient(graph, s)
        if not _resolvable(grad, loss, h, tol):
            continue
        return s
    raise RuntimeError("no interior stack found; loosen the margin")


def interior_logits(graph, tokens, shape_hw, rng, h=1e-5, tol=1e-4,
                    margin=None, max_tries=1000) -> np.ndarray:
    """Logits whose softmax stack is interior (and clear of raw boundaries)."""
    margin = 50.0 * h if margin is None else margin
    hh, ww = shape_hw
    tokens = tuple(tokens)
    for _ in range(max_tries):
        z = rng.standard_normal((len(tokens), hh, ww))
        s = AttentionStack(
            tokens, channel_softmax(z), softmax_normalized=True)
        read = gather_planes(graph, s)
        if read.size and (read.min() <= graph.epsilon + 2 * h
                          or read.max() >= 1.0 - graph.epsilon - 2 * h):
            continue
        if not stack_is_interior(graph, s, margin):
            continue
        grad, loss = _plane_gradient(graph, s)
        field = np.zeros_like(s.values)
        for k, label in enumerate(graph.slot_labels):
            field[tokens.index(label)] = grad[k].reshape(hh, ww)
        dz = channel_softmax_vjp(field, s.values)
        if not _resolvable(dz, loss, h, tol):
            continue
        return z
    raise RuntimeError("no interior logits found; loosen the margin")


def iter_crisp_stacks(labels, n_pixels: int):
    """All 0/1 stacks over the given word labels on a 1 x n_pixels grid."""
    tokens = (SOT_LABEL, *labels)
    cells = len(labels) * n_pixels
    for bits in itertools.product((0.0, 1.0), repeat=cells):
        values = np.zeros((len(tokens), 1, n_pixels))
        values[1:] = np.asarray(bits).reshape(len(labels), 1, n_pixels)
        yield AttentionStack(tokens, values)


def random_prop(rng, preds, depth=3, var="x"):
    """Random closed proposition over the given predicate names."""
    from proploss.logic import (
        And, Atom, Exists, Forall, Iff, Implies, Not, Or, TRUE, FALSE,
    )

    def body(d):
        roll = rng.integers(0, 8 if d > 0 else 2)
        if roll == 0:
            return Atom(str(rng.choice(preds)), var)
        if roll == 1:
            return TRUE if rng.integers(0, 4) == 0 else (
                FALSE if rng.integers(0, 4) == 0
                else Atom(str(rng.choice(preds)), var))
        if roll == 2:
            return Not(body(d - 1))
        ctor = (And, Or, Implies, Iff)[rng.integers(0, 4)]
        return ctor(body(d - 1), body(d - 1))

    quant = Forall if rng.integers(0, 2) else Exists
    p = quant(var, body(depth))
    if rng.integers(0, 3) == 0:
        q = quant(var, body(depth - 1))
        from proploss.logic import And as A
        p = A(p, q)
    return p
