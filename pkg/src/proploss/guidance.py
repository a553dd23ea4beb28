"""Guidance-loop simulation on synthetic attention stacks.

The diffusion backbone is abstracted away: per-pixel channel logits stand in
for the latent state, the stack is their channel softmax, and each guided
step subtracts the loss gradient (pulled back through the softmax) from the
logits. The schedule runs a few extra guided pre-steps (the refinement
rounds), then total_steps steps of which only the first guided_steps apply
guidance; the rest only add seeded Gaussian noise standing in for unguided
denoising.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .autodiff import logit_gradient
from .compiler import LossGraph, evaluate_detailed, normalize_map
from . import engine as _engine
from .errors import BadShape
from .logic import Atom, Forall, Iff, Implies, Proposition
from .stack import SOT_LABEL, AttentionStack, channel_softmax


@dataclass(frozen=True)
class GuidanceConfig:
    """Schedule and logic settings for one simulated run."""

    total_steps: int = 50
    guided_steps: int = 25
    refinement_rounds: int = 4
    learning_rate: float = 0.1
    noise_scale: float = 0.0
    seed: int = 0
    init_scale: float = 1.0
    backend: str = "product"
    reduction: str = "scaled"
    alpha: float = 0.3

    def __post_init__(self) -> None:
        if min(self.total_steps, self.guided_steps, self.refinement_rounds) < 0:
            raise ValueError("step counts must be nonnegative")
        if self.guided_steps > self.total_steps:
            raise ValueError("guided_steps must not exceed total_steps")
        if not self.learning_rate > 0.0:
            raise ValueError("learning_rate must be positive")
        if self.noise_scale < 0.0:
            raise ValueError("noise_scale must be nonnegative")
        if self.init_scale < 0.0:
            raise ValueError("init_scale must be nonnegative")


@dataclass(frozen=True)
class StepRecord:
    """State after one update: refinement pre-steps count up to 0, the main
    schedule runs 1..total_steps."""

    step: int
    loss: float
    degree: float
    conjunct_losses: tuple[float, ...]
    conjunct_degrees: tuple[float, ...]


@dataclass(frozen=True)
class Trajectory:
    records: tuple[StepRecord, ...]
    final_stack: AttentionStack
    final_logits: np.ndarray = field(repr=False)
    config: GuidanceConfig
    tokens: tuple[str, ...]
    metadata: Mapping[str, str]


def graph_tokens(graph: LossGraph) -> tuple[str, ...]:
    """Channel layout a graph implies: start-of-text plus its slot labels."""
    return (SOT_LABEL, *graph.slot_labels)


def init_logits(cfg: GuidanceConfig, shape: tuple[int, int, int]) -> np.ndarray:
    """Seeded standard-normal logits (scaled by init_scale) for (K, W, H)."""
    return _draw_init(np.random.default_rng(cfg.seed), cfg, shape)


def _draw_init(
    rng: np.random.Generator, cfg: GuidanceConfig, shape: tuple[int, int, int]
) -> np.ndarray:
    if len(shape) != 3:
        raise BadShape(f"shape must be (K, W, H), got {shape!r}")
    k, w, h = shape
    if k < 2:
        raise BadShape("need at least the start-of-text channel plus one word")
    if w < 1 or h < 1:
        raise BadShape(f"empty grid {w}x{h}")
    return cfg.init_scale * rng.standard_normal((k, h, w))


def guidance_step(
    logits: np.ndarray,
    graph: LossGraph,
    lr: float,
    tokens: tuple[str, ...] | None = None,
    engine: str | None = None,
) -> np.ndarray:
    """One guided update: logits - lr * d(loss)/d(logits)."""
    if tokens is None:
        tokens = graph_tokens(graph)
    _, _, grad_logits, _ = logit_gradient(graph, logits, tokens, engine)
    return logits - lr * grad_logits


def run(
    cfg: GuidanceConfig,
    graph: LossGraph,
    shape: tuple[int, int, int],
    engine: str | None = None,
) -> Trajectory:
    """Simulate the full schedule. Deterministic given cfg (and engine).

    One random stream drives both the initialization and the per-step noise,
    so trajectories with the same seed share their noise regardless of how
    many steps are guided. A record is appended after every update,
    refinement pre-steps included: len(records) == total_steps +
    refinement_rounds.
    """
    if (cfg.backend, cfg.reduction) != (graph.backend, graph.reduction):
        raise ValueError(
            "config expects "
            f"{cfg.backend}/{cfg.reduction} but the graph was compiled "
            f"{graph.backend}/{graph.reduction}")
    if cfg.alpha != graph.alpha:
        raise ValueError(
            f"config alpha {cfg.alpha} != graph alpha {graph.alpha}")
    tokens = graph_tokens(graph)
    if shape[0] != len(tokens):
        raise BadShape(
            f"shape has {shape[0]} channels but the graph needs "
            f"{len(tokens)}: {' '.join(tokens)}")
    rng = np.random.default_rng(cfg.seed)
    logits = _draw_init(rng, cfg, shape)
    records: list[StepRecord] = []

    def record(step: int) -> AttentionStack:
        stack = AttentionStack(
            tokens, channel_softmax(logits), softmax_normalized=True)
        detail = evaluate_detailed(graph, stack, engine)
        records.append(StepRecord(
            step=step,
            loss=detail.loss,
            degree=detail.degree,
            conjunct_losses=tuple(c.loss for c in detail.conjuncts),
            conjunct_degrees=tuple(c.degree for c in detail.conjuncts),
        ))
        return stack

    stack = None
    for i in range(cfg.refinement_rounds):
        logits = guidance_step(logits, graph, cfg.learning_rate, tokens, engine)
        stack = record(i + 1 - cfg.refinement_rounds)
    for step in range(1, cfg.total_steps + 1):
        if step <= cfg.guided_steps:
            logits = guidance_step(
                logits, graph, cfg.learning_rate, tokens, engine)
        logits = logits + cfg.noise_scale * rng.standard_normal(logits.shape)
        stack = record(step)
    if stack is None:
        stack = AttentionStack(
            tokens, channel_softmax(logits), softmax_normalized=True)
    return Trajectory(
        records=tuple(records),
        final_stack=stack,
        final_logits=logits,
        config=cfg,
        tokens=tokens,
        metadata={
            "engine": engine or _engine.current_engine(),
            "init_distribution": "normal",
            "init_scale": repr(cfg.init_scale),
        },
    )


def containment(stack: AttentionStack, inner: str, outer: str) -> float:
    """mean of norm(A_inner) * (1 - norm(A_outer)): 0 when the inner map's
    normalized support sits entirely inside the outer map's."""
    a = normalize_map(stack.channel(inner))
    b = normalize_map(stack.channel(outer))
    return float(np.mean(a * (1.0 - b)))


def ablate_implication_direction(
    first: str, second: str, mode: str
) -> Proposition:
    """Implication variants between a (noun, adjective) or (object, subject)
    pair, for the direction-reversal ablation."""
    var = "x"
    a = Atom(first.capitalize(), var)
    b = Atom(second.capitalize(), var)
    key = mode.lower().replace("_", "").replace("-", "")
    if key in ("nountoadj", "objtosubj"):
        return Forall(var, Implies(a, b))
    if key in ("adjtonoun", "subjtoobj"):
        return Forall(var, Implies(b, a))
    if key == "biimplication":
        return Forall(var, Iff(a, b))
    raise ValueError(
        f"mode must be NounToAdj/AdjToNoun/ObjToSubj/SubjToObj/Biimplication,"
        f" got {mode!r}")
