"""Attention stacks: per-token intensity maps over a W x H pixel grid.

Arrays are float64 with shape (K, H, W): index 0 is the reserved start-of-text
channel, rows are image lines, so the flat pixel index i = y * W + x matches
the row-major order used by every reduction and by the AMAP text format.
Public shape tuples are written (K, W, H).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BadShape, ShapeMismatch

SOT_LABEL = "<sot>"


@dataclass(frozen=True)
class AttentionStack:
    """Immutable bundle of K token-channel maps over one pixel grid.

    tokens[0] must be the reserved start-of-text label. values has shape
    (K, H, W) with every entry in [0, 1]. When softmax_normalized is set the
    constructor additionally checks that the channels sum to 1 per pixel
    (tolerance 1e-9).
    """

    tokens: tuple[str, ...]
    values: np.ndarray = field(repr=False)
    softmax_normalized: bool = False

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 3:
            raise BadShape(f"values must be (K, H, W), got ndim={values.ndim}")
        k, h, w = values.shape
        if k != len(self.tokens):
            raise BadShape(
                f"{len(self.tokens)} token labels but {k} channels"
            )
        if k < 1 or h < 1 or w < 1:
            raise BadShape(f"empty stack shape {values.shape}")
        if self.tokens[0] != SOT_LABEL:
            raise BadShape(
                f"channel 0 must be {SOT_LABEL!r}, got {self.tokens[0]!r}"
            )
        for label in self.tokens:
            if not label or any(c.isspace() for c in label):
                raise BadShape(f"bad token label {label!r}")
        if len(set(self.tokens)) != len(self.tokens):
            raise BadShape("duplicate token labels")
        if not np.all(np.isfinite(values)):
            raise BadShape("non-finite intensity")
        if values.min() < 0.0 or values.max() > 1.0:
            raise BadShape("intensities must lie in [0, 1]")
        if self.softmax_normalized:
            sums = values.sum(axis=0)
            if not np.allclose(sums, 1.0, rtol=0.0, atol=1e-9):
                raise BadShape("per-pixel channel sums deviate from 1")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "tokens", tuple(self.tokens))

    @property
    def n_tokens(self) -> int:
        return self.values.shape[0]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]

    @property
    def n_pixels(self) -> int:
        return self.height * self.width

    @property
    def planes(self) -> np.ndarray:
        """(K, N) row-major flat view of the channel maps."""
        return self.values.reshape(self.n_tokens, -1)

    def channel(self, label: str) -> np.ndarray:
        """The (H, W) map for a token label."""
        try:
            idx = self.tokens.index(label)
        except ValueError:
            raise ShapeMismatch(f"no channel labeled {label!r}") from None
        return self.values[idx]


def softmax_stack(
    logits: np.ndarray, tokens: tuple[str, ...]
) -> AttentionStack:
    """Channel-softmax an (K, H, W) logit field into an AttentionStack."""
    return AttentionStack(tokens, channel_softmax(logits), softmax_normalized=True)


def channel_softmax(logits: np.ndarray) -> np.ndarray:
    """Softmax over axis 0 (the token channels), pixelwise."""
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - logits.max(axis=0, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=0, keepdims=True)


def channel_softmax_vjp(grad_stack: np.ndarray, stack_values: np.ndarray) -> np.ndarray:
    """Pull a gradient w.r.t. softmax outputs back to the logits.

    For each pixel, with s the channel distribution and g the output gradient:
    dz = s * (g - sum(g * s)).
    """
    dot = np.sum(grad_stack * stack_values, axis=0, keepdims=True)
    return stack_values * (grad_stack - dot)
