"""AttentionStack validation and the channel softmax."""

import numpy as np
import pytest

from proploss import (
    AttentionStack, BadShape, SOT_LABEL, channel_softmax, softmax_stack,
)
from proploss.stack import channel_softmax_vjp


def _values(k=3, h=2, w=2, seed=0):
    return np.random.default_rng(seed).uniform(0.1, 0.9, (k, h, w))


def test_basic_properties():
    s = AttentionStack((SOT_LABEL, "dog", "cat"), _values())
    assert s.n_tokens == 3
    assert s.height == 2 and s.width == 2
    assert s.n_pixels == 4
    assert s.planes.shape == (3, 4)
    assert np.array_equal(s.channel("dog"), s.values[1])


def test_values_are_frozen_and_copied():
    v = _values()
    s = AttentionStack((SOT_LABEL, "dog", "cat"), v)
    with pytest.raises(ValueError):
        s.values[0, 0, 0] = 0.5
    v[0, 0, 0] = 0.123  # the stack must not alias caller memory
    assert s.values[0, 0, 0] != 0.123


def test_rejects_bad_shapes_and_tokens():
    v = _values()
    with pytest.raises(BadShape):
        AttentionStack((SOT_LABEL, "dog"), v)  # token count mismatch
    with pytest.raises(BadShape):
        AttentionStack((SOT_LABEL, "dog", "cat"), v[:, 0])  # not 3d
    with pytest.raises(BadShape):
        AttentionStack(("dog", "cat", "bird"), v)  # channel 0 not <sot>
    with pytest.raises(BadShape):
        AttentionStack((SOT_LABEL, "dog", "dog"), v)  # duplicate label
    with pytest.raises(BadShape):
        AttentionStack((SOT_LABEL, "a b", "cat"), v)  # whitespace in label
    with pytest.raises(BadShape):
        AttentionStack((SOT_LABEL, "", "cat"), v)  # empty label


def test_rejects_out_of_range_and_nonfinite():
    v = _values()
    v[1, 0, 0] = 1.5
    with pytest.raises(BadShape):
        AttentionStack((SOT_LABEL, "dog", "cat"), v)
    v[1, 0, 0] = np.nan
    with pytest.raises(BadShape):
        AttentionStack((SOT_LABEL, "dog", "cat"), v)


def test_softmax_flag_validates():
    z = np.random.default_rng(1).standard_normal((3, 2, 2))
    s = channel_softmax(z)
    AttentionStack((SOT_LABEL, "dog", "cat"), s, softmax_normalized=True)
    with pytest.raises(BadShape):
        AttentionStack(
            (SOT_LABEL, "dog", "cat"), _values(), softmax_normalized=True)


def test_channel_softmax_columns_sum_to_one():
    z = np.random.default_rng(2).standard_normal((4, 3, 5)) * 10.0
    s = channel_softmax(z)
    assert np.allclose(s.sum(axis=0), 1.0, atol=1e-12)
    assert s.min() > 0.0


def test_channel_softmax_shift_invariant():
    z = np.random.default_rng(3).standard_normal((3, 2, 2))
    shifted = z + 123.0  # same shift on every channel of a pixel
    assert np.allclose(channel_softmax(z), channel_softmax(shifted), atol=1e-12)


def test_channel_softmax_extreme_logits_stable():
    z = np.zeros((2, 1, 1))
    z[0] = 800.0
    s = channel_softmax(z)
    assert np.isfinite(s).all()
    assert s[0, 0, 0] == pytest.approx(1.0)


def test_softmax_stack_helper():
    z = np.random.default_rng(4).standard_normal((3, 2, 2))
    s = softmax_stack(z, (SOT_LABEL, "dog", "cat"))
    assert isinstance(s, AttentionStack)
    assert np.allclose(s.values, channel_softmax(z), atol=0.0)


def test_channel_softmax_vjp_matches_finite_differences():
    rng = np.random.default_rng(5)
    z = rng.standard_normal((3, 2, 2))
    g = rng.standard_normal((3, 2, 2))
    s = channel_softmax(z)
    dz = channel_softmax_vjp(g, s)
    h = 1e-6
    for idx in np.ndindex(z.shape):
        zp, zm = z.copy(), z.copy()
        zp[idx] += h
        zm[idx] -= h
        fd = ((channel_softmax(zp) - channel_softmax(zm)) * g).sum() / (2 * h)
        assert dz[idx] == pytest.approx(fd, abs=1e-6)
