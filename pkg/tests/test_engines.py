"""Parity between the compiled tape engine and the pure-Python fallback."""

import subprocess
import sys

import numpy as np
import pytest

from proploss import (
    available_engines, compile_proposition, current_engine, evaluate,
    evaluate_with_gradient, set_engine,
)
from proploss.engine import backward, forward
from proploss.compiler import gather_planes

from _corpus import CORPUS
from _helpers import random_stack, tokens_for

BOTH = len(available_engines()) >= 2
needs_both = pytest.mark.skipif(
    not BOTH, reason="compiled engine not available")


def test_python_engine_always_available():
    assert "python" in available_engines()


def test_set_engine_round_trip():
    before = current_engine()
    try:
        set_engine("python")
        assert current_engine() == "python"
    finally:
        set_engine(before)


def test_unknown_engine_rejected():
    with pytest.raises(ValueError):
        set_engine("fortran")
    g = compile_proposition(CORPUS[0].prop, CORPUS[0].binding)
    s = random_stack(tokens_for(CORPUS[0].binding), (2, 2),
                     np.random.default_rng(0))
    with pytest.raises(ValueError):
        evaluate(g, s, engine="fortran")


@needs_both
@pytest.mark.parametrize("entry", CORPUS, ids=lambda e: e.name)
def test_forward_and_backward_parity(entry):
    rng = np.random.default_rng(42)
    tokens = tokens_for(entry.binding)
    for mode in ("paper", "scaled"):
        for backend in ("product", "goedel"):
            g = compile_proposition(
                entry.prop, entry.binding, backend=backend, reduction=mode)
            for _ in range(5):
                s = random_stack(tokens, (3, 3), rng)
                da, la, ga = evaluate_with_gradient(g, s, engine="python")
                db, lb, gb = evaluate_with_gradient(g, s, engine="compiled")
                assert abs(da - db) <= 1e-12
                assert abs(la - lb) <= 1e-12
                assert np.max(np.abs(ga - gb)) <= 1e-12


@needs_both
def test_register_file_parity():
    entry = next(e for e in CORPUS if e.name == "one-to-one")
    g = compile_proposition(entry.prop, entry.binding)
    s = random_stack(tokens_for(entry.binding), (2, 2),
                     np.random.default_rng(1))
    planes = gather_planes(g, s)
    ra = forward(g.program, planes, "python")
    rb = forward(g.program, planes, "compiled")
    assert np.max(np.abs(ra - rb)) <= 1e-12
    ba = backward(g.program, ra, planes, "python")
    bb = backward(g.program, rb, planes, "compiled")
    assert np.max(np.abs(ba - bb)) <= 1e-12


def test_env_override_selects_engine():
    code = (
        "import proploss as pl; "
        "print(pl.current_engine())"
    )
    out = subprocess.run(
        [sys.executable, "-c", code],
        capture_output=True, text=True,
        env={"PATH": "/usr/bin:/bin", "PROPLOSS_ENGINE": "python"},
    )
    assert out.returncode == 0, out.stderr
    assert out.stdout.strip() == "python"


def test_env_override_rejects_unknown():
    code = "import proploss"
    out = subprocess.run(
        [sys.executable, "-c", code],
        capture_output=True, text=True,
        env={"PATH": "/usr/bin:/bin", "PROPLOSS_ENGINE": "cuda"},
    )
    assert out.returncode != 0
    assert "cuda" in out.stderr
