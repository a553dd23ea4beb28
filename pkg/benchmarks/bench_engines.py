"""Benchmark the tape engines against each other.

Times forward evaluation and forward+gradient for representative graphs over
a range of grid sizes, once per available engine, and prints a table with
the python/compiled speedup. Runs fine with a single engine; the comparison
column just disappears.

Usage: python benchmarks/bench_engines.py [--repeats N]
"""

import argparse
import time

import numpy as np

from proploss import (
    available_engines,
    compile_proposition,
    evaluate,
    evaluate_with_gradient,
    parse_dsl,
)
from proploss.stack import AttentionStack, SOT_LABEL

GRAPHS = (
    ("existence", "exists x. P(x)", ("P",)),
    ("adjective",
     "(exists x. Dog(x)) & (forall x. Dog(x) -> Black(x))",
     ("Dog", "Black")),
    ("one-to-one",
     "(exists x. Dog(x)) & (exists x. Cat(x))"
     " & (forall x. Dog(x) <-> Black(x))"
     " & (forall x. Cat(x) <-> White(x))"
     " & (forall x. Dog(x) -> !White(x))"
     " & (forall x. Cat(x) -> !Black(x))",
     ("Dog", "Cat", "Black", "White")),
)

SIZES = (16, 64, 256)


def _time(fn, repeats):
    fn()  # warm up
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench(repeats):
    rng = np.random.default_rng(7)
    engines = available_engines()
    rows = []
    for name, dsl, preds in GRAPHS:
        binding = {p: p.lower() for p in preds}
        graph = compile_proposition(parse_dsl(dsl), binding)
        tokens = (SOT_LABEL, *(p.lower() for p in preds))
        for side in SIZES:
            stack = AttentionStack(
                tokens,
                rng.uniform(0.05, 0.95, (len(tokens), side, side)))
            for kind, call in (
                ("eval", lambda e: evaluate(graph, stack, engine=e)),
                ("grad", lambda e: evaluate_with_gradient(
                    graph, stack, engine=e)),
            ):
                times = {e: _time(lambda: call(e), repeats)
                         for e in engines}
                rows.append((name, f"{side}x{side}", kind, times))
    return engines, rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeats", type=int, default=20)
    args = ap.parse_args()

    engines, rows = bench(args.repeats)
    cols = "".join(f"{e:>12}" for e in engines)
    speed = "     speedup" if len(engines) > 1 else ""
    print(f"{'graph':<12}{'grid':>10}{'pass':>6}{cols}{speed}")
    for name, grid, kind, times in rows:
        cells = "".join(f"{times[e] * 1e6:>10.1f}us" for e in engines)
        extra = ""
        if "python" in times and "compiled" in times:
            extra = f"{times['python'] / times['compiled']:>11.1f}x"
        print(f"{name:<12}{grid:>10}{kind:>6}{cells}{extra}")
    if len(engines) == 1:
        print(f"\nonly the {engines[0]!r} engine is available; "
              "no comparison column")


if __name__ == "__main__":
    main()
