"""Text file formats: AMAP stacks, PGM dumps, trajectory CSV, manifests.

AMAP is the interchange format for attention stacks:

    AMAP 1
    tokens K
    size W H
    token <sot>
    ... H lines of W floats ...
    token dog
    ...

Values are written with 9 significant digits, enough that parse-serialize
round-trips are textually stable and value drift stays far below every test
tolerance.
"""

from __future__ import annotations

import io
from typing import Mapping

import numpy as np

from .errors import AmapFormatError, BadShape, ManifestError
from .stack import SOT_LABEL, AttentionStack


def format_amap(stack: AttentionStack) -> str:
    out = io.StringIO()
    out.write("AMAP 1\n")
    out.write(f"tokens {stack.n_tokens}\n")
    out.write(f"size {stack.width} {stack.height}\n")
    for k, label in enumerate(stack.tokens):
        out.write(f"token {label}\n")
        for row in stack.values[k]:
            out.write(" ".join(f"{v:.9g}" for v in row))
            out.write("\n")
    return out.getvalue()


def write_amap(path: str, stack: AttentionStack) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(format_amap(stack))


def parse_amap(text: str) -> AttentionStack:
    lines = text.splitlines()
    pos = 0

    def next_line() -> str:
        nonlocal pos
        if pos >= len(lines):
            raise AmapFormatError("unexpected end of file")
        line = lines[pos]
        pos += 1
        return line

    if next_line().strip() != "AMAP 1":
        raise AmapFormatError("missing AMAP 1 header")
    head = next_line().split()
    if len(head) != 2 or head[0] != "tokens":
        raise AmapFormatError("expected 'tokens K'")
    try:
        k = int(head[1])
    except ValueError:
        raise AmapFormatError(f"bad token count {head[1]!r}") from None
    head = next_line().split()
    if len(head) != 3 or head[0] != "size":
        raise AmapFormatError("expected 'size W H'")
    try:
        w, h = int(head[1]), int(head[2])
    except ValueError:
        raise AmapFormatError("bad size line") from None
    if k < 1 or w < 1 or h < 1:
        raise AmapFormatError(f"bad dimensions tokens={k} size={w}x{h}")

    labels = []
    values = np.empty((k, h, w), dtype=np.float64)
    for block in range(k):
        head = next_line().split(None, 1)
        if len(head) != 2 or head[0] != "token":
            raise AmapFormatError(f"expected 'token <label>' for block {block}")
        labels.append(head[1].strip())
        for y in range(h):
            cells = next_line().split()
            if len(cells) != w:
                raise AmapFormatError(
                    f"row {y} of {labels[-1]!r} has {len(cells)} values, "
                    f"expected {w}")
            try:
                values[block, y] = [float(c) for c in cells]
            except ValueError:
                raise AmapFormatError(
                    f"non-numeric value in row {y} of {labels[-1]!r}"
                ) from None
    while pos < len(lines):
        if lines[pos].strip():
            raise AmapFormatError(f"trailing content at line {pos + 1}")
        pos += 1
    if labels and labels[0] != SOT_LABEL:
        raise AmapFormatError(f"block 0 must be labeled {SOT_LABEL!r}")
    if values.min() < 0.0 or values.max() > 1.0:
        raise AmapFormatError("intensities must lie in [0, 1]")
    try:
        return AttentionStack(tuple(labels), values)
    except BadShape as e:
        raise AmapFormatError(str(e)) from None


def read_amap(path: str) -> AttentionStack:
    with open(path, "r", encoding="utf-8") as f:
        return parse_amap(f.read())


def format_pgm(map2d: np.ndarray) -> str:
    """Single map as plain PGM (P2, maxval 255, intensity round(255*A))."""
    m = np.asarray(map2d, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"PGM needs a 2-d map, got ndim={m.ndim}")
    h, w = m.shape
    grey = np.rint(255.0 * m).astype(np.int64)
    out = io.StringIO()
    out.write(f"P2\n{w} {h}\n255\n")
    for row in grey:
        out.write(" ".join(str(v) for v in row))
        out.write("\n")
    return out.getvalue()


def write_pgm(path: str, map2d: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(format_pgm(map2d))


def format_trajectory_csv(
    records, n_conjuncts: int | None = None
) -> str:
    """CSV rows of step, loss, degree, then one column per conjunct loss.

    Floats use repr-exact formatting so a bit-identical rerun produces a
    byte-identical file.
    """
    rows = list(records)
    if n_conjuncts is None:
        n_conjuncts = len(rows[0].conjunct_losses) if rows else 0
    out = io.StringIO()
    header = ["step", "loss", "degree"]
    header += [f"conjunct_{i}" for i in range(n_conjuncts)]
    out.write(",".join(header) + "\n")
    for r in rows:
        cells = [str(r.step), f"{r.loss:.17g}", f"{r.degree:.17g}"]
        cells += [f"{v:.17g}" for v in r.conjunct_losses]
        out.write(",".join(cells) + "\n")
    return out.getvalue()


def format_manifest(entries: Mapping[str, str]) -> str:
    out = io.StringIO()
    for key, value in entries.items():
        key = str(key)
        value = str(value)
        if "=" not in key and "\n" not in key and "\n" not in value:
            out.write(f"{key}={value}\n")
        else:
            raise ManifestError(f"unserializable manifest entry {key!r}")
    return out.getvalue()


def write_manifest(path: str, entries: Mapping[str, str]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(format_manifest(entries))


def parse_manifest(text: str) -> dict[str, str]:
    entries: dict[str, str] = {}
    for i, line in enumerate(text.splitlines()):
        if not line.strip():
            continue
        if "=" not in line:
            raise ManifestError(f"line {i + 1} is not key=value: {line!r}")
        key, value = line.split("=", 1)
        if key in entries:
            raise ManifestError(f"duplicate manifest key {key!r}")
        entries[key] = value
    return entries


def read_manifest(path: str) -> dict[str, str]:
    with open(path, "r", encoding="utf-8") as f:
        return parse_manifest(f.read())
