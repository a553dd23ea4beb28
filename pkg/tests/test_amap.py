"""AMAP, PGM, trajectory CSV, and manifest serialization."""

import numpy as np
import pytest

from proploss import (
    AmapFormatError, AttentionStack, GuidanceConfig, ManifestError, SOT_LABEL,
    compile_proposition, format_amap, format_manifest, format_pgm,
    format_trajectory_csv, parse_amap, parse_manifest, parse_dsl, read_amap,
    read_manifest, run, write_amap, write_manifest,
)


def _stack(seed=0, k=3, h=2, w=4):
    values = np.random.default_rng(seed).uniform(0, 1, (k, h, w))
    labels = (SOT_LABEL, *[f"t{i}" for i in range(1, k)])
    return AttentionStack(labels, values)


# -- amap ---------------------------------------------------------------------

def test_amap_round_trip_values_and_labels():
    s = _stack()
    t = parse_amap(format_amap(s))
    assert t.tokens == s.tokens
    assert np.allclose(t.values, s.values, atol=1e-8)
    assert (t.height, t.width) == (s.height, s.width)


def test_amap_serialization_textually_stable():
    s = _stack(1)
    text = format_amap(s)
    assert format_amap(parse_amap(text)) == text


def test_amap_header_shape():
    text = format_amap(_stack(2, k=2, h=3, w=5))
    lines = text.splitlines()
    assert lines[0] == "AMAP 1"
    assert lines[1] == "tokens 2"
    assert lines[2] == "size 5 3"
    assert lines[3] == f"token {SOT_LABEL}"


def test_amap_file_round_trip(tmp_path):
    s = _stack(3)
    path = str(tmp_path / "s.amap")
    write_amap(path, s)
    t = read_amap(path)
    assert t.tokens == s.tokens
    assert np.allclose(t.values, s.values, atol=1e-8)


@pytest.mark.parametrize("mutate", [
    lambda t: t.replace("AMAP 1", "AMAP 2"),
    lambda t: t.replace("tokens 3", "tokens x"),
    lambda t: t.replace("size 4 2", "size 4"),
    lambda t: t.replace("token t1", "channel t1"),
    lambda t: t + "0.5\n",
    lambda t: t.replace("token t2", "token t1"),  # duplicate label
])
def test_amap_malformed_inputs(mutate):
    text = mutate(format_amap(_stack(4)))
    with pytest.raises(AmapFormatError):
        parse_amap(text)


def test_amap_rejects_truncated_and_out_of_range():
    text = format_amap(_stack(5))
    with pytest.raises(AmapFormatError):
        parse_amap("\n".join(text.splitlines()[:-1]))
    with pytest.raises(AmapFormatError):
        parse_amap(text.replace("AMAP 1", "AMAP 1").replace(
            text.splitlines()[4], "2.0 " * 4))
    with pytest.raises(AmapFormatError):
        parse_amap("AMAP 1\ntokens 0\nsize 1 1\n")


def test_amap_first_block_must_be_sot():
    s = _stack(6)
    text = format_amap(s).replace(f"token {SOT_LABEL}", "token first")
    with pytest.raises(AmapFormatError):
        parse_amap(text)


# -- pgm ----------------------------------------------------------------------

def test_pgm_format():
    m = np.array([[0.0, 0.5], [1.0, 0.25]])
    text = format_pgm(m)
    lines = text.splitlines()
    assert lines[0] == "P2"
    assert lines[1] == "2 2"
    assert lines[2] == "255"
    assert lines[3].split() == ["0", "128"]
    assert lines[4].split() == ["255", "64"]


def test_pgm_rejects_non_2d():
    with pytest.raises(ValueError):
        format_pgm(np.zeros((2, 2, 2)))


# -- trajectory csv --------------------------------------------------------------

def test_trajectory_csv_header_and_rows():
    g = compile_proposition(
        parse_dsl("(exists x. Dog(x)) & (exists x. Cat(x))"),
        {"Dog": "dog", "Cat": "cat"})
    cfg = GuidanceConfig(total_steps=3, guided_steps=3, refinement_rounds=1,
                         learning_rate=0.1, seed=0)
    t = run(cfg, g, (3, 2, 2))
    text = format_trajectory_csv(t.records)
    lines = text.splitlines()
    assert lines[0] == "step,loss,degree,conjunct_0,conjunct_1"
    assert len(lines) == 1 + len(t.records)
    first = lines[1].split(",")
    assert first[0] == "0"  # one refinement round records step 0
    assert float(first[1]) == pytest.approx(t.records[0].loss, abs=0)


def test_trajectory_csv_is_repr_exact():
    g = compile_proposition(parse_dsl("exists x. Dog(x)"), {"Dog": "dog"})
    cfg = GuidanceConfig(total_steps=2, guided_steps=2, refinement_rounds=0,
                         learning_rate=0.3, seed=5)
    a = format_trajectory_csv(run(cfg, g, (2, 3, 3)).records)
    b = format_trajectory_csv(run(cfg, g, (2, 3, 3)).records)
    assert a == b
    value = a.splitlines()[1].split(",")[1]
    assert float(value) == run(cfg, g, (2, 3, 3)).records[0].loss


# -- manifest ----------------------------------------------------------------------

def test_manifest_round_trip():
    entries = {"dsl": "exists x. Dog(x)", "seed": "7", "lr": "0.1"}
    assert parse_manifest(format_manifest(entries)) == entries


def test_manifest_file_round_trip(tmp_path):
    path = str(tmp_path / "run.manifest")
    entries = {"a": "1", "b": "x y z"}
    write_manifest(path, entries)
    assert read_manifest(path) == entries


def test_manifest_rejects_unserializable_and_malformed():
    with pytest.raises(ManifestError):
        format_manifest({"a=b": "1"})
    with pytest.raises(ManifestError):
        format_manifest({"a": "line\nbreak"})
    with pytest.raises(ManifestError):
        parse_manifest("no separator here")
    with pytest.raises(ManifestError):
        parse_manifest("a=1\na=2")


def test_manifest_value_may_contain_equals():
    entries = parse_manifest("dsl=forall x. P(x) -> Q(x)\neq=a=b\n")
    assert entries["eq"] == "a=b"
