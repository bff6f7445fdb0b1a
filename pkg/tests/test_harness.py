"""Configuration, result store and merge algebra."""

import json
import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fbmsilt import (EstimateRecord, ExperimentConfig, ResultStore,
                     ValidationError, merge_partials, record_from_dict)
from fbmsilt.cli import main
from fbmsilt.store import format_float

finite_floats = st.floats(allow_nan=False, allow_infinity=False,
                          min_value=-1e6, max_value=1e6)


@st.composite
def records(draw):
    n_chunks = draw(st.integers(1, 4))
    chunks = []
    for i in range(n_chunks):
        xs = draw(st.lists(finite_floats, min_size=1, max_size=5))
        chunks.append(EstimateRecord.from_samples(xs, "fp", 0, index=i))
    return merge_partials(chunks)


@given(records(), records())
@settings(max_examples=50, deadline=None)
def test_merge_commutative_bit_exact(a, b):
    ab = a.merge(b)
    ba = b.merge(a)
    assert ab.chunks == ba.chunks
    assert ab.value == ba.value
    assert ab.std_error == ba.std_error


@given(records(), records(), records())
@settings(max_examples=50, deadline=None)
def test_merge_associative_bit_exact(a, b, c):
    assert a.merge(b).merge(c).chunks == a.merge(b.merge(c)).chunks


def test_merge_empty_identity():
    empty = EstimateRecord(fingerprint="fp", seed=0)
    rec = EstimateRecord.from_samples([1.0, 2.0], "fp", 0)
    assert empty.merge(rec).chunks == rec.chunks
    assert rec.merge(empty).chunks == rec.chunks


def test_merge_rejects_mismatched_fingerprint():
    a = EstimateRecord.from_samples([1.0], "fp-a", 0)
    b = EstimateRecord.from_samples([1.0], "fp-b", 0)
    with pytest.raises(ValidationError):
        a.merge(b)


def test_record_value_and_stderr():
    rec = EstimateRecord.from_samples([1.0, 2.0, 3.0, 4.0], "fp", 0)
    assert rec.value == 2.5
    assert rec.std_error == pytest.approx(
        np.std([1, 2, 3, 4], ddof=1) / 2.0)


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_format_float_round_trips(x):
    assert float(format_float(x)) == x


@given(H=st.floats(0.05, 0.95), d=st.integers(1, 4),
       n_steps=st.sampled_from([64, 128, 512]),
       n_paths=st.integers(1, 10_000), seed=st.integers(0, 2**31))
@settings(max_examples=40, deadline=None)
def test_config_ini_round_trip(H, d, n_steps, n_paths, seed):
    cfg = ExperimentConfig(H=H, d=d, n_steps=n_steps, n_paths=n_paths,
                           seed=seed)
    back = ExperimentConfig.from_ini(cfg.to_ini())
    assert back == cfg
    assert back.fingerprint == cfg.fingerprint


def test_config_fingerprint_ignores_section_order():
    cfg = ExperimentConfig(H=0.4, d=2)
    text = cfg.to_ini()
    blocks = text.strip().split("\n\n")
    reordered = "\n\n".join(reversed(blocks))
    assert ExperimentConfig.from_ini(reordered).fingerprint == cfg.fingerprint


def test_config_rejects_unknown_key():
    with pytest.raises(ValidationError):
        ExperimentConfig.from_ini("[model]\nH = 0.5\nbogus = 1\n")


def test_record_json_round_trip():
    rec = EstimateRecord.from_samples([0.1, 0.7, -2.0], "fp", 5, index=3)
    payload = {"fingerprint": rec.fingerprint, "seed": rec.seed,
               "chunks": [list(c) for c in rec.chunks]}
    assert record_from_dict(json.loads(json.dumps(payload))) == rec


def test_store_tables_deterministic(tmp_path):
    rows = [[1, 0.1], [2, 1.0 / 3.0]]
    s1 = ResultStore(str(tmp_path), "t", "abc")
    p1 = s1.write_table("x.csv", ["n", "v"], rows)
    data1 = open(p1, "rb").read()
    s1.seal()
    s2 = ResultStore(str(tmp_path / "other"), "t", "abc")
    p2 = s2.write_table("x.csv", ["n", "v"], rows)
    assert open(p2, "rb").read() == data1


def test_store_seal_blocks_writes(tmp_path):
    store = ResultStore(str(tmp_path), "t", "abc")
    store.write_json("a.json", {"x": 1.0})
    store.seal()
    assert store.sealed
    with pytest.raises(ValidationError):
        store.write_json("b.json", {"x": 2.0})
    with pytest.raises(ValidationError):
        ResultStore(str(tmp_path), "t", "abc")  # sealed run refuses redo
    manifest = json.load(open(os.path.join(store.path, "manifest.json")))
    assert manifest["artifacts"] == ["a.json"]


def test_store_checkpoint_monotone(tmp_path):
    store = ResultStore(str(tmp_path), "t", "abc")
    store.checkpoint(10_000, {"k": 1})
    store.checkpoint(20_000, {"k": 2})
    assert store.load_checkpoint()["paths_done"] == 20_000
    with pytest.raises(ValidationError):
        store.checkpoint(15_000, {"k": 3})


def test_cli_exit_codes(tmp_path):
    out = str(tmp_path)
    assert main(["simulate", "--H", "1.5", "--out", out]) == 1
    args = ["simulate", "--H", "0.5", "--d", "2", "--n-steps", "16",
            "--n-paths", "2", "--out", out]
    assert main(args) == 0
    assert main(args) == 1          # sealed
    assert main(args + ["--force"]) == 0


def test_cli_moments_runs(tmp_path):
    assert main(["moments", "--H", "0.4", "--d", "2", "--epsilon", "0",
                 "--n-max", "1", "--n-samples", "2000",
                 "--out", str(tmp_path)]) == 0
    runs = os.listdir(tmp_path)
    assert len(runs) == 1
    files = os.listdir(os.path.join(tmp_path, runs[0]))
    assert {"alpha.csv", "config.json", "manifest.json",
            "summary.json"} <= set(files)
