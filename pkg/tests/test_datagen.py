from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rydnoise import AtomRegister
from rydnoise.datagen import (
    DESK_SAMPLES,
    DESK_SHOTS,
    MULTI_PARAM_RANGES,
    MULTI_PARAM_SAMPLES,
    SIGMA_R_RANGE,
    SINGLE_PARAM_SAMPLES,
    Dataset,
    concatenate,
    generate_multi_param_dataset,
    generate_single_param_dataset,
    read_dataset,
    write_dataset,
)
from rydnoise.errors import ConsistencyError, DataError
from rydnoise.registers import (
    CONCAT_SYSTEMS,
    multi_param_pulse,
    multi_param_register,
    single_param_register,
    single_param_registers,
)
from rydnoise.simulator import ideal_probabilities
from rydnoise.waveforms import rabi_calibration_pulse

PULSE = rabi_calibration_pulse()


def test_defaults():
    assert SINGLE_PARAM_SAMPLES == 10_000
    assert MULTI_PARAM_SAMPLES == 54_000
    assert SIGMA_R_RANGE == (0.0, 0.15)
    assert (DESK_SAMPLES, DESK_SHOTS) == (2_000, 200)
    assert MULTI_PARAM_RANGES == {
        "sigma_r": (0.0, 0.15),
        "waist": (0.0, 200.0),
        "temperature": (0.0, 100.0),
        "eps": (0.0, 0.15),
        "eps_prime": (0.0, 0.15),
    }


def test_shipped_registers_containment():
    r = single_param_registers()
    assert r["s4a"].contains(r["s2"]) and r["s5"].contains(r["s4a"]) and r["s5"].contains(r["s3"])
    assert r["s4b"] == r["s4a"]
    # s3 shares one atom of s2, s4a shares two atoms of s3
    shared = lambda a, b: sum(any(math.dist(p, q) < 1e-9 for q in b.positions) for p in a.positions)
    assert shared(r["s3"], r["s2"]) == 1
    assert shared(r["s3"], r["s4a"]) == 2
    assert [r[k].n_atoms for k in ("s2", "s3", "s4a", "s5")] == [2, 3, 4, 5]
    assert all(r[k].n_atoms == 4 for k in CONCAT_SYSTEMS)
    assert multi_param_register().n_atoms == 6


def test_single_param_determinism(tmp_path):
    regs = {"s2": single_param_register("s2")}
    for run in ("a", "b"):
        sets = generate_single_param_dataset(regs, PULSE, 3, 40, seed=5)
        write_dataset(sets["s2"], tmp_path / run, "s2")
    for suffix in (".csv", ".json"):
        assert (tmp_path / "a" / f"s2{suffix}").read_bytes() == (tmp_path / "b" / f"s2{suffix}").read_bytes()


def test_worker_count_does_not_change_data():
    regs = {"s3": single_param_register("s3")}
    a = generate_single_param_dataset(regs, PULSE, 4, 30, seed=1, workers=1)["s3"]
    b = generate_single_param_dataset(regs, PULSE, 4, 30, seed=1, workers=2)["s3"]
    assert np.array_equal(a.features, b.features)


def test_zero_sigma_matches_ideal():
    reg = single_param_register("s2")
    shots = 2000
    ds = generate_single_param_dataset({"s2": reg}, PULSE, 5, shots, sigma_r_range=(0.0, 0.0), seed=3)["s2"]
    ideal = ideal_probabilities(reg, PULSE).values
    tol = 4 * np.sqrt(ideal * (1 - ideal) / shots) + 1e-12
    assert np.all(ds.labels == 0.0)
    assert np.all(np.abs(ds.features - ideal) <= tol)


def test_label_consistency_and_blocks():
    regs = {k: single_param_register(k) for k in ("s2", "s3")}
    sets = generate_single_param_dataset(regs, PULSE, 6, 20, seed=8)
    assert np.array_equal(sets["s2"].labels, sets["s3"].labels)
    assert np.all((sets["s2"].labels >= 0) & (sets["s2"].labels <= 0.15))
    for ds in sets.values():
        assert np.allclose(ds.block_sums(), 1.0, atol=1e-9)
        assert ds.features.shape[1] == 2 ** regs[ds.blocks[0][0]].n_atoms
    assert sets["s2"].feature_names == ["s2:00", "s2:01", "s2:10", "s2:11"]


def test_invalid_sigma_range():
    with pytest.raises(DataError):
        generate_single_param_dataset({"s2": single_param_register("s2")}, PULSE, 2, 10, sigma_r_range=(0.1, 0.0))


def test_multi_param_dataset():
    ds = generate_multi_param_dataset(multi_param_register(), multi_param_pulse(), 8, 30, seed=2)
    assert ds.features.shape == (8, 64)
    assert ds.label_names == ["sigma_r", "waist", "temperature", "eps", "eps_prime"]
    for j, name in enumerate(ds.label_names):
        lo, hi = MULTI_PARAM_RANGES[name]
        assert np.all((ds.labels[:, j] >= lo) & (ds.labels[:, j] <= hi))
    assert np.all(ds.labels[:, 1] > 0)
    assert np.allclose(ds.block_sums(), 1.0, atol=1e-9)


def test_multi_param_constant_ranges():
    # noise pinned to zero (waist pinned far outside the register): only shot noise remains
    ranges = {"sigma_r": (0, 0), "waist": (1e9, 1e9), "temperature": (0, 0), "eps": (0, 0), "eps_prime": (0, 0)}
    reg = AtomRegister(((0.0, 0.0), (20.0, 0.0)))
    shots = 4000
    ds = generate_multi_param_dataset(reg, PULSE, 4, shots, ranges, seed=1, name="pair")
    ideal = ideal_probabilities(reg, PULSE).values
    assert np.all(np.abs(ds.features - ideal) <= 4 * np.sqrt(ideal * (1 - ideal) / shots) + 1e-12)
    assert np.all(ds.labels == ds.labels[0])


def _toy(n, blocks=(("a", 4),), labels=None, seed=0):
    rng = np.random.default_rng(seed)
    feats = np.concatenate([rng.dirichlet(np.ones(w), size=n) for _, w in blocks], axis=1)
    y = rng.random((n, 1)) if labels is None else labels
    return Dataset(feats, y, list(blocks), ["sigma_r"])


def test_concatenate_lengths():
    y = np.random.default_rng(0).random((5, 1))
    parts = {k: _toy(5, ((k, 16),), y, i) for i, k in enumerate(CONCAT_SYSTEMS)}
    assert concatenate([parts["s4a"], parts["s4b"]]).features.shape[1] == 32
    chain = concatenate([parts[k] for k in ("s4a", "s4c", "s4d", "s4e", "s4f")])
    assert chain.features.shape[1] == 80
    assert concatenate([parts[k] for k in CONCAT_SYSTEMS]).features.shape[1] == 96
    ab = concatenate([parts["s4a"], parts["s4b"]])
    assert np.array_equal(ab.features[:, :16], parts["s4a"].features)
    assert np.array_equal(ab.labels, y)


def test_concatenate_self():
    ds = _toy(4)
    twice = concatenate([ds, ds])
    assert twice.features.shape[1] == 8
    assert np.array_equal(twice.labels, ds.labels)


def test_concatenate_label_mismatch():
    with pytest.raises(ConsistencyError):
        concatenate([_toy(4, seed=0), _toy(4, seed=1)])
    with pytest.raises(ConsistencyError):
        concatenate([_toy(4), _toy(5)])
    with pytest.raises(ConsistencyError):
        concatenate([])


@settings(max_examples=20, deadline=None)
@given(n=st.integers(1, 6), seed=st.integers(0, 2**32 - 1))
def test_round_trip_bit_exact(tmp_path_factory, n, seed):
    rng = np.random.default_rng(seed)
    ds = Dataset(
        rng.random((n, 8)) ** 7,
        rng.normal(size=(n, 2)) * 10.0 ** rng.integers(-300, 300, size=(n, 2)),
        [("x", 4), ("y", 4)],
        ["sigma_r", "waist"],
        {"seed": seed, "note": "round trip"},
    )
    d = tmp_path_factory.mktemp("rt")
    write_dataset(ds, d, "ds")
    back = read_dataset(d / "ds.csv")
    assert np.array_equal(back.features, ds.features)
    assert np.array_equal(back.labels, ds.labels)
    assert back.blocks == ds.blocks and back.label_names == ds.label_names
    assert back.metadata == ds.metadata


def test_read_missing_and_corrupt(tmp_path):
    with pytest.raises(DataError):
        read_dataset(tmp_path / "nothing")
    write_dataset(_toy(3), tmp_path, "t")
    (tmp_path / "t.csv").write_text("a:00,a:01\n0.1,zz\n")
    with pytest.raises(DataError):
        read_dataset(tmp_path / "t")


def test_dataset_rejects_inconsistent_blocks():
    with pytest.raises(DataError):
        Dataset(np.zeros((2, 4)), np.zeros((2, 1)), [("a", 8)], ["sigma_r"])
