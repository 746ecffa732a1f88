"""Labelled datasets of occupation probabilities.

A dataset is stored as ``<name>.csv`` (one row per sample; feature columns
``<system>:<bitstring>``, then label columns) next to ``<name>.json`` holding
the metadata. Floats are written with ``repr`` so a read returns the exact
values that were written.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConsistencyError, DataError
from .evolution import DEFAULT_DT_NS
from .noise import LABEL_NAMES, NoiseParams, make_rng
from .register import AtomRegister
from .simulator import basis_labels, estimate_probabilities
from .waveforms import PulseSequence

SINGLE_PARAM_SAMPLES = 10_000
MULTI_PARAM_SAMPLES = 54_000
DEFAULT_SHOTS = 500
DESK_SAMPLES = 2_000
DESK_SHOTS = 200
SIGMA_R_RANGE = (0.0, 0.15)
MULTI_PARAM_RANGES = {
    "sigma_r": (0.0, 0.15),
    "waist": (0.0, 200.0),
    "temperature": (0.0, 100.0),
    "eps": (0.0, 0.15),
    "eps_prime": (0.0, 0.15),
}


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    blocks: list[tuple[str, int]]
    label_names: list[str]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.features = np.atleast_2d(np.asarray(self.features, dtype=float))
        self.labels = np.asarray(self.labels, dtype=float).reshape(len(self.features), -1)
        self.blocks = [(str(name), int(width)) for name, width in self.blocks]
        if sum(w for _, w in self.blocks) != self.features.shape[1]:
            raise DataError("block widths do not add up to the feature count")
        if self.labels.shape[1] != len(self.label_names):
            raise DataError("label columns do not match label names")

    @property
    def n_samples(self) -> int:
        return len(self.features)

    @property
    def feature_names(self) -> list[str]:
        names = []
        for system, width in self.blocks:
            n = width.bit_length() - 1
            names += [f"{system}:{b}" for b in basis_labels(n)]
        return names

    def subset(self, idx) -> "Dataset":
        return Dataset(self.features[idx], self.labels[idx], self.blocks, self.label_names, self.metadata)

    def block_sums(self) -> np.ndarray:
        edges = np.cumsum([0] + [w for _, w in self.blocks])
        return np.stack(
            [self.features[:, a:b].sum(axis=1) for a, b in zip(edges[:-1], edges[1:])], axis=1
        )


def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_dataset(ds: Dataset, directory, name: str) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rows = [",".join(ds.feature_names + list(ds.label_names))]
    for x, y in zip(ds.features, ds.labels):
        rows.append(",".join(repr(float(v)) for v in np.concatenate([x, y])))
    csv_path = directory / f"{name}.csv"
    _atomic_write(csv_path, "\n".join(rows) + "\n")
    meta = {
        "blocks": [list(b) for b in ds.blocks],
        "label_names": list(ds.label_names),
        "n_samples": ds.n_samples,
        "metadata": ds.metadata,
    }
    _atomic_write(directory / f"{name}.json", json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return csv_path


def read_dataset(path) -> Dataset:
    """Read ``<name>.csv`` (or the path without suffix) plus its JSON sidecar."""
    path = Path(path)
    if path.suffix in (".csv", ".json"):
        path = path.with_suffix("")
    csv_path, meta_path = path.with_suffix(".csv"), path.with_suffix(".json")
    if not csv_path.exists() or not meta_path.exists():
        raise DataError(f"dataset {path} is missing its .csv or .json file")
    try:
        meta = json.loads(meta_path.read_text())
        with open(csv_path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            data = np.array([[float(v) for v in row] for row in reader], dtype=float)
    except (ValueError, StopIteration, json.JSONDecodeError) as exc:
        raise DataError(f"corrupt dataset {path}: {exc}") from exc
    n_labels = len(meta["label_names"])
    if data.size == 0:
        data = data.reshape(0, len(header))
    if header[-n_labels:] != meta["label_names"] or data.shape[0] != meta["n_samples"]:
        raise DataError(f"dataset {path} does not match its metadata")
    return Dataset(
        data[:, :-n_labels], data[:, -n_labels:], [tuple(b) for b in meta["blocks"]],
        meta["label_names"], meta.get("metadata", {}),
    )


def system_key(name: str) -> int:
    return zlib.crc32(name.encode())


def _simulate_chunk(job):
    register, pulse, params_list, shots, seeds, dt = job
    return np.stack(
        [
            estimate_probabilities(register, pulse, p, shots, s, dt).values
            for p, s in zip(params_list, seeds)
        ]
    )


def _simulate_many(register, pulse, params_list, shots, seeds, dt, workers) -> np.ndarray:
    chunk = max(1, len(params_list) // (4 * max(1, workers)) or 1)
    jobs = [
        (register, pulse, params_list[i : i + chunk], shots, seeds[i : i + chunk], dt)
        for i in range(0, len(params_list), chunk)
    ]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_simulate_chunk, jobs))
    else:
        parts = [_simulate_chunk(j) for j in jobs]
    return np.concatenate(parts) if parts else np.zeros((0, 2**register.n_atoms))


def generate_single_param_dataset(
    registers: dict[str, AtomRegister],
    pulse: PulseSequence,
    n_samples: int = SINGLE_PARAM_SAMPLES,
    shots: int = DEFAULT_SHOTS,
    sigma_r_range: tuple[float, float] = SIGMA_R_RANGE,
    seed: int = 0,
    dt: float = DEFAULT_DT_NS,
    workers: int = 1,
) -> dict[str, Dataset]:
    """One σ_R dataset per register, all sharing the same σ_R sequence.

    Only the intensity channel is active; sample ``i`` of every register is
    simulated with the same σ_R, so the datasets can be concatenated.
    """
    lo, hi = sigma_r_range
    if not 0 <= lo <= hi:
        raise DataError(f"invalid sigma_r range {sigma_r_range}")
    sigmas = make_rng(seed).uniform(lo, hi, size=n_samples)
    params = [NoiseParams(sigma_r=s) for s in sigmas]
    out = {}
    for name, reg in registers.items():
        seeds = [(seed, system_key(name), i) for i in range(n_samples)]
        feats = _simulate_many(reg, pulse, params, shots, seeds, dt, workers)
        meta = {
            "mode": "single",
            "systems": {name: reg.to_dict()},
            "pulse": pulse.to_dict(),
            "shots": shots,
            "seed": seed,
            "dt": dt,
            "ranges": {"sigma_r": [lo, hi]},
        }
        out[name] = Dataset(feats, sigmas[:, None], [(name, 2**reg.n_atoms)], ["sigma_r"], meta)
    return out


def draw_labels(ranges: dict[str, tuple[float, float]], n_samples: int, rng) -> np.ndarray:
    rng = make_rng(rng)
    cols = []
    for name in LABEL_NAMES:
        lo, hi = ranges[name]
        if hi < lo:
            raise DataError(f"invalid range for {name}: {(lo, hi)}")
        u = rng.random(n_samples)
        if name == "waist":
            # (lo, hi]: a zero waist is not a valid beam
            cols.append(hi - (hi - lo) * u if hi > lo else np.full(n_samples, float(lo)))
        else:
            cols.append(lo + (hi - lo) * u if hi > lo else np.full(n_samples, float(lo)))
    return np.stack(cols, axis=1)


def generate_multi_param_dataset(
    register: AtomRegister,
    pulse: PulseSequence,
    n_samples: int = MULTI_PARAM_SAMPLES,
    shots: int = DEFAULT_SHOTS,
    ranges: dict[str, tuple[float, float]] | None = None,
    seed: int = 0,
    dt: float = DEFAULT_DT_NS,
    workers: int = 1,
    name: str = "s6",
) -> Dataset:
    ranges = {**MULTI_PARAM_RANGES, **(ranges or {})}
    labels = draw_labels(ranges, n_samples, seed)
    params = [NoiseParams(*row) for row in labels]
    seeds = [(seed, system_key(name), i) for i in range(n_samples)]
    feats = _simulate_many(register, pulse, params, shots, seeds, dt, workers)
    meta = {
        "mode": "multi",
        "systems": {name: register.to_dict()},
        "pulse": pulse.to_dict(),
        "shots": shots,
        "seed": seed,
        "dt": dt,
        "ranges": {k: list(v) for k, v in ranges.items()},
    }
    return Dataset(feats, labels, [(name, 2**register.n_atoms)], list(LABEL_NAMES), meta)


def concatenate(datasets: Sequence[Dataset]) -> Dataset:
    """Join feature blocks in the given order; labels must agree exactly."""
    if not datasets:
        raise ConsistencyError("nothing to concatenate")
    first = datasets[0]
    for ds in datasets[1:]:
        if ds.n_samples != first.n_samples:
            raise ConsistencyError("datasets have different sample counts")
        if ds.label_names != first.label_names or not np.array_equal(ds.labels, first.labels):
            raise ConsistencyError("datasets carry different labels")
    feats = np.concatenate([ds.features for ds in datasets], axis=1)
    blocks = [b for ds in datasets for b in ds.blocks]
    meta = dict(first.metadata)
    meta["systems"] = {k: v for ds in datasets for k, v in ds.metadata.get("systems", {}).items()}
    meta["concatenation"] = [b[0] for b in blocks]
    return Dataset(feats, first.labels.copy(), blocks, list(first.label_names), meta)
