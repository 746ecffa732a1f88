"""Plot-ready CSV series and text summaries from CV reports and RL logs."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Sequence

import numpy as np

from .datagen import _atomic_write
from .errors import DataError


def load_json(path) -> dict | list:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def _cv_stats(report) -> tuple[list[str], np.ndarray, np.ndarray]:
    d = report.to_dict() if hasattr(report, "to_dict") else report
    try:
        return list(d["label_names"]), np.asarray(d["mae_mean"], float), np.asarray(d["mae_std"], float)
    except (KeyError, TypeError) as exc:
        raise DataError(f"not a cross-validation report: missing {exc}") from exc


def scaling_rows(entries: Sequence[tuple[str, float, object]], target: int = 0) -> list[tuple[str, float, float, float]]:
    """(label, x, MAE mean, MAE std) per CV report for one target column."""
    if not entries:
        raise DataError("no cross-validation reports given")
    rows = []
    for label, x, report in entries:
        _, mean, std = _cv_stats(report)
        rows.append((str(label), float(x), float(mean[target]), float(std[target])))
    return rows


def kl_rows(episode_log: Sequence[dict], baseline: float) -> list[tuple[int, float, float]]:
    if not episode_log:
        raise DataError("empty episode log")
    try:
        return [(int(r["episode"]), float(r["mean_kl"]), float(baseline)) for r in episode_log]
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed episode log: {exc}") from exc


def _csv(header: Sequence[str], rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(v) if isinstance(v, float) else str(v) for v in row))
    return "\n".join(lines) + "\n"


def summary_table(named_reports: Sequence[tuple[str, object]]) -> str:
    """One line per (report, target) in ``name  target  mean ± std`` form."""
    if not named_reports:
        raise DataError("no cross-validation reports given")
    lines = [f"{'model':<16} {'target':<12} MAE (mean ± std)"]
    for name, report in named_reports:
        labels, mean, std = _cv_stats(report)
        for t, label in enumerate(labels):
            lines.append(f"{name:<16} {label:<12} {mean[t]:.5f} ± {std[t]:.5f}")
    return "\n".join(lines) + "\n"


def final_window_mean(episode_log: Sequence[dict], window: int = 100) -> float:
    vals = [r["mean_kl"] for r in episode_log[-window:] if not math.isnan(r["mean_kl"])]
    return float(np.mean(vals)) if vals else math.nan


def write_report(
    out_dir,
    scaling: Sequence[tuple[str, float, object]] = (),
    kl_log: Sequence[dict] | None = None,
    baseline: float | None = None,
    x_name: str = "x",
) -> list[Path]:
    """Validate every input first, then write ``scaling.csv``, ``kl.csv`` and ``summary.txt``.

    Nothing is written if any input is empty or malformed.
    """
    if not scaling and not kl_log:
        raise DataError("report needs cross-validation reports or an episode log")
    texts = {}
    if scaling:
        rows = scaling_rows(scaling)
        texts["scaling.csv"] = _csv(["label", x_name, "mae_mean", "mae_std"], rows)
        summary = summary_table([(label, rep) for label, _, rep in scaling])
    else:
        summary = ""
    if kl_log is not None:
        if baseline is None:
            raise DataError("KL report needs a baseline value")
        rows = kl_rows(kl_log, baseline)
        texts["kl.csv"] = _csv(["episode", "mean_kl", "baseline"], rows)
        summary += (
            f"final-{min(100, len(kl_log))}-episode mean KL {final_window_mean(kl_log):.6g}"
            f" (baseline {baseline:.6g})\n"
        )
    texts["summary.txt"] = summary
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, text in texts.items():
        _atomic_write(out_dir / name, text)
        paths.append(out_dir / name)
    return paths
