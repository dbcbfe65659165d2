"""Reading and writing experiment artifacts (CSV traces, JSON summaries).

Floats are written with 17 significant digits and JSON keys sorted, so
identical runs produce byte-identical files.
"""
from __future__ import annotations

import csv
import json
import math
import re
from pathlib import Path

import numpy as np

from .harness import TrainingTrace
from .signals import SignalSet, fmt

_TRACE_NAME = re.compile(r"^(?P<method>[a-z0-9-]+)__(?P<channel>[a-z]+\d+)__seed(?P<seed>\d+)$")


def cell_stem(method: str, channel: str, seed: int) -> str:
    return f"{method}__{channel}__seed{seed}"


def parse_stem(stem: str):
    m = _TRACE_NAME.match(stem)
    if m is None:
        return None
    return m["method"], m["channel"], int(m["seed"])


def write_trace_csv(trace: TrainingTrace, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "mse_db"])
        for ep, val in enumerate(trace.mse_db, 1):
            w.writerow([ep, fmt(val)])


def read_trace_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["epoch", "mse_db"]:
        raise ValueError(f"{path} is not a trace file")
    return np.array([float(r[1]) for r in rows[1:]], dtype=np.float64)


def write_recovered_csv(signals: SignalSet, output, path) -> None:
    """Columns ``k, v, y, v_minus_y, s`` for one trained canceller."""
    y = np.asarray(output, dtype=np.float64)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "v", "y", "v_minus_y", "s"])
        for k in range(signals.n_samples):
            w.writerow([k, fmt(signals.v[k]), fmt(y[k]), fmt(signals.v[k] - y[k]),
                        fmt(signals.s[k])])


def read_columns(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    return {name: [r[i] for r in body] for i, name in enumerate(header)}


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n")
