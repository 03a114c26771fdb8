"""CSV and JSON serialization with write-then-rename file output."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import ConfigError, InvalidGridError
from .sde_core.paths import GridPath
from .sde_core.simulate import EulerTrajectory
from .time_change import TimeChangeMap


def fmt(x) -> str:
    """Shortest round-tripping text for a float."""
    return repr(float(x))


def atomic_write(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def path_csv(path: GridPath) -> str:
    return csv_text(("time", "value"), zip(path.times, path.values))


def write_path(file, path: GridPath) -> Path:
    return atomic_write(file, path_csv(path))


def read_path(file) -> GridPath:
    """Parse a ``time,value`` CSV; empty or non-monotone input raises InvalidGridError."""
    with open(file, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["time", "value"]:
        raise InvalidGridError(f"{file}: expected a 'time,value' header")
    body = [r for r in rows[1:] if r]
    if not body:
        raise InvalidGridError(f"{file}: no samples")
    try:
        data = np.array([[float(a), float(b)] for a, b in body])
    except ValueError as exc:
        raise InvalidGridError(f"{file}: {exc}") from None
    return GridPath(data[:, 0], data[:, 1])


def map_csv(m: TimeChangeMap) -> str:
    return csv_text(("t", "u"), zip(m.t, m.u))


def euler_csv(traj: EulerTrajectory) -> str:
    """Columns index,time,value,innovation; the innovation of step i drives Z_{i-1} -> Z_i."""
    eps = [""] + [fmt(e) for e in traj.eps]
    return csv_text(("index", "time", "value", "innovation"),
                    ((i, fmt(t), fmt(z), e) for i, (t, z, e) in enumerate(zip(traj.times, traj.Z, eps))))


def json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def canonical_digest(obj) -> str:
    """sha256 of the key-sorted compact JSON form."""
    return hashlib.sha256(json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def load_json(file) -> dict:
    try:
        with open(file) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {file}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{file}: invalid JSON ({exc})") from None
