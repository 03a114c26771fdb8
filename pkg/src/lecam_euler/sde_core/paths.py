"""Finite-grid paths with piecewise-linear interpolation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from ..errors import GridMismatchError, HorizonError, InvalidGridError


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def check_grid(times) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise InvalidGridError("time grid must be a non-empty 1-d array")
    if times[0] != 0.0:
        raise InvalidGridError(f"time grid must start at 0, got {times[0]}")
    if not np.all(np.isfinite(times)):
        raise InvalidGridError("time grid contains non-finite values")
    if np.any(np.diff(times) <= 0):
        raise InvalidGridError("time grid must be strictly increasing")
    return times


def grid_tolerance(times) -> float:
    return 1e-9 * max(1.0, float(np.max(np.abs(times))))


@dataclass(frozen=True, eq=False)
class GridPath:
    """Path values on a strictly increasing grid starting at 0.

    Between grid points the path is the linear interpolation of its values.
    """

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = check_grid(self.times)
        values = np.asarray(self.values, dtype=float)
        if values.shape != times.shape:
            raise InvalidGridError(f"{values.size} values for {times.size} grid times")
        object.__setattr__(self, "times", _frozen(times))
        object.__setattr__(self, "values", _frozen(values))

    def __len__(self) -> int:
        return self.times.size

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.horizon + grid_tolerance(self.times)):
            raise HorizonError(f"path evaluated outside [0, {self.horizon}]")
        out = np.interp(t, self.times, self.values)
        return float(out) if out.ndim == 0 else out

    def locate(self, targets) -> np.ndarray:
        """Indices of the grid times equal (to rounding) to ``targets``."""
        targets = np.asarray(targets, dtype=float)
        idx = np.searchsorted(self.times, targets)
        tol = grid_tolerance(self.times)
        out = np.empty(targets.shape, dtype=int)
        for j, (k, t) in enumerate(zip(idx.ravel(), targets.ravel())):
            cands = [c for c in (k - 1, k) if 0 <= c < self.times.size and abs(self.times[c] - t) <= tol]
            if not cands:
                raise GridMismatchError(f"time {t} is not on the path grid")
            out.flat[j] = min(cands, key=lambda c: abs(self.times[c] - t))
        return out

    def restrict(self, horizon: float) -> "GridPath":
        """The path on [0, horizon], with an interpolated end point if needed."""
        if horizon > self.horizon + grid_tolerance(self.times):
            raise HorizonError(f"horizon {horizon} beyond path horizon {self.horizon}")
        keep = self.times < horizon
        times = np.append(self.times[keep], horizon)
        values = np.append(self.values[keep], np.interp(horizon, self.times, self.values))
        if times.size > 1 and times[-1] - times[-2] <= 0:
            times, values = times[:-1], values[:-1]
        return GridPath(times, values)


@dataclass(frozen=True, eq=False)
class BrownianPath(GridPath):
    """A GridPath with independent N(0, dt) increments; ``seed`` records its stream."""

    seed: Any = None


def uniform_grid(horizon: float, step: float) -> np.ndarray:
    """0, step, 2*step, ... up to ``horizon`` (which must be a multiple of ``step``)."""
    m = int(round(horizon / step))
    if m < 0 or abs(m * step - horizon) > 1e-9 * max(1.0, horizon):
        raise InvalidGridError(f"horizon {horizon} is not a multiple of step {step}")
    return np.arange(m + 1) * step


def cell_grid(h: float, n: int, fine_ratio: int) -> np.ndarray:
    """Uniform fine grid on [0, nh] with ``fine_ratio`` steps per cell.

    Knots are computed as i*h so that they coincide bitwise with the sampling
    times of an Euler trajectory.
    """
    if fine_ratio < 1 or n < 0:
        raise InvalidGridError("need fine_ratio >= 1 and n >= 0")
    inner = np.arange(n)[:, None] * h + np.arange(fine_ratio)[None, :] * (h / fine_ratio)
    return np.append(inner.ravel(), n * h)
