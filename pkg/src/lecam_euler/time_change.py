"""Random time changes and the path mappings they induce.

Four clocks appear, all piecewise linear on finite grids so that each has an
exact inverse:

* rho_t(x) = int_0^t sigma^2(x(s)) ds with inverse tau_u(x), for the diffusion;
* T_u(y) = int_0^u dv / sigma^2(y(v)) with inverse A_t(y), on the image side;
* rho_bar_t(x), the same clock with sigma frozen at the sampling times t_i = ih,
  with inverse tau_bar_u(x), for the continuous-time Euler scheme;
* A_bar_t(y), defined by the recursion
  A_bar_t = A_bar_{t_{i-1}} + sigma^2(y(A_bar_{t_{i-1}})) (t - t_{i-1}) on (t_{i-1}, t_i],
  with inverse T_bar_u(y).

Integrals use the left-endpoint rule on the path's own grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import HorizonError, InvalidGridError
from .sde_core.models import ModelSpec
from .sde_core.paths import GridPath, grid_tolerance
from .sde_core.simulate import sampling_indices


@dataclass(frozen=True, eq=False)
class TimeChangeMap:
    """Increasing piecewise-linear bijection between [0, t_max] and [0, u_max].

    ``forward`` maps original time t to the new clock u; ``inverse`` maps back.
    Both are exact at the breakpoints.
    """

    t: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        t = np.array(self.t, dtype=float)
        u = np.array(self.u, dtype=float)
        if t.shape != u.shape or t.ndim != 1 or t.size == 0:
            raise InvalidGridError("breakpoints must be two 1-d arrays of equal length")
        if t[0] != 0 or u[0] != 0:
            raise InvalidGridError("time change must start at (0, 0)")
        if np.any(np.diff(t) <= 0) or np.any(np.diff(u) <= 0):
            raise InvalidGridError("time change must be strictly increasing")
        t.setflags(write=False)
        u.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "u", u)

    @property
    def t_max(self) -> float:
        return float(self.t[-1])

    @property
    def u_max(self) -> float:
        return float(self.u[-1])

    def slopes(self) -> np.ndarray:
        return np.diff(self.u) / np.diff(self.t)

    def forward(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.t_max + grid_tolerance(self.t)):
            raise HorizonError(f"time outside [0, {self.t_max}]")
        out = np.interp(t, self.t, self.u)
        return float(out) if out.ndim == 0 else out

    def inverse(self, u):
        u = np.asarray(u, dtype=float)
        if np.any(u < 0) or np.any(u > self.u_max + grid_tolerance(self.u)):
            raise HorizonError(f"clock value outside [0, {self.u_max}]")
        out = np.interp(u, self.u, self.t)
        return float(out) if out.ndim == 0 else out


def _left_cumulative(times, rates) -> np.ndarray:
    return np.concatenate(([0.0], np.cumsum(rates[:-1] * np.diff(times))))


def rho(model: ModelSpec, x: GridPath) -> TimeChangeMap:
    """rho_t(x) = int_0^t sigma^2(x(s)) ds with breakpoints at x's grid times."""
    return TimeChangeMap(x.times, _left_cumulative(x.times, model.sigma_sq(x.values)))


def tau(m: TimeChangeMap, u):
    """tau_u = inf{t : rho_t >= u}, the exact inverse of the piecewise-linear map."""
    return m.inverse(u)


def forward_timechange(model: ModelSpec, x: GridPath) -> GridPath:
    """y(u) = x(tau_u(x)) on the u-grid {rho_{t_k}(x)} up to the horizon rho_T(x)."""
    return GridPath(rho(model, x).u, x.values)


def a_clock(model: ModelSpec, y: GridPath) -> TimeChangeMap:
    """The pair (A_t(y), T_u(y)) as one map: forward is A, inverse is T."""
    return TimeChangeMap(_left_cumulative(y.times, 1.0 / model.sigma_sq(y.values)), y.times)


def inverse_timechange(model: ModelSpec, y: GridPath) -> GridPath:
    """x(t) = y(A_t(y)) on the t-grid {T_{u_k}(y)}."""
    return GridPath(a_clock(model, y).t, y.values)


def _cell_count(x: GridPath, h: float) -> int:
    return int(np.floor(x.horizon / h + 1e-9))


def rho_bar(model: ModelSpec, x: GridPath, h: float) -> TimeChangeMap:
    """rho_bar_t(x) = h sum_{j<i} sigma^2(x(t_j)) + (t - t_i) sigma^2(x(t_i)).

    Breakpoints sit at the t_i inside x's horizon, plus the horizon itself when
    it is not a sampling time.
    """
    n = _cell_count(x, h)
    idx = sampling_indices(x, h, n)
    s2 = model.sigma_sq(x.values[idx])
    u = np.empty(n + 1)
    u[0] = 0.0
    acc = 0.0
    for i in range(n):
        acc = acc + s2[i] * h
        u[i + 1] = acc
    t = np.arange(n + 1) * h
    tail = x.horizon - n * h
    if tail > grid_tolerance(x.times):
        t = np.append(t, x.horizon)
        u = np.append(u, acc + s2[n] * tail)
    return TimeChangeMap(t, u)


def forward_timechange_bar(model: ModelSpec, x: GridPath, h: float) -> GridPath:
    """y(u) = x(tau_bar_u(x)) on the u-grid {rho_bar(t_k)} of x's grid times."""
    m = rho_bar(model, x, h)
    return GridPath(m.forward(x.times), x.values)


def a_bar_map(model: ModelSpec, y: GridPath, h: float, n: int | None = None) -> TimeChangeMap:
    """Breakpoints (t_i, A_bar_{t_i}(y)) of the Euler clock on ``y``.

    With ``n`` given, exactly n cells are built and HorizonError is raised if a
    recursion step needs y beyond its horizon. Otherwise the recursion runs
    while the cells stay inside y's horizon.
    """
    tol = grid_tolerance(y.times)
    a = [0.0]
    i = 0
    while n is None or i < n:
        cur = a[-1]
        if cur > y.horizon + tol:
            if n is None:
                break
            raise HorizonError(f"A_bar recursion left the path horizon {y.horizon} at step {i + 1}")
        nxt = cur + model.sigma_sq(y(min(cur, y.horizon))) * h
        if n is None and nxt > y.horizon + tol:
            break
        a.append(nxt)
        i += 1
    if len(a) < 2:
        raise HorizonError("path horizon shorter than one Euler cell")
    return TimeChangeMap(np.arange(len(a)) * h, np.array(a))


def A_bar(model: ModelSpec, y: GridPath, t: float, h: float) -> float:
    """A_bar_t(y) for a single time t >= 0."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        return 0.0
    i = int(np.ceil(t / h - 1e-12))
    m = a_bar_map(model, y, h, n=i - 1) if i > 1 else TimeChangeMap([0.0], [0.0])
    prev = float(m.u[-1])
    if prev > y.horizon + grid_tolerance(y.times):
        raise HorizonError(f"A_bar recursion left the path horizon {y.horizon}")
    return prev + float(model.sigma_sq(y(min(prev, y.horizon)))) * (t - (i - 1) * h)


def T_bar(model: ModelSpec, y: GridPath, u: float, h: float) -> float:
    """T_bar_u(y) = inf{t : A_bar_t(y) >= u}."""
    return a_bar_map(model, y, h).inverse(u)


# -- batched variants used by the Monte Carlo harness ---------------------------

def row_search(grid: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Per-row index k with grid[r, k] <= q[r] < grid[r, k+1], clipped to [0, N-2]."""
    R, N = grid.shape
    rows = np.arange(R)
    lo = np.zeros(R, dtype=np.intp)
    hi = np.full(R, N - 1, dtype=np.intp)
    while True:
        active = hi - lo > 1
        if not active.any():
            return lo
        mid = (lo + hi) // 2
        go = grid[rows, mid] <= q
        lo = np.where(active & go, mid, lo)
        hi = np.where(active & ~go, mid, hi)


def row_interp(grid: np.ndarray, values: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Row-wise linear interpolation, exact at grid points."""
    R = grid.shape[0]
    rows = np.arange(R)
    top = grid[:, -1]
    if np.any(q > top + 1e-9 * np.maximum(1.0, top)) or np.any(q < 0):
        raise HorizonError("batched path evaluated outside its horizon")
    k = row_search(grid, q)
    g0, g1 = grid[rows, k], grid[rows, k + 1]
    v0, v1 = values[rows, k], values[rows, k + 1]
    out = v0 + (q - g0) / (g1 - g0) * (v1 - v0)
    return np.where(q >= top, values[:, -1], out)


def a_bar_batch(model: ModelSpec, u_grid: np.ndarray, values: np.ndarray, h: float, n: int):
    """A_bar_{t_i}, i = 0..n, for every row path; also y(A_bar_{t_{i-1}}), i = 1..n.

    Returns ``(abar, y_at)`` with shapes ``(R, n + 1)`` and ``(R, n)``.
    """
    R = u_grid.shape[0]
    abar = np.zeros((R, n + 1))
    y_at = np.empty((R, n))
    for i in range(n):
        y_at[:, i] = row_interp(u_grid, values, abar[:, i])
        abar[:, i + 1] = abar[:, i] + model.sigma_sq(y_at[:, i]) * h
    return abar, y_at


def inverse_timechange_bar(model: ModelSpec, y: GridPath, h: float, n: int | None = None,
                           fine_ratio: int = 32) -> GridPath:
    """x(t) = y(A_bar_t(y)) on a uniform t-grid with ``fine_ratio`` points per cell."""
    from .sde_core.paths import cell_grid

    m = a_bar_map(model, y, h, n)
    cells = m.t.size - 1
    t = cell_grid(h, cells, fine_ratio)
    return GridPath(t, y(np.minimum(m.forward(t), y.horizon)))
