"""Brownian-bridge kernels between the discrete and continuous Euler schemes.

Forward direction: the randomization that turns Euler points (t_i, Z_i) into a
continuous-time Euler path

    xi_bar(t) = y(t) + sigma(Z_i) B_i(t),   t in [t_i, t_{i+1}],

with y the linear interpolation of the points and B_i independent Brownian
bridges pinned at zero on both cell ends.

Reverse direction: starting from a unit-diffusion driver B_bar, the random
clock T_i = T_{i-1} + sigma^2(zeta_{T_{i-1}}) h and the process

    zeta_u = zeta_{T_{i-1}} + f(zeta_{T_{i-1}}) (u - T_{i-1}) + B_bar_u - B_bar_{T_{i-1}}

on (T_{i-1}, T_i] recover innovations
eps_i = (B_bar_{T_i} - B_bar_{T_{i-1}}) / sqrt(T_i - T_{i-1}) which drive the
Euler recursion exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from .girsanov import drift_ratio
from .sde_core.models import ModelSpec
from .sde_core.paths import BrownianPath, GridPath, cell_grid, grid_tolerance
from .sde_core.rng import as_generator
from .sde_core.simulate import EulerTrajectory, refine_brownian, sampling_indices
from .time_change import inverse_timechange_bar

DEFAULT_FINE_RATIO = 32


@dataclass(frozen=True, eq=False)
class BridgeInfill:
    """Brownian bridges on each Euler cell, sampled on ``fine_ratio + 1`` points.

    ``B[i, j]`` is the bridge of cell i at t_i + j*h/fine_ratio; columns 0 and
    ``fine_ratio`` are exactly zero.
    """

    h: float
    B: np.ndarray
    seed: Any = None

    @property
    def fine_ratio(self) -> int:
        return self.B.shape[1] - 1

    @property
    def n(self) -> int:
        return self.B.shape[0]


def sample_bridges(seed, h: float, n: int, fine_ratio: int = DEFAULT_FINE_RATIO) -> BridgeInfill:
    """Bridges by endpoint conditioning: B(t) = W'(t) - (t - t_i)/h * W'(t_{i+1})."""
    rng = as_generator(seed)
    steps = rng.standard_normal((n, fine_ratio)) * np.sqrt(h / fine_ratio)
    W = np.concatenate((np.zeros((n, 1)), np.cumsum(steps, axis=1)), axis=1)
    frac = np.arange(fine_ratio + 1) / fine_ratio
    B = W - frac[None, :] * W[:, -1:]
    B[:, 0] = 0.0
    B[:, -1] = 0.0
    return BridgeInfill(h, B, seed=None if isinstance(seed, np.random.Generator) else seed)


def bridges_from_brownian(w: GridPath, h: float, n: int, fine_ratio: int = DEFAULT_FINE_RATIO) -> BridgeInfill:
    """B_i(t) = W_t - W_{t_i} - (t - t_i)/h (W_{t_{i+1}} - W_{t_i}) read off a stored path."""
    idx = w.locate(cell_grid(h, n, fine_ratio))
    Wf = w.values[idx]
    knots = Wf[::fine_ratio]
    cells = np.empty((n, fine_ratio + 1))
    for i in range(n):
        cells[i] = Wf[i * fine_ratio:(i + 1) * fine_ratio + 1]
    frac = np.arange(fine_ratio + 1) / fine_ratio
    B = cells - knots[:-1, None] - frac[None, :] * (knots[1:] - knots[:-1])[:, None]
    B[:, 0] = 0.0
    B[:, -1] = 0.0
    return BridgeInfill(h, B)


def phi_kernel(traj: EulerTrajectory, seed=None, fine_ratio: int = DEFAULT_FINE_RATIO,
               bridges: BridgeInfill | None = None) -> GridPath:
    """Continuous-time Euler path from discrete Euler points.

    Fresh bridges are drawn from ``seed`` unless ``bridges`` is given. The
    output passes through every (t_i, Z_i) exactly.
    """
    n, h = traj.n, traj.h
    if bridges is None:
        if seed is None:
            raise ValueError("phi_kernel needs an infill seed or explicit bridges")
        bridges = sample_bridges(seed, h, n, fine_ratio)
    if bridges.n != n:
        raise ValueError(f"{bridges.n} bridges for {n} Euler cells")
    R = bridges.fine_ratio
    Z = traj.Z
    frac = np.arange(R) / R
    lin = Z[:-1, None] + frac[None, :] * (Z[1:] - Z[:-1])[:, None]
    vals = lin + traj.model.sigma(Z[:-1])[:, None] * bridges.B[:, :R]
    vals[:, 0] = Z[:-1]
    return GridPath(cell_grid(h, n, R), np.append(vals.ravel(), Z[-1]))


def euler_marginals(x: GridPath, h: float, n: int) -> np.ndarray:
    """(x(t_0), ..., x(t_n)): the projection of a path onto the sampling times."""
    return x.values[sampling_indices(x, h, n)].copy()


@dataclass(frozen=True, eq=False)
class TimeChangedEuler:
    """Output of the reverse construction on a driver of horizon ``a``.

    ``T`` holds T_0 = 0 < T_1 < ... < T_m (m completed cells), ``zeta_knots``
    and ``driver_knots`` the values of zeta_bar and B_bar there, ``path`` the
    process zeta_bar on the union of the driver grid and the T_i, up to T_m.
    """

    a: float
    h: float
    model: ModelSpec
    T: np.ndarray
    zeta_knots: np.ndarray
    driver_knots: np.ndarray
    path: GridPath
    driver: BrownianPath

    @property
    def m(self) -> int:
        return self.T.size - 1


def build_timechanged_euler(model: ModelSpec, driver: BrownianPath, z0: float, h: float,
                            seed=None) -> TimeChangedEuler:
    """Run the random clock T_i and zeta_bar on ``driver`` until the next T_i would pass its horizon.

    The T_i rarely fall on the driver grid. With ``seed`` the driver is refined
    there by exact Brownian-bridge sampling; without it the driver's linear
    interpolation is used.
    """
    a = driver.horizon
    if a < model.sigma1_sq * h * (1 - 1e-12):
        raise ValueError(f"driver horizon {a} shorter than sigma1^2 h = {model.sigma1_sq * h}")
    fr = drift_ratio(model)
    rng = as_generator(seed) if seed is not None else None
    tol = grid_tolerance(driver.times)
    T, Z, Bk = [0.0], [float(z0)], [float(driver.values[0])]
    w = driver
    while True:
        z = Z[-1]
        t_next = T[-1] + model.sigma_sq(z) * h
        if t_next > a + tol:
            break
        if rng is not None:
            w = refine_brownian(w, [t_next], rng)
        b_next = float(np.interp(t_next, w.times, w.values))
        Z.append(z + fr.f(z) * (t_next - T[-1]) + (b_next - Bk[-1]))
        T.append(float(t_next))
        Bk.append(b_next)
    T, Z, Bk = np.array(T), np.array(Z), np.array(Bk)

    grid = w.times[w.times <= T[-1]]
    u = np.union1d(grid, T)
    Bu = np.interp(u, w.times, w.values)
    cell = np.clip(np.searchsorted(T, u, side="left") - 1, 0, None)
    vals = Z[cell] + fr.f(Z[cell]) * (u - T[cell]) + (Bu - Bk[cell])
    knots = np.searchsorted(u, T)
    vals[knots] = Z
    return TimeChangedEuler(a, h, model, T, Z, Bk, GridPath(u, vals), w)


def extract_innovations(tce: TimeChangedEuler) -> np.ndarray:
    """eps_{i+1} = (B_bar_{T_{i+1}} - B_bar_{T_i}) / sqrt(T_{i+1} - T_i).

    The clock only sees sigma^2, so for a negative sigma the sign of
    sigma(Z_i) is carried over to keep the Euler recursion intact.
    """
    if tce.m < 1:
        raise ValueError("no completed Euler cell in the time-changed construction")
    sign = np.sign(tce.model.sigma(tce.zeta_knots[:-1]))
    return sign * np.diff(tce.driver_knots) / np.sqrt(np.diff(tce.T))


def as_euler_trajectory(tce: TimeChangedEuler) -> EulerTrajectory:
    """The knots zeta_bar_{T_i} with their extracted innovations."""
    return EulerTrajectory(tce.h, tce.zeta_knots, extract_innovations(tce), tce.model)


def reverse_map(tce: TimeChangedEuler, fine_ratio: int = DEFAULT_FINE_RATIO) -> GridPath:
    """xi_bar(t) = zeta_bar(A_bar_t(zeta_bar)) on [0, m h] with ``fine_ratio`` points per cell."""
    return inverse_timechange_bar(tce.model, tce.path, tce.h, n=tce.m, fine_ratio=fine_ratio)
