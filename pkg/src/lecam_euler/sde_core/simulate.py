"""Brownian paths, fine-grid diffusion paths and the discrete Euler scheme."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import GridMismatchError
from .models import ModelSpec
from .paths import BrownianPath, GridPath, check_grid
from .rng import as_generator


def sample_brownian(grid, seed) -> BrownianPath:
    """Standard Brownian motion on ``grid``; a pure function of ``seed``."""
    times = check_grid(grid)
    rng = as_generator(seed)
    dw = rng.standard_normal(times.size - 1) * np.sqrt(np.diff(times))
    values = np.concatenate(([0.0], np.cumsum(dw)))
    return BrownianPath(times, values, seed=seed if not isinstance(seed, np.random.Generator) else None)


def refine_brownian(w: BrownianPath, new_times, seed) -> BrownianPath:
    """Insert ``new_times`` into ``w`` by exact Brownian-bridge sampling.

    A time between two grid points s0 < t < s1 gets the conditional law
    N(w0 + (t-s0)/(s1-s0) (w1-w0), (t-s0)(s1-t)/(s1-s0)); a time beyond the
    horizon gets an independent forward increment. Points are inserted one
    at a time in increasing order, which is exact by the Markov property.
    """
    rng = as_generator(seed)
    times = list(w.times)
    values = list(w.values)
    for t in np.sort(np.asarray(new_times, dtype=float).ravel()):
        k = int(np.searchsorted(times, t))
        if k < len(times) and times[k] == t:
            continue
        if k == len(times):
            values.append(values[-1] + np.sqrt(t - times[-1]) * rng.standard_normal())
            times.append(t)
            continue
        s0, s1, w0, w1 = times[k - 1], times[k], values[k - 1], values[k]
        lam = (t - s0) / (s1 - s0)
        sd = np.sqrt((t - s0) * (s1 - t) / (s1 - s0))
        times.insert(k, t)
        values.insert(k, w0 + lam * (w1 - w0) + sd * rng.standard_normal())
    return BrownianPath(np.array(times), np.array(values), seed=w.seed)


def euler_maruyama(model: ModelSpec, x0, dW: np.ndarray, dt: np.ndarray) -> np.ndarray:
    """Batched Euler-Maruyama: rows of ``dW`` are independent driving increments.

    Returns an array of shape ``(R, N + 1)`` for ``dW`` of shape ``(R, N)``.
    """
    dW = np.atleast_2d(np.asarray(dW, dtype=float))
    dt = np.asarray(dt, dtype=float)
    R, N = dW.shape
    out = np.empty((R, N + 1))
    out[:, 0] = x0
    x = out[:, 0].copy()
    for k in range(N):
        x = x + model.b(x) * dt[k] + model.sigma(x) * dW[:, k]
        out[:, k + 1] = x
    return out


def simulate_diffusion(model: ModelSpec, w: BrownianPath, x0: float) -> GridPath:
    """Fine-grid Euler-Maruyama surrogate of the diffusion driven by ``w``.

    Warns with :class:`ModelBoundsWarning` if the path visits states where the
    model's declared constants do not hold.
    """
    values = euler_maruyama(model, x0, np.diff(w.values)[None, :], np.diff(w.times))[0]
    model.warn_if_violated(values)
    return GridPath(w.times, values)


@dataclass(frozen=True, eq=False)
class EulerTrajectory:
    """Discrete Euler scheme Z_0..Z_n with its innovations eps_1..eps_n."""

    h: float
    Z: np.ndarray
    eps: np.ndarray
    model: ModelSpec

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("sampling step h must be positive")
        Z = np.array(self.Z, dtype=float)
        eps = np.array(self.eps, dtype=float)
        if Z.ndim != 1 or eps.shape != (Z.size - 1,):
            raise ValueError("need Z of length n+1 and eps of length n")
        Z.setflags(write=False)
        eps.setflags(write=False)
        object.__setattr__(self, "Z", Z)
        object.__setattr__(self, "eps", eps)

    @property
    def n(self) -> int:
        return self.eps.size

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n + 1) * self.h

    def as_path(self) -> GridPath:
        return GridPath(self.times, self.Z)

    def residuals(self) -> np.ndarray:
        """Z_i - (Z_{i-1} + h b(Z_{i-1}) + sqrt(h) sigma(Z_{i-1}) eps_i); zero up to rounding."""
        prev = self.Z[:-1]
        pred = prev + self.h * self.model.b(prev) + np.sqrt(self.h) * self.model.sigma(prev) * self.eps
        return self.Z[1:] - pred


def euler_recursion(model: ModelSpec, h: float, z0, eps: np.ndarray) -> np.ndarray:
    """Run Z_i = Z_{i-1} + h b(Z_{i-1}) + sqrt(h) sigma(Z_{i-1}) eps_i.

    ``eps`` may be 1-d (one trajectory) or 2-d (one trajectory per row).
    """
    eps = np.asarray(eps, dtype=float)
    single = eps.ndim == 1
    eps = np.atleast_2d(eps)
    R, n = eps.shape
    Z = np.empty((R, n + 1))
    Z[:, 0] = z0
    sqh = np.sqrt(h)
    for i in range(n):
        z = Z[:, i]
        Z[:, i + 1] = z + h * model.b(z) + sqh * model.sigma(z) * eps[:, i]
    return Z[0] if single else Z


def simulate_euler(model: ModelSpec, h: float, n: int, z0: float, seed) -> EulerTrajectory:
    if not h > 0:
        raise ValueError("h must be positive")
    if n < 1:
        raise ValueError("n must be at least 1")
    eps = as_generator(seed).standard_normal(n)
    return EulerTrajectory(h, euler_recursion(model, h, z0, eps), eps, model)


def sampling_indices(path: GridPath, h: float, n: int) -> np.ndarray:
    """Grid indices of t_i = i*h, i = 0..n; GridMismatchError if any is missing."""
    try:
        return path.locate(np.arange(n + 1) * h)
    except GridMismatchError as exc:
        raise GridMismatchError(f"grid does not contain all t_i = i*{h}, i <= {n}: {exc}") from None


def euler_from_brownian(model: ModelSpec, w: BrownianPath, h: float, n: int, z0: float) -> EulerTrajectory:
    """Euler scheme with eps_i = (W_{t_i} - W_{t_{i-1}}) / sqrt(h) read off ``w``."""
    idx = sampling_indices(w, h, n)
    eps = np.diff(w.values[idx]) / np.sqrt(h)
    return EulerTrajectory(h, euler_recursion(model, h, z0, eps), eps, model)
