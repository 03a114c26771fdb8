"""Drift ratio, predictable Euler drift, Girsanov log-likelihoods, KL and TV.

All likelihood computations assume unit diffusion coefficient: the time
changes reduce both experiments to processes dY = drift dv + dB, and for two
such laws P, Q with drifts p, q

    log dP/dQ = int (p - q) dY - 1/2 int (p^2 - q^2) dv,
    K(P, Q)   = 1/2 E_P int (p - q)^2 dv.

Stochastic integrals use the left-endpoint (Ito) rule on the path's grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InsufficientSamplesError
from .sde_core.models import ModelSpec
from .sde_core.paths import GridPath
from .time_change import a_bar_map

# drift of a unit-diffusion process: (grid times, path) -> drift on those times
PathDrift = Callable[[np.ndarray, GridPath], np.ndarray]


@dataclass(frozen=True)
class DriftRatio:
    """f = b / sigma^2 with sup bound K/sigma0^2 and Lipschitz constant L."""

    model: ModelSpec
    L: float
    sup_bound: float

    def f(self, x):
        return self.model.b(x) / self.model.sigma_sq(x)

    def df(self, x):
        m = self.model
        s = m.sigma(x)
        return m.db(x) / (s * s) - 2.0 * m.b(x) * m.dsigma(x) / s**3

    def as_path_drift(self) -> PathDrift:
        """The Markov drift v -> f(y(v)) in the form used by the likelihood code."""
        return lambda v, y: self.f(y(v))


def lipschitz_constant(K: float, K_sigma: float, sigma0_sq: float, sigma1_sq: float) -> float:
    """L = (K / sigma0^2) (1 + 2 K_sigma sigma1 / sigma0^2)."""
    return K / sigma0_sq * (1.0 + 2.0 * K_sigma * math.sqrt(sigma1_sq) / sigma0_sq)


def drift_ratio(model: ModelSpec) -> DriftRatio:
    return DriftRatio(
        model,
        lipschitz_constant(model.K, model.K_sigma, model.sigma0_sq, model.sigma1_sq),
        model.K / model.sigma0_sq,
    )


@dataclass(frozen=True, eq=False)
class PiecewiseDrift:
    """Left-open cells (breaks[i], breaks[i+1]] carrying the constant values[i]."""

    breaks: np.ndarray
    values: np.ndarray

    def __call__(self, v, y=None):
        v = np.asarray(v, dtype=float)
        k = np.clip(np.searchsorted(self.breaks, v, side="left") - 1, 0, self.values.size - 1)
        return self.values[k]


def euler_drift(fr: DriftRatio, y: GridPath, h: float, n: int | None = None) -> PiecewiseDrift:
    """Predictable drift of the time-changed Euler process along ``y``.

    Cell i is (A_bar_{t_{i-1}}(y), A_bar_{t_i}(y)] with value
    f(y(A_bar_{t_{i-1}}(y))).
    """
    m = a_bar_map(fr.model, y, h, n)
    starts = m.u[:-1]
    return PiecewiseDrift(m.u.copy(), np.asarray(fr.f(y(np.minimum(starts, y.horizon))), dtype=float))


def euler_path_drift(fr: DriftRatio, h: float, n: int | None = None) -> PathDrift:
    """The path functional (v, y) -> f_bar(v, y), recomputing the clock on each path."""
    return lambda v, y: euler_drift(fr, y, h, n)(v)


def zero_drift(v, y=None):
    return np.zeros_like(np.asarray(v, dtype=float))


def constant_drift(c: float) -> PathDrift:
    return lambda v, y=None: np.full_like(np.asarray(v, dtype=float), c)


@dataclass(frozen=True)
class LogLikelihoodRatio:
    """log dP/dQ = stochastic_integral - energy, with energy = 1/2 int (p^2 - q^2) dv.

    The energy term is nonnegative whenever the reference drift q is zero.
    """

    value: float
    stochastic_integral: float
    energy: float
    horizon: float


def _drifts_on(p: PathDrift, q: PathDrift, y: GridPath, horizon: float):
    path = y.restrict(horizon) if horizon < y.horizon else y
    v = path.times[:-1]
    return path, np.asarray(p(v, y), dtype=float), np.asarray(q(v, y), dtype=float)


def log_lr_unit_diffusion(p: PathDrift, q: PathDrift, y: GridPath, horizon: float | None = None) -> LogLikelihoodRatio:
    """Discretized Girsanov log-density of P (drift p) w.r.t. Q (drift q) along ``y``."""
    horizon = y.horizon if horizon is None else float(horizon)
    path, pv, qv = _drifts_on(p, q, y, horizon)
    dy = np.diff(path.values)
    dv = np.diff(path.times)
    stoch = float(np.sum((pv - qv) * dy))
    energy = float(0.5 * np.sum((pv * pv - qv * qv) * dv))
    return LogLikelihoodRatio(stoch - energy, stoch, energy, horizon)


@dataclass(frozen=True)
class Estimate:
    estimate: float
    stderr: float
    n_replicates: int
    horizon: float | None = None

    def to_dict(self) -> dict:
        return {"estimate": self.estimate, "stderr": self.stderr,
                "n_replicates": self.n_replicates, "horizon": self.horizon}


def mean_and_stderr(samples, horizon: float | None = None) -> Estimate:
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 2:
        raise InsufficientSamplesError(f"need at least 2 replicates, got {x.size}")
    return Estimate(float(np.mean(x)), float(np.std(x, ddof=1) / np.sqrt(x.size)), int(x.size), horizon)


def kl_integrand(p: PathDrift, q: PathDrift, y: GridPath, horizon: float | None = None) -> float:
    """1/2 int_0^horizon (p - q)^2 dv along one path (left-endpoint rule)."""
    horizon = y.horizon if horizon is None else float(horizon)
    path, pv, qv = _drifts_on(p, q, y, horizon)
    return float(0.5 * np.sum((pv - qv) ** 2 * np.diff(path.times)))


def kl_unit_diffusion(p: PathDrift, q: PathDrift, paths, horizon: float) -> Estimate:
    """Monte Carlo K(P, Q) = 1/2 E_P int (p - q)^2 dv from paths drawn under P."""
    paths = list(paths)
    if len(paths) < 2:
        raise InsufficientSamplesError(f"need at least 2 replicate paths, got {len(paths)}")
    return mean_and_stderr([kl_integrand(p, q, y, horizon) for y in paths], horizon)


def pinsker_tv_bound(kl: float) -> float:
    """sqrt(K / 2), an upper bound on the total variation distance."""
    if kl < 0 or math.isnan(kl):
        raise ValueError(f"Kullback divergence must be nonnegative, got {kl}")
    return math.sqrt(kl / 2.0)


def tv_plugin_estimate(log_lr_samples) -> Estimate:
    """TV(P, Q) = 1/2 E_Q |dP/dQ - 1| from log-likelihood ratios of paths drawn under Q."""
    s = np.asarray(log_lr_samples, dtype=float)
    return mean_and_stderr(0.5 * np.abs(np.expm1(s)))
