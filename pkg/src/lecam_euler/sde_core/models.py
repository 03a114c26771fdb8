"""Model registry: drift and diffusion families with certified constants.

A model is the pair (b, sigma) of

    d xi_t = b(xi_t) dt + sigma(xi_t) dW_t

together with constants K, K_sigma, sigma0^2, sigma1^2 such that

    |b(x)| + |b'(x)| <= K,
    sigma0^2 <= sigma^2(x) <= sigma1^2,   |sigma'(x)| + |sigma''(x)| <= K_sigma.

Every built-in family knows its derivatives in closed form and the tightest
constants valid on the whole real line, so configurations stay plain data.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Mapping

import numpy as np

from ..errors import ConfigError, ModelBoundsWarning

Fn = Callable[[np.ndarray], np.ndarray]

PROBE = np.linspace(-40.0, 40.0, 8001)
_REL = 1e-9


@dataclass(frozen=True)
class _Component:
    funcs: tuple[Fn, ...]
    constants: tuple[float, ...]


def _params(family: str, given: Mapping[str, Any], required: tuple[str, ...], optional: Mapping[str, float], kind: str):
    given = dict(given or {})
    for key in given:
        if key not in required and key not in optional:
            raise ConfigError(f"unknown parameter {key!r} for {kind} family {family!r}", key=key)
    out = dict(optional)
    for key in required:
        if key not in given:
            raise ConfigError(f"missing parameter {key!r} for {kind} family {family!r}", key=key)
    for key, val in given.items():
        try:
            out[key] = float(val)
        except (TypeError, ValueError):
            raise ConfigError(f"parameter {key!r} must be a number", key=key) from None
    return out


def _zeros(x):
    return np.zeros_like(np.asarray(x, dtype=float))


# -- drift families: return (b, b'), K -----------------------------------------

def _drift_zero(p):
    return _Component((_zeros, _zeros), (0.0,))


def _drift_constant(p):
    c = p["c"]
    return _Component((lambda x: np.full_like(np.asarray(x, dtype=float), c), _zeros), (abs(c),))


def _drift_tanh(p):
    A, beta = p["A"], p["beta"]
    if beta <= 0:
        raise ConfigError("tanh drift needs beta > 0", key="beta")
    # sup_s s + beta (1 - s^2) over s = tanh in [0, 1)
    K = abs(A) * (beta + 0.25 / beta if beta > 0.5 else 1.0)
    return _Component(
        (lambda x: A * np.tanh(beta * np.asarray(x, dtype=float)),
         lambda x: A * beta / np.cosh(beta * np.asarray(x, dtype=float)) ** 2),
        (K,),
    )


def _drift_sin(p):
    A, beta = p["A"], p["beta"]
    return _Component(
        (lambda x: A * np.sin(beta * np.asarray(x, dtype=float)),
         lambda x: A * beta * np.cos(beta * np.asarray(x, dtype=float))),
        (abs(A) * math.hypot(1.0, beta),),
    )


# -- diffusion families: return (sigma, sigma', sigma''), (K_sigma, s0^2, s1^2) --

def _diffusion_constant(p):
    c = p["c"]
    if c == 0:
        raise ConfigError("constant diffusion must be nonzero (sigma0^2 > 0)", key="c")
    return _Component(
        (lambda x: np.full_like(np.asarray(x, dtype=float), c), _zeros, _zeros),
        (0.0, c * c, c * c),
    )


def _diffusion_cos(p):
    c, d, omega = p["c"], p["d"], p["omega"]
    if not c > d >= 0:
        raise ConfigError("cos diffusion needs c > d >= 0 (sigma0^2 > 0)", key="d" if d < 0 else "c")
    if omega <= 0:
        raise ConfigError("cos diffusion needs omega > 0", key="omega")
    return _Component(
        (lambda x: c + d * np.cos(omega * np.asarray(x, dtype=float)),
         lambda x: -d * omega * np.sin(omega * np.asarray(x, dtype=float)),
         lambda x: -d * omega**2 * np.cos(omega * np.asarray(x, dtype=float))),
        (d * omega * math.hypot(1.0, omega), (c - d) ** 2, (c + d) ** 2),
    )


DRIFT_FAMILIES: dict[str, tuple[Callable, tuple[str, ...], dict[str, float]]] = {
    "zero": (_drift_zero, (), {}),
    "constant": (_drift_constant, ("c",), {}),
    "tanh": (_drift_tanh, ("A",), {"beta": 1.0}),
    "sin": (_drift_sin, ("A",), {"beta": 1.0}),
}

DIFFUSION_FAMILIES: dict[str, tuple[Callable, tuple[str, ...], dict[str, float]]] = {
    "constant": (_diffusion_constant, ("c",), {}),
    "cos": (_diffusion_cos, ("c", "d"), {"omega": 1.0}),
}


@dataclass(frozen=True)
class InitialLaw:
    """Law of the initial state: a point mass or a Gaussian."""

    kind: str = "point"
    mean: float = 0.0
    std: float = 0.0

    def __post_init__(self):
        if self.kind not in ("point", "gaussian"):
            raise ConfigError(f"unknown initial law {self.kind!r}", key="kind")
        if self.std < 0 or (self.kind == "point" and self.std != 0):
            raise ConfigError("initial law std must be >= 0 and zero for a point mass", key="std")

    def sample(self, rng: np.random.Generator, size: int | None = None):
        if self.kind == "point":
            return self.mean if size is None else np.full(size, self.mean)
        return rng.normal(self.mean, self.std, size)

    def to_dict(self) -> dict:
        if self.kind == "point":
            return {"kind": "point", "value": self.mean}
        return {"kind": "gaussian", "mean": self.mean, "std": self.std}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "InitialLaw":
        d = dict(d)
        kind = d.pop("kind", "point")
        allowed = {"point": {"value"}, "gaussian": {"mean", "std"}}.get(kind)
        if allowed is None:
            raise ConfigError(f"unknown initial law {kind!r}", key="eta.kind")
        for key in d:
            if key not in allowed:
                raise ConfigError(f"unknown key {key!r} in initial law", key=f"eta.{key}")
        if kind == "point":
            return cls("point", float(d.get("value", 0.0)), 0.0)
        return cls("gaussian", float(d.get("mean", 0.0)), float(d.get("std", 1.0)))


@dataclass(frozen=True)
class ModelSpec:
    """Drift, diffusion, their derivatives and the bounds K, K_sigma, sigma0^2, sigma1^2 they satisfy.

    Instances are immutable and safe to share between workers. Construct them
    with :func:`make_model` unless you really need custom callables; the
    constructor then probes the declared constants numerically.
    """

    b: Fn
    db: Fn
    sigma: Fn
    dsigma: Fn
    d2sigma: Fn
    K: float
    K_sigma: float
    sigma0_sq: float
    sigma1_sq: float
    eta: InitialLaw = field(default_factory=InitialLaw)
    drift_family: str = "custom"
    drift_params: Mapping[str, float] = field(default_factory=dict)
    diffusion_family: str = "custom"
    diffusion_params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not self.sigma0_sq > 0:
            raise ValueError("sigma0^2 must be positive")
        if self.sigma0_sq > self.sigma1_sq:
            raise ValueError("need sigma0^2 <= sigma1^2")
        if self.K < 0 or self.K_sigma < 0:
            raise ValueError("K and K_sigma must be nonnegative")
        bad = self.violations(PROBE)
        if bad:
            raise ValueError("declared constants fail on the probe set: " + "; ".join(bad))

    def sigma_sq(self, x):
        s = self.sigma(x)
        return s * s

    @property
    def constant_diffusion(self) -> bool:
        return self.sigma0_sq == self.sigma1_sq

    def violations(self, x) -> list[str]:
        """Constraint names violated at the states ``x`` (empty when all hold)."""
        x = np.asarray(x, dtype=float).ravel()
        out = []
        if not np.all(np.isfinite(x)):
            out.append("finite state")
            x = x[np.isfinite(x)]
        tol = _REL * max(1.0, self.K, self.K_sigma, self.sigma1_sq)
        if np.any(np.abs(self.b(x)) + np.abs(self.db(x)) > self.K + tol):
            out.append("|b|+|b'| <= K")
        s2 = self.sigma_sq(x)
        if np.any(s2 < self.sigma0_sq - tol) or np.any(s2 > self.sigma1_sq + tol):
            out.append("sigma0^2 <= sigma^2 <= sigma1^2")
        if np.any(np.abs(self.dsigma(x)) + np.abs(self.d2sigma(x)) > self.K_sigma + tol):
            out.append("|sigma'|+|sigma''| <= K_sigma")
        return out

    @property
    def drift_sup(self) -> float:
        """Certified sup |b|; at most K, and exactly 0 for the zero drift."""
        A = self.drift_params.get("A", self.drift_params.get("c"))
        if self.drift_family == "zero":
            return 0.0
        if self.drift_family in ("constant", "tanh", "sin"):
            return float(abs(A))
        return float(self.K)

    def warn_if_violated(self, x) -> None:
        bad = self.violations(x)
        if bad:
            warnings.warn("model bounds violated on the traversed range: " + "; ".join(bad),
                          ModelBoundsWarning, stacklevel=3)

    def to_dict(self) -> dict:
        return {
            "family": {"drift": self.drift_family, "diffusion": self.diffusion_family},
            "params": {"drift": dict(self.drift_params), "diffusion": dict(self.diffusion_params)},
            "K": self.K,
            "K_sigma": self.K_sigma,
            "sigma0_sq": self.sigma0_sq,
            "sigma1_sq": self.sigma1_sq,
            "eta": self.eta.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ModelSpec":
        return model_from_dict(d)


def make_model(
    drift: str = "zero",
    drift_params: Mapping[str, Any] | None = None,
    diffusion: str = "constant",
    diffusion_params: Mapping[str, Any] | None = None,
    K: float | None = None,
    eta: InitialLaw | None = None,
) -> ModelSpec:
    """Build a registry model.

    ``K`` is the radius of the drift class and may exceed the tight bound of
    the chosen drift; it defaults to the tight bound, or 1 for the zero drift
    (which belongs to every class).
    """
    if drift not in DRIFT_FAMILIES:
        raise ConfigError(f"unknown drift family {drift!r}", key="drift")
    if diffusion not in DIFFUSION_FAMILIES:
        raise ConfigError(f"unknown diffusion family {diffusion!r}", key="diffusion")
    build, req, opt = DRIFT_FAMILIES[drift]
    dp = _params(drift, drift_params or {}, req, opt, "drift")
    dcomp = build(dp)
    build, req, opt = DIFFUSION_FAMILIES[diffusion]
    sp = _params(diffusion, diffusion_params or {}, req, opt, "diffusion")
    scomp = build(sp)

    K_tight = dcomp.constants[0]
    if K is None:
        K = K_tight if K_tight > 0 else 1.0
    elif K < K_tight * (1 - _REL):
        raise ConfigError(f"K={K} is below the certified bound {K_tight} for this drift", key="K")
    K_sigma, s0, s1 = scomp.constants
    b, db = dcomp.funcs
    sigma, ds, d2s = scomp.funcs
    return ModelSpec(
        b=b, db=db, sigma=sigma, dsigma=ds, d2sigma=d2s,
        K=float(K), K_sigma=K_sigma, sigma0_sq=s0, sigma1_sq=s1,
        eta=eta or InitialLaw(),
        drift_family=drift, drift_params=dp,
        diffusion_family=diffusion, diffusion_params=sp,
    )


_MODEL_KEYS = {"family", "params", "K", "K_sigma", "sigma0_sq", "sigma1_sq", "eta"}


def model_from_dict(d: Mapping[str, Any]) -> ModelSpec:
    """Inverse of :meth:`ModelSpec.to_dict`.

    Stored constants are checked against the certified ones: K may be any
    class radius above the tight bound, the diffusion constants must be valid
    (possibly looser) bounds.
    """
    if not isinstance(d, Mapping):
        raise ConfigError("model must be a JSON object", key="model")
    for key in d:
        if key not in _MODEL_KEYS:
            raise ConfigError(f"unknown model key {key!r}", key=f"model.{key}")
    fam = d.get("family")
    if not isinstance(fam, Mapping):
        raise ConfigError("model.family must name a drift and a diffusion family", key="model.family")
    for key in fam:
        if key not in ("drift", "diffusion"):
            raise ConfigError(f"unknown key {key!r} in model.family", key=f"model.family.{key}")
    if "drift" not in fam:
        raise ConfigError("missing drift family name", key="model.family.drift")
    if "diffusion" not in fam:
        raise ConfigError("unknown diffusion family None (missing name)", key="model.family.diffusion")
    params = d.get("params", {}) or {}
    for key in params:
        if key not in ("drift", "diffusion"):
            raise ConfigError(f"unknown key {key!r} in model.params", key=f"model.params.{key}")
    eta = InitialLaw.from_dict(d["eta"]) if "eta" in d else None
    model = make_model(fam["drift"], params.get("drift"), fam["diffusion"], params.get("diffusion"),
                       K=d.get("K"), eta=eta)
    tol = _REL * max(1.0, model.sigma1_sq, model.K_sigma)
    checks = {
        "K_sigma": lambda v: v >= model.K_sigma - tol,
        "sigma0_sq": lambda v: 0 < v <= model.sigma0_sq + tol,
        "sigma1_sq": lambda v: v >= model.sigma1_sq - tol,
    }
    updates = {}
    for key, ok in checks.items():
        if key in d:
            v = float(d[key])
            if not ok(v):
                raise ConfigError(f"{key}={v} is not a valid bound for this model", key=f"model.{key}")
            updates[key] = v
    if updates:
        model = replace(model, **updates)
    return model
