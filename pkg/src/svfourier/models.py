"""Stochastic volatility model family.

The log-price and latent process follow

    dX = mu dt + f(V) dW
    dV = kappa (m - V) dt + xi g(V) dW^V,   W^V = rho W + sqrt(1 - rho^2) W'

with W, W' independent. A concrete model is fixed by the pair (f, g); the
conditional drift map ``phi`` collects everything in the mean of a price
increment that is not the ``dV`` term.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

ArrayFn = Callable[[np.ndarray], np.ndarray]


class Identifiability(enum.Enum):
    """Which parameters the likelihood can separate."""

    EQUI_VOLATILITY = "EquiVolatility"
    FULLY_SEPARATED = "FullySeparated"


@dataclass(frozen=True)
class Theta:
    """Model parameters ``(mu, kappa, m, rho, xi)``."""

    mu: float
    kappa: float
    m: float
    rho: float
    xi: float

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if not self.xi > 0:
            raise ValueError(f"xi must be positive, got {self.xi}")
        if not -1.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must lie in [-1, 1], got {self.rho}")
        for name in ("mu", "m"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def alpha(self) -> float:
        """Intercept ``mu - kappa rho m / xi`` of the equi-volatility drift."""
        return self.mu - self.kappa * self.rho * self.m / self.xi

    def as_dict(self) -> dict:
        return {"mu": self.mu, "kappa": self.kappa, "m": self.m, "rho": self.rho, "xi": self.xi}

    @classmethod
    def from_dict(cls, d: dict) -> "Theta":
        return cls(**{k: float(d[k]) for k in ("mu", "kappa", "m", "rho", "xi")})


# Table of the reference experiment: mu = 0, kappa = 5, m = 0.02, rho = -0.3, xi = 0.5.
REFERENCE_THETA = Theta(mu=0.0, kappa=5.0, m=0.02, rho=-0.3, xi=0.5)
REFERENCE_V0 = 0.09


def phi_generic(v, theta: Theta, fg_ratio: ArrayFn):
    """Conditional drift ``mu - (kappa rho m / xi) r(v) + (kappa rho / xi) r(v) v``, r = f/g."""
    r = fg_ratio(v)
    c = theta.kappa * theta.rho / theta.xi
    return theta.mu - c * theta.m * r + c * r * v


def phi_equivol(v, theta: Theta):
    """Drift map for f = g: affine in ``v``."""
    c = theta.kappa * theta.rho / theta.xi
    return theta.mu - c * theta.m + c * np.asarray(v, dtype=float)


def phi_expou(v, theta: Theta):
    """Drift map for f(v) = exp(v), g = 1.

    Overflow of ``exp(v)`` yields an infinite value rather than an error; the
    likelihood treats it as zero density.
    """
    v = np.asarray(v, dtype=float)
    c = theta.rho * theta.kappa / theta.xi
    with np.errstate(over="ignore", invalid="ignore"):
        ev = np.exp(v)
        return theta.mu - c * theta.m * ev + c * v * ev


@dataclass(frozen=True)
class ModelSpec:
    """A member of the SV family.

    ``f``, ``g``, ``f_inverse`` and ``fg_ratio`` act elementwise on arrays.
    ``support`` is the open interval the latent process lives in and
    ``v_floor`` is the smallest value the spot-variance estimator may return.
    ``full_truncation`` makes the simulator evaluate f and g at max(V, 0).
    """

    name: str
    f: ArrayFn
    g: ArrayFn
    f_inverse: ArrayFn
    fg_ratio: ArrayFn
    phi: Callable[[np.ndarray, Theta], np.ndarray]
    identifiability: Identifiability
    support: tuple[float, float]
    v_floor: float
    full_truncation: bool = False
    # scalar version of g for the simulator's inner loop
    g_scalar: Callable[[float], float] | None = None

    def in_support(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        lo, hi = self.support
        return (v > lo) & (v < hi)

    def support_grid(self, size: int = 1000) -> np.ndarray:
        """Points spread over the declared support, used by invariant checks."""
        lo, hi = self.support
        if np.isfinite(lo):
            return np.geomspace(max(lo, 0.0) + 1e-8, 50.0, size)
        return np.linspace(-20.0, 20.0, size)


def _check_positive(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if np.any(~(v > 0)):
        raise ValueError("Heston latent value must be positive")
    return v


def _heston_f(v):
    return np.sqrt(_check_positive(v))


def _square(y):
    y = np.asarray(y, dtype=float)
    return y * y


def _ones_like(v):
    return np.ones_like(np.asarray(v, dtype=float))


def _exp(v):
    with np.errstate(over="ignore"):
        return np.exp(np.asarray(v, dtype=float))


def _log(y):
    y = np.asarray(y, dtype=float)
    if np.any(~(y > 0)):
        raise ValueError("f_inverse of the exp-OU model needs positive input")
    return np.log(y)


def make_heston() -> ModelSpec:
    """Heston: f = g = sqrt(v) on v > 0."""
    return ModelSpec(
        name="heston",
        f=_heston_f,
        g=_heston_f,
        f_inverse=_square,
        fg_ratio=_ones_like,
        phi=phi_equivol,
        identifiability=Identifiability.EQUI_VOLATILITY,
        support=(0.0, np.inf),
        v_floor=1e-10,
        full_truncation=True,
        g_scalar=math.sqrt,
    )


def make_expou() -> ModelSpec:
    """Exponential Ornstein-Uhlenbeck: f = exp, g = 1, V real-valued."""
    return ModelSpec(
        name="expou",
        f=_exp,
        g=_ones_like,
        f_inverse=_log,
        fg_ratio=_exp,
        phi=phi_expou,
        identifiability=Identifiability.FULLY_SEPARATED,
        support=(-np.inf, np.inf),
        v_floor=-50.0,
        g_scalar=lambda v: 1.0,
    )


def make_equivol(
    f: ArrayFn,
    f_inverse: ArrayFn,
    name: str = "equivol",
    support: tuple[float, float] = (0.0, np.inf),
    v_floor: float | None = None,
) -> ModelSpec:
    """Generic equi-volatility model with g = f.

    The caller supplies the closed-form inverse of ``f`` on ``support``.
    """
    if v_floor is None:
        v_floor = support[0] + 1e-10 if np.isfinite(support[0]) else -50.0
    return ModelSpec(
        name=name,
        f=f,
        g=f,
        f_inverse=f_inverse,
        fg_ratio=_ones_like,
        phi=phi_equivol,
        identifiability=Identifiability.EQUI_VOLATILITY,
        support=support,
        v_floor=v_floor,
    )


_REGISTRY = {"heston": make_heston, "expou": make_expou}


def get_model(name: str) -> ModelSpec:
    try:
        return _REGISTRY[name.strip().lower()]()
    except KeyError:
        raise ValueError(f"unknown model {name!r}; choose from {sorted(_REGISTRY)}") from None
