"""Conditional-Gaussian approximate likelihood.

Given the latent path, a coarse price increment is normal with

    mean      phi(V_{k-1}) dt + (rho / xi) (f/g)(V_{k-1}) dV_k
    variance  (1 - rho^2) f(V_{k-1})^2 dt

(left-endpoint quadrature). Substituting the spot-variance estimate for V
gives the approximate likelihood used for inference.

The mean is linear in four coefficients,

    mean = a * dt + b * (r v dt) + c * (r dt) + beta * (r dV),   r = f/g,

with a = mu, b = kappa rho / xi, c = -kappa rho m / xi, beta = rho / xi.
For equi-volatility models r = 1 and only ``alpha = a + c`` is identified,
so the parameter vector is reduced to ``(alpha, kappa, rho, xi)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .models import Identifiability, ModelSpec, Theta

LOG_2PI = math.log(2.0 * math.pi)

EQUIVOL_PARAMS = ("alpha", "kappa", "rho", "xi")
FULL_PARAMS = ("mu", "kappa", "m", "rho", "xi")


def param_names(model: ModelSpec) -> tuple[str, ...]:
    """Names of the identified parameters sampled for ``model``."""
    if model.identifiability is Identifiability.EQUI_VOLATILITY:
        return EQUIVOL_PARAMS
    return FULL_PARAMS


@dataclass(frozen=True)
class EquiVolParams:
    """Identified parameters of an equi-volatility model."""

    alpha: float
    kappa: float
    rho: float
    xi: float

    def __post_init__(self):
        if not self.kappa > 0 or not self.xi > 0 or not -1 <= self.rho <= 1:
            raise ValueError(f"parameters out of range: {self}")

    @classmethod
    def from_theta(cls, theta: Theta) -> "EquiVolParams":
        return cls(alpha=theta.alpha, kappa=theta.kappa, rho=theta.rho, xi=theta.xi)

    def as_dict(self) -> dict:
        return {"alpha": self.alpha, "kappa": self.kappa, "rho": self.rho, "xi": self.xi}


def params_from_vector(model: ModelSpec, values) -> EquiVolParams | Theta:
    names = param_names(model)
    d = dict(zip(names, (float(v) for v in values)))
    if model.identifiability is Identifiability.EQUI_VOLATILITY:
        return EquiVolParams(**d)
    return Theta(**d)


def params_to_vector(params) -> np.ndarray:
    return np.array(list(params.as_dict().values()), dtype=float)


class LikelihoodContext:
    """Increments, integrated design columns and conditional variances.

    ``design[k]`` holds the four integrals over interval k that multiply the
    mean coefficients (a, b, c, beta):  int du, int r V du, int r du and
    int r dV. ``f2dt[k]`` is int f(V)^2 du. Build it with :meth:`from_nodes`
    (left-endpoint quadrature on coarse nodes, the approximate likelihood)
    or :meth:`from_fine_path` (sums over every fine step of a simulated
    latent path, i.e. the exact conditional law of the Euler scheme).
    """

    def __init__(self, dx, design, f2dt, model: ModelSpec, v=None, dt=None):
        self.model = model
        self.dx = np.asarray(dx, dtype=float)
        self.design = np.asarray(design, dtype=float)
        self.f2dt = np.asarray(f2dt, dtype=float)
        self.K = len(self.dx)
        if self.design.shape != (self.K, 4) or self.f2dt.shape != (self.K,):
            raise ValueError("design must be (K, 4) and f2dt (K,)")
        if np.any(~(self.f2dt > 0)) or not np.all(np.isfinite(self.f2dt)):
            raise ValueError("integrated f(v)^2 must be positive and finite on every interval")
        self.log_f2dt_sum = float(np.sum(np.log(self.f2dt)))
        self.v = None if v is None else np.asarray(v, dtype=float)
        self.dt = self.design[:, 0] if dt is None else np.broadcast_to(np.asarray(dt, dtype=float), (self.K,))
        for arr in (self.dx, self.design, self.f2dt):
            arr.setflags(write=False)

    @classmethod
    def from_nodes(cls, x, v, dt, model: ModelSpec) -> "LikelihoodContext":
        """Left-endpoint quadrature from prices and latent values at K+1 nodes."""
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        if x.shape != v.shape or x.ndim != 1 or len(x) < 2:
            raise ValueError("x and v must be 1-d arrays of equal length K+1")
        K = len(x) - 1
        dt = np.broadcast_to(np.asarray(dt, dtype=float), (K,)).copy()
        if np.any(~(dt > 0)):
            raise ValueError("dt must be positive")
        v_left = v[:-1]
        ratio = np.asarray(model.fg_ratio(v_left), dtype=float)
        f2dt = np.asarray(model.f(v_left), dtype=float) ** 2 * dt
        design = np.column_stack([dt, ratio * v_left * dt, ratio * dt, ratio * np.diff(v)])
        return cls(np.diff(x), design, f2dt, model, v=v, dt=dt)

    @classmethod
    def from_estimate(cls, path, estimate, model: ModelSpec) -> "LikelihoodContext":
        """Approximate-likelihood context on the grid of a spot-vol estimate."""
        idx = estimate.grid_index
        return cls.from_nodes(path.x[idx], estimate.v_hat, np.diff(idx) / path.n, model)

    @classmethod
    def from_fine_path(cls, path, grid_index, model: ModelSpec) -> "LikelihoodContext":
        """Context whose integrals run over every fine step of ``path.v_true``.

        Under full truncation f and f/g vanish wherever V <= 0, matching the
        simulator.
        """
        if path.v_true is None:
            raise ValueError("path carries no true latent values")
        idx = np.asarray(grid_index)
        v = path.v_true[: idx[-1] + 1]
        v_left = v[:-1]
        d = 1.0 / path.n
        if model.full_truncation:
            pos = v_left > 0
            f2 = np.zeros_like(v_left)
            ratio = np.zeros_like(v_left)
            f2[pos] = model.f(v_left[pos]) ** 2
            ratio[pos] = model.fg_ratio(v_left[pos])
        else:
            f2 = model.f(v_left) ** 2
            ratio = model.fg_ratio(v_left)
        cols = np.column_stack([np.full_like(v_left, d), ratio * v_left * d, ratio * d, ratio * np.diff(v)])
        starts = idx[:-1]
        design = np.add.reduceat(cols, starts, axis=0)
        f2dt = np.add.reduceat(f2 * d, starts)
        return cls(np.diff(path.x[idx]), design, f2dt, model, v=path.v_true[idx], dt=np.diff(idx) * d)

    @property
    def identifiability(self) -> Identifiability:
        return self.model.identifiability


def _coefficients(params, model: ModelSpec) -> tuple[np.ndarray, float]:
    """Mean coefficients (a, b, c, beta) and rho."""
    if isinstance(params, EquiVolParams):
        if model.identifiability is not Identifiability.EQUI_VOLATILITY:
            raise TypeError("reduced parameters only apply to equi-volatility models")
        b = params.kappa * params.rho / params.xi
        return np.array([params.alpha, b, 0.0, params.rho / params.xi]), params.rho
    th = params
    b = th.kappa * th.rho / th.xi
    return np.array([th.mu, b, -b * th.m, th.rho / th.xi]), th.rho


def _coefficient_jacobian(params) -> np.ndarray:
    """d(a, b, c, beta) / d(params), rows follow ``params.as_dict()`` order."""
    if isinstance(params, EquiVolParams):
        k, r, x = params.kappa, params.rho, params.xi
        return np.array(
            [
                [1.0, 0.0, 0.0, 0.0],
                [0.0, r / x, 0.0, 0.0],
                [0.0, k / x, 0.0, 1.0 / x],
                [0.0, -k * r / x**2, 0.0, -r / x**2],
            ]
        )
    k, m, r, x = params.kappa, params.m, params.rho, params.xi
    return np.array(
        [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, r / x, -r * m / x, 0.0],
            [0.0, 0.0, -k * r / x, 0.0],
            [0.0, k / x, -k * m / x, 1.0 / x],
            [0.0, -k * r / x**2, k * r * m / x**2, -r / x**2],
        ]
    )


def conditional_mean(ctx: LikelihoodContext, params) -> np.ndarray:
    coef, _ = _coefficients(params, ctx.model)
    with np.errstate(over="ignore", invalid="ignore"):
        return ctx.design @ coef


def conditional_moments(ctx: LikelihoodContext, params, k: int) -> tuple[float, float]:
    """Mean and variance of the k-th increment (1-based), given the latent path."""
    if not 1 <= k <= ctx.K:
        raise IndexError(f"k must lie in 1..{ctx.K}")
    coef, rho = _coefficients(params, ctx.model)
    if abs(rho) >= 1:
        raise ValueError("|rho| = 1 gives a degenerate conditional variance")
    return float(ctx.design[k - 1] @ coef), (1.0 - rho**2) * float(ctx.f2dt[k - 1])


def log_likelihood(ctx: LikelihoodContext, params) -> float:
    """Approximate log-likelihood; ``-inf`` when |rho| >= 1 or the mean overflows."""
    coef, rho = _coefficients(params, ctx.model)
    s = 1.0 - rho * rho
    if not s > 0:
        return -math.inf
    with np.errstate(over="ignore", invalid="ignore"):
        resid = ctx.dx - ctx.design @ coef
        q = float(np.sum(resid * resid / ctx.f2dt))
    if not math.isfinite(q):
        return -math.inf
    return -0.5 * (ctx.K * (LOG_2PI + math.log(s)) + ctx.log_f2dt_sum + q / s)


def log_likelihood_gradient(ctx: LikelihoodContext, params) -> np.ndarray:
    """Gradient with respect to the fields of ``params`` in declaration order."""
    coef, rho = _coefficients(params, ctx.model)
    s = 1.0 - rho * rho
    if not s > 0:
        raise ValueError("gradient undefined for |rho| >= 1")
    resid = ctx.dx - ctx.design @ coef
    w = resid / ctx.f2dt
    q = float(np.sum(resid * w))
    grad = _coefficient_jacobian(params) @ (ctx.design.T @ w) / s
    names = list(params.as_dict())
    grad[names.index("rho")] += ctx.K * rho / s - q * rho / s**2
    return grad


def standardized_residuals(ctx: LikelihoodContext, params) -> np.ndarray:
    """(dx - mean) / sqrt((1 - rho^2) f^2 dt); standard normal under the model."""
    coef, rho = _coefficients(params, ctx.model)
    s = 1.0 - rho * rho
    if not s > 0:
        raise ValueError("residuals undefined for |rho| >= 1")
    return (ctx.dx - ctx.design @ coef) / np.sqrt(s * ctx.f2dt)
