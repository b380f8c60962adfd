"""Euler-Maruyama simulation of the coupled (X, V) system on the grid m/n."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .models import REFERENCE_THETA, REFERENCE_V0, ModelSpec, Theta


class SimulationError(RuntimeError):
    """The discretised state left the finite range."""


def fine_steps(n: int, T: float) -> int:
    """Number of fine increments ``floor(nT)``, robust to rounding of n*T."""
    return int(math.floor(n * T + 1e-9))


@dataclass(frozen=True)
class SimConfig:
    T: float = 1.0
    n: int = 2**19
    x0: float = 0.0
    v0: float = REFERENCE_V0
    theta: Theta = field(default_factory=lambda: REFERENCE_THETA)
    seed: int = 0

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("T must be positive")
        if int(self.n) != self.n or self.n < 2:
            raise ValueError("n must be an integer >= 2")
        if fine_steps(self.n, self.T) < 2:
            raise ValueError("floor(nT) must be at least 2")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def n_steps(self) -> int:
        return fine_steps(self.n, self.T)


@dataclass(frozen=True)
class PathSample:
    """Observed log-price on the uniform grid ``times = m / n``.

    ``v_true`` is only present for simulated data.
    """

    times: np.ndarray
    x: np.ndarray
    n: int
    v_true: np.ndarray | None = None

    def __post_init__(self):
        if len(self.times) != len(self.x):
            raise ValueError("times and x differ in length")
        if self.v_true is not None and len(self.v_true) != len(self.x):
            raise ValueError("v_true and x differ in length")
        if len(self.times) < 3:
            raise ValueError("need at least two increments")
        if self.times[0] != 0.0:
            raise ValueError("times must start at 0")
        dt = np.diff(self.times)
        if np.max(np.abs(dt - 1.0 / self.n)) > 1e-12 * max(1.0, self.times[-1]):
            raise ValueError("times are not uniformly spaced with step 1/n")

    @property
    def T(self) -> float:
        return (len(self.times) - 1) / self.n

    @classmethod
    def from_arrays(cls, times, x, v_true=None) -> "PathSample":
        """Build a sample, inferring ``n`` from the grid spacing."""
        times = np.asarray(times, dtype=float)
        step = (times[-1] - times[0]) / (len(times) - 1)
        n = int(round(1.0 / step))
        v = None if v_true is None else np.asarray(v_true, dtype=float)
        return cls(times=times, x=np.asarray(x, dtype=float), n=n, v_true=v)


def _diffusion(model: ModelSpec, fn, v: np.ndarray) -> np.ndarray:
    if not model.full_truncation:
        return np.asarray(fn(v), dtype=float)
    out = np.zeros_like(v)
    pos = v > 0
    out[pos] = fn(v[pos])
    return out


def simulate(model: ModelSpec, cfg: SimConfig) -> PathSample:
    """Simulate one path of (X, V).

    Each step draws one pair of independent normals (dW, dW'); the latent
    shock is ``rho dW + sqrt(1 - rho^2) dW'``. Under full truncation f and g
    are evaluated at ``max(V, 0)`` while the drift uses V itself.
    """
    th = cfg.theta
    if not model.in_support(cfg.v0):
        raise ValueError(f"v0={cfg.v0} outside the support of {model.name}")
    M = cfg.n_steps
    dt = 1.0 / cfg.n
    rng = np.random.default_rng(cfg.seed)
    z = rng.standard_normal((M, 2)) * math.sqrt(dt)
    dw = z[:, 0]
    dwv = th.rho * dw + math.sqrt(1.0 - th.rho * th.rho) * z[:, 1]

    a = th.kappa * dt
    b = th.kappa * th.m * dt
    xi = th.xi
    g = model.g_scalar or (lambda u: float(model.g(u)))
    trunc = model.full_truncation
    vs = [float(cfg.v0)]
    vm = vs[0]
    for i, shock in enumerate(dwv.tolist()):
        gv = 0.0 if trunc and vm <= 0.0 else g(vm)
        vm = vm - a * vm + b + xi * gv * shock
        if not math.isfinite(vm):
            raise SimulationError(f"latent state became non-finite at step {i + 1}")
        vs.append(vm)
    v = np.array(vs)

    fv = _diffusion(model, model.f, v[:-1])
    dx = th.mu * dt + fv * dw
    if not np.all(np.isfinite(dx)):
        bad = int(np.flatnonzero(~np.isfinite(dx))[0])
        raise SimulationError(f"price increment became non-finite at step {bad + 1}")
    x = np.empty(M + 1)
    x[0] = cfg.x0
    np.cumsum(dx, out=x[1:])
    x[1:] += cfg.x0
    times = np.arange(M + 1) / cfg.n
    return PathSample(times=times, x=x, n=cfg.n, v_true=v)


def redraw_price_increments(
    model: ModelSpec,
    theta: Theta,
    v_path: np.ndarray,
    dt: float,
    n_draws: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Price increments over a window with the latent path held fixed.

    The latent Brownian increments are recovered from ``v_path`` and only the
    independent part of the price noise is redrawn, so the returned
    ``n_draws`` samples of X_end - X_start follow the law of the increment
    conditional on V. Requires g > 0 along the path.
    """
    v = np.asarray(v_path, dtype=float)
    v_left = v[:-1]
    gv = model.g(v_left)
    fv = model.f(v_left)
    if np.any(~(gv > 0)):
        raise ValueError("g must be positive along the frozen path")
    dwv = (np.diff(v) - theta.kappa * (theta.m - v_left) * dt) / (theta.xi * gv)
    corr = theta.rho * np.sum(fv * dwv)
    perp = rng.standard_normal((n_draws, len(v_left))) @ fv * math.sqrt(dt)
    return theta.mu * dt * len(v_left) + corr + math.sqrt(1.0 - theta.rho**2) * perp
