"""Fourier (Fejer-weighted) reconstruction of the latent spot variance.

Price increments are rescaled by sqrt(n) and passed through a test function
h. Their Fourier coefficients on [0, T] are Cesaro-summed with Fejer weights
to give a smooth estimate of t -> rho_h(f(V_t)^2), where
rho_h(x) = E[h(Z)], Z ~ N(0, x). Inverting rho_h and f recovers V.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .models import ModelSpec
from .simulate import PathSample, fine_steps

CLAMP_EPS = 1e-8
SNAP_TOLERANCE = 0.01


class AlignmentError(ValueError):
    """Coarse evaluation grid does not fit the observation grid."""

    def __init__(self, message: str, suggestions: list[int]):
        super().__init__(message)
        self.suggestions = suggestions


def rho_h_cos(x):
    """E[cos(Z)] for Z ~ N(0, x)."""
    return np.exp(-0.5 * np.asarray(x, dtype=float))


def rho_h_cos_inverse(y):
    """Inverse of :func:`rho_h_cos` on (0, 1]."""
    y = np.asarray(y, dtype=float)
    if np.any(~(y > 0)) or np.any(y > 1):
        raise ValueError("rho_h inverse needs values in (0, 1]; clamp the reconstruction first")
    return -2.0 * np.log(y)


class TestFunction(enum.Enum):
    COS = "cos"

    @property
    def h(self):
        return np.cos

    @property
    def rho(self):
        return rho_h_cos

    @property
    def rho_inverse(self):
        return rho_h_cos_inverse

    @property
    def rho_max(self) -> float:
        return 1.0


@dataclass(frozen=True)
class EstimatorConfig:
    N: int
    h: TestFunction = TestFunction.COS
    T: float = 1.0
    snap_tolerance: float = SNAP_TOLERANCE

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("N must be a positive integer")
        if not self.T > 0:
            raise ValueError("T must be positive")
        if isinstance(self.h, str):
            object.__setattr__(self, "h", TestFunction(self.h))


@dataclass(frozen=True)
class SpotVolEstimate:
    """Estimated latent path on the coarse grid.

    ``grid_index[k]`` is the fine-grid index of node ``t_grid[k]``;
    ``rho_h_raw`` is the Fejer sum before clamping, ``rho_h_curve`` after.
    """

    t_grid: np.ndarray
    grid_index: np.ndarray
    v_hat: np.ndarray
    rho_h_raw: np.ndarray
    rho_h_curve: np.ndarray
    clamped: np.ndarray
    n: int
    N: int
    h: TestFunction

    @property
    def clamped_count(self) -> int:
        return int(np.count_nonzero(self.clamped))

    @property
    def K(self) -> int:
        return len(self.t_grid) - 1

    def sidecar(self) -> dict:
        return {"n": self.n, "N": self.N, "h": self.h.value, "clamped_count": self.clamped_count}


def _snap(n: int, T: float, N: int) -> tuple[np.ndarray, float]:
    K = 2 * N + 1
    M = fine_steps(n, T)
    ideal = np.arange(K + 1) * (T / K)
    idx = np.minimum(np.rint(ideal * n).astype(np.int64), M)
    err = np.max(np.abs(idx / n - ideal)) / (T / K)
    if np.any(np.diff(idx) <= 0):
        err = np.inf
    return idx, err


def compatible_N(n: int, T: float, near: int, tolerance: float = SNAP_TOLERANCE, count: int = 3) -> list[int]:
    """Cutoffs closest to ``near`` whose coarse grid fits the fine grid."""
    M = fine_steps(n, T)
    ok = [N for N in range(1, (M - 1) // 2 + 1) if _snap(n, T, N)[1] <= tolerance]
    ok.sort(key=lambda N: (abs(N - near), N))
    return sorted(ok[:count])


def coarse_grid(n: int, T: float, N: int, tolerance: float = SNAP_TOLERANCE) -> np.ndarray:
    """Fine-grid indices of the nodes t_k = kT/(2N+1), k = 0..2N+1.

    When 2N+1 does not divide floor(nT) each node is moved to the nearest
    observation time; this is accepted while every move stays within
    ``tolerance`` of the coarse spacing.
    """
    idx, err = _snap(n, T, N)
    if err > tolerance:
        sugg = compatible_N(n, T, N, tolerance)
        raise AlignmentError(
            f"grid of 2N+1={2 * N + 1} intervals does not fit n={n}, T={T} "
            f"(node offset {err:.3g} of a coarse step); try N in {sugg}",
            sugg,
        )
    return idx


def _increments(path: PathSample, T: float) -> np.ndarray:
    M = fine_steps(path.n, T)
    if M > len(path.x) - 1:
        raise ValueError(f"path covers {len(path.x) - 1} increments, need floor(nT)={M}")
    dx = np.diff(path.x[: M + 1])
    bad = np.flatnonzero(~np.isfinite(dx))
    if bad.size:
        raise ValueError(f"non-finite increment at index {int(bad[0]) + 1}")
    return dx


def fourier_coefficients(
    path: PathSample,
    N: int,
    h: TestFunction = TestFunction.COS,
    T: float = 1.0,
    method: str = "auto",
) -> np.ndarray:
    """G(X, h, k) for k = -N..N (entry ``k + N``).

    ``method="fft"`` reads the coefficients off one FFT of the transformed
    increments and needs n*T to be an integer; ``"direct"`` evaluates the
    defining sum block by block. ``"auto"`` prefers the FFT.
    """
    h = TestFunction(h)
    n = path.n
    dx = _increments(path, T)
    M = len(dx)
    hv = h.h(math.sqrt(n) * dx)
    ks = np.arange(-N, N + 1)
    integral_nT = abs(n * T - round(n * T)) < 1e-9
    if method == "auto":
        method = "fft" if integral_nT else "direct"
    if method == "fft":
        if not integral_nT:
            raise ValueError("FFT route needs integer n*T")
        H = np.fft.fft(hv)
        return H[ks % M] / n
    if method != "direct":
        raise ValueError(f"unknown method {method!r}")
    out = np.zeros(len(ks), dtype=complex)
    omega = -2j * np.pi * ks / T
    block = 8192
    for start in range(0, M, block):
        s = np.arange(start, min(start + block, M)) / n
        out += np.exp(np.outer(omega, s)) @ hv[start : start + len(s)]
    return out / n


def fejer_weights(N: int) -> np.ndarray:
    return 1.0 - np.abs(np.arange(-N, N + 1)) / N


def fejer_sum(coeffs: np.ndarray, N: int, T: float, t) -> np.ndarray:
    """Complex Fejer sum; its imaginary part vanishes up to rounding."""
    coeffs = np.asarray(coeffs)
    if coeffs.shape != (2 * N + 1,):
        raise ValueError(f"expected {2 * N + 1} coefficients, got {coeffs.shape}")
    ks = np.arange(-N, N + 1)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    phase = np.exp(2j * np.pi / T * np.outer(t, ks))
    return phase @ (fejer_weights(N) * coeffs) / T


def fejer_reconstruct(coeffs: np.ndarray, N: int, T: float, t):
    """Real part of the Fejer-weighted Fourier sum at time(s) ``t``."""
    out = fejer_sum(coeffs, N, T, t).real
    return out[0] if np.ndim(t) == 0 else out


def invert_reconstruction(r, model: ModelSpec, h: TestFunction = TestFunction.COS):
    """Map reconstructed rho_h values to latent values, clamping into range.

    Returns ``(v_hat, r_clamped, clamped_mask)``.
    """
    h = TestFunction(h)
    r = np.asarray(r, dtype=float)
    clamped = (r <= 0) | (r > h.rho_max) | ~np.isfinite(r)
    rc = np.where(r <= 0, CLAMP_EPS, np.minimum(r, h.rho_max))
    rc = np.where(np.isfinite(rc), rc, CLAMP_EPS)
    y = np.sqrt(h.rho_inverse(rc))
    y_min = float(model.f(model.v_floor))
    lifted = y < y_min
    v = np.where(lifted, model.v_floor, model.f_inverse(np.maximum(y, y_min)))
    v = np.maximum(v, model.v_floor)
    return v, rc, clamped | lifted


def estimate_spot_vol(path: PathSample, model: ModelSpec, cfg: EstimatorConfig) -> SpotVolEstimate:
    """Estimate V at the coarse nodes t_k = kT/(2N+1), k = 0..2N+1."""
    idx = coarse_grid(path.n, cfg.T, cfg.N, cfg.snap_tolerance)
    t = idx / path.n
    G = fourier_coefficients(path, cfg.N, cfg.h, cfg.T)
    r = fejer_reconstruct(G, cfg.N, cfg.T, t)
    v, rc, clamped = invert_reconstruction(r, model, cfg.h)
    return SpotVolEstimate(
        t_grid=t,
        grid_index=idx,
        v_hat=v,
        rho_h_raw=r,
        rho_h_curve=rc,
        clamped=clamped,
        n=path.n,
        N=cfg.N,
        h=cfg.h,
    )
