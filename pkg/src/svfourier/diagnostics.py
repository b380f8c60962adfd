"""Convergence diagnostics for multiple MCMC chains.

All functions take draws shaped ``(n_chains, n_draws)`` for one parameter.
"""

from __future__ import annotations

import warnings

import numpy as np


def _check(draws) -> np.ndarray:
    draws = np.asarray(draws, dtype=float)
    if draws.ndim != 2:
        raise ValueError("draws must have shape (n_chains, n_draws)")
    if draws.shape[1] < 4:
        raise ValueError("need at least 4 draws per chain")
    return draws


def split_chains(draws) -> np.ndarray:
    """Cut every chain in half, dropping the middle draw of odd lengths."""
    draws = _check(draws)
    half = draws.shape[1] // 2
    return np.concatenate([draws[:, :half], draws[:, -half:]], axis=0)


def split_rhat(draws) -> float:
    """Potential scale reduction on split chains.

    Returns NaN (with a warning) when the within-chain variance is zero.
    """
    sc = split_chains(draws)
    m, n = sc.shape
    means = sc.mean(axis=1)
    W = sc.var(axis=1, ddof=1).mean()
    B = n * means.var(ddof=1)
    if not W > 0:
        warnings.warn("R-hat undefined for constant chains", RuntimeWarning, stacklevel=2)
        return float("nan")
    var_plus = (n - 1) / n * W + B / n
    return float(np.sqrt(var_plus / W))


def _autocovariance(x: np.ndarray) -> np.ndarray:
    """Biased autocovariance of each row, computed by FFT."""
    n = x.shape[-1]
    xc = x - x.mean(axis=-1, keepdims=True)
    size = 2 ** int(np.ceil(np.log2(2 * n)))
    fx = np.fft.rfft(xc, size, axis=-1)
    acov = np.fft.irfft(fx * np.conj(fx), size, axis=-1)[..., :n]
    return acov / n


def effective_sample_size(draws) -> float:
    """Multi-chain ESS with Geyer's initial monotone sequence truncation.

    Constant input is degenerate: the total draw count is returned with a
    warning.
    """
    draws = _check(draws)
    m, n = draws.shape
    acov = _autocovariance(draws)
    W = acov[:, 0].mean() * n / (n - 1)
    var_plus = W * (n - 1) / n
    if m > 1:
        var_plus += draws.mean(axis=1).var(ddof=1)
    if not var_plus > 0:
        warnings.warn("ESS undefined for constant chains; reporting the draw count", RuntimeWarning, stacklevel=2)
        return float(m * n)
    rho = 1.0 - (W - acov.mean(axis=0)) / var_plus
    rho[0] = 1.0
    # pair sums P_t = rho_{2t} + rho_{2t+1}, kept while positive and made monotone
    n_pairs = (n - 1) // 2
    pairs = rho[: 2 * n_pairs : 2] + rho[1 : 2 * n_pairs : 2]
    positive = np.flatnonzero(pairs <= 0)
    stop = positive[0] if positive.size else n_pairs
    pairs = np.minimum.accumulate(pairs[:stop])
    tau = -1.0 + 2.0 * pairs.sum()
    tau = max(tau, 1.0 / np.log10(m * n))
    return float(m * n / tau)


def quantiles(x, probs=(0.025, 0.5, 0.975)) -> np.ndarray:
    """Type-7 (linear interpolation) sample quantiles."""
    return np.quantile(np.asarray(x, dtype=float), probs, method="linear")
