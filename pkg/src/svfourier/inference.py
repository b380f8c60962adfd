"""Posterior sampling under uniform priors.

Every parameter lives on a bounded interval and is sampled on the real line
through the log-odds map. Chains use adaptive random-walk Metropolis: the
proposal covariance follows the empirical covariance of the warm-up draws,
scaled by 2.38^2 / d and by a factor tuned towards a target acceptance
rate, and is frozen once warm-up ends.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize
from scipy.special import expit

from . import diagnostics
from .likelihood import (
    FULL_PARAMS,
    LikelihoodContext,
    log_likelihood,
    log_likelihood_gradient,
    param_names,
    params_from_vector,
)
from .models import Identifiability

log = logging.getLogger(__name__)

DEFAULT_BOUNDS = {
    "rho": (-1.0, 1.0),
    "xi": (0.0, 5.0),
    "kappa": (0.0, 100.0),
    "m": (0.0, 1.0),
    "mu": (-1.0, 1.0),
    "alpha": (-10.0, 10.0),
}

# row order of the printed posterior table
ROW_ORDER = ("rho", "xi", "kappa", "m", "mu")


class IdentifiabilityError(ValueError):
    """Requested parameters cannot be separated by the likelihood."""


class SamplerError(RuntimeError):
    """The sampler failed to move."""


@dataclass(frozen=True)
class PriorSpec:
    """Independent uniform priors on closed intervals."""

    bounds: dict = field(default_factory=lambda: dict(DEFAULT_BOUNDS))

    def __post_init__(self):
        merged = dict(DEFAULT_BOUNDS)
        merged.update({k: (float(a), float(b)) for k, (a, b) in self.bounds.items()})
        for name, (a, b) in merged.items():
            if not (np.isfinite(a) and np.isfinite(b) and a < b):
                raise ValueError(f"prior interval for {name} must be finite with lower < upper")
        object.__setattr__(self, "bounds", merged)

    def interval(self, names) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([self.bounds[n][0] for n in names])
        hi = np.array([self.bounds[n][1] for n in names])
        return lo, hi

    def log_density(self, names, x) -> float:
        lo, hi = self.interval(names)
        x = np.asarray(x, dtype=float)
        if np.all((x >= lo) & (x <= hi)):
            return float(-np.sum(np.log(hi - lo)))
        return -math.inf


def to_unconstrained(x, lo, hi) -> np.ndarray:
    """Log-odds map of each coordinate of ``x`` from (lo, hi) to the real line."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= lo) or np.any(x >= hi):
        raise ValueError("values must lie strictly inside their prior bounds")
    return np.log(x - lo) - np.log(hi - x)


def to_constrained(y, lo, hi) -> tuple[np.ndarray, float]:
    """Inverse of :func:`to_unconstrained` and its log-Jacobian."""
    y = np.asarray(y, dtype=float)
    x = lo + (hi - lo) * expit(y)
    # log(b - a) + y - 2 log(1 + e^y), written without overflow
    log_jac = np.log(hi - lo) - np.logaddexp(0.0, y) - np.logaddexp(0.0, -y)
    return x, float(np.sum(log_jac))


def _log_jacobian_gradient(y) -> np.ndarray:
    return 1.0 - 2.0 * expit(y)


class Posterior:
    """Log posterior of the identified parameters on the unconstrained scale.

    The uniform prior is constant inside its box, so up to a constant the
    target is the log-likelihood plus the log-Jacobian of the transform.
    ``names`` defaults to the identified parameters of the model; asking for
    ``mu`` and ``m`` separately on an equi-volatility model is refused.
    """

    def __init__(self, ctx: LikelihoodContext, prior: PriorSpec, names=None, likelihood: bool = True):
        model = ctx.model
        names = tuple(names) if names is not None else param_names(model)
        if model.identifiability is Identifiability.EQUI_VOLATILITY and {"mu", "m"} & set(names):
            raise IdentifiabilityError(
                "mu and m are not separately identified in an equi-volatility model; "
                "sample the intercept alpha = mu - kappa rho m / xi instead"
            )
        if set(names) != set(param_names(model)):
            raise ValueError(f"{model.name} samples {param_names(model)}, got {names}")
        self.ctx = ctx
        self.prior = prior
        self.names = param_names(model)
        self.lo, self.hi = prior.interval(self.names)
        self.likelihood = likelihood

    @property
    def dim(self) -> int:
        return len(self.names)

    def constrain(self, y) -> np.ndarray:
        return to_constrained(y, self.lo, self.hi)[0]

    def unconstrain(self, x) -> np.ndarray:
        return to_unconstrained(x, self.lo, self.hi)

    def __call__(self, y) -> float:
        x, log_jac = to_constrained(y, self.lo, self.hi)
        if not self.likelihood:
            return log_jac
        if not np.all((x > self.lo) & (x < self.hi)):
            return -math.inf
        return log_likelihood(self.ctx, params_from_vector(self.ctx.model, x)) + log_jac

    def gradient(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        x, _ = to_constrained(y, self.lo, self.hi)
        dxdy = (x - self.lo) * (self.hi - x) / (self.hi - self.lo)
        g = _log_jacobian_gradient(y)
        if self.likelihood:
            g = g + log_likelihood_gradient(self.ctx, params_from_vector(self.ctx.model, x)) * dxdy
        return g


@dataclass
class Chain:
    """Draws of one chain on the constrained scale, warm-up included."""

    names: tuple
    draws: np.ndarray
    log_posts: np.ndarray
    accepted: np.ndarray
    warmup: int
    seed: int
    chain_id: int

    @property
    def samples(self) -> np.ndarray:
        return self.draws[self.warmup :]

    @property
    def acceptance_rate(self) -> float:
        return float(np.mean(self.accepted[self.warmup :]))


def chain_seeds(seed: int, n_chains: int) -> list[np.random.SeedSequence]:
    """Independent RNG streams: chain i uses ``SeedSequence(seed).spawn(n)[i]``."""
    return np.random.SeedSequence(seed).spawn(n_chains)


def adaptive_metropolis(
    log_target: Callable[[np.ndarray], float],
    y0,
    n_iter: int,
    n_warmup: int,
    rng: np.random.Generator,
    cov0=None,
    adapt_every: int = 25,
):
    """Adaptive random-walk Metropolis on R^d.

    During warm-up the proposal covariance is ``lam * 2.38^2 / d * S`` with
    ``S`` the empirical covariance of the second half of the draws so far
    and ``lam`` driven towards acceptance 0.234 (0.44 when d = 1) by a
    Robbins-Monro recursion. Afterwards it is fixed.

    Returns ``(ys, log_posts, accepted)`` over all ``n_iter`` iterations.
    """
    y = np.array(y0, dtype=float)
    d = y.size
    target = 0.44 if d == 1 else 0.234
    base = 2.38**2 / d
    S = np.eye(d) * 0.1 if cov0 is None else np.array(cov0, dtype=float)
    lam = 1.0
    L = np.linalg.cholesky(base * S)
    lp = log_target(y)
    if not np.isfinite(lp):
        raise SamplerError("initial point has zero posterior density")
    ys = np.empty((n_iter, d))
    lps = np.empty(n_iter)
    acc = np.zeros(n_iter, dtype=bool)
    log_u = np.log(rng.uniform(size=n_iter))
    z = rng.standard_normal((n_iter, d))
    for i in range(n_iter):
        prop = y + L @ z[i]
        lp_prop = log_target(prop)
        log_ratio = lp_prop - lp
        if log_u[i] < log_ratio:
            y, lp = prop, lp_prop
            acc[i] = True
        ys[i] = y
        lps[i] = lp
        if i < n_warmup:
            a = math.exp(min(0.0, log_ratio)) if np.isfinite(log_ratio) else 0.0
            lam *= math.exp((i + 1) ** -0.6 * (a - target))
            if (i + 1) % adapt_every == 0 and i + 1 >= 4 * d:
                hist = ys[(i + 1) // 2 : i + 1]
                if len(hist) > 2 * d:
                    S = np.atleast_2d(np.cov(hist, rowvar=False)) + 1e-10 * np.eye(d)
            try:
                L = np.linalg.cholesky(lam * base * S)
            except np.linalg.LinAlgError:
                S = S + 1e-6 * np.eye(d)
                L = np.linalg.cholesky(lam * base * S)
    return ys, lps, acc


def find_mode(posterior: Posterior, y0=None):
    """Maximum of the unconstrained log posterior and a covariance guess."""
    y0 = np.zeros(posterior.dim) if y0 is None else np.asarray(y0, dtype=float)

    def nlp(y):
        v = posterior(y)
        return 1e300 if not np.isfinite(v) else -v

    res = optimize.minimize(nlp, y0, jac=lambda y: -posterior.gradient(y), method="BFGS")
    cov = np.atleast_2d(res.hess_inv)
    cov = 0.5 * (cov + cov.T)
    try:
        np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        cov = np.eye(posterior.dim) * 0.1
    return res.x, cov


def _degenerate_parameter(names, x, lo, hi) -> str:
    rel = np.minimum(x - lo, hi - x) / (hi - lo)
    return names[int(np.argmin(rel))]


def sample_posterior(
    ctx: LikelihoodContext,
    prior: PriorSpec | None = None,
    n_chains: int = 4,
    n_iter: int = 5000,
    n_warmup: int = 2500,
    seed: int = 0,
    names=None,
    likelihood: bool = True,
) -> list[Chain]:
    """Run independent adaptive Metropolis chains on the approximate posterior.

    Chains start from the posterior mode jittered with twice the inverse
    Hessian; chain ``i`` draws from stream ``i`` of :func:`chain_seeds`.
    ``likelihood=False`` samples the prior alone.
    """
    if n_chains < 2:
        raise ValueError("need at least two chains")
    if not n_iter > n_warmup >= 100:
        raise ValueError("need n_iter > n_warmup >= 100")
    prior = prior or PriorSpec()
    post = Posterior(ctx, prior, names=names, likelihood=likelihood)
    mode, cov = find_mode(post)
    jitter = np.linalg.cholesky(2.0 * cov)
    chains = []
    for cid, ss in enumerate(chain_seeds(seed, n_chains)):
        rng = np.random.default_rng(ss)
        for _ in range(100):
            y0 = mode + jitter @ rng.standard_normal(post.dim)
            if np.isfinite(post(y0)):
                break
        else:
            y0 = mode
        ys, lps, acc = adaptive_metropolis(post, y0, n_iter, n_warmup, rng, cov0=cov)
        xs = post.constrain(ys)
        if acc[:n_warmup].mean() < 1e-3:
            bad = _degenerate_parameter(post.names, xs[n_warmup - 1], post.lo, post.hi)
            raise SamplerError(f"chain {cid} rejected every warm-up proposal; check parameter {bad!r}")
        chains.append(Chain(post.names, xs, lps, acc, n_warmup, seed, cid))
        log.info("chain %d acceptance %.3f", cid, chains[-1].acceptance_rate)
    return chains


@dataclass(frozen=True)
class ParamSummary:
    median: float
    q025: float
    q975: float
    ess: float
    rhat: float

    def as_dict(self) -> dict:
        return {"median": self.median, "q025": self.q025, "q975": self.q975, "ess": self.ess, "rhat": self.rhat}


@dataclass(frozen=True)
class PosteriorSummary:
    params: dict

    def __getitem__(self, name) -> ParamSummary:
        return self.params[name]

    def as_dict(self) -> dict:
        return {k: v.as_dict() for k, v in self.params.items()}

    @classmethod
    def from_dict(cls, d: dict) -> "PosteriorSummary":
        return cls({k: ParamSummary(**v) for k, v in d.items()})

    def table_rows(self) -> list[str]:
        """Parameters shown in the printed table, in row order.

        The equi-volatility intercept is a nuisance and is left out.
        """
        return [n for n in ROW_ORDER if n in self.params]

    def format_table(self, title: str = "") -> str:
        lines = [title] if title else []
        lines.append(f"{'param':>6} {'median':>10} {'2.5%':>10} {'97.5%':>10} {'ess':>8} {'rhat':>7}")
        for n in self.table_rows():
            p = self.params[n]
            lines.append(f"{n:>6} {p.median:10.4f} {p.q025:10.4f} {p.q975:10.4f} {p.ess:8.1f} {p.rhat:7.3f}")
        return "\n".join(lines)


def summarize(chains: list[Chain]) -> PosteriorSummary:
    """Pooled type-7 quantiles, split R-hat and ESS of post-warm-up draws."""
    if len(chains) < 2:
        raise ValueError("summaries need at least two chains")
    names = chains[0].names
    stacked = np.stack([c.samples for c in chains])  # (chains, draws, params)
    out = {}
    for j, name in enumerate(names):
        d = stacked[:, :, j]
        q025, med, q975 = diagnostics.quantiles(d.ravel())
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            rhat = diagnostics.split_rhat(d)
            ess = diagnostics.effective_sample_size(d)
        out[name] = ParamSummary(float(med), float(q025), float(q975), ess, rhat)
    return PosteriorSummary(out)


__all__ = [
    "FULL_PARAMS",
    "Chain",
    "IdentifiabilityError",
    "PosteriorSummary",
    "PriorSpec",
    "SamplerError",
    "adaptive_metropolis",
    "sample_posterior",
    "summarize",
    "to_constrained",
    "to_unconstrained",
]
