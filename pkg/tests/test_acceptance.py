"""Exit criteria. Each test records one PASS/FAIL line in the terminal summary."""

import math
import time

import numpy as np
import pytest
from scipy import stats

from conftest import record
from svfourier.cli import EXIT_OK, run
from svfourier.inference import IdentifiabilityError, Posterior, PriorSpec, sample_posterior, summarize
from svfourier.likelihood import (
    LikelihoodContext,
    conditional_moments,
    log_likelihood,
    log_likelihood_gradient,
    params_to_vector,
    standardized_residuals,
)
from svfourier.models import REFERENCE_THETA, Theta, make_expou, make_heston
from svfourier.simulate import PathSample, SimConfig, redraw_price_increments, simulate
from svfourier.spotvol import EstimatorConfig, estimate_spot_vol, rho_h_cos

pytestmark = pytest.mark.acceptance

HESTON_SEEDS = (0, 1, 2)
EXPOU_SEED = 0


def _check(criterion, passed, detail):
    record(criterion, passed, detail)
    assert passed, detail


def _relative_rmse(est, path):
    v = path.v_true[est.grid_index]
    return float(np.sqrt(np.mean((est.v_hat - v) ** 2)) / np.sqrt(np.mean(v**2)))


def test_c1_rho_h_identity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    z = rng.standard_normal(10**6)
    errs = {x: abs(np.mean(np.cos(math.sqrt(x) * z)) - math.exp(-x / 2)) for x in (0.5, 1.0, 1.7)}
    exact = all(rho_h_cos(x) == np.exp(-x / 2) for x in errs)
    elapsed = time.perf_counter() - t0
    ok = exact and max(errs.values()) <= 4e-3 and elapsed < 1.0
    _check("1 rho_h identity", ok, f"max MC error {max(errs.values()):.2e} (<= 4e-3), {elapsed:.2f}s")


def test_c2_conditional_gaussian_law(heston_desk):
    t0 = time.perf_counter()
    model, path, idx = heston_desk.model, heston_desk.path, heston_desk.estimate.grid_index
    th = REFERENCE_THETA
    k = next(j for j in range(len(idx) - 1) if np.all(path.v_true[idx[j] : idx[j + 1] + 1] > 0))
    v = path.v_true[idx[k] : idx[k + 1] + 1]
    draws = redraw_price_increments(model, th, v, 1.0 / path.n, 5000, np.random.default_rng(2))
    mean, var = conditional_moments(heston_desk.true_ctx, th, k + 1)
    n = len(draws)
    z_mean = (draws.mean() - mean) / math.sqrt(var / n)
    z_var = (draws.var(ddof=1) - var) / (var * math.sqrt(2 / (n - 1)))
    elapsed = time.perf_counter() - t0
    ok = abs(z_mean) <= 4 and abs(z_var) <= 4 and elapsed < 30
    _check("2 conditional Gaussian law", ok, f"interval {k + 1}: mean z={z_mean:.2f}, variance z={z_var:.2f}, {elapsed:.2f}s")


def test_c3_spot_vol_recovery():
    t0 = time.perf_counter()
    model = make_heston()
    full = simulate(model, SimConfig(n=2**19, seed=0))
    errors = {}
    for n, N in ((2**13, 2**6), (2**15, 2**7), (2**17, 2**8), (2**19, 2**9)):
        step = 2**19 // n
        sub = PathSample.from_arrays(full.times[::step], full.x[::step], full.v_true[::step])
        errors[(n, N)] = _relative_rmse(estimate_spot_vol(sub, model, EstimatorConfig(N=N)), sub)
    desk = errors[(2**17, 2**8)]
    rises = int(np.sum(np.diff(list(errors.values())) >= 0))
    elapsed = time.perf_counter() - t0
    ok = desk <= 0.25 and rises <= 1 and elapsed < 120
    ladder = ", ".join(f"{e:.3f}" for e in errors.values())
    _check("3 spot-vol recovery", ok, f"desk relative RMSE {desk:.3f} (<= 0.25); ladder {ladder}; {elapsed:.1f}s")


def test_c4_qq_agreement(heston_desk):
    t0 = time.perf_counter()
    eps_hat = np.sort(standardized_residuals(heston_desk.ctx, REFERENCE_THETA))
    eps = np.sort(standardized_residuals(heston_desk.true_ctx, REFERENCE_THETA))
    slope = float(np.polyfit(eps, eps_hat, 1)[0])
    ks = float(stats.kstest(eps, "norm").statistic)
    crit = 1.36 / math.sqrt(len(eps))
    elapsed = time.perf_counter() - t0
    ok = 0.9 <= slope <= 1.1 and ks < crit and elapsed < 60
    _check("4 QQ agreement", ok, f"slope {slope:.3f}, KS {ks:.4f} < {crit:.4f}, {elapsed:.2f}s")


@pytest.mark.slow
def test_c5_heston_posterior():
    t0 = time.perf_counter()
    model = make_heston()
    parts, ok = [], True
    for seed in HESTON_SEEDS:
        path = simulate(model, SimConfig(n=2**17, seed=seed))
        est = estimate_spot_vol(path, model, EstimatorConfig(N=2**8))
        s = summarize(sample_posterior(LikelihoodContext.from_estimate(path, est, model), seed=seed))
        rho, xi, kappa = s["rho"], s["xi"], s["kappa"]
        ok &= rho.q025 <= -0.3 <= rho.q975 and not (rho.q025 <= 0.3 <= rho.q975)
        ok &= abs(rho.median + 0.3) <= 0.15
        ok &= xi.q025 <= 0.5 <= xi.q975 and kappa.q025 <= 5.0 <= kappa.q975
        parts.append(f"seed {seed}: rho {rho.median:.3f} [{rho.q025:.3f}, {rho.q975:.3f}], xi [{xi.q025:.2f}, {xi.q975:.2f}], kappa [{kappa.q025:.2f}, {kappa.q975:.1f}]")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 600 * len(HESTON_SEEDS)
    _check("5 Heston posterior", ok, "; ".join(parts) + f"; {elapsed:.1f}s")


@pytest.mark.slow
def test_c6_expou_posterior():
    t0 = time.perf_counter()
    model = make_expou()
    path = simulate(model, SimConfig(n=2**17, seed=EXPOU_SEED))
    est = estimate_spot_vol(path, model, EstimatorConfig(N=2**8))
    prior = PriorSpec()
    chains = sample_posterior(LikelihoodContext.from_estimate(path, est, model), prior, seed=EXPOU_SEED)
    s = summarize(chains)
    rho = s["rho"]
    names = chains[0].names
    pooled = np.vstack([c.samples for c in chains])
    ks = {}
    for p in ("m", "mu"):
        lo, hi = prior.bounds[p]
        ks[p] = float(stats.kstest(pooled[:, names.index(p)], stats.uniform(lo, hi - lo).cdf).statistic)
    covers = rho.q025 <= -0.3 <= rho.q975 and rho.q025 <= 0.01 and rho.q975 >= -0.42
    elapsed = time.perf_counter() - t0
    ok = covers and max(ks.values()) < 0.25 and elapsed < 600
    _check(
        "6 exp-OU posterior",
        ok,
        f"rho [{rho.q025:.3f}, {rho.q975:.3f}]; KS to prior m {ks['m']:.3f}, mu {ks['mu']:.3f} (< 0.25); {elapsed:.1f}s",
    )


def test_c7_identifiability(heston_desk):
    t0 = time.perf_counter()
    ctx = heston_desk.ctx
    rng = np.random.default_rng(7)
    worst_inv = worst_null = 0.0
    for _ in range(20):
        th = Theta(rng.uniform(-0.5, 0.5), rng.uniform(0.5, 20), rng.uniform(0, 0.5), rng.uniform(-0.9, 0.9), rng.uniform(0.2, 3))
        delta = rng.uniform(-2, 2)
        shifted = Theta(th.mu + th.kappa * th.rho * delta / th.xi, th.kappa, th.m + delta, th.rho, th.xi)
        a = log_likelihood(ctx, th)
        worst_inv = max(worst_inv, abs(a - log_likelihood(ctx, shifted)) / max(1.0, abs(a)))
        g = log_likelihood_gradient(ctx, th)
        d = np.array([th.kappa * th.rho / th.xi, 0.0, 1.0, 0.0, 0.0])
        worst_null = max(worst_null, abs(g @ d) / max(1.0, np.abs(g).max()))
    try:
        Posterior(ctx, PriorSpec(), names=("mu", "kappa", "m", "rho", "xi"))
        rejected = False
    except IdentifiabilityError:
        rejected = True
    elapsed = time.perf_counter() - t0
    ok = worst_inv <= 1e-10 and worst_null <= 1e-8 and rejected and elapsed < 5
    _check("7 identifiability", ok, f"invariance {worst_inv:.1e}, null direction {worst_null:.1e}, rejection {rejected}, {elapsed:.2f}s")


def test_c8_gradient(heston_desk, expou_desk):
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    worst = 0.0
    for i in range(50):
        ctx = (heston_desk if i % 2 else expou_desk).ctx
        th = Theta(rng.uniform(-0.5, 0.5), rng.uniform(0.5, 20), rng.uniform(0, 0.5), rng.uniform(-0.9, 0.9), rng.uniform(0.2, 3))
        x = params_to_vector(th)
        g = log_likelihood_gradient(ctx, th)
        for j in range(5):
            e = np.zeros(5)
            e[j] = 1e-6
            fd = (log_likelihood(ctx, Theta(*(x + e))) - log_likelihood(ctx, Theta(*(x - e)))) / 2e-6
            worst = max(worst, abs(g[j] - fd) / max(abs(g[j]), 1.0))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-5 and elapsed < 10
    _check("8 gradient", ok, f"max relative error {worst:.1e} over 50 points, {elapsed:.2f}s")


@pytest.mark.slow
def test_c9_determinism(tmp_path):
    t0 = time.perf_counter()
    cfg = tmp_path / "run.cfg"
    cfg.write_text("simulation.n = 131072\nestimator.N = 256\n")
    for d in ("a", "b"):
        out = tmp_path / d
        common = ["--config", str(cfg), "--out", str(out)]
        files = ["--prices", str(out / "path.csv"), "--estimate", str(out / "spotvol.csv")]
        codes = [
            run(["simulate", *common, "--seed", "5"]),
            run(["spotvol", *common, "--prices", str(out / "path.csv")]),
            run(["infer", *common, "--seed", "5", *files]),
            run(["qq", *common, *files]),
        ]
        assert codes == [EXIT_OK] * 4
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    same = [(tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes() for f in names]
    elapsed = time.perf_counter() - t0
    _check("9 determinism", all(same) and len(names) == 8, f"{sum(same)}/{len(names)} artifacts byte-identical, {elapsed:.1f}s")
