"""Shared pieces of the experiment scripts."""

from __future__ import annotations

import argparse
import time

from svfourier import io
from svfourier.inference import PriorSpec, sample_posterior, summarize
from svfourier.likelihood import LikelihoodContext
from svfourier.models import REFERENCE_THETA, get_model
from svfourier.simulate import SimConfig, simulate
from svfourier.spotvol import EstimatorConfig, estimate_spot_vol


def parser(description: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--n", type=int, default=2**17, help="observations per unit time")
    p.add_argument("--N", type=int, default=2**8, help="Fourier cutoff")
    p.add_argument("--seeds", type=int, nargs="+", default=[0])
    p.add_argument("--iters", type=int, default=5000)
    p.add_argument("--warmup", type=int, default=2500)
    p.add_argument("--chains", type=int, default=4)
    p.add_argument("--out", default=None, help="directory for per-seed chains and summaries")
    return p


def run_experiment(model_name: str, args) -> list:
    model = get_model(model_name)
    summaries = []
    for seed in args.seeds:
        t0 = time.perf_counter()
        path = simulate(model, SimConfig(n=args.n, seed=seed))
        est = estimate_spot_vol(path, model, EstimatorConfig(N=args.N))
        ctx = LikelihoodContext.from_estimate(path, est, model)
        chains = sample_posterior(
            ctx, PriorSpec(), n_chains=args.chains, n_iter=args.iters, n_warmup=args.warmup, seed=seed
        )
        s = summarize(chains)
        summaries.append(s)
        print(s.format_table(f"{model_name}, seed {seed} ({time.perf_counter() - t0:.1f}s, {est.clamped_count} clamped nodes)"))
        print()
        if args.out:
            io.write_chains(f"{args.out}/{model_name}_seed{seed}_chains.csv", chains)
            io.write_summary(f"{args.out}/{model_name}_seed{seed}_summary.json", s)
    print("truth:", {k: v for k, v in REFERENCE_THETA.as_dict().items()})
    return summaries
