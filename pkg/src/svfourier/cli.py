"""Command-line driver: simulate, spotvol, infer, qq, report.

Exit codes: 0 success, 1 I/O error, 2 configuration error, 3 grid
alignment error, 4 numerical failure, 5 sampler failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import warnings
from pathlib import Path

import numpy as np
from scipy import stats

from . import io
from .config import ConfigError, RunConfig, load_config
from .inference import IdentifiabilityError, PosteriorSummary, PriorSpec, SamplerError, sample_posterior, summarize
from .likelihood import LikelihoodContext, standardized_residuals
from .models import Theta, get_model
from .simulate import SimConfig, SimulationError, simulate
from .spotvol import AlignmentError, EstimatorConfig, estimate_spot_vol

EXIT_OK = 0
EXIT_IO = 1
EXIT_CONFIG = 2
EXIT_ALIGNMENT = 3
EXIT_NUMERIC = 4
EXIT_SAMPLER = 5

OUTPUT_ENV = "SVFOURIER_OUTPUT_DIR"

log = logging.getLogger("svfourier")


def output_dir(cfg: RunConfig, override: str | None = None) -> Path:
    return Path(override or os.environ.get(OUTPUT_ENV) or cfg.output_dir)


def cmd_simulate(cfg: RunConfig, out: Path) -> Path:
    """Simulate a path; writes ``path.csv`` and the manifest ``path.json``."""
    model = get_model(cfg.model)
    sim = SimConfig(T=cfg.T, n=cfg.n, x0=cfg.x0, v0=cfg.v0, theta=cfg.theta, seed=cfg.sim_seed)
    sample = simulate(model, sim)
    target = out / "path.csv"
    io.write_path(target, sample)
    io.write_json(out / "path.json", {"config": cfg.to_flat(), "rows": len(sample.times)})
    return target


def cmd_spotvol(cfg: RunConfig, prices: Path, out: Path) -> Path:
    model = get_model(cfg.model)
    sample = io.read_path(prices)
    est = estimate_spot_vol(sample, model, EstimatorConfig(N=cfg.N, h=cfg.h, T=sample.T, snap_tolerance=cfg.snap_tolerance))
    v_true = None if sample.v_true is None else sample.v_true[est.grid_index]
    target = out / "spotvol.csv"
    io.write_estimate(target, est, v_true=v_true)
    if est.clamped_count:
        log.warning("%d grid nodes needed clamping", est.clamped_count)
    return target


def _context(cfg: RunConfig, prices: Path, estimate: Path):
    model = get_model(cfg.model)
    sample = io.read_path(prices)
    est = io.read_estimate(estimate, n=sample.n)
    if est.grid_index[-1] >= len(sample.x):
        raise AlignmentError("estimate grid extends beyond the price path", [])
    return model, sample, est, LikelihoodContext.from_estimate(sample, est, model)


def cmd_infer(cfg: RunConfig, prices: Path, estimate: Path, out: Path) -> PosteriorSummary:
    _, _, _, ctx = _context(cfg, prices, estimate)
    chains = sample_posterior(
        ctx,
        PriorSpec(cfg.prior),
        n_chains=cfg.chains,
        n_iter=cfg.iters,
        n_warmup=cfg.warmup,
        seed=cfg.infer_seed,
        names=cfg.params,
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        summary = summarize(chains)
    io.write_chains(out / "chains.csv", chains)
    io.write_summary(out / "summary.json", summary)
    return summary


def cmd_qq(cfg: RunConfig, prices: Path, estimate: Path, out: Path, theta: Theta | None = None) -> dict:
    """Sorted standardized residuals under ``theta`` for QQ plots.

    When the price file carries the simulated latent path, the residuals
    with exact (fine-grid) integrals are written alongside.
    """
    theta = theta or cfg.theta
    model, sample, est, ctx = _context(cfg, prices, estimate)
    warn = []
    if 1.0 - theta.rho**2 < 0.01:
        warn.append(f"1 - rho^2 = {1 - theta.rho**2:.3g}: conditional variance is nearly degenerate")
    eps_hat = np.sort(standardized_residuals(ctx, theta))
    k = np.arange(1, len(eps_hat) + 1)
    info: dict = {"K": int(len(eps_hat)), "ks_eps_hat": float(stats.kstest(eps_hat, "norm").statistic), "warnings": warn}
    if sample.v_true is not None:
        true_ctx = LikelihoodContext.from_fine_path(sample, est.grid_index, model)
        eps = np.sort(standardized_residuals(true_ctx, theta))
        io.write_columns(out / "qq.csv", ["k", "eps_hat", "eps_true"], [k, eps_hat, eps], ["%d", io.FMT, io.FMT])
        info["slope"] = float(np.polyfit(eps, eps_hat, 1)[0])
        info["ks_eps_true"] = float(stats.kstest(eps, "norm").statistic)
    else:
        io.write_columns(out / "qq.csv", ["k", "eps_hat"], [k, eps_hat], ["%d", io.FMT])
    io.write_json(out / "qq.json", info)
    return info


def cmd_report(summaries: list[Path], labels: list[str] | None = None) -> str:
    """Side-by-side table of several summary JSON files."""
    labels = labels or [p.parent.name or p.stem for p in summaries]
    loaded = [io.read_summary(p) for p in summaries]
    params = []
    for s in loaded:
        params += [n for n in s.table_rows() if n not in params]
    head = f"{'param':>6}" + "".join(f" | {lab:^32}" for lab in labels)
    lines = [head, "-" * len(head)]
    for name in params:
        row = f"{name:>6}"
        for s in loaded:
            if name in s.params:
                p = s[name]
                row += f" | {p.median:9.4f} [{p.q025:9.4f}, {p.q975:9.4f}]"
            else:
                row += f" | {'-':^32}"
        lines.append(row)
    return "\n".join(lines)


def _parse_theta(text: str) -> Theta:
    parts = [float(p) for p in text.replace(",", " ").split()]
    if len(parts) != 5:
        raise ConfigError("--theta expects mu,kappa,m,rho,xi")
    return Theta(*parts)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="svfourier", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", type=Path, help="section.key = value file or a JSON manifest")
        sp.add_argument("--seed", type=int, help="override simulation and inference seeds")
        sp.add_argument("--out", help=f"output directory (else ${OUTPUT_ENV}, else output.dir)")

    common(sub.add_parser("simulate", help="simulate a price/variance path"))
    sp = sub.add_parser("spotvol", help="estimate the latent path from prices")
    common(sp)
    sp.add_argument("--prices", type=Path, required=True)
    for name in ("infer", "qq"):
        sp = sub.add_parser(name, help="posterior sampling" if name == "infer" else "QQ residual data")
        common(sp)
        sp.add_argument("--prices", type=Path, required=True)
        sp.add_argument("--estimate", type=Path, required=True)
        if name == "qq":
            sp.add_argument("--theta", help="mu,kappa,m,rho,xi (default: config values)")
    sp = sub.add_parser("report", help="compare summary JSON files")
    sp.add_argument("summaries", type=Path, nargs="+")
    sp.add_argument("--labels", help="comma-separated column labels")
    sp.add_argument("--out", type=Path, help="also write the table to this file")
    return p


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "report":
            labels = args.labels.split(",") if args.labels else None
            table = cmd_report(args.summaries, labels)
            print(table)
            if args.out:
                args.out.write_text(table + "\n")
            return EXIT_OK
        cfg = load_config(args.config) if args.config else RunConfig()
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
        out = output_dir(cfg, args.out)
        if args.command == "simulate":
            print(cmd_simulate(cfg, out))
        elif args.command == "spotvol":
            print(cmd_spotvol(cfg, args.prices, out))
        elif args.command == "infer":
            summary = cmd_infer(cfg, args.prices, args.estimate, out)
            print(summary.format_table(f"{cfg.model} posterior"))
        elif args.command == "qq":
            theta = _parse_theta(args.theta) if args.theta else None
            info = cmd_qq(cfg, args.prices, args.estimate, out, theta)
            print(" ".join(f"{k}={v}" for k, v in info.items() if k != "warnings"))
            for w in info["warnings"]:
                print(f"warning: {w}", file=sys.stderr)
    except AlignmentError as exc:
        print(f"alignment error: {exc}", file=sys.stderr)
        return EXIT_ALIGNMENT
    except (ConfigError, IdentifiabilityError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SamplerError as exc:
        print(f"sampler failure: {exc}", file=sys.stderr)
        return EXIT_SAMPLER
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (SimulationError, ValueError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
