"""CSV and JSON interchange.

Numbers are written with 17 significant digits so that reading a file
back reproduces the arrays exactly.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .inference import Chain, PosteriorSummary
from .simulate import PathSample
from .spotvol import CLAMP_EPS, SpotVolEstimate, TestFunction

FMT = "%.17g"


def write_columns(path, header: list[str], columns: list[np.ndarray], fmt=None) -> None:
    data = np.column_stack(columns)
    fmt = fmt or [FMT] * len(header)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        np.savetxt(fh, data, fmt=fmt, delimiter=",")


def _read_columns(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        header = next(csv.reader(fh))
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.shape[1] != len(header):
        raise ValueError(f"{path}: header has {len(header)} columns, rows have {data.shape[1]}")
    return {name.strip(): data[:, j] for j, name in enumerate(header)}


def write_path(path, sample: PathSample) -> None:
    cols = [sample.times, sample.x]
    header = ["t", "x"]
    if sample.v_true is not None:
        cols.append(sample.v_true)
        header.append("v")
    write_columns(path, header, cols)


def read_path(path) -> PathSample:
    cols = _read_columns(path)
    if "t" not in cols or "x" not in cols:
        raise ValueError(f"{path}: expected columns t,x[,v]")
    return PathSample.from_arrays(cols["t"], cols["x"], cols.get("v"))


def write_estimate(path, est: SpotVolEstimate, v_true=None) -> None:
    header = ["t_k", "v_hat", "rho_h_raw", "clamped"]
    cols = [est.t_grid, est.v_hat, est.rho_h_raw, est.clamped.astype(float)]
    fmt = [FMT, FMT, FMT, "%d"]
    if v_true is not None:
        header.append("v_true")
        cols.append(np.asarray(v_true, dtype=float))
        fmt.append(FMT)
    write_columns(path, header, cols, fmt)
    write_json(Path(path).with_suffix(".json"), est.sidecar())


def read_estimate(path, n: int | None = None) -> SpotVolEstimate:
    """Read an estimate CSV and its JSON sidecar (same stem, ``.json``)."""
    cols = _read_columns(path)
    meta = read_json(Path(path).with_suffix(".json"))
    n = int(meta["n"]) if n is None else n
    t = cols["t_k"]
    rho_raw = cols["rho_h_raw"]
    idx = np.rint(t * n).astype(np.int64)
    if np.max(np.abs(idx / n - t)) > 1e-9:
        raise ValueError(f"{path}: grid times are not multiples of 1/n")
    clamped = cols["clamped"].astype(bool)
    h = TestFunction(meta["h"])
    rho = np.where(rho_raw <= 0, CLAMP_EPS, np.minimum(rho_raw, h.rho_max))
    return SpotVolEstimate(
        t_grid=t,
        grid_index=idx,
        v_hat=cols["v_hat"],
        rho_h_raw=rho_raw,
        rho_h_curve=rho,
        clamped=clamped,
        n=n,
        N=int(meta["N"]),
        h=h,
    )


def write_chains(path, chains: list[Chain]) -> None:
    """Post-warm-up draws as ``chain,iter,<params>,log_post``."""
    names = list(chains[0].names)
    rows = []
    for c in chains:
        it = np.arange(c.warmup, len(c.draws))
        rows.append(np.column_stack([np.full(len(it), c.chain_id), it, c.samples, c.log_posts[c.warmup :]]))
    fmt = ["%d", "%d"] + [FMT] * (len(names) + 1)
    write_columns(path, ["chain", "iter", *names, "log_post"], [np.vstack(rows)], fmt)


def read_chains(path) -> dict[str, np.ndarray]:
    return _read_columns(path)


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    return obj


def write_json(path, obj) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())


def write_summary(path, summary: PosteriorSummary) -> None:
    write_json(path, summary.as_dict())


def read_summary(path) -> PosteriorSummary:
    d = read_json(path)
    return PosteriorSummary.from_dict(
        {k: {f: (float("nan") if val is None else val) for f, val in v.items()} for k, v in d.items()}
    )
