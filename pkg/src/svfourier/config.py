"""Run configuration: flat ``section.key = value`` text files.

Unknown keys are rejected; anything missing takes the reference-experiment
default. Example::

    model.name = heston
    simulation.n = 131072
    estimator.N = 256
    prior.kappa = 0, 50
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .models import REFERENCE_THETA, REFERENCE_V0, Theta, get_model
from .spotvol import SNAP_TOLERANCE


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    model: str = "heston"
    T: float = 1.0
    n: int = 2**19
    sim_seed: int = 0
    x0: float = 0.0
    v0: float = REFERENCE_V0
    theta: Theta = REFERENCE_THETA
    N: int = 2**9
    h: str = "cos"
    snap_tolerance: float = SNAP_TOLERANCE
    chains: int = 4
    iters: int = 5000
    warmup: int = 2500
    infer_seed: int = 0
    params: tuple | None = None
    prior: dict = field(default_factory=dict)
    output_dir: str = "out"

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, sim_seed=seed, infer_seed=seed)

    def to_flat(self) -> dict:
        """Flat ``section.key -> value`` mapping accepted by :func:`parse_config`."""
        d = {
            "model.name": self.model,
            "simulation.T": self.T,
            "simulation.n": self.n,
            "simulation.seed": self.sim_seed,
            "simulation.x0": self.x0,
            "simulation.v0": self.v0,
        }
        d.update({f"simulation.{k}": v for k, v in self.theta.as_dict().items()})
        d.update(
            {
                "estimator.N": self.N,
                "estimator.h": self.h,
                "estimator.snap_tolerance": self.snap_tolerance,
                "inference.chains": self.chains,
                "inference.iters": self.iters,
                "inference.warmup": self.warmup,
                "inference.seed": self.infer_seed,
            }
        )
        if self.params is not None:
            d["inference.params"] = ",".join(self.params)
        d.update({f"prior.{k}": f"{lo!r}, {hi!r}" for k, (lo, hi) in sorted(self.prior.items())})
        d["output.dir"] = self.output_dir
        return d

    def to_text(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.to_flat().items())


_THETA_KEYS = ("mu", "kappa", "m", "rho", "xi")
_PRIOR_KEYS = ("rho", "xi", "kappa", "m", "mu", "alpha")

_SCALARS = {
    "model.name": ("model", str),
    "simulation.T": ("T", float),
    "simulation.n": ("n", int),
    "simulation.seed": ("sim_seed", int),
    "simulation.x0": ("x0", float),
    "simulation.v0": ("v0", float),
    "estimator.N": ("N", int),
    "estimator.h": ("h", str),
    "estimator.snap_tolerance": ("snap_tolerance", float),
    "inference.chains": ("chains", int),
    "inference.iters": ("iters", int),
    "inference.warmup": ("warmup", int),
    "inference.seed": ("infer_seed", int),
    "output.dir": ("output_dir", str),
}


def _as_int(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        value = float(text)
    if value != int(value):
        raise ValueError(f"{text!r} is not an integer")
    return int(value)


def parse_config(items) -> RunConfig:
    """Build a config from ``key = value`` lines or an already-flat mapping."""
    if isinstance(items, str):
        pairs = []
        for lineno, raw in enumerate(items.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'section.key = value'")
            k, v = line.split("=", 1)
            pairs.append((k.strip(), v.strip()))
    else:
        pairs = [(k, str(v)) for k, v in dict(items).items()]

    kw: dict = {}
    theta = REFERENCE_THETA.as_dict()
    prior: dict = {}
    seen = set()
    for key, value in pairs:
        if key in seen:
            raise ConfigError(f"duplicate key {key!r}")
        seen.add(key)
        try:
            if key in _SCALARS:
                attr, typ = _SCALARS[key]
                kw[attr] = _as_int(value) if typ is int else typ(value)
            elif key.startswith("simulation.") and key.split(".", 1)[1] in _THETA_KEYS:
                theta[key.split(".", 1)[1]] = float(value)
            elif key.startswith("prior.") and key.split(".", 1)[1] in _PRIOR_KEYS:
                lo, hi = (float(p) for p in value.replace(",", " ").split())
                prior[key.split(".", 1)[1]] = (lo, hi)
            elif key == "inference.params":
                kw["params"] = tuple(p.strip() for p in value.split(",") if p.strip())
            else:
                raise ConfigError(f"unknown configuration key {key!r}")
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}") from None
    try:
        cfg = RunConfig(theta=Theta(**theta), prior=prior, **kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if cfg.h != "cos":
        raise ConfigError(f"unsupported test function {cfg.h!r}")
    try:
        get_model(cfg.model)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def load_config(path) -> RunConfig:
    """Read a text config, or the ``config`` block of a JSON manifest."""
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        return parse_config(json.loads(text)["config"])
    return parse_config(text)
