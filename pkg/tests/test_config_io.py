import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from svfourier import io
from svfourier.config import ConfigError, RunConfig, load_config, parse_config
from svfourier.inference import sample_posterior, summarize
from svfourier.models import REFERENCE_THETA, make_heston
from svfourier.simulate import SimConfig, simulate


def test_defaults_are_reference_experiment():
    cfg = parse_config("")
    assert cfg == RunConfig()
    assert cfg.n == 2**19 and cfg.N == 2**9 and cfg.theta == REFERENCE_THETA and cfg.v0 == 0.09


def test_parse_values_and_comments():
    cfg = parse_config(
        """
        # a comment
        model.name = expou
        simulation.n = 1024      # trailing
        simulation.rho = -0.5
        estimator.N = 16
        inference.params = mu, kappa, m, rho, xi
        prior.kappa = 0, 50
        output.dir = runs/a
        """
    )
    assert cfg.model == "expou" and cfg.n == 1024 and cfg.theta.rho == -0.5 and cfg.N == 16
    assert cfg.params == ("mu", "kappa", "m", "rho", "xi")
    assert cfg.prior == {"kappa": (0.0, 50.0)}
    assert cfg.output_dir == "runs/a"


@pytest.mark.parametrize(
    "text",
    [
        "simulation.nn = 5",
        "model.name = sabr",
        "estimator.h = sin",
        "simulation.n = 1.5",
        "simulation.xi = -1",
        "prior.kappa = 3",
        "simulation.n = 4\nsimulation.n = 8",
        "just words",
    ],
)
def test_bad_config_rejected(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_flat_round_trip(tmp_path):
    cfg = RunConfig(model="expou", n=4096, N=32, prior={"xi": (0.0, 2.0)}, params=("mu", "kappa", "m", "rho", "xi"))
    assert parse_config(cfg.to_text()) == cfg
    assert parse_config(cfg.to_flat()) == cfg
    io.write_json(tmp_path / "m.json", {"config": cfg.to_flat()})
    assert load_config(tmp_path / "m.json") == cfg
    (tmp_path / "c.txt").write_text(cfg.to_text())
    assert load_config(tmp_path / "c.txt") == cfg


def test_with_seed():
    cfg = RunConfig().with_seed(9)
    assert cfg.sim_seed == 9 and cfg.infer_seed == 9


def test_path_round_trip(tmp_path):
    sample = simulate(make_heston(), SimConfig(n=256, seed=1))
    io.write_path(tmp_path / "p.csv", sample)
    back = io.read_path(tmp_path / "p.csv")
    assert back.n == 256
    assert np.array_equal(back.x, sample.x) and np.array_equal(back.v_true, sample.v_true)
    assert np.array_equal(back.times, sample.times)


@settings(max_examples=30)
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=2, max_size=20))
def test_seventeen_digits_round_trip(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("cols") / "c.csv"
    a = np.array(values)
    io.write_columns(path, ["a"], [a])
    assert np.array_equal(io._read_columns(path)["a"], a)


def test_estimate_round_trip(tmp_path, heston_small):
    est = heston_small.estimate
    io.write_estimate(tmp_path / "e.csv", est)
    back = io.read_estimate(tmp_path / "e.csv")
    assert back.n == est.n and back.N == est.N and back.h == est.h
    for name in ("t_grid", "grid_index", "v_hat", "rho_h_raw", "rho_h_curve", "clamped"):
        assert np.array_equal(getattr(back, name), getattr(est, name)), name


def test_chain_and_summary_round_trip(tmp_path, heston_small):
    chains = sample_posterior(heston_small.ctx, n_chains=2, n_iter=400, n_warmup=200, seed=0)
    io.write_chains(tmp_path / "c.csv", chains)
    cols = io.read_chains(tmp_path / "c.csv")
    assert list(cols) == ["chain", "iter", *chains[0].names, "log_post"]
    assert len(cols["chain"]) == 2 * 200
    assert np.array_equal(cols["rho"][:200], chains[0].samples[:, chains[0].names.index("rho")])
    s = summarize(chains)
    io.write_summary(tmp_path / "s.json", s)
    assert io.read_summary(tmp_path / "s.json") == s


def test_json_writes_nan_as_null(tmp_path):
    io.write_json(tmp_path / "x.json", {"a": math.nan, "b": [1.0, math.inf], "c": np.float64(2.5)})
    assert io.read_json(tmp_path / "x.json") == {"a": None, "b": [1.0, None], "c": 2.5}


def test_malformed_csv(tmp_path):
    (tmp_path / "bad.csv").write_text("t,x\n0,1,2\n")
    with pytest.raises(ValueError):
        io.read_path(tmp_path / "bad.csv")
    (tmp_path / "nox.csv").write_text("t,y\n0,1\n1,2\n")
    with pytest.raises(ValueError):
        io.read_path(tmp_path / "nox.csv")
