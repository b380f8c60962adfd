import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from svfourier.models import (
    Identifiability,
    REFERENCE_THETA,
    Theta,
    get_model,
    make_equivol,
    make_expou,
    make_heston,
    phi_equivol,
    phi_expou,
    phi_generic,
)

thetas = st.builds(
    Theta,
    mu=st.floats(-1, 1),
    kappa=st.floats(0.01, 100),
    m=st.floats(-1, 1),
    rho=st.floats(-1, 1),
    xi=st.floats(0.01, 5),
)


def test_theta_range_checks():
    with pytest.raises(ValueError):
        Theta(0, 0.0, 0.02, -0.3, 0.5)
    with pytest.raises(ValueError):
        Theta(0, 5, 0.02, -0.3, 0.0)
    with pytest.raises(ValueError):
        Theta(0, 5, 0.02, -1.01, 0.5)
    Theta(0, 5, 0.02, 1.0, 0.5)


def test_phi_equivol_examples():
    assert phi_equivol(0.09, Theta(0, 5, 0.02, 0.0, 0.5)) == 0.0
    # -(5 * -0.3 * 0.02) / 0.5 = 0.06, then slope 5 * -0.3 / 0.5 = -3
    assert phi_equivol(0.0, REFERENCE_THETA) == pytest.approx(0.06, abs=1e-15)
    assert phi_equivol(0.1, REFERENCE_THETA) == pytest.approx(-0.24, abs=1e-15)


def test_phi_expou_examples():
    assert phi_expou(0.0, Theta(0.3, 5, 0.02, 0.0, 0.5)) == 0.3
    assert phi_expou(0.0, REFERENCE_THETA) == pytest.approx(0.06, abs=1e-15)
    assert phi_expou(0.02, REFERENCE_THETA) == pytest.approx(0.0, abs=1e-15)


def test_phi_expou_overflow_is_not_an_error():
    assert not np.isfinite(phi_expou(1000.0, REFERENCE_THETA))


def test_heston_functions():
    h = make_heston()
    assert h.f(0.09) == pytest.approx(0.3, rel=1e-15)
    assert h.f_inverse(0.3) == pytest.approx(0.09, rel=1e-15)
    assert h.fg_ratio(0.37) == 1.0
    assert h.identifiability is Identifiability.EQUI_VOLATILITY
    with pytest.raises(ValueError):
        h.f(0.0)
    with pytest.raises(ValueError):
        h.f(np.array([0.1, -0.2]))


def test_expou_functions():
    e = make_expou()
    assert e.f(0.0) == 1.0
    assert e.f_inverse(1.0) == 0.0
    assert e.identifiability is Identifiability.FULLY_SEPARATED
    assert e.in_support(-3.0)


@pytest.mark.parametrize("model", [make_heston(), make_expou()], ids=lambda m: m.name)
def test_round_trip_on_support_grid(model):
    v = model.support_grid(1000)
    back = model.f_inverse(model.f(v))
    assert np.all(np.abs(back - v) <= 1e-12 * np.maximum(1.0, np.abs(v)))


@pytest.mark.parametrize("model", [make_heston(), make_expou()], ids=lambda m: m.name)
def test_f_and_g_positive_on_support(model):
    v = model.support_grid(1000)
    assert np.all(model.f(v) > 0)
    assert np.all(model.g(v) > 0)


@pytest.mark.parametrize("model", [make_heston(), make_expou()], ids=lambda m: m.name)
def test_phi_matches_generic_form(model):
    rng = np.random.default_rng(3)
    for _ in range(100):
        th = Theta(rng.uniform(-1, 1), rng.uniform(0.1, 20), rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.1, 5))
        v = rng.uniform(0.001, 1.0) if model.name == "heston" else rng.uniform(-2, 2)
        assert model.phi(v, th) == pytest.approx(phi_generic(v, th, model.fg_ratio), abs=1e-12)


@settings(max_examples=200)
@given(theta=thetas, v=st.floats(-5, 5))
def test_rho_zero_collapses_phi_to_mu(theta, v):
    th = Theta(theta.mu, theta.kappa, theta.m, 0.0, theta.xi)
    assert phi_equivol(v, th) == th.mu
    assert phi_expou(v, th) == th.mu


@given(theta=thetas)
def test_alpha_is_equivol_intercept(theta):
    assert phi_equivol(0.0, theta) == pytest.approx(theta.alpha, abs=1e-9 * (1 + abs(theta.alpha)))


def test_generic_equivol_constructor():
    model = make_equivol(f=lambda v: 2 * np.sqrt(v), f_inverse=lambda y: (np.asarray(y) / 2) ** 2, name="scaled")
    assert model.fg_ratio(0.5) == 1.0
    assert model.f_inverse(model.f(0.25)) == pytest.approx(0.25)
    assert model.identifiability is Identifiability.EQUI_VOLATILITY


def test_registry():
    assert get_model("Heston").name == "heston"
    assert get_model("expou").name == "expou"
    with pytest.raises(ValueError, match="unknown model"):
        get_model("sabr")


def test_theta_dict_round_trip():
    assert Theta.from_dict(REFERENCE_THETA.as_dict()) == REFERENCE_THETA
    assert REFERENCE_THETA.alpha == pytest.approx(0.06)
    assert math.isclose(REFERENCE_THETA.alpha, 0.0 - 5 * -0.3 * 0.02 / 0.5)
