import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from viraldyn.model import (
    COUNTEREXAMPLE,
    BASELINE,
    ModelParams,
    ModelVariant,
    State,
    beta_effective,
    initial_state,
    rhs_basic,
    rhs_latent,
    validate_params,
)

pos = st.floats(1e-3, 1e3)


def test_baseline_initial_state_defaults():
    s = initial_state(BASELINE)
    assert s.T == pytest.approx(1e6)
    assert (s.I, s.V, s.A, s.L) == (372.11, 994.84, 1.17, None)
    assert initial_state(BASELINE, ModelVariant.LATENT).L == 0.0


def test_state_rejects_negative_and_nan():
    with pytest.raises(ValueError):
        State(0.0, 1.0, -1e-3, 0.0, 0.0)
    with pytest.raises(ValueError):
        State(0.0, math.nan, 0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        State(math.inf, 1.0, 0.0, 0.0, 0.0)


def test_state_array_round_trip():
    s = State(2.5, 1.0, 2.0, 3.0, 4.0, 5.0)
    assert State.from_array(2.5, s.as_array()) == s
    assert s.variant is ModelVariant.LATENT


def test_validate_params_baseline_ok():
    rep = validate_params(BASELINE)
    assert rep.ok and rep.delta_above_mu and not rep.warnings


def test_validate_params_errors():
    rep = validate_params(BASELINE.replace(mu=-1.0))
    assert not rep.ok and rep.checks["positive:mu"] is False
    with pytest.raises(ValueError):
        rep.raise_if_failed()
    assert validate_params(BASELINE.replace(beta1=0.0)).ok
    assert not validate_params(BASELINE, ModelVariant.LATENT).ok
    assert not validate_params(BASELINE.replace(eta=1.0), ModelVariant.BASIC).ok
    with pytest.raises(ValueError):
        validate_params(BASELINE.replace(c=math.inf))


def test_delta_above_mu_failure_is_a_warning():
    rep = validate_params(BASELINE.replace(delta=1.0))
    assert rep.ok and not rep.delta_above_mu and rep.warnings


def test_trivial_state_is_stationary():
    s = State(0.0, BASELINE.lam / BASELINE.mu, 0.0, 0.0, 0.0)
    assert np.all(rhs_basic(BASELINE, s) == 0.0)


def test_counterexample_state_is_nearly_stationary():
    s = State(0.0, 1000 / 3, 11 / 6, 1.0, 5 / 6)
    d = rhs_basic(COUNTEREXAMPLE, s)
    assert np.max(np.abs(d)) < 1e-6 * 4.0


def test_baseline_antibody_derivative():
    d = rhs_basic(BASELINE, initial_state(BASELINE))
    assert d[3] == pytest.approx(9.15e-7 * 994.84 * 1.17 - 0.02 * 1.17, rel=1e-12)
    assert d[3] == pytest.approx(-0.02234, abs=1e-5)


def test_latent_empty_compartments():
    p = BASELINE.replace(eta=3.0)
    d = rhs_latent(p, State(0.0, 1e6, 0.0, 0.0, 2.0, 0.0))
    assert d[1] == 0.0 and d[4] == 0.0


def test_latent_balanced_inflow():
    # beta*V*T = 100, eta = 9, mu = 1, L = 10
    p = ModelParams(lam=1, mu=1, beta0=1, beta1=0, delta=1, omega=1, c=1, b=1, a=1, sigma=1, eta=9)
    d = rhs_latent(p, State(0.0, 10.0, 0.0, 10.0, 0.0, 10.0))
    assert d[4] == 0.0


def test_latent_requires_eta():
    with pytest.raises(ValueError):
        rhs_latent(BASELINE, State(0.0, 1.0, 1.0, 1.0, 1.0, 1.0))


def test_beta_effective():
    p = BASELINE.replace(beta1=2e-6)
    assert beta_effective(p, 3.0) == pytest.approx(1.28e-6 + 6e-6)
    with pytest.raises(ValueError):
        beta_effective(p, -1.0)


@given(T=st.floats(0, 1e7), A=st.floats(0, 1e4), eta=pos)
def test_latent_no_virus_target_dynamics(T, A, eta):
    p = BASELINE.replace(eta=eta, beta1=1e-6)
    d = rhs_latent(p, State(0.0, T, 5.0, 0.0, A, 7.0))
    assert d[0] == pytest.approx(p.lam - p.mu * T, rel=1e-12, abs=1e-6)


@given(A=st.floats(0, 1e6), V=st.floats(0, 1e8), T=st.floats(0, 1e7), I=st.floats(0, 1e7))
def test_beta1_zero_ignores_antibody_in_infection(A, V, T, I):
    assert beta_effective(BASELINE, A) == BASELINE.beta0
    d0 = rhs_basic(BASELINE, State(0.0, T, I, V, A))
    d1 = rhs_basic(BASELINE, State(0.0, T, I, V, 0.0))
    assert d0[0] == d1[0] and d0[1] == d1[1]


@given(T=st.floats(0, 1e7), I=st.floats(0, 1e6), V=st.floats(0, 1e8), A=st.floats(0, 1e4))
def test_rhs_matches_direct_formula(T, I, V, A):
    p = BASELINE.replace(beta1=1e-7)
    beta = p.beta0 + p.beta1 * A
    want = [
        p.lam - p.mu * T - beta * V * T,
        beta * V * T - p.delta * I,
        p.omega * I - p.c * V - p.b * A * V,
        p.a * V * A - p.sigma * A,
    ]
    got = rhs_basic(p, State(0.0, T, I, V, A))
    scale = [p.lam + p.mu * T + beta * V * T, beta * V * T + p.delta * I,
             p.omega * I + p.c * V + p.b * A * V, p.a * V * A + p.sigma * A]
    for g, w, s in zip(got, want, scale):
        assert abs(g - w) <= 1e-14 * max(s, 1.0)
