from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from viraldyn.equilibria import (
    ade_equilibrium,
    derived_thresholds,
    immunosuppression_equilibrium,
    no_ade_equilibrium,
    trivial_equilibrium,
)
from viraldyn.model import COUNTEREXAMPLE, BASELINE, ModelParams, State
from viraldyn.stability import (
    Classification,
    QuarticPoly,
    characteristic_quartic,
    classify_eigenvalues,
    classify_equilibrium,
    eigenvalues_quartic,
    gamma_closed_form_no_ade,
    jacobian_basic,
    routh_hurwitz_quartic,
    stability_report,
)

COUNTEREXAMPLE_EIGS = np.array([-3.45, -0.90, 0.01, 0.50])
CE0 = COUNTEREXAMPLE.replace(beta1=0.0)


def rhs_exact(p: ModelParams, y):
    P = {k: Fraction(v) for k, v in p.to_dict().items() if v is not None}
    T, I, V, A = y
    inf = (P["beta0"] + P["beta1"] * A) * V * T
    return [P["lam"] - P["mu"] * T - inf, inf - P["delta"] * I,
            P["omega"] * I - P["c"] * V - P["b"] * A * V, P["a"] * V * A - P["sigma"] * A]


def fd_jacobian(p: ModelParams, s: State) -> np.ndarray:
    """Central differences in exact rational arithmetic, h = 1e-6*max(1, |x_j|)."""
    x = [Fraction(v) for v in (s.T, s.I, s.V, s.A)]
    J = np.zeros((4, 4))
    for j in range(4):
        h = Fraction(1e-6 * max(1.0, abs(float(x[j]))))
        up, dn = list(x), list(x)
        up[j] += h
        dn[j] -= h
        fu, fd = rhs_exact(p, up), rhs_exact(p, dn)
        for i in range(4):
            J[i, j] = float((fu[i] - fd[i]) / (2 * h))
    return J


def test_jacobian_at_trivial():
    J = jacobian_basic(BASELINE, trivial_equilibrium(BASELINE).state)
    assert J[0, 0] == -BASELINE.mu
    assert np.all(J[1:, 0] == 0)
    assert np.any(np.isclose(np.linalg.eigvals(J), -BASELINE.mu))


def test_jacobian_counterexample_eigs():
    J = jacobian_basic(COUNTEREXAMPLE, ade_equilibrium(COUNTEREXAMPLE).state)
    eigs = np.sort(np.linalg.eigvals(J).real)
    assert np.allclose(eigs, COUNTEREXAMPLE_EIGS, atol=0.01)


@given(
    T=st.floats(1e-2, 1e7), I=st.floats(0, 1e6), V=st.floats(0, 1e8), A=st.floats(0, 1e4),
    beta1=st.sampled_from([0.0, 1e-8, 1e-6, 1e-3]),
)
def test_jacobian_matches_finite_differences(T, I, V, A, beta1):
    p = BASELINE.replace(beta1=beta1)
    s = State(0.0, T, I, V, A)
    J, Jfd = jacobian_basic(p, s), fd_jacobian(p, s)
    assert np.all(np.abs(J - Jfd) <= 1e-6 * np.abs(Jfd) + 1e-300)


def test_charpoly_diagonal():
    q = characteristic_quartic(np.diag([-1.0, -2.0, -3.0, -4.0]))
    assert q.coeffs == (1.0, 10.0, 35.0, 50.0, 24.0)


def test_charpoly_rejects_bad_input():
    with pytest.raises(ValueError):
        characteristic_quartic(np.eye(3))
    with pytest.raises(ValueError):
        characteristic_quartic(np.full((4, 4), np.nan))


def test_charpoly_random_matrices_root_product_oracle():
    rng = np.random.default_rng(11)
    for _ in range(200):
        J = rng.standard_normal((4, 4))
        want = np.real(np.poly(np.linalg.eigvals(J)))
        got = np.array(characteristic_quartic(J).coeffs)
        assert np.all(np.abs(got - want) <= 1e-8 * np.maximum(1.0, np.abs(want)))


def test_gamma_closed_form_counterexample():
    g = gamma_closed_form_no_ade(CE0)
    assert g.g0 == pytest.approx(1 * 2 * 1e-3 * 1 * 0.1, rel=1e-9)


def test_gamma_closed_form_baseline_positive_and_matches():
    g = gamma_closed_form_no_ade(BASELINE)
    assert all(x > 0 for x in g.coeffs)
    q = characteristic_quartic(jacobian_basic(BASELINE, no_ade_equilibrium(BASELINE).state))
    assert np.allclose(q.coeffs, g.coeffs, rtol=1e-6, atol=0)


def test_gamma_closed_form_boundary_and_errors():
    p = ModelParams(lam=4, mu=1, beta0=1, beta1=0, delta=2, omega=1, c=1, b=1, a=1, sigma=1)
    assert gamma_closed_form_no_ade(p).g0 == 0.0
    with pytest.raises(ValueError):
        gamma_closed_form_no_ade(COUNTEREXAMPLE)
    with pytest.raises(ValueError):
        gamma_closed_form_no_ade(BASELINE.replace(delta=1.0))


def test_routh_hurwitz_examples():
    rh = routh_hurwitz_quartic(QuarticPoly(1, 4, 6, 4, 1))
    assert rh.passed and rh.margins["hurwitz"] == 96 - 32
    rh = routh_hurwitz_quartic(QuarticPoly(1, 1, 1, 1, 1))
    assert not rh.passed and rh.margins["hurwitz"] == -1
    roots = eigenvalues_quartic(QuarticPoly(1, 1, 1, 1, 1))
    assert np.sum(roots.real > 0) == 2
    with pytest.raises(ValueError):
        routh_hurwitz_quartic(QuarticPoly(0, 1, 1, 1, 1))


def test_routh_hurwitz_counterexample_fails():
    J = jacobian_basic(COUNTEREXAMPLE, ade_equilibrium(COUNTEREXAMPLE).state)
    assert not routh_hurwitz_quartic(characteristic_quartic(J)).passed


def test_eigenvalues_multiple_root():
    roots = eigenvalues_quartic(QuarticPoly(1, 4, 6, 4, 1))
    assert np.all(np.abs(roots + 1) < 1e-3)


def test_eigenvalues_counterexample():
    J = jacobian_basic(COUNTEREXAMPLE, ade_equilibrium(COUNTEREXAMPLE).state)
    roots = eigenvalues_quartic(characteristic_quartic(J))
    assert np.allclose(np.sort(roots.real), COUNTEREXAMPLE_EIGS, atol=0.01)
    assert np.allclose(roots.imag, 0, atol=1e-9)


def test_eigenvalues_construct_then_solve():
    rng = np.random.default_rng(5)
    done = 0
    while done < 200:
        re = -rng.uniform(0.1, 10, size=2)
        im = rng.uniform(0, 5, size=2)
        # one conjugate pair and two real roots, or two pairs
        if rng.random() < 0.5:
            true = np.array([re[0] + 1j * im[0], re[0] - 1j * im[0], re[1], -rng.uniform(0.1, 10)])
        else:
            true = np.array([re[0] + 1j * im[0], re[0] - 1j * im[0], re[1] + 1j * im[1], re[1] - 1j * im[1]])
        d = np.abs(true[:, None] - true[None, :]) + np.eye(4)
        if d.min() < 0.1:
            continue
        q = QuarticPoly(*np.real(np.poly(true)))
        got = eigenvalues_quartic(q)
        for z in true:
            assert np.min(np.abs(got - z)) < 1e-7
        scale = max(abs(c) for c in q.coeffs)
        assert np.all(np.abs(q(got)) < 1e-9 * scale)
        done += 1


def test_rh_agrees_with_roots_on_random_quartics():
    rng = np.random.default_rng(1000)
    checked = 0
    for _ in range(1000):
        q = QuarticPoly(1.0, *rng.uniform(-1, 4, size=4))
        roots = eigenvalues_quartic(q)
        eps = 1e-9 * max(1.0, float(np.max(np.abs(roots))))
        if np.min(np.abs(roots.real)) <= eps:
            continue
        assert routh_hurwitz_quartic(q).passed == bool(np.max(roots.real) < 0)
        checked += 1
    assert checked > 900


@given(st.lists(st.floats(-5, 5), min_size=4, max_size=4))
def test_rh_agrees_with_roots_property(cs):
    q = QuarticPoly(1.0, *cs)
    roots = eigenvalues_quartic(q)
    margin = 1e-6 * max(1.0, float(np.max(np.abs(roots))))
    if np.min(np.abs(roots.real)) > margin:
        assert routh_hurwitz_quartic(q).passed == bool(np.max(roots.real) < 0)


def test_classify_eigenvalues_bands():
    assert classify_eigenvalues(np.array([-1.0, -2.0])) is Classification.STABLE
    assert classify_eigenvalues(np.array([-1.0, 1e-3])) is Classification.UNSTABLE
    assert classify_eigenvalues(np.array([-1.0, 1e-12j])) is Classification.MARGINAL


def test_classify_examples():
    assert classify_equilibrium(BASELINE, no_ade_equilibrium(BASELINE)).classification is Classification.STABLE
    assert classify_equilibrium(COUNTEREXAMPLE, ade_equilibrium(COUNTEREXAMPLE)).classification \
        is Classification.UNSTABLE
    assert classify_equilibrium(COUNTEREXAMPLE, trivial_equilibrium(COUNTEREXAMPLE)).classification \
        is Classification.UNSTABLE


def test_classify_rejects_non_equilibrium():
    e = no_ade_equilibrium(BASELINE)
    bad = type(e)(e.kind, State(0.0, 1.0, 1.0, 1.0, 1.0), 0.0)
    with pytest.raises(ValueError):
        classify_equilibrium(BASELINE, bad)


@pytest.mark.parametrize("beta1,want", [
    (1e-6, Classification.STABLE),
    (1e-8, Classification.STABLE),
    (0.01188, Classification.UNSTABLE),
    (10.0, Classification.STABLE),
    (100.0, Classification.STABLE),
])
def test_beta1_regimes(beta1, want):
    p = COUNTEREXAMPLE.replace(beta1=beta1)
    assert classify_equilibrium(p, ade_equilibrium(p)).classification is want


def test_report_serializes():
    rep = stability_report(BASELINE, no_ade_equilibrium(BASELINE).state)
    d = rep.to_dict()
    assert set(d) == {"jacobian", "charpoly", "rh_pass", "rh_margins", "eigenvalues", "classification"}
    assert len(d["eigenvalues"]) == 4


def test_oracle_agreement_on_draws(no_ade_draws):
    for p in no_ade_draws:
        q = characteristic_quartic(jacobian_basic(p, no_ade_equilibrium(p).state))
        g = gamma_closed_form_no_ade(p)
        assert np.allclose(q.coeffs, g.coeffs, rtol=1e-6, atol=0)


def test_no_ade_stable_on_draws(no_ade_draws):
    for p in no_ade_draws:
        rep = classify_equilibrium(p, no_ade_equilibrium(p))
        assert rep.rh_pass
        assert np.all(rep.eigenvalues.real < 0)
        assert rep.classification is not Classification.UNSTABLE


def test_trivial_and_immunosuppression_unstable_on_draws(no_ade_draws):
    for p in no_ade_draws:
        for e in (trivial_equilibrium(p), immunosuppression_equilibrium(p)):
            rep = classify_equilibrium(p, e)
            assert np.max(rep.eigenvalues.real) > 0
        th = derived_thresholds(p)
        assert p.a * th.v_is - p.sigma > 0
