import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import solve_discrete_lyapunov

from anampc.buck import case_study
from anampc.empc import Region
from anampc.polykit import Polytope
from anampc.reduce import FinalPolicy, Separator
from anampc.stability import (NotSchur, certify, certify_buck, empirical_lipschitz, lemma1_check,
                              p_norm, solve_dlyap, spectral_radius)
from helpers import buck_pipeline

P_CASE = case_study("ceramic")


@pytest.fixture(scope="module")
def policy():
    return buck_pipeline().policy


def test_dlyap_scalar():
    assert solve_dlyap([[0.5]], [[1.0]])[0, 0] == pytest.approx(4 / 3, rel=1e-15)


def test_dlyap_zero_matrix():
    Q = np.array([[2.0, 0.5], [0.5, 1.0]])
    np.testing.assert_allclose(solve_dlyap(np.zeros((2, 2)), Q), Q)


def test_dlyap_rejects_unstable():
    with pytest.raises(NotSchur):
        solve_dlyap([[1.0, 0.0], [0.0, 0.5]], np.eye(2))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_dlyap_series_and_scipy(seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(2, 2))
    A *= rng.uniform(0.1, 0.9) / spectral_radius(A)
    L = rng.normal(size=(2, 2))
    Q = L @ L.T + 0.1 * np.eye(2)
    P = solve_dlyap(A, Q)
    series, term = np.zeros((2, 2)), Q.copy()
    Ak = np.eye(2)
    for _ in range(200):
        series += Ak.T @ Q @ Ak
        Ak = Ak @ A
    scale = np.abs(P).max()
    assert np.abs(P - series).max() <= 1e-8 * scale
    assert np.abs(P - solve_discrete_lyapunov(A.T, Q)).max() <= 1e-10 * scale
    assert np.abs(A.T @ P @ A - P + Q).max() <= 1e-10 * scale
    assert np.linalg.eigvalsh(P).min() > 0
    assert p_norm(A, P) < 1.0


def test_p_norm_examples():
    rng = np.random.default_rng(1)
    L = rng.normal(size=(2, 2))
    P = L @ L.T + np.eye(2)
    assert p_norm(np.eye(2), P) == pytest.approx(1.0)
    G = rng.normal(size=(2, 2))
    assert p_norm(G, np.eye(2)) == pytest.approx(np.linalg.norm(G, 2))
    assert p_norm([[0, 1], [0, 0]], np.diag([4.0, 1.0])) == pytest.approx(2.0)


def _zero_gain_policy():
    dom = Polytope.box([-1] * 4, [1] * 4)
    return FinalPolicy((), Separator(np.zeros(4), 1.0, 1.0, "constant"), 0.0, 1.0, dom)


def test_zero_gain_policy():
    cert = certify_buck(_zero_gain_policy(), P_CASE)
    assert cert.L_u == 0.0 and cert.second_term == 0.0
    assert cert.L_f == pytest.approx(cert.A_norm_P)


def test_vin_doubling(policy):
    a = certify_buck(policy, P_CASE)
    b = certify_buck(policy, P_CASE, V_in=2 * P_CASE.V_in)
    assert b.second_term == pytest.approx(2 * a.second_term, rel=1e-12)
    assert b.A_norm_P == a.A_norm_P


@pytest.mark.parametrize("lam", [0.01, 3.0, 1e4])
def test_Q_scaling_invariance(policy, lam):
    a = certify_buck(policy, P_CASE)
    b = certify_buck(policy, P_CASE, Q_lyap=lam * np.eye(2))
    np.testing.assert_allclose(b.P, lam * a.P, rtol=1e-9)
    assert abs(b.L_f - a.L_f) < 1e-9


def test_certificate_invariants(policy):
    cert = certify_buck(policy, P_CASE)
    from anampc.buck import equilibrium, linearize
    A = linearize(P_CASE, equilibrium(P_CASE)).A
    assert cert.lyapunov_residual(A) <= 1e-10 * np.abs(cert.P).max()
    assert cert.A_norm_P < 1.0
    # the weighted norm bounds the spectral radius from above, without equality in general
    assert cert.A_norm_P >= cert.spectral_radius
    text = cert.report()
    assert "L_f = " in text and "verdict" in text


def test_L_u_uses_state_gains_only(policy):
    cert = certify_buck(policy, P_CASE)
    regions = tuple(Region(r.poly, r.K * np.array([[1, 1, 100, 100]]), r.l) for r in policy.regions)
    inflated = FinalPolicy(regions, policy.separator, policy.u_lower, policy.u_upper, policy.domain)
    assert certify_buck(inflated, P_CASE).L_u == cert.L_u


def test_lemma_examples():
    rep = lemma1_check(k_max=1, samples=1000)
    assert rep.ok and rep.max_ratio <= 1 + 1e-12
    assert abs((1 - 0.0) ** 3 - (1 - 1.0) ** 3) <= 2 ** 2 * 1.0
    full = lemma1_check(k_max=10, samples=10_000)
    assert full.violations == 0 and full.samples == 10_000


def test_empirical_lipschitz_below_bound(policy):
    cert = certify_buck(policy, P_CASE)
    est = empirical_lipschitz(policy, P_CASE, cert.P, pairs=400)
    assert est.pairs == 400
    assert 0 < est.value <= cert.L_f


def test_empirical_lipschitz_of_constant_duty_is_A_norm():
    pol = _zero_gain_policy()
    cert = certify_buck(pol, P_CASE)
    est = empirical_lipschitz(pol, P_CASE, cert.P, pairs=400)
    assert est.value <= cert.A_norm_P * (1 + 1e-9)
    assert est.value > 0.99 * cert.spectral_radius


def test_certify_generic_scalar():
    cert = certify(_zero_gain_policy(), [[0.5, 0.0], [0.0, 0.25]], -np.eye(2), [1.0, 0.0], 10.0)
    assert cert.verdict and cert.L_f == pytest.approx(0.5)
