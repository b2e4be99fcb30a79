import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from anampc.buck import case_study, equilibrium, linearize
from anampc.empc import qp_first_move
from anampc.mpc import (AffineModel, MpcSpec, QpMpc, blocking_matrix, condense,
                        delta_weight_pattern, equilibrium_check, input_box, move_block)
from anampc.polykit import QpProblem, solve_qp
from helpers import random_instance, solve_lifted


def scalar_model(A=0.5, B=1.0, b=0.0):
    return AffineModel([[A]], [[B]], np.zeros((1, 0)), [b], [[1.0]], [[0.0]], np.zeros((1, 0)), [0.0])


def scalar_spec(Np=1, Nc=None, R=1.0, Rd=0.0, u_r=0.0, x_r=0.0, y_r=0.0, box=None):
    Hu, hu = (None, None) if box is None else input_box(*box)
    return MpcSpec(Np, Nc or Np, [[1.0]], [[R]], [[Rd]], [y_r], [u_r], [x_r], None, None, Hu, hu)


def test_hessian_scalar():
    qp = condense(scalar_model(), scalar_spec())
    np.testing.assert_allclose(qp.H, [[2.0]])
    assert qp.Nc == qp.Np == 1
    np.testing.assert_array_equal(qp.T, np.eye(1))


def test_input_only_constraints_have_zero_K():
    spec = MpcSpec(1, 1, [[1.0]], [[1.0]], [[0.0]], [0.0], [0.0], [0.0], None, None,
                   [[1.0], [-1.0]], [1.0, 0.0])
    qp = condense(scalar_model(), spec)
    np.testing.assert_array_equal(qp.G, [[1.0], [-1.0]])
    np.testing.assert_array_equal(qp.w, [1.0, 0.0])
    np.testing.assert_array_equal(qp.K, np.zeros((2, 1)))


def test_blocking_matrix_example():
    np.testing.assert_array_equal(blocking_matrix(3, 2, 1), [[1, 0], [0, 1], [0, 1]])


def test_full_horizon_blocking_is_identity():
    model = scalar_model()
    qp = condense(model, scalar_spec(Np=3, box=([0.0], [1.0])))
    qb = move_block(qp, 3)
    np.testing.assert_array_equal(qb.T, np.eye(3))
    for k in ("H", "F", "c", "G", "w", "K"):
        np.testing.assert_array_equal(getattr(qb, k), getattr(qp, k))


def test_dedup_box_rows():
    qp = move_block(condense(scalar_model(), scalar_spec(Np=3, box=([0.0], [1.0]))), 2)
    assert qp.q == 4


def test_move_block_requires_full_horizon():
    qp = move_block(condense(scalar_model(), scalar_spec(Np=3)), 2)
    with pytest.raises(ValueError):
        move_block(qp, 1)


def test_delta_pattern():
    np.testing.assert_array_equal(delta_weight_pattern(3), [[1, -1, 0], [-1, 2, -1], [0, -1, 1]])
    np.testing.assert_array_equal(delta_weight_pattern(1), [[0.0]])


@pytest.mark.parametrize("kwargs", [dict(Nc=0), dict(Nc=4)])
def test_spec_rejects_bad_horizon(kwargs):
    with pytest.raises(ValueError):
        MpcSpec(3, kwargs["Nc"], [[1.0]], [[1.0]], [[0.0]], [0.0], [0.0], [0.0])


def test_spec_rejects_singular_R():
    with pytest.raises(ValueError):
        MpcSpec(2, 2, [[1.0]], [[0.0]], [[0.0]], [0.0], [0.0], [0.0])


def test_model_dimension_check():
    with pytest.raises(ValueError):
        AffineModel(np.eye(2), [[1.0]], np.zeros((2, 0)), [0, 0], [[1.0, 0.0]], [[0.0]],
                    np.zeros((1, 0)), [0.0])


def test_equilibrium_examples():
    assert equilibrium_check(scalar_model(0.0, 0.0), scalar_spec())
    assert equilibrium_check(scalar_model(), scalar_spec(u_r=0.5, x_r=1.0, y_r=1.0))
    assert not equilibrium_check(scalar_model(), scalar_spec(u_r=0.5, x_r=2.0, y_r=2.0))


def test_equilibrium_buck_linearization():
    p = case_study("ceramic")
    eq = equilibrium(p)
    model = linearize(p, eq)
    spec = MpcSpec(3, 2, [[1.0]], [[0.01]], [[0.01]], [p.V_o], [eq.D], eq.x)
    assert equilibrium_check(model, spec)


def test_objective_equals_cost():
    """1/2 u'Hu + (Fp+c)'u differs from the stacked tracking cost by a u-independent term."""
    rng = np.random.default_rng(3)
    model, spec, _, _ = random_instance(rng)
    qp = condense(model, spec)
    p = rng.uniform(-1, 1, model.n_p)

    def J(u):
        x, cost = p[:model.n].copy(), 0.0
        nu_v = p[model.n:]
        U = u.reshape(spec.Np, model.nu)
        for i in range(spec.Np):
            y = model.C @ x + model.D @ U[i] + model.Dnu @ nu_v + model.d
            cost += (y - spec.y_r) @ spec.Q @ (y - spec.y_r) + (U[i] - spec.u_r) @ spec.R @ (U[i] - spec.u_r)
            if i:
                du = U[i] - U[i - 1]
                cost += du @ spec.R_delta @ du
            x = model.A @ x + model.B @ U[i] + model.Bnu @ nu_v + model.b
        return cost

    def obj(u):
        return 0.5 * u @ qp.H @ u + (qp.F @ p + qp.c) @ u

    us = rng.normal(size=(5, qp.H.shape[0]))
    diffs = [J(u) - obj(u) for u in us]
    np.testing.assert_allclose(diffs, diffs[0], rtol=1e-10, atol=1e-10)


def test_matches_lifted_oracle():
    """Condensed first move equals the explicit-state formulation on 20 random instances."""
    rng = np.random.default_rng(11)
    for _ in range(20):
        model, spec, qp, _ = random_instance(rng)
        full = condense(model, spec)
        for _ in range(10):
            p = rng.uniform(-2.5, 2.5, model.n_p)
            lifted = solve_lifted(model, spec, p)
            assert lifted.optimal
            np.testing.assert_allclose(qp_first_move(full, p), lifted.x[:model.nu], atol=1e-7)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_reference_is_optimal(seed):
    """At p = [x_r; 0] the minimizer is the constant reference input sequence."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    A = rng.normal(size=(n, n))
    A *= 0.8 / np.abs(np.linalg.eigvals(A)).max()
    B = rng.normal(size=(n, 1))
    C = rng.normal(size=(1, n))
    u_r = rng.uniform(-0.5, 0.5, 1)
    x_r = np.linalg.solve(np.eye(n) - A, B @ u_r)
    y_r = C @ x_r
    model = AffineModel(A, B, np.zeros((n, 0)), np.zeros(n), C, [[0.0]], np.zeros((1, 0)), [0.0])
    Np = int(rng.integers(1, 5))
    Nc = int(rng.integers(1, Np + 1))
    Hu, hu = input_box([-1.0], [1.0])
    spec = MpcSpec(Np, Np, [[rng.uniform(1, 10)]], [[rng.uniform(0.01, 1)]], [[rng.uniform(0, 1)]],
                   y_r, u_r, x_r, None, None, Hu, hu)
    assert equilibrium_check(model, spec)
    qp = move_block(condense(model, spec), Nc)
    f, G, w = qp.parametric(x_r)
    u = solve_qp(QpProblem(qp.H, f, G, w)).x
    np.testing.assert_allclose(u, np.full(Nc, u_r[0]), atol=1e-7)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(1e-3, 1e3))
def test_scaling_invariance(seed, lam):
    rng = np.random.default_rng(seed)
    _, _, qp, _ = random_instance(rng)
    p = rng.uniform(-2.5, 2.5, qp.n_p)
    f, G, w = qp.parametric(p)
    u1 = solve_qp(QpProblem(qp.H, f, G, w)).x
    u2 = solve_qp(QpProblem(lam * qp.H, lam * f, G, w)).x
    np.testing.assert_allclose(u1, u2, atol=1e-8 * max(1.0, np.abs(u1).max()))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_gamma_causality(seed):
    rng = np.random.default_rng(seed)
    model, spec, _, _ = random_instance(rng)
    Gam = condense(model, spec).parts.Gamma
    n, nu = model.n, model.nu
    assert not Gam[:n].any()
    for i in range(spec.Np + 1):
        assert not Gam[i * n:(i + 1) * n, i * nu:].any()


def test_hessian_positive_definite_and_symmetric():
    rng = np.random.default_rng(5)
    for _ in range(10):
        _, _, qp, _ = random_instance(rng)
        np.testing.assert_array_equal(qp.H, qp.H.T)
        assert np.linalg.eigvalsh(qp.H).min() > 0
        # input-box rows come last and carry no parameter dependence
        assert not qp.K[-2:].any()
