import numpy as np
import pytest

from anampc.buck import Scenario, case_study, ct_matrices, equilibrium, simulate
from anampc.estimator import (InfeasibleRealization, design_io_estimator, estimate_vc, filter_trace,
                              optimal_RL, sensitivities, simulate_linear, synth_estimator_circuit)

P = case_study("ceramic")


def rest_state(p, v):
    ct = ct_matrices(p)
    return -np.linalg.solve(ct.A_c, ct.B_c2 * v)


def test_optimal_RL_case_study():
    assert optimal_RL(0.3333, 7.0286) == pytest.approx(3.68095, abs=1e-12)
    assert optimal_RL(2.0, 2.0) == 2.0
    with pytest.raises(ValueError):
        optimal_RL(3.0, 1.0)


def test_optimal_RL_sampling_oracle():
    """R = 2 minimizes the mean of |1/R - 1/R_L| for R_L ~ U[1, 3] among a candidate grid."""
    rng = np.random.default_rng(0)
    g = 1.0 / rng.uniform(1.0, 3.0, 1_000_000)
    grid = np.linspace(1.2, 2.8, 17)
    cost = [np.mean(np.abs(1.0 / R - g)) for R in grid]
    assert grid[int(np.argmin(cost))] == pytest.approx(optimal_RL(1.0, 3.0))


def test_design_invariants():
    est = design_io_estimator(P, 3.68095, sub_dt=P.T / 64)
    assert est.z_E < est.p_E
    assert est.K_E == pytest.approx(1 / (P.R_Co * 3.68095 / (P.R_Co + 3.68095)))
    assert est.dc_gain == pytest.approx(est.K_E * est.z_E / est.p_E, rel=1e-9)
    assert est.dc_gain == pytest.approx(1 / 3.68095, rel=1e-9)


def test_aliasing_guard():
    with pytest.raises(ValueError):
        design_io_estimator(P, 3.6, sub_dt=P.T)


def test_ideal_estimate_after_step():
    est = design_io_estimator(P, P.R_L)
    dt = P.T / 64
    n = 40 * 64
    t = np.arange(n) * dt
    i_o = np.where(t >= 10 * P.T, 10.0, 0.0)
    io, hat = simulate_linear(P, est, dt, i_o, P.V_o, rest_state(P, P.V_o))
    tt = np.arange(n + 1) * dt
    late = tt >= 10 * P.T + 5 / est.p_E
    assert np.abs(hat[late] - io[late]).max() < 1e-6


@pytest.mark.parametrize("R_L", [0.5, 2.0, 7.0])
def test_mismatch_steady_state_error(R_L):
    est = design_io_estimator(P, 3.68095)
    q = P.with_values(R_L=R_L)
    io, hat = simulate_linear(q, est, P.T, np.zeros(100), P.V_o, rest_state(q, P.V_o))
    expect = P.V_o * abs(1 / 3.68095 - 1 / R_L)
    assert abs(hat[-1] - io[-1]) == pytest.approx(expect, rel=1e-2)


def test_matched_zero_steady_state_error():
    est = design_io_estimator(P, P.R_L)
    io, hat = simulate_linear(P, est, P.T, np.full(100, 4.0), P.V_o, rest_state(P, P.V_o))
    assert abs(hat[-1] - io[-1]) < 1e-9


def test_switching_filter_mismatch():
    """The sub-step filter on the switched trace shows the same conductance error."""
    est = design_io_estimator(P, 3.68095)
    q = P.with_values(R_L=2.0)
    eq = equilibrium(q)
    tr = simulate(q, Scenario.constant(200, 0.0, P.V_in, x0=tuple(eq.x)), duty=eq.D, sub_steps=64)
    hat = filter_trace(est, tr.v_o, tr.i_L)
    expect = tr.v_o[-64:].mean() * abs(1 / 3.68095 - 1 / 2.0)
    assert hat[-64:].mean() == pytest.approx(expect, rel=1e-2)


def test_sub_step_filter_converges():
    """The bilinear filter approaches the exact estimate as the sub-step shrinks."""
    eq = equilibrium(P)
    errs = []
    for sub in (64, 128, 256):
        est = design_io_estimator(P, P.R_L, sub_dt=P.T / sub)
        tr = simulate(P, Scenario.constant(20, 3.0, P.V_in, x0=tuple(eq.x)), duty=eq.D, sub_steps=sub)
        hat = filter_trace(est, tr.v_o, tr.i_L)
        errs.append(np.abs(hat[-sub:] - 3.0).max())
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-2


def test_estimate_vc():
    assert estimate_vc(5.0, 1.0, 1.0, 0.01, 1.0) == pytest.approx(5.05)
    assert estimate_vc(4.2, 3.0, 1.0, 0.0, 3.6) == pytest.approx(4.2)
    eq = equilibrium(P)
    tr = simulate(P, Scenario.load_step(10, 4 * P.T, 0.0, 5.0, P.V_in, x0=tuple(eq.x)), duty=eq.D,
                  sub_steps=16)
    vc = estimate_vc(tr.v_o, tr.i_L, tr.i_o, P.R_Co, P.R_L)
    assert np.abs(vc - tr.v_C).max() <= 1e-9 * np.abs(tr.v_C).max()


def test_circuit_round_trip():
    est = design_io_estimator(P, 3.68095)
    c = synth_estimator_circuit(est, 10e3)
    K, z, pe = c.recovered(est.g_io)
    assert K == pytest.approx(est.K_E, rel=1e-12)
    assert z == pytest.approx(est.z_E, rel=1e-12)
    assert pe == pytest.approx(est.p_E, rel=1e-12)
    assert c.C1 * (c.R3 * c.R4 / (c.R3 + c.R4)) == pytest.approx(c.C2 * c.R5, rel=1e-12)
    assert c.R5 == pytest.approx(est.g_io * 10e3 / est.g_iL)
    assert est.g_io == 0.1


def test_circuit_transfer_functions():
    est = design_io_estimator(P, 3.68095)
    c = synth_estimator_circuit(est, 10e3)
    s = 1j * np.logspace(1, 7, 25)
    np.testing.assert_allclose(c.tf_vo(s), -est.g_io * est.E1(s), rtol=1e-12)
    np.testing.assert_allclose(c.tf_il(s), est.g_io / est.g_iL, rtol=1e-12)


def test_circuit_R1_scaling():
    est = design_io_estimator(P, 3.68095)
    a, b = synth_estimator_circuit(est, 10e3), synth_estimator_circuit(est, 20e3)
    assert b.R5 == pytest.approx(2 * a.R5)
    assert b.C2 == pytest.approx(a.C2 / 2)
    assert 1 / (b.R5 * b.C2) == pytest.approx(est.p_E)


def test_circuit_rejects_bad_R1():
    est = design_io_estimator(P, 3.68095)
    with pytest.raises(ValueError):
        synth_estimator_circuit(est, 0.0)


def test_circuit_infeasible_divider():
    # a tiny sensor gain asks the divider for more than unity
    est = design_io_estimator(P, 3.68095, g_iL=0.001, g_io=0.1)
    with pytest.raises(InfeasibleRealization):
        synth_estimator_circuit(est, 10e3)


def test_sensitivities_low_frequency():
    w = np.array([1e-2, 1e-1, 1.0])
    dC, dR, dRL = sensitivities(P, 1j * w)
    # the C and R_Co sensitivities vanish at DC (first and second order in w)
    np.testing.assert_allclose(np.abs(dC) / w, 1.0, rtol=1e-6)
    np.testing.assert_allclose(np.abs(dR) / w**2, P.C_o**2, rtol=1e-6)
    np.testing.assert_allclose(np.abs(dRL), 1 / P.R_L**2)


def test_sensitivities_match_finite_differences():
    s = 1j * 2e4

    def E1(C, R, RL):
        return 1 / RL + C * s / (1 + C * R * s)

    dC, dR, dRL = sensitivities(P, s)
    h = 1e-7
    fd = [(E1(P.C_o * (1 + h), P.R_Co, P.R_L) - E1(P.C_o * (1 - h), P.R_Co, P.R_L)) / (2 * h * P.C_o),
          (E1(P.C_o, P.R_Co * (1 + h), P.R_L) - E1(P.C_o, P.R_Co * (1 - h), P.R_L)) / (2 * h * P.R_Co),
          (E1(P.C_o, P.R_Co, P.R_L * (1 + h)) - E1(P.C_o, P.R_Co, P.R_L * (1 - h))) / (2 * h * P.R_L)]
    np.testing.assert_allclose([dC, dR, dRL], fd, rtol=1e-6)


def test_bilinear_fidelity():
    est = design_io_estimator(P, 3.68095)
    w = 2 * np.pi * P.f_sw / 100
    assert abs(est.E1_discrete(w)) == pytest.approx(abs(est.E1(1j * w)), rel=1e-2)
