import numpy as np
import pytest

from anampc.empc import (OutOfDomain, PwaController, Region, qp_first_move, qp_first_moves,
                         region_count_bound, solve_mpqp, verify_against_qp)
from anampc.mpc import QpMpc
from anampc.polykit import Polytope, sample_uniform, vertices
from helpers import (continuity_error, max_overlap_radius, random_instance, saturation_controller,
                     saturation_qp)


def _sorted_regions(ctrl):
    return sorted(ctrl.regions, key=lambda r: vertices(r.poly)[:, 0].min())


def test_saturation_three_regions():
    ctrl = saturation_controller()
    assert len(ctrl.regions) == 3
    laws = [(r.K[0, 0], r.l[0]) for r in _sorted_regions(ctrl)]
    np.testing.assert_allclose(laws, [(0, -1), (1, 0), (0, 1)], atol=1e-12)
    ends = [sorted(vertices(r.poly)[:, 0]) for r in _sorted_regions(ctrl)]
    np.testing.assert_allclose(ends, [[-2, -1], [-1, 1], [1, 2]], atol=1e-9)


def test_saturation_eval():
    ctrl = saturation_controller()
    assert ctrl.eval([0.5])[0] == pytest.approx(0.5)
    assert ctrl.eval([1.0])[0] == pytest.approx(1.0)
    assert ctrl.eval([-1.0])[0] == pytest.approx(-1.0)
    with pytest.raises(OutOfDomain):
        ctrl.eval([3.0])
    with pytest.raises(OutOfDomain):
        ctrl.eval_many([[0.0], [3.0]])


def test_boundary_agrees_from_both_regions():
    ctrl = saturation_controller()
    for p in (-1.0, 1.0):
        values = {round(float(r.law([p])[0]), 12) for r in ctrl.regions if r.poly.contains([p], 1e-12)}
        assert len(values) == 1


def test_saturation_verify():
    rep = verify_against_qp(saturation_controller(), saturation_qp(), 1000)
    assert rep.uncovered == 0 and rep.max_error < 1e-9


def test_unconstrained_single_region():
    H = np.array([[2.0, 0.5], [0.5, 1.0]])
    F = np.array([[1.0, 0.0], [0.0, -1.0]])
    c = np.array([0.3, -0.2])
    qp = QpMpc(H, F, c, np.zeros((0, 2)), np.zeros(0), np.zeros((0, 2)), np.eye(2), 2, 2, 1)
    ctrl = solve_mpqp(qp, Polytope.box([-1, -1], [1, 1]))
    assert len(ctrl.regions) == 1
    r = ctrl.regions[0]
    Hi = np.linalg.inv(H)
    np.testing.assert_allclose(r.K, -(Hi @ F)[:1], atol=1e-14)
    np.testing.assert_allclose(r.l, -(Hi @ c)[:1], atol=1e-14)
    rep = verify_against_qp(ctrl, qp, 200)
    assert rep.max_error <= 1e-14


def test_infeasible_domain_gives_empty_controller():
    # u <= -3 - p and u >= 3 - p cannot both hold
    qp = QpMpc(np.eye(1), np.zeros((1, 1)), np.zeros(1), np.array([[1.0], [-1.0]]),
               np.array([-3.0, -3.0]), np.array([[-1.0], [1.0]]), np.eye(1), 1, 1, 1)
    ctrl = solve_mpqp(qp, Polytope.box([-1.0], [1.0]))
    assert ctrl.regions == ()


def test_domain_dimension_checked():
    with pytest.raises(ValueError):
        solve_mpqp(saturation_qp(), Polytope.box([0, 0], [1, 1]))


def test_region_count_bound_formula():
    assert region_count_bound(4, 2) == 1 + 4 + 6
    assert region_count_bound(2, 1) == 3


@pytest.mark.parametrize("seed", range(6))
def test_random_partition_properties(seed):
    rng = np.random.default_rng(100 + seed)
    _, _, qp, domain = random_instance(rng)
    ctrl = solve_mpqp(qp, domain)
    assert 1 <= len(ctrl.regions) <= region_count_bound(qp.q, qp.Nc * qp.nu)
    P = sample_uniform(domain, 2000, rng)
    assert np.all(ctrl.locate_many(P) >= 0)
    assert max_overlap_radius(ctrl.regions) <= 1e-7
    assert continuity_error(ctrl, rng) <= 1e-7
    rep = verify_against_qp(ctrl, qp, 300, rng)
    assert rep.ok, rep


def test_region_laws_match_qp_inside():
    rng = np.random.default_rng(9)
    _, _, qp, domain = random_instance(rng)
    ctrl = solve_mpqp(qp, domain)
    for r in ctrl.regions:
        for p in sample_uniform(r.poly, 100, rng):
            np.testing.assert_allclose(r.law(p), qp_first_move(qp, p), atol=1e-6)


def test_locate_returns_first_region():
    left = Region(Polytope.box([0.0], [1.0]), [[0.0]], [1.0])
    right = Region(Polytope.box([1.0], [2.0]), [[0.0]], [1.0])
    ctrl = PwaController((left, right), Polytope.box([0.0], [2.0]), 1, 1)
    assert ctrl.locate([1.0]) == 0
    np.testing.assert_array_equal(ctrl.locate_many([[0.5], [1.5], [5.0]]), [0, 1, -1])


def test_batched_first_moves_match_single_solves():
    rng = np.random.default_rng(17)
    _, _, qp, domain = random_instance(rng)
    P = sample_uniform(domain, 200, rng)
    one = np.array([qp_first_move(qp, p) for p in P])
    np.testing.assert_array_equal(qp_first_moves(qp, P), one)
