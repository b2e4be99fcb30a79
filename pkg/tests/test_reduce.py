import numpy as np
import pytest

from anampc.empc import PwaController, Region, solve_mpqp
from anampc.polykit import Polytope, sample_uniform
from anampc.reduce import (NotSeparable, SaturationSplit, Separator, assemble, check_separator,
                           classify_saturation, merge_same_law, reduce_controller, remove_trivial,
                           separate)
from helpers import random_instance, saturation_controller

ZERO = [[0.0, 0.0]]


def box_region(lo, hi, K=ZERO, l=(1.0,)):
    return Region(Polytope.box(lo, hi), K, list(l))


def controller(regions, lo, hi):
    regions = tuple(regions)
    return PwaController(regions, Polytope.box(lo, hi), 1, regions[0].poly.dim)


@pytest.mark.parametrize("exhaustive", [True, False])
def test_merge_two_boxes(exhaustive):
    ctrl = controller([box_region([0, 0], [1, 1]), box_region([1, 0], [2, 1])], [0, 0], [2, 1])
    out = merge_same_law(ctrl, exhaustive)
    assert len(out.regions) == 1
    assert out.regions[0].poly.contains([1.9, 0.1]) and out.regions[0].poly.contains([0.1, 0.9])


@pytest.mark.parametrize("exhaustive", [True, False])
def test_l_shape_not_merged(exhaustive):
    ctrl = controller([box_region([0, 0], [1, 1]), box_region([1, 0], [2, 2])], [0, 0], [2, 2])
    assert len(merge_same_law(ctrl, exhaustive).regions) == 2


@pytest.mark.parametrize("exhaustive", [True, False])
def test_three_in_a_row(exhaustive):
    regs = [box_region([i, 0], [i + 1, 1]) for i in (0, 2, 1)]
    out = merge_same_law(controller(regs, [0, 0], [3, 1]), exhaustive)
    assert len(out.regions) == 1


def test_different_laws_not_merged():
    regs = [box_region([0, 0], [1, 1]), box_region([1, 0], [2, 1], l=(2.0,))]
    assert len(merge_same_law(controller(regs, [0, 0], [2, 1])).regions) == 2


def test_exhaustive_beats_greedy_order():
    """A middle cell can join either neighbour; the optimum is independent of the scan order."""
    regs = [box_region([0, 0], [1, 1]), box_region([1, 0], [2, 1]), box_region([0, 1], [1, 2]),
            box_region([1, 1], [2, 2])]
    out = merge_same_law(controller(regs, [0, 0], [2, 2]), exhaustive=True)
    assert len(out.regions) == 1


def test_classify_saturation_example():
    ctrl = saturation_controller()
    split = classify_saturation(ctrl, -1.0, 1.0)
    assert ctrl.regions[split.I_lb[0]].l[0] == pytest.approx(-1.0)
    assert ctrl.regions[split.I_ub[0]].l[0] == pytest.approx(1.0)
    assert ctrl.regions[split.I_unsat[0]].K[0, 0] == pytest.approx(1.0)
    assert sorted(split.I_lb + split.I_ub + split.I_unsat) == [0, 1, 2]


def test_classify_unconstrained_all_unsaturated():
    ctrl = PwaController((Region(Polytope.box([-1.0], [1.0]), [[2.0]], [0.0]),),
                         Polytope.box([-1.0], [1.0]), 1, 1)
    split = classify_saturation(ctrl, -1.0, 1.0)
    assert split.I_unsat == (0,) and not split.I_lb and not split.I_ub
    sep = separate(split)
    assert sep.kind == "constant"


def test_one_sided_split_constant_separator():
    regs = (Region(Polytope.box([-2.0], [-1.0]), [[0.0]], [-1.0]),
            Region(Polytope.box([-1.0], [2.0]), [[1.0]], [0.0]))
    split = classify_saturation(PwaController(regs, Polytope.box([-2.0], [2.0]), 1, 1), -1.0, 1.0)
    assert split.I_ub == ()
    sep = separate(split)
    assert sep.kind == "constant" and sep.value([[0.0]])[0] < 0


def _split_1d(lower_boxes, upper_boxes):
    regs = [Region(Polytope.box([a], [b]), [[0.0]], [-1.0]) for a, b in lower_boxes]
    regs += [Region(Polytope.box([a], [b]), [[0.0]], [1.0]) for a, b in upper_boxes]
    n_lo = len(lower_boxes)
    return SaturationSplit(tuple(range(n_lo)), tuple(range(n_lo, len(regs))), (), -1.0, 1.0,
                           tuple(regs))


def test_separate_min_norm_example():
    sep = separate(_split_1d([(-2, -1)], [(1, 2)]), eps=1.0)
    assert sep.a[0] == pytest.approx(1.0, abs=1e-9)
    assert sep.b_off == pytest.approx(0.0, abs=1e-9)


def test_separate_interlocked():
    # lower set touches -1 and 1, upper sits at 0
    with pytest.raises(NotSeparable):
        separate(_split_1d([(-1.5, -1), (1, 1.5)], [(-0.1, 0.1)]))


def test_check_separator_flags_violation():
    sep = Separator(np.array([1.0]), 0.0, 1.0)
    with pytest.raises(NotSeparable):
        check_separator(sep, np.array([[-0.5]]), np.array([[2.0]]))


def test_separator_sign_on_samples():
    ctrl = saturation_controller()
    split = classify_saturation(ctrl, -1.0, 1.0)
    sep = separate(split)
    rng = np.random.default_rng(0)
    for P, sign in ((split.S_lower, -1), (split.S_upper, 1)):
        for poly in P:
            X = sample_uniform(poly, 1000, rng)
            assert np.all(np.sign(sep.value(X)) == sign)


def test_remove_trivial_examples():
    dom = Polytope.box([-1.0], [1.0])
    far = Region(Polytope([[1.0]], [2.0]), [[0.0]], [0.0])
    near = Region(Polytope([[1.0]], [0.5]), [[0.0]], [0.0])
    out = remove_trivial([far, near], dom)
    assert out[0].poly.nrows == 0
    assert out[1].poly.nrows == 1


def test_assemble_examples():
    ctrl = saturation_controller()
    split = classify_saturation(ctrl, -1.0, 1.0)
    pol = assemble(ctrl, split, separate(split))
    assert len(pol.regions) == 1
    assert pol.eval([0.5])[0] == pytest.approx(0.5)
    r, s, s_a = pol.signals(np.array([[0.5], [1.7], [-1.7]]))
    np.testing.assert_array_equal(r[:, 0], [True, False, False])
    np.testing.assert_array_equal(s_a, [False, True, True])
    np.testing.assert_array_equal(s[1:], [True, False])
    assert pol.eval([1.7])[0] == 1.0
    assert pol.eval([-1.7])[0] == -1.0


@pytest.mark.parametrize("seed", range(5))
def test_semantic_preservation(seed):
    rng = np.random.default_rng(300 + seed)
    _, _, qp, domain = random_instance(rng)
    ctrl = solve_mpqp(qp, domain)
    red = reduce_controller(ctrl, -1.0, 1.0)
    P = sample_uniform(domain, 5000, rng)
    np.testing.assert_allclose(red.policy.eval_many(P), ctrl.eval_many(P), atol=1e-6)
    assert len(red.merged.regions) <= len(ctrl.regions)


def test_reduction_without_bounds_keeps_regions():
    ctrl = saturation_controller()
    red = reduce_controller(ctrl)
    assert red.separator is None and len(red.policy.regions) == 3
    P = np.linspace(-2, 2, 101)[:, None]
    np.testing.assert_allclose(red.policy.eval_many(P), np.clip(P, -1, 1), atol=1e-12)
