import numpy as np
import pytest

from anampc import serialize
from anampc.reduce import reduce_controller
from helpers import buck_pipeline, saturation_controller


def _same_regions(a, b):
    assert len(a.regions) == len(b.regions)
    for r, s in zip(a.regions, b.regions):
        np.testing.assert_array_equal(r.poly.A, s.poly.A)
        np.testing.assert_array_equal(r.poly.b, s.poly.b)
        np.testing.assert_array_equal(r.K, s.K)
        np.testing.assert_array_equal(r.l, s.l)
        assert r.active == s.active


def test_pwa_round_trip_exact():
    ctrl = saturation_controller()
    text = serialize.dumps(ctrl)
    back = serialize.loads(text)
    _same_regions(ctrl, back)
    assert serialize.dumps(back) == text


def test_final_round_trip(tmp_path):
    pol = buck_pipeline().policy
    path = tmp_path / "policy.txt"
    serialize.dump(pol, path)
    back = serialize.load(path)
    _same_regions(pol, back)
    np.testing.assert_array_equal(back.separator.a, pol.separator.a)
    assert back.separator.b_off == pol.separator.b_off
    assert (back.u_lower, back.u_upper) == (pol.u_lower, pol.u_upper)
    assert path.read_text() == serialize.dumps(back)


def test_policy_without_separator():
    pol = reduce_controller(saturation_controller()).policy
    back = serialize.loads(serialize.dumps(pol))
    assert back.separator is None and back.u_lower is None


@pytest.mark.parametrize("text", [
    "", "something 1\n", "anampc-policy 9\n",
    "anampc-policy 1\nkind pwa\ndims 1 1\ndomain 2\n1.0 1.0\n",
    "anampc-policy 1\nkind nope\n",
])
def test_malformed(text):
    with pytest.raises(serialize.FormatError):
        serialize.loads(text)


def test_rejects_other_objects():
    with pytest.raises(TypeError):
        serialize.dumps(object())
