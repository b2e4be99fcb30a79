import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm as scipy_expm

from anampc.linalg import expm, expm2, expm_series


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 4), st.floats(1e-3, 20.0))
def test_expm_matches_scipy_and_series(seed, n, scale):
    M = np.random.default_rng(seed).normal(size=(n, n)) * scale / n
    ref = scipy_expm(M)
    tol = 1e-13 * max(1.0, np.abs(ref).max()) * max(1.0, np.linalg.norm(M, 1))
    assert np.abs(expm(M) - ref).max() <= tol
    assert np.abs(expm_series(M) - ref).max() <= tol


def test_expm_zero():
    np.testing.assert_array_equal(expm(np.zeros((3, 3))), np.eye(3))


def test_expm_rejects_rectangular():
    with pytest.raises(ValueError):
        expm(np.zeros((2, 3)))


@pytest.mark.parametrize("A", [
    [[-1.0, 0.0], [0.0, -2.0]],  # real distinct
    [[0.0, 1.0], [-1.0, 0.0]],  # rotation
    [[-3.0, 1.0], [0.0, -3.0]],  # defective
    [[-40.0, -1e4], [1e3, -200.0]],  # buck-like stiff oscillator
])
@pytest.mark.parametrize("h", [1e-9, 1e-6, 1e-3])
def test_expm2_closed_form(A, h):
    A = np.array(A)
    E, Em1 = expm2(A, h)
    ref = scipy_expm(A * h)
    np.testing.assert_allclose(E, ref, rtol=1e-12, atol=1e-14)
    # E - I keeps relative accuracy for small h; the reference sums the series without the identity
    X = A * h
    if np.abs(X).max() < 0.5:
        ref_m1, term = np.zeros((2, 2)), np.eye(2)
        for k in range(1, 40):
            term = term @ X / k
            ref_m1 = ref_m1 + term
        np.testing.assert_allclose(Em1, ref_m1, rtol=1e-9, atol=1e-15 * np.abs(X).max())
    else:
        np.testing.assert_allclose(Em1, ref - np.eye(2), atol=1e-12)
