import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from toda.errors import IndexOutOfBackground
from toda.lattice import (
    FreeBackground,
    JacobiCoefficients,
    TridiagonalMatrix,
    apply_operator,
    eigendecompose,
    operator_moment,
    truncate,
)


def test_free_background_extends_constants():
    q = JacobiCoefficients.free(2.0, 0.5, lo=0, hi=1)
    assert q.a_at(-10) == 2.0 and q.b_at(10) == 0.5


def test_no_background_forbids_outside_access():
    q = JacobiCoefficients.finite((1.0, 2.0), (0.5,))
    with pytest.raises(IndexOutOfBackground):
        q.b_at(3)
    with pytest.raises(IndexOutOfBackground):
        q.a_at(1)


def test_a_window_may_include_left_coupling():
    q = JacobiCoefficients(0, (0.3, 0.4), (1.0, 2.0), None)
    assert q.a_start == 0 and q.a_at(0) == 0.3 and q.a_at(1) == 0.4


@pytest.mark.parametrize("a", [(0.0,), (-1.0,), (math.inf,)])
def test_rejects_nonpositive_or_infinite_a(a):
    with pytest.raises(ValueError):
        JacobiCoefficients(1, a, (0.0, 0.0))


def test_dict_round_trip():
    q = JacobiCoefficients(-2, (1.0, 2.0, 3.0), (0.1, 0.2, 0.3), FreeBackground(1.5, -0.5))
    assert JacobiCoefficients.from_dict(q.to_dict()) == q


def test_truncate_free_lattice():
    T = truncate(JacobiCoefficients.free(lo=0, hi=0), 0, 2)
    assert T.diag == (0.0, 0.0, 0.0) and T.offdiag == (1.0, 1.0)


def test_truncate_three_site_window_spectrum():
    q = JacobiCoefficients.finite((0, 0, 0), (math.sqrt(2 / 3), math.sqrt(1 / 3)))
    ev = eigendecompose(truncate(q, 1, 3)).eigenvalues
    np.testing.assert_allclose(ev, [-1, 0, 1], atol=1e-14)


def test_truncate_empty_range():
    with pytest.raises(ValueError):
        truncate(JacobiCoefficients.free(), 2, 1)


def test_eigendecompose_two_by_two():
    es = eigendecompose(TridiagonalMatrix((0.0, 0.0), (1.0,)))
    np.testing.assert_allclose(es.eigenvalues, [-1, 1], atol=1e-15)
    np.testing.assert_allclose(es.weights, [0.5, 0.5], atol=1e-15)


def test_eigendecompose_one_by_one():
    es = eigendecompose(TridiagonalMatrix((5.0,)))
    assert es.eigenvalues.tolist() == [5.0] and es.weights.tolist() == [1.0]


def test_eigendecompose_three_site_weights():
    es = eigendecompose(TridiagonalMatrix((0, 0, 0), (math.sqrt(2 / 3), math.sqrt(1 / 3))))
    np.testing.assert_allclose(es.weights, [1 / 3] * 3, atol=1e-14)


def test_eigendecompose_vectors_match_dense(rng):
    T = TridiagonalMatrix(tuple(rng.standard_normal(30)), tuple(0.1 + rng.random(29)))
    es = eigendecompose(T, vectors=True)
    H = T.to_dense()
    np.testing.assert_allclose(H @ es.vectors, es.vectors * es.eigenvalues, atol=1e-12)
    np.testing.assert_allclose(es.eigenvalues, np.linalg.eigvalsh(H), atol=1e-12)


def test_weight_underflow_is_flagged():
    # strongly localized spectrum: far eigenvectors have tiny first components
    n = 200
    T = TridiagonalMatrix(tuple(50.0 * k for k in range(n)), (1.0,) * (n - 1))
    es = eigendecompose(T)
    assert es.underflow and np.all(es.weights >= 0) and es.weights[-1] == 0.0


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=2, max_size=25), st.data())
def test_weights_form_probability_vector(diag, data):
    off = data.draw(st.lists(st.floats(0.05, 3), min_size=len(diag) - 1, max_size=len(diag) - 1))
    es = eigendecompose(TridiagonalMatrix(tuple(diag), tuple(off)))
    assert np.all(es.weights >= 0)
    assert abs(es.weights.sum() - 1) < 1e-12
    assert np.all(np.diff(es.eigenvalues) >= 0)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.2, 3), st.floats(-2, 2), st.integers(1, 30))
def test_constant_background_spectrum_in_band(a0, b0, n):
    q = JacobiCoefficients.free(a0, b0, lo=0, hi=0)
    ev = eigendecompose(truncate(q, 0, n)).eigenvalues
    assert ev.min() >= b0 - 2 * a0 - 1e-12 and ev.max() <= b0 + 2 * a0 + 1e-12


def test_operator_moment_free_lattice():
    q = JacobiCoefficients.free(lo=0, hi=0)
    assert operator_moment(q, 2, 0) == 2.0
    assert operator_moment(q, 4, 0) == 6.0
    assert operator_moment(q, 0, 5) == 1.0


def test_operator_moment_half_line_sqrt_n():
    q = JacobiCoefficients(1, tuple(math.sqrt(n) for n in range(2, 11)), (0.0,) * 10)
    assert operator_moment(q, 2, 1, dirichlet=True) == pytest.approx(2.0, abs=1e-14)


def test_moments_agree_with_truncated_spectrum(rng):
    q = JacobiCoefficients(-20, tuple(0.5 + rng.random(41)), tuple(rng.standard_normal(41)))
    es = eigendecompose(truncate(q, -10, 10), vectors=True)
    w_center = es.vectors[10] ** 2
    # closed walks of length k from site 0 stay within distance k/2 of it
    for k in range(0, 21):
        spectral = float(np.sum(w_center * es.eigenvalues**k))
        assert spectral == pytest.approx(operator_moment(q, k, 0), rel=1e-10, abs=1e-10)


def test_apply_operator_matches_dense(rng):
    q = JacobiCoefficients(0, tuple(0.5 + rng.random(7)), tuple(rng.standard_normal(8)))
    u = {n: float(rng.standard_normal()) for n in range(8)}
    out = apply_operator(q, u, dirichlet=True)
    H = truncate(q, 0, 7).to_dense()
    ref = H @ np.array([u[n] for n in range(8)])
    np.testing.assert_allclose([out.get(n, 0.0) for n in range(8)], ref, atol=1e-14)
