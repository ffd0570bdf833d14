import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import partial_trace_loops
from tdesign import linalg as la
from tdesign.groups import I2, X, Z


def rand_c(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def rand_herm(rng, d):
    g = rand_c(rng, d, d)
    return (g + g.conj().T) / 2


def test_kron_identities():
    assert np.array_equal(la.kron(I2, I2), np.eye(4))
    assert np.array_equal(la.kron(Z, Z), np.diag([1, -1, -1, 1]))
    ket00 = np.array([1, 0, 0, 0])
    assert np.array_equal(la.kron(X, X) @ ket00, np.array([0, 0, 0, 1]))


small = arrays(np.float64, (3, 3), elements=st.floats(-10, 10))


@settings(max_examples=50, deadline=None)
@given(small, small)
def test_kron_trace_is_multiplicative(a, b):
    lhs = np.trace(la.kron(a, b))
    rhs = np.trace(a) * np.trace(b)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs)) + 1e-9


def test_partial_trace_product_state(rng):
    rho = rand_herm(rng, 2) + 3 * np.eye(2)
    sigma = rand_herm(rng, 3) + 4 * np.eye(3)
    sigma /= np.trace(sigma)
    out = la.partial_trace(np.kron(rho, sigma), [2, 3], keep=[0])
    assert np.allclose(out, rho, atol=1e-12)


def test_partial_trace_of_bell_state_is_maximally_mixed():
    phi = np.array([1, 0, 0, 1]) / np.sqrt(2)
    out = la.partial_trace(np.outer(phi, phi), [2, 2], keep=[1])
    assert np.allclose(out, np.eye(2) / 2)


def test_partial_trace_matches_index_summation(rng):
    m = rand_herm(rng, 4)
    out = la.partial_trace(m, [2, 2], keep=[0])
    assert np.allclose(out, partial_trace_loops(m, [2, 2], [0]), atol=1e-13)
    assert abs(np.trace(out) - np.trace(m)) < 1e-12
    m3 = rand_c(rng, 12, 12)
    for keep in ([0], [1], [2], [0, 2], [1, 2], []):
        assert np.allclose(la.partial_trace(m3, [2, 3, 2], keep), partial_trace_loops(m3, [2, 3, 2], keep))


def test_partial_trace_composes(rng):
    m = rand_c(rng, 12, 12)
    step = la.partial_trace(m, [2, 3, 2], keep=[0, 2])
    step = la.partial_trace(step, [2, 2], keep=[0])
    assert np.allclose(step, la.partial_trace(m, [2, 3, 2], keep=[0]), atol=1e-12)


def test_partial_trace_dimension_mismatch():
    with pytest.raises(la.DimensionError):
        la.partial_trace(np.eye(4), [2, 3], keep=[0])


def test_schatten_norms(rng):
    assert la.schatten_norm(np.eye(5), 1) == pytest.approx(5)
    q, _ = np.linalg.qr(rand_c(rng, 4, 4))
    assert la.schatten_norm(q, np.inf) == pytest.approx(1, abs=1e-12)
    m = rand_c(rng, 3, 3)
    s = np.linalg.svd(m, compute_uv=False)
    n1, n2, ninf = (la.schatten_norm(m, p) for p in (1, 2, np.inf))
    assert ninf <= n2 <= n1
    assert n1 == pytest.approx(s.sum()) and ninf == pytest.approx(s.max())
    assert n2**2 == pytest.approx(np.sum(np.abs(m) ** 2))
    with pytest.raises(ValueError):
        la.schatten_norm(m, 3)


def test_hermitian_eigs_examples():
    w, _ = la.hermitian_eigs(np.diag([3.0, 1.0, 2.0]))
    assert np.allclose(w, [1, 2, 3])
    w, _ = la.hermitian_eigs(X)
    assert np.allclose(w, [-1, 1])
    with pytest.raises(ValueError):
        la.hermitian_eigs(np.array([[0, 1], [0, 0]]))


def test_hermitian_eigs_reconstruction(rng):
    m = rand_herm(rng, 6)
    w, v = la.hermitian_eigs(m)
    assert np.all(np.diff(w) >= 0)
    assert np.allclose(v.conj().T @ v, np.eye(6), atol=1e-12)
    assert np.abs(v @ np.diag(w) @ v.conj().T - m).max() < 1e-9
    scale = np.abs(m).sum(axis=1).max()
    assert np.abs(m @ v - v * w).max() < 1e-9 * scale


def test_phase_normalisation(rng):
    q, _ = np.linalg.qr(rand_c(rng, 3, 3))
    assert la.equal_up_to_phase(q, np.exp(0.7j) * q)
    assert not la.equal_up_to_phase(q, q @ np.diag([1, 1, -1]))
