import numpy as np
import pytest
from scipy.stats import chisquare

from tdesign import groups
from tdesign.haar import RngStream
from tdesign.linalg import normalize_phase


def _pauli_index(m, n):
    """Index of the Pauli string equal to ``m`` up to phase, else ``None``."""
    for k, p in enumerate(groups.pauli_matrices(n)):
        ov = np.vdot(p, m) / 2**n
        if abs(abs(ov) - 1) < 1e-10:
            return k
    return None


def test_pauli_group_sizes_and_labels():
    p1 = groups.pauli_group(1)
    assert [p.label for p in p1] == ["I", "X", "Y", "Z"]
    assert len(groups.pauli_group(2)) == 16
    assert len(groups.pauli_group(3)) == 64


@pytest.mark.parametrize("n", [1, 2])
def test_pauli_squares_and_closure(n):
    mats = groups.pauli_matrices(n)
    for a in mats:
        assert np.allclose(a @ a, np.eye(2**n))
        assert np.allclose(a, a.conj().T)
        for b in mats:
            assert _pauli_index(a @ b, n) is not None


def test_pauli_matrix_size_limit():
    big = groups.PauliElement((0,) * 6, (0,) * 6)
    with pytest.raises(groups.UnsupportedSizeError):
        big.matrix()


@pytest.mark.parametrize("n, size", [(1, 24), (2, 11520)])
def test_clifford_group_order(n, size):
    assert len(groups.clifford_group(n)) == size


def test_clifford_rejects_three_qubits():
    with pytest.raises(groups.UnsupportedSizeError):
        groups.clifford_group(3)


def test_single_qubit_cliffords_normalize_paulis():
    for c in groups.clifford_group(1):
        img = c.unitary @ groups.X @ c.unitary.conj().T
        assert _pauli_index(img, 1) in (1, 2, 3)
        assert groups.normalizes_paulis(c.unitary)


def test_two_qubit_cliffords_normalize_paulis_sampled():
    us = groups.clifford_unitaries(2)
    for idx in np.random.default_rng(0).choice(len(us), 200, replace=False):
        assert groups.normalizes_paulis(us[idx])


def test_non_clifford_detected():
    t_gate = np.diag([1, np.exp(1j * np.pi / 4)])
    assert not groups.normalizes_paulis(t_gate)
    with pytest.raises(ValueError):
        groups.find_clifford(t_gate)


@pytest.mark.parametrize("n", [1, 2])
def test_phase_quotient_has_no_duplicates(n):
    us = groups.clifford_unitaries(n)
    flat = np.stack([normalize_phase(u).reshape(-1) for u in us])
    # pairwise |<U_a, U_b>| = dim only when equal up to phase
    if n == 1:
        ov = np.abs(flat.conj() @ flat.T) / 2
        np.fill_diagonal(ov, 0)
        assert ov.max() < 1 - 1e-10
    else:
        keys = {tuple(np.round(f, 9)) for f in flat}
        assert len(keys) == len(us)


def test_single_qubit_closure():
    us = groups.clifford_unitaries(1)
    for a in us:
        for b in us:
            groups.find_clifford(a @ b)


def test_inverse_lookup():
    for c in groups.clifford_group(1):
        inv = c.inverse()
        prod = inv.unitary @ c.unitary
        assert np.allclose(normalize_phase(prod), np.eye(2), atol=1e-10)


def test_uniform_clifford_frequencies():
    gen = RngStream(5, 0).generator
    counts = np.bincount([groups.uniform_clifford(1, gen).index for _ in range(100_000)], minlength=24)
    expected = 100_000 / 24
    sigma = np.sqrt(expected * (1 - 1 / 24))
    assert np.all(np.abs(counts - expected) <= 4 * sigma)
    assert chisquare(counts).pvalue > 1e-3


def test_uniform_clifford_reproducible():
    a = groups.uniform_clifford(2, RngStream(9, 1)).index
    b = groups.uniform_clifford(2, RngStream(9, 1)).index
    assert a == b
    assert groups.normalizes_paulis(groups.uniform_clifford(2, RngStream(9, 1)).unitary)
