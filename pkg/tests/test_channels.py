import numpy as np
import pytest

from oracles import bloch_grid_diamond, choi_by_action, random_hp_difference, sdp_diamond
from tdesign import channels as ch
from tdesign.designs import UnitaryEnsemble
from tdesign.groups import X, Z
from tdesign.haar import sample_haar_unitary
from tdesign.linalg import DimensionError, partial_trace


def rand_c(rng, d):
    return rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))


def rand_state(rng, d):
    g = rand_c(rng, d)
    r = g @ g.conj().T
    return r / np.trace(r)


# -- representation ------------------------------------------------------------

def test_choi_convention_matches_action(rng):
    c = ch.random_cptp(3, rng)
    assert np.allclose(c.choi, choi_by_action(c))
    assert np.allclose(ch.Channel.from_choi(c.choi, 3).superop, c.superop)


def test_channel_flags(rng):
    c = ch.random_cptp(2, rng)
    assert c.completely_positive and c.trace_preserving and c.is_cptp
    assert np.allclose(partial_trace(c.choi, [2, 2], keep=[1]), np.eye(2))
    not_tp = c.scaled(0.5)
    assert not not_tp.trace_preserving
    with pytest.raises(ch.NotCPTPError):
        ch.entanglement_fidelity(ch.channel_from_pair(X, Z))


def test_channel_from_pair_examples(rng):
    ident = ch.channel_from_pair(np.eye(2), np.eye(2))
    assert np.allclose(ident.superop, np.eye(4))
    flip = ch.channel_from_pair(X, X)
    assert np.allclose(flip(np.diag([1, 0])), np.diag([0, 1]))
    a, b = rand_c(rng, 3), rand_c(rng, 3)
    m = ch.channel_from_pair(a, b)
    for _ in range(10):
        rho = rand_c(rng, 3)
        assert np.allclose(m(rho), a @ rho @ b)
    with pytest.raises(DimensionError):
        ch.channel_from_pair(np.eye(2), np.eye(3))


def test_composition_order(rng):
    u, v = sample_haar_unitary(2, rng), sample_haar_unitary(2, rng)
    rho = rand_state(rng, 2)
    both = ch.Channel.from_unitary(u).then(ch.Channel.from_unitary(v))
    assert np.allclose(both(rho), v @ u @ rho @ u.conj().T @ v.conj().T)


# -- twirling --------------------------------------------------------------------

@pytest.mark.parametrize("ens", [UnitaryEnsemble.clifford(1), UnitaryEnsemble.pauli(1), UnitaryEnsemble.haar_measure(2)])
def test_twirl_of_identity_is_identity(ens):
    assert np.allclose(ch.twirl(ch.Channel.identity(2), ens).superop, np.eye(4))


def test_clifford_twirl_depolarizes():
    tw = ch.clifford_sum_twirl(ch.amplitude_damping(0.3))
    p = ch.depolarizing_parameter(tw)
    assert np.allclose(tw.superop, ch.depolarizing(2, p).superop, atol=1e-12)
    assert tw.is_cptp


def test_clifford_twirl_matches_haar_twirl(rng):
    for d, n in [(2, 1), (4, 2)]:
        c = ch.random_cptp(d, rng)
        a = ch.twirl(c, UnitaryEnsemble.clifford(n)).superop
        b = ch.twirl(c, UnitaryEnsemble.haar_measure(d)).superop
        assert np.abs(a - b).max() < 1e-10


def test_haar_twirl_monte_carlo(rng):
    c = ch.random_cptp(2, rng)
    us = [sample_haar_unitary(2, rng) for _ in range(20_000)]
    ens = UnitaryEnsemble.uniform(us)
    mc = ch.twirl(c, ens).superop
    exact = ch.twirl(c, UnitaryEnsemble.haar_measure(2)).superop
    assert np.abs(mc - exact).max() < 0.03


def test_twirl_preserves_cptp(rng):
    for _ in range(5):
        c = ch.random_cptp(2, rng, rank=3)
        for ens in (UnitaryEnsemble.clifford(1), UnitaryEnsemble.pauli(1)):
            assert ch.twirl(c, ens).is_cptp


def test_two_copy_twirl_dimension(rng):
    c = ch.random_cptp(4, rng)
    tw = ch.twirl(c, UnitaryEnsemble.clifford(1), t=2)
    assert tw.dim == 4 and tw.is_cptp
    with pytest.raises(DimensionError):
        ch.twirl(c, UnitaryEnsemble.clifford(1), t=1)


def test_schur_form_matches_monte_carlo_haar(rng):
    a, b = rand_c(rng, 2), rand_c(rng, 2)
    us = [sample_haar_unitary(2, rng) for _ in range(20_000)]
    mc = ch.twirl(ch.channel_from_pair(a, b), UnitaryEnsemble.uniform(us)).superop
    scale = np.abs(a).max() * np.abs(b).max()
    assert np.abs(mc - ch.schur_twirl_pair(a, b).superop).max() < 0.05 * scale


def test_pauli_twirl_is_diagonal(rng):
    assert np.allclose(ch.pauli_twirl(ch.Channel.identity(2)).superop, np.eye(4))
    flip = ch.Channel.from_unitary(X)
    assert np.allclose(ch.pauli_twirl(flip).superop, flip.superop)
    for d in (2, 4):
        ptm = ch.pauli_twirl(ch.random_cptp(d, rng)).pauli_transfer()
        off = ptm - np.diag(np.diag(ptm))
        assert np.abs(off).max() <= 1e-10
    with pytest.raises(DimensionError):
        ch.pauli_twirl(ch.random_cptp(3, rng))


# -- fidelities ---------------------------------------------------------------------

def test_depolarizing_parameter():
    assert ch.depolarizing_parameter(ch.Channel.identity(2)) == pytest.approx(1)
    assert ch.depolarizing_parameter(ch.depolarizing(2, 0.0)) == pytest.approx(0, abs=1e-15)
    for w in (0.1, 0.37, 0.9):
        # mixing weight w towards I/2
        assert abs(ch.depolarizing_parameter(ch.depolarizing(2, 1 - w)) - (1 - w)) < 1e-12


def test_entanglement_fidelity(rng):
    assert ch.entanglement_fidelity(ch.Channel.identity(2)) == pytest.approx(1)
    assert ch.entanglement_fidelity(ch.depolarizing(2, 0.0)) == pytest.approx(0.25)
    u = sample_haar_unitary(3, rng)
    phi = np.eye(3).reshape(-1) / np.sqrt(3)
    c = ch.Channel.from_unitary(u)
    direct = np.real(phi.conj() @ (c.choi / 3) @ phi)
    assert ch.entanglement_fidelity(c) == pytest.approx(abs(np.trace(u) / 3) ** 2)
    assert ch.entanglement_fidelity(c) == pytest.approx(direct)


def test_average_gate_fidelity(rng):
    assert ch.avg_gate_fidelity(ch.Channel.identity(2)) == pytest.approx(1)
    assert ch.avg_gate_fidelity(ch.depolarizing(2, 0.0)) == pytest.approx(0.5)
    for d in (2, 3):
        c = ch.random_cptp(d, rng)
        f = ch.avg_gate_fidelity(c)
        assert 0 <= f <= 1
        mean, err = ch.mc_avg_gate_fidelity(c, 10_000, rng)
        assert abs(mean - f) <= 3 * err


def test_gate_fidelity():
    ket0 = np.array([1, 0])
    assert ch.gate_fidelity(ket0, np.eye(2)) == pytest.approx(1)
    assert ch.gate_fidelity(ket0, X) == pytest.approx(0)


# -- diamond norm ---------------------------------------------------------------------

def test_diamond_zero_map(rng):
    c = ch.random_cptp(2, rng)
    assert ch.diamond_norm(c - c) == 0.0


def test_diamond_bit_flip():
    delta = ch.Channel.from_unitary(X) - ch.Channel.identity(2)
    jn = np.abs(np.linalg.eigvalsh(delta.choi)).sum()
    val = ch.diamond_norm(delta)
    assert jn / 2 <= val <= jn
    assert val == pytest.approx(2, abs=1e-6)
    assert abs(val - bloch_grid_diamond(delta)) < 1e-4


def test_diamond_depolarizing_monotone():
    vals = [ch.diamond_norm(ch.depolarizing(2, 1 - w) - ch.Channel.identity(2)) for w in np.arange(1, 10) / 10]
    assert all(b >= a - 1e-9 for a, b in zip(vals, vals[1:]))
    assert vals[0] == pytest.approx(1.5 * 0.1, abs=1e-6)


def test_diamond_rejects_non_hermiticity_preserving():
    with pytest.raises(ValueError):
        ch.diamond_norm(ch.channel_from_pair(np.eye(2), 1j * np.eye(2)))


@pytest.mark.filterwarnings("ignore:Solution may be inaccurate")
@pytest.mark.parametrize("d", [2, 4])
def test_diamond_matches_sdp(d):
    pytest.importorskip("cvxpy")
    gen = np.random.default_rng(100 + d)
    for _ in range(5):
        delta = random_hp_difference(d, gen)
        assert abs(ch.diamond_norm(delta) - sdp_diamond(delta)) < 1e-5


def test_diamond_matches_bloch_grid():
    gen = np.random.default_rng(7)
    for _ in range(3):
        delta = ch.random_cptp(2, gen) - ch.random_cptp(2, gen)
        assert abs(ch.diamond_norm(delta) - bloch_grid_diamond(delta)) < 1e-4


def test_diamond_triangle_inequality():
    gen = np.random.default_rng(11)
    for d in (2, 4):
        for _ in range(5):
            a, b, c = (ch.random_cptp(d, gen) for _ in range(3))
            ab, bc, ac = ch.diamond_norm(a - b), ch.diamond_norm(b - c), ch.diamond_norm(a - c)
            assert ac <= ab + bc + 1e-6


def test_worst_case_error():
    assert ch.worst_case_error(ch.Channel.from_unitary(X)) == pytest.approx(1, abs=1e-6)
