import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tdesign import haar
from tdesign.haar import RngStream


def test_rng_stream_reproducible():
    a = RngStream(7, 3).generator.standard_normal(5)
    b = RngStream(7, 3).generator.standard_normal(5)
    c = RngStream(7, 4).generator.standard_normal(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert RngStream(7, 3).child(1).derived_seed() == RngStream(7, 3).child(1).derived_seed()


@pytest.mark.parametrize("dim", [1, 2, 3, 5])
def test_haar_unitary_is_unitary(dim):
    u = haar.sample_haar_unitary(dim, RngStream(1, dim))
    assert np.abs(u @ u.conj().T - np.eye(dim)).max() < 1e-12
    if dim == 1:
        assert abs(abs(u[0, 0]) - 1) < 1e-12


def test_batched_sampler_is_unitary():
    us = haar.sample_haar_unitaries(4, 50, 0)
    res = np.einsum("nij,nkj->nik", us, us.conj()) - np.eye(4)
    assert np.abs(res).max() < 1e-12


def test_mean_u00_squared_dim2():
    mean, err = haar.mc_monomial_average([1], 2, 100_000, RngStream(11, 0))
    assert abs(mean - 0.5) <= 3 * err


def test_left_invariance_statistic():
    # E|(V U)_00|^4 equals the Haar value for any fixed V
    gen = np.random.default_rng(3)
    v = haar.sample_haar_unitary(2, gen)
    us = haar.sample_haar_unitaries(2, 50_000, gen)
    vals = np.abs(np.einsum("ij,njk->nik", v, us)[:, 0, 0]) ** 4
    assert abs(vals.mean() - 1 / 3) <= 3 * vals.std() / np.sqrt(len(vals))


def test_first_moment_is_rank_one_projector():
    us = haar.sample_haar_unitaries(2, 40_000, 5)
    m = np.einsum("nij,nkl->ikjl", us, us.conj()).reshape(4, 4) / len(us)
    phi = np.eye(2).reshape(-1) / np.sqrt(2)
    assert np.abs(m - np.outer(phi, phi)).max() < 0.02


@pytest.mark.parametrize(
    "k, parts, dim, expected",
    [(1, (1,), 2, Fraction(1, 2)), (1, (2,), 2, Fraction(1, 3)), (2, (1, 1), 2, Fraction(1, 6))],
)
def test_haar_monomial_examples(k, parts, dim, expected):
    assert haar.haar_monomial_average(k, parts, dim) == expected


def test_monomial_rejects_small_dim():
    with pytest.raises(ValueError):
        haar.haar_monomial_average(3, (1, 1, 1), 2)


@pytest.mark.parametrize("dim", [2, 4])
@pytest.mark.parametrize("parts", [(1,), (2,), (3,), (1, 1), (2, 1)])
def test_monomial_monte_carlo(dim, parts):
    exact = float(haar.haar_monomial_average(len(parts), parts, dim))
    mean, err = haar.mc_monomial_average(parts, dim, 100_000, RngStream(99, dim * 10 + sum(parts)))
    assert abs(mean - exact) <= 3 * err


def test_perm_overlap_examples():
    assert haar.perm_overlap_sum(3, 1, 2) == 1
    assert haar.perm_overlap_sum(1, 2, 2) == Fraction(3, 2)
    assert haar.perm_overlap_sum(2, 2, 2) == Fraction(5, 4)


@pytest.mark.parametrize("d, n", [(2, 1), (2, 2), (3, 1), (4, 1)])
@pytest.mark.parametrize("t", [1, 2, 3])
def test_perm_overlap_brute_force(d, n, t):
    sigma = tuple(range(t))
    ref = haar.PermutationState.build(t, d, sigma).vector
    numeric = 0.0
    exact = Fraction(0)
    for pi in haar.permutations(t):
        psi = haar.PermutationState.build(t, d, pi).vector
        numeric += abs(np.vdot(ref, psi)) ** n
        c = haar.num_cycles(haar.compose(haar.inverse(sigma), pi))
        exact += Fraction(d**c, d**t) ** n
    assert exact == haar.perm_overlap_sum(n, t, d)
    assert abs(numeric - float(exact)) < 1e-10


def test_permutation_state_properties():
    for t, dim in [(1, 2), (2, 2), (3, 3)]:
        for pi in haar.permutations(t):
            assert abs(np.linalg.norm(haar.PermutationState.build(t, dim, pi).vector) - 1) < 1e-12
    phi = np.eye(2).reshape(-1) / np.sqrt(2)
    ident = haar.PermutationState.build(2, 2, (0, 1)).vector
    # vec(I_4) in [ket][bra] order is the two-copy maximally entangled state
    assert np.allclose(ident, np.eye(4).reshape(-1) / 2)
    assert np.allclose(haar.PermutationState.build(1, 2, (0,)).vector, phi)


def test_sym_subspace_dim():
    assert haar.sym_subspace_dim(5, 1) == 5
    assert haar.sym_subspace_dim(2, 2) == 3
    assert haar.sym_subspace_dim(3, 2) == 6
    for dim, t in [(2, 2), (3, 2), (2, 3)]:
        assert np.real(np.trace(haar.symmetrizer(t, dim))) == pytest.approx(haar.sym_subspace_dim(dim, t))


def test_sym_dim_by_enumeration():
    # multisets of size 2 from 3 labels
    assert len({tuple(sorted(c)) for c in itertools.product(range(3), repeat=2)}) == haar.sym_subspace_dim(3, 2)


def test_permutation_operator_examples():
    assert np.array_equal(haar.permutation_operator(3, 2, (0, 1, 2)), np.eye(8))
    swap = np.eye(4)[[0, 2, 1, 3]]
    assert np.array_equal(haar.permutation_operator(2, 2, (1, 0)), swap)
    with pytest.raises(ValueError):
        haar.permutation_operator(2, 2, (0, 0))


@settings(max_examples=30, deadline=None)
@given(st.permutations(range(3)), st.permutations(range(3)))
def test_permutation_operator_is_a_representation(p, q):
    p, q = tuple(p), tuple(q)
    vp = haar.permutation_operator(3, 2, p)
    vq = haar.permutation_operator(3, 2, q)
    assert np.allclose(vp @ vq, haar.permutation_operator(3, 2, haar.compose(p, q)))
    assert np.allclose(vp @ haar.permutation_operator(3, 2, haar.inverse(p)), np.eye(8), atol=1e-12)


def test_rising_factorial():
    assert haar.rising_factorial(4, 3) == 4 * 5 * 6
    assert haar.perm_overlap_sum(2, 3, 2) == Fraction(4 * 5 * 6, 4**3)
    assert math.comb(4, 2) == haar.sym_subspace_dim(3, 2)
