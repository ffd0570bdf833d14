"""Haar sampling, permutation operators and exact Haar moments.

The closed forms here are computed with :class:`fractions.Fraction` so they
are bit-exact; Monte Carlo estimators live next to them for cross-checks.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class RngStream:
    """A reproducible random stream identified by ``(seed, index)``.

    The generator seed is derived from both numbers through
    :class:`numpy.random.SeedSequence`, so stream ``k`` produces the same
    draws no matter which worker consumes it or in which order.
    """

    seed: int
    index: int = 0
    _gen: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_gen", np.random.default_rng(self.derived_seed()))

    def derived_seed(self) -> int:
        ss = np.random.SeedSequence([self.seed & 0xFFFFFFFFFFFFFFFF, int(self.index)])
        return int(ss.generate_state(1, dtype=np.uint64)[0])

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def child(self, index: int) -> "RngStream":
        """Independent stream keyed by this stream's derived seed and ``index``."""
        return RngStream(self.derived_seed(), index)


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def sample_haar_unitary(dim: int, rng) -> np.ndarray:
    """Haar-random ``dim x dim`` unitary (Ginibre matrix + QR with phase fix)."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    gen = as_generator(rng)
    z = (gen.standard_normal((dim, dim)) + 1j * gen.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def sample_haar_unitaries(dim: int, count: int, rng) -> np.ndarray:
    """Stack of ``count`` independent Haar unitaries, shape ``(count, dim, dim)``."""
    gen = as_generator(rng)
    z = (gen.standard_normal((count, dim, dim)) + 1j * gen.standard_normal((count, dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=1, axis2=2)
    return q * (d / np.abs(d))[:, None, :]


def sample_haar_state(dim: int, rng) -> np.ndarray:
    gen = as_generator(rng)
    v = gen.standard_normal(dim) + 1j * gen.standard_normal(dim)
    return v / np.linalg.norm(v)


# -- permutations -----------------------------------------------------------

def check_permutation(pi: Sequence[int], t: int) -> tuple[int, ...]:
    p = tuple(int(x) for x in pi)
    if len(p) != t or sorted(p) != list(range(t)):
        raise ValueError(f"{pi!r} is not a permutation of 0..{t - 1}")
    return p


def permutations(t: int) -> list[tuple[int, ...]]:
    return list(itertools.permutations(range(t)))


def compose(p: Sequence[int], q: Sequence[int]) -> tuple[int, ...]:
    """``(p q)(k) = p(q(k))``."""
    return tuple(p[q[k]] for k in range(len(q)))


def inverse(p: Sequence[int]) -> tuple[int, ...]:
    inv = [0] * len(p)
    for k, v in enumerate(p):
        inv[v] = k
    return tuple(inv)


def num_cycles(p: Sequence[int]) -> int:
    seen = [False] * len(p)
    count = 0
    for start in range(len(p)):
        if not seen[start]:
            count += 1
            k = start
            while not seen[k]:
                seen[k] = True
                k = p[k]
    return count


@lru_cache(maxsize=None)
def _perm_operator_cached(t: int, dim: int, pi: tuple[int, ...]) -> np.ndarray:
    n = dim**t
    flat = np.arange(n).reshape((dim,) * t) if t else np.arange(1)
    # column index that lands on each row: factor k of the input goes to slot pi[k]
    cols = np.transpose(flat, inverse(pi)).reshape(-1) if t else flat
    v = np.zeros((n, n), dtype=complex)
    v[np.arange(n), cols] = 1.0
    v.setflags(write=False)
    return v


def permutation_operator(t: int, dim: int, pi: Sequence[int]) -> np.ndarray:
    """Operator ``V(pi)`` on ``(C^dim)^{(x)t}`` sending tensor factor ``k`` to slot ``pi[k]``.

    Permutations are zero-based tuples.  ``V(p) @ V(q) == V(compose(p, q))``.
    """
    if t < 1 or dim < 1:
        raise ValueError("t and dim must be positive")
    return _perm_operator_cached(int(t), int(dim), check_permutation(pi, t))


@dataclass(frozen=True)
class PermutationState:
    """``(V_dim(pi) (x) I)|Phi_dim>^{(x)t}`` stored in [t ket slots][t bra slots] order.

    In that layout the state is ``vec(V_dim(pi)) / dim**(t/2)``.
    """

    t: int
    dim: int
    pi: tuple[int, ...]
    vector: np.ndarray = field(repr=False, compare=False)

    @classmethod
    def build(cls, t: int, dim: int, pi: Sequence[int]) -> "PermutationState":
        v = permutation_operator(t, dim, pi).reshape(-1) / dim ** (t / 2)
        return cls(t, dim, check_permutation(pi, t), v)


# -- exact moments ------------------------------------------------------------

def rising_factorial(x: int, k: int) -> int:
    """``x (x+1) ... (x+k-1)``."""
    out = 1
    for j in range(k):
        out *= x + j
    return out


def haar_monomial_average(k: int, t_parts: Sequence[int], dim: int) -> Fraction:
    """Exact ``E|c_1|^{2 t_1} ... |c_k|^{2 t_k}`` over Haar-random unit vectors in ``C^dim``."""
    parts = [int(x) for x in t_parts]
    if k != len(parts):
        raise ValueError("k must equal len(t_parts)")
    if any(x < 1 for x in parts):
        raise ValueError("t_parts must be positive")
    if dim < k:
        raise ValueError(f"monomial over {k} components undefined for dim={dim}")
    t = sum(parts)
    num = math.prod(math.factorial(x) for x in parts)
    return Fraction(num, rising_factorial(dim, t))


def perm_overlap_sum(n: int, t: int, d: int) -> Fraction:
    """``sum_pi |<psi_sigma|psi_pi>|^n = d^n (d^n+1) ... (d^n+t-1) / d^(t n)``."""
    if min(n, t, d) < 1:
        raise ValueError("n, t, d must be >= 1")
    D = d**n
    return Fraction(rising_factorial(D, t), D**t)


def sym_subspace_dim(dim: int, t: int) -> int:
    if dim < 1 or t < 1:
        raise ValueError("dim and t must be >= 1")
    return math.comb(dim + t - 1, t)


def symmetrizer(t: int, dim: int) -> np.ndarray:
    ps = permutations(t)
    return sum(permutation_operator(t, dim, p) for p in ps) / len(ps)


def mc_monomial_average(t_parts: Sequence[int], dim: int, samples: int, rng) -> tuple[float, float]:
    """Monte Carlo mean and standard error of the monomial, using columns of Haar unitaries."""
    gen = as_generator(rng)
    parts = np.asarray(t_parts)
    cols = sample_haar_unitaries(dim, samples, gen)[:, : len(parts), 0]
    vals = np.prod(np.abs(cols) ** (2 * parts), axis=1)
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(samples))
