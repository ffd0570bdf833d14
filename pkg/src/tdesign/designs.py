"""Unitary ensembles, t-th moment operators and design quality measures.

The t-th moment operator of an ensemble ``nu`` is
``M_nu = E_nu[U^{(x)t} (x) conj(U)^{(x)t}]`` on ``dim**(2t)`` dimensions, laid out
as [t ket copies][t bra copies].  It acts on ``vec(X)`` as the twirl
``X -> E[U^{(x)t} X U^{dagger (x)t}]``.  For the Haar measure it is the
orthogonal projector onto ``span{vec V(pi)}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import groups
from .haar import (
    compose,
    inverse,
    num_cycles,
    permutation_operator,
    permutations,
)
from .linalg import schatten_norm

DENSE_CAP = 4096


class ResourceCapError(MemoryError):
    """Dense object would exceed the configured row cap."""


@dataclass(frozen=True)
class UnitaryEnsemble:
    """Finite weighted set of unitaries, or the Haar measure when ``haar`` is set."""

    dim: int
    unitaries: Optional[np.ndarray] = field(default=None, repr=False)
    weights: Optional[np.ndarray] = field(default=None, repr=False)
    haar: bool = False
    name: str = ""

    def __post_init__(self):
        if self.haar:
            return
        u = np.asarray(self.unitaries, dtype=complex)
        if u.ndim != 3 or u.shape[1:] != (self.dim, self.dim):
            raise ValueError(f"unitaries must have shape (N, {self.dim}, {self.dim})")
        w = np.full(len(u), 1.0 / len(u)) if self.weights is None else np.asarray(self.weights, float)
        if len(w) != len(u) or np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
            raise ValueError("weights must be nonnegative, one per member, and sum to 1")
        resid = np.abs(np.einsum("nij,nkj->nik", u, u.conj()) - np.eye(self.dim)).max()
        if resid > 1e-12:
            raise ValueError(f"ensemble member not unitary (residual {resid:.2e})")
        object.__setattr__(self, "unitaries", u)
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        if self.haar:
            raise TypeError("the Haar ensemble has no finite size")
        return len(self.unitaries)

    @classmethod
    def haar_measure(cls, dim: int) -> "UnitaryEnsemble":
        return cls(dim, haar=True, name=f"haar{dim}")

    @classmethod
    def uniform(cls, unitaries, name: str = "") -> "UnitaryEnsemble":
        u = np.asarray(unitaries, dtype=complex)
        return cls(u.shape[1], u, None, name=name)

    @classmethod
    def clifford(cls, n: int) -> "UnitaryEnsemble":
        return cls.uniform(groups.clifford_unitaries(n), name=f"clifford{n}")

    @classmethod
    def pauli(cls, n: int) -> "UnitaryEnsemble":
        return cls.uniform(groups.pauli_matrices(n), name=f"pauli{n}")

    @classmethod
    def point(cls, u) -> "UnitaryEnsemble":
        u = np.asarray(u, dtype=complex)
        return cls.uniform(u[None], name="point")

    def convolve(self, other: "UnitaryEnsemble") -> "UnitaryEnsemble":
        """Distribution of ``V U`` with ``U ~ self`` and ``V ~ other`` independent."""
        if self.haar or other.haar:
            raise TypeError("convolution is only defined here for finite ensembles")
        prods = np.einsum("aij,bjk->baik", self.unitaries, other.unitaries).reshape(-1, self.dim, self.dim)
        w = np.outer(other.weights, self.weights).reshape(-1)
        return UnitaryEnsemble(self.dim, prods, w / w.sum(), name=f"{self.name}*{other.name}")

    def sample(self, rng) -> np.ndarray:
        from .haar import as_generator, sample_haar_unitary

        gen = as_generator(rng)
        if self.haar:
            return sample_haar_unitary(self.dim, gen)
        i = gen.choice(len(self.unitaries), p=self.weights)
        return self.unitaries[i]


@dataclass(frozen=True)
class MomentOperator:
    t: int
    dim: int
    matrix: np.ndarray = field(repr=False)


def _check_cap(dim: int, t: int, cap: int):
    rows = dim ** (2 * t)
    if rows > cap:
        raise ResourceCapError(
            f"dense moment operator needs {rows} rows (> cap {cap}); "
            "use the matrix-free walk Hamiltonian in tdesign.walk instead"
        )


def tensor_power_stack(us: np.ndarray, t: int) -> np.ndarray:
    """``U^{(x)t} (x) conj(U)^{(x)t}`` for every ``U`` in a stack."""
    n, d, _ = us.shape
    out = np.ones((n, 1, 1), dtype=complex)
    for factor in [us] * t + [us.conj()] * t:
        out = np.einsum("nij,nkl->nikjl", out, factor).reshape(n, out.shape[1] * d, out.shape[2] * d)
    return out


def moment_operator(ensemble: UnitaryEnsemble, t: int, cap: int = DENSE_CAP) -> MomentOperator:
    if t < 1:
        raise ValueError("t must be >= 1")
    _check_cap(ensemble.dim, t, cap)
    if ensemble.haar:
        return haar_moment_operator(ensemble.dim, t)
    rows = ensemble.dim ** (2 * t)
    acc = np.zeros((rows, rows), dtype=complex)
    # keep each batch of tensor powers around 2**22 entries
    batch = max(1, 2**22 // rows**2)
    for s in range(0, len(ensemble.unitaries), batch):
        block = tensor_power_stack(ensemble.unitaries[s : s + batch], t)
        acc += np.einsum("n,nij->ij", ensemble.weights[s : s + batch], block)
    return MomentOperator(t, ensemble.dim, acc)


def permutation_gram(dim: int, t: int) -> np.ndarray:
    """``G[p, q] = tr(V(p)^dagger V(q)) = dim ** cycles(p^-1 q)``."""
    ps = permutations(t)
    return np.array([[float(dim) ** num_cycles(compose(inverse(p), q)) for q in ps] for p in ps])


def haar_moment_operator(dim: int, t: int, cap: int = DENSE_CAP, allow_rank_deficient: bool = False) -> MomentOperator:
    """Projector ``sum_{p,q} (G^-1)[p,q] |v_p><v_q|`` with ``v_p = vec(V(p))``.

    Requires ``t <= dim`` so that the permutation operators are linearly
    independent.  With ``allow_rank_deficient=True`` the span is
    orthonormalised by SVD instead, which also covers ``t > dim``.
    """
    if t < 1 or dim < 1:
        raise ValueError("dim and t must be >= 1")
    _check_cap(dim, t, cap)
    ps = permutations(t)
    vs = np.stack([permutation_operator(t, dim, p).reshape(-1) for p in ps], axis=1)
    if t <= dim:
        g = permutation_gram(dim, t)
        proj = vs @ np.linalg.solve(g, vs.conj().T)
    elif allow_rank_deficient:
        u, s, _ = np.linalg.svd(vs, full_matrices=False)
        basis = u[:, s > 1e-10 * s[0]]
        proj = basis @ basis.conj().T
    else:
        raise ValueError(
            f"t={t} > dim={dim}: permutation operators are dependent; "
            "average over an exact design ensemble instead"
        )
    return MomentOperator(t, dim, proj)


def design_distance(ensemble: UnitaryEnsemble, t: int, cap: int = DENSE_CAP) -> float:
    """``|| M_nu - M_Haar ||_inf``; zero exactly for a t-design."""
    m = moment_operator(ensemble, t, cap).matrix
    h = haar_moment_operator(ensemble.dim, t, cap, allow_rank_deficient=True).matrix
    return schatten_norm(m - h, np.inf)


def frame_potential(ensemble: UnitaryEnsemble, t: int) -> float:
    """``sum_{i,j} w_i w_j |tr(U_i^dagger U_j)|^{2t}``."""
    if ensemble.haar:
        raise TypeError("frame potential of the Haar measure: use haar_value(dim, t)")
    us = ensemble.unitaries
    w = ensemble.weights
    flat = us.reshape(len(us), -1)
    # tr(U_a^dagger U_b) is the Hilbert-Schmidt inner product of the flattened matrices
    tr = np.abs(flat.conj() @ flat.T) ** (2 * t)
    return float(w @ tr @ w)


def haar_value(dim: int, t: int) -> float:
    """Haar frame potential, i.e. the rank of the Haar moment projector."""
    if t <= dim:
        import math

        return float(math.factorial(t))
    return float(np.real(np.trace(haar_moment_operator(dim, t, allow_rank_deficient=True).matrix)))


def named_ensemble(name: str) -> UnitaryEnsemble:
    """Parse CLI ensemble names such as ``clifford1``, ``clifford2``, ``pauli1``."""
    for prefix, ctor in (("clifford", UnitaryEnsemble.clifford), ("pauli", UnitaryEnsemble.pauli)):
        if name.startswith(prefix):
            return ctor(int(name[len(prefix):] or 1))
    raise ValueError(f"unknown ensemble {name!r}")

