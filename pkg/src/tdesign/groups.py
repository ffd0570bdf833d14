"""Pauli and Clifford groups on one and two qubits, modulo global phase."""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .haar import as_generator
from .linalg import kron_all, normalize_phase

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
S = np.array([[1, 0], [0, 1j]], dtype=complex)
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)

_SINGLE = {(0, 0): I2, (1, 0): X, (1, 1): Y, (0, 1): Z}


class UnsupportedSizeError(ValueError):
    pass


@dataclass(frozen=True)
class PauliElement:
    """Pauli string in symplectic form; ``(x, z) = (1, 1)`` on a qubit means ``Y``."""

    x_bits: tuple[int, ...]
    z_bits: tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.x_bits)

    @property
    def label(self) -> str:
        names = {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}
        return "".join(names[(x, z)] for x, z in zip(self.x_bits, self.z_bits))

    def matrix(self) -> np.ndarray:
        if self.n > 5:
            raise UnsupportedSizeError("Pauli matrices are only realised for n <= 5")
        return kron_all(_SINGLE[(x, z)] for x, z in zip(self.x_bits, self.z_bits))


def pauli_group(n: int) -> list[PauliElement]:
    """All ``4**n`` Pauli strings, identity first, in lexicographic ``I, X, Y, Z`` order."""
    if n < 1:
        raise ValueError("n must be >= 1")
    order = [(0, 0), (1, 0), (1, 1), (0, 1)]
    out = []
    for combo in itertools.product(order, repeat=n):
        out.append(PauliElement(tuple(c[0] for c in combo), tuple(c[1] for c in combo)))
    return out


@lru_cache(maxsize=None)
def pauli_matrices(n: int) -> np.ndarray:
    mats = np.stack([p.matrix() for p in pauli_group(n)])
    mats.setflags(write=False)
    return mats


@dataclass(frozen=True)
class CliffordElement:
    n: int
    index: int
    unitary: np.ndarray = field(repr=False, compare=False)

    def inverse(self) -> "CliffordElement":
        return find_clifford(self.unitary.conj().T)


def _key(u: np.ndarray) -> bytes:
    v = normalize_phase(u)
    # 1e-8 grid is far coarser than accumulated round-off for these products
    r = np.round(np.concatenate([v.real.ravel(), v.imag.ravel()]) * 1e8).astype(np.int64)
    r[r == 0] = 0
    return r.tobytes()


def _generators(n: int) -> list[np.ndarray]:
    if n == 1:
        return [H, S]
    if n == 2:
        return [np.kron(H, I2), np.kron(I2, H), np.kron(S, I2), np.kron(I2, S), CNOT]
    raise UnsupportedSizeError(f"Clifford enumeration supports n in {{1, 2}}, got n={n}")


@lru_cache(maxsize=None)
def _clifford_table(n: int) -> tuple[np.ndarray, dict]:
    gens = _generators(n)
    dim = 2**n
    start = np.eye(dim, dtype=complex)
    seen = {_key(start): 0}
    mats = [start]
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for g in gens:
            w = normalize_phase(g @ u)
            k = _key(w)
            if k not in seen:
                seen[k] = len(mats)
                mats.append(w)
                queue.append(w)
    table = np.stack(mats)
    table.setflags(write=False)
    return table, seen


def clifford_group(n: int) -> list[CliffordElement]:
    """Every Clifford unitary on ``n`` qubits, one per phase class, in BFS order from the identity."""
    table, _ = _clifford_table(n)
    return [CliffordElement(n, i, table[i]) for i in range(len(table))]


def clifford_unitaries(n: int) -> np.ndarray:
    """Read-only stack ``(|C|, 2**n, 2**n)`` of phase-normalised Clifford unitaries."""
    return _clifford_table(n)[0]


def find_clifford(u: np.ndarray) -> CliffordElement:
    dim = u.shape[0]
    n = int(round(np.log2(dim)))
    table, seen = _clifford_table(n)
    idx = seen.get(_key(u))
    if idx is None:
        raise ValueError("matrix is not a Clifford unitary (up to phase)")
    return CliffordElement(n, idx, table[idx])


def normalizes_paulis(u: np.ndarray, tol: float = 1e-10) -> bool:
    """True when ``u P u^dagger`` is a phase times a Pauli string for every Pauli ``P``."""
    dim = u.shape[0]
    n = int(round(np.log2(dim)))
    paulis = pauli_matrices(n)
    for p in paulis:
        c = u @ p @ u.conj().T
        # overlaps with every Pauli; exactly one must have modulus dim
        ov = np.abs(np.einsum("kij,ji->k", paulis.conj(), c)) / dim
        if not (np.isclose(ov.max(), 1.0, atol=tol) and np.sum(ov > tol) == 1):
            return False
    return True


def uniform_clifford(n: int, rng) -> CliffordElement:
    table, _ = _clifford_table(n)
    i = int(as_generator(rng).integers(len(table)))
    return CliffordElement(n, i, table[i])
