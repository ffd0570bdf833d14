"""Dense complex linear algebra shared by every other module.

Matrices are plain ``numpy`` arrays of dtype ``complex128``.  Superoperators
use the row-major vectorisation ``vec(X)[i*D + j] = X[i, j]`` throughout, so
that ``vec(A X B) = kron(A, B.T) @ vec(X)``.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

EQ_TOL = 1e-10
NUM_TOL = 1e-8


class DimensionError(ValueError):
    """Raised when operand shapes are inconsistent."""


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    return a


def kron(a, b) -> np.ndarray:
    return np.kron(as_matrix(a), as_matrix(b))


def kron_all(mats: Iterable) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, as_matrix(m))
    return out


def dagger(m) -> np.ndarray:
    return np.conj(np.asarray(m)).T


def is_hermitian(m, tol: float = 1e-12) -> bool:
    a = as_matrix(m)
    return bool(np.max(np.abs(a - a.conj().T), initial=0.0) <= tol)


def is_unitary(m, tol: float = 1e-12) -> bool:
    a = as_matrix(m)
    return bool(np.max(np.abs(a @ a.conj().T - np.eye(a.shape[0])), initial=0.0) <= tol)


def partial_trace(m, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep``.

    ``dims`` lists the subsystem dimensions, most significant first, and
    ``keep`` holds zero-based subsystem indices.  The kept subsystems stay in
    their original order.
    """
    a = as_matrix(m)
    dims = [int(x) for x in dims]
    if any(x < 1 for x in dims):
        raise DimensionError("subsystem dimensions must be positive")
    if int(np.prod(dims)) != a.shape[0]:
        raise DimensionError(f"dims {dims} do not multiply to {a.shape[0]}")
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise DimensionError(f"keep indices {keep} out of range")

    nsys = len(dims)
    t = a.reshape(dims + dims)
    # einsum labels: row index i -> i, column index -> i + nsys, traced ones share labels
    row = list(range(nsys))
    col = [i if i not in keep else i + nsys for i in range(nsys)]
    out = [k for k in keep] + [k + nsys for k in keep]
    res = np.einsum(t, row + col, out)
    d_keep = int(np.prod([dims[k] for k in keep])) if keep else 1
    return np.asarray(res).reshape(d_keep, d_keep)


def schatten_norm(m, p) -> float:
    """Schatten p-norm for p in {1, 2, inf}."""
    a = as_matrix(m)
    if p == 2:
        return float(np.linalg.norm(a, "fro"))
    if p == 1:
        return float(np.sum(np.linalg.svd(a, compute_uv=False)))
    if p in (np.inf, "inf", float("inf")):
        return float(np.linalg.norm(a, 2)) if a.size else 0.0
    raise ValueError(f"unsupported Schatten index p={p!r}; use 1, 2 or inf")


def hermitian_eigs(m, tol: float = EQ_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvectors (columns)."""
    a = as_matrix(m)
    if not is_hermitian(a, tol):
        raise ValueError("hermitian_eigs: input is not Hermitian")
    w, v = np.linalg.eigh((a + a.conj().T) / 2)
    return w, v


def sqrtm_psd(m) -> np.ndarray:
    """Square root of a Hermitian PSD matrix; tiny negative eigenvalues are clipped."""
    w, v = np.linalg.eigh((as_matrix(m) + dagger(m)) / 2)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def trace_norm_hermitian(m) -> float:
    a = as_matrix(m)
    return float(np.sum(np.abs(np.linalg.eigvalsh((a + a.conj().T) / 2))))


def vec(x) -> np.ndarray:
    return np.asarray(x, dtype=complex).reshape(-1)


def unvec(v, dim: int) -> np.ndarray:
    return np.asarray(v, dtype=complex).reshape(dim, dim)


def normalize_phase(u, tol: float = EQ_TOL) -> np.ndarray:
    """Rescale ``u`` by a global phase so its first nonzero entry is real positive."""
    a = np.asarray(u, dtype=complex)
    flat = a.reshape(-1)
    idx = int(np.argmax(np.abs(flat) > tol))
    z = flat[idx]
    if abs(z) <= tol:
        return a.copy()
    return a * (abs(z) / z)


def equal_up_to_phase(a, b, tol: float = EQ_TOL) -> bool:
    return bool(np.allclose(normalize_phase(a), normalize_phase(b), atol=tol, rtol=0))
