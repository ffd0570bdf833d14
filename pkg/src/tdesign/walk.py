"""Local random unitary walk on a ring and its frustration-free Hamiltonian.

Vectors of the t-th moment space are laid out site-major: site ``s``
carries ``2t`` slots of dimension ``d`` (t ket copies, then t bra copies),
so a product of per-site vectors ``psi_s`` is simply ``kron(psi_1, ..., psi_n)``.
The two-site projector ``P_{i,i+1}`` is the Haar moment projector on
``U(d^2)``; ``H = (1/n) sum_i (I - P_{i,i+1})`` with site ``n+1 == 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .designs import DENSE_CAP, ResourceCapError, haar_moment_operator
from .haar import PermutationState, as_generator, permutations, sample_haar_unitary


class GapConvergenceError(RuntimeError):
    """Power iteration hit its cap; ``lower``/``upper`` bracket the gap."""

    def __init__(self, msg: str, lower: float, upper: float, iterations: int):
        super().__init__(f"{msg} after {iterations} iterations (gap in [{lower:.10g}, {upper:.10g}])")
        self.lower = lower
        self.upper = upper
        self.iterations = iterations


@dataclass(frozen=True)
class WalkConfig:
    n: int
    d: int = 2
    t: int = 1

    def __post_init__(self):
        if self.n < 2 or self.d < 2 or self.t < 1:
            raise ValueError("need n >= 2, d >= 2, t >= 1")

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return [(i, (i + 1) % self.n) for i in range(self.n)]

    @property
    def vector_dim(self) -> int:
        return self.d ** (2 * self.t * self.n)


# -- the walk itself -------------------------------------------------------------

def apply_two_site(u: np.ndarray, i: int, j: int, n: int, d: int, state: np.ndarray) -> np.ndarray:
    """Left-multiply ``state`` (``d^n x m``) by ``u`` acting on sites ``(i, j)``, site ``i`` leading."""
    m = state.shape[1]
    tens = state.reshape((d,) * n + (m,))
    tens = np.moveaxis(tens, (i, j), (0, 1)).reshape(d * d, -1)
    tens = (u @ tens).reshape((d, d) + (d,) * (n - 2) + (m,))
    tens = np.moveaxis(tens, (0, 1), (i, j))
    return tens.reshape(d**n, m)


def embed_pair(u: np.ndarray, i: int, j: int, n: int, d: int) -> np.ndarray:
    return apply_two_site(u, i, j, n, d, np.eye(d**n, dtype=complex))


def sample_walk_gate(n: int, d: int, rng) -> tuple[int, np.ndarray]:
    """Uniform site ``i`` and a Haar two-site unitary on ``(i, i+1 mod n)``."""
    gen = as_generator(rng)
    i = int(gen.integers(n))
    return i, sample_haar_unitary(d * d, gen)


def walk_step(state: np.ndarray, n: int, d: int, rng) -> np.ndarray:
    if n < 2:
        raise ValueError("the walk needs n >= 2 sites")
    i, u = sample_walk_gate(n, d, rng)
    return apply_two_site(u, i, (i + 1) % n, n, d, np.asarray(state, dtype=complex))


# -- Hamiltonian -------------------------------------------------------------------

def site_major_permutation(n: int, t: int) -> list[int]:
    """Axis permutation taking the copy-major moment layout to the site-major layout."""
    return [c * n + s for s in range(n) for c in range(2 * t)]


def to_site_major(op: np.ndarray, n: int, d: int, t: int) -> np.ndarray:
    """Re-index a copy-major moment-space operator (as built by ``designs``) site-major."""
    k = 2 * t * n
    perm = site_major_permutation(n, t)
    tens = op.reshape((d,) * (2 * k))
    tens = tens.transpose(perm + [k + p for p in perm])
    return tens.reshape(op.shape)


@dataclass
class WalkHamiltonian:
    config: WalkConfig
    cap: int = DENSE_CAP
    local_projector: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        c = self.config
        rows = c.d ** (4 * c.t)
        if rows > self.cap:
            raise ResourceCapError(f"two-site projector needs {rows} rows (> cap {self.cap})")
        p = haar_moment_operator(c.d**2, c.t, cap=self.cap).matrix
        # permutation-operator projectors are real
        self.local_projector = np.ascontiguousarray(p.real)
        self._pair_axes = []
        for i, j in c.pairs:
            axes = []
            for slot in range(2 * c.t):
                axes += [i * 2 * c.t + slot, j * 2 * c.t + slot]
            self._pair_axes.append(axes)

    @property
    def dim(self) -> int:
        return self.config.vector_dim

    def apply_projector(self, k: int, v: np.ndarray) -> np.ndarray:
        c = self.config
        axes = self._pair_axes[k]
        front = list(range(len(axes)))
        tens = np.moveaxis(v.reshape((c.d,) * (2 * c.t * c.n)), axes, front)
        shape = tens.shape
        out = (self.local_projector @ tens.reshape(len(self.local_projector), -1)).reshape(shape)
        return np.moveaxis(out, front, axes).reshape(-1)

    def apply(self, v: np.ndarray) -> np.ndarray:
        """``H v`` without forming ``H``."""
        v = np.asarray(v)
        acc = np.zeros_like(v)
        for k in range(self.config.n):
            acc += self.apply_projector(k, v)
        return v - acc / self.config.n

    def local_term(self, k: int, v: np.ndarray) -> np.ndarray:
        return v - self.apply_projector(k, v)

    def dense(self) -> np.ndarray:
        if self.dim > self.cap:
            raise ResourceCapError(f"dense H needs {self.dim} rows (> cap {self.cap})")
        eye = np.eye(self.dim)
        return np.stack([self.apply(eye[:, k]) for k in range(self.dim)], axis=1)

    def ground_vectors(self) -> np.ndarray:
        """Columns ``w_pi = psi_pi^{(x)n}`` for every permutation ``pi``."""
        c = self.config
        cols = []
        for pi in permutations(c.t):
            psi = PermutationState.build(c.t, c.d, pi).vector.real
            w = np.ones(1)
            for _ in range(c.n):
                w = np.kron(w, psi)
            cols.append(w)
        return np.stack(cols, axis=1)

    def ground_basis(self) -> np.ndarray:
        """Orthonormal basis of ``span{w_pi}`` (rank-revealing QR)."""
        q, r = np.linalg.qr(self.ground_vectors())
        keep = np.abs(np.diag(r)) > 1e-10 * np.abs(r[0, 0])
        return q[:, keep]


def walk_hamiltonian(config: WalkConfig, cap: int = DENSE_CAP) -> WalkHamiltonian:
    return WalkHamiltonian(config, cap)


@dataclass(frozen=True)
class GapResult:
    gap: float
    iterations: int
    residual: float


def spectral_gap(
    h: WalkHamiltonian,
    tol: float = 1e-10,
    window: int = 50,
    max_iter: int = 20000,
    seed: int = 0,
    start: Optional[np.ndarray] = None,
) -> GapResult:
    """Smallest nonzero eigenvalue of ``H`` by power iteration on ``I - H``.

    Every iterate is projected off the analytic ground space, so the
    dominant eigenvalue of the deflated ``I - H`` is ``1 - gap``.  Stops when
    the Rayleigh quotient (which lies in ``[0, 1]``) moves by less than ``tol`` over
    ``window`` iterations.
    """
    g = h.ground_basis()
    gen = np.random.default_rng(seed)
    v = gen.standard_normal(h.dim) if start is None else np.asarray(start, dtype=float).copy()

    def deflate(x):
        return x - g @ (g.T @ x)

    v = deflate(v)
    v /= np.linalg.norm(v)
    history = []
    rq = 0.0
    for it in range(1, max_iter + 1):
        w = v - h.apply(v)
        rq = float(v @ w)
        history.append(rq)
        w = deflate(w)
        nrm = np.linalg.norm(w)
        if nrm < 1e-12:
            # I - H vanishes off the ground space
            return GapResult(1.0, it, float(nrm))
        v = w / nrm
        if it > window and abs(history[-1] - history[-1 - window]) <= tol * max(abs(rq), 1.0):
            resid = float(np.linalg.norm(w - rq * v))
            return GapResult(1.0 - rq, it, resid)
    resid = float(np.linalg.norm(v - h.apply(v) - rq * v))
    raise GapConvergenceError("power iteration did not converge", 1.0 - rq - resid, 1.0 - rq, max_iter)


def dense_gap(h: WalkHamiltonian, zero_tol: float = 1e-9) -> tuple[float, np.ndarray]:
    """Gap and full spectrum from a dense eigendecomposition."""
    evals = np.linalg.eigvalsh(h.dense())
    nonzero = evals[evals > zero_tol]
    return float(nonzero[0]), evals
