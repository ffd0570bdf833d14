"""Linear maps on matrices: channels, twirls, fidelities and the diamond norm.

A :class:`Channel` is stored as its transfer matrix ``S`` (row-major vec):
``vec(L(rho)) = S @ vec(rho)``.  The Choi matrix is the unnormalised
``J = sum_ij L(|i><j|) (x) |i><j|`` (output first, input second).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from . import groups
from .designs import UnitaryEnsemble
from .haar import as_generator, sample_haar_unitary
from .linalg import EQ_TOL, DimensionError, as_matrix, trace_norm_hermitian


class NotCPTPError(ValueError):
    pass


class DiamondNormError(RuntimeError):
    """Alternating maximisation did not converge; carries the best bracket found."""

    def __init__(self, msg: str, lower: float, upper: float):
        super().__init__(f"{msg} (bracket [{lower:.8g}, {upper:.8g}])")
        self.lower = lower
        self.upper = upper


def superop_to_choi(s: np.ndarray, dim: int) -> np.ndarray:
    # S[(k,l),(i,j)] = L(E_ij)[k,l]  ->  J[(k,i),(l,j)]
    return s.reshape(dim, dim, dim, dim).transpose(0, 2, 1, 3).reshape(dim * dim, dim * dim)


def choi_to_superop(j: np.ndarray, dim: int) -> np.ndarray:
    return j.reshape(dim, dim, dim, dim).transpose(0, 2, 1, 3).reshape(dim * dim, dim * dim)


def unitary_superop(u: np.ndarray) -> np.ndarray:
    return np.kron(u, u.conj())


@dataclass(frozen=True)
class Channel:
    """Linear map on ``dim x dim`` matrices.

    ``analysis_only`` marks maps such as ``rho -> A rho B`` that are built for
    algebraic checks and may be neither CP nor TP; operations that need a
    physical channel reject them.
    """

    dim: int
    superop: np.ndarray = field(repr=False)
    kraus: Optional[tuple] = field(default=None, repr=False, compare=False)
    analysis_only: bool = False

    def __post_init__(self):
        s = np.asarray(self.superop, dtype=complex)
        if s.shape != (self.dim**2, self.dim**2):
            raise DimensionError(f"superoperator must be {self.dim**2}x{self.dim**2}")
        s.setflags(write=False)
        object.__setattr__(self, "superop", s)

    # -- constructors --------------------------------------------------------
    @classmethod
    def from_kraus(cls, kraus: Sequence[np.ndarray]) -> "Channel":
        ks = [as_matrix(k) for k in kraus]
        dim = ks[0].shape[0]
        s = sum(np.kron(k, k.conj()) for k in ks)
        return cls(dim, s, tuple(ks))

    @classmethod
    def from_unitary(cls, u) -> "Channel":
        return cls.from_kraus([as_matrix(u)])

    @classmethod
    def identity(cls, dim: int) -> "Channel":
        return cls.from_unitary(np.eye(dim))

    @classmethod
    def from_choi(cls, j: np.ndarray, dim: int) -> "Channel":
        return cls(dim, choi_to_superop(np.asarray(j, dtype=complex), dim))

    # -- representations -----------------------------------------------------
    @property
    def choi(self) -> np.ndarray:
        return superop_to_choi(self.superop, self.dim)

    def __call__(self, rho) -> np.ndarray:
        rho = as_matrix(rho)
        return (self.superop @ rho.reshape(-1)).reshape(self.dim, self.dim)

    def adjoint(self) -> "Channel":
        return Channel(self.dim, self.superop.conj().T, analysis_only=self.analysis_only)

    def then(self, other: "Channel") -> "Channel":
        """Apply ``self`` first, then ``other``."""
        if other.dim != self.dim:
            raise DimensionError("channel dimensions differ")
        return Channel(self.dim, other.superop @ self.superop, analysis_only=self.analysis_only or other.analysis_only)

    def __sub__(self, other: "Channel") -> "Channel":
        if other.dim != self.dim:
            raise DimensionError("channel dimensions differ")
        return Channel(self.dim, self.superop - other.superop, analysis_only=True)

    def __add__(self, other: "Channel") -> "Channel":
        if other.dim != self.dim:
            raise DimensionError("channel dimensions differ")
        return Channel(self.dim, self.superop + other.superop, analysis_only=True)

    def scaled(self, c: float) -> "Channel":
        return Channel(self.dim, c * self.superop, analysis_only=True)

    # -- flags ---------------------------------------------------------------
    @property
    def is_hermiticity_preserving(self) -> bool:
        j = self.choi
        return bool(np.abs(j - j.conj().T).max() <= EQ_TOL)

    @property
    def completely_positive(self) -> bool:
        j = self.choi
        if np.abs(j - j.conj().T).max() > EQ_TOL:
            return False
        return bool(np.linalg.eigvalsh((j + j.conj().T) / 2).min() >= -EQ_TOL)

    @property
    def trace_preserving(self) -> bool:
        j = self.choi.reshape(self.dim, self.dim, self.dim, self.dim)
        return bool(np.abs(np.einsum("kikj->ij", j) - np.eye(self.dim)).max() <= EQ_TOL)

    @property
    def is_cptp(self) -> bool:
        return self.completely_positive and self.trace_preserving

    def require_cptp(self, what: str = "operation"):
        if self.analysis_only or not self.is_cptp:
            raise NotCPTPError(f"{what} requires a CPTP channel")

    def pauli_transfer(self) -> np.ndarray:
        """``R[i, j] = tr(P_i L(P_j)) / dim`` in the ``I, X, Y, Z`` string order."""
        n = _qubits(self.dim)
        ps = groups.pauli_matrices(n)
        outs = np.einsum("ab,pb->pa", self.superop, ps.reshape(len(ps), -1)).reshape(len(ps), self.dim, self.dim)
        return np.real_if_close(np.einsum("iab,jba->ij", ps, outs) / self.dim)


def _qubits(dim: int) -> int:
    n = int(round(np.log2(dim)))
    if 2**n != dim:
        raise DimensionError(f"dimension {dim} is not a power of two")
    return n


# -- standard channels ---------------------------------------------------------

def channel_from_pair(a, b) -> Channel:
    """``rho -> a rho b``; transfer matrix ``kron(a, b.T)``.  Analysis-only."""
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != b.shape:
        raise DimensionError("a and b must have the same dimension")
    return Channel(a.shape[0], np.kron(a, b.T), analysis_only=True)


def depolarizing(dim: int, p: float) -> Channel:
    """``rho -> p rho + (1 - p) tr(rho) I / dim``."""
    ident = np.eye(dim * dim, dtype=complex)
    full = np.outer(np.eye(dim).reshape(-1), np.eye(dim).reshape(-1)) / dim
    return Channel(dim, p * ident + (1 - p) * full)


def amplitude_damping(gamma: float) -> Channel:
    k0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]])
    k1 = np.array([[0, np.sqrt(gamma)], [0, 0]])
    return Channel.from_kraus([k0, k1])


def dephasing(q: float) -> Channel:
    return Channel.from_kraus([np.sqrt(1 - q) * np.eye(2), np.sqrt(q) * groups.Z])


def random_cptp(dim: int, rng, rank: int = 2) -> Channel:
    """Random channel from a Haar isometry ``C^dim -> C^dim (x) C^rank``."""
    gen = as_generator(rng)
    u = sample_haar_unitary(dim * rank, gen)
    iso = u[:, :dim].reshape(rank, dim, dim)
    return Channel.from_kraus(list(iso))


def random_unitary_error(dim: int, strength: float, rng) -> Channel:
    """Coherent error ``exp(-i strength H)`` with a random Hermitian ``H`` of unit norm."""
    gen = as_generator(rng)
    g = gen.standard_normal((dim, dim)) + 1j * gen.standard_normal((dim, dim))
    h = (g + g.conj().T) / 2
    w, v = np.linalg.eigh(h / np.linalg.norm(h, 2))
    return Channel.from_unitary((v * np.exp(-1j * strength * w)) @ v.conj().T)


# -- twirling ------------------------------------------------------------------

def _haar_twirl(s: np.ndarray, dim: int) -> np.ndarray:
    """Haar twirl over U(dim), fixed by the two invariants ``tr S`` and ``tr L(I)``."""
    tau1 = np.trace(s)
    tau2 = np.trace((s @ np.eye(dim).reshape(-1)).reshape(dim, dim))
    d = dim
    a = (d * tau1 - tau2) / (d * (d * d - 1))
    b = (d * tau2 - tau1) / (d * (d * d - 1))
    ident = np.eye(d * d, dtype=complex)
    full = np.outer(np.eye(d).reshape(-1), np.eye(d).reshape(-1))
    return a * ident + b * full


def twirl(channel: Channel, ensemble: UnitaryEnsemble, t: int = 1) -> Channel:
    """Average of ``U^{(x)t} L(U^{dagger(x)t} rho U^{(x)t}) U^{dagger(x)t}`` over the ensemble.

    ``channel`` acts on the t-copy space, so ``channel.dim == ensemble.dim**t``.
    The Haar ensemble is supported for ``t == 1`` (Haar over the full space).
    """
    if ensemble.dim**t != channel.dim:
        raise DimensionError(f"ensemble dim {ensemble.dim}**{t} != channel dim {channel.dim}")
    if ensemble.haar:
        if t != 1:
            raise NotImplementedError("Haar twirl is implemented for the full space (t=1)")
        return Channel(channel.dim, _haar_twirl(channel.superop, channel.dim), analysis_only=channel.analysis_only)
    us = ensemble.unitaries
    ws = us
    for _ in range(t - 1):
        ws = np.einsum("nij,nkl->nikjl", ws, us).reshape(len(us), ws.shape[1] * us.shape[1], -1)
    sup = np.einsum("nij,nkl->nikjl", ws, ws.conj()).reshape(len(ws), channel.dim**2, channel.dim**2)
    out = np.einsum("n,nab,bc,ndc->ad", ensemble.weights, sup, channel.superop, sup.conj(), optimize=True)
    return Channel(channel.dim, out, analysis_only=channel.analysis_only)


def clifford_sum_twirl(channel: Channel) -> Channel:
    """Uniform average over the Clifford group of the channel's own dimension (1 or 2 qubits)."""
    return twirl(channel, UnitaryEnsemble.clifford(_qubits(channel.dim)), 1)


def schur_twirl_pair(a, b) -> Channel:
    """Closed-form Haar twirl of ``rho -> a rho b`` over U(D).

    ``(D tr a tr b - tr ab) / (D (D^2 - 1)) rho + (D tr ab - tr a tr b) / (D (D^2 - 1)) tr(rho) I``.
    """
    a, b = as_matrix(a), as_matrix(b)
    d = a.shape[0]
    ta, tb, tab = np.trace(a), np.trace(b), np.trace(a @ b)
    c_rho = (d * ta * tb - tab) / (d * (d * d - 1))
    c_tr = (d * tab - ta * tb) / (d * (d * d - 1))
    ident = np.eye(d * d, dtype=complex)
    full = np.outer(np.eye(d).reshape(-1), np.eye(d).reshape(-1))
    return Channel(d, c_rho * ident + c_tr * full, analysis_only=True)


def pauli_twirl(channel: Channel, n: Optional[int] = None) -> Channel:
    """``4^-n sum_P P L(P rho P) P``; diagonal in the Pauli transfer basis."""
    nq = _qubits(channel.dim)
    if n is not None and n != nq:
        raise DimensionError(f"channel acts on {nq} qubits, not {n}")
    return twirl(channel, UnitaryEnsemble.pauli(nq), 1)


# -- scalar figures of merit -----------------------------------------------------

def depolarizing_parameter(channel: Channel) -> float:
    d2 = channel.dim**2
    return float(np.real(np.trace(channel.superop) - 1) / (d2 - 1))


def entanglement_fidelity(channel: Channel) -> float:
    """``<Phi|(L (x) I)(|Phi><Phi|)|Phi>`` = ``tr S / D^2``."""
    channel.require_cptp("entanglement_fidelity")
    return float(np.real(np.trace(channel.superop)) / channel.dim**2)


def avg_gate_fidelity(channel: Channel) -> float:
    d = channel.dim
    return (d * entanglement_fidelity(channel) + 1) / (d + 1)


def mc_avg_gate_fidelity(channel: Channel, samples: int, rng) -> tuple[float, float]:
    """Monte Carlo ``E_psi <psi|L(|psi><psi|)|psi>`` over Haar-random pure states."""
    gen = as_generator(rng)
    d = channel.dim
    v = gen.standard_normal((samples, d)) + 1j * gen.standard_normal((samples, d))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    rho = np.einsum("si,sj->sij", v, v.conj()).reshape(samples, -1)
    out = (rho @ channel.superop.T).reshape(samples, d, d)
    f = np.real(np.einsum("si,sij,sj->s", v.conj(), out, v))
    return float(f.mean()), float(f.std(ddof=1) / np.sqrt(samples))


def state_fidelity_pure(psi: np.ndarray, rho: np.ndarray) -> float:
    return float(np.real(psi.conj() @ rho @ psi))


def gate_fidelity(psi: np.ndarray, gate: np.ndarray) -> float:
    """``(tr sqrt(|psi><psi| G))^2`` for a pure state, i.e. ``|<psi|G|psi>|``."""
    return float(abs(psi.conj() @ gate @ psi))


# -- diamond norm ----------------------------------------------------------------

def _extend(s4: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """``(L (x) I)(|psi><psi|)`` for ``psi`` given as a ``dim x dim`` (system, ancilla) matrix."""
    d = psi.shape[0]
    out = np.einsum("klij,ia,jb->kalb", s4, psi, psi.conj())
    return out.reshape(d * d, d * d)


def _extend_op(s4: np.ndarray, w: np.ndarray) -> np.ndarray:
    d = s4.shape[0]
    return np.einsum("klij,iajb->kalb", s4, w.reshape(d, d, d, d)).reshape(d * d, d * d)


def _objective(s4: np.ndarray, psi: np.ndarray) -> tuple[float, np.ndarray]:
    x = _extend(s4, psi)
    w, v = np.linalg.eigh((x + x.conj().T) / 2)
    return float(np.sum(np.abs(w))), (v * np.sign(w)) @ v.conj().T


def _ascent(s4, s4_adj, psi, tol, max_iter):
    """Alternate sign and top-eigenvector steps; returns (value, psi, converged)."""
    value, sign = _objective(s4, psi)
    for _ in range(max_iter):
        m = _extend_op(s4_adj, sign)
        _, vecs = np.linalg.eigh((m + m.conj().T) / 2)
        psi = vecs[:, -1].reshape(psi.shape)
        new_value, sign = _objective(s4, psi)
        if new_value - value <= tol * max(1.0, abs(new_value)):
            return max(value, new_value), psi, True
        value = new_value
    return value, psi, False


def _refine(s4, s4_adj, psi):
    """Quasi-Newton polish of ``||(L (x) I)(psi psi^dagger)||_1 / ||psi||^2``.

    By the envelope theorem the gradient with respect to ``conj(psi)`` is
    ``(M - f) psi`` with ``M = (L^dagger (x) I)(sign X)``.
    """
    n = psi.size

    def fun(x):
        p = x[:n] + 1j * x[n:]
        nrm = float(np.vdot(p, p).real)
        val, sign = _objective(s4, (p / np.sqrt(nrm)).reshape(psi.shape))
        m = _extend_op(s4_adj, sign)
        g = ((m + m.conj().T) / 2 @ p - val * p) * 2 / nrm
        return -val, -np.concatenate([g.real, g.imag])

    x0 = np.concatenate([psi.reshape(-1).real, psi.reshape(-1).imag])
    res = minimize(fun, x0, jac=True, method="L-BFGS-B", options=dict(maxiter=2000, gtol=1e-12, ftol=1e-15))
    return -float(res.fun)


def diamond_norm(
    delta: Channel,
    tol: float = 1e-6,
    max_iter: int = 500,
    restarts: int = 4,
    seed: int = 0,
) -> float:
    """Diamond norm of a Hermiticity-preserving map.

    For an input ``psi`` on system (x) ancilla the objective is
    ``|| (L (x) I)(psi psi^dagger) ||_1 = max_W <psi| (L^dagger (x) I)(W) |psi>``
    with ``W = sign(...)``.  Alternating the sign step and the top-eigenvector
    step never decreases it; the best start (maximally entangled plus seeded
    random inputs) is then polished by L-BFGS on the same objective, which
    fixes the slow tail of the alternation when the optimal input is nearly
    rank deficient.  The value must lie in ``[||J||_1 / D, ||J||_1]``.
    """
    d = delta.dim
    j = delta.choi
    if np.abs(j - j.conj().T).max() > 1e-9:
        raise ValueError("diamond_norm requires a Hermiticity-preserving map")
    upper = trace_norm_hermitian(j)
    lower = upper / d
    if upper <= 1e-14:
        return 0.0
    s4 = delta.superop.reshape(d, d, d, d)
    s4_adj = delta.superop.conj().T.reshape(d, d, d, d)
    gen = np.random.default_rng(seed)

    starts = [np.eye(d, dtype=complex) / np.sqrt(d)]
    for _ in range(restarts):
        g = gen.standard_normal((d, d)) + 1j * gen.standard_normal((d, d))
        starts.append(g / np.linalg.norm(g))

    best, best_psi, converged = lower, starts[0], False
    for psi in starts:
        value, psi, ok = _ascent(s4, s4_adj, psi, tol, max_iter)
        converged |= ok
        if value > best:
            best, best_psi = value, psi
    if not converged:
        raise DiamondNormError("diamond norm iteration did not converge", best, upper)
    best = max(best, _refine(s4, s4_adj, best_psi))
    if best > upper * (1 + 1e-9) + 1e-12:
        raise DiamondNormError("diamond norm escaped its Choi envelope", lower, upper)
    return min(best, upper)


def worst_case_error(channel: Channel) -> float:
    """``epsilon(L) = ||L - id||_diamond / 2``."""
    return 0.5 * diamond_norm(channel - Channel.identity(channel.dim))
