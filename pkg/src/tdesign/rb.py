"""Randomized benchmarking simulation and K-round circuit fidelities.

Noise follows each gate: a length-``r`` sequence applies
``Lambda . C_inv . Lambda . C_r ... Lambda . C_1`` to the prepared state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import least_squares

from . import groups
from .channels import Channel, NotCPTPError, twirl
from .designs import UnitaryEnsemble
from .haar import RngStream, as_generator
from .linalg import EQ_TOL, DimensionError, is_unitary


class FitError(RuntimeError):
    """Decay fit failed or the data do not determine ``p``."""


# -- configuration -----------------------------------------------------------------

@dataclass(frozen=True)
class RBConfig:
    n: int
    lengths: tuple[int, ...]
    num_sequences: int
    noise: Channel
    rho: np.ndarray = field(repr=False)
    e_op: np.ndarray = field(repr=False)
    seed: int = 0

    def __post_init__(self):
        lengths = tuple(int(x) for x in self.lengths)
        if not lengths or any(x < 1 for x in lengths) or list(lengths) != sorted(set(lengths)):
            raise ValueError("lengths must be positive, distinct and sorted")
        if self.num_sequences < 1:
            raise ValueError("num_sequences must be >= 1")
        dim = 2**self.n
        if self.noise.dim != dim:
            raise DimensionError(f"noise acts on dim {self.noise.dim}, expected {dim}")
        self.noise.require_cptp("RB noise")
        ev = np.linalg.eigvalsh(np.asarray(self.e_op))
        if ev[0] < -EQ_TOL or ev[-1] > 1 + EQ_TOL:
            raise ValueError("measurement operator must satisfy 0 <= E <= I")
        object.__setattr__(self, "lengths", lengths)

    @property
    def dim(self) -> int:
        return 2**self.n


def ground_projector(dim: int) -> np.ndarray:
    p = np.zeros((dim, dim), dtype=complex)
    p[0, 0] = 1
    return p


def biased_measurement(dim: int, bias: float) -> np.ndarray:
    """``(1 - dim*bias) |0><0| + bias I``; ``bias = 0.05`` at ``dim = 2`` gives ``0.9|0><0| + 0.05 I``."""
    return (1 - dim * bias) * ground_projector(dim) + bias * np.eye(dim)


# -- sequences ---------------------------------------------------------------------

def generate_sequence(length: int, n: int, rng) -> list[groups.CliffordElement]:
    """``length`` uniform Cliffords followed by the element inverting their product."""
    if length < 1:
        raise ValueError("length must be >= 1")
    gen = as_generator(rng)
    seq = [groups.uniform_clifford(n, gen) for _ in range(length)]
    total = np.eye(2**n, dtype=complex)
    for c in seq:
        total = c.unitary @ total
    seq.append(groups.find_clifford(total.conj().T))
    return seq


def survival_probability(seq: Sequence, noise: Channel, rho, e_op) -> float:
    noise.require_cptp("survival_probability")
    state = np.asarray(rho, dtype=complex)
    dim = noise.dim
    for c in seq:
        u = c.unitary if isinstance(c, groups.CliffordElement) else np.asarray(c)
        if u.shape != (dim, dim):
            raise DimensionError("gate and noise dimensions differ")
        state = noise(u @ state @ u.conj().T)
    return float(np.real(np.trace(np.asarray(e_op) @ state)))


def exact_rb_curve(lengths, noise: Channel, rho, e_op) -> np.ndarray:
    """Survival averaged over the full Clifford group: ``tr(E Lambda T^r (rho))``, ``T`` the Clifford twirl of ``Lambda``."""
    n = int(round(np.log2(noise.dim)))
    tw = twirl(noise, UnitaryEnsemble.clifford(n)).superop
    out = []
    for r in lengths:
        v = np.linalg.matrix_power(tw, int(r)) @ np.asarray(rho, dtype=complex).reshape(-1)
        out.append(np.real(np.trace(np.asarray(e_op) @ noise(v.reshape(noise.dim, noise.dim)))))
    return np.array(out)


@dataclass(frozen=True)
class RBPoint:
    length: int
    mean: float
    stderr: float


def run_rb(config: RBConfig) -> list[RBPoint]:
    """Sampled survival estimator; each ``(length, sequence)`` pair owns its own stream."""
    out = []
    for length in config.lengths:
        base = RngStream(config.seed, length)
        vals = np.array(
            [
                survival_probability(
                    generate_sequence(length, config.n, base.child(s)), config.noise, config.rho, config.e_op
                )
                for s in range(config.num_sequences)
            ]
        )
        err = float(vals.std(ddof=1) / np.sqrt(len(vals))) if len(vals) > 1 else 0.0
        out.append(RBPoint(length, float(vals.mean()), err))
    return out


# -- fitting -----------------------------------------------------------------------

@dataclass(frozen=True)
class DecayFit:
    A: float
    B: float
    p: float
    residual: float
    error_rate: float
    covariance: Optional[np.ndarray] = field(default=None, repr=False)

    def __call__(self, r):
        return self.A * self.p ** np.asarray(r, dtype=float) + self.B


def _initial_guess(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    # assume the tail is near the asymptote, then fit a line in log space
    span = np.ptp(y)
    b0 = y.min() - 0.05 * span if y[0] > y[-1] else y.max() + 0.05 * span
    z = np.abs(y - b0)
    slope, icpt = np.polyfit(x, np.log(z), 1)
    p0 = float(np.clip(np.exp(slope), 1e-6, 1.0))
    a0 = float(np.sign(y[0] - b0) * np.exp(icpt))
    return a0, float(b0), p0


def fit_decay(lengths, means, dim: int = 2, sigma=None) -> DecayFit:
    """Least-squares fit of ``A p^r + B``; ``error_rate = (dim - 1)(1 - p)/dim``."""
    x = np.asarray(lengths, dtype=float)
    y = np.asarray(means, dtype=float)
    if len(np.unique(x)) < 3:
        raise FitError("need at least 3 distinct lengths")
    if np.ptp(y) < 1e-12:
        raise FitError("data are constant: decay rate p is indeterminate")
    w = np.ones_like(y) if sigma is None else 1.0 / np.maximum(np.asarray(sigma, float), 1e-12)

    def resid(theta):
        a, b, p = theta
        return w * (a * p**x + b - y)

    guess = _initial_guess(x, y)
    res = least_squares(
        resid,
        guess,
        bounds=([-np.inf, -np.inf, 1e-9], [np.inf, np.inf, 1.0]),
        method="trf",
        xtol=1e-15,
        ftol=1e-15,
        gtol=1e-15,
        max_nfev=10000,
    )
    if not res.success:
        raise FitError(f"fit did not converge: {res.message} (start {guess}, cost {res.cost:.3e})")
    a, b, p = (float(v) for v in res.x)
    cov = None
    jtj = res.jac.T @ res.jac
    if np.linalg.cond(jtj) < 1e14:
        dof = max(len(x) - 3, 1)
        cov = np.linalg.inv(jtj) * (2 * res.cost / dof)
    rms = float(np.sqrt(np.mean((a * p**x + b - y) ** 2)))
    return DecayFit(a, b, p, rms, (dim - 1) * (1 - p) / dim, cov)


# -- K-round circuits ----------------------------------------------------------------

@dataclass(frozen=True)
class CircuitRound:
    """One round: ``G^nC``, then noise, then ``G^C``.

    Gate-independent rounds carry ``noise`` only.  Gate-dependent rounds set
    ``noise`` to ``Lambda(G^C)`` and ``noise_nc`` to ``Lambda(G^nC)``; their
    effective noise is ``Lambda(G^C) Lambda(G^nC)``.
    """

    clifford: np.ndarray = field(repr=False)
    non_clifford: np.ndarray = field(repr=False)
    noise: Channel = field(repr=False)
    noise_nc: Optional[Channel] = field(default=None, repr=False)

    def __post_init__(self):
        for g in (self.clifford, self.non_clifford):
            if not is_unitary(g, 1e-10):
                raise ValueError("circuit gates must be unitary")
        if self.clifford.shape != self.non_clifford.shape:
            raise DimensionError("Clifford and non-Clifford gates act on different registers")
        for ch in (self.noise, self.noise_nc):
            if ch is not None:
                if not ch.is_cptp:
                    raise NotCPTPError("round noise must be CPTP")
                if ch.dim != self.clifford.shape[0]:
                    raise DimensionError("noise and gate dimensions differ")

    @property
    def gate_dependent(self) -> bool:
        return self.noise_nc is not None

    @property
    def effective_noise(self) -> Channel:
        return self.noise if self.noise_nc is None else self.noise_nc.then(self.noise)


@dataclass(frozen=True)
class CircuitSpec:
    rounds: tuple[CircuitRound, ...]

    def __post_init__(self):
        object.__setattr__(self, "rounds", tuple(self.rounds))
        if not self.rounds:
            raise ValueError("a circuit needs at least one round")
        if len({r.clifford.shape for r in self.rounds}) != 1:
            raise DimensionError("all rounds must act on the same register")

    @property
    def K(self) -> int:
        return len(self.rounds)

    @property
    def dim(self) -> int:
        return self.rounds[0].clifford.shape[0]

    @property
    def gate_dependent(self) -> bool:
        return any(r.gate_dependent for r in self.rounds)

    def ideal_unitary(self) -> np.ndarray:
        """``G_K^C G_K^nC ... G_1^C G_1^nC``."""
        u = np.eye(self.dim, dtype=complex)
        for r in self.rounds:
            u = r.clifford @ r.non_clifford @ u
        return u

    def clifford_product(self) -> np.ndarray:
        u = np.eye(self.dim, dtype=complex)
        for r in self.rounds:
            u = r.clifford @ u
        return u

    def non_clifford_product(self) -> np.ndarray:
        u = np.eye(self.dim, dtype=complex)
        for r in self.rounds:
            u = r.non_clifford @ u
        return u

    def channel(self, ensemble: Optional[UnitaryEnsemble] = None) -> Channel:
        """Whole-circuit channel with each round's noise twirled by ``ensemble`` (untwirled if ``None``)."""
        total = Channel.identity(self.dim)
        for r in self.rounds:
            noise = r.effective_noise if ensemble is None else twirl(r.effective_noise, ensemble)
            total = total.then(Channel.from_unitary(r.non_clifford)).then(noise).then(Channel.from_unitary(r.clifford))
        return total


def _ket0(dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[0] = 1
    return v


def exact_circuit_fidelity(circuit: CircuitSpec, ensemble: UnitaryEnsemble, psi=None) -> float:
    """``<ideal| C(|psi><psi|) |ideal>`` with every round's noise twirled exactly."""
    psi = _ket0(circuit.dim) if psi is None else np.asarray(psi, dtype=complex)
    out = circuit.channel(ensemble)(np.outer(psi, psi.conj()))
    ideal = circuit.ideal_unitary() @ psi
    return float(np.real(ideal.conj() @ out @ ideal))


def simulate_circuit_fidelity(
    circuit: CircuitSpec, ensemble: UnitaryEnsemble, t: int, samples: int, rng
) -> tuple[float, float]:
    """Monte Carlo fidelity of the circuit with a fresh ``U ~ ensemble`` around each round's noise.

    Input is ``|0>``; the target is the ideal output ``prod G^C G^nC |0>``.
    ``t`` labels the design order the ensemble is meant to realise; the
    twirl acts on the physical register.
    """
    if t < 1 or samples < 1:
        raise ValueError("t and samples must be >= 1")
    if ensemble.dim != circuit.dim:
        raise DimensionError(f"ensemble dim {ensemble.dim} != circuit dim {circuit.dim}")
    gen = as_generator(rng)
    d = circuit.dim
    psi = _ket0(d)
    rho = np.broadcast_to(np.outer(psi, psi.conj()), (samples, d, d)).copy()
    for r in circuit.rounds:
        g = r.non_clifford
        rho = g @ rho @ g.conj().T
        us = np.stack([ensemble.sample(gen) for _ in range(samples)])
        rho = np.einsum("sji,sjk,skl->sil", us.conj(), rho, us)
        flat = rho.reshape(samples, -1) @ r.effective_noise.superop.T
        rho = flat.reshape(samples, d, d)
        rho = us @ rho @ np.conj(np.swapaxes(us, 1, 2))
        g = r.clifford
        rho = g @ rho @ g.conj().T
    ideal = circuit.ideal_unitary() @ psi
    f = np.real(np.einsum("i,sij,j->s", ideal.conj(), rho, ideal))
    err = float(f.std(ddof=1) / np.sqrt(samples)) if samples > 1 else 0.0
    return float(f.mean()), err
