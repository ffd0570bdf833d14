"""Closed-form design, gap and fidelity bounds, plus the figure sweeps.

Base-``d`` logarithms are ``ln(x)/ln(d)`` and ceilings are taken literally,
so every value is a deterministic function of its integer inputs.
"""

from __future__ import annotations

import decimal
import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channels import Channel, diamond_norm, gate_fidelity, twirl
from .designs import UnitaryEnsemble
from .rb import CircuitSpec


class Formula(str, enum.Enum):
    SHRINK_C = "shrink_factor_C"
    MIN_R = "min_sequence_size"
    THM2 = "diamond_bound_thm2"
    THM3 = "diamond_bound_thm3"
    WASSERSTEIN = "wasserstein_bound"
    LEMMA4 = "lemma4_conversion"
    NACHTERGAELE = "nachtergaele_bound"
    LEMMA7 = "lemma7_gap_bound"


@dataclass(frozen=True)
class BoundReport:
    formula: Formula
    params: tuple[tuple[str, float], ...]
    value: float

    def recompute(self) -> float:
        return _DISPATCH[self.formula](**dict(self.params))


def evaluate(formula: Formula | str, **params) -> BoundReport:
    f = Formula(formula)
    value = _DISPATCH[f](**params)
    if not math.isfinite(value):
        raise ValueError(f"{f.value} is not finite at {params}")
    return BoundReport(f, tuple(sorted(params.items())), value)


def _log_d(x: float, d: int) -> float:
    return math.log(x) / math.log(d)


def _check(n: int = 2, d: int = 2):
    if n < 2 or d < 2:
        raise ValueError("need n >= 2 and d >= 2")


# -- walk contraction and sequence size ----------------------------------------------

def _shrink_defect(n: int, d: int) -> float:
    _check(n, d)
    return math.exp(-n - (n - 1) * math.log(d * d + 1))


def log_shrink_factor(n: int, d: int) -> float:
    """``ln C`` computed without forming ``C``, which rounds to 1 for moderate ``n``."""
    return math.log1p(-_shrink_defect(n, d))


def shrink_factor_C(n: int, d: int) -> float:
    """``C = 1 - 1 / (e^n (d^2 + 1)^(n - 1))``."""
    return 1.0 - _shrink_defect(n, d)


def min_sequence_size(n: int, d: int, t: int) -> int:
    """``ceil(n ln(1/(2t)) / ln C)``; both logarithms are negative so ``r > 0``."""
    if t < 1:
        raise ValueError("t must be >= 1")
    _check(n, d)
    # the ceiling is sensitive to the last few ulps once r is large
    with decimal.localcontext() as ctx:
        ctx.prec = 40 + 2 * n  # 1 - defect cancels about 1.2 n digits
        one = decimal.Decimal(1)
        defect = one / (one.exp() ** n * decimal.Decimal(d * d + 1) ** (n - 1))
        log_c = (one - defect).ln()
        return int((n * (one / (2 * t)).ln() / log_c).to_integral_value(rounding=decimal.ROUND_CEILING))


def diamond_bound_thm2(n: int, d: int, t: int, r: int) -> float:
    if r < 1:
        raise ValueError("r must be >= 1")
    return math.exp(math.log(2 * t) / (n * r) + log_shrink_factor(n, d) / n**2)


def diamond_bound_thm3(d: int, t: int) -> float:
    """``1 - (e^2 (d^2+1) [2t(t-1)]^3 ceil(0.8 log_d[2t(t-1)] + 1)^2 + 1)^-1``."""
    if t < 2:
        raise ValueError("diamond_bound_thm3 needs t >= 2 (tau = t(t-1)/2 vanishes at t = 1)")
    if d < 2:
        raise ValueError("d must be >= 2")
    m = 2 * t * (t - 1)
    k = math.ceil(0.8 * _log_d(m, d) + 1)
    return 1.0 - 1.0 / (math.e**2 * (d * d + 1) * m**3 * k**2 + 1)


def wasserstein_bound(n: int, d: int, r: int) -> float:
    """``C^(r/n) sqrt(2) d^((n+1)/2)``."""
    if r < 0:
        raise ValueError("r must be >= 0")
    return math.exp(log_shrink_factor(n, d) * r / n) * math.sqrt(2) * d ** ((n + 1) / 2)


def lemma4_conversion(w: float, d: int, n: int, t: int) -> float:
    """Diamond-norm distance implied by a Wasserstein distance ``w``: ``sqrt(2) t w / d^(n/2)``."""
    if w < 0:
        raise ValueError("w must be >= 0")
    return math.sqrt(2) * t * w / d ** (n / 2)


# -- gap lower bounds ---------------------------------------------------------------

def nachtergaele_bound(delta_l: float, eps_l: float, l: int) -> float:
    """``delta_l (1 - eps_l sqrt(l))^2 / (l - 1)``."""
    if l < 2:
        raise ValueError("l must be >= 2")
    if eps_l > 1 / math.sqrt(l) + 1e-15:
        raise ValueError(f"eps_l={eps_l} exceeds 1/sqrt(l)={1 / math.sqrt(l)}")
    return delta_l * (1 - eps_l * math.sqrt(l)) ** 2 / (l - 1)


def lemma7_tau(t: int) -> int:
    return t * (t - 1) // 2


def lemma7_chain_length(d: int, t: int) -> int:
    """``l = ceil(0.8 (log_d(4 tau) + 2))``: the chain whose gap seeds the bound."""
    tau = lemma7_tau(t)
    if tau < 1:
        raise ValueError("the gap recursion needs t >= 2")
    return math.ceil(0.8 * (_log_d(4 * tau, d) + 2))


def lemma7_gap_bound(d: int, t: int, delta_base: float) -> float:
    """``delta_base / (4 ceil(0.8 (log_d(4 tau) + 1)))`` with ``delta_base`` the gap at ``l`` sites."""
    tau = lemma7_tau(t)
    if tau < 1:
        raise ValueError("lemma7_gap_bound needs t >= 2")
    return delta_base / (4 * math.ceil(0.8 * (_log_d(4 * tau, d) + 1)))


# -- circuit fidelity bounds ----------------------------------------------------------

def haar_twirled_trace(circuit: CircuitSpec) -> float:
    """``tr(prod_j Delta_Haar,j)``: trace of the composed Haar-twirled round noises."""
    haar = UnitaryEnsemble.haar_measure(circuit.dim)
    total = Channel.identity(circuit.dim)
    for r in circuit.rounds:
        total = total.then(twirl(r.effective_noise, haar))
    return float(np.real(np.trace(total.superop)))


def _trace_norm(u: np.ndarray) -> float:
    return float(np.linalg.svd(u, compute_uv=False).sum())


def fidelity_bound_thm4(circuit: CircuitSpec, eps_list: Sequence[float], twirled_traces: float) -> float:
    """``||prod G||_1 (tr + D) / (D^2 + D) + 2 F_g(|0>, prod G) sum eps_j``."""
    if circuit.gate_dependent:
        raise ValueError("gate-dependent circuit: use difference_bound_thm5")
    if len(eps_list) != circuit.K:
        raise ValueError("need one design error per round")
    d = circuit.dim
    g = circuit.ideal_unitary()
    ket0 = np.zeros(d, dtype=complex)
    ket0[0] = 1
    eps = gate_fidelity(ket0, g) * float(sum(eps_list))
    return _trace_norm(g) * (twirled_traces + d) / (d * d + d) + 2 * eps


def _round_diamond_terms(gd: CircuitSpec, gi: CircuitSpec) -> list[float]:
    return [diamond_norm(a.effective_noise - b.effective_noise) for a, b in zip(gd.rounds, gi.rounds)]


def _nc_defects(circuit: CircuitSpec, psi: np.ndarray) -> list[float]:
    # 1 - F_g(psi, G^nC)/||G^nC||, spectral norm in the denominator
    return [1 - gate_fidelity(psi, r.non_clifford) / np.linalg.norm(r.non_clifford, 2) for r in circuit.rounds]


def difference_bound_thm5(
    circuit_gd: CircuitSpec,
    circuit_gi: CircuitSpec,
    eps_list: Sequence[float],
    psi=None,
) -> tuple[float, float]:
    """Basic and improved upper bounds on ``||C_GD - C_GI||_diamond``."""
    if circuit_gd.K != circuit_gi.K:
        raise ValueError(f"round counts differ: {circuit_gd.K} vs {circuit_gi.K}")
    if len(eps_list) != circuit_gd.K:
        raise ValueError("need one design error per round")
    d = circuit_gd.dim
    psi = np.eye(d, dtype=complex)[0] if psi is None else np.asarray(psi, dtype=complex)
    diam = _round_diamond_terms(circuit_gd, circuit_gi)
    defect = _nc_defects(circuit_gd, psi)
    eps = [float(e) for e in eps_list]

    prefactor = _trace_norm(circuit_gd.clifford_product()) * _trace_norm(circuit_gd.non_clifford_product())
    basic = prefactor * sum(dk + defect[k] + 2 * eps[k] for k, dk in enumerate(diam))

    per_round = math.prod(_trace_norm(r.clifford) * _trace_norm(r.non_clifford) for r in circuit_gd.rounds)
    prev = [0.0] + eps[:-1]
    imp_eps = per_round * sum(
        2 * prev[k] * diam[k] + (defect[k] + 2 * eps[k]) * (2 * prev[k] + 2) for k in range(len(diam))
    )
    improved = per_round * sum(diam) + imp_eps
    return float(basic), float(improved)


# -- figure sweeps --------------------------------------------------------------------

def fig1_rows(ns: Sequence[int], d: int, ts: Sequence[int]) -> list[tuple[int, int, int, int]]:
    return sorted((n, d, t, min_sequence_size(n, d, t)) for n in ns for t in ts)


def fig2_rows(ts: Sequence[int], d: int) -> list[tuple[int, int, float]]:
    return sorted((t, d, 1.0 - diamond_bound_thm3(d, t)) for t in ts)


_DISPATCH = {
    Formula.SHRINK_C: shrink_factor_C,
    Formula.MIN_R: min_sequence_size,
    Formula.THM2: diamond_bound_thm2,
    Formula.THM3: diamond_bound_thm3,
    Formula.WASSERSTEIN: wasserstein_bound,
    Formula.LEMMA4: lemma4_conversion,
    Formula.NACHTERGAELE: nachtergaele_bound,
    Formula.LEMMA7: lemma7_gap_bound,
}
