"""``tdesign`` command-line interface.

Every subcommand writes one or more CSV files plus ``manifest.txt`` into
``--out-dir``.  Exit codes: 0 success, 2 usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import math
import shlex
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import yaml

from . import __version__, bounds, channels, groups, rb
from .channels import DiamondNormError
from .designs import ResourceCapError, UnitaryEnsemble, design_distance, frame_potential, haar_value, named_ensemble
from .haar import RngStream, haar_monomial_average, mc_monomial_average, sample_haar_unitary
from .walk import GapConvergenceError, WalkConfig, WalkHamiltonian, dense_gap, spectral_gap

NUMERICAL_ERRORS = (GapConvergenceError, DiamondNormError, rb.FitError, ResourceCapError, np.linalg.LinAlgError)


class UsageError(ValueError):
    pass


# -- parsing helpers -----------------------------------------------------------------

def int_range(text: str) -> list[int]:
    """``"2..5"`` -> ``[2, 3, 4, 5]``; also accepts ``"1,3,7"`` and single integers."""
    out: list[int] = []
    try:
        for part in text.split(","):
            if ".." in part:
                a, b = part.split("..")
                lo, hi = int(a), int(b)
                if hi < lo:
                    raise argparse.ArgumentTypeError(f"empty range {part!r}")
                out.extend(range(lo, hi + 1))
            else:
                out.append(int(part))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer range {text!r}") from None
    return sorted(set(out))


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if x is None:
        return ""
    return str(x)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def write_manifest(out_dir: Path, args: argparse.Namespace, outputs: list[Path], wall: float) -> Path:
    skip = {"func", "out_dir", "seed", "seed_given", "threads", "command", "replay_argv", "from_manifest"}
    params = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    lines = [
        f"subcommand={args.command}",
        f"seed={args.seed}",
        f"threads={args.threads}",
        f"tool_version={__version__}",
        f"argv={shlex.join(args.replay_argv)}",
    ]
    lines += [f"param.{k}={v}" for k, v in params.items()]
    lines += [f"output={p.name}" for p in outputs]
    lines.append(f"wall_time_s={wall:.3f}")
    path = out_dir / "manifest.txt"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _pmap(fn, items, threads: int):
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# -- subcommands -----------------------------------------------------------------------

def cmd_haar_check(args) -> list[Path]:
    rows = []
    for dim in args.dim:
        for t in args.t:
            exact = haar_monomial_average(1, [t], dim)
            mean, err = mc_monomial_average([t], dim, args.samples, RngStream(args.seed, dim * 1000 + t))
            z = abs(mean - float(exact)) / err if err > 0 else math.inf
            rows.append((dim, t, str(exact), float(exact), mean, err, z, z <= 3.0))
    return [
        write_csv(
            args.out_dir / "haar_check.csv",
            ["dim", "t", "exact_rational", "exact", "mc_mean", "mc_stderr", "z", "within_3sigma"],
            sorted(rows),
        )
    ]


def cmd_design_distance(args) -> list[Path]:
    ens = named_ensemble(args.group)

    def point(t):
        return (t, ens.dim, args.group, design_distance(ens, t), frame_potential(ens, t), haar_value(ens.dim, t))

    rows = _pmap(point, args.t, args.threads)
    return [
        write_csv(
            args.out_dir / "design_distance.csv",
            ["t", "dim", "ensemble", "distance", "frame_potential", "haar_value"],
            sorted(rows),
        )
    ]


# site-count ceiling for the base gap of the recursion (vector length d^(2 t l))
_MAX_BASE_VECTOR = 2**20


@lru_cache(maxsize=None)
def measured_gap(n: int, d: int, t: int, method: str = "auto") -> tuple[float, int]:
    h = WalkHamiltonian(WalkConfig(n, d, t))
    if method == "dense" or (method == "auto" and h.dim <= 64):
        return dense_gap(h)[0], 0
    res = spectral_gap(h)
    return res.gap, res.iterations


def base_gap_bounds(n: int, d: int, t: int) -> tuple:
    """Gap-recursion and Nachtergaele lower bounds seeded by the measured gap of the base chain."""
    if t < 2:
        l = 2
        delta = measured_gap(l, d, t)[0]
        return None, bounds.nachtergaele_bound(delta, 1 / (2 * math.sqrt(l)), l)
    l = bounds.lemma7_chain_length(d, t)
    if d ** (2 * t * l) > _MAX_BASE_VECTOR:
        return None, None
    delta = measured_gap(l, d, t)[0]
    return bounds.lemma7_gap_bound(d, t, delta), bounds.nachtergaele_bound(delta, 1 / (2 * math.sqrt(l)), l)


def cmd_spectral_gap(args) -> list[Path]:
    def point(key):
        n, t = key
        gap, iters = measured_gap(n, args.d, t, args.method)
        lemma7, _ = base_gap_bounds(n, args.d, t)
        thm3 = bounds.diamond_bound_thm3(args.d, t) if t >= 2 else None
        return (n, args.d, t, gap, lemma7, thm3, iters)

    rows = _pmap(point, [(n, t) for n in args.n for t in args.t], args.threads)
    return [
        write_csv(
            args.out_dir / "spectral_gap.csv",
            ["n", "d", "t", "gap", "lemma7_bound", "thm3_bound", "iterations"],
            sorted(rows),
        )
    ]


def _noise_from_config(kind: str, param: float, dim: int) -> channels.Channel:
    if kind == "depolarizing":
        return channels.depolarizing(dim, param)
    if kind == "none":
        return channels.Channel.identity(dim)
    if dim != 2:
        raise UsageError(f"noise kind {kind!r} is single-qubit only")
    if kind == "amplitude_damping":
        return channels.amplitude_damping(param)
    if kind == "dephasing":
        return channels.dephasing(param)
    raise UsageError(f"unknown noise.kind {kind!r}")


def load_rb_config(path: Path, seed_override=None) -> rb.RBConfig:
    try:
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise UsageError("config must be a mapping")
    # flat dotted keys ("noise.kind: ...") are folded into nested sections
    for key in [k for k in raw if "." in str(k)]:
        section, sub = str(key).split(".", 1)
        raw.setdefault(section, {})[sub] = raw.pop(key)
    noise = raw.get("noise", {}) or {}
    spam = raw.get("spam", {}) or {}
    allowed = {"n", "lengths", "num_sequences", "noise", "spam", "seed"}
    extra = set(raw) - allowed
    if extra:
        raise UsageError(f"unknown config keys {sorted(extra)}")
    n = int(raw.get("n", 1))
    if n not in (1, 2):
        raise UsageError("rb-sim supports n in {1, 2} (Clifford enumeration limit)")
    dim = 2**n
    lengths = raw.get("lengths", [2, 4, 8, 16, 32, 64])
    if isinstance(lengths, str):
        lengths = int_range(lengths)
    seed = int(raw.get("seed", 0)) if seed_override is None else seed_override
    return rb.RBConfig(
        n=n,
        lengths=tuple(int(x) for x in lengths),
        num_sequences=int(raw.get("num_sequences", 100)),
        noise=_noise_from_config(str(noise.get("kind", "depolarizing")), float(noise.get("param", 0.99)), dim),
        rho=rb.ground_projector(dim),
        e_op=rb.biased_measurement(dim, float(spam.get("bias", 0.0))),
        seed=seed,
    )


def cmd_rb_sim(args) -> list[Path]:
    cfg = load_rb_config(args.config, args.seed if args.seed_given else None)
    pts = rb.run_rb(cfg)
    fit = rb.fit_decay([p.length for p in pts], [p.mean for p in pts], cfg.dim)
    return [
        write_csv(args.out_dir / "decay.csv", ["length", "mean", "stderr"], [(p.length, p.mean, p.stderr) for p in pts]),
        write_csv(
            args.out_dir / "fit.csv",
            ["A", "B", "p", "error_rate", "residual"],
            [(fit.A, fit.B, fit.p, fit.error_rate, fit.residual)],
        ),
    ]


def cmd_bounds(args) -> list[Path]:
    if not (args.fig1 or args.fig2 or args.gaps):
        raise UsageError("bounds: choose at least one of --fig1, --fig2, --gaps")
    out = []
    d = args.d
    if args.fig1:
        ns = args.n or int_range("2..12")
        ts = args.t or [2, 4]
        out.append(write_csv(args.out_dir / "fig1.csv", ["n", "d", "t", "r_min"], bounds.fig1_rows(ns, d, ts)))
    if args.fig2:
        ts = args.t or int_range("2..40")
        out.append(write_csv(args.out_dir / "fig2.csv", ["t", "d", "one_minus_bound"], bounds.fig2_rows(ts, d)))
    if args.gaps:
        ns = args.n or [2, 3, 4]
        ts = args.t or [1, 2]
        rows = []
        for n in ns:
            for t in ts:
                gap, _ = measured_gap(n, d, t)
                lemma7, nach = base_gap_bounds(n, d, t)
                ok = all(b is None or gap >= b for b in (lemma7, nach))
                rows.append((n, d, t, gap, lemma7, nach, ok))
        out.append(
            write_csv(
                args.out_dir / "gaps.csv",
                ["n", "d", "t", "gap", "lemma7_bound", "nachtergaele_bound", "gap_dominates"],
                sorted(rows),
            )
        )
    return out


def cmd_twirl_check(args) -> list[Path]:
    rows = []
    for t in args.t:
        if t not in (1, 2):
            raise UsageError("twirl-check supports t in {1, 2}")
        dim = 2**t
        for k in range(args.pairs):
            gen = RngStream(args.seed, 100 * t + k).generator
            a = gen.standard_normal((dim, dim)) + 1j * gen.standard_normal((dim, dim))
            b = gen.standard_normal((dim, dim)) + 1j * gen.standard_normal((dim, dim))
            lhs = channels.clifford_sum_twirl(channels.channel_from_pair(a, b)).superop
            rhs = channels.schur_twirl_pair(a, b).superop
            diff = float(np.abs(lhs - rhs).max())
            rows.append((t, k, dim, diff, diff <= 1e-9))
    return [
        write_csv(args.out_dir / "twirl_check.csv", ["t", "pair", "dim", "max_abs_diff", "within_1e-9"], sorted(rows))
    ]


def random_gi_circuit(n: int, k: int, rng) -> rb.CircuitSpec:
    """Random Clifford and Haar gates with depolarizing or coherent-unitary round noise."""
    gen = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    dim = 2**n
    rounds = []
    for _ in range(k):
        if gen.random() < 0.5:
            noise = channels.depolarizing(dim, float(gen.uniform(0.8, 1.0)))
        else:
            noise = channels.random_unitary_error(dim, float(gen.uniform(0.0, 0.5)), gen)
        rounds.append(rb.CircuitRound(groups.uniform_clifford(n, gen).unitary, sample_haar_unitary(dim, gen), noise))
    return rb.CircuitSpec(rounds)


def cmd_circuit_bound(args) -> list[Path]:
    n = args.n_qubits
    if n not in (1, 2):
        raise UsageError("circuit-bound supports --n-qubits in {1, 2}")
    ens = UnitaryEnsemble.clifford(n)
    eps = design_distance(ens, args.design_t)
    rows = []
    for i in range(args.instances):
        stream = RngStream(args.seed, i)
        circ = random_gi_circuit(n, args.rounds, stream.generator)
        mean, err = rb.simulate_circuit_fidelity(circ, ens, args.design_t, args.samples, stream.child(0))
        bound = bounds.fidelity_bound_thm4(circ, [eps] * circ.K, bounds.haar_twirled_trace(circ))
        rows.append((i, n, circ.K, mean, err, bound, mean <= bound + 3 * err))
    return [
        write_csv(
            args.out_dir / "circuit_bound.csv",
            ["instance", "n", "K", "sim_mean", "sim_stderr", "bound_thm4", "dominated"],
            sorted(rows),
        )
    ]


# -- entry point -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tdesign", description="Unitary t-design verification and RB simulation.")
    p.add_argument("--seed", type=int, default=None, help="64-bit master seed (default 0)")
    p.add_argument("--out-dir", type=Path, default=Path("."), help="directory for CSV and manifest output")
    p.add_argument("--threads", type=int, default=1, help="worker threads for sweep points")
    p.add_argument("--from-manifest", type=Path, help="re-run the command recorded in a manifest.txt")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("haar-check", help="Monte Carlo vs exact Haar monomial averages")
    s.add_argument("--dim", type=int_range, default=[2, 4])
    s.add_argument("--t", type=int_range, default=[1, 2, 3])
    s.add_argument("--samples", type=int, default=100_000)
    s.set_defaults(func=cmd_haar_check)

    s = sub.add_parser("design-distance", help="moment-operator distance to Haar")
    s.add_argument("--group", default="clifford1")
    s.add_argument("--t", type=int_range, default=[1, 2])
    s.set_defaults(func=cmd_design_distance)

    s = sub.add_parser("spectral-gap", help="gap of the local walk Hamiltonian")
    s.add_argument("--n", type=int_range, required=True)
    s.add_argument("--d", type=int, default=2)
    s.add_argument("--t", type=int_range, default=[1])
    s.add_argument("--method", choices=["auto", "dense", "matrix-free"], default="auto")
    s.set_defaults(func=cmd_spectral_gap)

    s = sub.add_parser("rb-sim", help="randomized benchmarking from a YAML config")
    s.add_argument("--config", type=Path, required=True)
    s.set_defaults(func=cmd_rb_sim)

    s = sub.add_parser("bounds", help="closed-form bound sweeps")
    s.add_argument("--fig1", action="store_true")
    s.add_argument("--fig2", action="store_true")
    s.add_argument("--gaps", action="store_true")
    s.add_argument("--n", type=int_range, default=None)
    s.add_argument("--d", type=int, default=2)
    s.add_argument("--t", type=int_range, default=None)
    s.set_defaults(func=cmd_bounds)

    s = sub.add_parser("twirl-check", help="Clifford sum twirl vs Schur closed form")
    s.add_argument("--pairs", type=int, default=20)
    s.add_argument("--t", type=int_range, default=[1, 2])
    s.set_defaults(func=cmd_twirl_check)

    s = sub.add_parser("circuit-bound", help="simulated K-round fidelity vs its upper bound")
    s.add_argument("--n-qubits", type=int, default=1)
    s.add_argument("--rounds", type=int, default=2)
    s.add_argument("--instances", type=int, default=10)
    s.add_argument("--samples", type=int, default=500)
    s.add_argument("--design-t", type=int, default=2)
    s.set_defaults(func=cmd_circuit_bound)
    return p


_GLOBAL_VALUED = ("--seed", "--out-dir", "--threads", "--from-manifest")


def _command_argv(argv: Sequence[str]) -> list[str]:
    """The subcommand and its flags, with global options stripped."""
    it = iter(argv)
    for tok in it:
        if tok in _GLOBAL_VALUED:
            next(it, None)
        elif not tok.startswith("-"):
            return [tok, *it]
    return []


def _expand_manifest(argv: list[str]) -> list[str]:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--from-manifest", type=Path)
    known, rest = pre.parse_known_args(argv)
    if known.from_manifest is None:
        return argv
    try:
        lines = known.from_manifest.read_text(encoding="utf-8").splitlines()
        stored = next(line[len("argv="):] for line in lines if line.startswith("argv="))
    except (OSError, StopIteration):
        raise UsageError(f"{known.from_manifest} is not a readable manifest") from None
    # options given on this command line (e.g. --out-dir) precede the stored ones
    return rest + shlex.split(stored)


def _fail(code: int, kind: str, exc: BaseException) -> int:
    msg = " ".join(str(exc).split())
    print(f"error: code={code} kind={kind} message={msg}", file=sys.stderr)
    return code


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _expand_manifest(argv)
    except UsageError as exc:
        return _fail(2, "usage", exc)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.seed_given = args.seed is not None
    args.seed = 0 if args.seed is None else args.seed
    # an unset seed stays unset so rb-sim keeps the seed from its config
    args.replay_argv = (["--seed", str(args.seed)] if args.seed_given else []) + _command_argv(argv)
    if not 0 <= args.seed < 2**64:
        return _fail(2, "usage", ValueError("--seed must be a 64-bit unsigned integer"))
    start = time.perf_counter()
    try:
        args.out_dir.mkdir(parents=True, exist_ok=True)
        outputs = args.func(args)
    except NUMERICAL_ERRORS as exc:
        return _fail(3, type(exc).__name__, exc)
    except (UsageError, ValueError, NotImplementedError, groups.UnsupportedSizeError) as exc:
        return _fail(2, type(exc).__name__, exc)
    write_manifest(args.out_dir, args, outputs, time.perf_counter() - start)
    return 0


if __name__ == "__main__":
    sys.exit(main())
