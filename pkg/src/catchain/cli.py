"""Command-line front end: parameter sweeps, figure-data CSV emission,
protocol runs and engine-vs-oracle verification.

Output is plot-ready CSV (no rendering); every command is deterministic
given its full configuration, so emitted files double as golden regression
fixtures.  Exit codes: 0 success, 1 computation failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import itertools
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence

import numpy as np

from catchain.analysis import (
    entanglement_entropy,
    fidelity,
    target_m2,
    target_m3,
)
from catchain.chain import (
    ChainSpec,
    build_projected_state,
    oracle_full_state,
    oracle_project,
    sample_outcomes,
)
from catchain.ensemble import EnsembleDim
from catchain.spincat import (
    MagicSpec,
    cat_label,
    classify_outcome,
    peak_position,
    rotated_cat_distribution,
    run_protocol,
)

WORKERS_ENV = "CATCHAIN_WORKERS"
ORACLE_TOLERANCE = 1e-10


class UsageError(Exception):
    """Invalid flag/config combination; exits with code 2."""


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _worker_count() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise UsageError(f"{WORKERS_ENV} must be an integer, got {env!r}") from exc
        if n < 1:
            raise UsageError(f"{WORKERS_ENV} must be >= 1, got {n}")
        return n
    return os.cpu_count() or 1


def _parallel_map(fn: Callable, items: Sequence) -> list:
    """Order-stable map over independent work items."""
    workers = _worker_count()
    if workers == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _parse_int_list(text: str, flag: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x != ""]
    except ValueError as exc:
        raise UsageError(f"--{flag} expects comma-separated integers, got {text!r}") from exc


def _parse_t_grid(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"--t expects start:stop:points, got {text!r}")
    try:
        start, stop, points = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise UsageError(f"--t expects start:stop:points, got {text!r}") from exc
    if points < 1:
        raise UsageError("--t needs at least one grid point")
    return np.linspace(start, stop, points)


def _resolve_phi(phi: str, l_branches: int | None) -> float:
    if phi == "zero":
        return 0.0
    if phi == "magic-offset":
        if l_branches is None:
            raise UsageError("--phi magic-offset requires --l")
        return math.pi / (2 * l_branches)
    try:
        return float(phi)
    except ValueError as exc:
        raise UsageError(f"--phi must be 'zero', 'magic-offset' or a number, got {phi!r}") from exc


def _resolve_outcomes(spec: ChainSpec, outcomes: str, seed: int) -> tuple[tuple[int, ...], str]:
    if outcomes == "all-N":
        return (spec.dim.n_atoms,) * spec.n_outcomes, "all-N"
    if outcomes == "sample":
        drawn, _ = sample_outcomes(spec, seed)
        return drawn, "sample"
    literal = tuple(_parse_int_list(outcomes, "outcomes"))
    if len(literal) != spec.n_outcomes:
        raise UsageError(
            f"--outcomes has {len(literal)} entries, expected M-2 = {spec.n_outcomes} for M={spec.m_sites}"
        )
    return literal, outcomes


def _write_csv(out: str | None, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    def emit(fh):
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])

    if out is None or out == "-":
        emit(sys.stdout)
    else:
        with open(out, "w", newline="") as fh:
            emit(fh)


# ---------------------------------------------------------------------------
# Subcommands.


def _cmd_sweep_entropy(args) -> int:
    return _run_sweep(args, "entropy")


def _cmd_sweep_fidelity(args) -> int:
    return _run_sweep(args, "fidelity")


def _run_sweep(args, quantity: str) -> int:
    dim = EnsembleDim(args.n)
    m_list = _parse_int_list(args.m, "m")
    t_grid = _parse_t_grid(args.t)
    phi = _resolve_phi(args.phi, args.l)

    def point(task):
        m_sites, t = task
        spec = ChainSpec(m_sites, dim, float(t), phi)
        outcomes, outcome_spec = _resolve_outcomes(spec, args.outcomes, args.seed)
        state = build_projected_state(spec, outcomes)
        if quantity == "entropy":
            value = entanglement_entropy(state)
        else:
            target = target_m2(dim, float(t)) if m_sites % 2 == 0 else target_m3(dim, float(t))
            value = fidelity(state, target)
        return (m_sites, args.n, float(t), phi, outcome_spec, value, state.norm_sq)

    tasks = [(m_sites, t) for m_sites in m_list for t in t_grid]
    rows = _parallel_map(point, tasks)
    _write_csv(args.out, ["M", "N", "t", "phi", "outcome_spec", quantity, "p_q"], rows)
    return 0


def _cmd_measure_dist(args) -> int:
    dim = EnsembleDim(args.n)
    phi = _resolve_phi(args.phi, args.l)
    label = cat_label(dim, args.l, args.cat_label)
    probs = rotated_cat_distribution(dim, label, phi)
    rows = []
    for q, prob in enumerate(probs):
        nearest = classify_outcome(dim, args.l, phi, q, "odd")
        rows.append((q, float(prob), nearest, peak_position(dim, args.l, phi, nearest, "odd")))
    _write_csv(args.out, ["q", "prob", "label", "q_peak"], rows)
    return 0


def _cmd_approx_compare(args) -> int:
    if args.m != 3:
        raise UsageError("approx-compare emits per-q2 rows and supports --m 3 only")
    from catchain.spincat import approx_projected_state, classify_outcomes

    dim = EnsembleDim(args.n)
    magic = MagicSpec(args.l, dim)
    chain = magic.chain(args.m)
    q2_list = _parse_int_list(args.q2, "q2")
    rows = []
    summary = []
    for q2 in q2_list:
        exact = build_projected_state(chain, (q2,))
        record = classify_outcomes(magic, args.m, (q2,))
        approx = approx_projected_state(magic, args.m, record)
        b = exact.amps / math.sqrt(exact.norm_sq)
        for k1 in range(dim.size):
            for k_m in range(dim.size):
                big_k = (args.n + 1) * k1 + k_m + 1
                rows.append(
                    (args.n, args.m, args.l, q2, big_k, abs(b[k1, k_m]), abs(approx.amps[k1, k_m]))
                )
        summary.append((args.n, args.m, args.l, q2, fidelity(exact, approx)))
    _write_csv(args.out, ["N", "M", "L", "q2", "K", "amp_exact", "amp_approx"], rows)
    summary_out = args.summary_out
    if summary_out is None and args.out not in (None, "-"):
        summary_out = args.out + ".summary.csv"
    _write_csv(summary_out, ["N", "M", "L", "q2", "fidelity"], summary)
    return 0


def _cmd_protocol(args) -> int:
    dim = EnsembleDim(args.n)
    magic = MagicSpec(args.l, dim)

    def one(i):
        report = run_protocol(magic, args.m, args.seed + i)
        site_labels = _merged_labels(report.record)
        return (
            report.seed,
            "-".join(str(q) for q in report.outcomes),
            "-".join(str(x) for x in site_labels),
            report.probability,
            report.fidelity_pre,
            report.fidelity_post,
        )

    rows = _parallel_map(one, list(range(args.samples)))
    _write_csv(args.out, ["seed", "outcomes", "labels", "p_q", "fid_pre", "fid_post"], rows)
    post = [row[5] for row in rows]
    summary = f"samples={args.samples} mean_fid_post={np.mean(post):.12g} min_fid_post={min(post):.12g}"
    print(summary, file=sys.stderr if args.out in (None, "-") else sys.stdout)
    return 0


def _merged_labels(record) -> list[int]:
    """Per-site labels in ascending site order (even and odd interleaved)."""
    even = iter(record.even_labels)
    odd = iter(record.odd_labels)
    return [next(even) if j % 2 == 0 else next(odd) for j in range(2, record.m_sites)]


def _cmd_oracle_check(args) -> int:
    dim = EnsembleDim(args.n)
    rng = np.random.default_rng(args.seed)
    worst = 0.0
    worst_at = None
    for _ in range(args.pairs):
        t, phi = rng.uniform(0.0, 2 * math.pi, 2)
        spec = ChainSpec(args.m, dim, float(t), float(phi))
        engine_spec = spec
        if args.corrupt_sign:  # negative-control hook: flips the interaction sign
            engine_spec = ChainSpec(args.m, dim, -float(t), float(phi))
        full = oracle_full_state(spec)
        for q in itertools.product(range(dim.size), repeat=spec.n_outcomes):
            a = build_projected_state(engine_spec, q)
            b = oracle_project(full, spec, q)
            dev = float(np.max(np.abs(a.amps - b.amps)))
            if dev > worst:
                worst, worst_at = dev, (float(t), float(phi), q)
    ok = worst <= ORACLE_TOLERANCE
    print(f"oracle-check N={args.n} M={args.m} pairs={args.pairs}: max deviation {worst:.3e} "
          f"({'PASS' if ok else 'FAIL'})")
    if not ok:
        print(f"worst mismatch at t={worst_at[0]:.6f} phi={worst_at[1]:.6f} outcomes={worst_at[2]}")
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# Argument and config handling.


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="plain key=value config file; flags take precedence")
    p.add_argument("--out", help="output CSV path ('-' or omitted: stdout)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="catchain", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("sweep-entropy", "sweep-fidelity"):
        p = sub.add_parser(name, help=f"{name.split('-')[1]} of the projected end state over a t grid")
        p.add_argument("--n", type=int, help="atoms per ensemble")
        p.add_argument("--m", help="comma-separated chain lengths")
        p.add_argument("--t", help="time grid start:stop:points")
        p.add_argument("--phi", help="zero | magic-offset | angle in radians")
        p.add_argument("--l", type=int, help="branch count (only for --phi magic-offset)")
        p.add_argument("--outcomes", help="all-N | sample | comma-separated literal of length M-2")
        p.add_argument("--seed", type=int, help="seed for --outcomes sample")
        _add_common(p)
        p.set_defaults(func=_cmd_sweep_entropy if name == "sweep-entropy" else _cmd_sweep_fidelity,
                       defaults={"phi": "zero", "outcomes": "all-N", "seed": 0, "l": None,
                                 "t": "0:6.283185307179586:401"})

    p = sub.add_parser("measure-dist", help="outcome distribution of a rotated spin-cat state")
    p.add_argument("--n", type=int)
    p.add_argument("--l", type=int, help="branch count of the cat state")
    p.add_argument("--phi", help="zero | magic-offset | angle in radians")
    p.add_argument("--cat-label", type=int, dest="cat_label", help="cat residue m")
    _add_common(p)
    p.set_defaults(func=_cmd_measure_dist, defaults={"phi": "magic-offset", "cat_label": 0})

    p = sub.add_parser("approx-compare", help="exact vs cat-branch approximate projected state")
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--l", type=int)
    p.add_argument("--q2", help="comma-separated middle-site outcomes")
    p.add_argument("--summary-out", dest="summary_out", help="summary CSV path")
    _add_common(p)
    p.set_defaults(func=_cmd_approx_compare, defaults={"m": 3, "summary_out": None})

    p = sub.add_parser("protocol", help="seeded end-to-end magic-time protocol runs")
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--l", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    _add_common(p)
    p.set_defaults(func=_cmd_protocol, defaults={"samples": 1, "seed": 0})

    p = sub.add_parser("oracle-check", help="exhaustive transfer-engine vs brute-force comparison")
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--pairs", type=int, help="number of random (t, phi) pairs")
    p.add_argument("--seed", type=int)
    p.add_argument("--corrupt-sign", action="store_true", dest="corrupt_sign",
                   help="negative-control hook: corrupt the engine's sign convention")
    _add_common(p)
    p.set_defaults(func=_cmd_oracle_check, defaults={"pairs": 5, "seed": 0, "corrupt_sign": False})

    return parser


REQUIRED = {
    "sweep-entropy": ("n", "m"),
    "sweep-fidelity": ("n", "m"),
    "measure-dist": ("n", "l"),
    "approx-compare": ("n", "l", "q2"),
    "protocol": ("n", "m", "l"),
    "oracle-check": ("n", "m"),
}

_CONVERTERS = {"n": int, "m": str, "l": int, "seed": int, "samples": int, "pairs": int,
               "cat_label": int, "corrupt_sign": lambda s: s.lower() in ("1", "true", "yes")}


def _load_config(path: str, known: set[str]) -> dict:
    values = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from exc
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in known:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


def _merge_config(args: argparse.Namespace) -> argparse.Namespace:
    defaults = dict(getattr(args, "defaults", {}) or {})
    known = {k for k in vars(args) if k not in ("command", "func", "defaults", "config")}
    if args.config:
        for key, raw in _load_config(args.config, known).items():
            if getattr(args, key, None) is None or (key == "corrupt_sign" and not args.corrupt_sign):
                conv = _CONVERTERS.get(key, str)
                setattr(args, key, conv(raw))
    for key, value in defaults.items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)
    for key in REQUIRED[args.command]:
        if getattr(args, key, None) is None:
            raise UsageError(f"missing required option --{key.replace('_', '-')} for {args.command}")
    return args


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        args = _merge_config(args)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
