"""Command-line front end.

Exit status: 0 on success, 1 on a usage or input error, 2 when a computed
result violates a numerical postcondition.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ContractViolation, GraphParseError, NumericalContractError
from .graph_model import Graph, complement_witness, hamiltonian, parse_edge_list, uniform_state
from .hitting import (
    dark_subspace,
    detect_infinite,
    fit_asymptotics,
    hitting_matrices,
    hitting_time,
    lambda_sweep,
    pure_density,
)
from .oracles import mc_estimate
from .spectral import eigendecompose
from .superop import MeasurementSetup

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit with status 2
        raise UsageError(message)


def complex_pairs(values) -> list:
    """Nested lists of ``[re, im]`` pairs for a complex vector or matrix."""
    arr = np.asarray(values, dtype=complex)
    if arr.ndim == 1:
        return [[float(z.real), float(z.imag)] for z in arr]
    return [complex_pairs(row) for row in arr]


def parse_rates(spec: str) -> list[float]:
    """``"2"`` or ``"start:stop:points"`` (log-spaced, endpoints included)."""
    parts = spec.split(":")
    try:
        if len(parts) == 1:
            rates = [float(parts[0])]
        elif len(parts) == 3:
            start, stop, points = float(parts[0]), float(parts[1]), int(parts[2])
            if start <= 0 or stop <= 0 or points < 1:
                raise UsageError(f"--lambda {spec!r}: need start, stop > 0 and points >= 1")
            rates = list(np.logspace(np.log10(start), np.log10(stop), points)) if points > 1 else [start]
        else:
            raise UsageError(f"--lambda {spec!r}: expected a value or start:stop:points")
    except ValueError:
        raise UsageError(f"--lambda {spec!r}: not a number") from None
    if any(not np.isfinite(r) or r <= 0 for r in rates):
        raise UsageError(f"--lambda {spec!r}: rates must be finite and > 0")
    return [float(r) for r in rates]


def parse_initial_state(spec: str, n: int) -> np.ndarray:
    """Vertex index, ``uniform``, or comma-separated complex amplitudes (normalized here)."""
    spec = spec.strip()
    if spec == "uniform":
        return uniform_state(n)
    if "," not in spec:
        try:
            k = int(spec)
        except ValueError:
            raise UsageError(f"--init {spec!r}: expected a vertex index, 'uniform' or an amplitude list") from None
        if not 0 <= k < n:
            raise UsageError(f"--init {spec!r}: vertex index out of range [0, {n})")
        psi = np.zeros(n, dtype=complex)
        psi[k] = 1.0
        return psi
    try:
        amps = np.array([complex(a.strip().replace(" ", "")) for a in spec.split(",")])
    except ValueError:
        raise UsageError(f"--init {spec!r}: cannot parse amplitudes") from None
    if amps.size != n:
        raise UsageError(f"--init {spec!r}: {amps.size} amplitudes for {n} vertices")
    norm = np.linalg.norm(amps)
    if norm == 0:
        raise UsageError(f"--init {spec!r}: zero vector")
    return amps / norm


def _load_graph(path: str) -> Graph:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"--graph {path!r}: {exc.strerror or exc}") from None
    try:
        return parse_edge_list(text)
    except GraphParseError as exc:
        raise UsageError(f"--graph {path!r}: {exc}") from None


def _final_vertex(args, g: Graph) -> int:
    if not 0 <= args.final < g.n:
        raise UsageError(f"--final {args.final}: vertex index out of range [0, {g.n})")
    return args.final


def _single_rate(args) -> float:
    rates = parse_rates(args.rate)
    if len(rates) != 1:
        raise UsageError(f"--lambda {args.rate!r}: this command takes a single rate")
    return rates[0]


def _require_init(args, n: int) -> np.ndarray:
    if args.init is None:
        raise UsageError(f"{args.command}: --init is required")
    return parse_initial_state(args.init, n)


def cmd_hit(args, g: Graph):
    v_f = _final_vertex(args, g)
    psi = _require_init(args, g.n)
    report = hitting_time(hamiltonian(g), MeasurementSetup(v_f, _single_rate(args)), pure_density(psi))
    return report.to_dict()


def cmd_matrices(args, g: Graph):
    v_f = _final_vertex(args, g)
    rate = _single_rate(args)
    p_mat, t_mat = hitting_matrices(hamiltonian(g), MeasurementSetup(v_f, rate))
    return {"lambda": rate, "final": v_f, "P": complex_pairs(p_mat), "H": complex_pairs(t_mat)}


def cmd_dark(args, g: Graph):
    v_f = _final_vertex(args, g)
    dark = dark_subspace(eigendecompose(hamiltonian(g)), v_f)
    return {
        "final": v_f,
        "dim": dark.dim,
        "basis": [complex_pairs(dark.basis[:, k]) for k in range(dark.dim)],
        "energies": [float(e) for e in dark.energies],
        "per_eigenvalue_dims": [{"eigenvalue": e, "dim": d} for e, d in dark.per_eigenvalue_dims],
    }


def cmd_sweep(args, g: Graph):
    v_f = _final_vertex(args, g)
    psi = _require_init(args, g.n)
    reports = lambda_sweep(hamiltonian(g), v_f, pure_density(psi), parse_rates(args.rate))
    fit = fit_asymptotics(reports) if args.fit else None
    if args.format == "json":
        out = {"rows": [r.to_dict() for r in reports]}
        if fit is not None:
            out["tau_1"], out["tau_minus_1"] = fit
        return out
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["lambda", "tau_h", "p_h"])
    for r in reports:
        writer.writerow([repr(r.rate), "inf" if r.infinite else repr(r.tau_h), repr(r.p_h)])
    if fit is not None:
        buf.write(f"# tau_1={fit[0]!r},tau_minus_1={fit[1]!r}\n")
    return buf.getvalue()


def cmd_simulate(args, g: Graph):
    v_f = _final_vertex(args, g)
    psi = _require_init(args, g.n)
    setup = MeasurementSetup(v_f, _single_rate(args))
    stats = mc_estimate(
        eigendecompose(hamiltonian(g)),
        setup,
        psi,
        n_traj=args.n_traj,
        max_meas=args.max_meas,
        seed=args.seed,
        workers=args.workers,
    )
    return stats.to_dict()


def cmd_complement_check(args, g: Graph):
    v_f = _final_vertex(args, g)
    try:
        witness = complement_witness(g, v_f)
    except ContractViolation as exc:
        raise UsageError(f"--graph {args.graph!r}: {exc}") from None
    diag = detect_infinite(g, v_f)
    return {
        "final": v_f,
        "witness": "none" if witness is None else complex_pairs(witness),
        "criteria": diag.criteria,
    }


COMMANDS = {
    "hit": cmd_hit,
    "matrices": cmd_matrices,
    "dark": cmd_dark,
    "sweep": cmd_sweep,
    "simulate": cmd_simulate,
    "complement-check": cmd_complement_check,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="ctqw-hitting",
        description="Hitting times of continuous-time quantum walks under Poisson-timed measurement.",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--graph", required=True, help="edge-list file")
        p.add_argument("--final", type=int, required=True, help="final vertex (0-based)")
        if name in ("hit", "matrices", "sweep", "simulate"):
            default = "0.01:100:20" if name == "sweep" else "1"
            p.add_argument("--lambda", dest="rate", default=default,
                           help="measurement rate, or start:stop:points (log-spaced) for sweep")
        if name in ("hit", "sweep", "simulate"):
            p.add_argument("--init", help="vertex index, 'uniform', or comma-separated complex amplitudes")
        if name == "sweep":
            p.add_argument("--fit", action="store_true", help="append fitted asymptotic coefficients")
        if name == "simulate":
            p.add_argument("--seed", type=int, default=0)
            p.add_argument("--n-traj", type=int, default=10_000)
            p.add_argument("--max-meas", type=int, default=10_000)
            p.add_argument("--workers", type=int, default=1)
        p.add_argument("--format", choices=("json", "csv"),
                       default="csv" if name == "sweep" else "json")
        p.add_argument("--output", "-o", help="output file (default: standard output)")
    return parser


def _render(result, fmt: str) -> str:
    if isinstance(result, str):
        return result
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        flat = {k: (json.dumps(v) if isinstance(v, (list, dict)) else v) for k, v in result.items()}
        writer.writerow(flat.keys())
        writer.writerow(flat.values())
        return buf.getvalue()
    return json.dumps(result, indent=2) + "\n"


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        g = _load_graph(args.graph)
        if getattr(args, "n_traj", 1) < 1 or getattr(args, "max_meas", 1) < 1:
            raise UsageError("--n-traj and --max-meas must be >= 1")
        text = _render(COMMANDS[args.command](args, g), args.format)
        if args.output:
            Path(args.output).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ContractViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalContractError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
