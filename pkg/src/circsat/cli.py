"""Command-line surface: sample, verify, export-cnf, info, bench.

Exit codes: 0 ok, 2 input error, 3 verification failure, 4 partial bench
failure.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import sys
import time
from pathlib import Path

from .circuit import Circuit, CircuitError, ConstraintSet
from .cnf import tseytin_encode, write_dimacs
from .parsers import ParseError, parse_constraints, parse_file
from .sampler import SamplerConfig, SolutionSet, run_sampling

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_VERIFY = 3
EXIT_BENCH_PARTIAL = 4


def _load_circuit(path: str, fmt: str | None) -> Circuit:
    return parse_file(path, fmt)


def _load_constraints(path: str, circuit: Circuit) -> ConstraintSet:
    return parse_constraints(Path(path).read_text(), circuit)


def _config_from_args(args) -> SamplerConfig:
    return SamplerConfig(
        batch_size=args.batch,
        learning_rate=args.lr,
        iterations=args.iters,
        seed=args.seed,
        init_range=args.init_range,
        dedup_scope=args.dedup,
        threads=args.threads,
    )


def _solutions_text(result: SolutionSet, emit_all_inputs: bool) -> str:
    # Full-input dedup keys solutions over every input, so cone projection
    # would emit duplicate rows; always write full rows in that scope.
    if emit_all_inputs or result.dedup_scope == "all":
        header = ",".join(result.all_input_names)
        rows = result.full_rows()
    else:
        header = ",".join(result.input_names)
        rows = result.cone_rows()
    lines = [header]
    lines += ["".join(str(int(b)) for b in row) for row in rows]
    return "\n".join(lines) + "\n"


def _report(result: SolutionSet, config: SamplerConfig, circuit_path: str,
            constraints_path: str, wall_ms: float) -> dict:
    total = len(result)
    return {
        "config": {
            "circuit": circuit_path,
            "constraints": constraints_path,
            "batch": config.batch_size,
            "lr": config.learning_rate,
            "iters": config.iterations,
            "seed": config.seed,
            "init_range": config.init_range,
            "dedup": config.dedup_scope,
            "threads": config.threads,
        },
        "iterations": [
            {
                "iteration": s.iteration,
                "new_unique": s.new_unique,
                "cumulative_unique": s.cumulative_unique,
                "elapsed_ms": s.elapsed_ms,
                "loss_mean": s.loss_mean,
            }
            for s in result.stats
        ],
        "total_unique": total,
        "wall_ms": wall_ms,
        "throughput_per_s": total / (wall_ms / 1000.0) if wall_ms > 0 else 0.0,
    }


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_sample(args) -> int:
    try:
        circuit = _load_circuit(args.circuit, args.format)
        constraints = _load_constraints(args.constraints, circuit)
        config = _config_from_args(args)
    except (ParseError, CircuitError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    t0 = time.perf_counter()
    result = run_sampling(circuit, constraints, config)
    wall_ms = (time.perf_counter() - t0) * 1000.0
    Path(args.out).write_text(_solutions_text(result, args.emit_all_inputs))
    report = _report(result, config, args.circuit, args.constraints, wall_ms)
    report["completed"] = True
    Path(args.stats).write_text(json.dumps(report, indent=2) + "\n")
    print(f"{len(result)} unique solutions in {wall_ms:.1f} ms -> {args.out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        circuit = _load_circuit(args.circuit, args.format)
        constraints = _load_constraints(args.constraints, circuit)
        text = Path(args.solutions).read_text()
    except (ParseError, CircuitError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        print("warning: empty solutions file; nothing to verify", file=sys.stderr)
        return EXIT_OK
    header = [name.strip() for name in lines[0].split(",")]
    input_names = {circuit.name(n) for n in circuit.primary_inputs}
    for name in header:
        if name not in input_names:
            print(f"error: header column '{name}' is not a primary input", file=sys.stderr)
            return EXIT_INPUT
    rows = lines[1:]
    if not rows:
        print("warning: empty solutions file; nothing to verify", file=sys.stderr)
        return EXIT_OK
    pin_names = {circuit.name(net): bit for net, bit in constraints.pins.items()}
    for lineno, row in enumerate(rows, start=2):
        row = row.strip()
        if len(row) != len(header) or set(row) - {"0", "1"}:
            print(
                f"error: line {lineno}: expected {len(header)} bits, got '{row}'",
                file=sys.stderr,
            )
            return EXIT_INPUT
        assignment = {name: int(bit) for name, bit in zip(header, row)}
        for name in input_names - set(header):
            assignment[name] = 0  # don't-care fill; cannot affect pinned nets
        values = circuit.eval_discrete(assignment)
        bad = {n: values[n] for n, t in pin_names.items() if values[n] != t}
        if bad:
            print(f"verification failed at line {lineno}: row '{row}' gives {bad}")
            return EXIT_VERIFY
    print(f"verified {len(rows)} rows against {len(pin_names)} pins")
    return EXIT_OK


def cmd_export_cnf(args) -> int:
    try:
        circuit = _load_circuit(args.circuit, args.format)
        constraints = None
        if args.constraints:
            constraints = _load_constraints(args.constraints, circuit)
        cnf = tseytin_encode(circuit, constraints)
    except (ParseError, CircuitError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    text = write_dimacs(cnf)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    print(f"{cnf.var_count} variables, {len(cnf.clauses)} clauses", file=sys.stderr)
    return EXIT_OK


def cmd_info(args) -> int:
    try:
        circuit = _load_circuit(args.circuit, args.format)
    except (ParseError, CircuitError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    hist: dict[str, int] = {}
    max_fan_in = 0
    for g in circuit.gates:
        hist[g.kind.value] = hist.get(g.kind.value, 0) + 1
        max_fan_in = max(max_fan_in, len(g.inputs))
    info = {
        "inputs": circuit.num_inputs,
        "outputs": circuit.num_outputs,
        "gates": len(circuit.gates),
        "nets": circuit.num_nets,
        "gate_histogram": dict(sorted(hist.items())),
        "max_fan_in": max_fan_in,
        "depth": circuit.depth(),
    }
    if args.json:
        print(json.dumps(info, indent=2))
    else:
        print(f"inputs:     {info['inputs']}")
        print(f"outputs:    {info['outputs']}")
        print(f"gates:      {info['gates']}")
        print(f"nets:       {info['nets']}")
        print(f"max fan-in: {info['max_fan_in']}")
        print(f"depth:      {info['depth']}")
        for kind, count in info["gate_histogram"].items():
            print(f"  {kind:<6} {count}")
    return EXIT_OK


def _expand_cells(manifest: dict, base: Path) -> list[dict]:
    cells = []
    for raw in manifest.get("cells", []):
        grid_keys = ["lr", "seed", "batch", "iters"]
        grids = {k: raw[k] if isinstance(raw.get(k), list) else [raw.get(k)] for k in grid_keys}
        for lr, seed, batch, iters in itertools.product(*(grids[k] for k in grid_keys)):
            cells.append(
                {
                    "circuit": str(base / raw["circuit"]),
                    "constraints": str(base / raw["constraints"]),
                    "format": raw.get("format"),
                    "batch": batch if batch is not None else 10000,
                    "lr": lr if lr is not None else 15.0,
                    "iters": iters if iters is not None else 10,
                    "seed": seed if seed is not None else 0,
                    "init_range": raw.get("init_range", 1.0),
                    "dedup": raw.get("dedup", "cone"),
                }
            )
    return cells


def cmd_bench(args) -> int:
    try:
        manifest = json.loads(Path(args.manifest).read_text())
        cells = _expand_cells(manifest, Path(args.manifest).resolve().parent)
        if not cells:
            raise ValueError("manifest contains no cells")
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: bad manifest: {exc}", file=sys.stderr)
        return EXIT_INPUT
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_rows = []
    any_failed = False
    for idx, cell in enumerate(cells):
        label = f"cell{idx:03d}"
        try:
            circuit = _load_circuit(cell["circuit"], cell["format"])
            constraints = _load_constraints(cell["constraints"], circuit)
            config = SamplerConfig(
                batch_size=cell["batch"],
                learning_rate=cell["lr"],
                iterations=cell["iters"],
                seed=cell["seed"],
                init_range=cell["init_range"],
                dedup_scope=cell["dedup"],
                threads=args.threads,
            )
            t0 = time.perf_counter()
            result = run_sampling(circuit, constraints, config)
            wall_ms = (time.perf_counter() - t0) * 1000.0
        except (ParseError, CircuitError, OSError, ValueError) as exc:
            print(f"{label}: FAILED: {exc}", file=sys.stderr)
            (out_dir / f"{label}.error.txt").write_text(str(exc) + "\n")
            any_failed = True
            continue
        report = _report(result, config, cell["circuit"], cell["constraints"], wall_ms)
        (out_dir / f"{label}.stats.json").write_text(json.dumps(report, indent=2) + "\n")
        cum_ms = 0.0
        for s in result.stats:
            cum_ms += s.elapsed_ms
            csv_rows.append(
                {
                    "cell": label,
                    "circuit": Path(cell["circuit"]).name,
                    "batch": cell["batch"],
                    "lr": cell["lr"],
                    "seed": cell["seed"],
                    "iteration": s.iteration,
                    "new_unique": s.new_unique,
                    "cumulative_unique": s.cumulative_unique,
                    "elapsed_ms": round(s.elapsed_ms, 3),
                    "cumulative_ms": round(cum_ms, 3),
                    "throughput_per_s": round(
                        s.cumulative_unique / (cum_ms / 1000.0), 3
                    ) if cum_ms > 0 else 0.0,
                }
            )
        print(f"{label}: {Path(cell['circuit']).name} lr={cell['lr']} "
              f"seed={cell['seed']} -> {len(result)} unique in {wall_ms:.1f} ms")
    if csv_rows:
        with open(out_dir / "bench.csv", "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(csv_rows[0]))
            writer.writeheader()
            writer.writerows(csv_rows)
    return EXIT_BENCH_PARTIAL if any_failed else EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _add_circuit_args(p: argparse.ArgumentParser):
    p.add_argument("--circuit", required=True, help="netlist file (.v/.blif/.bench)")
    p.add_argument(
        "--format", choices=["verilog", "blif", "bench"], default=None,
        help="netlist format (default: inferred from extension)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="circsat",
        description="Gradient-based CircuitSAT sampler with parsers, oracle and CNF export",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="learn and emit satisfying input assignments")
    _add_circuit_args(p)
    p.add_argument("--constraints", required=True, help="pin file: '<net> <0|1>' lines")
    p.add_argument("--batch", type=int, default=10000)
    p.add_argument("--lr", type=float, default=15.0)
    p.add_argument("--iters", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--init-range", type=float, default=1.0, dest="init_range")
    p.add_argument("--dedup", choices=["cone", "all"], default="cone")
    p.add_argument("--threads", type=int, default=1, help="0 = one per CPU")
    p.add_argument("--out", default="solutions.txt")
    p.add_argument("--stats", default="stats.json")
    p.add_argument("--emit-all-inputs", action="store_true",
                   help="emit all primary inputs (don't-cares random-filled)")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("verify", help="re-check a solutions file against the oracle")
    _add_circuit_args(p)
    p.add_argument("--constraints", required=True)
    p.add_argument("--solutions", required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("export-cnf", help="Tseytin-encode the circuit to DIMACS")
    _add_circuit_args(p)
    p.add_argument("--constraints", default=None)
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.set_defaults(func=cmd_export_cnf)

    p = sub.add_parser("info", help="print circuit statistics")
    _add_circuit_args(p)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("bench", help="run a manifest of sampling cells, emit CSV series")
    p.add_argument("--manifest", required=True, help="JSON manifest of (circuit, config) cells")
    p.add_argument("--out-dir", required=True, dest="out_dir")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
