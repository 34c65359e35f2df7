"""Netlist frontends: structural Verilog subset, BLIF subset and ISCAS .bench.

All three parsers produce the same in-memory Circuit; writers for each format
support round-trip testing and format conversion.
"""

from __future__ import annotations

import itertools
import re
from pathlib import Path

from .circuit import Circuit, CircuitError, ConstraintSet, Gate, GateKind


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        loc = ""
        if line is not None:
            loc = f" at line {line}" + (f", col {col}" if col is not None else "")
        super().__init__(message + loc)
        self.line = line
        self.col = col


_VERILOG_KINDS = {
    "not": GateKind.NOT,
    "buf": GateKind.BUF,
    "and": GateKind.AND,
    "or": GateKind.OR,
    "nand": GateKind.NAND,
    "nor": GateKind.NOR,
    "xor": GateKind.XOR,
    "xnor": GateKind.XNOR,
}

_BENCH_KINDS = {
    "NOT": GateKind.NOT,
    "BUFF": GateKind.BUF,
    "AND": GateKind.AND,
    "OR": GateKind.OR,
    "NAND": GateKind.NAND,
    "NOR": GateKind.NOR,
    "XOR": GateKind.XOR,
    "XNOR": GateKind.XNOR,
}


def _finish(names, inputs, outputs, gates, where: str) -> Circuit:
    circuit = Circuit(names, inputs, outputs, gates)
    diags = circuit.validate()
    if diags:
        raise ParseError(f"{where}: invalid circuit: " + "; ".join(diags))
    return circuit


# ---------------------------------------------------------------------------
# Verilog (positional-port, gate-primitive-only subset)
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_$]*|[(),;]|\S")


def _tokenize_verilog(text: str):
    tokens = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        code = line.split("//", 1)[0]
        for m in _TOKEN_RE.finditer(code):
            tokens.append((m.group(0), lineno, m.start() + 1))
    return tokens


def parse_verilog(text: str) -> Circuit:
    tokens = _tokenize_verilog(text)
    pos = 0

    def peek():
        return tokens[pos][0] if pos < len(tokens) else None

    def take(expected: str | None = None):
        nonlocal pos
        if pos >= len(tokens):
            raise ParseError(f"unexpected end of input, expected {expected or 'a token'}")
        tok, line, col = tokens[pos]
        if expected is not None and tok != expected:
            raise ParseError(f"expected '{expected}', found '{tok}'", line, col)
        pos += 1
        return tok, line, col

    def take_name(what: str) -> tuple[str, int, int]:
        tok, line, col = take()
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_$]*", tok):
            raise ParseError(f"expected {what}, found '{tok}'", line, col)
        return tok, line, col

    def name_list() -> list[str]:
        out = [take_name("a net name")[0]]
        while peek() == ",":
            take(",")
            out.append(take_name("a net name")[0])
        return out

    take("module")
    take_name("a module name")
    take("(")
    ports = name_list()
    take(")")
    take(";")

    declared_inputs: list[str] = []
    declared_outputs: list[str] = []
    declared_wires: list[str] = []
    gates_src: list[tuple[GateKind, str, list[str], int]] = []

    while peek() != "endmodule":
        tok, line, col = take()
        if tok in ("input", "output", "wire"):
            names = name_list()
            take(";")
            {"input": declared_inputs, "output": declared_outputs, "wire": declared_wires}[
                tok
            ].extend(names)
        elif tok in _VERILOG_KINDS:
            kind = _VERILOG_KINDS[tok]
            take_name("an instance name")
            take("(")
            args = name_list()
            take(")")
            take(";")
            if len(args) < 2:
                raise ParseError(f"gate '{tok}' needs an output and at least one input", line, col)
            gates_src.append((kind, args[0], args[1:], line))
        else:
            raise ParseError(f"unsupported construct '{tok}'", line, col)
    take("endmodule")
    if pos != len(tokens):
        tok, line, col = tokens[pos]
        raise ParseError(f"unexpected token '{tok}' after endmodule", line, col)

    declared = set(declared_inputs) | set(declared_outputs) | set(declared_wires)
    for name in ports:
        if name not in declared:
            raise ParseError(f"port '{name}' is not declared as input or output")

    names: list[str] = []
    seen: set[str] = set()
    for name in itertools.chain(declared_inputs, declared_outputs, declared_wires):
        if name in seen:
            raise ParseError(f"net '{name}' declared more than once")
        seen.add(name)
        names.append(name)
    name_to_id = {n: i for i, n in enumerate(names)}

    gates: list[Gate] = []
    for kind, out, ins, line in gates_src:
        for name in [out, *ins]:
            if name not in name_to_id:
                raise ParseError(f"undeclared net '{name}'", line)
        if not kind.arity_ok(len(ins)):
            raise ParseError(
                f"arity violation: {kind.value} gate on '{out}' with {len(ins)} inputs", line
            )
        gates.append(Gate(kind, tuple(name_to_id[n] for n in ins), name_to_id[out]))

    return _finish(
        names,
        [name_to_id[n] for n in declared_inputs],
        [name_to_id[n] for n in declared_outputs],
        gates,
        "verilog",
    )


# ---------------------------------------------------------------------------
# BLIF
# ---------------------------------------------------------------------------


def _cover_to_kind(lines: list[tuple[str, str]], fan_in: int) -> GateKind:
    """Canonicalize a single-output cover by truth-table matching."""
    if fan_in == 0:
        if not lines:
            return GateKind.CONST0
        if all(out == "1" and pat == "" for pat, out in lines):
            return GateKind.CONST1
        if all(out == "0" and pat == "" for pat, out in lines):
            return GateKind.CONST0
        raise ParseError("unsupported constant cover")
    out_vals = {out for _, out in lines}
    if len(out_vals) > 1:
        raise ParseError("cover mixes output values 0 and 1")
    listed = out_vals.pop() if out_vals else "1"

    def covered(bits: tuple[int, ...]) -> bool:
        for pat, _ in lines:
            if all(p == "-" or int(p) == b for p, b in zip(pat, bits)):
                return True
        return False

    table = []
    for bits in itertools.product((0, 1), repeat=fan_in):
        val = int(listed) if covered(bits) else 1 - int(listed)
        table.append(val)

    from .circuit import _eval_gate  # truth-table reference for each kind

    candidates = [GateKind.NOT, GateKind.BUF] if fan_in == 1 else [
        GateKind.AND, GateKind.OR, GateKind.NAND, GateKind.NOR, GateKind.XOR, GateKind.XNOR,
    ]
    for kind in candidates:
        ref = [
            _eval_gate(kind, list(bits)) for bits in itertools.product((0, 1), repeat=fan_in)
        ]
        if ref == table:
            return kind
    raise ParseError(
        f"unsupported cover: {fan_in}-input truth table matches no supported gate"
    )


def parse_blif(text: str) -> Circuit:
    # Join continuation lines, strip comments.
    raw = text.replace("\\\n", " ")
    lines: list[tuple[int, str]] = []
    for lineno, line in enumerate(raw.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if line:
            lines.append((lineno, line))

    model_seen = False
    inputs: list[str] = []
    outputs: list[str] = []
    covers: list[tuple[int, list[str], list[tuple[str, str]]]] = []
    i = 0
    while i < len(lines):
        lineno, line = lines[i]
        i += 1
        parts = line.split()
        cmd = parts[0]
        if cmd == ".model":
            if model_seen:
                raise ParseError("multiple .model sections are not supported", lineno)
            model_seen = True
        elif cmd == ".inputs":
            inputs.extend(parts[1:])
        elif cmd == ".outputs":
            outputs.extend(parts[1:])
        elif cmd == ".names":
            if len(parts) < 2:
                raise ParseError(".names needs at least an output net", lineno)
            sig = parts[1:]
            cover: list[tuple[str, str]] = []
            while i < len(lines) and not lines[i][1].startswith("."):
                cl, cline = lines[i]
                i += 1
                fields = cline.split()
                if len(sig) == 1:
                    if len(fields) != 1 or fields[0] not in ("0", "1"):
                        raise ParseError("constant cover line must be a single 0 or 1", cl)
                    cover.append(("", fields[0]))
                else:
                    if len(fields) != 2 or fields[1] not in ("0", "1"):
                        raise ParseError("cover line must be '<pattern> <0|1>'", cl)
                    if len(fields[0]) != len(sig) - 1 or not set(fields[0]) <= set("01-"):
                        raise ParseError("bad cover pattern", cl)
                    cover.append((fields[0], fields[1]))
            covers.append((lineno, sig, cover))
        elif cmd == ".end":
            break
        elif cmd == ".latch":
            raise ParseError(".latch is not supported (combinational circuits only)", lineno)
        else:
            raise ParseError(f"unsupported BLIF construct '{cmd}'", lineno)

    if not inputs and not model_seen:
        raise ParseError("missing .model/.inputs/.outputs header")
    if not inputs:
        raise ParseError("missing .inputs")
    if not outputs:
        raise ParseError("missing .outputs")

    names: list[str] = []
    name_to_id: dict[str, int] = {}

    def net(name: str) -> int:
        if name not in name_to_id:
            name_to_id[name] = len(names)
            names.append(name)
        return name_to_id[name]

    input_ids = [net(n) for n in inputs]
    output_ids = [net(n) for n in outputs]

    gates: list[Gate] = []
    driven: set[int] = set()
    for lineno, sig, cover in covers:
        out = net(sig[-1])
        ins = [net(n) for n in sig[:-1]]
        if out in driven:
            raise ParseError(f"duplicate driver for net '{sig[-1]}'", lineno)
        driven.add(out)
        kind = _cover_to_kind(cover, len(ins))
        if kind.is_const:
            ins = []
        gates.append(Gate(kind, tuple(ins), out))

    return _finish(names, input_ids, output_ids, gates, "blif")


# ---------------------------------------------------------------------------
# ISCAS .bench
# ---------------------------------------------------------------------------

_BENCH_LINE_RE = re.compile(
    r"^(?:(INPUT|OUTPUT)\s*\(\s*([^\s()]+)\s*\)"
    r"|([^\s=()]+)\s*=\s*([A-Za-z]+)\s*\(\s*([^()]*)\s*\))$"
)


def parse_bench(text: str) -> Circuit:
    inputs: list[str] = []
    outputs: list[str] = []
    gates_src: list[tuple[str, str, list[str], int]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        m = _BENCH_LINE_RE.match(line)
        if not m:
            raise ParseError(f"unrecognized line: '{line}'", lineno)
        if m.group(1) == "INPUT":
            inputs.append(m.group(2))
        elif m.group(1) == "OUTPUT":
            outputs.append(m.group(2))
        else:
            out, kw, args = m.group(3), m.group(4), m.group(5)
            ins = [a.strip() for a in args.split(",") if a.strip()]
            gates_src.append((out, kw, ins, lineno))

    names: list[str] = []
    name_to_id: dict[str, int] = {}

    def net(name: str) -> int:
        if name not in name_to_id:
            name_to_id[name] = len(names)
            names.append(name)
        return name_to_id[name]

    input_ids = [net(n) for n in inputs]
    output_ids = [net(n) for n in outputs]
    gates: list[Gate] = []
    driven: set[int] = set(input_ids)
    for out, kw, ins, lineno in gates_src:
        kind = _BENCH_KINDS.get(kw.upper())
        if kind is None:
            raise ParseError(f"unknown gate keyword '{kw}'", lineno)
        out_id = net(out)
        if out_id in driven:
            raise ParseError(f"redefinition of net '{out}'", lineno)
        driven.add(out_id)
        if not kind.arity_ok(len(ins)):
            raise ParseError(f"arity violation: {kw}({len(ins)} args) for net '{out}'", lineno)
        gates.append(Gate(kind, tuple(net(n) for n in ins), out_id))

    return _finish(names, input_ids, output_ids, gates, "bench")


# ---------------------------------------------------------------------------
# Writers (round-trip / conversion)
# ---------------------------------------------------------------------------


def to_verilog(circuit: Circuit, module_name: str = "top") -> str:
    if any(g.kind.is_const for g in circuit.gates):
        raise CircuitError("constant drivers cannot be expressed in the Verilog subset")
    inputs = [circuit.name(n) for n in circuit.primary_inputs]
    outputs = [circuit.name(n) for n in circuit.primary_outputs]
    io = set(circuit.primary_inputs) | set(circuit.primary_outputs)
    wires = [circuit.name(g.output) for g in circuit.gates if g.output not in io]
    lines = [f"module {module_name}({','.join(inputs + outputs)});"]
    lines.append(f"input {','.join(inputs)};")
    lines.append(f"output {','.join(outputs)};")
    if wires:
        lines.append(f"wire {','.join(wires)};")
    for gi, g in enumerate(circuit.gates):
        kind = g.kind.value.lower()
        args = ",".join([circuit.name(g.output)] + [circuit.name(n) for n in g.inputs])
        lines.append(f"  {kind} U{gi}({args});")
    lines.append("endmodule")
    return "\n".join(lines) + "\n"


def to_bench(circuit: Circuit) -> str:
    if any(g.kind.is_const for g in circuit.gates):
        raise CircuitError("constant drivers cannot be expressed in .bench")
    lines = [f"INPUT({circuit.name(n)})" for n in circuit.primary_inputs]
    lines += [f"OUTPUT({circuit.name(n)})" for n in circuit.primary_outputs]
    kw = {v: k for k, v in _BENCH_KINDS.items()}
    for gi in circuit.topo_order():
        g = circuit.gates[gi]
        args = ", ".join(circuit.name(n) for n in g.inputs)
        lines.append(f"{circuit.name(g.output)} = {kw[g.kind]}({args})")
    return "\n".join(lines) + "\n"


_BLIF_COVERS = {
    GateKind.NOT: [("0", "1")],
    GateKind.BUF: [("1", "1")],
}


def to_blif(circuit: Circuit, model_name: str = "top") -> str:
    lines = [f".model {model_name}"]
    lines.append(".inputs " + " ".join(circuit.name(n) for n in circuit.primary_inputs))
    lines.append(".outputs " + " ".join(circuit.name(n) for n in circuit.primary_outputs))
    for gi in circuit.topo_order():
        g = circuit.gates[gi]
        sig = " ".join(circuit.name(n) for n in g.inputs) + (" " if g.inputs else "")
        lines.append(f".names {sig}{circuit.name(g.output)}")
        f = len(g.inputs)
        if g.kind is GateKind.CONST1:
            lines.append("1")
        elif g.kind is GateKind.CONST0:
            pass  # empty cover = constant 0
        elif g.kind in _BLIF_COVERS:
            lines += [f"{p} {o}" for p, o in _BLIF_COVERS[g.kind]]
        elif g.kind is GateKind.AND:
            lines.append("1" * f + " 1")
        elif g.kind is GateKind.NAND:
            lines.append("1" * f + " 0")
        elif g.kind is GateKind.OR:
            lines += [("-" * i + "1" + "-" * (f - i - 1)) + " 1" for i in range(f)]
        elif g.kind is GateKind.NOR:
            lines.append("0" * f + " 1")
        else:  # XOR / XNOR: enumerate the on-set
            from .circuit import _eval_gate

            for bits in itertools.product((0, 1), repeat=f):
                if _eval_gate(g.kind, list(bits)) == 1:
                    lines.append("".join(map(str, bits)) + " 1")
    lines.append(".end")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Format dispatch and constraint files
# ---------------------------------------------------------------------------

_PARSERS = {"verilog": parse_verilog, "blif": parse_blif, "bench": parse_bench}
_EXTENSIONS = {".v": "verilog", ".blif": "blif", ".bench": "bench"}


def parse_file(path: str | Path, fmt: str | None = None) -> Circuit:
    path = Path(path)
    if fmt is None:
        fmt = _EXTENSIONS.get(path.suffix.lower())
        if fmt is None:
            raise ParseError(
                f"cannot infer netlist format from extension '{path.suffix}'; pass the format explicitly"
            )
    if fmt not in _PARSERS:
        raise ParseError(f"unknown netlist format '{fmt}'")
    return _PARSERS[fmt](path.read_text())


def parse_constraints(text: str, circuit: Circuit) -> ConstraintSet:
    """Constraint file: one `<net_name> <0|1>` per line, '#' comments."""
    pins: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2 or parts[1] not in ("0", "1"):
            raise ParseError(f"expected '<net_name> <0|1>', got '{line}'", lineno)
        name, bit = parts
        if name in pins:
            raise ParseError(f"duplicate pin for net '{name}'", lineno)
        pins[name] = int(bit)
    return ConstraintSet.from_names(circuit, pins)
