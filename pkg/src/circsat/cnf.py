"""Tseytin transformation to CNF and DIMACS output.

One variable per net, full biconditional encoding (both implication
directions), so models of the CNF projected onto the primary-input variables
are exactly the circuit's satisfying assignments.  XOR/XNOR with fan-in > 2
are chained through auxiliary variables, four clauses per binary stage,
matching the left-fold semantics of the simulator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .circuit import Circuit, CircuitError, ConstraintSet, GateKind


@dataclass
class CnfFormula:
    var_count: int
    clauses: list[list[int]]
    var_map: dict[int, int]  # net id -> DIMACS variable
    comments: list[str] = field(default_factory=list)


def _binary_xor_clauses(a: int, b: int, y: int) -> list[list[int]]:
    return [[-a, -b, -y], [a, b, -y], [a, -b, y], [-a, b, y]]


def _binary_xnor_clauses(a: int, b: int, y: int) -> list[list[int]]:
    return [[-a, -b, y], [a, b, y], [a, -b, -y], [-a, b, -y]]


def tseytin_encode(circuit: Circuit, constraints: ConstraintSet | None = None) -> CnfFormula:
    diags = circuit.validate()
    if diags:
        raise CircuitError("invalid circuit: " + "; ".join(diags))
    var_map = {net: net + 1 for net in range(circuit.num_nets)}
    next_var = circuit.num_nets + 1
    clauses: list[list[int]] = []

    for gi in circuit.topo_order():
        g = circuit.gates[gi]
        y = var_map[g.output]
        xs = [var_map[n] for n in g.inputs]
        kind = g.kind
        if kind is GateKind.CONST0:
            clauses.append([-y])
        elif kind is GateKind.CONST1:
            clauses.append([y])
        elif kind is GateKind.NOT:
            clauses += [[xs[0], y], [-xs[0], -y]]
        elif kind is GateKind.BUF:
            clauses += [[-xs[0], y], [xs[0], -y]]
        elif kind is GateKind.AND:
            clauses += [[-y, x] for x in xs]
            clauses.append([y] + [-x for x in xs])
        elif kind is GateKind.NAND:
            clauses += [[y, x] for x in xs]
            clauses.append([-y] + [-x for x in xs])
        elif kind is GateKind.OR:
            clauses += [[y, -x] for x in xs]
            clauses.append([-y] + xs)
        elif kind is GateKind.NOR:
            clauses += [[-y, -x] for x in xs]
            clauses.append([y] + xs)
        elif kind in (GateKind.XOR, GateKind.XNOR):
            stage = _binary_xor_clauses if kind is GateKind.XOR else _binary_xnor_clauses
            acc = xs[0]
            for i, x in enumerate(xs[1:]):
                last = i == len(xs) - 2
                out = y if last else next_var
                if not last:
                    next_var += 1
                clauses += stage(acc, x, out)
                acc = out
        else:
            raise CircuitError(f"cannot encode gate kind {kind}")

    comments = [
        f"input {circuit.name(net)} {var_map[net]}" for net in circuit.primary_inputs
    ] + [f"output {circuit.name(net)} {var_map[net]}" for net in circuit.primary_outputs]

    if constraints is not None:
        for net, bit in constraints.pins.items():
            clauses.append([var_map[net] if bit else -var_map[net]])

    return CnfFormula(
        var_count=next_var - 1, clauses=clauses, var_map=var_map, comments=comments
    )


def write_dimacs(cnf: CnfFormula) -> str:
    lines = [f"c {c}" for c in cnf.comments]
    lines.append(f"p cnf {cnf.var_count} {len(cnf.clauses)}")
    for clause in cnf.clauses:
        lines.append(" ".join(str(lit) for lit in clause) + " 0")
    return "\n".join(lines) + "\n"


def parse_dimacs(text: str) -> tuple[int, list[list[int]]]:
    """Minimal DIMACS reader (round-trip checks and the verify path)."""
    var_count = None
    clauses: list[list[int]] = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ValueError(f"bad problem line: '{line}'")
            var_count = int(parts[2])
            continue
        lits = [int(t) for t in line.split()]
        if lits and lits[-1] == 0:
            lits = lits[:-1]
        if lits:
            clauses.append(lits)
    if var_count is None:
        raise ValueError("missing 'p cnf' header")
    return var_count, clauses
