"""Shared test utilities: fixtures, random circuits and independent oracles."""

from __future__ import annotations

import itertools
import os
from pathlib import Path

import numpy as np

from circsat import Circuit, ConstraintSet, Gate, GateKind, forward, parse_file

DATA = Path(__file__).parent / "data"
ISCAS_DIR = Path(os.environ.get("CIRCSAT_ISCAS_DIR", DATA / "iscas85"))


def load(name: str) -> Circuit:
    return parse_file(DATA / name)


def iscas_path(circuit_name: str) -> Path:
    return ISCAS_DIR / f"{circuit_name}.bench"


_KINDS = [
    GateKind.NOT,
    GateKind.BUF,
    GateKind.AND,
    GateKind.OR,
    GateKind.NAND,
    GateKind.NOR,
    GateKind.XOR,
    GateKind.XNOR,
]


def random_circuit(
    rng: np.random.Generator, n_inputs: int, n_gates: int, max_fan_in: int = 3
) -> Circuit:
    """Random acyclic circuit; gates draw inputs from any earlier net."""
    names = [f"i{k}" for k in range(n_inputs)]
    available = list(range(n_inputs))
    gates = []
    for g in range(n_gates):
        kind = _KINDS[rng.integers(len(_KINDS))]
        if kind in (GateKind.NOT, GateKind.BUF):
            fan_in = 1
        else:
            fan_in = int(rng.integers(2, max_fan_in + 1))
        ins = rng.choice(len(available), size=min(fan_in, len(available)), replace=False)
        ins = [available[i] for i in ins]
        if len(ins) == 1 and kind not in (GateKind.NOT, GateKind.BUF):
            kind = GateKind.NOT
        out = len(names)
        names.append(f"g{g}")
        gates.append(Gate(kind, tuple(ins), out))
        available.append(out)
    driven = {g.output for g in gates}
    used = {n for g in gates for n in g.inputs}
    sinks = sorted(driven - used)
    if not sinks:
        sinks = [gates[-1].output]
    return Circuit(names, list(range(n_inputs)), sinks, gates)


def naive_eval(circuit: Circuit, assignment: dict[str, int]) -> dict[str, int]:
    """Recursive reference evaluator, independent of topo_order."""
    memo = {circuit.name_to_id[k]: int(v) for k, v in assignment.items()}

    def value(net: int) -> int:
        if net in memo:
            return memo[net]
        gate = circuit.gates[circuit.driver[net]]
        bits = [value(n) for n in gate.inputs]
        k = gate.kind
        if k is GateKind.NOT:
            out = 1 - bits[0]
        elif k is GateKind.BUF:
            out = bits[0]
        elif k is GateKind.AND:
            out = int(all(bits))
        elif k is GateKind.OR:
            out = int(any(bits))
        elif k is GateKind.NAND:
            out = 1 - int(all(bits))
        elif k is GateKind.NOR:
            out = 1 - int(any(bits))
        elif k is GateKind.XOR:
            out = bits[0]
            for b in bits[1:]:
                out ^= b
        elif k is GateKind.XNOR:
            out = bits[0]
            for b in bits[1:]:
                out = 1 - (out ^ b)
        elif k is GateKind.CONST0:
            out = 0
        else:
            out = 1
        memo[net] = out
        return out

    return {circuit.names[n]: value(n) for n in range(circuit.num_nets)}


def brute_force_solutions(
    circuit: Circuit, constraints: ConstraintSet
) -> set[tuple[int, ...]]:
    """All satisfying full input assignments, by exhaustive enumeration."""
    input_names = [circuit.name(n) for n in circuit.primary_inputs]
    sols = set()
    for bits in itertools.product((0, 1), repeat=len(input_names)):
        values = circuit.eval_discrete(dict(zip(input_names, bits)))
        if all(values[circuit.name(net)] == t for net, t in constraints.pins.items()):
            sols.add(bits)
    return sols


def scalar_loss(circuit: Circuit, P: np.ndarray, constraints: ConstraintSet) -> np.ndarray:
    """Per-sample l2 loss recomputed directly from a forward pass."""
    tape = forward(circuit, P)
    loss = np.zeros(P.shape[0])
    for net, t in constraints.pins.items():
        loss += (tape.net(net) - t) ** 2
    return loss


def fd_input_grads(
    circuit: Circuit, P: np.ndarray, constraints: ConstraintSet, step: float = 1e-6
) -> np.ndarray:
    """Central finite differences of the loss w.r.t. input probabilities."""
    grads = np.zeros_like(P)
    for j in range(P.shape[1]):
        up = P.copy()
        up[:, j] += step
        down = P.copy()
        down[:, j] -= step
        grads[:, j] = (
            scalar_loss(circuit, up, constraints) - scalar_loss(circuit, down, constraints)
        ) / (2 * step)
    return grads
