"""Batched differentiable circuit evaluation.

Each gate's output probability and its derivatives follow the standard
probability model of logic gates (the same algebra used in stochastic
computing and switching-activity estimation).  Multi-input XOR/XNOR are the
left fold of the binary formula, which in closed form is a parity polynomial
in q_i = 1 - 2*p_i.

The forward pass records every net's probability row in a tape
(structure-of-arrays over the batch); the backward pass accumulates seed
gradients on pinned nets down to the primary inputs by reverse traversal.
Values are exact at binary input points, where the relaxation coincides with
the discrete circuit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, CircuitError, GateKind


def _prob(kind: GateKind, rows: list[np.ndarray]) -> np.ndarray:
    if kind is GateKind.NOT:
        return 1.0 - rows[0]
    if kind is GateKind.BUF:
        return rows[0]
    if kind is GateKind.AND:
        out = rows[0].copy()
        for r in rows[1:]:
            out *= r
        return out
    if kind is GateKind.NAND:
        out = rows[0].copy()
        for r in rows[1:]:
            out *= r
        return 1.0 - out
    if kind is GateKind.OR:
        out = 1.0 - rows[0]
        for r in rows[1:]:
            out *= 1.0 - r
        return 1.0 - out
    if kind is GateKind.NOR:
        out = 1.0 - rows[0]
        for r in rows[1:]:
            out *= 1.0 - r
        return out
    if kind is GateKind.XOR:
        # Fold of p1 (1-p2) + (1-p1) p2, i.e. (1 - prod(1-2p_i)) / 2.
        out = rows[0]
        for r in rows[1:]:
            out = out * (1.0 - r) + (1.0 - out) * r
        return out
    if kind is GateKind.XNOR:
        out = rows[0]
        for r in rows[1:]:
            out = out * r + (1.0 - out) * (1.0 - r)
        return out
    raise CircuitError(f"no probability model for gate kind {kind}")


def _const_row(kind: GateKind, b: int) -> np.ndarray:
    return np.full(b, 0.0 if kind is GateKind.CONST0 else 1.0)


def gate_prob(kind: GateKind, input_probs) -> float:
    """Output probability of one gate at scalar input probabilities."""
    probs = [float(p) for p in input_probs]
    if not kind.arity_ok(len(probs)):
        raise CircuitError(f"{kind.value} gate cannot take {len(probs)} inputs")
    for p in probs:
        if not 0.0 <= p <= 1.0:
            raise CircuitError(f"input probability {p} outside [0, 1]")
    if kind.is_const:
        return 0.0 if kind is GateKind.CONST0 else 1.0
    rows = [np.asarray(p, dtype=float) for p in probs]
    return float(np.clip(_prob(kind, rows), 0.0, 1.0))


def _grad_rows(kind: GateKind, rows: list[np.ndarray], i: int) -> np.ndarray:
    """d(output prob)/d(input prob i) as a batch row."""
    f = len(rows)
    if kind is GateKind.NOT:
        return np.full_like(rows[0], -1.0)
    if kind is GateKind.BUF:
        return np.ones_like(rows[0])
    others = [rows[j] for j in range(f) if j != i]
    if kind is GateKind.AND or kind is GateKind.NAND:
        out = np.ones_like(rows[0])
        for r in others:
            out *= r
        return out if kind is GateKind.AND else -out
    if kind is GateKind.OR or kind is GateKind.NOR:
        out = np.ones_like(rows[0])
        for r in others:
            out *= 1.0 - r
        return out if kind is GateKind.OR else -out
    if kind is GateKind.XOR or kind is GateKind.XNOR:
        out = np.ones_like(rows[0])
        for r in others:
            out *= 1.0 - 2.0 * r
        if kind is GateKind.XNOR and f % 2 == 0:
            out = -out
        return out
    raise CircuitError(f"no derivative model for gate kind {kind}")


def gate_grad(kind: GateKind, input_probs, input_index: int) -> float:
    """d(output prob)/d(input prob) for one input of one gate."""
    probs = [float(p) for p in input_probs]
    if not kind.arity_ok(len(probs)):
        raise CircuitError(f"{kind.value} gate cannot take {len(probs)} inputs")
    if not 0 <= input_index < len(probs):
        raise CircuitError(f"input index {input_index} out of range for {len(probs)} inputs")
    rows = [np.asarray(p, dtype=float) for p in probs]
    return float(_grad_rows(kind, rows, input_index))


@dataclass
class ProbTape:
    """Per-net probability rows for one forward pass.

    `values[net_id]` is the (b,) probability row of that net; rows exist for
    every net in the circuit.
    """

    circuit: Circuit
    values: np.ndarray  # (num_nets, b)

    @property
    def batch_size(self) -> int:
        return self.values.shape[1]

    def net(self, net_id: int) -> np.ndarray:
        return self.values[net_id]

    def by_name(self, name: str) -> np.ndarray:
        return self.values[self.circuit.name_to_id[name]]

    def outputs(self) -> np.ndarray:
        """Y: (b, m) probability matrix over the primary outputs."""
        return self.values[self.circuit.primary_outputs].T


def forward(circuit: Circuit, input_probs: np.ndarray) -> ProbTape:
    """Relaxed evaluation of every net for a (b, n) input probability matrix."""
    input_probs = np.asarray(input_probs, dtype=np.float64)
    if input_probs.ndim != 2 or input_probs.shape[1] != circuit.num_inputs:
        raise CircuitError(
            f"expected input probabilities of shape (b, {circuit.num_inputs}), "
            f"got {input_probs.shape}"
        )
    b = input_probs.shape[0]
    values = np.zeros((circuit.num_nets, b))
    for col, net in enumerate(circuit.primary_inputs):
        values[net] = input_probs[:, col]
    for gi in circuit.topo_order():
        g = circuit.gates[gi]
        if g.kind.is_const:
            values[g.output] = _const_row(g.kind, b)
        else:
            row = _prob(g.kind, [values[n] for n in g.inputs])
            np.clip(row, 0.0, 1.0, out=row)
            values[g.output] = row
    return ProbTape(circuit, values)


def backward(circuit: Circuit, tape: ProbTape, seeds: dict[int, np.ndarray]) -> np.ndarray:
    """Accumulate seed gradients on pinned nets down to input probabilities.

    `seeds` maps net id -> (b,) dL/d(p_net).  Returns dL/dP of shape (b, n);
    inputs outside the fan-in of every seeded net get exactly 0.
    """
    b = tape.batch_size
    adj = np.zeros_like(tape.values)
    touched = np.zeros(circuit.num_nets, dtype=bool)
    for net, seed in seeds.items():
        if not 0 <= net < circuit.num_nets:
            raise CircuitError(f"pinned net id {net} not in circuit")
        adj[net] += np.asarray(seed, dtype=np.float64)
        touched[net] = True
    for gi in reversed(circuit.topo_order()):
        g = circuit.gates[gi]
        if not touched[g.output] or g.kind.is_const:
            continue
        rows = [tape.values[n] for n in g.inputs]
        out_adj = adj[g.output]
        for i, net in enumerate(g.inputs):
            adj[net] += out_adj * _grad_rows(g.kind, rows, i)
            touched[net] = True
    grads = np.zeros((b, circuit.num_inputs))
    for col, net in enumerate(circuit.primary_inputs):
        if touched[net]:
            grads[:, col] = adj[net]
    return grads
