"""Circuit data model, validation, topological ordering and the discrete oracle.

Nets are referenced by dense integer ids; names are kept alongside for
diagnostics and file I/O.  A Circuit is immutable after construction and safe
to share across threads.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class CircuitError(ValueError):
    """Raised for malformed circuits, constraints or assignments."""


class GateKind(Enum):
    NOT = "NOT"
    BUF = "BUF"
    AND = "AND"
    OR = "OR"
    NAND = "NAND"
    NOR = "NOR"
    XOR = "XOR"
    XNOR = "XNOR"
    # 0-fan-in pseudo-gates for constant drivers (BLIF constant covers).
    CONST0 = "CONST0"
    CONST1 = "CONST1"

    @property
    def is_const(self) -> bool:
        return self in (GateKind.CONST0, GateKind.CONST1)

    def arity_ok(self, n: int) -> bool:
        if self.is_const:
            return n == 0
        if self in (GateKind.NOT, GateKind.BUF):
            return n == 1
        return n >= 2


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    inputs: tuple[int, ...]
    output: int


@dataclass(frozen=True)
class ConstraintSet:
    """Pinned target bits on nets (outputs or intermediates)."""

    pins: dict[int, int]

    @staticmethod
    def from_names(circuit: "Circuit", pins: dict[str, int]) -> "ConstraintSet":
        by_id: dict[int, int] = {}
        for name, bit in pins.items():
            if name not in circuit.name_to_id:
                raise CircuitError(f"pinned net '{name}' does not exist in the circuit")
            if bit not in (0, 1):
                raise CircuitError(f"pin value for '{name}' must be 0 or 1, got {bit!r}")
            by_id[circuit.name_to_id[name]] = bit
        return ConstraintSet(by_id)


class Circuit:
    """Immutable combinational DAG of gates over named nets."""

    def __init__(
        self,
        names: list[str],
        primary_inputs: list[int],
        primary_outputs: list[int],
        gates: list[Gate],
    ):
        self.names = list(names)
        self.name_to_id = {n: i for i, n in enumerate(self.names)}
        if len(self.name_to_id) != len(self.names):
            raise CircuitError("net names must be unique")
        self.primary_inputs = list(primary_inputs)
        self.primary_outputs = list(primary_outputs)
        self.gates = list(gates)
        self.driver: dict[int, int] = {}
        for gi, g in enumerate(self.gates):
            self.driver.setdefault(g.output, gi)
        self._topo: list[int] | None = None

    # -- basic queries ----------------------------------------------------

    @property
    def num_nets(self) -> int:
        return len(self.names)

    @property
    def num_inputs(self) -> int:
        return len(self.primary_inputs)

    @property
    def num_outputs(self) -> int:
        return len(self.primary_outputs)

    def name(self, net: int) -> str:
        return self.names[net]

    # -- validation -------------------------------------------------------

    def validate(self) -> list[str]:
        """Return one diagnostic string per invariant violation (empty = valid)."""
        diags: list[str] = []
        input_set = set(self.primary_inputs)
        driven: dict[int, list[int]] = {}
        for gi, g in enumerate(self.gates):
            driven.setdefault(g.output, []).append(gi)
        for net, gis in driven.items():
            if len(gis) > 1:
                diags.append(
                    f"multiple drivers: net '{self.names[net]}' driven by gates {gis}"
                )
            if net in input_set:
                diags.append(
                    f"multiple drivers: primary input '{self.names[net]}' is also driven by gate {gis[0]}"
                )
        for gi, g in enumerate(self.gates):
            if not g.kind.arity_ok(len(g.inputs)):
                diags.append(
                    f"bad fan-in: gate {gi} ({g.kind.value}) on net "
                    f"'{self.names[g.output]}' has {len(g.inputs)} inputs"
                )
            for net in g.inputs:
                if net not in input_set and net not in driven:
                    diags.append(
                        f"dangling net: '{self.names[net]}' used by gate {gi} "
                        "is neither a primary input nor driven by any gate"
                    )
        for net in self.primary_outputs:
            if net not in input_set and net not in driven:
                diags.append(f"dangling net: primary output '{self.names[net]}' has no driver")
        cycle = self._find_cycle()
        if cycle is not None:
            diags.append("cycle: " + " -> ".join(self.names[n] for n in cycle))
        return diags

    def _find_cycle(self) -> list[int] | None:
        # Iterative DFS over the net graph (edge: gate input -> gate output).
        color: dict[int, int] = {}  # 0 unseen, 1 on stack, 2 done
        parent: dict[int, int] = {}
        for start in (g.output for g in self.gates):
            if color.get(start, 0):
                continue
            stack = [(start, 0)]
            while stack:
                net, phase = stack.pop()
                if phase == 0:
                    color[net] = 1
                    stack.append((net, 1))
                    gi = self.driver.get(net)
                    if gi is None:
                        continue
                    for src in self.gates[gi].inputs:
                        c = color.get(src, 0)
                        if c == 1:
                            # Walk parents back from net to src.
                            path = [src, net]
                            cur = net
                            while cur != src:
                                cur = parent[cur]
                                path.append(cur)
                            return path
                        if c == 0:
                            parent[src] = net
                            stack.append((src, 0))
                else:
                    color[net] = 2
        return None

    # -- topological order ------------------------------------------------

    def topo_order(self) -> list[int]:
        """Gate indices in dependency order, ties broken by ascending index."""
        if self._topo is not None:
            return self._topo
        input_set = set(self.primary_inputs)
        indeg: list[int] = []
        fanout: dict[int, list[int]] = {}  # gate index -> dependent gate indices
        for gi, g in enumerate(self.gates):
            deg = 0
            for net in g.inputs:
                di = self.driver.get(net)
                if di is not None and net not in input_set:
                    deg += 1
                    fanout.setdefault(di, []).append(gi)
            indeg.append(deg)
        ready = [gi for gi, d in enumerate(indeg) if d == 0]
        heapq.heapify(ready)
        order: list[int] = []
        while ready:
            gi = heapq.heappop(ready)
            order.append(gi)
            for dep in fanout.get(gi, ()):
                indeg[dep] -= 1
                if indeg[dep] == 0:
                    heapq.heappush(ready, dep)
        if len(order) != len(self.gates):
            cyc = self._find_cycle()
            names = " -> ".join(self.names[n] for n in cyc) if cyc else "?"
            raise CircuitError(f"circuit contains a cycle: {names}")
        self._topo = order
        return order

    def depth(self) -> int:
        """Topological depth: longest input-to-output gate chain."""
        level = {net: 0 for net in self.primary_inputs}
        d = 0
        for gi in self.topo_order():
            g = self.gates[gi]
            lv = 1 + max((level.get(net, 0) for net in g.inputs), default=0)
            level[g.output] = lv
            d = max(d, lv)
        return d

    # -- discrete oracle --------------------------------------------------

    def eval_discrete(self, assignment: dict[str, int]) -> dict[str, int]:
        """Exact Boolean simulation; `assignment` maps input name -> bit."""
        values: dict[int, int] = {}
        for net in self.primary_inputs:
            name = self.names[net]
            if name not in assignment:
                raise CircuitError(f"missing input bit for net '{name}'")
            bit = int(assignment[name])
            if bit not in (0, 1):
                raise CircuitError(f"input '{name}' must be 0 or 1, got {assignment[name]!r}")
            values[net] = bit
        for gi in self.topo_order():
            g = self.gates[gi]
            values[g.output] = _eval_gate(g.kind, [values[n] for n in g.inputs])
        return {self.names[net]: bit for net, bit in values.items()}

    def eval_batch(self, inputs: np.ndarray, nets: list[int] | None = None) -> np.ndarray:
        """Vectorized discrete simulation of a (b, n) 0/1 matrix.

        Returns a (b, len(nets)) uint8 array; `nets` defaults to the primary
        outputs.  Column order of `inputs` follows `primary_inputs`.
        """
        inputs = np.asarray(inputs)
        if inputs.ndim != 2 or inputs.shape[1] != self.num_inputs:
            raise CircuitError(
                f"expected input matrix of shape (b, {self.num_inputs}), got {inputs.shape}"
            )
        vals: dict[int, np.ndarray] = {}
        b = inputs.shape[0]
        for col, net in enumerate(self.primary_inputs):
            vals[net] = inputs[:, col].astype(bool)
        for gi in self.topo_order():
            g = self.gates[gi]
            vals[g.output] = _eval_gate_batch(g.kind, [vals[n] for n in g.inputs], b)
        if nets is None:
            nets = self.primary_outputs
        out = np.empty((b, len(nets)), dtype=np.uint8)
        for j, net in enumerate(nets):
            out[:, j] = vals[net]
        return out

    # -- support cone -----------------------------------------------------

    def support_cone(self, constraints: ConstraintSet) -> set[int]:
        """Primary inputs in the transitive fan-in of any pinned net."""
        input_set = set(self.primary_inputs)
        seen: set[int] = set()
        stack = list(constraints.pins)
        cone: set[int] = set()
        while stack:
            net = stack.pop()
            if net in seen:
                continue
            seen.add(net)
            if net in input_set:
                cone.add(net)
            gi = self.driver.get(net)
            if gi is not None:
                stack.extend(self.gates[gi].inputs)
        return cone


def _eval_gate(kind: GateKind, bits: list[int]) -> int:
    if kind is GateKind.NOT:
        return 1 - bits[0]
    if kind is GateKind.BUF:
        return bits[0]
    if kind is GateKind.AND:
        return int(all(bits))
    if kind is GateKind.OR:
        return int(any(bits))
    if kind is GateKind.NAND:
        return 1 - int(all(bits))
    if kind is GateKind.NOR:
        return 1 - int(any(bits))
    if kind is GateKind.XOR:
        acc = bits[0]
        for b in bits[1:]:
            acc ^= b
        return acc
    if kind is GateKind.XNOR:
        # Left fold of binary XNOR (matches the relaxed model's fold).
        acc = bits[0]
        for b in bits[1:]:
            acc = 1 - (acc ^ b)
        return acc
    if kind is GateKind.CONST0:
        return 0
    if kind is GateKind.CONST1:
        return 1
    raise CircuitError(f"unknown gate kind {kind}")


def _eval_gate_batch(kind: GateKind, rows: list[np.ndarray], b: int) -> np.ndarray:
    if kind is GateKind.NOT:
        return ~rows[0]
    if kind is GateKind.BUF:
        return rows[0]
    if kind is GateKind.AND:
        return np.logical_and.reduce(rows)
    if kind is GateKind.OR:
        return np.logical_or.reduce(rows)
    if kind is GateKind.NAND:
        return ~np.logical_and.reduce(rows)
    if kind is GateKind.NOR:
        return ~np.logical_or.reduce(rows)
    if kind is GateKind.XOR:
        return np.logical_xor.reduce(rows)
    if kind is GateKind.XNOR:
        acc = rows[0]
        for r in rows[1:]:
            acc = ~(acc ^ r)
        return acc
    if kind is GateKind.CONST0:
        return np.zeros(b, dtype=bool)
    if kind is GateKind.CONST1:
        return np.ones(b, dtype=bool)
    raise CircuitError(f"unknown gate kind {kind}")
