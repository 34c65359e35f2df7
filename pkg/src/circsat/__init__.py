"""Gradient-based CircuitSAT sampling: relax a gate-level netlist into a
differentiable probabilistic model, learn batches of satisfying inputs by
gradient descent, and emit verified, deduplicated solutions."""

from .circuit import Circuit, CircuitError, ConstraintSet, Gate, GateKind
from .cnf import CnfFormula, parse_dimacs, tseytin_encode, write_dimacs
from .parsers import (
    ParseError,
    parse_bench,
    parse_blif,
    parse_constraints,
    parse_file,
    parse_verilog,
    to_bench,
    to_blif,
    to_verilog,
)
from .probsim import ProbTape, backward, forward, gate_grad, gate_prob
from .sampler import (
    EmbeddingMatrix,
    IterationStats,
    SamplerConfig,
    SolutionSet,
    gd_step,
    harden,
    init_embeddings,
    loss_and_grad,
    run_sampling,
)

__all__ = [
    "Circuit", "CircuitError", "ConstraintSet", "Gate", "GateKind",
    "CnfFormula", "tseytin_encode", "write_dimacs", "parse_dimacs",
    "ParseError", "parse_verilog", "parse_blif", "parse_bench", "parse_file",
    "parse_constraints", "to_verilog", "to_blif", "to_bench",
    "ProbTape", "forward", "backward", "gate_prob", "gate_grad",
    "SamplerConfig", "EmbeddingMatrix", "IterationStats", "SolutionSet",
    "init_embeddings", "loss_and_grad", "gd_step", "harden", "run_sampling",
]

__version__ = "0.1.0"
