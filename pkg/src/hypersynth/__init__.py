"""Toolkit for trace- and proposition-quantified temporal specifications.

Parsing and normal forms live in formula; semantics holds the reference
evaluator over lasso traces; fragments classifies quantifier prefixes and
architectures; reductions implements the quantifier eliminations; automata,
mc, sat, and synth form the bounded synthesis engine; bench and cli drive it.
"""

from .formula import (
    Formula,
    QuantKind,
    SpecDocument,
    SpecError,
    parse,
    parse_formula,
    print_document,
    print_formula,
    to_nnf,
)
from .semantics import LassoTrace, TraceSet, eval_formula, system_traces
from .fragments import (
    Architecture,
    FragmentVerdict,
    check_linear_on_system,
    classify,
    classify_formula,
    has_info_fork,
    parse_architecture,
)
from .reductions import (
    build_consistency,
    build_dep,
    collapse,
    eliminate_knowledge,
    encode_qptl_no_universal,
    prop_to_trace,
    to_hyperltl,
)
from .automata import NBA, accepts_lasso, ltl_to_nba
from .machines import ExistGenerator, MooreSystem, machine_from_json
from .mc import mc_exists_forall, mc_universal
from .synth import (
    ConstraintProblem,
    EncoderSoundnessError,
    SolverFailure,
    SynthesisInstance,
    SynthesisResult,
    encode,
    prepare,
    search,
    solve,
    solve_at_bounds,
)
from .bench import BenchmarkInstance, gen_arbiter, run_suite

__all__ = [
    "Architecture",
    "BenchmarkInstance",
    "ConstraintProblem",
    "EncoderSoundnessError",
    "ExistGenerator",
    "Formula",
    "FragmentVerdict",
    "LassoTrace",
    "MooreSystem",
    "NBA",
    "QuantKind",
    "SolverFailure",
    "SpecDocument",
    "SpecError",
    "SynthesisInstance",
    "SynthesisResult",
    "TraceSet",
    "accepts_lasso",
    "build_consistency",
    "build_dep",
    "check_linear_on_system",
    "classify",
    "classify_formula",
    "collapse",
    "eliminate_knowledge",
    "encode",
    "encode_qptl_no_universal",
    "eval_formula",
    "gen_arbiter",
    "has_info_fork",
    "ltl_to_nba",
    "machine_from_json",
    "mc_exists_forall",
    "mc_universal",
    "parse",
    "parse_architecture",
    "parse_formula",
    "prepare",
    "print_document",
    "print_formula",
    "prop_to_trace",
    "run_suite",
    "search",
    "solve",
    "solve_at_bounds",
    "system_traces",
    "to_hyperltl",
    "to_nnf",
]
