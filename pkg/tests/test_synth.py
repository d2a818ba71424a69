"""End-to-end synthesis: prepare, encode, solve, search."""

import sys

import pytest

from hypersynth.formula import SpecError, parse
from hypersynth.fragments import SINGLE_UNIVERSAL, UNDEC_FORALL_EXISTS
from hypersynth.mc import mc_universal
from hypersynth.sat import parse_dimacs
from hypersynth.synth import (
    SolverFailure,
    default_solver_command,
    encode,
    prepare,
    search,
    solve,
    solve_at_bounds,
)


def spec(body, inputs="i", outputs="o"):
    return parse(f"inputs: {inputs}\noutputs: {outputs}\n{body}")


ALWAYS = "forall pi : trace . G (o[pi])"
CONTRADICTION = "forall pi : trace . (G (o[pi])) & (F (!(o[pi])))"
# a Moore machine fixes o before reading the current input, so this has no model
INSTANT_ECHO = "forall pi : trace . G (o[pi] <-> i[pi])"


def test_always_grant_sat_at_one_state():
    inst = prepare(spec(ALWAYS))
    res = solve_at_bounds(inst, 1, 1)
    assert res.status == "sat"
    assert res.system is not None and len(res.system.labels) == 1
    assert res.system.labels[0] == frozenset({"o"})
    ok, _ = mc_universal(res.system, inst.body, list(inst.universal_vars) + list(inst.exist_vars))
    assert ok


def test_contradiction_unsat_at_small_bounds():
    inst = prepare(spec(CONTRADICTION))
    for n in (1, 2, 3):
        assert solve_at_bounds(inst, n, 1).status == "unsat"


def test_instant_echo_unrealizable():
    inst = prepare(spec(INSTANT_ECHO))
    for n in (1, 2, 3):
        assert solve_at_bounds(inst, n, 1).status == "unsat"


def test_delayed_echo_realizable():
    inst = prepare(spec("forall pi : trace . G (i[pi] -> (X (o[pi])))"))
    res = solve_at_bounds(inst, 2, 1)
    assert res.status == "sat"
    ok, _ = mc_universal(res.system, inst.body, list(inst.universal_vars))
    assert ok


def test_existential_witness_with_consistency():
    text = "exists e : trace . forall pi : trace . G (o[pi] <-> o[e])"
    inst = prepare(spec(text))
    assert inst.exist_vars == ("e",)
    assert "consistency" in {s.name for s in inst.trace.steps}
    res = solve_at_bounds(inst, 1, 1)
    assert res.status == "sat"
    assert res.generator is not None


def test_prop_quantifier_routed_through_designated_input():
    text = "exists q : prop . forall pi : trace . G (q -> o[pi])"
    inst = prepare(spec(text))
    steps = {s.name for s in inst.trace.steps}
    assert "to_hyperltl" in steps
    assert inst.designated_input == "i"
    assert inst.exist_vars and inst.universal_vars == ("pi",)
    assert solve_at_bounds(inst, 1, 1).status == "sat"


def test_prepare_rejects_unknown_designated_input():
    text = "exists q : prop . forall pi : trace . G (q -> o[pi])"
    with pytest.raises(SpecError):
        prepare(spec(text), designated_input="zz")


def test_prepare_rejects_quantifier_free_body():
    with pytest.raises(SpecError, match="no trace quantifiers"):
        prepare(spec("true"))


def test_prepare_rejects_forall_exists_without_force():
    text = "forall pi : trace . exists e : trace . G (o[e] <-> i[pi])"
    with pytest.raises(SpecError, match="force"):
        prepare(spec(text))


def test_force_proceeds_bound_relative():
    text = "forall pi : trace . exists e : trace . G (o[e] -> o[pi])"
    inst = prepare(spec(text), force=True)
    assert inst.verdict.kind == UNDEC_FORALL_EXISTS
    assert "uniformize" in {s.name for s in inst.trace.steps}
    # the witness is fixed up front, so a found model is still a real model
    res = solve_at_bounds(inst, 1, 1)
    assert res.status == "sat"


def test_probe_universal_added_for_pure_existential():
    inst = prepare(spec("exists e : trace . G (o[e])"))
    assert inst.exist_vars == ("e",)
    assert inst.universal_vars == ("pi__0",)
    assert "probe" in {s.name for s in inst.trace.steps}
    assert solve_at_bounds(inst, 1, 1).status == "sat"


def test_classification_recorded():
    inst = prepare(spec(ALWAYS))
    assert inst.verdict.kind == SINGLE_UNIVERSAL


def test_lambda_override_caps_encoding():
    inst = prepare(spec(ALWAYS))
    low = encode(inst, 2, 1, 1)
    assert low.lambda_max == 1
    full = encode(inst, 2, 1)
    assert full.lambda_max >= low.lambda_max
    assert solve_at_bounds(inst, 1, 1, lambda_max=1).status == "sat"


def test_dimacs_emission_parses_back():
    problem = encode(prepare(spec(ALWAYS)), 2, 1)
    nvars, clauses = parse_dimacs(problem.to_dimacs())
    assert nvars == problem.nvars
    assert len(clauses) == len(problem.clauses)


def test_smtlib_emission_shape():
    problem = encode(prepare(spec(ALWAYS)), 1, 1)
    text = problem.to_smtlib()
    assert text.startswith("(set-logic QF_UF)")
    assert text.count("declare-const") == problem.nvars
    assert text.rstrip().endswith("(get-model)")


def test_solver_failure_on_bad_command():
    problem = encode(prepare(spec(ALWAYS)), 1, 1)
    with pytest.raises(SolverFailure):
        solve(problem, solver_cmd=["/nonexistent/solver-xyz"])


def test_solver_env_override(monkeypatch):
    monkeypatch.setenv("HYPERSYNTH_SOLVER", "'/some solver' --flag")
    assert default_solver_command() == ["/some solver", "--flag"]
    monkeypatch.delenv("HYPERSYNTH_SOLVER")
    cmd = default_solver_command()
    assert cmd[0] == sys.executable and cmd[-1].endswith("satcli")


def test_search_returns_first_sat_point():
    inst = prepare(spec("forall pi : trace . G (i[pi] -> (X (o[pi])))"))
    res, attempts = search(inst, 3, 3)
    assert res is not None and res.status == "sat"
    # no existential copies, so the witness bound stays pinned at one
    assert all(a.m == 1 for a in attempts)
    assert attempts[-1] is res


def test_search_exhaustion_reports_attempts():
    inst = prepare(spec(CONTRADICTION))
    res, attempts = search(inst, 2, 2)
    assert res is None
    assert [(a.n, a.m) for a in attempts] == [(1, 1), (2, 1)]
    assert all(a.status == "unsat" for a in attempts)


def test_search_rejects_bad_bounds():
    inst = prepare(spec(ALWAYS))
    with pytest.raises(SpecError):
        search(inst, 0, 1)


def test_sat_monotonic_in_system_size():
    inst = prepare(spec("forall pi : trace . G (i[pi] -> (X (o[pi])))"))
    assert solve_at_bounds(inst, 2, 1).status == "sat"
    assert solve_at_bounds(inst, 3, 1).status == "sat"
