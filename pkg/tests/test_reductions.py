"""Formula transformations checked structurally and against the evaluator."""

import random

import pytest

from hypersynth.formula import (
    And,
    Knowledge,
    PropAtom,
    QuantKind,
    Quantifier,
    Release,
    SpecError,
    TraceAtom,
    TraceForall,
    extract_prefix,
    parse_formula,
    to_nnf,
    walk,
)
from hypersynth.machines import MooreSystem
from hypersynth.reductions import (
    ReductionTrace,
    build_consistency,
    build_dep,
    collapse,
    eliminate_knowledge,
    encode_qptl_no_universal,
    prop_to_trace,
    to_hyperltl,
)
from hypersynth.semantics import (
    LassoTrace,
    TraceSet,
    eval_formula,
    eval_knowledge,
    system_traces,
)


def parse(text, signals=("i", "g")):
    return parse_formula(text, set(signals))


def prefix_kinds(f):
    return [(e.kind, e.var) for e in extract_prefix(f)[0]]


# ---------------------------------------------------------------------------
# propositional quantifiers to trace quantifiers

def test_prop_to_trace_basic_shape():
    f = parse("exists q : prop . forall pi : trace . (F q) & G (q -> g[pi])")
    out = prop_to_trace(f, {"q"}, "i")
    kinds = prefix_kinds(out)
    assert kinds[0][0] == QuantKind.TRACE_EXISTS and kinds[0][1].startswith("q")
    assert kinds[1] == (QuantKind.TRACE_FORALL, "pi")
    assert not any(isinstance(g, PropAtom) for g in walk(out))
    # every former q atom now reads the designated input on the fresh trace
    tv = kinds[0][1]
    assert any(
        isinstance(g, TraceAtom) and g.prop == "i" and g.trace_var == tv
        for g in walk(out)
    )


def test_prop_to_trace_forall_becomes_trace_forall():
    f = parse("forall q : prop . forall pi : trace . G (q -> g[pi])")
    out = prop_to_trace(f, {"q"}, "i")
    assert prefix_kinds(out)[0][0] == QuantKind.TRACE_FORALL


def test_prop_to_trace_empty_j_is_identity():
    f = parse("exists q : prop . forall pi : trace . G (q -> g[pi])")
    assert prop_to_trace(f, set(), "i") == f


def test_prop_to_trace_errors():
    f = parse("forall pi : trace . G g[pi]")
    with pytest.raises(SpecError):
        prop_to_trace(f, {"q"}, "i")
    with pytest.raises(SpecError):
        prop_to_trace(f, set(), "")


def test_to_hyperltl_strips_all_prop_quantifiers():
    f = parse(
        "exists q : prop . forall r : prop . forall pi : trace . G ((q & r) -> g[pi])"
    )
    out = to_hyperltl(f, "i")
    assert all(e.kind.is_trace for e in extract_prefix(out)[0])
    g = parse("forall pi : trace . G g[pi]")
    assert to_hyperltl(g, "i") == g


def _random_system(rng):
    n = 2
    labels = tuple(frozenset({"g"}) if rng.random() < 0.5 else frozenset() for _ in range(n))
    delta = tuple(tuple(rng.randrange(n) for _ in range(2)) for _ in range(n))
    return MooreSystem(("i",), ("g",), labels, delta, 0)


SHAPED = [
    "exists q : prop . forall pi : trace . (F q) & G (q -> g[pi])",
    "exists q : prop . forall pi : trace . (F q) & ((!q) U (g[pi] | q))",
    "exists q : prop . forall pi : trace . G (q -> (q U g[pi]))",
    "forall q : prop . forall pi : trace . (F q) -> F (q & i[pi])",
]


def test_prop_to_trace_preserves_verdicts_on_closed_sets():
    # quantified propositions and traces reading the designated input range over
    # the same bounded sequences, so verdicts must agree on strategy-tree sets
    rng = random.Random(5)
    for _ in range(20):
        M = _random_system(rng)
        T = system_traces(M, 2, 2)
        text = SHAPED[rng.randrange(len(SHAPED))]
        f = parse(text)
        out = prop_to_trace(f, {"q"}, "i")
        assert eval_formula(f, T, prop_bound=2) == eval_formula(out, T, prop_bound=2), text


# ---------------------------------------------------------------------------
# collapse

def test_collapse_two_universals():
    f = parse("forall p1 : trace . forall p2 : trace . G (g[p1] <-> g[p2])")
    assert collapse(f) == parse("forall pi : trace . G (g[pi] <-> g[pi])")


def test_collapse_single_renames():
    f = parse("forall p1 : trace . G g[p1]")
    assert collapse(f) == parse("forall pi : trace . G g[pi]")


def test_collapse_preserves_prop_quantifiers():
    f = parse(
        "forall p1 : trace . forall p2 : trace . exists q : prop . F ((q & i[p1]) & g[p2])"
    )
    assert collapse(f) == parse(
        "forall pi : trace . exists q : prop . F ((q & i[pi]) & g[pi])"
    )


def test_collapse_output_shape():
    f = parse("forall p1 : trace . forall p2 : trace . forall q : prop . G (q -> g[p1])")
    out = collapse(f)
    kinds = [e.kind for e in extract_prefix(out)[0]]
    assert kinds.count(QuantKind.TRACE_FORALL) == 1
    assert QuantKind.TRACE_EXISTS not in kinds


def test_collapse_errors():
    with pytest.raises(SpecError):
        collapse(parse("exists pi : trace . G g[pi]"))
    with pytest.raises(SpecError):
        collapse(parse("forall pi : trace . exists pi2 : trace . G g[pi]"))


# ---------------------------------------------------------------------------
# dep and consistency conjuncts

def two_traces(vals1, vals2, signals=frozenset({"i", "g"})):
    mk = lambda xs: tuple(frozenset(v) for v in xs)
    t1 = LassoTrace(signals, (), mk(vals1))
    t2 = LassoTrace(signals, (), mk(vals2))
    return TraceSet(signals, frozenset({t1, t2}))


def test_dep_structure():
    f = build_dep({"i"}, {"o"})
    assert isinstance(f, TraceForall) and isinstance(f.child, TraceForall)
    body = f.child.child
    assert isinstance(body, Release)


def test_dep_empty_inputs_is_globally():
    f = build_dep(set(), {"o"})
    from hypersynth.formula import Globally

    assert isinstance(f.child.child, Globally)


def test_dep_empty_outputs_always_true():
    f = build_dep({"i"}, set())
    T = two_traces([["i"], []], [["g"], ["i", "g"]])
    assert eval_formula(f, T) is True


def test_dep_detects_dependence():
    f = build_dep(set(), {"g"})
    same = two_traces([["g"]], [["g", "i"]])
    differ = two_traces([["g"]], [[]])
    assert eval_formula(f, same) is True
    assert eval_formula(f, differ) is False


def test_consistency_shapes():
    from hypersynth.formula import TRUE, Globally

    assert build_consistency([], "pi", ("i",), ("g",)) == TRUE
    one = build_consistency(["e"], "pi", ("i",), ("g",))
    assert isinstance(one, Release)
    two = build_consistency(["e1", "e2"], "pi", ("i",), ("g",))
    assert isinstance(two, And)
    closed = build_consistency(["e"], "pi", (), ("g",))
    assert isinstance(closed, Globally)


# ---------------------------------------------------------------------------
# knowledge elimination

def test_knowledge_free_unchanged():
    f = to_nnf(parse("forall pi : trace . G g[pi]"))
    assert eliminate_knowledge(f) == f


def test_untagged_polarity_rejected():
    raw = TraceForall("pi", Knowledge(frozenset({"i"}), "pi", parse_formula("g[pi]", {"g", "i"}, trace_vars={"pi"})))
    with pytest.raises(SpecError):
        eliminate_knowledge(raw)


def test_positive_elimination_shape():
    f = to_nnf(parse("forall pi : trace . G (K {i} [pi] g[pi])"))
    out = eliminate_knowledge(f)
    assert not any(isinstance(g, Knowledge) for g in walk(out))
    kinds = [e.kind for e in extract_prefix(out)[0]]
    assert kinds == [
        QuantKind.TRACE_FORALL,
        QuantKind.PROP_EXISTS,
        QuantKind.PROP_FORALL,
        QuantKind.TRACE_FORALL,
    ]


def test_negative_elimination_uses_exists_trace():
    f = to_nnf(parse("forall pi : trace . F (!(K {i} [pi] g[pi]))"))
    out = eliminate_knowledge(f)
    assert not any(isinstance(g, Knowledge) for g in walk(out))
    kinds = [e.kind for e in extract_prefix(out)[0]]
    assert kinds[-1] == QuantKind.TRACE_EXISTS


def test_nested_knowledge_fully_eliminated():
    f = to_nnf(parse("forall pi : trace . K {i} [pi] (K {g} [pi] g[pi])"))
    out = eliminate_knowledge(f)
    assert not any(isinstance(g, Knowledge) for g in walk(out))
    # two eliminations, each adding one quantifier block
    assert len(list(extract_prefix(out)[0])) == 1 + 3 + 3


def _random_micro_set(rng):
    pick = lambda: frozenset(x for x in ("a", "b") if rng.random() < 0.5)
    mk = lambda k: tuple(pick() for _ in range(k))
    sig = frozenset({"a", "b"})
    t1 = LassoTrace(sig, mk(rng.randrange(2)), mk(rng.randrange(1, 3)))
    t2 = LassoTrace(sig, mk(rng.randrange(2)), mk(rng.randrange(1, 3)))
    return TraceSet(sig, frozenset({t1, t2}))


def _random_child(rng, depth=2):
    if depth == 0 or rng.random() < 0.4:
        return rng.choice(["a[pi]", "b[pi]"])
    op = rng.choice(["!", "X", "F", "G", "&", "|"])
    if op in ("!", "X", "F", "G"):
        return f"{op}({_random_child(rng, depth - 1)})"
    return f"({_random_child(rng, depth - 1)}) {op} ({_random_child(rng, depth - 1)})"


# contexts keep the knowledge operator at positions 0 or 1: the pointer
# sequence r can only designate positions below the witness bound, so the
# emulation is exact precisely where the bounded oracle can realize it
K_CONTEXTS = [
    "{k}",
    "X ({k})",
    "(a[pi]) & ({k})",
    "(b[pi]) | ({k})",
    "(a[pi]) & (X ({k}))",
]


@pytest.mark.parametrize("polarity", ["pos", "neg"])
def test_elimination_matches_direct_evaluation(polarity):
    rng = random.Random(17 if polarity == "pos" else 23)
    for _ in range(12):
        agents = rng.choice(["a", "b", "a, b"])
        child = _random_child(rng)
        k = f"K {{{agents}}} [pi] ({child})"
        if polarity == "neg":
            k = f"!({k})"
        text = "forall pi : trace . " + rng.choice(K_CONTEXTS).format(k=k)
        f = to_nnf(parse_formula(text, {"a", "b"}))
        out = eliminate_knowledge(f)
        T = _random_micro_set(rng)
        want = eval_knowledge(f, T, prop_bound=3)
        got = eval_formula(out, T, prop_bound=3)
        assert got == want, text


# ---------------------------------------------------------------------------
# existential traces to propositional quantifiers

def test_encode_single_exists():
    f = parse("exists pi : trace . F g[pi]")
    out = encode_qptl_no_universal(f, ("i",), ("g",))
    kinds = prefix_kinds(out)
    assert [k for k, _ in kinds] == [QuantKind.PROP_EXISTS, QuantKind.PROP_EXISTS]
    assert {v for _, v in kinds} == {"i_pi", "g_pi"}
    assert not any(isinstance(g, TraceAtom) for g in walk(out))
    assert sum(1 for g in walk(out) if isinstance(g, Release)) == 1


def test_encode_two_exists_pairwise_conjuncts():
    f = parse("exists p1 : trace . exists p2 : trace . G (g[p1] <-> g[p2])")
    out = encode_qptl_no_universal(f, ("i",), ("g",))
    kinds = prefix_kinds(out)
    assert len(kinds) == 4 and all(k == QuantKind.PROP_EXISTS for k, _ in kinds)
    assert sum(1 for g in walk(out) if isinstance(g, Release)) == 4


def test_encode_keeps_prop_quantifiers_in_place():
    f = parse("exists q : prop . exists pi : trace . G (q -> g[pi])")
    out = encode_qptl_no_universal(f, ("i",), ("g",))
    kinds = prefix_kinds(out)
    assert kinds[0] == (QuantKind.PROP_EXISTS, "q")
    assert len(kinds) == 3


def test_encode_rejects_universal_trace():
    f = parse("forall pi : trace . F g[pi]")
    with pytest.raises(SpecError):
        encode_qptl_no_universal(f, ("i",), ("g",))


def test_encode_no_inputs_uses_globally():
    from hypersynth.formula import Globally

    f = parse("exists pi : trace . F g[pi]", signals=("g",))
    out = encode_qptl_no_universal(f, (), ("g",))
    assert any(isinstance(g, Globally) for g in walk(out))


# ---------------------------------------------------------------------------
# reduction audit trail

def test_reduction_trace_renders_steps():
    tr = ReductionTrace()
    f = parse("forall pi : trace . G g[pi]")
    g = collapse(f)
    assert tr.record("collapse", f, g, "identify universal trace variables") is g
    text = tr.render()
    assert "collapse" in text and "in :" in text and "out:" in text
