"""Buchi automata for quantifier-free bodies, built by tableau expansion."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from .formula import (
    And,
    BoolConst,
    Eventually,
    Formula,
    Globally,
    Next,
    Not,
    Or,
    PropAtom,
    Quantifier,
    Release,
    SpecError,
    TraceAtom,
    Until,
    WeakUntil,
    print_formula,
    to_nnf,
    walk,
)

# a guard is a conjunction of literals (signal, required value); frozenset() is "true"
Lit = tuple[str, bool]
Guard = frozenset


def guard_satisfied(guard: Guard, valuation: frozenset) -> bool:
    return all((sig in valuation) == val for sig, val in guard)


def merge_guards(g1: Guard, g2: Guard) -> Optional[Guard]:
    merged = g1 | g2
    seen: dict[str, bool] = {}
    for sig, val in merged:
        if seen.get(sig, val) != val:
            return None
        seen[sig] = val
    return merged


def guard_text(guard: Guard) -> str:
    if not guard:
        return "t"
    parts = [(sig if val else "!" + sig) for sig, val in sorted(guard)]
    return " & ".join(parts)


@dataclass(frozen=True)
class NBA:
    """Nondeterministic Buchi automaton with literal-conjunction edge guards."""

    signals: tuple[str, ...]
    n_states: int
    initial: frozenset
    accepting: frozenset
    transitions: tuple

    def __post_init__(self):
        assert self.initial, "an automaton needs at least one initial state"
        for s in self.initial | self.accepting:
            assert 0 <= s < self.n_states
        for src, _, dst in self.transitions:
            assert 0 <= src < self.n_states and 0 <= dst < self.n_states

    def edges_from(self, state: int) -> list:
        return [(g, d) for s, g, d in self.transitions if s == state]

    def to_hoa(self) -> str:
        lines = ["HOA: v1"]
        lines.append(f"States: {self.n_states}")
        for s in sorted(self.initial):
            lines.append(f"Start: {s}")
        ap = " ".join(f'"{a}"' for a in self.signals)
        lines.append(f"AP: {len(self.signals)} {ap}")
        lines.append("acc-name: Buchi")
        lines.append("Acceptance: 1 Inf(0)")
        lines.append("--BODY--")
        index = {a: i for i, a in enumerate(self.signals)}
        by_src: dict[int, list] = {s: [] for s in range(self.n_states)}
        for src, g, dst in self.transitions:
            by_src[src].append((g, dst))
        for s in range(self.n_states):
            mark = " {0}" if s in self.accepting else ""
            lines.append(f"State: {s}{mark}")
            for g, dst in sorted(by_src[s], key=lambda e: (sorted(e[0]), e[1])):
                if not g:
                    lines.append(f"[t] {dst}")
                else:
                    lbl = "&".join(
                        (str(index[sig]) if val else "!" + str(index[sig]))
                        for sig, val in sorted(g, key=lambda l: index[l[0]])
                    )
                    lines.append(f"[{lbl}] {dst}")
        lines.append("--END--")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# flattening trace-indexed atoms to composite signals


def flatten_atom(prop: str, trace_var: str) -> str:
    return f"{prop}@{trace_var}"


def flatten(f: Formula) -> Formula:
    """Turn every trace-indexed atom into a plain proposition named prop@var."""
    if isinstance(f, TraceAtom):
        return PropAtom(flatten_atom(f.prop, f.trace_var))
    kids = f.children()
    if not kids:
        return f
    if isinstance(f, Quantifier):
        raise SpecError("cannot flatten under a quantifier")
    if len(kids) == 1:
        return type(f)(flatten(kids[0]))
    return type(f)(flatten(kids[0]), flatten(kids[1]))


# ---------------------------------------------------------------------------
# tableau expansion


def _expand(f: Formula, memo: dict) -> list:
    """DNF-like expansion: list of (guard, next-obligations, delayed-liveness)."""
    hit = memo.get(id(f))
    if hit is not None:
        return hit
    if isinstance(f, BoolConst):
        out = [(frozenset(), frozenset(), frozenset())] if f.value else []
    elif isinstance(f, PropAtom):
        out = [(frozenset([(f.var, True)]), frozenset(), frozenset())]
    elif isinstance(f, Not):
        if not isinstance(f.child, PropAtom):
            raise SpecError("negation above a non-atom; the body must be in negation normal form")
        out = [(frozenset([(f.child.var, False)]), frozenset(), frozenset())]
    elif isinstance(f, Next):
        out = [(frozenset(), frozenset([f.child]), frozenset())]
    elif isinstance(f, And):
        out = _combine(_expand(f.left, memo), _expand(f.right, memo))
    elif isinstance(f, Or):
        out = _expand(f.left, memo) + _expand(f.right, memo)
    elif isinstance(f, Until):
        delay = [(frozenset(), frozenset([f]), frozenset([f]))]
        out = _expand(f.right, memo) + _combine(_expand(f.left, memo), delay)
    elif isinstance(f, Eventually):
        delay = [(frozenset(), frozenset([f]), frozenset([f]))]
        out = _expand(f.child, memo) + delay
    elif isinstance(f, WeakUntil):
        delay = [(frozenset(), frozenset([f]), frozenset())]
        out = _expand(f.right, memo) + _combine(_expand(f.left, memo), delay)
    elif isinstance(f, Release):
        hold = [(frozenset(), frozenset([f]), frozenset())]
        out = _combine(_expand(f.right, memo), _expand(f.left, memo) + hold)
    elif isinstance(f, Globally):
        hold = [(frozenset(), frozenset([f]), frozenset())]
        out = _combine(_expand(f.child, memo), hold)
    else:
        raise SpecError(f"operator not allowed in an automaton body: {type(f).__name__}")
    memo[id(f)] = out
    return out


def _combine(left: list, right: list) -> list:
    out = []
    for g1, n1, d1 in left:
        for g2, n2, d2 in right:
            g = merge_guards(g1, g2)
            if g is not None:
                out.append((g, n1 | n2, d1 | d2))
    return out


def _state_transitions(state: frozenset, memo: dict) -> list:
    acc = [(frozenset(), frozenset(), frozenset())]
    for member in sorted(state, key=print_formula):
        acc = _combine(acc, _expand(member, memo))
        if not acc:
            break
    # drop the true constant from obligations and dedupe branches
    seen = set()
    out = []
    for g, nxt, dly in acc:
        nxt = frozenset(x for x in nxt if not (isinstance(x, BoolConst) and x.value))
        key = (g, nxt, dly)
        if key not in seen:
            seen.add(key)
            out.append((g, nxt, dly))
    return out


def ltl_to_nba(f: Formula, signals: Optional[Iterable] = None) -> NBA:
    """Build a Buchi automaton for a quantifier-free formula over plain propositions."""
    f = flatten(f)
    f = to_nnf(f)
    atoms = sorted({g.var for g in walk(f) if isinstance(g, PropAtom)})
    if signals is None:
        sigs = tuple(atoms)
    else:
        sigs = tuple(signals)
        missing = set(atoms) - set(sigs)
        if missing:
            raise SpecError(f"atoms outside the declared signal set: {sorted(missing)}")

    liveness = sorted(
        {g for g in walk(f) if isinstance(g, (Until, Eventually))}, key=print_formula
    )
    k = len(liveness)
    acc_index = {u: i for i, u in enumerate(liveness)}

    start = frozenset() if isinstance(f, BoolConst) and f.value else frozenset([f])
    if isinstance(f, BoolConst) and not f.value:
        return NBA(sigs, 1, frozenset([0]), frozenset(), tuple())

    memo: dict = {}
    gnba_trans: dict[frozenset, list] = {}
    todo = [start]
    seen_states = {start}
    while todo:
        s = todo.pop()
        branches = _state_transitions(s, memo)
        gnba_trans[s] = branches
        for _, nxt, _ in branches:
            if nxt not in seen_states:
                seen_states.add(nxt)
                todo.append(nxt)

    # degeneralize with a round counter; index k marks a completed round
    state_id: dict = {}
    transitions = []

    def sid(s: frozenset, idx: int) -> int:
        key = (s, idx)
        if key not in state_id:
            state_id[key] = len(state_id)
        return state_id[key]

    init = sid(start, 0)
    work = [(start, 0)]
    expanded = set()
    while work:
        s, idx = work.pop()
        if (s, idx) in expanded:
            continue
        expanded.add((s, idx))
        base = 0 if idx == k else idx
        for g, nxt, dly in gnba_trans[s]:
            j = base
            while j < k and liveness[j] not in dly:
                j += 1
            tgt = k if j == k else j
            dst = sid(nxt, tgt)
            transitions.append((sid(s, idx), g, dst))
            if (nxt, tgt) not in expanded:
                work.append((nxt, tgt))

    n = len(state_id)
    accepting = frozenset(i for (s, idx), i in state_id.items() if idx == k)
    nba = NBA(sigs, n, frozenset([init]), accepting, tuple(transitions))
    return simplify_nba(nba)


# ---------------------------------------------------------------------------
# simplification passes


def tarjan_sccs(n: int, succ: dict) -> list:
    """Iterative Tarjan; returns SCCs as lists of nodes, reverse topological order."""
    index = {}
    low = {}
    on_stack = set()
    stack = []
    sccs = []
    counter = [0]
    for root in range(n):
        if root in index:
            continue
        call = [(root, iter(succ.get(root, ())))]
        index[root] = low[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        on_stack.add(root)
        while call:
            node, it = call[-1]
            advanced = False
            for nxt in it:
                if nxt not in index:
                    index[nxt] = low[nxt] = counter[0]
                    counter[0] += 1
                    stack.append(nxt)
                    on_stack.add(nxt)
                    call.append((nxt, iter(succ.get(nxt, ()))))
                    advanced = True
                    break
                if nxt in on_stack:
                    low[node] = min(low[node], index[nxt])
            if advanced:
                continue
            call.pop()
            if call:
                parent = call[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == node:
                        break
                sccs.append(comp)
    return sccs


def _empty_nba(signals: tuple) -> NBA:
    return NBA(signals, 1, frozenset([0]), frozenset(), tuple())


def _subsume_edges(trans: list) -> list:
    by_pair: dict = {}
    for s, g, d in trans:
        by_pair.setdefault((s, d), set()).add(g)
    out = []
    for (s, d), gs in sorted(by_pair.items()):
        kept: list = []
        for g in sorted(gs, key=lambda h: (len(h), sorted(h))):
            if not any(h <= g for h in kept):
                kept.append(g)
        for g in kept:
            out.append((s, g, d))
    return out


def simplify_nba(nba: NBA) -> NBA:
    trans = _subsume_edges(list(dict.fromkeys(nba.transitions)))

    # states reachable from the initial set
    succ: dict[int, set] = {}
    for s, _, d in trans:
        succ.setdefault(s, set()).add(d)
    reach = set(nba.initial)
    todo = list(nba.initial)
    while todo:
        s = todo.pop()
        for d in succ.get(s, ()):
            if d not in reach:
                reach.add(d)
                todo.append(d)

    # states from which an accepting cycle is reachable
    succ_sorted = {s: sorted(ds) for s, ds in succ.items()}
    sccs = tarjan_sccs(nba.n_states, succ_sorted)
    good = set()
    for comp in sccs:
        cs = set(comp)
        cyclic = len(comp) > 1 or any(s == d and s in cs for s, _, d in trans)
        if cyclic and (cs & nba.accepting):
            good |= cs
    pred: dict[int, set] = {}
    for s, _, d in trans:
        pred.setdefault(d, set()).add(s)
    live = set(good)
    todo = list(good)
    while todo:
        s = todo.pop()
        for p in pred.get(s, ()):
            if p not in live:
                live.add(p)
                todo.append(p)

    keep = reach & live
    if not keep:
        return _empty_nba(nba.signals)

    # quotient by iterated outgoing-signature equality (forward bisimulation)
    block = {s: int(s in nba.accepting) for s in keep}
    while True:
        canon = {}
        for s in keep:
            outs = sorted(
                {(tuple(sorted(g)), block[d]) for src, g, d in trans if src == s and d in keep}
            )
            canon[s] = (block[s], tuple(outs))
        keys = sorted(set(canon.values()))
        newid = {k: i for i, k in enumerate(keys)}
        new_block = {s: newid[canon[s]] for s in keep}
        if new_block == block:
            break
        block = new_block

    rep_of_block: dict[int, int] = {}
    for s in sorted(keep):
        rep_of_block.setdefault(block[s], s)
    reps = sorted(rep_of_block.values())
    remap = {b: reps.index(r) for b, r in rep_of_block.items()}

    new_initial = frozenset(remap[block[s]] for s in nba.initial if s in keep)
    if not new_initial:
        return _empty_nba(nba.signals)
    new_accept = frozenset(remap[block[s]] for s in keep if s in nba.accepting)

    merged = [
        (remap[block[s]], g, remap[block[d]])
        for s, g, d in trans
        if s in keep and d in keep and rep_of_block[block[s]] == s
    ]
    return NBA(nba.signals, len(reps), new_initial, new_accept, tuple(_subsume_edges(merged)))


# ---------------------------------------------------------------------------
# acceptance over lasso words


def loop_acceptance_states(nba: NBA, loop_vals: list) -> set:
    """States from which reading loop_vals forever admits an accepting run (phase 0 entry)."""
    m = len(loop_vals)
    by_src: dict[int, list] = {}
    for s, g, d in nba.transitions:
        by_src.setdefault(s, []).append((g, d))

    node_id: dict = {}

    def nid(q: int, i: int) -> int:
        key = (q, i)
        if key not in node_id:
            node_id[key] = len(node_id)
        return node_id[key]

    for q in range(nba.n_states):
        for i in range(m):
            nid(q, i)
    succ = {}
    for (q, i), u in node_id.items():
        outs = []
        for g, d in by_src.get(q, ()):
            if guard_satisfied(g, loop_vals[i]):
                outs.append(node_id[(d, (i + 1) % m)])
        succ[u] = sorted(set(outs))

    sccs = tarjan_sccs(len(node_id), succ)
    comp_of = {}
    for ci, comp in enumerate(sccs):
        for u in comp:
            comp_of[u] = ci
    good_comps = set()
    rev = {u: (q, i) for (q, i), u in node_id.items()}
    for ci, comp in enumerate(sccs):
        cs = set(comp)
        cyclic = len(comp) > 1 or any(u in succ.get(u, ()) for u in comp)
        if cyclic and any(rev[u][0] in nba.accepting for u in comp):
            good_comps.add(ci)
    # nodes that can reach a good component
    can = [False] * len(node_id)
    for comp in sccs:  # reverse topological: successors already settled
        ci = comp_of[comp[0]]
        flag = ci in good_comps
        if not flag:
            flag = any(can[v] for u in comp for v in succ.get(u, ()))
        for u in comp:
            can[u] = flag
    return {q for q in range(nba.n_states) if can[node_id[(q, 0)]]}


def run_prefix(nba: NBA, vals: list, from_states: set) -> set:
    cur = set(from_states)
    for v in vals:
        nxt = set()
        for s, g, d in nba.transitions:
            if s in cur and guard_satisfied(g, v):
                nxt.add(d)
        cur = nxt
        if not cur:
            break
    return cur


def accepts_lasso(nba: NBA, prefix_vals: list, loop_vals: list) -> bool:
    """Membership of the ultimately periodic word prefix . loop^omega."""
    assert loop_vals, "a lasso needs a nonempty loop"
    after = run_prefix(nba, prefix_vals, set(nba.initial))
    if not after:
        return False
    good = loop_acceptance_states(nba, loop_vals)
    return bool(after & good)
