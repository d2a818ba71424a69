"""Abstract syntax, concrete syntax, well-formedness and normal forms for HyperQPTL."""

from __future__ import annotations

from dataclasses import dataclass, field, replace as dc_replace
from enum import Enum
from typing import Iterator, Optional


class QuantKind(Enum):
    TRACE_FORALL = "forall-trace"
    TRACE_EXISTS = "exists-trace"
    PROP_FORALL = "forall-prop"
    PROP_EXISTS = "exists-prop"

    @property
    def is_trace(self) -> bool:
        return self in (QuantKind.TRACE_FORALL, QuantKind.TRACE_EXISTS)

    @property
    def is_forall(self) -> bool:
        return self in (QuantKind.TRACE_FORALL, QuantKind.PROP_FORALL)

    def dual(self) -> "QuantKind":
        return {
            QuantKind.TRACE_FORALL: QuantKind.TRACE_EXISTS,
            QuantKind.TRACE_EXISTS: QuantKind.TRACE_FORALL,
            QuantKind.PROP_FORALL: QuantKind.PROP_EXISTS,
            QuantKind.PROP_EXISTS: QuantKind.PROP_FORALL,
        }[self]


@dataclass(frozen=True)
class Formula:
    """Base class of all AST nodes. Source position never takes part in equality."""

    pos: Optional[tuple[int, int]] = field(default=None, compare=False, repr=False, kw_only=True)

    def children(self) -> tuple["Formula", ...]:
        return ()

    def __str__(self) -> str:
        return print_formula(self)


@dataclass(frozen=True)
class BoolConst(Formula):
    value: bool = True


TRUE = BoolConst(True)
FALSE = BoolConst(False)


@dataclass(frozen=True)
class TraceAtom(Formula):
    """Atomic proposition indexed by a trace variable, written a[pi]."""

    prop: str = ""
    trace_var: str = ""


@dataclass(frozen=True)
class PropAtom(Formula):
    """Bare quantified proposition, written q."""

    var: str = ""


@dataclass(frozen=True)
class Unary(Formula):
    child: Formula = TRUE

    def children(self) -> tuple[Formula, ...]:
        return (self.child,)


@dataclass(frozen=True)
class Not(Unary):
    pass


@dataclass(frozen=True)
class Next(Unary):
    pass


@dataclass(frozen=True)
class Eventually(Unary):
    pass


@dataclass(frozen=True)
class Globally(Unary):
    pass


@dataclass(frozen=True)
class Binary(Formula):
    left: Formula = TRUE
    right: Formula = TRUE

    def children(self) -> tuple[Formula, ...]:
        return (self.left, self.right)


@dataclass(frozen=True)
class And(Binary):
    pass


@dataclass(frozen=True)
class Or(Binary):
    pass


@dataclass(frozen=True)
class Implies(Binary):
    pass


@dataclass(frozen=True)
class Iff(Binary):
    pass


@dataclass(frozen=True)
class Until(Binary):
    pass


@dataclass(frozen=True)
class WeakUntil(Binary):
    pass


@dataclass(frozen=True)
class Release(Binary):
    pass


@dataclass(frozen=True)
class Quantifier(Formula):
    var: str = ""
    child: Formula = TRUE

    kind: QuantKind = QuantKind.TRACE_FORALL

    def children(self) -> tuple[Formula, ...]:
        return (self.child,)


@dataclass(frozen=True)
class TraceForall(Quantifier):
    kind: QuantKind = field(default=QuantKind.TRACE_FORALL, init=False)


@dataclass(frozen=True)
class TraceExists(Quantifier):
    kind: QuantKind = field(default=QuantKind.TRACE_EXISTS, init=False)


@dataclass(frozen=True)
class PropForall(Quantifier):
    kind: QuantKind = field(default=QuantKind.PROP_FORALL, init=False)


@dataclass(frozen=True)
class PropExists(Quantifier):
    kind: QuantKind = field(default=QuantKind.PROP_EXISTS, init=False)


QUANT_CLASS = {
    QuantKind.TRACE_FORALL: TraceForall,
    QuantKind.TRACE_EXISTS: TraceExists,
    QuantKind.PROP_FORALL: PropForall,
    QuantKind.PROP_EXISTS: PropExists,
}


@dataclass(frozen=True)
class Knowledge(Formula):
    """K{a,b}[pi] phi: phi holds on every trace that agrees with pi on the agent set so far.

    polarity is None until to_nnf tags the node as "pos" or "neg".
    """

    agents: frozenset[str] = frozenset()
    trace_var: str = ""
    child: Formula = TRUE
    polarity: Optional[str] = field(default=None, compare=False)

    def children(self) -> tuple[Formula, ...]:
        return (self.child,)


@dataclass(frozen=True)
class PrefixEntry:
    kind: QuantKind
    var: str


@dataclass(frozen=True)
class QuantifierPrefix:
    entries: tuple[PrefixEntry, ...] = ()

    def __iter__(self) -> Iterator[PrefixEntry]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def attach(self, body: Formula) -> Formula:
        """Rebuild the full formula by wrapping body in this prefix."""
        f = body
        for entry in reversed(self.entries):
            f = QUANT_CLASS[entry.kind](var=entry.var, child=f)
        return f


@dataclass(frozen=True)
class SpecDocument:
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    formula: Formula

    @property
    def signals(self) -> tuple[str, ...]:
        return self.inputs + self.outputs


class SpecError(Exception):
    """Parse or well-formedness error carrying a source position."""

    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {message}" if line else message)
        self.message = message
        self.line = line
        self.col = col


# ---------------------------------------------------------------------------
# helpers for building formulas


def conj(parts: list[Formula]) -> Formula:
    """Right-nested conjunction; empty list is true."""
    if not parts:
        return TRUE
    f = parts[-1]
    for p in reversed(parts[:-1]):
        f = And(p, f)
    return f


def disj(parts: list[Formula]) -> Formula:
    if not parts:
        return FALSE
    f = parts[-1]
    for p in reversed(parts[:-1]):
        f = Or(p, f)
    return f


def fresh_name(base: str, used: set[str]) -> str:
    """Deterministic fresh name: base plus a __k counter."""
    k = 0
    while f"{base}__{k}" in used:
        k += 1
    name = f"{base}__{k}"
    used.add(name)
    return name


def walk(f: Formula) -> Iterator[Formula]:
    yield f
    for c in f.children():
        yield from walk(c)


def quantified_vars(f: Formula) -> list[tuple[QuantKind, str]]:
    return [(g.kind, g.var) for g in walk(f) if isinstance(g, Quantifier)]


def substitute_trace_var(f: Formula, old: str, new: str) -> Formula:
    """Rename a free trace variable in atoms and knowledge nodes."""
    if isinstance(f, TraceAtom):
        return TraceAtom(f.prop, new) if f.trace_var == old else f
    if isinstance(f, Knowledge):
        tv = new if f.trace_var == old else f.trace_var
        return Knowledge(f.agents, tv, substitute_trace_var(f.child, old, new), f.polarity)
    if isinstance(f, Quantifier):
        if f.kind.is_trace and f.var == old:
            return f  # shadowed
        return dc_replace(f, child=substitute_trace_var(f.child, old, new))
    if isinstance(f, Unary):
        return dc_replace(f, child=substitute_trace_var(f.child, old, new))
    if isinstance(f, Binary):
        return dc_replace(
            f,
            left=substitute_trace_var(f.left, old, new),
            right=substitute_trace_var(f.right, old, new),
        )
    return f


def substitute_formula(f: Formula, target: Formula, repl: Formula) -> tuple[Formula, bool]:
    """Replace the first occurrence (leftmost, innermost irrelevant: exact node match) of target."""
    if f == target:
        return repl, True
    if isinstance(f, Quantifier) or isinstance(f, Unary):
        new_child, done = substitute_formula(f.children()[0], target, repl)
        if done:
            return dc_replace(f, child=new_child), True
        return f, False
    if isinstance(f, Knowledge):
        new_child, done = substitute_formula(f.child, target, repl)
        if done:
            return dc_replace(f, child=new_child), True
        return f, False
    if isinstance(f, Binary):
        new_left, done = substitute_formula(f.left, target, repl)
        if done:
            return dc_replace(f, left=new_left), True
        new_right, done = substitute_formula(f.right, target, repl)
        if done:
            return dc_replace(f, right=new_right), True
        return f, False
    return f, False


# ---------------------------------------------------------------------------
# concrete syntax: tokenizer


_KEYWORDS = {"forall", "exists", "trace", "prop", "true", "false", "X", "F", "G", "U", "W", "R", "K"}
_PUNCT = ("<->", "->", "!", "&", "|", "(", ")", "[", "]", "{", "}", ",", ":", ".")


@dataclass
class Token:
    kind: str  # "name", "kw", "punct", "eof"
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        matched = None
        for p in _PUNCT:
            if text.startswith(p, i):
                matched = p
                break
        if matched:
            tokens.append(Token("punct", matched, line, col))
            i += len(matched)
            col += len(matched)
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            kind = "kw" if word in _KEYWORDS else "name"
            tokens.append(Token(kind, word, line, col))
            col += j - i
            i = j
            continue
        raise SpecError(f"unexpected character {c!r}", line, col)
    tokens.append(Token("eof", "", line, col))
    return tokens


# ---------------------------------------------------------------------------
# parser
#
# precedence (tightest first): unary (! X F G K) > U/W/R > & > | > -> > <->
# U/W/R and -> associate to the right, & | <-> to the left


class _Parser:
    def __init__(self, tokens: list[Token], signals: set[str]):
        self.tokens = tokens
        self.pos = 0
        self.signals = signals
        self.bound_trace: list[str] = []
        self.bound_prop: list[str] = []
        self.seen_quant_vars: set[str] = set()

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def error(self, msg: str, tok: Optional[Token] = None) -> SpecError:
        t = tok or self.peek()
        return SpecError(msg, t.line, t.col)

    def expect(self, text: str) -> Token:
        t = self.peek()
        if t.text != text:
            raise self.error(f"expected {text!r}, found {t.text!r}")
        return self.next()

    def parse_formula(self) -> Formula:
        return self.parse_iff()

    def parse_iff(self) -> Formula:
        f = self.parse_implies()
        while self.peek().text == "<->":
            tok = self.next()
            g = self.parse_implies()
            f = Iff(f, g, pos=(tok.line, tok.col))
        return f

    def parse_implies(self) -> Formula:
        f = self.parse_or()
        if self.peek().text == "->":
            tok = self.next()
            g = self.parse_implies()
            return Implies(f, g, pos=(tok.line, tok.col))
        return f

    def parse_or(self) -> Formula:
        f = self.parse_and()
        while self.peek().text == "|":
            tok = self.next()
            g = self.parse_and()
            f = Or(f, g, pos=(tok.line, tok.col))
        return f

    def parse_and(self) -> Formula:
        f = self.parse_until()
        while self.peek().text == "&":
            tok = self.next()
            g = self.parse_until()
            f = And(f, g, pos=(tok.line, tok.col))
        return f

    def parse_until(self) -> Formula:
        f = self.parse_unary()
        t = self.peek()
        if t.text in ("U", "W", "R"):
            tok = self.next()
            g = self.parse_until()
            cls = {"U": Until, "W": WeakUntil, "R": Release}[tok.text]
            return cls(f, g, pos=(tok.line, tok.col))
        return f

    def parse_unary(self) -> Formula:
        t = self.peek()
        if t.text == "!":
            tok = self.next()
            return Not(self.parse_unary(), pos=(tok.line, tok.col))
        if t.text in ("X", "F", "G"):
            tok = self.next()
            cls = {"X": Next, "F": Eventually, "G": Globally}[tok.text]
            return cls(self.parse_unary(), pos=(tok.line, tok.col))
        if t.text == "K":
            return self.parse_knowledge()
        if t.text in ("forall", "exists"):
            return self.parse_quantifier()
        return self.parse_atom()

    def parse_knowledge(self) -> Formula:
        tok = self.expect("K")
        self.expect("{")
        agents: list[str] = []
        if self.peek().text != "}":
            while True:
                nt = self.next()
                if nt.kind not in ("name", "kw"):
                    raise self.error("expected a signal name in agent set", nt)
                if nt.text not in self.signals:
                    raise self.error(f"unknown proposition {nt.text!r} in agent set", nt)
                agents.append(nt.text)
                if self.peek().text != ",":
                    break
                self.next()
        self.expect("}")
        self.expect("[")
        tv = self.next()
        if tv.kind != "name":
            raise self.error("expected a trace variable", tv)
        if tv.text not in self.bound_trace:
            raise self.error(f"unbound trace variable {tv.text!r}", tv)
        self.expect("]")
        child = self.parse_unary()
        return Knowledge(frozenset(agents), tv.text, child, pos=(tok.line, tok.col))

    def parse_quantifier(self) -> Formula:
        tok = self.next()  # forall | exists
        name_tok = self.next()
        if name_tok.kind != "name":
            raise self.error("expected a variable name", name_tok)
        var = name_tok.text
        if var in self.seen_quant_vars:
            raise self.error(f"duplicate variable name {var!r}", name_tok)
        self.expect(":")
        sort_tok = self.next()
        if sort_tok.text not in ("trace", "prop"):
            raise self.error("expected 'trace' or 'prop'", sort_tok)
        self.expect(".")
        is_trace = sort_tok.text == "trace"
        if not is_trace and var in self.signals:
            raise self.error(f"quantified proposition {var!r} collides with a declared signal", name_tok)
        self.seen_quant_vars.add(var)
        stack = self.bound_trace if is_trace else self.bound_prop
        stack.append(var)
        child = self.parse_formula()
        stack.pop()
        kind = {
            ("forall", True): TraceForall,
            ("exists", True): TraceExists,
            ("forall", False): PropForall,
            ("exists", False): PropExists,
        }[(tok.text, is_trace)]
        return kind(var=var, child=child, pos=(tok.line, tok.col))

    def parse_atom(self) -> Formula:
        t = self.peek()
        if t.text == "(":
            self.next()
            f = self.parse_formula()
            self.expect(")")
            return f
        if t.text == "true":
            self.next()
            return BoolConst(True, pos=(t.line, t.col))
        if t.text == "false":
            self.next()
            return BoolConst(False, pos=(t.line, t.col))
        if t.kind != "name":
            raise self.error(f"expected a formula, found {t.text!r}")
        self.next()
        if self.peek().text == "[":
            self.next()
            tv = self.next()
            if tv.kind != "name":
                raise self.error("expected a trace variable", tv)
            self.expect("]")
            if t.text not in self.signals:
                raise self.error(f"unknown proposition {t.text!r}", t)
            if tv.text not in self.bound_trace:
                raise self.error(f"unbound trace variable {tv.text!r}", tv)
            return TraceAtom(t.text, tv.text, pos=(t.line, t.col))
        if t.text not in self.bound_prop:
            raise self.error(f"unbound propositional variable {t.text!r}", t)
        return PropAtom(t.text, pos=(t.line, t.col))


def _parse_header_line(line: str, lineno: int) -> Optional[tuple[str, list[str]]]:
    stripped = line.split("#", 1)[0].strip()
    if not stripped:
        return None
    for key in ("inputs", "outputs"):
        if stripped.startswith(key + ":"):
            rest = stripped[len(key) + 1 :].strip()
            names = [s.strip() for s in rest.split(",")] if rest else []
            for s in names:
                if not s or not (s[0].isalpha() or s[0] == "_") or not all(c.isalnum() or c == "_" for c in s):
                    raise SpecError(f"bad signal name {s!r} in {key} header", lineno, 1)
            return key, names
    return None


def parse(text: str) -> SpecDocument:
    """Parse a specification document: header lines followed by one formula."""
    lines = text.split("\n")
    inputs: Optional[list[str]] = None
    outputs: Optional[list[str]] = None
    body_start = 0
    for idx, line in enumerate(lines):
        hdr = _parse_header_line(line, idx + 1)
        if hdr is None:
            stripped = line.split("#", 1)[0].strip()
            if stripped:
                body_start = idx
                break
            body_start = idx + 1
            continue
        key, names = hdr
        if key == "inputs":
            if inputs is not None:
                raise SpecError("duplicate inputs header", idx + 1, 1)
            inputs = names
        else:
            if outputs is not None:
                raise SpecError("duplicate outputs header", idx + 1, 1)
            outputs = names
        body_start = idx + 1
    inputs = inputs or []
    outputs = outputs or []
    seen: set[str] = set()
    for s in inputs + outputs:
        if s in seen:
            raise SpecError(f"signal {s!r} declared twice")
        seen.add(s)
    body_text = "\n".join([""] * body_start + lines[body_start:])
    tokens = _tokenize(body_text)
    if tokens[0].kind == "eof":
        raise SpecError("missing formula", len(lines), 1)
    parser = _Parser(tokens, seen)
    f = parser.parse_formula()
    t = parser.peek()
    if t.kind != "eof":
        raise parser.error(f"unexpected trailing input {t.text!r}")
    return SpecDocument(tuple(inputs), tuple(outputs), f)


def parse_formula(text: str, signals: set[str], trace_vars: set[str] = frozenset(),
                  prop_vars: set[str] = frozenset()) -> Formula:
    """Parse a bare formula with the given signals and pre-bound variables in scope."""
    parser = _Parser(_tokenize(text), set(signals))
    parser.bound_trace = list(trace_vars)
    parser.bound_prop = list(prop_vars)
    f = parser.parse_formula()
    if parser.peek().kind != "eof":
        raise parser.error("unexpected trailing input")
    return f


# ---------------------------------------------------------------------------
# printer

_PREC_IFF, _PREC_IMPLIES, _PREC_OR, _PREC_AND, _PREC_UNTIL, _PREC_UNARY, _PREC_ATOM = range(7)


def _print(f: Formula, ctx: int) -> str:
    if isinstance(f, BoolConst):
        return "true" if f.value else "false"
    if isinstance(f, TraceAtom):
        return f"{f.prop}[{f.trace_var}]"
    if isinstance(f, PropAtom):
        return f.var
    if isinstance(f, Not):
        return _wrap(f"!{_print(f.child, _PREC_UNARY)}", _PREC_UNARY, ctx)
    if isinstance(f, (Next, Eventually, Globally)):
        op = {Next: "X", Eventually: "F", Globally: "G"}[type(f)]
        return _wrap(f"{op} {_print(f.child, _PREC_UNARY)}", _PREC_UNARY, ctx)
    if isinstance(f, Knowledge):
        agents = ",".join(sorted(f.agents))
        return _wrap(f"K{{{agents}}}[{f.trace_var}] {_print(f.child, _PREC_UNARY)}", _PREC_UNARY, ctx)
    if isinstance(f, (Until, WeakUntil, Release)):
        op = {Until: "U", WeakUntil: "W", Release: "R"}[type(f)]
        # operands of binary temporal operators are parenthesized unless atomic
        if isinstance(f.left, (TraceAtom, PropAtom, BoolConst)):
            left = _print(f.left, _PREC_ATOM)
        else:
            left = f"({_print(f.left, _PREC_IFF)})"
        if isinstance(f.right, (TraceAtom, PropAtom, BoolConst)):
            right = _print(f.right, _PREC_ATOM)
        elif isinstance(f.right, (Until, WeakUntil, Release)):
            right = _print(f.right, _PREC_UNTIL)
        else:
            right = f"({_print(f.right, _PREC_IFF)})"
        return _wrap(f"{left} {op} {right}", _PREC_UNTIL, ctx)
    if isinstance(f, And):
        return _wrap(f"{_print(f.left, _PREC_AND)} & {_print(f.right, _PREC_AND + 1)}", _PREC_AND, ctx)
    if isinstance(f, Or):
        return _wrap(f"{_print(f.left, _PREC_OR)} | {_print(f.right, _PREC_OR + 1)}", _PREC_OR, ctx)
    if isinstance(f, Implies):
        return _wrap(f"{_print(f.left, _PREC_IMPLIES + 1)} -> {_print(f.right, _PREC_IMPLIES)}", _PREC_IMPLIES, ctx)
    if isinstance(f, Iff):
        return _wrap(f"{_print(f.left, _PREC_IFF)} <-> {_print(f.right, _PREC_IFF + 1)}", _PREC_IFF, ctx)
    if isinstance(f, Quantifier):
        word = "forall" if f.kind.is_forall else "exists"
        sort = "trace" if f.kind.is_trace else "prop"
        body = _print(f.child, _PREC_IFF)
        s = f"{word} {f.var}:{sort}. {body}"
        return f"({s})" if ctx > _PREC_IFF else s
    raise TypeError(f"cannot print node {type(f).__name__}")


def _wrap(s: str, prec: int, ctx: int) -> str:
    return f"({s})" if prec < ctx else s


def print_formula(f: Formula) -> str:
    """Render a formula in the concrete grammar; parse(print(f)) is structurally f."""
    return _print(f, _PREC_IFF)


def print_document(doc: SpecDocument) -> str:
    return (
        f"inputs: {', '.join(doc.inputs)}\n"
        f"outputs: {', '.join(doc.outputs)}\n"
        f"{print_formula(doc.formula)}\n"
    )


# ---------------------------------------------------------------------------
# well-formedness


def check_well_formed(doc: SpecDocument) -> list[str]:
    """Collect diagnostics; an empty list means the document is well-formed."""
    diags: list[str] = []
    seen_signal: set[str] = set()
    for s in doc.inputs + doc.outputs:
        if s in seen_signal:
            diags.append(f"signal {s!r} declared more than once")
        seen_signal.add(s)
    input_set = set(doc.inputs)

    seen_vars: set[str] = set()

    def rec(f: Formula, trace_scope: set[str], prop_scope: set[str], in_prefix: bool = False) -> None:
        if isinstance(f, Quantifier):
            if not in_prefix:
                diags.append(f"quantifier for {f.var!r} below an operator: the prefix must be prenex")
            if f.var in seen_vars:
                diags.append(f"duplicate variable {f.var!r}")
            seen_vars.add(f.var)
            if not f.kind.is_trace:
                if f.var in input_set:
                    diags.append(f"quantified proposition {f.var!r} shadows a declared input")
                rec(f.child, trace_scope, prop_scope | {f.var}, in_prefix)
            else:
                rec(f.child, trace_scope | {f.var}, prop_scope, in_prefix)
            return
        if isinstance(f, TraceAtom):
            if f.prop not in seen_signal:
                diags.append(f"unknown proposition {f.prop!r}")
            if f.trace_var not in trace_scope:
                diags.append(f"unbound trace variable {f.trace_var!r}")
            return
        if isinstance(f, PropAtom):
            if f.var not in prop_scope:
                diags.append(f"unbound propositional variable {f.var!r}")
            return
        if isinstance(f, Knowledge):
            if f.trace_var not in trace_scope:
                diags.append(f"unbound trace variable {f.trace_var!r} in knowledge operator")
            for a in f.agents:
                if a not in seen_signal:
                    diags.append(f"unknown proposition {a!r} in agent set")
            rec(f.child, trace_scope, prop_scope)
            return
        for c in f.children():
            rec(c, trace_scope, prop_scope)

    rec(doc.formula, set(), set(), in_prefix=True)
    return diags


# ---------------------------------------------------------------------------
# negation normal form


def to_nnf(f: Formula) -> Formula:
    """Push negations to atoms; expand -> and <->; tag knowledge nodes with polarity."""
    return _nnf(f, False)


def _nnf(f: Formula, neg: bool) -> Formula:
    if isinstance(f, BoolConst):
        return BoolConst(f.value != neg)
    if isinstance(f, (TraceAtom, PropAtom)):
        return Not(f) if neg else f
    if isinstance(f, Not):
        return _nnf(f.child, not neg)
    if isinstance(f, And):
        cls = Or if neg else And
        return cls(_nnf(f.left, neg), _nnf(f.right, neg))
    if isinstance(f, Or):
        cls = And if neg else Or
        return cls(_nnf(f.left, neg), _nnf(f.right, neg))
    if isinstance(f, Implies):
        return _nnf(Or(Not(f.left), f.right), neg)
    if isinstance(f, Iff):
        # expanded rather than kept: subformulas occur in both polarities
        expanded = Or(And(f.left, f.right), And(Not(f.left), Not(f.right)))
        return _nnf(expanded, neg)
    if isinstance(f, Next):
        return Next(_nnf(f.child, neg))
    if isinstance(f, Eventually):
        return Globally(_nnf(f.child, True)) if neg else Eventually(_nnf(f.child, False))
    if isinstance(f, Globally):
        return Eventually(_nnf(f.child, True)) if neg else Globally(_nnf(f.child, False))
    if isinstance(f, Until):
        if neg:
            return Release(_nnf(f.left, True), _nnf(f.right, True))
        return Until(_nnf(f.left, False), _nnf(f.right, False))
    if isinstance(f, Release):
        if neg:
            return Until(_nnf(f.left, True), _nnf(f.right, True))
        return Release(_nnf(f.left, False), _nnf(f.right, False))
    if isinstance(f, WeakUntil):
        # a W b = b R (a | b); negation: (!b) U (!a & !b)
        if neg:
            return Until(_nnf(f.right, True), And(_nnf(f.left, True), _nnf(f.right, True)))
        return WeakUntil(_nnf(f.left, False), _nnf(f.right, False))
    if isinstance(f, Quantifier):
        kind = f.kind.dual() if neg else f.kind
        return QUANT_CLASS[kind](var=f.var, child=_nnf(f.child, neg))
    if isinstance(f, Knowledge):
        tagged = Knowledge(f.agents, f.trace_var, _nnf(f.child, False), "neg" if neg else "pos")
        return Not(tagged) if neg else tagged
    raise TypeError(f"cannot normalize node {type(f).__name__}")


# ---------------------------------------------------------------------------
# prefix extraction


def extract_prefix(f: Formula) -> tuple[QuantifierPrefix, Formula]:
    """Split a prenex formula into its quantifier prefix and quantifier-free body."""
    entries: list[PrefixEntry] = []
    while isinstance(f, Quantifier):
        entries.append(PrefixEntry(f.kind, f.var))
        f = f.child
    for g in walk(f):
        if isinstance(g, Quantifier):
            raise SpecError(f"formula is not prenex: inner quantifier on {g.var!r}",
                            *(g.pos or (0, 0)))
    return QuantifierPrefix(tuple(entries)), f
