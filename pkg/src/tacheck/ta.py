"""Threshold automata: data model, text format, validation and DOT export.

A threshold automaton describes one process of a parameterized system.
Processes move between locations along rules guarded by lower thresholds
over shared counters, and rules may increment those counters. The text
format is line-oriented::

    params n t f;
    resilience n > 3*t && t >= f && f >= 0;
    shared b0 b1;
    locations V0* V1* B0 C0!;
    rule r1: V0 -> B0 when true do b0++;
    rule r3: B0 -> C0 when b0 >= 2*t + 1 - f;
    roundswitch C0 -> V0;

``*`` marks an initial location and ``!`` a final one. Comments use
``//`` or ``/* ... */``.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

PARAM_NAMES = ("n", "t", "f")


class TAParseError(ValueError):
    """Raised on malformed automaton text; carries the source position."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.message = message
        self.line = line
        self.column = column


class ResilienceError(ValueError):
    """Parameters outside the admissible region of an automaton."""


@dataclass(frozen=True)
class Parameters:
    """Process count ``n``, fault bound ``t`` and actual Byzantine count ``f``."""

    n: int
    t: int
    f: int

    def __post_init__(self):
        if self.n <= 0 or self.t < 0 or self.f < 0:
            raise ValueError(f"invalid parameters {self.as_tuple()}")
        if self.n - self.f <= 0:
            raise ValueError(f"no correct process left in {self.as_tuple()}")

    @property
    def correct(self) -> int:
        """Number of modeled (correct) processes."""
        return self.n - self.f

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.n, self.t, self.f)

    def as_mapping(self) -> dict[str, int]:
        return {"n": self.n, "t": self.t, "f": self.f}

    @classmethod
    def parse(cls, text: str) -> "Parameters":
        """Parse ``"4,1,1"`` into ``Parameters(4, 1, 1)``."""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 3 or not all(re.fullmatch(r"\d+", p) for p in parts):
            raise ValueError(f"expected n,t,f but got {text!r}")
        return cls(*(int(p) for p in parts))

    def __str__(self) -> str:
        return "({},{},{})".format(*self.as_tuple())


@dataclass(frozen=True)
class Affine:
    """Integer affine expression over the parameters n, t and f."""

    coeffs: tuple[tuple[str, int], ...] = ()
    const: int = 0

    @classmethod
    def of(cls, coeffs: Mapping[str, int] | None = None, const: int = 0) -> "Affine":
        coeffs = coeffs or {}
        items = tuple((p, coeffs[p]) for p in PARAM_NAMES if coeffs.get(p, 0) != 0)
        return cls(items, const)

    def evaluate(self, params: Parameters) -> int:
        values = params.as_mapping()
        return sum(c * values[p] for p, c in self.coeffs) + self.const

    def __add__(self, other: "Affine") -> "Affine":
        merged = dict(self.coeffs)
        for p, c in other.coeffs:
            merged[p] = merged.get(p, 0) + c
        return Affine.of(merged, self.const + other.const)

    def scale(self, k: int) -> "Affine":
        return Affine.of({p: c * k for p, c in self.coeffs}, self.const * k)

    def __str__(self) -> str:
        return format_linear(list(self.coeffs), self.const)


def format_linear(terms: Sequence[tuple[str, int]], const: int = 0) -> str:
    """Render ``[("t", 2), ("f", -1)], 1`` as ``2*t - f + 1``."""
    pieces: list[str] = []
    for name, coef in terms:
        if coef == 0:
            continue
        mag = abs(coef)
        body = name if mag == 1 else f"{mag}*{name}"
        if not pieces:
            pieces.append(body if coef > 0 else f"-{body}")
        else:
            pieces.append(f"+ {body}" if coef > 0 else f"- {body}")
    if const or not pieces:
        if not pieces:
            pieces.append(str(const))
        else:
            pieces.append(f"+ {const}" if const > 0 else f"- {-const}")
    return " ".join(pieces)


@dataclass(frozen=True)
class GuardAtom:
    """``sum(coef * var) >= rhs`` with non-negative coefficients."""

    lhs: tuple[tuple[str, int], ...]
    rhs: Affine

    def __post_init__(self):
        if not self.lhs:
            raise ValueError("guard atom needs at least one shared variable")
        if any(c < 0 for _, c in self.lhs):
            raise ValueError("guard coefficients must be non-negative")

    def holds(self, shared: Mapping[str, int], params: Parameters) -> bool:
        total = sum(c * shared[v] for v, c in self.lhs)
        return total >= self.rhs.evaluate(params)

    def variables(self) -> tuple[str, ...]:
        return tuple(v for v, _ in self.lhs)

    def __str__(self) -> str:
        return f"{format_linear(list(self.lhs))} >= {self.rhs}"


@dataclass(frozen=True)
class Rule:
    """A guarded edge between two locations with counter increments."""

    id: str
    source: str
    target: str
    guard: tuple[GuardAtom, ...] = ()
    update: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        if any(inc <= 0 for _, inc in self.update):
            raise ValueError(f"rule {self.id}: updates may only increment")
        if self.is_self_loop and self.update:
            raise ValueError(f"rule {self.id}: a self-loop cannot update shared variables")

    @property
    def is_self_loop(self) -> bool:
        return self.source == self.target

    def guard_text(self) -> str:
        return " && ".join(str(a) for a in self.guard) if self.guard else "true"

    def update_text(self) -> str:
        return ", ".join(var + "++" * inc for var, inc in self.update)

    def guard_holds(self, shared: Mapping[str, int], params: Parameters) -> bool:
        return all(atom.holds(shared, params) for atom in self.guard)


@dataclass(frozen=True)
class Constraint:
    """One comparison of the resilience condition: ``lhs op rhs``."""

    lhs: Affine
    op: str
    rhs: Affine

    def holds(self, params: Parameters) -> bool:
        return _compare(self.lhs.evaluate(params), self.op, self.rhs.evaluate(params))

    def __str__(self) -> str:
        return f"{self.lhs} {self.op} {self.rhs}"


def _compare(left: int, op: str, right: int) -> bool:
    if op == ">":
        return left > right
    if op == ">=":
        return left >= right
    if op == "<":
        return left < right
    if op == "<=":
        return left <= right
    if op == "==":
        return left == right
    if op == "!=":
        return left != right
    raise ValueError(f"unknown relation {op!r}")


@dataclass(frozen=True)
class ThresholdAutomaton:
    locations: tuple[str, ...]
    initial: tuple[str, ...]
    final: tuple[str, ...]
    shared: tuple[str, ...]
    rules: tuple[Rule, ...]
    resilience: tuple[Constraint, ...] = ()
    params: tuple[str, ...] = PARAM_NAMES
    name: str = field(default="ta", compare=False)

    def rule(self, rule_id: str) -> Rule:
        for r in self.rules:
            if r.id == rule_id:
                return r
        raise KeyError(rule_id)

    def admits(self, params: Parameters) -> bool:
        """Whether ``params`` satisfy the resilience condition."""
        return all(c.holds(params) for c in self.resilience)

    def check_params(self, params: Parameters, allow_unsafe: bool = False) -> None:
        if not allow_unsafe and not self.admits(params):
            cond = " && ".join(str(c) for c in self.resilience)
            raise ResilienceError(f"{params} violates resilience condition {cond}")

    def distinct_guards(self) -> set[GuardAtom]:
        return {atom for r in self.rules for atom in r.guard}

    def self_loops(self) -> list[str]:
        return [r.source for r in self.rules if r.is_self_loop]


@dataclass(frozen=True)
class MultiRoundTA:
    """A one-round automaton plus round-switch edges from final to initial locations."""

    base: ThresholdAutomaton
    round_switch: tuple[Rule, ...]

    @property
    def name(self) -> str:
        return self.base.name

    def all_rules(self) -> tuple[Rule, ...]:
        return self.base.rules + self.round_switch

    def rule(self, rule_id: str) -> Rule:
        for r in self.all_rules():
            if r.id == rule_id:
                return r
        raise KeyError(rule_id)


def switch_rule(source: str, target: str) -> Rule:
    """Round-switch edge with the canonical identifier ``rs_<source>_<target>``."""
    return Rule(f"rs_{source}_{target}", source, target)


def base_of(ta: ThresholdAutomaton | MultiRoundTA) -> ThresholdAutomaton:
    return ta.base if isinstance(ta, MultiRoundTA) else ta


# ---------------------------------------------------------------- parsing

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*|/\*.*?\*/)
  | (?P<num>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<op>\+\+|--|->|>=|<=|==|!=|&&|[-+*;:,<>!()])
    """,
    re.VERBOSE | re.DOTALL,
)


@dataclass
class _Token:
    kind: str
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise TAParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        chunk = m.group()
        if kind not in ("ws", "comment"):
            tokens.append(_Token(kind, chunk, line, pos - line_start + 1))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    tokens.append(_Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.params: tuple[str, ...] = ()
        self.shared: list[str] = []
        self.locations: list[str] = []
        self.initial: list[str] = []
        self.final: list[str] = []
        self.rules: list[Rule] = []
        self.switches: list[Rule] = []
        self.resilience: list[Constraint] = []
        self.saw_switch_section = False

    @property
    def tok(self) -> _Token:
        return self.tokens[self.pos]

    def error(self, message: str, tok: _Token | None = None) -> TAParseError:
        tok = tok or self.tok
        return TAParseError(message, tok.line, tok.column)

    def advance(self) -> _Token:
        tok = self.tok
        self.pos += 1
        return tok

    def expect(self, text: str) -> _Token:
        if self.tok.text != text or self.tok.kind == "eof":
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r} but found {found!r}")
        return self.advance()

    def ident(self) -> _Token:
        if self.tok.kind != "ident":
            raise self.error(f"expected identifier but found {self.tok.text or 'end of input'!r}")
        return self.advance()

    def integer(self) -> int:
        if self.tok.kind != "num":
            raise self.error(f"expected integer but found {self.tok.text!r}")
        return int(self.advance().text)

    def parse(self, name: str) -> ThresholdAutomaton | MultiRoundTA:
        handlers = {
            "params": self.params_decl,
            "resilience": self.resilience_decl,
            "shared": self.shared_decl,
            "locations": self.locations_decl,
            "rule": self.rule_decl,
            "roundswitch": self.switch_decl,
        }
        while self.tok.kind != "eof":
            handler = handlers.get(self.tok.text)
            if handler is None or self.tok.kind != "ident":
                raise self.error(f"unexpected {self.tok.text!r}; expected a declaration")
            self.advance()
            handler()
        if not self.params:
            self.params = PARAM_NAMES
        try:
            ta = ThresholdAutomaton(
                locations=tuple(self.locations),
                initial=tuple(self.initial),
                final=tuple(self.final),
                shared=tuple(self.shared),
                rules=tuple(self.rules),
                resilience=tuple(self.resilience),
                params=self.params,
                name=name,
            )
        except ValueError as exc:
            raise self.error(str(exc)) from exc
        if self.saw_switch_section:
            return MultiRoundTA(ta, tuple(self.switches))
        return ta

    def params_decl(self):
        start = self.tok
        names = []
        while self.tok.kind == "ident":
            names.append(self.advance().text)
        self.expect(";")
        if tuple(names) != PARAM_NAMES:
            raise self.error("parameters must be declared as 'params n t f'", start)
        self.params = tuple(names)

    def resilience_decl(self):
        while True:
            lhs = self.affine()
            if self.tok.text not in (">", ">=", "<", "<=", "==", "!="):
                raise self.error(f"expected a comparison but found {self.tok.text!r}")
            op = self.advance().text
            rhs = self.affine()
            self.resilience.append(Constraint(lhs, op, rhs))
            if self.tok.text != "&&":
                break
            self.advance()
        self.expect(";")

    def shared_decl(self):
        while self.tok.kind == "ident":
            tok = self.advance()
            if tok.text in self.shared or tok.text in PARAM_NAMES:
                raise self.error(f"duplicate or reserved name {tok.text!r}", tok)
            self.shared.append(tok.text)
        self.expect(";")

    def locations_decl(self):
        while self.tok.kind == "ident":
            tok = self.advance()
            if tok.text in self.locations:
                raise self.error(f"duplicate location {tok.text!r}", tok)
            self.locations.append(tok.text)
            while self.tok.text in ("*", "!"):
                mark = self.advance().text
                (self.initial if mark == "*" else self.final).append(tok.text)
        self.expect(";")

    def location_ref(self) -> str:
        tok = self.ident()
        if tok.text not in self.locations:
            raise self.error(f"undeclared location {tok.text!r}", tok)
        return tok.text

    def rule_decl(self):
        start = self.tok
        rule_id = self.ident().text
        if any(r.id == rule_id for r in self.rules):
            raise self.error(f"duplicate rule id {rule_id!r}", start)
        self.expect(":")
        source = self.location_ref()
        self.expect("->")
        target = self.location_ref()
        self.expect("when")
        guard = self.guard()
        update: dict[str, int] = {}
        if self.tok.text == "do":
            self.advance()
            while True:
                tok = self.ident()
                if tok.text not in self.shared:
                    raise self.error(f"undeclared shared variable {tok.text!r}", tok)
                if self.tok.text == "--":
                    raise self.error("decrementing updates are not allowed")
                self.expect("++")
                update[tok.text] = update.get(tok.text, 0) + 1
                if self.tok.text != ",":
                    break
                self.advance()
        self.expect(";")
        ordered = tuple((v, update[v]) for v in self.shared if v in update)
        try:
            self.rules.append(Rule(rule_id, source, target, guard, ordered))
        except ValueError as exc:
            raise self.error(str(exc), start) from exc

    def switch_decl(self):
        self.saw_switch_section = True
        start = self.tok
        source = self.location_ref()
        self.expect("->")
        target = self.location_ref()
        self.expect(";")
        if source not in self.final:
            raise self.error(f"round switch must leave a final location, {source!r} is not", start)
        if target not in self.initial:
            raise self.error(f"round switch must enter an initial location, {target!r} is not", start)
        self.switches.append(switch_rule(source, target))

    def guard(self) -> tuple[GuardAtom, ...]:
        if self.tok.text == "true":
            self.advance()
            return ()
        atoms = [self.guard_atom()]
        while self.tok.text == "&&":
            self.advance()
            atoms.append(self.guard_atom())
        return tuple(atoms)

    def guard_atom(self) -> GuardAtom:
        terms: dict[str, int] = {}
        while True:
            coef = 1
            if self.tok.kind == "num":
                coef = self.integer()
                self.expect("*")
            tok = self.ident()
            if tok.text not in self.shared:
                raise self.error(f"undeclared shared variable {tok.text!r}", tok)
            terms[tok.text] = terms.get(tok.text, 0) + coef
            if self.tok.text != "+":
                break
            self.advance()
        if self.tok.text != ">=":
            raise self.error(f"guards must use '>=' against a parameter expression, found {self.tok.text!r}")
        self.advance()
        rhs = self.affine()
        lhs = tuple((v, terms[v]) for v in self.shared if v in terms)
        return GuardAtom(lhs, rhs)

    def affine(self) -> Affine:
        total = Affine()
        sign = 1
        if self.tok.text == "-":
            self.advance()
            sign = -1
        while True:
            total = total + self.affine_term().scale(sign)
            if self.tok.text == "+":
                sign = 1
            elif self.tok.text == "-":
                sign = -1
            else:
                return total
            self.advance()

    def affine_term(self) -> Affine:
        if self.tok.kind == "num":
            value = self.integer()
            if self.tok.text == "*":
                self.advance()
                return Affine.of({self.param_ref(): value})
            return Affine.of(const=value)
        return Affine.of({self.param_ref(): 1})

    def param_ref(self) -> str:
        tok = self.ident()
        if tok.text not in PARAM_NAMES:
            raise self.error(f"undeclared parameter {tok.text!r}", tok)
        return tok.text


def parse_ta(text: str, name: str = "ta") -> ThresholdAutomaton | MultiRoundTA:
    """Parse automaton text; a ``roundswitch`` section yields a :class:`MultiRoundTA`."""
    return _Parser(text).parse(name)


def render(ta: ThresholdAutomaton | MultiRoundTA) -> str:
    """Pretty-print an automaton in the text format accepted by :func:`parse_ta`."""
    base = base_of(ta)
    marks = []
    for loc in base.locations:
        suffix = ("*" if loc in base.initial else "") + ("!" if loc in base.final else "")
        marks.append(loc + suffix)
    lines = ["params " + " ".join(base.params) + ";"]
    if base.resilience:
        lines.append("resilience " + " && ".join(str(c) for c in base.resilience) + ";")
    lines.append("shared " + " ".join(base.shared) + ";")
    lines.append("locations " + " ".join(marks) + ";")
    for r in base.rules:
        line = f"rule {r.id}: {r.source} -> {r.target} when {r.guard_text()}"
        if r.update:
            line += " do " + ", ".join(", ".join([v + "++"] * inc) for v, inc in r.update)
        lines.append(line + ";")
    if isinstance(ta, MultiRoundTA):
        for r in ta.round_switch:
            lines.append(f"roundswitch {r.source} -> {r.target};")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------- validation


@dataclass(frozen=True)
class Issue:
    kind: str
    message: str


@dataclass
class ValidationReport:
    issues: list[Issue] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.issues

    def kinds(self) -> set[str]:
        return {i.kind for i in self.issues}

    def __str__(self) -> str:
        if self.ok:
            return "valid"
        return "\n".join(f"{i.kind}: {i.message}" for i in self.issues)


def _successors(ta: ThresholdAutomaton) -> dict[str, list[Rule]]:
    succ: dict[str, list[Rule]] = {loc: [] for loc in ta.locations}
    for r in ta.rules:
        if not r.is_self_loop and r.source in succ:
            succ[r.source].append(r)
    return succ


def _find_cycle(ta: ThresholdAutomaton, succ: Mapping[str, list[Rule]]) -> list[str] | None:
    color = {loc: 0 for loc in ta.locations}
    for root in ta.locations:
        if color[root]:
            continue
        stack = [(root, iter(succ[root]))]
        path = [root]
        color[root] = 1
        while stack:
            loc, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[loc] = 2
                stack.pop()
                path.pop()
                continue
            target = nxt.target
            if color.get(target) == 1:
                return path[path.index(target):] + [target]
            if color.get(target) == 0:
                color[target] = 1
                path.append(target)
                stack.append((target, iter(succ[target])))
    return None


def _reachable_from(start: Iterable[str], succ: Mapping[str, list[Rule]]) -> set[str]:
    seen = set(start)
    queue = deque(seen)
    while queue:
        loc = queue.popleft()
        for r in succ.get(loc, ()):
            if r.target not in seen:
                seen.add(r.target)
                queue.append(r.target)
    return seen


def validate_ta(ta: ThresholdAutomaton | MultiRoundTA) -> ValidationReport:
    """Check the structural invariants; every finding goes into the report."""
    base = base_of(ta)
    report = ValidationReport()
    declared = set(base.locations)
    if not base.initial:
        report.issues.append(Issue("empty-initial", "no initial location"))
    for r in base.rules + (ta.round_switch if isinstance(ta, MultiRoundTA) else ()):
        for end in (r.source, r.target):
            if end not in declared:
                report.issues.append(Issue("undeclared", f"rule {r.id} uses unknown location {end}"))
        used = [v for atom in r.guard for v in atom.variables()] + [v for v, _ in r.update]
        for var in used:
            if var not in base.shared:
                report.issues.append(Issue("undeclared", f"rule {r.id} uses unknown variable {var}"))
    if report.issues:
        return report

    succ = _successors(base)
    cycle = _find_cycle(base, succ)
    if cycle:
        report.issues.append(Issue("cycle", "non-self-loop cycle " + " -> ".join(cycle)))

    # A variable is incremented twice on a path if some incrementing rule
    # can reach another incrementing rule for the same variable.
    for var in base.shared:
        incrementers = [r for r in base.rules if any(v == var for v, _ in r.update)]
        for first in incrementers:
            downstream = _reachable_from([first.target], succ)
            for second in incrementers:
                if second.source in downstream and (second is not first or cycle):
                    report.issues.append(
                        Issue(
                            "double-increment",
                            f"{var} incremented by {first.id} and again by {second.id} on path "
                            f"{first.source} -> {first.target} ... {second.source} -> {second.target}",
                        )
                    )

    reachable = _reachable_from(base.initial, succ)
    for loc in base.locations:
        if loc not in reachable:
            report.issues.append(Issue("unreachable", f"location {loc} unreachable from the initial set"))

    if isinstance(ta, MultiRoundTA):
        for r in ta.round_switch:
            if r.source not in base.final:
                report.issues.append(Issue("round-switch", f"{r.id} leaves non-final {r.source}"))
            if r.target not in base.initial:
                report.issues.append(Issue("round-switch", f"{r.id} enters non-initial {r.target}"))
            if r.guard or r.update:
                report.issues.append(Issue("round-switch", f"{r.id} must have guard true and no update"))
    return report


# ------------------------------------------------------------- DOT export


def _dot_id(name: str) -> str:
    return '"' + name.replace('"', '\\"') + '"'


def export_dot(ta: ThresholdAutomaton | MultiRoundTA) -> str:
    """Graphviz rendering; edges are sorted by rule id so output is stable."""
    base = base_of(ta)
    lines = [f"digraph {_dot_id(base.name)} {{", "  rankdir=LR;", "  node [shape=circle];"]
    for loc in base.locations:
        attrs = []
        if loc in base.initial:
            attrs.append('style=filled, fillcolor="lightyellow"')
        if loc in base.final:
            attrs.append('style=filled, fillcolor="lightblue", peripheries=2')
        suffix = f" [{', '.join(attrs)}]" if attrs else ""
        lines.append(f"  {_dot_id(loc)}{suffix};")
    edges = [(r, False) for r in base.rules]
    if isinstance(ta, MultiRoundTA):
        edges += [(r, True) for r in ta.round_switch]
    for r, is_switch in sorted(edges, key=lambda e: e[0].id):
        label = f"{r.id}: {r.guard_text()}"
        if r.update:
            label += " ↦ " + r.update_text()
        style = ", style=dotted" if is_switch else ""
        lines.append(f"  {_dot_id(r.source)} -> {_dot_id(r.target)} [label={_dot_id(label)}{style}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
