"""Temporal properties over counter-system configurations.

Properties use a C-like concrete syntax::

    inv1_0: <>(locD0 != 0) -> [](locD1 == 0 && locE1x == 0);

``locX`` denotes the number of processes in location ``X``; other
identifiers are shared variables, except ``N``, ``T`` and ``F`` (any case)
which are the parameters. Only five temporal shapes are accepted, see
:class:`Shape`.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Callable, Sequence, Union

from .ta import PARAM_NAMES, Affine, ThresholdAutomaton, format_linear


class PropertySyntaxError(ValueError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        where = f"line {line}, column {column}: " if line else ""
        super().__init__(where + message)
        self.line = line
        self.column = column


class ShapeError(PropertySyntaxError):
    """The formula is well-formed LTL but not one of the supported shapes."""


class UnknownIdentifierError(PropertySyntaxError):
    pass


class Shape(enum.Enum):
    SAFETY_GG = "[]p -> []q"
    SAFETY_FG = "<>p -> []q"
    LIVENESS_FGF = "<>[]A -> <>B"
    PLAIN_G = "[]q"
    PLAIN_F = "<>q"

    @property
    def is_safety(self) -> bool:
        return self in (Shape.SAFETY_GG, Shape.SAFETY_FG, Shape.PLAIN_G)


# ------------------------------------------------------------ state formulas

RELATIONS = ("<", "<=", ">", ">=", "==", "!=")
_NEGATED = {"<": ">=", ">=": "<", ">": "<=", "<=": ">", "==": "!=", "!=": "=="}


@dataclass(frozen=True)
class LocationEmpty:
    location: str

    def __str__(self) -> str:
        return f"loc{self.location} == 0"


@dataclass(frozen=True)
class LocationNonEmpty:
    location: str

    def __str__(self) -> str:
        return f"loc{self.location} != 0"


@dataclass(frozen=True)
class Compare:
    """``sum(coef * counter) op rhs``; a counter is a shared variable or ``loc<L>``."""

    terms: tuple[tuple[str, int], ...]
    op: str
    rhs: Affine

    def __str__(self) -> str:
        rhs = format_linear([(p.upper(), c) for p, c in self.rhs.coeffs], self.rhs.const)
        return f"{format_linear(list(self.terms))} {self.op} {rhs}"


@dataclass(frozen=True)
class And:
    parts: tuple["StateFormula", ...]

    def __str__(self) -> str:
        if not self.parts:
            return "true"
        return " && ".join(_wrap(p, Or) for p in self.parts)


@dataclass(frozen=True)
class Or:
    parts: tuple["StateFormula", ...]

    def __str__(self) -> str:
        if not self.parts:
            return "false"
        return " || ".join(_wrap(p, And) for p in self.parts)


StateFormula = Union[LocationEmpty, LocationNonEmpty, Compare, And, Or]
TRUE = And(())
FALSE = Or(())


def _wrap(part: StateFormula, parenthesize: type) -> str:
    text = str(part)
    return f"({text})" if isinstance(part, parenthesize) and part.parts else text


def negate(formula: StateFormula) -> StateFormula:
    """Push negation through to the atoms."""
    if isinstance(formula, LocationEmpty):
        return LocationNonEmpty(formula.location)
    if isinstance(formula, LocationNonEmpty):
        return LocationEmpty(formula.location)
    if isinstance(formula, Compare):
        return Compare(formula.terms, _NEGATED[formula.op], formula.rhs)
    if isinstance(formula, And):
        return Or(tuple(negate(p) for p in formula.parts))
    return And(tuple(negate(p) for p in formula.parts))


def counters(formula: StateFormula) -> set[str]:
    """All counter names (``locX`` or shared variables) a formula reads."""
    if isinstance(formula, (LocationEmpty, LocationNonEmpty)):
        return {"loc" + formula.location}
    if isinstance(formula, Compare):
        return {name for name, _ in formula.terms}
    return set().union(*(counters(p) for p in formula.parts)) if formula.parts else set()


def guard_formula(rule) -> StateFormula:
    """The guard of a TA rule as a state formula."""
    return And(tuple(Compare(atom.lhs, ">=", atom.rhs) for atom in rule.guard))


def progress_assumption(ta: ThresholdAutomaton) -> StateFormula:
    """States where no rule is both enabled by its guard and has a non-empty source.

    Under reliable communication a run eventually stays in such states, so the
    formula is the standard fairness premise of liveness properties. Self-loops
    are skipped because firing them changes nothing.
    """
    parts = []
    for rule in ta.rules:
        if rule.is_self_loop:
            continue
        empty = LocationEmpty(rule.source)
        if not rule.guard:
            parts.append(empty)
        else:
            negated = negate(guard_formula(rule))
            parts.append(Or((empty, *negated.parts)))
    return And(tuple(dict.fromkeys(parts)))


# ------------------------------------------------------------ properties


@dataclass(frozen=True)
class Property:
    """A named formula of one supported shape.

    ``premise`` is ``p`` for the safety shapes and ``A`` for the liveness
    shape; it is ``true`` for the plain shapes. ``conclusion`` is ``q`` or
    ``B``.
    """

    name: str
    shape: Shape
    premise: StateFormula
    conclusion: StateFormula

    def formula_text(self) -> str:
        p, q = self.premise, self.conclusion
        if self.shape is Shape.SAFETY_GG:
            return f"[]({p}) -> []({q})"
        if self.shape is Shape.SAFETY_FG:
            return f"<>({p}) -> []({q})"
        if self.shape is Shape.LIVENESS_FGF:
            return f"<>[]({p}) -> <>({q})"
        if self.shape is Shape.PLAIN_G:
            return f"[]({q})"
        return f"<>({q})"

    def __str__(self) -> str:
        return f"{self.name}: {self.formula_text()};"


# ------------------------------------------------------------ parsing

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>//[^\n]*|/\*.*?\*/)
  | (?P<num>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>\[\]|<>|->|&&|\|\||==|!=|<=|>=|[-+*<>!():;])
    """,
    re.VERBOSE | re.DOTALL,
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Tok]:
    out = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise PropertySyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        chunk = m.group()
        if m.lastgroup not in ("ws", "comment"):
            out.append(_Tok(m.lastgroup, chunk, line, pos - line_start + 1))
        if "\n" in chunk:
            line += chunk.count("\n")
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    out.append(_Tok("eof", "", line, pos - line_start + 1))
    return out


# Temporal syntax tree, produced before shape classification.
@dataclass(frozen=True)
class _Always:
    body: object


@dataclass(frozen=True)
class _Eventually:
    body: object


@dataclass(frozen=True)
class _Implies:
    left: object
    right: object


@dataclass(frozen=True)
class _Not:
    body: object


@dataclass(frozen=True)
class _RawAtom:
    left: tuple[tuple[str, int], ...]
    left_const: int
    op: str
    right: tuple[tuple[str, int], ...]
    right_const: int
    line: int
    column: int


@dataclass(frozen=True)
class _Junction:
    kind: str  # "&&" or "||"
    parts: tuple


def _show(node) -> str:
    if isinstance(node, _Always):
        return f"[]({_show(node.body)})"
    if isinstance(node, _Eventually):
        return f"<>({_show(node.body)})"
    if isinstance(node, _Implies):
        return f"{_show(node.left)} -> {_show(node.right)}"
    if isinstance(node, _Not):
        return f"!({_show(node.body)})"
    if isinstance(node, _Junction):
        if not node.parts:
            return "true" if node.kind == "&&" else "false"
        return f" {node.kind} ".join(f"({_show(p)})" for p in node.parts)
    left = format_linear(list(node.left), node.left_const)
    right = format_linear(list(node.right), node.right_const)
    return f"{left} {node.op} {right}"


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.pos = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.pos]

    def error(self, message: str) -> PropertySyntaxError:
        return PropertySyntaxError(message, self.tok.line, self.tok.column)

    def advance(self) -> _Tok:
        tok = self.tok
        self.pos += 1
        return tok

    def expect(self, text: str) -> _Tok:
        if self.tok.text != text or self.tok.kind == "eof":
            raise self.error(f"expected {text!r} but found {self.tok.text or 'end of input'!r}")
        return self.advance()

    def items(self) -> list[tuple[str, object, _Tok]]:
        found = []
        while self.tok.kind != "eof":
            if self.tok.kind != "ident":
                raise self.error(f"expected a property name but found {self.tok.text!r}")
            name_tok = self.advance()
            self.expect(":")
            formula = self.formula()
            self.expect(";")
            found.append((name_tok.text, formula, name_tok))
        return found

    def formula(self):
        left = self.disjunction()
        if self.tok.text == "->":
            self.advance()
            return _Implies(left, self.formula())
        return left

    def disjunction(self):
        parts = [self.conjunction()]
        while self.tok.text == "||":
            self.advance()
            parts.append(self.conjunction())
        return parts[0] if len(parts) == 1 else _Junction("||", tuple(parts))

    def conjunction(self):
        parts = [self.unary()]
        while self.tok.text == "&&":
            self.advance()
            parts.append(self.unary())
        return parts[0] if len(parts) == 1 else _Junction("&&", tuple(parts))

    def unary(self):
        if self.tok.text == "[]":
            self.advance()
            return _Always(self.unary())
        if self.tok.text == "<>":
            self.advance()
            return _Eventually(self.unary())
        if self.tok.text == "!":
            self.advance()
            return _Not(self.unary())
        if self.tok.text == "(":
            self.advance()
            inner = self.formula()
            self.expect(")")
            return inner
        return self.atom()

    def atom(self):
        start = self.tok
        if start.kind == "ident" and start.text in ("true", "false"):
            self.advance()
            return _Junction("&&" if start.text == "true" else "||", ())
        left, lconst = self.linear()
        if self.tok.text not in RELATIONS:
            raise self.error(f"expected a comparison but found {self.tok.text or 'end of input'!r}")
        op = self.advance().text
        right, rconst = self.linear()
        return _RawAtom(left, lconst, op, right, rconst, start.line, start.column)

    def linear(self) -> tuple[tuple[tuple[str, int], ...], int]:
        terms: dict[str, int] = {}
        const = 0
        sign = 1
        if self.tok.text == "-":
            self.advance()
            sign = -1
        while True:
            if self.tok.kind == "num":
                value = int(self.advance().text)
                if self.tok.text == "*":
                    self.advance()
                    name = self.identifier()
                    terms[name] = terms.get(name, 0) + sign * value
                else:
                    const += sign * value
            else:
                name = self.identifier()
                terms[name] = terms.get(name, 0) + sign
            if self.tok.text == "+":
                sign = 1
            elif self.tok.text == "-":
                sign = -1
            else:
                return tuple(terms.items()), const
            self.advance()

    def identifier(self) -> str:
        if self.tok.kind != "ident":
            raise self.error(f"expected an identifier but found {self.tok.text or 'end of input'!r}")
        return self.advance().text


def _is_state(node) -> bool:
    if isinstance(node, _RawAtom):
        return True
    if isinstance(node, _Junction):
        return all(_is_state(p) for p in node.parts)
    if isinstance(node, _Not):
        return _is_state(node.body)
    return False


def _classify(node, tok: _Tok) -> tuple[Shape, object, object]:
    def fail(culprit) -> ShapeError:
        return ShapeError(
            f"unsupported formula shape at {_show(culprit)!r}; expected one of "
            + ", ".join(s.value for s in Shape),
            tok.line,
            tok.column,
        )

    if isinstance(node, _Implies):
        left, right = node.left, node.right
        if isinstance(right, _Always) and _is_state(right.body):
            if isinstance(left, _Always) and _is_state(left.body):
                return Shape.SAFETY_GG, left.body, right.body
            if isinstance(left, _Eventually) and _is_state(left.body):
                return Shape.SAFETY_FG, left.body, right.body
            raise fail(left)
        if isinstance(right, _Eventually) and _is_state(right.body):
            if (
                isinstance(left, _Eventually)
                and isinstance(left.body, _Always)
                and _is_state(left.body.body)
            ):
                return Shape.LIVENESS_FGF, left.body.body, right.body
            raise fail(node)
        raise fail(node)
    if isinstance(node, _Always) and _is_state(node.body):
        return Shape.PLAIN_G, None, node.body
    if isinstance(node, _Eventually) and _is_state(node.body):
        return Shape.PLAIN_F, None, node.body
    raise fail(node)


class _Resolver:
    def __init__(self, ta: ThresholdAutomaton | None):
        self.ta = ta

    def kind(self, name: str, line: int, column: int) -> tuple[str, str]:
        ta = self.ta
        if ta is not None and name in ta.shared:
            return "var", name
        if name.lower() in PARAM_NAMES and len(name) == 1:
            return "param", name.lower()
        if name.startswith("loc") and len(name) > 3:
            loc = name[3:]
            if ta is None or loc in ta.locations:
                return "loc", loc
        if ta is None:
            return "var", name
        raise UnknownIdentifierError(f"unknown identifier {name!r}", line, column)

    def atom(self, raw: _RawAtom) -> StateFormula:
        counts: dict[str, int] = {}
        params: dict[str, int] = {}
        for side, sign in ((raw.left, 1), (raw.right, -1)):
            for name, coef in side:
                kind, resolved = self.kind(name, raw.line, raw.column)
                if kind == "param":
                    # Parameters move to the right-hand side.
                    params[resolved] = params.get(resolved, 0) - sign * coef
                else:
                    key = "loc" + resolved if kind == "loc" else resolved
                    counts[key] = counts.get(key, 0) + sign * coef
        terms = tuple((k, c) for k, c in counts.items() if c != 0)
        rhs = Affine.of(params, raw.right_const - raw.left_const)
        if not terms:
            raise PropertySyntaxError("comparison does not mention any counter", raw.line, raw.column)
        if len(terms) == 1 and terms[0][0].startswith("loc") and terms[0][1] == 1 and rhs == Affine.of():
            loc = terms[0][0][3:]
            if raw.op == "==":
                return LocationEmpty(loc)
            if raw.op == "!=":
                return LocationNonEmpty(loc)
        return Compare(terms, raw.op, rhs)

    def state(self, node) -> StateFormula:
        if isinstance(node, _RawAtom):
            return self.atom(node)
        if isinstance(node, _Not):
            return negate(self.state(node.body))
        parts = tuple(self.state(p) for p in node.parts)
        return And(parts) if node.kind == "&&" else Or(parts)


def parse_properties(text: str, ta: ThresholdAutomaton | None = None) -> list[Property]:
    """Parse every ``name: formula;`` item of a property file.

    With ``ta`` given, location and variable names are checked against it.
    """
    resolver = _Resolver(ta)
    props = []
    seen = set()
    for name, node, tok in _Parser(text).items():
        if name in seen:
            raise PropertySyntaxError(f"duplicate property name {name!r}", tok.line, tok.column)
        seen.add(name)
        shape, premise, conclusion = _classify(node, tok)
        premise_f = TRUE if premise is None else resolver.state(premise)
        props.append(Property(name, shape, premise_f, resolver.state(conclusion)))
    return props


def parse_property(text: str, ta: ThresholdAutomaton | None = None) -> Property:
    props = parse_properties(text, ta)
    if len(props) != 1:
        raise PropertySyntaxError(f"expected exactly one property, found {len(props)}")
    return props[0]


def bind(prop: Property, ta: ThresholdAutomaton) -> Property:
    """Re-resolve ``prop`` against ``ta``, raising on unknown names."""
    return parse_property(str(prop), ta)


# ------------------------------------------------------------ evaluation

Predicate = Callable[[Sequence[int]], bool]


def compile_formula(formula: StateFormula, system) -> Predicate:
    """Turn ``formula`` into a predicate over raw states of ``system``.

    ``system`` is a :class:`tacheck.counter.CounterSystem`.
    """
    if isinstance(formula, LocationEmpty):
        i = _loc_slot(system, formula.location)
        return lambda s: s[i] == 0
    if isinstance(formula, LocationNonEmpty):
        i = _loc_slot(system, formula.location)
        return lambda s: s[i] != 0
    if isinstance(formula, Compare):
        slots = tuple((_counter_slot(system, name), c) for name, c in formula.terms)
        bound = formula.rhs.evaluate(system.params)
        op = formula.op
        if op == "<":
            return lambda s: sum(s[i] * c for i, c in slots) < bound
        if op == "<=":
            return lambda s: sum(s[i] * c for i, c in slots) <= bound
        if op == ">":
            return lambda s: sum(s[i] * c for i, c in slots) > bound
        if op == ">=":
            return lambda s: sum(s[i] * c for i, c in slots) >= bound
        if op == "==":
            return lambda s: sum(s[i] * c for i, c in slots) == bound
        return lambda s: sum(s[i] * c for i, c in slots) != bound
    parts = [compile_formula(p, system) for p in formula.parts]
    if isinstance(formula, And):
        return lambda s: all(p(s) for p in parts)
    return lambda s: any(p(s) for p in parts)


def _loc_slot(system, location: str) -> int:
    try:
        return system.loc_index[location]
    except KeyError:
        raise UnknownIdentifierError(f"unknown location {location!r}") from None


def _counter_slot(system, name: str) -> int:
    if name.startswith("loc") and name[3:] in system.loc_index:
        return system.loc_index[name[3:]]
    try:
        return system.var_index[name]
    except KeyError:
        raise UnknownIdentifierError(f"unknown identifier {name!r}") from None


def evaluate(formula: StateFormula, config) -> bool:
    """Evaluate a state formula on a :class:`tacheck.counter.Configuration`."""
    values = dict(zip(("loc" + loc for loc in config.locations), config.kappa))
    values.update(zip(config.shared, config.g))
    return _eval(formula, values, config.params)


def _eval(formula: StateFormula, values: dict[str, int], params) -> bool:
    if isinstance(formula, LocationEmpty):
        return values["loc" + formula.location] == 0
    if isinstance(formula, LocationNonEmpty):
        return values["loc" + formula.location] != 0
    if isinstance(formula, Compare):
        total = sum(values[name] * c for name, c in formula.terms)
        bound = formula.rhs.evaluate(params)
        return {
            "<": total < bound,
            "<=": total <= bound,
            ">": total > bound,
            ">=": total >= bound,
            "==": total == bound,
            "!=": total != bound,
        }[formula.op]
    if isinstance(formula, And):
        return all(_eval(p, values, params) for p in formula.parts)
    return any(_eval(p, values, params) for p in formula.parts)
