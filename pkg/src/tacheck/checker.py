"""Explicit-state checking of the supported property shapes.

Runs always admit a global stutter step, so every reachable state is the
start of an infinite run that stays there. Consequently a liveness
counterexample is a path that avoids the goal ``B`` up to a state where
``A`` holds, followed by stuttering in that state.
"""

from __future__ import annotations

import enum
import json
import logging
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .counter import (
    BudgetExhaustedError,
    Configuration,
    CounterSystem,
    LockedRuleError,
    apply_rule,
    default_budget,
    initial_configs,
    round_entry_fixpoint,
    system_for,
)
from .props import Property, Shape, compile_formula, evaluate
from .ta import MultiRoundTA, Parameters, ThresholdAutomaton, base_of

log = logging.getLogger(__name__)

STUTTER = "stutter"


class Outcome(enum.Enum):
    HOLDS = "holds"
    SAFETY_COUNTEREXAMPLE = "safety-counterexample"
    LIVENESS_COUNTEREXAMPLE = "liveness-counterexample"
    BUDGET_EXHAUSTED = "budget-exhausted"


@dataclass(frozen=True)
class Step:
    """The configuration reached by firing ``rule`` (``None`` for the first state)."""

    rule: str | None
    config: Configuration


@dataclass
class Verdict:
    name: str
    shape: Shape
    params: Parameters
    outcome: Outcome
    trace: list[Step] = field(default_factory=list)
    loop: list[Step] = field(default_factory=list)
    states_explored: int = 0
    millis: float = 0.0

    @property
    def holds(self) -> bool:
        return self.outcome is Outcome.HOLDS

    @property
    def is_counterexample(self) -> bool:
        return self.outcome in (Outcome.SAFETY_COUNTEREXAMPLE, Outcome.LIVENESS_COUNTEREXAMPLE)

    def to_json(self, include_timings: bool = True) -> dict:
        doc = {
            "name": self.name,
            "shape": self.shape.value,
            "params": list(self.params.as_tuple()),
            "result": self.outcome.value,
            "states_explored": self.states_explored,
        }
        if self.is_counterexample:
            doc["trace"] = [_step_json(s) for s in self.trace]
            if self.outcome is Outcome.LIVENESS_COUNTEREXAMPLE:
                doc["loop"] = [_step_json(s) for s in self.loop]
        if include_timings:
            doc["millis"] = round(self.millis, 3)
        return doc


def _step_json(step: Step) -> dict:
    return {
        "rule": step.rule,
        "kappa": step.config.kappa_map(),
        "g": step.config.g_map(),
    }


def _path(parents: dict, node) -> list[tuple]:
    path = []
    while node is not None:
        entry = parents[node]
        path.append((node, entry[1]))
        node = entry[0]
    path.reverse()
    return path


def _to_steps(system: CounterSystem, nodes: Sequence[tuple], state_of=lambda n: n) -> list[Step]:
    return [
        Step(None if rule is None else rule.id, system.wrap(state_of(node))) for node, rule in nodes
    ]


def check_property(
    ta: ThresholdAutomaton | MultiRoundTA,
    params: Parameters,
    prop: Property,
    initials: Iterable[Configuration],
    budget: int | None = None,
    allow_unsafe: bool = False,
) -> Verdict:
    if prop.shape.is_safety:
        return check_safety(ta, params, prop, initials, budget, allow_unsafe)
    return check_liveness(ta, params, prop, initials, budget, allow_unsafe)


def check_safety(
    ta: ThresholdAutomaton | MultiRoundTA,
    params: Parameters,
    prop: Property,
    initials: Iterable[Configuration],
    budget: int | None = None,
    allow_unsafe: bool = False,
) -> Verdict:
    """Decide a ``[]p -> []q``, ``<>p -> []q`` or ``[]q`` property by reachability."""
    if not prop.shape.is_safety:
        raise ValueError(f"{prop.name} is not a safety property")
    started = time.perf_counter()
    system = system_for(ta, params, allow_unsafe)
    budget = default_budget() if budget is None else budget
    premise = compile_formula(prop.premise, system)
    conclusion = compile_formula(prop.conclusion, system)
    starts = [system.state_of(c) for c in initials]

    if prop.shape is Shape.SAFETY_FG:
        # Search nodes carry (state, saw a premise state, saw a violating state).
        def node_of(state, flags=(False, False)):
            return (state, flags[0] or premise(state), flags[1] or not conclusion(state))

        roots = [node_of(s) for s in starts]
        allowed = None
        is_goal = lambda node: node[1] and node[2]
        expand = lambda node, nxt: node_of(nxt, node[1:])
        state_of = lambda node: node[0]
    else:
        gate = premise if prop.shape is Shape.SAFETY_GG else None
        roots = list(starts)
        allowed = gate
        is_goal = lambda state: not conclusion(state)
        expand = lambda node, nxt: nxt
        state_of = lambda node: node

    parents: dict = {}
    queue: deque = deque()
    found = None
    exhausted = False
    for root in roots:
        if allowed is not None and not allowed(state_of(root)):
            continue
        if root not in parents:
            parents[root] = (None, None)
            queue.append(root)
            if is_goal(root):
                found = root
                break
    while queue and found is None:
        node = queue.popleft()
        for rule, nxt_state in system.successors(state_of(node)):
            if allowed is not None and not allowed(nxt_state):
                continue
            nxt = expand(node, nxt_state)
            if nxt in parents:
                continue
            if len(parents) >= budget:
                exhausted = True
                break
            parents[nxt] = (node, rule)
            if is_goal(nxt):
                found = nxt
                break
            queue.append(nxt)
        if exhausted:
            break

    verdict = Verdict(prop.name, prop.shape, params, Outcome.HOLDS, states_explored=len(parents))
    if found is not None:
        verdict.outcome = Outcome.SAFETY_COUNTEREXAMPLE
        verdict.trace = _to_steps(system, _path(parents, found), state_of)
    elif exhausted:
        verdict.outcome = Outcome.BUDGET_EXHAUSTED
    verdict.millis = (time.perf_counter() - started) * 1000
    return verdict


def check_liveness(
    ta: ThresholdAutomaton | MultiRoundTA,
    params: Parameters,
    prop: Property,
    initials: Iterable[Configuration],
    budget: int | None = None,
    allow_unsafe: bool = False,
) -> Verdict:
    """Decide ``<>[]A -> <>B`` (or ``<>B``) by searching for a lasso avoiding ``B``.

    The stutter step makes every state its own cycle, so the lasso search
    reduces to finding a state satisfying ``A`` and not ``B`` that is
    reachable without passing through ``B``.
    """
    if prop.shape.is_safety:
        raise ValueError(f"{prop.name} is not a liveness property")
    started = time.perf_counter()
    system = system_for(ta, params, allow_unsafe)
    budget = default_budget() if budget is None else budget
    assumption = compile_formula(prop.premise, system)
    goal = compile_formula(prop.conclusion, system)

    parents: dict = {}
    queue: deque = deque()
    found = None
    exhausted = False
    for config in initials:
        state = system.state_of(config)
        if goal(state) or state in parents:
            continue
        parents[state] = (None, None)
        if assumption(state):
            found = state
            break
        queue.append(state)
    while queue and found is None:
        state = queue.popleft()
        for rule, nxt in system.successors(state):
            if nxt in parents or goal(nxt):
                continue
            if len(parents) >= budget:
                exhausted = True
                break
            parents[nxt] = (state, rule)
            if assumption(nxt):
                found = nxt
                break
            queue.append(nxt)
        if exhausted:
            break

    verdict = Verdict(prop.name, prop.shape, params, Outcome.HOLDS, states_explored=len(parents))
    if found is not None:
        verdict.outcome = Outcome.LIVENESS_COUNTEREXAMPLE
        verdict.trace = _to_steps(system, _path(parents, found))
        verdict.loop = [Step(STUTTER, system.wrap(found))]
    elif exhausted:
        verdict.outcome = Outcome.BUDGET_EXHAUSTED
    verdict.millis = (time.perf_counter() - started) * 1000
    return verdict


def replay_counterexample(ta: ThresholdAutomaton | MultiRoundTA, prop: Property, verdict: Verdict) -> bool:
    """Re-execute a counterexample with the rule semantics and confirm the violation."""
    if not verdict.is_counterexample or not verdict.trace:
        return False
    configs = [verdict.trace[0].config]
    try:
        for step in verdict.trace[1:]:
            nxt = apply_rule(ta, configs[-1], step.rule)
            if nxt != step.config:
                return False
            configs.append(nxt)
        loop_configs = []
        current = configs[-1]
        for step in verdict.loop:
            if step.rule != STUTTER:
                current = apply_rule(ta, current, step.rule)
            if current != step.config:
                return False
            loop_configs.append(current)
    except LockedRuleError:
        return False
    if verdict.loop and loop_configs[-1] != configs[-1]:
        return False

    premise = lambda c: evaluate(prop.premise, c)
    conclusion = lambda c: evaluate(prop.conclusion, c)
    if prop.shape is Shape.SAFETY_GG:
        return all(premise(c) for c in configs) and not conclusion(configs[-1])
    if prop.shape is Shape.PLAIN_G:
        return not conclusion(configs[-1])
    if prop.shape is Shape.SAFETY_FG:
        return any(premise(c) for c in configs) and any(not conclusion(c) for c in configs)
    if not verdict.loop:
        return False
    return all(premise(c) for c in loop_configs) and not any(conclusion(c) for c in configs + loop_configs)


# ---------------------------------------------------------------- suites


@dataclass
class SuiteReport:
    model: str
    verdicts: list[Verdict] = field(default_factory=list)

    @property
    def all_hold(self) -> bool:
        return all(v.holds for v in self.verdicts)

    def exit_code(self) -> int:
        if any(v.is_counterexample for v in self.verdicts):
            return 1
        if any(v.outcome is Outcome.BUDGET_EXHAUSTED for v in self.verdicts):
            return 2
        return 0

    def to_json(self, include_timings: bool = True) -> dict:
        return {
            "model": self.model,
            "verdicts": [v.to_json(include_timings) for v in self.verdicts],
        }

    def dumps(self, include_timings: bool = True) -> str:
        return json.dumps(self.to_json(include_timings), indent=2, sort_keys=True) + "\n"

    def table(self, include_timings: bool = True) -> str:
        header = ["property", "params", "shape", "result", "states"]
        if include_timings:
            header.append("ms")
        rows = []
        for v in self.verdicts:
            row = [v.name, str(v.params), v.shape.value, v.outcome.value, str(v.states_explored)]
            if include_timings:
                row.append(f"{v.millis:.1f}")
            rows.append(row)
        return format_table(header, rows)


def format_table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(str(x)) for x in col) for col in zip(header, *rows)] if rows else [len(h) for h in header]
    lines = ["  ".join(str(h).ljust(w) for h, w in zip(header, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines.extend("  ".join(str(c).ljust(w) for c, w in zip(row, widths)) for row in rows)
    return "\n".join(line.rstrip() for line in lines) + "\n"


def entry_configs(
    ta: ThresholdAutomaton | MultiRoundTA,
    params: Parameters,
    allow_unsafe: bool = False,
    budget: int | None = None,
) -> list[Configuration]:
    """Initial configurations for one-round checking.

    Multi-round automata use the enlarged set of all reachable round entries.
    """
    if isinstance(ta, MultiRoundTA):
        return round_entry_fixpoint(ta, params, allow_unsafe=allow_unsafe, budget=budget)
    return initial_configs(ta, params, allow_unsafe=allow_unsafe)


def check_suite(
    ta: ThresholdAutomaton | MultiRoundTA,
    params_list: Iterable[Parameters],
    suite: Sequence[Property],
    allow_unsafe: bool = False,
    budget: int | None = None,
    model: str | None = None,
) -> SuiteReport:
    """Check every property of ``suite`` at every parameter instance."""
    report = SuiteReport(model or base_of(ta).name)
    for params in params_list:
        try:
            initials = entry_configs(ta, params, allow_unsafe, budget)
        except BudgetExhaustedError:
            for prop in suite:
                report.verdicts.append(Verdict(prop.name, prop.shape, params, Outcome.BUDGET_EXHAUSTED))
            continue
        for prop in suite:
            verdict = check_property(ta, params, prop, initials, budget, allow_unsafe)
            log.info("%s at %s: %s (%d states)", prop.name, params, verdict.outcome.value, verdict.states_explored)
            report.verdicts.append(verdict)
    return report
