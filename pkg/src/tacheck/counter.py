"""Counter-system semantics of threshold automata at fixed parameters.

A configuration records how many correct processes sit in each location
(``kappa``) and the value of every shared variable (``g``). Internally a
state is the flat tuple ``kappa + g``; :class:`Configuration` is the public
wrapper with name-based accessors.
"""

from __future__ import annotations

import itertools
import json
import os
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from .ta import MultiRoundTA, Parameters, Rule, ThresholdAutomaton, base_of

DEFAULT_BUDGET = 10**7
BUDGET_ENV = "TACHECK_BUDGET"


def default_budget() -> int:
    """State budget from the environment, falling back to ``DEFAULT_BUDGET``."""
    raw = os.environ.get(BUDGET_ENV)
    return int(raw) if raw else DEFAULT_BUDGET


class LockedRuleError(ValueError):
    """A rule was applied in a configuration where it is not unlocked."""


class MalformedRunError(ValueError):
    """A multi-round run does not replay from its initial configuration."""


@dataclass(frozen=True)
class Configuration:
    kappa: tuple[int, ...]
    g: tuple[int, ...]
    params: Parameters = field(compare=False)
    locations: tuple[str, ...] = field(compare=False, repr=False)
    shared: tuple[str, ...] = field(compare=False, repr=False)

    def count(self, location: str) -> int:
        return self.kappa[self.locations.index(location)]

    def value(self, var: str) -> int:
        return self.g[self.shared.index(var)]

    def kappa_map(self) -> dict[str, int]:
        return dict(zip(self.locations, self.kappa))

    def g_map(self) -> dict[str, int]:
        return dict(zip(self.shared, self.g))

    @property
    def state(self) -> tuple[int, ...]:
        return self.kappa + self.g

    def describe(self) -> str:
        occupied = ", ".join(f"{loc}={c}" for loc, c in zip(self.locations, self.kappa) if c)
        values = ", ".join(f"{v}={x}" for v, x in zip(self.shared, self.g))
        return f"[{occupied} | {values}]"


@dataclass(frozen=True)
class Transition:
    rule: str
    round: int = 0

    def __str__(self) -> str:
        return f"{self.rule}@{self.round}"


@dataclass(frozen=True)
class _CompiledRule:
    id: str
    index: int
    source: int
    target: int
    atoms: tuple[tuple[tuple[tuple[int, int], ...], int], ...]
    update: tuple[tuple[int, int], ...]


class CounterSystem:
    """The counter system of one automaton at one parameter instance."""

    def __init__(self, ta: ThresholdAutomaton, params: Parameters, allow_unsafe: bool = False):
        ta.check_params(params, allow_unsafe)
        self.ta = ta
        self.params = params
        self.locations = ta.locations
        self.shared = ta.shared
        self.nloc = len(ta.locations)
        self.loc_index = {loc: i for i, loc in enumerate(ta.locations)}
        self.var_index = {v: self.nloc + i for i, v in enumerate(ta.shared)}
        self.rules = tuple(self._compile(i, r) for i, r in enumerate(ta.rules))
        self.rule_index = {r.id: r for r in self.rules}

    def _compile(self, index: int, rule: Rule) -> _CompiledRule:
        atoms = tuple(
            (tuple((self.var_index[v], c) for v, c in atom.lhs), atom.rhs.evaluate(self.params))
            for atom in rule.guard
        )
        update = tuple((self.var_index[v], inc) for v, inc in rule.update)
        return _CompiledRule(
            rule.id, index, self.loc_index[rule.source], self.loc_index[rule.target], atoms, update
        )

    # -- raw states

    def wrap(self, state: Sequence[int]) -> Configuration:
        state = tuple(state)
        return Configuration(state[: self.nloc], state[self.nloc :], self.params, self.locations, self.shared)

    def initial_states(self, restriction=None) -> list[tuple[int, ...]]:
        initial = [self.loc_index[loc] for loc in self.ta.initial]
        zeros = (0,) * len(self.shared)
        states = []
        for split in compositions(self.params.correct, len(initial)):
            kappa = [0] * self.nloc
            for idx, count in zip(initial, split):
                kappa[idx] = count
            if restriction is not None and not _split_allowed(restriction, dict(zip(self.ta.initial, split))):
                continue
            states.append(tuple(kappa) + zeros)
        return states

    def unlocked(self, rule: _CompiledRule, state: Sequence[int]) -> bool:
        if state[rule.source] < 1:
            return False
        for terms, threshold in rule.atoms:
            if sum(state[i] * c for i, c in terms) < threshold:
                return False
        return True

    def fire(self, rule: _CompiledRule, state: Sequence[int]) -> tuple[int, ...]:
        if rule.source == rule.target:
            return tuple(state)
        nxt = list(state)
        nxt[rule.source] -= 1
        nxt[rule.target] += 1
        for i, inc in rule.update:
            nxt[i] += inc
        return tuple(nxt)

    def successors(self, state: Sequence[int]) -> Iterator[tuple[_CompiledRule, tuple[int, ...]]]:
        for rule in self.rules:
            if self.unlocked(rule, state):
                yield rule, self.fire(rule, state)

    def state_of(self, config: Configuration) -> tuple[int, ...]:
        if config.locations != self.locations or config.shared != self.shared:
            raise ValueError("configuration belongs to a different automaton")
        return config.kappa + config.g


def compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """All tuples of ``parts`` non-negative integers summing to ``total``, first part descending."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in compositions(total - first, parts - 1):
            yield (first,) + rest


def _split_allowed(restriction, split: dict[str, int]) -> bool:
    if callable(restriction):
        return bool(restriction(split))
    return all(split.get(loc, 0) == count for loc, count in restriction.items())


@lru_cache(maxsize=64)
def _system(ta: ThresholdAutomaton, params: Parameters, allow_unsafe: bool) -> CounterSystem:
    return CounterSystem(ta, params, allow_unsafe)


def system_for(ta: ThresholdAutomaton | MultiRoundTA, params: Parameters, allow_unsafe: bool = False) -> CounterSystem:
    return _system(base_of(ta), params, allow_unsafe)


def initial_configs(
    ta: ThresholdAutomaton | MultiRoundTA,
    params: Parameters,
    restriction: Mapping[str, int] | Callable[[dict[str, int]], bool] | None = None,
    allow_unsafe: bool = False,
) -> list[Configuration]:
    """Every split of the ``n - f`` correct processes over the initial locations.

    ``restriction`` is either a mapping of required initial counts, such as
    ``{"V1": 0}``, or a predicate over the split.
    """
    system = system_for(ta, params, allow_unsafe)
    return [system.wrap(s) for s in system.initial_states(restriction)]


def _system_of_config(ta, config: Configuration) -> CounterSystem:
    # The configuration was built for some parameters; resilience was checked then.
    return system_for(ta, config.params, allow_unsafe=True)


def enabled_rules(ta: ThresholdAutomaton | MultiRoundTA, config: Configuration) -> list[str]:
    """Ids of the rules unlocked in ``config``, in declaration order."""
    system = _system_of_config(ta, config)
    state = system.state_of(config)
    return [r.id for r in system.rules if system.unlocked(r, state)]


def apply_rule(ta: ThresholdAutomaton | MultiRoundTA, config: Configuration, rule_id: str) -> Configuration:
    system = _system_of_config(ta, config)
    state = system.state_of(config)
    try:
        rule = system.rule_index[rule_id]
    except KeyError:
        raise LockedRuleError(f"unknown rule {rule_id!r}") from None
    if not system.unlocked(rule, state):
        raise LockedRuleError(f"rule {rule_id} is locked in {config.describe()}")
    return system.wrap(system.fire(rule, state))


@dataclass
class StateGraph:
    """Reachable states of a counter system with the rule-labeled edges between them."""

    system: CounterSystem
    states: list[tuple[int, ...]]
    index: dict[tuple[int, ...], int]
    edges: list[tuple[int, int, int]]
    initials: list[int]
    exhausted: bool = False

    def config(self, i: int) -> Configuration:
        return self.system.wrap(self.states[i])

    def configs(self) -> list[Configuration]:
        return [self.config(i) for i in range(len(self.states))]

    @property
    def state_count(self) -> int:
        return len(self.states)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def to_json(self) -> dict:
        sys = self.system
        return {
            "automaton": sys.ta.name,
            "params": list(sys.params.as_tuple()),
            "locations": list(sys.locations),
            "shared": list(sys.shared),
            "rules": [r.id for r in sys.rules],
            "states": [list(s) for s in self.states],
            "edges": [list(e) for e in self.edges],
            "initials": list(self.initials),
            "complete": not self.exhausted,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), separators=(",", ":"), sort_keys=True)


def explore(
    ta: ThresholdAutomaton | MultiRoundTA,
    params: Parameters,
    initials: Iterable[Configuration],
    budget: int | None = None,
    allow_unsafe: bool = False,
) -> StateGraph:
    """Breadth-first closure from ``initials`` with exact deduplication.

    When more than ``budget`` states would be stored, exploration stops and
    the graph is marked ``exhausted``; callers must not treat it as complete.
    """
    system = system_for(ta, params, allow_unsafe)
    budget = default_budget() if budget is None else budget
    return _explore_states(system, [system.state_of(c) for c in initials], budget)


def _explore_states(system: CounterSystem, starts: Iterable[tuple[int, ...]], budget: int) -> StateGraph:
    states: list[tuple[int, ...]] = []
    index: dict[tuple[int, ...], int] = {}
    edges: list[tuple[int, int, int]] = []
    initials: list[int] = []
    queue: deque[int] = deque()
    exhausted = False

    def intern(state) -> int | None:
        nonlocal exhausted
        found = index.get(state)
        if found is not None:
            return found
        if len(states) >= budget:
            exhausted = True
            return None
        index[state] = len(states)
        states.append(state)
        queue.append(index[state])
        return index[state]

    for s in starts:
        i = intern(tuple(s))
        if i is None:
            break
        if i not in initials:
            initials.append(i)
    while queue and not exhausted:
        i = queue.popleft()
        for rule, nxt in system.successors(states[i]):
            j = intern(nxt)
            if j is None:
                break
            edges.append((i, rule.index, j))
    return StateGraph(system, states, index, edges, initials, exhausted)


# ------------------------------------------------------------ multi-round


@dataclass(frozen=True)
class MultiRoundConfiguration:
    """Per-round ``(kappa, g)`` for every round touched so far."""

    rounds: tuple[tuple[int, tuple[int, ...], tuple[int, ...]], ...]
    params: Parameters = field(compare=False)

    def round(self, r: int) -> tuple[tuple[int, ...], tuple[int, ...]] | None:
        for idx, kappa, g in self.rounds:
            if idx == r:
                return kappa, g
        return None

    def total(self) -> int:
        return sum(sum(kappa) for _, kappa, _ in self.rounds)

    def round_indices(self) -> list[int]:
        return [idx for idx, _, _ in self.rounds]


@dataclass(frozen=True)
class MultiRoundRun:
    initial: MultiRoundConfiguration
    transitions: tuple[Transition, ...]


class MultiRoundSystem:
    """Counter system of a multi-round automaton; rounds are numbered from 1."""

    def __init__(self, mrta: MultiRoundTA, params: Parameters, allow_unsafe: bool = False):
        self.mrta = mrta
        self.base = system_for(mrta.base, params, allow_unsafe)
        self.params = params
        self.switches = {
            r.id: (self.base.loc_index[r.source], self.base.loc_index[r.target]) for r in mrta.round_switch
        }

    def initial(self, config: Configuration) -> MultiRoundConfiguration:
        return MultiRoundConfiguration(((1, config.kappa, config.g),), self.params)

    def _get(self, config: MultiRoundConfiguration, r: int):
        found = config.round(r)
        if found is None:
            return (0,) * self.base.nloc, (0,) * len(self.base.shared)
        return found

    def _with(self, config: MultiRoundConfiguration, updates: dict[int, tuple]) -> MultiRoundConfiguration:
        rounds = {idx: (kappa, g) for idx, kappa, g in config.rounds}
        rounds.update(updates)
        return MultiRoundConfiguration(
            tuple((idx, k, g) for idx, (k, g) in sorted(rounds.items())), self.params
        )

    def unlocked(self, config: MultiRoundConfiguration, tr: Transition) -> bool:
        kappa, g = self._get(config, tr.round)
        if tr.rule in self.switches:
            return kappa[self.switches[tr.rule][0]] >= 1
        rule = self.base.rule_index.get(tr.rule)
        if rule is None:
            return False
        return self.base.unlocked(rule, kappa + g)

    def apply(self, config: MultiRoundConfiguration, tr: Transition) -> MultiRoundConfiguration:
        if tr.round < 1:
            raise MalformedRunError(f"round index must be positive in {tr}")
        if not self.unlocked(config, tr):
            raise MalformedRunError(f"transition {tr} is locked")
        kappa, g = self._get(config, tr.round)
        nloc = self.base.nloc
        if tr.rule in self.switches:
            src, dst = self.switches[tr.rule]
            here = list(kappa)
            here[src] -= 1
            nk, ng = self._get(config, tr.round + 1)
            there = list(nk)
            there[dst] += 1
            return self._with(config, {tr.round: (tuple(here), g), tr.round + 1: (tuple(there), ng)})
        state = self.base.fire(self.base.rule_index[tr.rule], kappa + g)
        return self._with(config, {tr.round: (state[:nloc], state[nloc:])})

    def enabled(self, config: MultiRoundConfiguration, max_round: int | None = None) -> list[Transition]:
        result = []
        for idx, kappa, g in config.rounds:
            state = kappa + g
            for rule in self.base.rules:
                if self.base.unlocked(rule, state):
                    result.append(Transition(rule.id, idx))
            if max_round is not None and idx >= max_round:
                continue
            for rid, (src, _) in self.switches.items():
                if kappa[src] >= 1:
                    result.append(Transition(rid, idx))
        return result

    def replay(self, run: MultiRoundRun) -> list[MultiRoundConfiguration]:
        """All configurations of ``run``; raises :class:`MalformedRunError` on a locked step."""
        if run.initial.total() != self.params.correct:
            raise MalformedRunError("initial configuration does not hold n - f processes")
        configs = [run.initial]
        for step, tr in enumerate(run.transitions):
            try:
                configs.append(self.apply(configs[-1], tr))
            except MalformedRunError as exc:
                raise MalformedRunError(f"step {step}: {exc}") from None
        return configs


def normalize_round_rigid(mrta: MultiRoundTA, params: Parameters, run: MultiRoundRun) -> MultiRoundRun:
    """Reorder ``run`` so transitions appear in non-decreasing round order.

    Within one round the original order is kept. The result is checked by
    replay, so a bug in the commutation argument surfaces as an exception.
    """
    system = MultiRoundSystem(mrta, params, allow_unsafe=True)
    original_end = system.replay(run)[-1]
    ordered = MultiRoundRun(run.initial, tuple(sorted(run.transitions, key=lambda tr: tr.round)))
    normalized_end = system.replay(ordered)[-1]
    if normalized_end != original_end:
        raise AssertionError("normalization changed the final configuration")
    return ordered


def is_round_rigid(run: MultiRoundRun) -> bool:
    rounds = [tr.round for tr in run.transitions]
    return all(a <= b for a, b in zip(rounds, rounds[1:]))


# ----------------------------------------------------- round-entry fixpoint


def _project(system: CounterSystem, mrta: MultiRoundTA, kappa: Sequence[int]) -> list[tuple[int, ...]]:
    """Next-round initial states reachable through round-switch edges from a finished round."""
    targets: dict[int, list[int]] = {}
    for r in mrta.round_switch:
        targets.setdefault(system.loc_index[r.source], []).append(system.loc_index[r.target])
    choices: list[list[tuple[int, ...]]] = []
    for loc, count in enumerate(kappa):
        if not count:
            continue
        outs = sorted(set(targets.get(loc, [])))
        if not outs:
            return []
        per_loc = []
        for split in compositions(count, len(outs)):
            vec = [0] * system.nloc
            for dst, c in zip(outs, split):
                vec[dst] += c
            per_loc.append(tuple(vec))
        choices.append(per_loc)
    zeros = (0,) * len(system.shared)
    result = []
    for combo in itertools.product(*choices):
        kappa_next = tuple(sum(col) for col in zip(*combo)) if combo else (0,) * system.nloc
        result.append(kappa_next + zeros)
    return result


def _round_successors(
    system: CounterSystem, mrta: MultiRoundTA, starts: list[tuple[int, ...]], budget: int
) -> tuple[list[tuple[int, ...]], bool]:
    graph = _explore_states(system, starts, budget)
    final = {system.loc_index[loc] for loc in mrta.base.final}
    found: list[tuple[int, ...]] = []
    seen = set()
    for state in graph.states:
        kappa = state[: system.nloc]
        if all(c == 0 or i in final for i, c in enumerate(kappa)):
            for nxt in _project(system, mrta, kappa):
                if nxt not in seen:
                    seen.add(nxt)
                    found.append(nxt)
    return found, graph.exhausted


class BudgetExhaustedError(RuntimeError):
    """Exploration exceeded its state budget."""


def round_entry_fixpoint(
    mrta: MultiRoundTA,
    params: Parameters,
    restriction=None,
    allow_unsafe: bool = False,
    budget: int | None = None,
) -> list[Configuration]:
    """Least set of round-entry configurations closed under finishing a round.

    Starts from the round-1 splits and repeatedly adds the splits produced by
    moving every process of a completed round (all processes in final
    locations) through the round-switch edges.
    """
    system = system_for(mrta, params, allow_unsafe)
    budget = default_budget() if budget is None else budget
    entries = system.initial_states(restriction)
    known = set(entries)
    frontier = list(entries)
    while frontier:
        produced, exhausted = _round_successors(system, mrta, frontier, budget)
        if exhausted:
            raise BudgetExhaustedError(f"round-entry fixpoint exceeded {budget} states")
        frontier = [s for s in produced if s not in known]
        known.update(frontier)
        entries.extend(frontier)
    return [system.wrap(s) for s in entries]


def round_entry_layers(
    mrta: MultiRoundTA,
    params: Parameters,
    rounds: int,
    restriction=None,
    allow_unsafe: bool = False,
    budget: int | None = None,
) -> list[list[Configuration]]:
    """Round-entry configurations of rounds ``1..rounds`` taken separately."""
    system = system_for(mrta, params, allow_unsafe)
    budget = default_budget() if budget is None else budget
    layer = system.initial_states(restriction)
    layers = [layer]
    for _ in range(rounds - 1):
        layer, exhausted = _round_successors(system, mrta, layer, budget)
        if exhausted:
            raise BudgetExhaustedError(f"round-entry layers exceeded {budget} states")
        layers.append(layer)
    return [[system.wrap(s) for s in lay] for lay in layers]
