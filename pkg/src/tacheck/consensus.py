"""Consensus-level conclusions drawn from checked one-superround properties.

Agreement and validity speak about two different rounds, so they are not
checked directly. They follow from the superround invariants:

* Agreement for value v: ``inv1_v`` says that once some process decides v in a
  superround, no process decides or keeps the other value there. Every process
  therefore enters the next superround with estimate v, and ``inv2_{1-v}``
  applied to that superround (no one starts with 1-v, so no one decides 1-v)
  carries the argument to every later round.
* Validity for value v: ``inv2_{1-v}`` says that if no process starts with 1-v,
  nobody decides 1-v or leaves with it, so by induction 1-v is never decided.

Termination combines ``dec``, ``good`` and the round termination property: a
superround entered with a unanimous estimate ends with every process decided.
:func:`decision_chain` confirms that conclusion by exhaustive exploration.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .checker import Verdict, check_property, entry_configs
from .counter import explore
from .props import Property, compile_formula
from .ta import MultiRoundTA, Parameters

# Locations a process occupies before it has finished the odd round.
_ODD_ROUND = ("V0", "V1", "M", "M0", "M1", "M01", "E0", "E1")


@dataclass(frozen=True)
class Derivation:
    """A consensus property and whether the invariants it rests on all hold."""

    name: str
    holds: bool
    premises: tuple[str, ...]
    missing: tuple[str, ...]


def _derive(name: str, premises: Sequence[str], verdicts: Mapping[str, Verdict]) -> Derivation:
    missing = tuple(p for p in premises if p not in verdicts or not verdicts[p].holds)
    return Derivation(name, not missing, tuple(premises), missing)


def derive_agreement(verdicts: Mapping[str, Verdict]) -> list[Derivation]:
    """Agreement per value, from ``inv1_v`` and ``inv2_{1-v}``."""
    return [_derive(f"agree_{v}", (f"inv1_{v}", f"inv2_{1 - v}"), verdicts) for v in (0, 1)]


def derive_validity(verdicts: Mapping[str, Verdict]) -> list[Derivation]:
    """Validity per value, from ``inv2_{1-v}``."""
    return [_derive(f"valid_{v}", (f"inv2_{1 - v}",), verdicts) for v in (0, 1)]


@dataclass(frozen=True)
class ChainResult:
    value: int
    applicable: bool
    confirmed: bool
    entries: int
    states: int
    reason: str = ""


def decision_chain(
    ta: MultiRoundTA,
    params: Parameters,
    suite: Sequence[Property],
    value: int,
    budget: int | None = None,
) -> ChainResult:
    """Confirm by exploration that a unanimous superround decides ``value``.

    Applies when ``dec_{1-v}``, both ``good`` properties and
    ``s_round_termination`` hold and some round entry has every process
    starting with ``value``. Then every reachable
    state never passes through the estimate locations of the other outcome, and
    every state satisfying the termination premise has all processes decided:
    in ``D1`` or beyond for value 1 (decided in the odd round), in ``D0`` for
    value 0 (decided in the even round).
    """
    by_name = {p.name: p for p in suite}
    all_entries = entry_configs(ta, params, budget=budget)
    entries = [c for c in all_entries if c.count(f"V{1 - value}") == 0]
    if not entries:
        return ChainResult(value, False, False, 0, 0, f"no round entry starts unanimously with {value}")
    for name in (f"dec_{1 - value}", "good_0", "good_1", "s_round_termination"):
        verdict = check_property(ta, params, by_name[name], all_entries, budget)
        if not verdict.holds:
            return ChainResult(value, False, False, len(entries), 0, f"{name} does not hold")
    graph = explore(ta, params, entries, budget)
    if graph.exhausted:
        return ChainResult(value, False, False, len(entries), graph.state_count, "budget exhausted")
    system = graph.system
    quiescent = compile_formula(by_name["s_round_termination"].premise, system)
    everyone = params.correct
    if value == 1:
        never = [system.loc_index[loc] for loc in ("E0", "E1")]
        pending = [system.loc_index[loc] for loc in _ODD_ROUND]
        for state in graph.states:
            if any(state[i] for i in never):
                return ChainResult(value, True, False, len(entries), graph.state_count, f"estimate exit in {state}")
            if quiescent(state) and any(state[i] for i in pending):
                return ChainResult(value, True, False, len(entries), graph.state_count, f"undecided in {state}")
    else:
        decided = system.loc_index["D0"]
        for state in graph.states:
            if quiescent(state) and state[decided] != everyone:
                return ChainResult(value, True, False, len(entries), graph.state_count, f"undecided in {state}")
    return ChainResult(value, True, True, len(entries), graph.state_count)


def justification_by_structure(ta: MultiRoundTA, params: Parameters, budget: int | None = None) -> dict[int, bool]:
    """Whether ``M_v`` and ``M01`` stay empty whenever no process starts with v.

    In the simplified automaton a value can only be delivered after some correct
    process broadcast it, so this holds by construction of the guards.
    """
    result = {}
    for v in (0, 1):
        entries = [c for c in entry_configs(ta, params, budget=budget) if c.count(f"V{v}") == 0]
        graph = explore(ta, params, entries, budget)
        watched = [graph.system.loc_index[loc] for loc in (f"M{v}", "M01")]
        result[v] = not graph.exhausted and not any(s[i] for s in graph.states for i in watched)
    return result
