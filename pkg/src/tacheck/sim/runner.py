"""Driving a system with a scheduler, and checks over the resulting traces."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

from .core import Event, SystemState

DEFAULT_STEP_LIMIT = 1_000_000


class RunStatus(enum.Enum):
    FINISHED = "finished"
    STALLED = "stalled"
    STEP_LIMIT = "step-limit"


@dataclass
class Trace:
    params: tuple[int, int, int]
    inputs: tuple[int, ...]
    correct: tuple[int, ...]
    status: RunStatus
    events: list[Event]
    # round -> process -> state right after that process finished the round
    snapshots: dict[int, dict[int, dict]]
    final: dict[int, dict]
    decisions: dict[int, tuple[int, int]]
    steps: int
    setup: dict = field(default_factory=dict)

    def estimates_after(self, r: int) -> tuple[int | None, ...]:
        """Correct-process estimates at the end of round ``r`` (``None`` if unfinished)."""
        per_round = self.snapshots.get(r, {})
        return tuple(per_round[p]["est"] if p in per_round else None for p in self.correct)

    def rounds_completed(self) -> int:
        """Largest round every correct process finished."""
        r = 0
        while all(p in self.snapshots.get(r + 1, {}) for p in self.correct):
            r += 1
        return r

    def to_json(self) -> dict:
        return {
            "params": list(self.params),
            "inputs": list(self.inputs),
            "status": self.status.value,
            "steps": self.steps,
            "setup": self.setup,
            "events": [e.to_json() for e in self.events],
            "snapshots": {
                str(r): {str(p): snap for p, snap in sorted(per.items())} for r, per in sorted(self.snapshots.items())
            },
            "final": {str(p): snap for p, snap in sorted(self.final.items())},
            "decisions": {str(p): list(d) for p, d in sorted(self.decisions.items())},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, sort_keys=True)


def _finished(system: SystemState, max_rounds: int) -> bool:
    procs = system.processes.values()
    if all(p.round > max_rounds for p in procs):
        return True
    return all(p.decided is not None and p.completed >= p.decided[1] + 2 for p in procs)


def run(
    system: SystemState,
    scheduler,
    max_rounds: int,
    step_limit: int = DEFAULT_STEP_LIMIT,
    until_quiescent: bool = False,
) -> Trace:
    """Step ``system`` until every correct process finished ``max_rounds`` rounds,
    or all decided and finished two more rounds after their decision.

    With ``until_quiescent`` the run instead continues while anything is
    enabled; this is how broadcast-level properties are observed.
    A scheduler that has nothing left to offer yields a stalled trace.
    """
    if max_rounds < 1:
        raise ValueError("max_rounds must be at least 1")
    status = RunStatus.STEP_LIMIT
    steps = 0
    while steps < step_limit:
        if not until_quiescent and _finished(system, max_rounds):
            status = RunStatus.FINISHED
            break
        actions = system.enabled(max_rounds)
        action = scheduler.choose(system, actions) if actions else None
        if action is None:
            status = RunStatus.FINISHED if until_quiescent and not actions else RunStatus.STALLED
            break
        system.step(action)
        steps += 1
    setup = {}
    if hasattr(system.adversary, "describe"):
        setup["adversary"] = system.adversary.describe()
    if hasattr(scheduler, "describe"):
        setup["scheduler"] = scheduler.describe()
    setup["max_rounds"] = max_rounds
    return Trace(
        params=system.params.as_tuple(),
        inputs=tuple(p.input for p in system.processes.values()),
        correct=system.correct,
        status=status,
        events=list(system.events),
        snapshots={r: dict(per) for r, per in system.snapshots.items()},
        final={p.id: p.snapshot() for p in system.processes.values()},
        decisions={p.id: p.decided for p in system.processes.values() if p.decided is not None},
        steps=steps,
        setup=setup,
    )


# ------------------------------------------------------------ trace checks


class GoodRound(enum.Enum):
    HOLDS = "holds"
    VIOLATED = "violated"
    NOT_APPLICABLE = "not-applicable"


def first_deliveries(trace: Trace, r: int) -> dict[int, int]:
    """First value each correct process delivered in round ``r``."""
    first: dict[int, int] = {}
    for e in trace.events:
        if e.kind == "bv-deliver" and e.round == r and e.receiver not in first:
            first[e.receiver] = e.value
    return first


def is_good(trace: Trace, r: int, value: int) -> bool:
    """Whether every correct process delivered ``value`` first in round ``r``."""
    first = first_deliveries(trace, r)
    return all(first.get(p) == value for p in trace.correct)


def check_good_round(trace: Trace, r: int) -> GoodRound:
    """If round ``r`` is ``(r mod 2)``-good, every process leaves it with estimate ``r mod 2``."""
    parity = r % 2
    finished = trace.snapshots.get(r, {})
    if not all(p in finished for p in trace.correct) or not is_good(trace, r, parity):
        return GoodRound.NOT_APPLICABLE
    ok = all(finished[p]["est"] == parity for p in trace.correct)
    return GoodRound.HOLDS if ok else GoodRound.VIOLATED


def agreement(trace: Trace) -> bool:
    """All first decisions carry the same value."""
    return len({v for v, _ in trace.decisions.values()}) <= 1


def validity(trace: Trace) -> bool:
    """With unanimous inputs, only that input is decided."""
    if len(set(trace.inputs)) != 1:
        return True
    return all(v == trace.inputs[0] for v, _ in trace.decisions.values())


def justification(trace: Trace) -> bool:
    """Every delivered value was broadcast by a correct process at the start of that round."""
    started = {(e.round, e.value) for e in trace.events if e.kind == "start"}
    return all((e.round, e.value) in started for e in trace.events if e.kind == "bv-deliver")


def uniformity(trace: Trace, r: int = 1) -> bool:
    """After quiescence, every correct process delivered the same values in round ``r``.

    Meaningful for broadcast-only runs, where processes stay in round ``r``.
    """
    delivered = {p: frozenset() for p in trace.correct}
    for e in trace.events:
        if e.kind == "bv-deliver" and e.round == r:
            delivered[e.receiver] = delivered[e.receiver] | {e.value}
    return len(set(delivered.values())) == 1


def decision_rounds(trace: Trace) -> dict[int, int]:
    return {p: r for p, (_, r) in trace.decisions.items()}
