"""Map concrete consensus traces to runs of the naive consensus automaton.

A process's location in a round is determined by which values it has
broadcast and which it has delivered; leaving the round is determined by its
qualifiers. Round ``r`` belongs to superround ``(r + 1) // 2``; odd rounds use
the unsuffixed locations and even rounds those suffixed ``x``. Every emitted
transition is replayed on the multi-round counter system, so a successful
abstraction is a valid run by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..counter import Configuration, MalformedRunError, MultiRoundRun, MultiRoundSystem, Transition
from ..models import naive_consensus_ta
from ..ta import MultiRoundTA, Parameters
from .runner import Trace

# (qualifiers, odd round?) -> exit location
_EXITS = {
    ((0,), True): "E0",
    ((1,), True): "D1",
    ((0, 1), True): "E1",
    ((0,), False): "D0",
    ((1,), False): "E1x",
    ((0, 1), False): "E0x",
}


class AbstractionMismatch(ValueError):
    """A concrete step has no counterpart in the automaton."""

    def __init__(self, message: str, event_index: int | None = None):
        where = f"event {event_index}: " if event_index is not None else ""
        super().__init__(where + message)
        self.event_index = event_index


@dataclass
class _Local:
    round: int = 1
    location: str = ""
    broadcast: set[int] = field(default_factory=set)
    delivered: set[int] = field(default_factory=set)


@dataclass(frozen=True)
class AbstractRun:
    run: MultiRoundRun
    # index of the concrete event that produced each transition
    origins: tuple[int, ...]
    final: object

    @property
    def transitions(self) -> tuple[Transition, ...]:
        return self.run.transitions


def _suffix(r: int) -> str:
    return "" if r % 2 else "x"


def _bvb_location(r: int, broadcast: set[int], delivered: set[int]) -> str:
    if not delivered:
        name = "B01" if len(broadcast) == 2 else f"B{min(broadcast)}"
    elif len(delivered) == 2:
        name = "C01"
    else:
        (v,) = delivered
        name = f"CB{v}" if len(broadcast) == 2 else f"C{v}"
    return name + _suffix(r)


class _Emitter:
    def __init__(self, mrta: MultiRoundTA, params: Parameters, inputs: tuple[int, ...]):
        self.mrta = mrta
        self.system = MultiRoundSystem(mrta, params, allow_unsafe=True)
        base = self.system.base
        kappa = [0] * base.nloc
        for v in inputs:
            kappa[base.loc_index[f"V{v}"]] += 1
        start = Configuration(tuple(kappa), (0,) * len(base.shared), params, base.locations, base.shared)
        self.initial = self.system.initial(start)
        self.config = self.initial
        self.transitions: list[Transition] = []
        self.origins: list[int] = []
        self.edges: dict[tuple[str, str], str] = {}
        for rule in mrta.all_rules():
            if not rule.is_self_loop:
                self.edges.setdefault((rule.source, rule.target), rule.id)

    def move(self, source: str, target: str, superround: int, index: int) -> None:
        rule = self.edges.get((source, target))
        if rule is None:
            raise AbstractionMismatch(f"no rule from {source} to {target}", index)
        tr = Transition(rule, superround)
        try:
            self.config = self.system.apply(self.config, tr)
        except MalformedRunError as exc:
            raise AbstractionMismatch(f"{tr} ({source} -> {target}) is locked: {exc}", index) from None
        self.transitions.append(tr)
        self.origins.append(index)


def abstract_trace(trace: Trace, mrta: MultiRoundTA | None = None) -> AbstractRun:
    """The naive-automaton run induced by the correct processes of ``trace``."""
    mrta = mrta or naive_consensus_ta()
    params = Parameters(*trace.params)
    emit = _Emitter(mrta, params, trace.inputs)
    local = {p: _Local(location=f"V{v}") for p, v in zip(trace.correct, trace.inputs)}
    switch_target = {(r.source, r.target) for r in mrta.round_switch}
    for index, e in enumerate(trace.events):
        if e.kind == "start":
            st = local[e.sender]
            r = e.round
            superround = (r + 1) // 2
            if r > 1:
                entry = f"V{e.value}{_suffix(r)}"
                if r % 2 == 1 and (st.location, entry) not in switch_target:
                    raise AbstractionMismatch(f"no round switch from {st.location} to {entry}", index)
                # An odd round is entered through a round switch of the previous superround.
                emit.move(st.location, entry, superround - 1 if r % 2 else superround, index)
                st.location = entry
            elif st.location != f"V{e.value}":
                raise AbstractionMismatch(f"process {e.sender} starts with {e.value} but sits in {st.location}", index)
            st.round, st.broadcast, st.delivered = r, {e.value}, set()
            target = _bvb_location(r, st.broadcast, st.delivered)
            emit.move(st.location, target, superround, index)
            st.location = target
        elif e.kind == "send" and e.message == "BV":
            st = local[e.sender]
            if e.value in st.broadcast:
                continue  # the initial broadcast, already emitted with the start
            st.broadcast.add(e.value)
            target = _bvb_location(e.round, st.broadcast, st.delivered)
            emit.move(st.location, target, (e.round + 1) // 2, index)
            st.location = target
        elif e.kind == "bv-deliver":
            st = local[e.receiver]
            st.delivered.add(e.value)
            target = _bvb_location(e.round, st.broadcast, st.delivered)
            emit.move(st.location, target, (e.round + 1) // 2, index)
            st.location = target
        elif e.kind == "complete":
            st = local[e.receiver]
            target = _EXITS.get((tuple(e.detail), e.round % 2 == 1))
            if target is None:
                raise AbstractionMismatch(f"qualifiers {list(e.detail)} have no exit", index)
            emit.move(st.location, target, (e.round + 1) // 2, index)
            st.location = target
    run = MultiRoundRun(emit.initial, tuple(emit.transitions))
    return AbstractRun(run, tuple(emit.origins), emit.config)


def validate_abstraction(trace: Trace, mrta: MultiRoundTA | None = None) -> list[str]:
    """Mismatch reports; empty when the trace abstracts to a valid run."""
    try:
        abstract = abstract_trace(trace, mrta)
        MultiRoundSystem(mrta or naive_consensus_ta(), Parameters(*trace.params), allow_unsafe=True).replay(abstract.run)
    except (AbstractionMismatch, MalformedRunError) as exc:
        return [str(exc)]
    return []
