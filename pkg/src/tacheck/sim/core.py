"""Message-passing semantics of binary value broadcast and binary consensus.

Correct processes have ids ``1..n-f`` and Byzantine ones ``n-f+1..n``.
Byzantine processes have no local state: an adversary strategy injects their
messages. Every step is either a process starting its current round or the
delivery of one in-flight message, so runs are fully determined by the
sequence of actions chosen by a scheduler.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, Sequence

from ..ta import Parameters, ResilienceError

BV = "BV"
AUX = "AUX"


class IllegalActionError(ValueError):
    """The action is not enabled in the current system state."""


@dataclass(frozen=True, order=True)
class Message:
    kind: str
    value: int
    sender: int
    round: int

    def __post_init__(self):
        if self.kind not in (BV, AUX):
            raise ValueError(f"unknown message kind {self.kind!r}")
        if self.value not in (0, 1):
            raise ValueError(f"message value must be binary, got {self.value!r}")
        if self.round < 1:
            raise ValueError("rounds are numbered from 1")


@dataclass(frozen=True)
class Envelope:
    """A message in flight; ``seq`` orders envelopes by creation."""

    seq: int
    message: Message
    receiver: int


@dataclass(frozen=True)
class Start:
    process: int


@dataclass(frozen=True)
class Deliver:
    envelope: Envelope


Action = Start | Deliver


@dataclass(frozen=True)
class Event:
    """One entry of the trace.

    ``kind`` is one of ``start``, ``send``, ``inject``, ``receive``,
    ``buffer``, ``discard``, ``bv-deliver``, ``complete`` and ``decide``.
    ``message`` is ``BV`` or ``AUX`` for message events and empty otherwise.
    For ``complete`` the value is the new estimate and ``detail`` the qualifiers.
    """

    kind: str
    sender: int | None
    receiver: int | None
    value: int | None
    round: int
    message: str = ""
    detail: tuple[int, ...] = ()

    def to_json(self) -> dict:
        data = {
            "kind": self.kind,
            "sender": self.sender,
            "receiver": self.receiver,
            "value": self.value,
            "round": self.round,
        }
        if self.message:
            data["message"] = self.message
        if self.detail:
            data["detail"] = list(self.detail)
        return data


@dataclass
class RoundRecord:
    """What one process did in one round."""

    broadcast: list[int] = field(default_factory=list)
    aux: int | None = None


@dataclass
class ProcessState:
    id: int
    input: int
    est: int
    round: int = 1
    started: bool = False
    contestants: list[int] = field(default_factory=list)
    # first AUX value per sender, in arrival order
    favorites: dict[int, int] = field(default_factory=dict)
    qualifiers: frozenset[int] | None = None
    decided: tuple[int, int] | None = None
    decisions: list[tuple[int, int]] = field(default_factory=list)
    sent: dict[int, RoundRecord] = field(default_factory=dict)
    bv_senders: dict[int, set[int]] = field(default_factory=lambda: {0: set(), 1: set()})
    buffer: list[Envelope] = field(default_factory=list)

    @property
    def completed(self) -> int:
        """Number of rounds this process has finished."""
        return self.round - 1

    def record(self, r: int) -> RoundRecord:
        return self.sent.setdefault(r, RoundRecord())

    def snapshot(self) -> dict:
        return {
            "id": self.id,
            "round": self.round,
            "est": self.est,
            "contestants": list(self.contestants),
            "favorites": {str(s): v for s, v in self.favorites.items()},
            "qualifiers": sorted(self.qualifiers) if self.qualifiers is not None else None,
            "decided": list(self.decided) if self.decided else None,
        }


class Adversary(Protocol):
    """Chooses the messages Byzantine processes send to ``target`` in ``round``."""

    def inject(self, history: Sequence[Event], target: int, round: int, byzantine: Sequence[int]) -> list[Message]:
        ...


class SystemState:
    """Processes, in-flight messages and the trace of everything that happened."""

    def __init__(
        self,
        params: Parameters,
        inputs: Sequence[int],
        adversary: Adversary,
        allow_unsafe: bool = False,
        broadcast_only: bool = False,
    ):
        n, t, f = params.as_tuple()
        if not allow_unsafe and not (n > 3 * t and t >= f >= 0):
            raise ResilienceError(f"{params} violates n > 3t and t >= f >= 0")
        if f >= n:
            raise ValueError("at least one process must be correct")
        if len(inputs) != n - f:
            raise ValueError(f"expected {n - f} inputs (one per correct process), got {len(inputs)}")
        if any(v not in (0, 1) for v in inputs):
            raise ValueError("inputs must be binary")
        self.params = params
        self.adversary = adversary
        # Run only the value broadcast of round 1: nobody ever finishes a round.
        self.broadcast_only = broadcast_only
        self.processes = {i + 1: ProcessState(i + 1, v, v) for i, v in enumerate(inputs)}
        self.byzantine = tuple(range(n - f + 1, n + 1))
        self.in_flight: dict[int, Envelope] = {}
        self.events: list[Event] = []
        self.snapshots: dict[int, dict[int, dict]] = {}
        self._seq = 0

    # -- queries

    @property
    def correct(self) -> tuple[int, ...]:
        return tuple(self.processes)

    def estimates(self) -> tuple[int, ...]:
        return tuple(p.est for p in self.processes.values())

    def enabled(self, max_rounds: int | None = None) -> list[Action]:
        """Enabled actions in a deterministic order: starts, then deliveries by age."""
        starts: list[Action] = [
            Start(p.id)
            for p in self.processes.values()
            if not p.started and (max_rounds is None or p.round <= max_rounds)
        ]
        return starts + [Deliver(env) for env in self.in_flight.values()]

    # -- sending

    def _post(self, message: Message, receiver: int) -> None:
        self._seq += 1
        self.in_flight[self._seq] = Envelope(self._seq, message, receiver)

    def _broadcast(self, proc: ProcessState, kind: str, value: int) -> None:
        message = Message(kind, value, proc.id, proc.round)
        self.events.append(Event("send", proc.id, None, value, proc.round, kind))
        for receiver in self.processes:
            self._post(message, receiver)

    # -- actions

    def step(self, action: Action) -> None:
        if isinstance(action, Start):
            self._start(action.process)
        elif isinstance(action, Deliver):
            self._deliver(action.envelope)
        else:
            raise IllegalActionError(f"unknown action {action!r}")

    def _start(self, pid: int) -> None:
        proc = self.processes.get(pid)
        if proc is None or proc.started:
            raise IllegalActionError(f"process {pid} cannot start now")
        proc.started = True
        r = proc.round
        self.events.append(Event("start", pid, None, proc.est, r))
        proc.record(r).broadcast.append(proc.est)
        self._broadcast(proc, BV, proc.est)
        for message in self.adversary.inject(self.events, pid, r, self.byzantine):
            if message.sender not in self.byzantine:
                raise IllegalActionError(f"adversary cannot send as correct process {message.sender}")
            self.events.append(Event("inject", message.sender, pid, message.value, message.round, message.kind))
            self._post(message, pid)
        # Messages that arrived early become deliverable again.
        held, proc.buffer = proc.buffer, []
        for env in held:
            self.in_flight[env.seq] = env

    def _deliver(self, env: Envelope) -> None:
        if self.in_flight.get(env.seq) != env:
            raise IllegalActionError(f"envelope {env.seq} is not in flight")
        del self.in_flight[env.seq]
        proc = self.processes[env.receiver]
        msg = env.message
        if msg.round < proc.round:
            self.events.append(Event("discard", msg.sender, proc.id, msg.value, msg.round, msg.kind))
            return
        if msg.round > proc.round or not proc.started:
            self.events.append(Event("buffer", msg.sender, proc.id, msg.value, msg.round, msg.kind))
            proc.buffer.append(env)
            return
        self.events.append(Event("receive", msg.sender, proc.id, msg.value, msg.round, msg.kind))
        if msg.kind == BV:
            self._on_bv(proc, msg)
        elif msg.sender not in proc.favorites:
            proc.favorites[msg.sender] = msg.value
        self._try_complete(proc)

    def _on_bv(self, proc: ProcessState, msg: Message) -> None:
        t = self.params.t
        senders = proc.bv_senders[msg.value]
        if msg.sender in senders:
            return
        senders.add(msg.sender)
        record = proc.record(proc.round)
        if len(senders) >= t + 1 and msg.value not in record.broadcast:
            record.broadcast.append(msg.value)
            self._broadcast(proc, BV, msg.value)
        if len(senders) >= 2 * t + 1 and msg.value not in proc.contestants:
            proc.contestants.append(msg.value)
            self.events.append(Event("bv-deliver", None, proc.id, msg.value, proc.round))
            if record.aux is None:
                record.aux = msg.value
                self._broadcast(proc, AUX, msg.value)

    def _try_complete(self, proc: ProcessState) -> None:
        if self.broadcast_only:
            return
        n, t = self.params.n, self.params.t
        qualifying = [(s, v) for s, v in proc.favorites.items() if v in proc.contestants]
        if len(qualifying) < n - t:
            return
        chosen = qualifying[: n - t]
        qualifiers = frozenset(v for _, v in chosen)
        proc.qualifiers = qualifiers
        r = proc.round
        parity = r % 2
        if qualifiers == {parity}:
            proc.est = parity
            proc.decisions.append((parity, r))
            if proc.decided is None:
                proc.decided = (parity, r)
                self.events.append(Event("decide", None, proc.id, parity, r))
        elif len(qualifiers) == 1:
            (proc.est,) = qualifiers
        else:
            proc.est = parity
        self.events.append(Event("complete", None, proc.id, proc.est, r, detail=tuple(sorted(qualifiers))))
        self.snapshots.setdefault(r, {})[proc.id] = proc.snapshot()
        proc.round += 1
        proc.started = False
        proc.contestants = []
        proc.favorites = {}
        proc.qualifiers = None
        proc.bv_senders = {0: set(), 1: set()}


def new_system(
    n: int,
    t: int,
    f: int,
    inputs: Sequence[int],
    adversary: Adversary,
    allow_unsafe: bool = False,
    broadcast_only: bool = False,
) -> SystemState:
    """Correct processes ``1..n-f`` start round 1 with ``est`` set to their input."""
    return SystemState(Parameters(n, t, f), inputs, adversary, allow_unsafe, broadcast_only)
