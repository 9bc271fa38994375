"""Schedulers pick the next action among the enabled ones.

The network is reliable: every scheduler eventually delivers every message,
either because it picks uniformly among all enabled actions or because it only
holds messages back while something else is enabled.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .core import BV, Action, Deliver, IllegalActionError, Start, SystemState


class ScriptMismatchError(IllegalActionError):
    """A scripted step names an action that is not enabled."""


class RandomScheduler:
    def __init__(self, seed: int = 0):
        self.seed = seed
        self._rng = random.Random(seed)

    def choose(self, system: SystemState, actions: Sequence[Action]) -> Action | None:
        return self._rng.choice(actions) if actions else None

    def describe(self) -> dict:
        return {"scheduler": "random", "seed": self.seed}


class VGoodScheduler:
    """Random scheduling that makes round ``round`` ``value``-good when it can.

    BV messages for ``1 - value`` of that round are held back from every
    correct process that has not yet delivered ``value``. If only held
    messages remain, they are released and the round is marked as not good.
    """

    def __init__(self, round: int, value: int, seed: int = 0):
        self.round = round
        self.value = value
        self.seed = seed
        self.good = True
        self._rng = random.Random(seed)

    def _held(self, system: SystemState, action: Action) -> bool:
        if not isinstance(action, Deliver):
            return False
        msg = action.envelope.message
        if msg.kind != BV or msg.value == self.value or msg.round != self.round:
            return False
        proc = system.processes[action.envelope.receiver]
        return proc.round < self.round or (proc.round == self.round and self.value not in proc.contestants)

    def choose(self, system: SystemState, actions: Sequence[Action]) -> Action | None:
        if not actions:
            return None
        allowed = [a for a in actions if not self._held(system, a)]
        if not allowed:
            self.good = False
            allowed = list(actions)
        return self._rng.choice(allowed)

    def describe(self) -> dict:
        return {"scheduler": "v-good", "round": self.round, "value": self.value, "seed": self.seed}


@dataclass
class ScriptedScheduler:
    """Replays an explicit list of steps.

    Each step is a mapping with ``op`` set to ``start`` (``process``),
    ``deliver`` (``kind``, ``value``, ``senders``, ``receiver``, ``round``) or
    ``flush`` (``round``: deliver everything in flight for that round, oldest
    first). With ``repeat_period`` set, the script restarts after its last step
    with every round shifted by that amount; otherwise it is exhausted.
    """

    steps: Sequence[Mapping]
    repeat_period: int | None = None
    _queue: list = field(default_factory=list, repr=False)
    _offset: int = 0
    _position: int = 0

    @classmethod
    def from_json(cls, data: Mapping) -> "ScriptedScheduler":
        return cls(list(data["steps"]), data.get("repeat_period"))

    def _expand(self, step: Mapping) -> list[tuple]:
        op = step["op"]
        if op == "start":
            return [("start", step["process"])]
        if op == "deliver":
            senders = step.get("senders", [step.get("sender")])
            r = step["round"] + self._offset
            return [("deliver", step["kind"], step["value"], s, step["receiver"], r) for s in senders]
        if op == "flush":
            return [("flush", step["round"] + self._offset)]
        raise ValueError(f"unknown script op {op!r}")

    def _refill(self) -> bool:
        while not self._queue:
            if self._position >= len(self.steps):
                if not self.repeat_period or not self.steps:
                    return False
                self._position = 0
                self._offset += self.repeat_period
            self._queue.extend(self._expand(self.steps[self._position]))
            self._position += 1
        return True

    def choose(self, system: SystemState, actions: Sequence[Action]) -> Action | None:
        while self._refill():
            item = self._queue[0]
            if item[0] == "flush":
                pending = [a for a in actions if isinstance(a, Deliver) and a.envelope.message.round == item[1]]
                if pending:
                    return min(pending, key=lambda a: a.envelope.seq)
                self._queue.pop(0)
                continue
            self._queue.pop(0)
            if item[0] == "start":
                action = Start(item[1])
                if action not in actions:
                    raise ScriptMismatchError(f"scripted start of process {item[1]} is not enabled")
                return action
            _, kind, value, sender, receiver, r = item
            for a in actions:
                if isinstance(a, Deliver):
                    env = a.envelope
                    msg = env.message
                    if (msg.kind, msg.value, msg.sender, env.receiver, msg.round) == (kind, value, sender, receiver, r):
                        return a
            raise ScriptMismatchError(f"no {kind}({value}) from {sender} to {receiver} in round {r} is in flight")
        return None

    def describe(self) -> dict:
        return {"scheduler": "scripted", "steps": len(self.steps), "repeat_period": self.repeat_period}
