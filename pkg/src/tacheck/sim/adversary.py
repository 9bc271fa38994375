"""Byzantine strategies: functions from what happened so far to injected messages."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .core import AUX, BV, Event, Message


class Silent:
    """Byzantine processes never send anything."""

    def inject(self, history: Sequence[Event], target: int, round: int, byzantine: Sequence[int]) -> list[Message]:
        return []

    def describe(self) -> dict:
        return {"strategy": "silent"}


@dataclass
class Equivocate:
    """Each Byzantine process sends each target an independent random choice.

    Per (sender, target, round) it sends BV for a random non-empty subset of
    values and AUX for a random value, so different targets see conflicting
    messages. The choice depends only on the seed and those three numbers.
    """

    seed: int = 0

    def inject(self, history: Sequence[Event], target: int, round: int, byzantine: Sequence[int]) -> list[Message]:
        out = []
        for sender in byzantine:
            rng = random.Random(f"{self.seed}:{sender}:{target}:{round}")
            values = rng.choice([(0,), (1,), (0, 1), (1, 0)])
            out.extend(Message(BV, v, sender, round) for v in values)
            out.append(Message(AUX, rng.randrange(2), sender, round))
        return out

    def describe(self) -> dict:
        return {"strategy": "equivocate", "seed": self.seed}


@dataclass
class Scripted:
    """Injections listed per round and target.

    ``script`` maps a round to a mapping from target to ``(kind, value, sender)``
    triples. With ``period`` set, round ``r`` uses the entry for the round in
    ``1..period`` congruent to ``r``.
    """

    script: Mapping[int, Mapping[int, Sequence[tuple[str, int, int]]]]
    period: int | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_json(cls, data: Mapping) -> "Scripted":
        script = {
            int(r): {int(target): [tuple(m) for m in msgs] for target, msgs in per_target.items()}
            for r, per_target in data["rounds"].items()
        }
        return cls(script, data.get("period"))

    def _key(self, round: int) -> int:
        if self.period is None:
            return round
        return (round - 1) % self.period + 1

    def inject(self, history: Sequence[Event], target: int, round: int, byzantine: Sequence[int]) -> list[Message]:
        entries = self.script.get(self._key(round), {}).get(target, ())
        return [Message(kind, value, sender, round) for kind, value, sender in entries]

    def describe(self) -> dict:
        return {"strategy": "scripted", "period": self.period}

