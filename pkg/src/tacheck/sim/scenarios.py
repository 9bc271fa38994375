"""Named adversaries, schedulers and the shipped non-termination schedule."""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources
from typing import Mapping

from .adversary import Equivocate, Scripted, Silent
from .core import SystemState, new_system
from .schedulers import RandomScheduler, ScriptedScheduler, VGoodScheduler

ADVERSARIES = ("silent", "equivocate", "estimate-cycle")
SCHEDULERS = ("random", "v-good", "estimate-cycle")


@lru_cache(maxsize=None)
def _estimate_cycle_text() -> str:
    return resources.files(__package__).joinpath("data", "estimate_cycle.json").read_text(encoding="utf-8")


def estimate_cycle_document() -> dict:
    """The shipped two-round schedule (a fresh copy on every call)."""
    return json.loads(_estimate_cycle_text())


def estimate_cycle_adversary() -> Scripted:
    return Scripted.from_json(estimate_cycle_document()["adversary"])


def estimate_cycle_scheduler() -> ScriptedScheduler:
    return ScriptedScheduler.from_json(estimate_cycle_document()["scheduler"])


def estimate_cycle_system() -> SystemState:
    doc = estimate_cycle_document()
    n, t, f = doc["params"]
    return new_system(n, t, f, doc["inputs"], estimate_cycle_adversary())


def adversary_from_name(name: str, seed: int = 0):
    if name == "silent":
        return Silent()
    if name == "equivocate":
        return Equivocate(seed)
    if name == "estimate-cycle":
        return estimate_cycle_adversary()
    raise ValueError(f"unknown adversary {name!r}; known: {', '.join(ADVERSARIES)}")


def scheduler_from_name(name: str, seed: int = 0, options: Mapping | None = None):
    """``random``, ``v-good`` (``options``: ``round``, ``value``) or ``estimate-cycle``."""
    options = options or {}
    if name == "random":
        return RandomScheduler(seed)
    if name == "v-good":
        r = int(options.get("round", 1))
        return VGoodScheduler(r, int(options.get("value", r % 2)), seed)
    if name == "estimate-cycle":
        return estimate_cycle_scheduler()
    raise ValueError(f"unknown scheduler {name!r}; known: {', '.join(SCHEDULERS)}")
