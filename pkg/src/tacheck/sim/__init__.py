"""Concrete simulation of binary value broadcast and binary consensus."""

from .adversary import Equivocate, Scripted, Silent
from .core import (
    AUX,
    BV,
    Deliver,
    Envelope,
    Event,
    IllegalActionError,
    Message,
    ProcessState,
    Start,
    SystemState,
    new_system,
)
from .runner import (
    GoodRound,
    RunStatus,
    Trace,
    agreement,
    check_good_round,
    first_deliveries,
    is_good,
    justification,
    run,
    uniformity,
    validity,
)
from .scenarios import (
    adversary_from_name,
    estimate_cycle_adversary,
    estimate_cycle_document,
    estimate_cycle_scheduler,
    estimate_cycle_system,
    scheduler_from_name,
)
from .schedulers import RandomScheduler, ScriptedScheduler, ScriptMismatchError, VGoodScheduler

__all__ = [
    "AUX",
    "BV",
    "Deliver",
    "Envelope",
    "Equivocate",
    "Event",
    "IllegalActionError",
    "GoodRound",
    "Message",
    "ProcessState",
    "RandomScheduler",
    "RunStatus",
    "ScriptMismatchError",
    "Scripted",
    "ScriptedScheduler",
    "Silent",
    "Start",
    "SystemState",
    "Trace",
    "VGoodScheduler",
    "adversary_from_name",
    "agreement",
    "estimate_cycle_adversary",
    "estimate_cycle_document",
    "estimate_cycle_scheduler",
    "estimate_cycle_system",
    "check_good_round",
    "first_deliveries",
    "is_good",
    "justification",
    "new_system",
    "run",
    "scheduler_from_name",
    "uniformity",
    "validity",
]
