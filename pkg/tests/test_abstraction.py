import dataclasses

import pytest

from tacheck.counter import MultiRoundSystem
from tacheck.models import naive_consensus_ta
from tacheck.sim import Equivocate, RandomScheduler, Silent, estimate_cycle_scheduler, estimate_cycle_system, new_system, run
from tacheck.sim.abstraction import AbstractionMismatch, abstract_trace, validate_abstraction
from tacheck.ta import Parameters


def occupancy(abstract, superround: int) -> dict[str, int]:
    kappa, _ = abstract.final.round(superround)
    locations = naive_consensus_ta().base.locations
    return {loc: c for loc, c in zip(locations, kappa) if c}


def visited(abstract) -> set[str]:
    system = MultiRoundSystem(naive_consensus_ta(), Parameters(*abstract.run.initial.params.as_tuple()))
    locations = naive_consensus_ta().base.locations
    seen = set()
    for config in system.replay(abstract.run):
        for _, kappa, _ in config.rounds:
            seen.update(loc for loc, c in zip(locations, kappa) if c)
    return seen


@pytest.mark.parametrize("seed", range(10))
def test_unanimous_zero_round_avoids_one(seed):
    trace = run(new_system(4, 1, 0, [0, 0, 0, 0], Silent()), RandomScheduler(seed), max_rounds=1)
    abstract = abstract_trace(trace)
    locations = visited(abstract)
    assert {"V0", "B0", "C0"} <= locations
    assert not locations & {"V1", "B1", "C1", "CB1", "CB0", "C01", "B01"}


def test_estimate_cycle_first_round():
    trace = run(estimate_cycle_system(), estimate_cycle_scheduler(), max_rounds=1)
    abstract = abstract_trace(trace)
    assert validate_abstraction(trace) == []
    after = occupancy(abstract, 1)
    assert after == {"E0": 1, "E1": 2}


def test_estimate_cycle_cycle_abstracts():
    trace = run(estimate_cycle_system(), estimate_cycle_scheduler(), max_rounds=6)
    assert validate_abstraction(trace) == []
    abstract = abstract_trace(trace)
    assert len(abstract.origins) == len(abstract.transitions)
    assert all(trace.events[i].kind in ("start", "send", "bv-deliver", "complete") for i in abstract.origins)


@pytest.mark.parametrize("seed", range(200))
def test_random_traces_abstract(seed):
    inputs = [(seed >> i) & 1 for i in range(3)]
    adversary = Equivocate(seed) if seed % 2 else Silent()
    trace = run(new_system(4, 1, 1, inputs, adversary), RandomScheduler(seed), max_rounds=3)
    assert validate_abstraction(trace) == []


def test_corrupted_trace_is_reported():
    trace = run(new_system(4, 1, 1, [0, 0, 1], Silent()), RandomScheduler(2), max_rounds=1)
    index = next(i for i, e in enumerate(trace.events) if e.kind == "bv-deliver")
    event = trace.events[index]
    # A delivery of a value nobody broadcast cannot be mapped.
    trace.events.insert(index, dataclasses.replace(event, value=1 - event.value, receiver=1))
    trace.events.insert(index, dataclasses.replace(event, value=1 - event.value, receiver=2))
    trace.events.insert(index, dataclasses.replace(event, value=1 - event.value, receiver=3))
    problems = validate_abstraction(trace)
    assert len(problems) == 1 and "event" in problems[0]
    with pytest.raises(AbstractionMismatch):
        abstract_trace(trace)
