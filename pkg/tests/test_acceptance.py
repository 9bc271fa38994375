"""Acceptance criteria 1-8, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py`` (or execute this file directly).
"""

from __future__ import annotations

import random
import sys
import time
from contextlib import contextmanager

import pytest

import property_cases
from tacheck.checker import check_safety, check_suite, entry_configs, replay_counterexample
from tacheck.models import (
    StructuralCounts,
    bvb_ta,
    entry,
    naive_consensus_ta,
    simplified_consensus_ta,
    standard_properties,
)
from tacheck.sim import (
    Equivocate,
    GoodRound,
    RandomScheduler,
    RunStatus,
    Silent,
    VGoodScheduler,
    estimate_cycle_scheduler,
    estimate_cycle_system,
    check_good_round,
    new_system,
    run,
)
from tacheck.sim.abstraction import validate_abstraction
from tacheck.ta import Parameters, validate_ta


@contextmanager
def criterion(capsys, number: int, title: str):
    """Print one PASS/FAIL line for the enclosed checks; failures still propagate."""
    notes: list[str] = []
    started = time.perf_counter()
    try:
        yield notes.append
    except BaseException as exc:
        with capsys.disabled():
            print(f"\nFAIL criterion {number}: {title} ({type(exc).__name__}: {exc})")
        raise
    with capsys.disabled():
        detail = "; ".join(notes)
        print(f"\nPASS criterion {number}: {title} [{detail}; {time.perf_counter() - started:.1f}s]")


def test_criterion_1_bv_broadcast_suite(capsys):
    with criterion(capsys, 1, "BV-broadcast suite holds on bvb") as note:
        instances = [Parameters(4, 1, 0), Parameters(4, 1, 1), Parameters(5, 1, 1), Parameters(7, 2, 2)]
        suite = standard_properties("bvb")
        assert len(suite) == 7
        report = check_suite(bvb_ta(), instances, suite)
        failing = [f"{v.name}@{v.params}" for v in report.verdicts if not v.holds]
        assert not failing, failing
        slowest = max(report.verdicts, key=lambda v: v.millis)
        assert slowest.millis < 60_000
        note(f"{len(report.verdicts)} verdicts hold, slowest {slowest.name}@{slowest.params} {slowest.millis:.0f} ms")


def test_criterion_2_simplified_consensus_suite(capsys):
    with criterion(capsys, 2, "simplified consensus suite holds over round-entry fixpoint") as note:
        ta = simplified_consensus_ta()
        suite = standard_properties("simplified")
        assert {p.name for p in suite} == {
            "inv1_0", "inv1_1", "inv2_0", "inv2_1", "dec_0", "dec_1", "good_0", "good_1", "s_round_termination",
        }
        for params in (Parameters(4, 1, 1), Parameters(7, 2, 2)):
            started = time.perf_counter()
            entries = entry_configs(ta, params)
            report = check_suite(ta, [params], suite)
            failing = [v.name for v in report.verdicts if not v.holds]
            assert not failing, f"{params}: {failing}"
            assert max(v.millis for v in report.verdicts) < 120_000
            note(f"{params}: {len(entries)} entries, all 9 hold in {time.perf_counter() - started:.1f}s")


def test_criterion_3_structural_fidelity(capsys):
    with criterion(capsys, 3, "structural fidelity and provenance") as note:
        assert StructuralCounts.of(bvb_ta()) == StructuralCounts(10, 19, 4, 0)
        for model_id, documented in (("naive", ("24", "26")), ("simplified", ("16", "18"))):
            notes = entry(model_id).notes
            assert all(number in notes for number in documented), model_id
        for ta in (bvb_ta(), naive_consensus_ta(), simplified_consensus_ta()):
            report = validate_ta(ta)
            assert report.ok, report.issues
        note("bvb 10/19/4; naive and simplified notes reconcile 24/26 and 16/18; validate_ta clean")


def test_criterion_4_counterexample_generation(capsys):
    with criterion(capsys, 4, "Inv1_0 counterexample at (6,2,2) replays") as note:
        ta = simplified_consensus_ta()
        params = Parameters(6, 2, 2)
        prop = {p.name: p for p in standard_properties("simplified")}["inv1_0"]
        entries = entry_configs(ta, params, allow_unsafe=True)
        verdict = check_safety(ta, params, prop, entries, allow_unsafe=True)
        assert verdict.is_counterexample
        assert replay_counterexample(ta, prop, verdict)
        assert len(verdict.trace) == 18
        last = verdict.trace[-1].config
        note(f"{len(verdict.trace)}-state trace ending in {last.describe()}")


def test_criterion_5_estimate_cycle_reproduction(capsys):
    with criterion(capsys, 5, "non-terminating schedule reproduces the estimate cycle") as note:
        rounds = 12
        trace = run(estimate_cycle_system(), estimate_cycle_scheduler(), max_rounds=rounds)
        assert trace.status is RunStatus.FINISHED
        assert trace.estimates_after(1) == (0, 1, 1)
        assert trace.estimates_after(2) == (0, 0, 1)
        for r in range(1, rounds + 1):
            assert trace.estimates_after(r) == ((0, 1, 1) if r % 2 else (0, 0, 1)), r
        assert trace.decisions == {}
        note(f"{rounds} rounds, estimates alternate (0,1,1)/(0,0,1), zero decisions")


def test_criterion_6_good_round_and_fairness(capsys):
    with criterion(capsys, 6, "v-good rounds fix the estimate and lead to decision") as note:
        for r in (1, 2):
            value = r % 2
            applicable = 0
            for seed in range(100):
                rng = random.Random(seed)
                inputs = [rng.randrange(2) for _ in range(3)]
                trace = run(new_system(4, 1, 1, inputs, Equivocate(seed)), VGoodScheduler(r, value, seed), max_rounds=8)
                verdict = check_good_round(trace, r)
                assert verdict is not GoodRound.VIOLATED, (r, seed)
                if verdict is GoodRound.HOLDS:
                    applicable += 1
                    deadline = 2 * ((r + 1) // 2 + 1)
                    assert {p: d[0] for p, d in trace.decisions.items()} == {p: value for p in trace.correct}, (r, seed)
                    assert all(d[1] <= deadline for d in trace.decisions.values()), (r, seed)
            assert applicable > 0
            note(f"r={r}: {applicable}/100 applicable, all decide {value} by round {2 * ((r + 1) // 2 + 1)}")


def test_criterion_7_trace_abstraction(capsys):
    with criterion(capsys, 7, "random traces abstract to valid naive-automaton runs") as note:
        mismatches = []
        for seed in range(1000):
            rng = random.Random(seed)
            inputs = [rng.randrange(2) for _ in range(3)]
            adversary = Equivocate(seed) if seed % 2 else Silent()
            trace = run(new_system(4, 1, 1, inputs, adversary), RandomScheduler(seed), max_rounds=3)
            mismatches += [f"seed {seed}: {m}" for m in validate_abstraction(trace)]
        assert not mismatches, mismatches[:3]
        note("1000 traces at (4,1,1), 0 mismatches")


def test_criterion_8_property_suites(capsys):
    with criterion(capsys, 8, "property-based suites at 10^4 cases each") as note:
        for name, case in property_cases.CASES.items():
            before = property_cases.executed[name]
            property_cases.as_test(case, 10_000)()
            cases = property_cases.executed[name] - before
            assert cases >= 10_000, (name, cases)
            note(f"{name} {cases}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
