"""Randomized property cases shared by the regular suite and the acceptance run.

Each case takes a hypothesis ``data`` object. Walks are driven by a drawn seed
rather than step-by-step draws, which keeps ten thousand cases cheap.
"""

from __future__ import annotations

import random
from collections import Counter
from functools import lru_cache

from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from tacheck.checker import check_property, replay_counterexample
from tacheck.counter import MultiRoundSystem, initial_configs
from tacheck.models import bvb_ta, compact_consensus_ta, naive_consensus_ta, simplified_consensus_ta
from tacheck.props import parse_property
from tacheck.ta import MultiRoundTA, Parameters

PARAMS = [Parameters(*p) for p in ((4, 1, 0), (4, 1, 1), (5, 1, 1), (7, 2, 1), (7, 2, 2), (10, 3, 3))]

# Cases executed per property, for the acceptance report.
executed: Counter = Counter()


@lru_cache(maxsize=None)
def multiround_models() -> tuple[MultiRoundTA, ...]:
    return (
        MultiRoundTA(bvb_ta(), ()),
        naive_consensus_ta(),
        simplified_consensus_ta(),
        compact_consensus_ta(),
    )


@lru_cache(maxsize=None)
def _entries(model_index: int, params: Parameters):
    return initial_configs(multiround_models()[model_index], params)


def _walk(data, max_round: int = 3):
    """A random multi-round run; returns the system and every configuration along it."""
    model_index = data.draw(st.integers(0, len(multiround_models()) - 1), label="model")
    params = data.draw(st.sampled_from(PARAMS), label="params")
    entries = _entries(model_index, params)
    start = entries[data.draw(st.integers(0, len(entries) - 1), label="entry")]
    length = data.draw(st.integers(0, 80), label="length")
    rng = random.Random(data.draw(st.integers(0, 2**32 - 1), label="seed"))
    system = MultiRoundSystem(multiround_models()[model_index], params)
    configs = [system.initial(start)]
    for _ in range(length):
        options = system.enabled(configs[-1], max_round)
        if not options:
            break
        configs.append(system.apply(configs[-1], rng.choice(options)))
    return system, configs, rng


def conservation(data) -> None:
    """Every configuration holds exactly n - f processes, none negative."""
    system, configs, _ = _walk(data)
    for config in configs:
        assert config.total() == system.params.correct
        assert all(c >= 0 for _, kappa, _ in config.rounds for c in kappa)
    executed["conservation"] += 1


def monotonicity_and_bound(data) -> None:
    """Per round, shared variables never decrease and never exceed n - f."""
    system, configs, _ = _walk(data)
    bound = system.params.correct
    for before, after in zip(configs, configs[1:]):
        for r in after.round_indices():
            old = before.round(r)
            _, g_new = after.round(r)
            assert all(0 <= x <= bound for x in g_new)
            if old is not None:
                assert all(a <= b for a, b in zip(old[1], g_new))
    executed["monotonicity_and_bound"] += 1


@lru_cache(maxsize=None)
def _guard_atoms():
    atoms = set()
    for mrta in multiround_models():
        for rule in mrta.base.rules:
            atoms.update(rule.guard)
    return tuple(sorted(atoms, key=str))


def guard_monotonicity(data) -> None:
    """A guard that holds keeps holding when shared variables grow."""
    atom = data.draw(st.sampled_from(_guard_atoms()), label="atom")
    params = data.draw(st.sampled_from(PARAMS), label="params")
    bound = params.n
    names = atom.variables()
    low = {v: data.draw(st.integers(0, bound), label=f"g[{v}]") for v in names}
    high = {v: low[v] + data.draw(st.integers(0, bound), label=f"d[{v}]") for v in names}
    if atom.holds(low, params):
        assert atom.holds(high, params)
    executed["guard_monotonicity"] += 1


def _cross_round_pairs(system, config):
    enabled = system.enabled(config, 3)
    return [(a, b) for a in enabled for b in enabled if a.round < b.round]


def commutation(data) -> None:
    """Transitions of different rounds enabled together commute."""
    system, configs, rng = _walk(data)
    multi = [c for c in configs if len(c.rounds) > 1]
    rng.shuffle(multi)
    found = next(((c, pairs) for c in multi if (pairs := _cross_round_pairs(system, c))), None)
    assume(found is not None)
    config, pairs = found
    a, b = pairs[rng.randrange(len(pairs))]
    ab = system.apply(system.apply(config, a), b)
    ba = system.apply(system.apply(config, b), a)
    assert ab == ba
    executed["commutation"] += 1


REPLAY_PARAMS = (Parameters(4, 1, 0), Parameters(4, 1, 1))


@lru_cache(maxsize=None)
def _atom_pool() -> tuple[str, ...]:
    ta = bvb_ta()
    atoms = [f"loc{loc} == 0" for loc in ta.locations] + [f"loc{loc} != 0" for loc in ta.locations]
    atoms += [f"{v} < {k}" for v in ta.shared for k in range(1, 5)]
    atoms += [f"b0 + b1 < {k}" for k in range(2, 8)]
    return tuple(atoms)


def _formula(data, label: str) -> str:
    parts = data.draw(st.lists(st.sampled_from(_atom_pool()), min_size=1, max_size=3), label=label)
    joiner = data.draw(st.sampled_from([" && ", " || "]), label=f"{label}-op")
    return joiner.join(parts)


def counterexample_replay(data) -> None:
    """Every counterexample the checker returns re-executes to a violation."""
    ta = bvb_ta()
    params = data.draw(st.sampled_from(REPLAY_PARAMS), label="params")
    template = data.draw(
        st.sampled_from(["[]({p}) -> []({q})", "<>({p}) -> []({q})", "<>[]({p}) -> <>({q})", "[]({q})", "<>({q})"]),
        label="shape",
    )
    text = "prop: " + template.format(p=_formula(data, "p"), q=_formula(data, "q")) + ";"
    prop = parse_property(text, ta)
    verdict = check_property(ta, params, prop, _bvb_initials(params))
    if verdict.is_counterexample:
        assert replay_counterexample(ta, prop, verdict), text
        executed["counterexamples_replayed"] += 1
    executed["counterexample_replay"] += 1


@lru_cache(maxsize=None)
def _bvb_initials(params: Parameters):
    return tuple(initial_configs(bvb_ta(), params))


CASES = {
    "conservation": conservation,
    "monotonicity_and_bound": monotonicity_and_bound,
    "guard_monotonicity": guard_monotonicity,
    "commutation": commutation,
    "counterexample_replay": counterexample_replay,
}


def as_test(case, examples: int):
    """Wrap a case as a deterministic hypothesis test running ``examples`` cases."""
    return settings(
        max_examples=examples,
        deadline=None,
        derandomize=True,
        database=None,
        suppress_health_check=list(HealthCheck),
    )(given(st.data())(case))
