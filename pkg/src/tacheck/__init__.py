"""Explicit-state verification of threshold automata for Byzantine consensus.

Modules:

* :mod:`tacheck.ta`: automata, their text format, validation and DOT export.
* :mod:`tacheck.counter`: counter-system semantics, exploration, round entries.
* :mod:`tacheck.props`: the temporal property language and its shapes.
* :mod:`tacheck.checker`: deciding properties and producing counterexamples.
* :mod:`tacheck.models`: the built-in automata and property suites.
* :mod:`tacheck.consensus`: consensus conclusions drawn from checked properties.
* :mod:`tacheck.sim`: a message-level simulator of the protocol.
"""

from .checker import Outcome, SuiteReport, Verdict, check_liveness, check_property, check_safety, check_suite
from .counter import (
    Configuration,
    StateGraph,
    Transition,
    apply_rule,
    enabled_rules,
    explore,
    initial_configs,
    normalize_round_rigid,
    round_entry_fixpoint,
)
from .models import bvb_ta, naive_consensus_ta, simplified_consensus_ta, standard_properties
from .props import Property, Shape, parse_properties, parse_property
from .ta import MultiRoundTA, Parameters, ThresholdAutomaton, export_dot, parse_ta, render, validate_ta

__all__ = [
    "Configuration",
    "MultiRoundTA",
    "Outcome",
    "Parameters",
    "Property",
    "Shape",
    "StateGraph",
    "SuiteReport",
    "ThresholdAutomaton",
    "Transition",
    "Verdict",
    "apply_rule",
    "bvb_ta",
    "check_liveness",
    "check_property",
    "check_safety",
    "check_suite",
    "enabled_rules",
    "explore",
    "export_dot",
    "initial_configs",
    "naive_consensus_ta",
    "normalize_round_rigid",
    "parse_properties",
    "parse_property",
    "parse_ta",
    "render",
    "round_entry_fixpoint",
    "simplified_consensus_ta",
    "standard_properties",
    "validate_ta",
]
