import re

import pytest

from tacheck.models import bvb_ta, compact_consensus_ta, naive_consensus_ta, simplified_consensus_ta
from tacheck.ta import (
    Affine,
    GuardAtom,
    MultiRoundTA,
    Parameters,
    ResilienceError,
    TAParseError,
    ThresholdAutomaton,
    export_dot,
    parse_ta,
    render,
    validate_ta,
)

HEADER = "params n t f;\nresilience n > 3*t && t >= f && f >= 0;\n"


def ta_text(body: str, shared: str = "b0 b1", locations: str = "A* B C!") -> str:
    return HEADER + f"shared {shared};\nlocations {locations};\n" + body


# ---------------------------------------------------------------- parse_ta


def test_parse_threshold_rule():
    ta = parse_ta(ta_text("rule r3: A -> B when b0 >= 2*t + 1 - f;"))
    rule = ta.rule("r3")
    assert (rule.source, rule.target, rule.update) == ("A", "B", ())
    assert rule.guard == (GuardAtom((("b0", 1),), Affine.of({"t": 2, "f": -1}, 1)),)
    assert rule.guard_text() == "b0 >= 2*t - f + 1"


def test_parse_self_loop_has_true_guard_and_no_update():
    ta = parse_ta(ta_text("rule idle: C -> C when true;"))
    rule = ta.rule("idle")
    assert rule.is_self_loop and rule.guard == () and rule.update == ()


def test_full_bvb_document_counts():
    ta = bvb_ta()
    assert len(ta.locations) == 10
    assert len(ta.rules) == 19
    assert ta.shared == ("b0", "b1")


def test_parse_updates_and_sums():
    ta = parse_ta(ta_text("rule r: A -> B when b0 + 2*b1 >= n - t do b0++, b1++;"))
    rule = ta.rule("r")
    assert rule.update == (("b0", 1), ("b1", 1))
    assert rule.guard[0].lhs == (("b0", 1), ("b1", 2))


def test_roundswitch_section_yields_multiround():
    ta = parse_ta(ta_text("rule r: A -> C when true;\nroundswitch C -> A;"))
    assert isinstance(ta, MultiRoundTA)
    assert [(r.source, r.target) for r in ta.round_switch] == [("C", "A")]


@pytest.mark.parametrize(
    "body, fragment",
    [
        ("rule r: A -> Z when true;", "Z"),
        ("rule r: A -> B when x >= 1;", "x"),
        ("rule r: A -> B when true do b0--;", "decrement"),
        ("rule r: A -> B when b0 < 1;", ">="),
        ("rule r: A -> B when b0 >= b1;", "parameter"),
    ],
)
def test_parse_errors(body, fragment):
    with pytest.raises(TAParseError) as info:
        parse_ta(ta_text(body))
    assert fragment.lower() in str(info.value).lower()
    assert info.value.line == 5


def test_syntax_error_reports_line_and_column():
    with pytest.raises(TAParseError) as info:
        parse_ta(ta_text("rule r: A => B when true;"))
    assert (info.value.line, info.value.column) == (5, 11)
    assert re.match(r"line 5, column 11", str(info.value))


def test_roundswitch_must_connect_final_to_initial():
    with pytest.raises(TAParseError):
        parse_ta(ta_text("roundswitch A -> C;"))


def test_parameters():
    p = Parameters.parse("4,1,1")
    assert p.as_tuple() == (4, 1, 1) and p.correct == 3 and str(p) == "(4,1,1)"
    with pytest.raises(ValueError):
        Parameters.parse("4,1")
    with pytest.raises(ValueError):
        Parameters(2, 1, 2)


def test_resilience_check():
    ta = bvb_ta()
    assert ta.admits(Parameters(4, 1, 1))
    assert not ta.admits(Parameters(6, 2, 2))
    with pytest.raises(ResilienceError):
        ta.check_params(Parameters(6, 2, 2))
    ta.check_params(Parameters(6, 2, 2), allow_unsafe=True)


@pytest.mark.parametrize("factory", [bvb_ta, naive_consensus_ta, simplified_consensus_ta, compact_consensus_ta])
def test_render_round_trips(factory):
    ta = factory()
    again = parse_ta(render(ta), ta.name)
    assert again == ta
    assert render(again) == render(ta)


# ---------------------------------------------------------------- validate_ta


@pytest.mark.parametrize("factory", [bvb_ta, naive_consensus_ta, simplified_consensus_ta, compact_consensus_ta])
def test_builtin_models_validate(factory):
    report = validate_ta(factory())
    assert report.ok, report.issues


def test_double_increment_flagged():
    ta = parse_ta(ta_text("rule r1: A -> B when true do b0++;\nrule r2: B -> C when true do b0++;"))
    report = validate_ta(ta)
    assert report.kinds() == {"double-increment"}
    assert "A" in report.issues[0].message and "C" in report.issues[0].message


def test_cycle_flagged():
    ta = parse_ta(ta_text("rule r1: A -> B when true;\nrule r2: B -> A when true;\nrule r3: B -> C when true;"))
    assert "cycle" in validate_ta(ta).kinds()


def test_unreachable_location_flagged():
    ta = parse_ta(ta_text("rule r1: A -> C when true;"))
    report = validate_ta(ta)
    assert report.kinds() == {"unreachable"}
    assert "B" in report.issues[0].message


def test_empty_initial_set_flagged():
    ta = ThresholdAutomaton(("A",), (), (), (), ())
    assert "empty-initial" in validate_ta(ta).kinds()


# ---------------------------------------------------------------- export_dot


def _edges(dot: str) -> list[str]:
    return [line for line in dot.splitlines() if "->" in line]


def test_dot_for_bvb():
    dot = export_dot(bvb_ta())
    assert dot.startswith('digraph "bvb" {')
    nodes = [line for line in dot.splitlines() if re.fullmatch(r'\s+"\w+"( \[.*\])?;', line)]
    assert len(nodes) == 10
    assert len(_edges(dot)) == 19
    assert "r3: b0 >= 2*t - f + 1" in dot
    assert "r1: true ↦ b0++" in dot


def test_dot_edges_sorted_by_rule_id():
    labels = [re.search(r'label="([^:]+):', line).group(1) for line in _edges(export_dot(bvb_ta()))]
    assert labels == sorted(labels)


def test_dot_single_location():
    ta = parse_ta(HEADER + "shared b0;\nlocations A*;\n")
    dot = export_dot(ta)
    assert _edges(dot) == []
    assert '"A"' in dot


def test_dot_round_switches_are_dotted():
    dot = export_dot(simplified_consensus_ta())
    dotted = sorted(re.match(r'\s+"(\w+)" -> "(\w+)"', line).groups() for line in _edges(dot) if "dotted" in line)
    assert dotted == [("D0", "V0"), ("E0x", "V0"), ("E1x", "V1")]


def test_dot_is_deterministic():
    assert export_dot(naive_consensus_ta()) == export_dot(naive_consensus_ta())
