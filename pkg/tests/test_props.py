import pytest

from tacheck.counter import explore, initial_configs
from tacheck.models import bvb_ta, read_data, simplified_consensus_ta, standard_properties
from tacheck.props import (
    And,
    Compare,
    LocationEmpty,
    LocationNonEmpty,
    Or,
    PropertySyntaxError,
    Shape,
    ShapeError,
    UnknownIdentifierError,
    counters,
    evaluate,
    negate,
    parse_properties,
    parse_property,
    progress_assumption,
)
from tacheck.ta import Parameters


def test_safety_gg_shape():
    prop = parse_property("inv2_0: [](locV0 == 0) -> [](locD0 == 0 && locE0x == 0);")
    assert prop.name == "inv2_0" and prop.shape is Shape.SAFETY_GG
    assert prop.premise == LocationEmpty("V0")
    assert prop.conclusion == And((LocationEmpty("D0"), LocationEmpty("E0x")))


def test_safety_fg_shape():
    prop = parse_property("inv1_0: <>(locD0 != 0) -> [](locD1 == 0 && locE1x == 0);")
    assert prop.shape is Shape.SAFETY_FG
    assert prop.premise == LocationNonEmpty("D0")


def test_liveness_and_plain_shapes():
    assert parse_property("l: <>[](locA == 0) -> <>(locB != 0);").shape is Shape.LIVENESS_FGF
    assert parse_property("g: [](locA == 0);").shape is Shape.PLAIN_G
    assert parse_property("f: <>(locA != 0);").shape is Shape.PLAIN_F


def test_g_to_f_is_a_shape_error():
    with pytest.raises(ShapeError):
        parse_property("p: [](x >= 1) -> <>(locA == 0);")


def test_syntax_error_position():
    with pytest.raises(PropertySyntaxError) as info:
        parse_property("p: [](locA == ) ;")
    assert (info.value.line, info.value.column) == (1, 15)


def test_comments_and_multiline():
    props = parse_properties("/* block */\n// line\na: [](locA == 0);\nb:\n  <>(locB != 0 ||\n     locA != 0);\n")
    assert [p.name for p in props] == ["a", "b"]
    assert props[1].conclusion == Or((LocationNonEmpty("B"), LocationNonEmpty("A")))


def test_unknown_identifiers_rejected_when_bound():
    with pytest.raises(UnknownIdentifierError):
        parse_property("p: [](locNowhere == 0);", bvb_ta())
    with pytest.raises(UnknownIdentifierError):
        parse_property("p: [](zz < 1);", bvb_ta())


def test_arithmetic_comparison_with_parameters():
    prop = parse_property("p: [](b0 < 2*T + 1 - F);", bvb_ta())
    assert isinstance(prop.conclusion, Compare)
    assert counters(prop.conclusion) == {"b0"}


def test_str_round_trips():
    for prop in standard_properties("simplified", "literal"):
        assert parse_property(str(prop)) == prop


def test_negate_is_complement():
    ta = bvb_ta()
    params = Parameters(4, 1, 1)
    formula = parse_property("p: [](locB0 == 0 && (b0 >= T + 1 || locC0 != 0));", ta).conclusion
    for c in explore(ta, params, initial_configs(ta, params)).configs():
        assert evaluate(negate(formula), c) != evaluate(formula, c)


def test_shipped_files_parse():
    for name in ("bvb.props", "naive.props", "simplified.props", "literal.props"):
        assert parse_properties(read_data(name))


def test_suite_sizes():
    assert len(standard_properties("bvb")) == 7
    assert len(standard_properties("simplified")) == 9


def test_good_1_from_literal_block():
    good_1 = {p.name: p for p in standard_properties("simplified", "literal")}["good_1"]
    assert good_1.shape is Shape.SAFETY_GG
    assert good_1.premise == LocationEmpty("M1x")
    assert good_1.conclusion == LocationEmpty("E1x")


def test_bv_just_0_shape():
    just = {p.name: p for p in standard_properties("bvb")}["bv_just_0"]
    assert just.shape is Shape.SAFETY_GG and just.premise == LocationEmpty("V0")


@pytest.mark.parametrize("params", [Parameters(4, 1, 1), Parameters(7, 2, 2), Parameters(4, 1, 0)])
def test_progress_assumption_matches_handwritten_premise(params):
    ta = bvb_ta()
    derived = progress_assumption(ta)
    written = {p.name: p for p in standard_properties("bvb")}["bv_term"].premise
    for c in explore(ta, params, initial_configs(ta, params)).configs():
        assert evaluate(derived, c) == evaluate(written, c)


def test_simplified_premise_mentions_every_guarded_source():
    premise = progress_assumption(simplified_consensus_ta().base)
    text = str(premise)
    for loc in ("V0", "V1", "M", "M0", "M1", "M01"):
        assert f"loc{loc} == 0" in text
