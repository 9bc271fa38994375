"""Property-based checks at a moderate case count; the acceptance run uses 10^4."""

from property_cases import CASES, as_test

EXAMPLES = 300

test_conservation = as_test(CASES["conservation"], EXAMPLES)
test_monotonicity_and_bound = as_test(CASES["monotonicity_and_bound"], EXAMPLES)
test_guard_monotonicity = as_test(CASES["guard_monotonicity"], EXAMPLES)
test_commutation = as_test(CASES["commutation"], EXAMPLES)
test_counterexample_replay = as_test(CASES["counterexample_replay"], EXAMPLES)
