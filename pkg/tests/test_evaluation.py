from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from openasn.evaluation import (
    PRINTED_THRESHOLDS,
    RECONCILED_THRESHOLDS,
    Comparison,
    InvalidRatio,
    build_condition_sets,
    evaluate,
    scale_thresholds,
)
from openasn.model import Doi, IndicatorTriple, Role, ThresholdSet

FULL = RECONCILED_THRESHOLDS[Role.FULL]
ASSOCIATE = RECONCILED_THRESHOLDS[Role.ASSOCIATE]


def test_threshold_tables():
    assert FULL.as_tuple() == (8, 216, 8)
    assert ASSOCIATE.as_tuple() == (5, 118, 6)
    assert PRINTED_THRESHOLDS[Role.ASSOCIATE].as_tuple() == (8, 216, 8)
    assert PRINTED_THRESHOLDS[Role.FULL].as_tuple() == (5, 118, 6)


def test_condition_sets():
    a, b, c = Doi("10.1/a"), Doi("10.1/b"), Doi("10.1/c")
    sets = build_condition_sets({a, b}, {b, c})
    assert sets.cu == {a, b, c}
    assert sets.ccv == {a, b} and sets.cdblp == {b, c}
    empty = build_condition_sets(set(), set())
    assert not empty.ccv and not empty.cdblp and not empty.cu


dois = st.frozensets(st.integers(0, 30).map(lambda i: Doi(f"10.1/{i}")), max_size=15)


@given(dois, dois)
def test_union_bounds_and_symmetry(x, y):
    s = build_condition_sets(x, y)
    assert max(len(x), len(y)) <= len(s.cu) <= len(x) + len(y)
    swapped = build_condition_sets(y, x)
    assert swapped.cu == s.cu and swapped.ccv == s.cdblp


def test_table3_candidates():
    one = evaluate(IndicatorTriple(15, 417, 12), FULL)
    assert (one.pass_a, one.pass_b, one.pass_c, one.overall) == (True, True, True, True)
    two = evaluate(IndicatorTriple(8, 197, 7), FULL)
    assert (two.pass_a, two.pass_b, two.pass_c, two.overall) == (True, False, False, False)


def test_zero_triple_fails():
    out = evaluate(IndicatorTriple(0, 0, 0), FULL)
    assert not any(out.flags())


def test_strict_comparison():
    out = evaluate(IndicatorTriple(8, 216, 8), FULL, Comparison.STRICTLY_GREATER)
    assert not any(out.flags())
    assert all(evaluate(IndicatorTriple(8, 216, 8), FULL).flags())


triples = st.builds(IndicatorTriple, *(st.floats(0, 500, allow_nan=False) for _ in range(3)))


@given(triples, st.integers(0, 2), st.floats(0, 100), st.sampled_from(list(Comparison)))
def test_evaluate_monotone(triple, which, bump, comparison):
    values = list(triple.as_tuple())
    values[which] += bump
    before = evaluate(triple, ASSOCIATE, comparison)
    after = evaluate(IndicatorTriple(*values), ASSOCIATE, comparison)
    for b, a in zip(before.flags(), after.flags()):
        assert a or not b


@pytest.mark.parametrize(
    "base, ratio, expected",
    [
        (ASSOCIATE, 0.60, (3, 71, 4)),
        (FULL, 0.50, (4, 108, 4)),
        (FULL, 1.0, (8, 216, 8)),
        (ASSOCIATE, 0.70, (4, 83, 4)),  # 3.5 -> 4, 82.6 -> 83, 4.2 -> 4
        (ASSOCIATE, 0.10, (1, 12, 1)),  # 0.5 -> 1, 11.8 -> 12, 0.6 -> 1
    ],
)
def test_scale_thresholds(base, ratio, expected):
    assert scale_thresholds(base, ratio).as_tuple() == expected


@pytest.mark.parametrize("ratio", [0, -0.1, 1.01, float("nan")])
def test_scale_thresholds_rejects(ratio):
    with pytest.raises(InvalidRatio):
        scale_thresholds(FULL, ratio)


thresholds = st.builds(lambda a, b, c: ThresholdSet(Role.FULL, a, b, c), *(st.integers(0, 1000) for _ in range(3)))
ratio_st = st.floats(0.001, 1.0)


@given(thresholds, ratio_st, ratio_st)
def test_scale_monotone_and_identity(t, r1, r2):
    assert scale_thresholds(t, 1.0) == t
    lo, hi = sorted((r1, r2))
    for x, y in zip(scale_thresholds(t, lo).as_tuple(), scale_thresholds(t, hi).as_tuple()):
        assert x <= y
