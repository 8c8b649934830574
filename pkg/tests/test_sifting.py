import csv
import itertools
import math
from collections import Counter
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mppm_qkd.interference import outcome_distribution, phase_delta
from mppm_qkd.model import DetectorClass, MatchClass, TrainEncoding
from mppm_qkd.sifting import (
    BIT_TUPLES,
    eve_ambiguity,
    expected_detector_class,
    match_class,
    sift,
)

GOLDEN = Path(__file__).parent / "data" / "sift_table_zero.csv"


def trains_with(phases_a, phases_b, bits_a=(0, 0), bits_b=(0, 0), M=16):
    return (
        TrainEncoding(phases_a, bits_a, phase_slices=M),
        TrainEncoding(phases_b, bits_b, phase_slices=M),
    )


@pytest.mark.parametrize(
    "pa, pb, expected",
    [
        ((math.pi / 4, math.pi / 4), (math.pi / 4, math.pi / 4), MatchClass.ZERO),
        ((math.pi, 0.0), (0.0, 0.0), MatchClass.PI),
        ((math.pi / 2, 0.0), (0.0, 0.0), MatchClass.NONE),
    ],
)
@pytest.mark.parametrize("M", [16, None])
def test_match_class_examples(pa, pb, expected, M):
    alice, bob = trains_with(pa, pb, M=M)
    assert match_class(alice, bob, 0, 1) is expected


def test_match_class_index_error():
    alice, bob = trains_with((0.0, 0.0), (0.0, 0.0))
    with pytest.raises(IndexError):
        match_class(alice, bob, 0, 2)


@pytest.mark.parametrize(
    "bits, cls, s",
    [
        ((0, 0, 0, 1), DetectorClass.DIFF, 0),
        ((0, 1, 1, 0), DetectorClass.SAME, 1),
        ((0, 0, 0, 0), DetectorClass.SAME, 0),
    ],
)
def test_sift_table_examples(bits, cls, s):
    assert expected_detector_class(*bits, MatchClass.ZERO) is cls
    res = sift(MatchClass.ZERO, cls, *bits)
    assert (res.s_a, res.s_b) == (s, s)


def test_expected_class_examples():
    assert expected_detector_class(0, 0, 0, 0, MatchClass.ZERO) is DetectorClass.SAME
    assert expected_detector_class(0, 1, 0, 0, MatchClass.ZERO) is DetectorClass.DIFF
    assert expected_detector_class(0, 0, 0, 0, MatchClass.PI) is DetectorClass.DIFF


def test_unmatched_cannot_be_sifted():
    with pytest.raises(ValueError):
        sift(MatchClass.NONE, DetectorClass.SAME, 0, 0, 0, 0)
    with pytest.raises(ValueError):
        expected_detector_class(0, 0, 0, 0, MatchClass.NONE)


def test_zero_match_equals_golden_table():
    with GOLDEN.open() as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 16
    for row in rows:
        bits = tuple(int(row[k]) for k in ("kA_m", "kA_n", "kB_m", "kB_n"))
        cls = expected_detector_class(*bits, MatchClass.ZERO)
        res = sift(MatchClass.ZERO, cls, *bits)
        assert cls.value == row["detector_class"]
        assert (res.s_a, res.s_b) == (int(row["s_A"]), int(row["s_B"]))


@pytest.mark.parametrize("match", [MatchClass.ZERO, MatchClass.PI])
@pytest.mark.parametrize("bits", BIT_TUPLES)
def test_consistent_class_gives_agreement(bits, match):
    res = sift(match, expected_detector_class(*bits, match), *bits)
    assert res.s_a == res.s_b
    wrong = sift(match, expected_detector_class(*bits, match).flipped(), *bits)
    assert wrong.s_a != wrong.s_b


@pytest.mark.parametrize("bits", BIT_TUPLES)
def test_pi_rules_against_interference(bits):
    ka_m, ka_n, kb_m, kb_n = bits
    alice, bob = trains_with((math.pi, 0.0), (0.0, 0.0), (ka_m, ka_n), (kb_m, kb_n))
    assert match_class(alice, bob, 0, 1) is MatchClass.PI
    d = outcome_distribution(phase_delta(alice, bob, 0, 1))
    cls = expected_detector_class(*bits, MatchClass.PI)
    assert (d.p_same if cls is DetectorClass.SAME else d.p_diff) == 1.0


grid_case = st.integers(2, 6).flatmap(
    lambda L: st.tuples(
        st.lists(st.integers(0, 15), min_size=L, max_size=L),
        st.lists(st.integers(0, 1), min_size=L, max_size=L),
        st.lists(st.integers(0, 15), min_size=L, max_size=L),
        st.lists(st.integers(0, 1), min_size=L, max_size=L),
        st.sampled_from(list(itertools.permutations(range(L), 2))),
    )
)


@given(grid_case)
def test_physical_consistency_on_grid(case):
    sa, ka, sb, kb, (m, n) = case
    alice = TrainEncoding.from_slices(sa, ka, 16)
    bob = TrainEncoding.from_slices(sb, kb, 16)
    match = match_class(alice, bob, m, n)
    if match is MatchClass.NONE:
        return
    bits = (ka[m], ka[n], kb[m], kb[n])
    cls = expected_detector_class(*bits, match)
    d = outcome_distribution(phase_delta(alice, bob, m, n))
    assert (d.p_same if cls is DetectorClass.SAME else d.p_diff) == 1.0


@pytest.mark.parametrize("match", [MatchClass.ZERO, MatchClass.PI])
@pytest.mark.parametrize("cls", list(DetectorClass))
def test_eve_ambiguity_balanced(cls, match):
    consistent = eve_ambiguity(cls, match)
    assert len(consistent) == 8
    assert Counter(row[4] for row in consistent) == {0: 4, 1: 4}


@pytest.mark.parametrize("match", [MatchClass.ZERO, MatchClass.PI])
def test_eve_ambiguity_partitions_all_assignments(match):
    union = [row[:4] for cls in DetectorClass for row in eve_ambiguity(cls, match)]
    assert sorted(union) == sorted(BIT_TUPLES)


def test_diff_zero_set_matches_listed_states():
    # the eight phase-encoded states Charlie cannot tell apart after a DIFF click
    listed = {(0, 0, 0, 1), (0, 0, 1, 0), (0, 1, 0, 0), (0, 1, 1, 1),
              (1, 0, 0, 0), (1, 0, 1, 1), (1, 1, 0, 1), (1, 1, 1, 0)}
    got = {row[:4] for row in eve_ambiguity(DetectorClass.DIFF, MatchClass.ZERO)}
    assert got == listed
