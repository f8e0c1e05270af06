"""Consolidation and scoring, checked against brute-force vote counting."""

import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from taskads.consolidate import (
    EmptyInput,
    TooManyResponses,
    build_progress,
    consolidate,
    score_participant,
)
from taskads.model import NO, NOT_SURE, UNDECIDED, YES, Response

OPTIONS = (YES, NO, NOT_SURE)


def reference_verdict(choices):
    """Independent oracle: count votes directly."""
    yes = sum(1 for c in choices if c == YES)
    no = sum(1 for c in choices if c == NO)
    if yes > no:
        return YES
    if no > yes:
        return NO
    return UNDECIDED


class TestConsolidate:
    def test_strict_majority(self):
        label = consolidate([YES, YES, NO], 3)
        assert label.verdict == YES
        assert label.complete
        assert label.vote_counts == {YES: 2, NO: 1}

    def test_notsure_abstains(self):
        label = consolidate([YES, NO, NOT_SURE], 3)
        assert label.verdict == UNDECIDED
        assert label.complete

    def test_too_many_responses(self):
        with pytest.raises(TooManyResponses):
            consolidate([YES] * 4, 3)

    def test_incomplete_below_k(self):
        label = consolidate([YES], 3)
        assert not label.complete
        assert label.verdict == YES

    def test_exhaustive_oracle_all_multisets_up_to_5(self):
        # every response sequence of length 0..5 over the three options
        checked = 0
        for n in range(6):
            for seq in itertools.product(OPTIONS, repeat=n):
                label = consolidate(seq, 5)
                assert label.verdict == reference_verdict(seq), seq
                assert label.complete == (n == 5)
                assert sum(label.vote_counts.values()) == n
                for opt in OPTIONS:
                    assert label.vote_counts.get(opt, 0) == seq.count(opt)
                checked += 1
        assert checked == sum(3**n for n in range(6))  # 364 sequences

    @given(st.lists(st.sampled_from(OPTIONS), max_size=8).flatmap(
        lambda xs: st.permutations(xs).map(lambda p: (xs, list(p)))))
    @settings(max_examples=200, deadline=None)
    def test_permutation_invariance(self, pair):
        choices, shuffled = pair
        a = consolidate(choices, 10)
        b = consolidate(shuffled, 10)
        assert a.verdict == b.verdict
        assert a.vote_counts == b.vote_counts

    @given(st.lists(st.sampled_from(OPTIONS), max_size=10))
    @settings(max_examples=200, deadline=None)
    def test_monotone_completeness(self, choices):
        k = max(len(choices), 1)
        complete_before = consolidate(choices[:-1] if choices else [], k).complete
        complete_after = consolidate(choices, k).complete
        if complete_before:
            assert complete_after

    @given(st.lists(st.sampled_from(OPTIONS), max_size=10))
    @settings(max_examples=200, deadline=None)
    def test_verdict_symmetry(self, choices):
        swap = {YES: NO, NO: YES, NOT_SURE: NOT_SURE}
        swapped = [swap[c] for c in choices]
        v1 = consolidate(choices, 10).verdict
        v2 = consolidate(swapped, 10).verdict
        assert v2 == {YES: NO, NO: YES, UNDECIDED: UNDECIDED}[v1]


class TestScoreParticipant:
    def test_benchmark_ratio(self):
        # 41 correct of 50 labeled -> 0.82
        records = [(YES, YES, 3.0)] * 41 + [(NO, YES, 3.0)] * 9
        score = score_participant(records, user_id="u")
        assert score.n_labeled == 50
        assert score.n_correct == 41
        assert score.success_rate == pytest.approx(0.82)

    def test_all_notsure_scores_zero(self):
        records = [(NOT_SURE, YES, 2.0), (NOT_SURE, NO, 2.0)]
        assert score_participant(records).success_rate == 0.0

    def test_mean_time(self):
        records = [(YES, YES, 2.0), (YES, YES, 4.0), (YES, YES, 6.0)]
        score = score_participant(records)
        assert score.mean_time == pytest.approx(4.0)
        assert score.median_time == pytest.approx(4.0)

    def test_empty_input(self):
        with pytest.raises(EmptyInput):
            score_participant([])

    @given(
        st.lists(st.tuples(st.sampled_from(OPTIONS), st.sampled_from([YES, NO]),
                           st.floats(0.1, 30.0)), min_size=1, max_size=40),
        st.lists(st.tuples(st.sampled_from(OPTIONS), st.sampled_from([YES, NO]),
                           st.floats(0.1, 30.0)), min_size=1, max_size=40),
    )
    @settings(max_examples=100, deadline=None)
    def test_concatenation_rate_between_parts(self, part_a, part_b):
        ra = score_participant(part_a).success_rate
        rb = score_participant(part_b).success_rate
        rc = score_participant(part_a + part_b).success_rate
        assert min(ra, rb) - 1e-12 <= rc <= max(ra, rb) + 1e-12
        assert 0.0 <= rc <= 1.0


class TestProgress:
    def test_fresh_campaign(self):
        counts = {f"i{n}": (0, 3) for n in range(50)}
        report = build_progress("c1", counts, [], generated_at=0.0)
        assert report.items_complete == 0
        assert report.responses_total == 0
        assert report.items_total == 50

    def test_histogram_matches_raw_recount(self):
        # mid-run snapshot: recompute histogram from the raw response log
        counts = {}
        responses = []
        expected = {YES: 0, NO: 0, UNDECIDED: 0}
        patterns = [
            ("a", [YES, YES, NO], True),
            ("b", [NO, NO, YES], True),
            ("c", [YES, NO, NOT_SURE], True),
            ("d", [YES, YES], False),
            ("e", [], False),
        ]
        for item, choices, complete in patterns:
            counts[item] = (len(choices), 3)
            for i, ch in enumerate(choices):
                responses.append((item, f"u{i}", Response(f"a-{item}-{i}", ch, 1.0, 1.0)))
            if complete:
                expected[reference_verdict(choices)] += 1
        report = build_progress("c1", counts, responses, generated_at=5.0)
        assert report.items_complete == 3
        assert report.verdict_histogram == expected
        assert sum(report.verdict_histogram.values()) == report.items_complete
