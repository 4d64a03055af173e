import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctcalign import (
    LineSet,
    UndefinedMetricError,
    aggregate,
    cer,
    cer_n,
    confidence_buckets,
    edit_distance,
    line_level_accuracy,
    wer,
)
from ctcalign.aligner import AlignedLine, AlignmentResult

from conftest import reference_edit_distance

short_text = st.text(alphabet="abc x", max_size=12)


class TestEditDistance:
    def test_against_full_table_reference(self):
        import random

        rng = random.Random(0)
        chars = "abcdex "
        for _ in range(300):
            a = "".join(rng.choices(chars, k=rng.randrange(0, 12)))
            b = "".join(rng.choices(chars, k=rng.randrange(0, 12)))
            assert edit_distance(a, b) == reference_edit_distance(a, b)

    @given(short_text, short_text)
    @settings(max_examples=200, deadline=None)
    def test_symmetry(self, a, b):
        assert edit_distance(a, b) == edit_distance(b, a)

    @given(short_text, short_text, short_text)
    @settings(max_examples=200, deadline=None)
    def test_triangle_inequality(self, a, b, c):
        assert edit_distance(a, c) <= edit_distance(a, b) + edit_distance(b, c)

    def test_works_on_token_lists(self):
        assert edit_distance(["a", "b"], ["a", "x", "b"]) == 1


class TestCer:
    def test_identical(self):
        assert cer("abc", "abc") == 0.0

    def test_single_substitution(self):
        assert cer("foo", "fou") == pytest.approx(1 / 3)

    def test_empty_prediction(self):
        assert cer("ab", "") == 1.0

    def test_empty_ground_truth_rejected(self):
        with pytest.raises(UndefinedMetricError):
            cer("", "ab")


class TestWer:
    def test_identical(self):
        assert wer("a b c", "a b c") == 0.0

    def test_single_substitution(self):
        assert wer("a b c", "a x c") == pytest.approx(1 / 3)

    def test_deletion(self):
        assert wer("a b", "a") == 0.5

    def test_whitespace_runs_are_one_separator(self):
        assert wer("a  b", "a b") == 0.0

    def test_empty_ground_truth_rejected(self):
        with pytest.raises(UndefinedMetricError):
            wer("   ", "a")


class TestCerN:
    def test_identical(self):
        assert cer_n("abcdefgh", "abcdefgh", 3) == 0.0

    def test_window_wise_example(self):
        # edit("ab","Xb")=1 on the left, edit("gh","gh")=0 on the right
        assert cer_n("abcdefgh", "Xbcdefgh", 2) == pytest.approx(1 / 4)

    def test_dropped_first_word_dominates_left_window(self):
        gt = "status sit Coloniensium nonnulla ex hoc libello cognoscetis ex"
        pred = "sit Coloniensium nonnulla ex hoc libello cognoscetis ex"
        assert gt[-6:] == pred[-6:]  # the right window is clean
        assert cer_n(gt, pred, 6) > 0.0
        assert cer(gt, pred) < cer_n(gt, pred, 6)

    def test_windows_clamp_on_short_strings(self):
        # |gt| = 2 < n: both windows are the whole string
        assert cer_n("ab", "ab", 6) == 0.0
        assert cer_n("ab", "xb", 6) == pytest.approx(2 / 4)

    @given(st.text(alphabet="abcx", min_size=1, max_size=8),
           st.text(alphabet="abcx", max_size=8))
    @settings(max_examples=150, deadline=None)
    def test_equals_cer_when_both_have_length_n(self, gt, pred):
        if len(gt) != len(pred):
            return
        n = len(gt)
        assert cer_n(gt, pred, n) == pytest.approx(cer(gt, pred))

    def test_invalid_window(self):
        with pytest.raises(ValueError):
            cer_n("ab", "ab", 0)


GT4 = LineSet("L", ("one", "two", "three", "four"))


class TestLineLevelAccuracy:
    def test_identical_sets(self):
        assert line_level_accuracy([GT4], [GT4]) == 1.0

    def test_three_of_four_match(self):
        pred = LineSet("L", ("one", "two", "x", "four"))
        assert line_level_accuracy([GT4], [pred]) == 0.75

    def test_truncated_prediction_keeps_full_denominator(self):
        pred = LineSet("L", ("one", "two"))
        assert line_level_accuracy([GT4], [pred]) == 0.5

    def test_trailing_whitespace_is_trimmed(self):
        pred = LineSet("L", ("one  ", "two", "three", "four\t"))
        assert line_level_accuracy([GT4], [pred]) == 1.0

    def test_leading_whitespace_counts_as_mismatch(self):
        pred = LineSet("L", (" one", "two", "three", "four"))
        assert line_level_accuracy([GT4], [pred]) == 0.75

    def test_letter_id_mismatch(self):
        with pytest.raises(ValueError, match="missing"):
            line_level_accuracy([GT4], [LineSet("other", ("one",))])

    def test_extra_pred_lines_are_ignored(self):
        pred = LineSet("L", ("one", "two", "three", "four", "junk", "junk"))
        assert line_level_accuracy([GT4], [pred]) == 1.0

    def test_content_beyond_min_length_is_irrelevant(self):
        a = LineSet("L", ("one", "two", "x", "y"))
        b = LineSet("L", ("one", "two", "p", "q"))
        short = LineSet("L", ("one", "two"))
        assert (line_level_accuracy([GT4], [a])
                == line_level_accuracy([GT4], [b])
                == 0.5)
        assert line_level_accuracy([GT4], [short]) == 0.5


class TestAggregate:
    def test_equal_lengths_average(self):
        gt = [LineSet("L", ("abcde", "fghij"))]
        pred = [LineSet("L", ("abcde", "zzzzz"))]
        report = aggregate(gt, pred)
        assert report.cer == 0.5
        assert report.counts["gt_chars"] == 10
        assert report.counts["edit_ops"] == 5

    def test_micro_average_weights_by_length(self):
        gt = [LineSet("L", ("a" * 10, "b" * 30))]
        pred = [LineSet("L", ("a" * 9 + "x", "b" * 30))]
        report = aggregate(gt, pred)
        assert report.cer == pytest.approx(1 / 40)

    def test_single_line_equals_line_metric(self):
        gt = [LineSet("L", ("hello world",))]
        pred = [LineSet("L", ("hello wxrld",))]
        report = aggregate(gt, pred)
        assert report.cer == pytest.approx(cer("hello world", "hello wxrld"))
        assert report.wer == pytest.approx(wer("hello world", "hello wxrld"))

    def test_missing_pred_line_counts_as_deleted(self):
        gt = [LineSet("L", ("abcd", "efgh"))]
        pred = [LineSet("L", ("abcd",))]
        report = aggregate(gt, pred)
        assert report.cer == pytest.approx(4 / 8)
        assert report.line_accuracy == 0.5

    def test_empty_ground_truth_is_undefined(self):
        gt = [LineSet("L", ("",))]
        pred = [LineSet("L", ("x",))]
        report = aggregate(gt, pred)
        assert report.cer is None
        assert report.wer is None
        assert report.cer_n is None
        # a predicted line against empty ground truth is pure insertion
        assert report.counts["edit_ops"] == 1


def _result(letter_id, texts, confidences):
    lines = tuple(
        AlignedLine(
            line_id=f"l{k}", text=t, start_step=0, end_step=0,
            gamma=c, gamma6=c,
        )
        for k, (t, c) in enumerate(zip(texts, confidences))
    )
    return AlignmentResult(letter_id, lines, 0.0, 0.0)


class TestConfidenceBuckets:
    def test_accuracy_per_bucket(self):
        gt = [LineSet("L", ("good", "good", "bad", "bad"))]
        results = [_result("L", ("good", "good", "bad", "wrong"),
                           (0.95, 0.92, 0.55, 0.51))]
        buckets = confidence_buckets(gt, results, num_buckets=10)
        assert buckets[9]["count"] == 2
        assert buckets[9]["line_accuracy"] == 1.0
        assert buckets[5]["count"] == 2
        assert buckets[5]["line_accuracy"] == 0.5
        assert buckets[0]["count"] == 0
        assert buckets[0]["line_accuracy"] is None

    def test_confidence_of_one_lands_in_top_bucket(self):
        gt = [LineSet("L", ("x",))]
        results = [_result("L", ("x",), (1.0,))]
        buckets = confidence_buckets(gt, results, num_buckets=10)
        assert buckets[9]["count"] == 1

    def test_unknown_measure_rejected(self):
        with pytest.raises(ValueError, match="measure"):
            confidence_buckets([], [], measure="belief")
