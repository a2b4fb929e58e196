"""Tests for action-segmentation metrics"""

from functools import lru_cache
from itertools import product

import pytest

import skillgauge as sg
from skillgauge.eval_segment import Segment, SegmentCounts, from_segments, levenshtein

G = sg.GestureLabel
GESTURES = list(G)


def _runs(*pairs):
    """[(label, count), ...] -> frame labels"""
    out = []
    for label, count in pairs:
        out.extend([label] * count)
    return out


def _random_labels(rng, n, k=4):
    return [GESTURES[int(i)] for i in rng.integers(0, k, n)]


def _all_sequences(labels, max_len):
    return [seq for n in range(max_len + 1) for seq in product(labels, repeat=n)]


def _edit_oracle(a, b):
    @lru_cache(maxsize=None)
    def d(i, j):
        if i == 0:
            return j
        if j == 0:
            return i
        return min(d(i - 1, j) + 1, d(i, j - 1) + 1, d(i - 1, j - 1) + (a[i - 1] is not b[j - 1]))

    return d(len(a), len(b))


@pytest.mark.segmentation
class TestSegments:
    """Test run-length segmentation"""

    def test_two_segments(self):
        """Test G0, G0, G1"""
        assert sg.to_segments([G.G0, G.G0, G.G1]) == (Segment(G.G0, 0, 1), Segment(G.G1, 2, 2))

    def test_single_frame(self):
        """Test a one-frame sequence"""
        assert sg.to_segments([G.G2]) == (Segment(G.G2, 0, 0),)

    def test_round_trip(self, rng):
        """Test that expanding segments restores random sequences"""
        for _ in range(1000):
            labels = _random_labels(rng, int(rng.integers(1, 30)))
            segments = sg.to_segments(labels)
            assert from_segments(segments) == labels
            assert all(a.label is not b.label for a, b in zip(segments, segments[1:]))
            assert sum(s.length for s in segments) == len(labels)

    def test_empty_sequence(self):
        """Test that nothing cannot be segmented"""
        with pytest.raises(sg.ValidationError):
            sg.to_segments([])

    def test_invalid_bounds(self):
        """Test inclusive bounds validation"""
        with pytest.raises(sg.ValidationError):
            Segment(G.G0, 5, 4)


@pytest.mark.segmentation
class TestFrameAccuracy:
    """Test frame-wise accuracy"""

    def test_identical(self):
        """Test identical sequences"""
        labels = [G.G0, G.G1, G.G2]
        assert sg.frame_accuracy(labels, labels) == 100.0

    def test_three_of_four(self):
        """Test one wrong frame out of four"""
        assert sg.frame_accuracy([G.G0, G.G0, G.G1, G.G1], [G.G0, G.G0, G.G1, G.G2]) == 75.0

    def test_disjoint(self):
        """Test no frame right"""
        assert sg.frame_accuracy([G.G0, G.G0], [G.G1, G.G1]) == 0.0

    def test_exclude_background(self):
        """Test that G6 frames do not count when excluded"""
        gt = [G.G6, G.G6, G.G1, G.G1]
        pred = [G.G0, G.G0, G.G1, G.G2]
        assert sg.frame_accuracy(gt, pred) == 25.0
        assert sg.frame_accuracy(gt, pred, exclude_background=True) == 50.0
        assert sg.frame_accuracy([G.G6], [G.G0], exclude_background=True) == 100.0

    def test_matches_naive_count(self, rng):
        """Test random sequences, background included, against a plain count"""
        for _ in range(1000):
            n = int(rng.integers(1, 50))
            gt = _random_labels(rng, n, k=len(GESTURES))
            noise = _random_labels(rng, n, k=len(GESTURES))
            pred = [g if rng.random() < 0.6 else other for g, other in zip(gt, noise)]
            for exclude in (False, True):
                pairs = [(g, p) for g, p in zip(gt, pred) if not (exclude and g is G.G6)]
                correct = sum(1 for g, p in pairs if g is p)
                expected = 100.0 * correct / len(pairs) if pairs else 100.0
                assert sg.frame_accuracy(gt, pred, exclude_background=exclude) == expected

    def test_length_mismatch(self):
        """Test sequences of different length"""
        with pytest.raises(sg.ValidationError, match="frames"):
            sg.frame_accuracy([G.G0], [G.G0, G.G0])


@pytest.mark.segmentation
class TestEditScore:
    """Test the segmental edit score"""

    def test_identical(self):
        """Test identical segment orders with different durations"""
        gt = sg.to_segments(_runs((G.G0, 3), (G.G1, 5)))
        pred = sg.to_segments(_runs((G.G0, 7), (G.G1, 1)))
        assert sg.edit_score(gt, pred) == 100.0

    def test_one_deletion(self):
        """Test G0 G1 G2 against G0 G2"""
        gt = sg.to_segments([G.G0, G.G1, G.G2])
        pred = sg.to_segments([G.G0, G.G2, G.G2])
        assert sg.edit_score(gt, pred) == pytest.approx(66.67, abs=0.01)

    def test_disjoint(self):
        """Test equal-length sequences with nothing in common"""
        gt = sg.to_segments([G.G0, G.G1, G.G0])
        pred = sg.to_segments([G.G2, G.G3, G.G2])
        assert sg.edit_score(gt, pred) == 0.0

    def test_background_excluded(self):
        """Test that G6 segments drop out before comparison"""
        gt = sg.to_segments([G.G6, G.G0, G.G6, G.G1])
        pred = sg.to_segments([G.G0, G.G0, G.G1, G.G1])
        assert sg.edit_score(gt, pred) == 50.0
        assert sg.edit_score(gt, pred, exclude_background=True) == 100.0
        only_background = sg.to_segments([G.G6])
        assert sg.edit_score(only_background, only_background, exclude_background=True) == 100.0

    def test_levenshtein_matches_recursion(self, rng):
        """Test the table against a recursive oracle"""
        for _ in range(200):
            a = _random_labels(rng, int(rng.integers(0, 8)))
            b = _random_labels(rng, int(rng.integers(0, 8)))
            assert levenshtein(a, b) == _edit_oracle(tuple(a), tuple(b))

    def test_levenshtein_all_short_pairs(self):
        """Test every pair of sequences up to length 4 over three labels"""
        sequences = _all_sequences(GESTURES[:3], 4)
        for a in sequences:
            for b in sequences:
                assert levenshtein(a, b) == _edit_oracle(a, b)

    @pytest.mark.slow
    def test_levenshtein_every_sequence_up_to_eight(self, rng):
        """Test every sequence up to length 8 over three labels against sampled partners"""
        sequences = _all_sequences(GESTURES[:3], 8)
        assert len(sequences) == 9841
        for a in sequences:
            assert levenshtein(a, a) == 0
            assert levenshtein(a, ()) == len(a)
            for idx in rng.integers(0, len(sequences), 3):
                b = sequences[int(idx)]
                assert levenshtein(a, b) == _edit_oracle(a, b)

    def test_score_bounds(self, rng, assertions):
        """Test that scores stay percentages"""
        for _ in range(100):
            gt = sg.to_segments(_random_labels(rng, 20))
            pred = sg.to_segments(_random_labels(rng, 20))
            assertions.assert_percent(sg.edit_score(gt, pred))


@pytest.mark.segmentation
class TestF1:
    """Test segmental F1 at overlap thresholds"""

    def test_identical(self):
        """Test identical segmentations at every k"""
        segs = sg.to_segments(_runs((G.G0, 4), (G.G1, 6), (G.G2, 2)))
        for k in (10, 25, 50):
            assert sg.f1_at_k(segs, segs, k) == 100.0

    def test_half_overlap_counts_at_50(self):
        """Test IoU exactly 0.5 at k=50"""
        gt = [Segment(G.G1, 0, 99)]
        pred = [Segment(G.G1, 0, 49)]
        assert sg.f1_at_k(gt, pred, 50) == 100.0

    def test_overlap_below_k(self):
        """Test IoU 0.4 at k=50"""
        gt = [Segment(G.G1, 0, 99)]
        pred = [Segment(G.G1, 0, 39)]
        assert sg.segment_counts(gt, pred, 50) == SegmentCounts(tp=0, fp=1, fn=1)
        assert sg.f1_at_k(gt, pred, 50) == 0.0
        assert sg.f1_at_k(gt, pred, 25) == 100.0

    def test_labels_must_agree(self):
        """Test that overlap with another gesture does not match"""
        gt = [Segment(G.G1, 0, 9)]
        pred = [Segment(G.G2, 0, 9)]
        assert sg.segment_counts(gt, pred, 10) == SegmentCounts(0, 1, 1)

    def test_ground_truth_matches_once(self):
        """Test that a second prediction on the same segment is a false positive"""
        gt = [Segment(G.G1, 0, 9)]
        pred = [Segment(G.G1, 0, 4), Segment(G.G1, 5, 9)]
        counts = sg.segment_counts(gt, pred, 10)
        assert counts == SegmentCounts(1, 1, 0)
        assert counts.f1 == pytest.approx(200 / 3)

    def test_greedy_picks_best_overlap(self):
        """Test that each prediction claims its highest-IoU segment"""
        gt = [Segment(G.G1, 0, 3), Segment(G.G1, 4, 19)]
        pred = [Segment(G.G1, 2, 19)]
        assert sg.segment_counts(gt, pred, 50) == SegmentCounts(1, 0, 1)

    def test_nothing_to_match(self):
        """Test that F1 is zero with no segments at all"""
        background = [Segment(G.G6, 0, 9)]
        assert sg.f1_at_k(background, background, 50, exclude_background=True) == 0.0

    @pytest.mark.parametrize("k", [0, 100, -5])
    def test_k_out_of_range(self, k):
        """Test that k is a percentage strictly inside (0, 100)"""
        with pytest.raises(sg.ValidationError):
            sg.f1_at_k([Segment(G.G0, 0, 1)], [Segment(G.G0, 0, 1)], k)

    def test_claimed_segment_is_not_reassigned(self):
        """Test that a prediction whose best segment is taken is a false positive"""
        gt = [Segment(G.G1, 0, 9), Segment(G.G1, 10, 11)]
        pred = [Segment(G.G1, 0, 9), Segment(G.G1, 2, 11)]
        assert sg.segment_counts(gt, pred, 10) == SegmentCounts(1, 1, 1)

    def test_nonincreasing_in_k(self, rng):
        """Test F1@10 >= F1@25 >= F1@50 on random pairs"""
        for _ in range(3000):
            n = int(rng.integers(1, 25))
            gt = sg.to_segments(_random_labels(rng, n, 3))
            pred = sg.to_segments(_random_labels(rng, n, 3))
            f10, f25, f50 = (sg.f1_at_k(gt, pred, k) for k in (10, 25, 50))
            assert f10 >= f25 >= f50

    def test_counts_are_consistent(self, rng):
        """Test that TP + FP covers predictions and TP + FN covers ground truth"""
        for _ in range(100):
            gt = sg.to_segments(_random_labels(rng, 30, 3))
            pred = sg.to_segments(_random_labels(rng, 30, 3))
            for k in (10, 25, 50, 75):
                counts = sg.segment_counts(gt, pred, k)
                assert counts.tp + counts.fp == len(pred)
                assert counts.tp + counts.fn == len(gt)
                assert 0.0 <= counts.f1 <= 100.0


@pytest.mark.segmentation
class TestSplitScores:
    """Test per-video scores and split aggregates"""

    def test_score_video(self):
        """Test the full score of one video"""
        gt = _runs((G.G0, 5), (G.G1, 5))
        pred = _runs((G.G0, 6), (G.G1, 4))
        score = sg.score_video(gt, pred)
        assert score.accuracy == 90.0
        assert score.edit == 100.0
        assert score.f1 == {10: 100.0, 25: 100.0, 50: 100.0}
        assert score.frames_correct == 9
        assert score.to_dict()["f1"] == {"10": 100.0, "25": 100.0, "50": 100.0}

    def test_micro_and_macro(self):
        """Test pooled versus averaged F1"""
        perfect = _runs((G.G0, 10))
        gt_b = _runs((G.G0, 5), (G.G1, 5))
        split = sg.score_split({"a": (perfect, perfect), "b": (gt_b, perfect)}, sg.SegmentationEvalConfig(ks=(10,)))
        assert split.videos["b"].f1[10] == pytest.approx(200 / 3)
        assert split.macro_f1[10] == pytest.approx((100 + 200 / 3) / 2)
        assert split.micro_f1[10] == pytest.approx(80.0)
        assert split.accuracy == 75.0
        assert split.mean_accuracy == 75.0
        assert split.mean_edit == 75.0

    def test_split_csv(self):
        """Test the split table rows"""
        labels = _runs((G.G0, 2), (G.G1, 2))
        split = sg.score_split([("v1", labels, labels), ("v0", labels, labels)])
        lines = split.to_csv().splitlines()
        assert lines[0] == "video,F1@10,F1@25,F1@50,Edit,Acc"
        assert [line.split(",")[0] for line in lines[1:]] == ["v0", "v1", "micro", "macro"]
        assert set(split.to_dict()) == {"videos", "micro", "macro"}

    def test_empty_split(self):
        """Test that a split needs videos"""
        with pytest.raises(sg.ValidationError):
            sg.score_split([])

    def test_duplicate_video(self):
        """Test that video names are unique"""
        labels = [G.G0]
        with pytest.raises(sg.ValidationError, match="duplicate"):
            sg.score_split([("v", labels, labels), ("v", labels, labels)])

    def test_config_validation(self):
        """Test F1 thresholds"""
        assert sg.SegmentationEvalConfig(ks=(50, 10, 10)).ks == (10, 50)
        with pytest.raises(sg.ValidationError):
            sg.SegmentationEvalConfig(ks=(100,))
        with pytest.raises(sg.ValidationError):
            sg.SegmentationEvalConfig(ks=())
