import math

import numpy as np
import pytest
from scipy import stats

from ecosense.domain import BoundingBox, Frame, Proposal, crop_bytes_for
from ecosense.modelmath import iou, nms
from ecosense.oracles import (
    ConfusionMatrix,
    DifficultyModel,
    LocalizerModel,
    SeededRng,
    assign_difficulty,
    classify,
    estimate_difficulty,
    localize,
    score_tail_probability,
)
from ecosense import presets


def three_sigma(p, n):
    return 3 * math.sqrt(p * (1 - p) / n)


def make_frame(n_objects=2, width=1920, height=1080, side=100.0):
    objects = []
    for i in range(n_objects):
        x0 = 50.0 + i * (side + 40.0)
        box = BoundingBox(x0, 60.0, x0 + side, 60.0 + side)
        objects.append(
            Proposal(box=box, objectness=1.0, true_class=i % 2, crop_bytes=crop_bytes_for(box))
        )
    return Frame(frame_id=0, width=width, height=height,
                 bytes=width * height * 3, objects=tuple(objects))


class TestSeededRng:
    def test_identical_seed_identical_stream(self):
        a = SeededRng(42)
        b = SeededRng(42)
        assert [a.uniform() for _ in range(20)] == [b.uniform() for _ in range(20)]

    def test_different_seeds_differ(self):
        assert SeededRng(1).uniform() != SeededRng(2).uniform()

    def test_substreams_are_independent_of_draw_order(self):
        root = SeededRng(7)
        sub_first = root.substream(3).uniform()
        root.uniforms(100)  # consuming the parent must not move the substream
        assert SeededRng(7).substream(3).uniform() == sub_first

    def test_spawn_key_stream_reproducible(self):
        assert SeededRng(9, spawn_key=(1, 5)).uniform() == SeededRng(9, spawn_key=(1, 5)).uniform()

    def test_categorical_respects_edge_probabilities(self):
        rng = SeededRng(11)
        probs = np.array([0.0, 1.0, 0.0])
        assert all(rng.categorical(probs) == 1 for _ in range(50))


class TestConfusionMatrix:
    def test_rejects_bad_rows(self):
        with pytest.raises(ValueError):
            ConfusionMatrix(np.array([[0.5, 0.4], [0.5, 0.5]]))

    def test_error_profile_renormalizes(self):
        cm = ConfusionMatrix(np.array([[0.8, 0.15, 0.05], [0.1, 0.8, 0.1], [0.2, 0.2, 0.6]]))
        profile = cm.error_profile(0)
        assert profile[0] == 0.0
        assert profile.sum() == pytest.approx(1.0)
        assert profile[1] == pytest.approx(0.75)

    def test_error_profile_identity_row_falls_back_to_uniform(self):
        cm = ConfusionMatrix.identity(4)
        profile = cm.error_profile(2)
        assert profile[2] == 0.0
        assert np.allclose(profile[[0, 1, 3]], 1 / 3)

    def test_from_diagonal_rows_sum_to_one(self):
        cm = ConfusionMatrix.from_diagonal([0.9, 0.8, 0.7])
        assert np.allclose(cm.matrix.sum(axis=1), 1.0)
        assert np.allclose(np.diag(cm.matrix), [0.9, 0.8, 0.7])


class TestClassify:
    def test_identity_matrix_is_exact(self):
        cm = ConfusionMatrix.identity(5)
        rng = SeededRng(13)
        assert all(classify(c, cm, rng) == c for c in range(5) for _ in range(200))

    def test_uniform_rows_within_three_sigma(self):
        c = 4
        cm = ConfusionMatrix(np.full((c, c), 1.0 / c))
        rng = SeededRng(17)
        n = 100_000
        counts = np.zeros(c)
        for _ in range(n):
            counts[classify(0, cm, rng)] += 1
        for k in range(c):
            assert abs(counts[k] / n - 1 / c) < three_sigma(1 / c, n)

    def test_sampling_matches_row_distribution_chi_squared(self):
        cm = ConfusionMatrix(np.array([
            [0.7, 0.2, 0.1],
            [0.05, 0.9, 0.05],
            [0.15, 0.15, 0.7],
        ]))
        rng = SeededRng(19)
        n = 100_000
        for true_class in range(3):
            counts = np.zeros(3)
            for _ in range(n):
                counts[classify(true_class, cm, rng)] += 1
            expected = cm.matrix[true_class] * n
            _, p_value = stats.chisquare(counts, expected)
            assert p_value > 0.001

    def test_smd_plus_cloud_preset_high_accuracy_classes(self):
        cm = presets.confusion_matrix("smd-plus-cloud")
        diag = np.diag(cm.matrix)
        strong = [i for i in range(cm.num_classes) if diag[i] > 0.95]
        assert len(strong) == 4
        rng = SeededRng(23)
        per_class = 100_000 // cm.num_classes
        for cls in strong:
            hits = sum(classify(cls, cm, rng) == cls for _ in range(per_class))
            assert hits / per_class >= 0.95

    def test_seaships_cloud_preset_has_three_strong_classes(self):
        cm = presets.confusion_matrix("seaships-cloud")
        assert sum(d > 0.95 for d in np.diag(cm.matrix)) == 3


class TestAssignDifficulty:
    def test_p_hard_zero_all_easy(self):
        m = DifficultyModel(p_hard=0.0, p_edge_correct_easy=0.9)
        rng = SeededRng(29)
        draws = [assign_difficulty(None, m, rng) for _ in range(500)]
        assert all(not hard for hard, _ in draws)

    def test_label_rule_limit(self):
        m = DifficultyModel(p_hard=1.0, p_edge_correct_easy=0.9, p_edge_correct_hard=0.0)
        rng = SeededRng(31)
        draws = [assign_difficulty(None, m, rng) for _ in range(500)]
        assert all(hard and not correct for hard, correct in draws)

    def test_hard_fraction_within_three_sigma(self):
        m = DifficultyModel(p_hard=0.3, p_edge_correct_easy=0.95)
        rng = SeededRng(37)
        n = 100_000
        hard = sum(assign_difficulty(None, m, rng)[0] for _ in range(n))
        assert abs(hard / n - 0.3) < three_sigma(0.3, n)

    def test_default_preset_hard_means_edge_wrong(self):
        m = presets.difficulty_model("seaships-default")
        assert m.p_edge_correct_hard == 0.0
        rng = SeededRng(41)
        for _ in range(2000):
            hard, correct = assign_difficulty(None, m, rng)
            if hard:
                assert not correct


class TestEstimateDifficulty:
    def test_perfect_estimator_separates_at_half(self):
        m = DifficultyModel(p_hard=0.5, p_edge_correct_easy=1.0, tpr=1.0, fpr=0.0)
        rng = SeededRng(43)
        for _ in range(2000):
            assert estimate_difficulty(True, m, rng) >= 0.5
            assert estimate_difficulty(False, m, rng) < 0.5

    def test_scores_stay_inside_unit_interval(self):
        m = DifficultyModel(p_hard=0.5, p_edge_correct_easy=1.0, tpr=0.7, fpr=0.3)
        rng = SeededRng(47)
        scores = [estimate_difficulty(bool(i % 2), m, rng) for i in range(5000)]
        assert all(0.0 <= s < 1.0 for s in scores)

    def test_uninformative_estimator_distribution_independent_of_hardness(self):
        m = DifficultyModel(p_hard=0.5, p_edge_correct_easy=1.0, tpr=0.4, fpr=0.4)
        rng = SeededRng(53)
        n = 50_000
        hard_flagged = sum(estimate_difficulty(True, m, rng) >= 0.5 for _ in range(n))
        easy_flagged = sum(estimate_difficulty(False, m, rng) >= 0.5 for _ in range(n))
        assert abs(hard_flagged / n - 0.4) < three_sigma(0.4, n)
        assert abs(easy_flagged / n - 0.4) < three_sigma(0.4, n)

    def test_flag_rates_within_three_sigma(self):
        m = DifficultyModel(p_hard=0.5, p_edge_correct_easy=1.0, tpr=0.9, fpr=0.1)
        rng = SeededRng(59)
        n = 100_000
        tp = sum(estimate_difficulty(True, m, rng) >= 0.5 for _ in range(n))
        fp = sum(estimate_difficulty(False, m, rng) >= 0.5 for _ in range(n))
        assert abs(tp / n - 0.9) < three_sigma(0.9, n)
        assert abs(fp / n - 0.1) < three_sigma(0.1, n)

    def test_tail_probability_closed_form_matches_simulation(self):
        m = DifficultyModel(p_hard=0.5, p_edge_correct_easy=1.0, tpr=0.8, fpr=0.2)
        rng = SeededRng(61)
        n = 50_000
        for tau in (0.0, 0.25, 0.5, 0.75):
            for is_hard in (True, False):
                expected = score_tail_probability(m, is_hard, tau)
                hits = sum(estimate_difficulty(is_hard, m, rng) >= tau for _ in range(n))
                sigma = math.sqrt(max(expected * (1 - expected), 1e-12) / n)
                assert abs(hits / n - expected) < max(3 * sigma, 1e-3)


class TestLocalize:
    def test_noiseless_identity(self):
        frame = make_frame(3)
        model = LocalizerModel(recall=1.0, duplicate_rate=0.0, jitter_px=0.0)
        proposals = localize(frame, model, SeededRng(67))
        assert [p.box for p in proposals] == [o.box for o in frame.objects]
        assert [p.true_class for p in proposals] == [o.true_class for o in frame.objects]

    def test_zero_recall_empty(self):
        frame = make_frame(3)
        model = LocalizerModel(recall=0.0)
        assert localize(frame, model, SeededRng(71)) == []

    def test_recall_within_three_sigma(self):
        model = LocalizerModel(recall=0.9)
        rng = SeededRng(73)
        frame = make_frame(4)
        n_frames = 2500  # 10^4 objects
        detected = sum(len(localize(frame, model, rng)) for _ in range(n_frames))
        n = 4 * n_frames
        assert abs(detected / n - 0.9) < three_sigma(0.9, n)

    def test_determinism(self):
        frame = make_frame(3)
        model = LocalizerModel(recall=0.8, duplicate_rate=1.0, jitter_px=2.0)
        a = localize(frame, model, SeededRng(79))
        b = localize(frame, model, SeededRng(79))
        assert a == b

    def test_duplicates_overlap_and_score_below_primary(self):
        frame = make_frame(1, side=200.0)
        model = LocalizerModel(recall=1.0, duplicate_rate=2.0, jitter_px=0.0)
        proposals = localize(frame, model, SeededRng(83))
        assert len(proposals) >= 2
        primary = proposals[0]
        for dup in proposals[1:]:
            assert dup.objectness < primary.objectness
            assert iou(dup.box, primary.box) > 0.5

    def test_crop_bytes_follow_box_area(self):
        import math

        frame = make_frame(2, side=130.0)
        model = LocalizerModel(recall=1.0, duplicate_rate=0.8, jitter_px=4.0,
                               bytes_per_pixel=2.5)
        for p in localize(frame, model, SeededRng(101)):
            assert p.crop_bytes == math.ceil(p.box.area * 2.5)

    def test_jittered_boxes_stay_inside_frame(self):
        frame = make_frame(2, width=400, height=300, side=120.0)
        model = LocalizerModel(recall=1.0, jitter_px=50.0)
        rng = SeededRng(89)
        for _ in range(200):
            for p in localize(frame, model, rng):
                assert 0.0 <= p.box.x_min < p.box.x_max <= frame.width
                assert 0.0 <= p.box.y_min < p.box.y_max <= frame.height

    def test_nms_after_localize_never_keeps_overlapping_pair(self):
        frame = make_frame(3, side=150.0)
        model = LocalizerModel(recall=1.0, duplicate_rate=1.5, jitter_px=3.0)
        rng = SeededRng(97)
        for _ in range(100):
            survivors = nms(localize(frame, model, rng), 0.5)
            for i, a in enumerate(survivors):
                for b in survivors[i + 1 :]:
                    assert iou(a.box, b.box) <= 0.5


class TestPresets:
    def test_platform_presets_complete(self):
        rows = presets.platforms()
        assert len(rows) == 10
        by_name = {p.name: p for p in rows}
        assert by_name["TPU Dev"].latency_ms == 9
        assert by_name["TPU Dev"].power_w == 3.47
        assert by_name["Alveo U200"].latency_ms == 16.8
        assert by_name["Alveo U200"].power_w == 17.8
        assert by_name["Kria 260"].latency_ms == 126.35
        assert sum(p.role == "edge" for p in rows) == 8

    def test_catalog_presets(self):
        assert presets.catalog("seaships").num_classes == 6
        assert presets.catalog("smd-plus").num_classes == 7
        assert presets.catalog("smd-plus").names[0] == "ferry"

    def test_unknown_preset_raises(self):
        with pytest.raises(presets.UnknownPresetError):
            presets.catalog("imagenet")
        with pytest.raises(presets.UnknownPresetError):
            presets.platform("H100")

    def test_scenario_presets_listed(self):
        names = presets.scenario_names()
        assert "seaships-default" in names
        assert "smd-plus-calibrated" in names
