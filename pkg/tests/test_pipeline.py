"""标注二值化、折划分、指标、训练、交叉验证与 SVM 基线"""
import hashlib
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edaffect.config.config_manager import ConfigManager
from edaffect.core.errors import (
    BadParams,
    ConfigError,
    Degenerate,
    EmptySet,
    LeakageDetected,
    ShapeMismatch,
    TooFew,
)
from edaffect.core.model import AnnotationRecord
from edaffect.cvxeda import CvxedaConfig
from edaffect.pipeline import (
    Corpus,
    FoldPlan,
    LinearSvm,
    MeanMetrics,
    MetricsReport,
    PipelineConfig,
    SvmConfig,
    TrainSchedule,
    assemble_examples,
    cross_validate,
    evaluate,
    make_fold_plan,
    pearson_r,
    plan_for_subjects,
    relabel_all,
    relabel_subject,
    select_subjects,
    svm_baseline,
    svm_cross_validate,
    train,
)
from edaffect.pipeline.baseline import baseline_features
from edaffect.pipeline.manifest import Stopwatch, file_digest, read_json, write_json
from edaffect.rtcan import RtcanModel
from edaffect.synth import SynthPlan, SynthSpec, gen_dataset, gen_from_plan

QUICK_CVX = CvxedaConfig(max_iter=300)
SCHEDULE = TrainSchedule(lr0=0.05, batch_size=8, epochs=15)


def _records(points, subject="s"):
    return [AnnotationRecord(subject, f"m{i}", v, a) for i, (v, a) in enumerate(points)]


# ------------------------------------------------------------------ 二值化

def test_relabel_two_points():
    result = relabel_subject(_records([(1, 1), (9, 9)]))
    assert result.thresholds == (5.0, 5.0)
    assert result.fallback == (False, False)
    assert result.labels["m0"].valence_class == 0
    assert result.labels["m1"].arousal_class == 1


def test_relabel_shift_invariance():
    points = [(2.0, 3.0), (3.0, 2.0), (7.0, 8.0), (8.0, 7.0), (2.5, 2.0)]
    base = relabel_subject(_records(points))
    shifted = relabel_subject(_records([(v + 0.5, a + 0.5) for v, a in points]))
    assert shifted.thresholds == pytest.approx((base.thresholds[0] + 0.5, base.thresholds[1] + 0.5))
    assert shifted.labels == base.labels


def test_relabel_degenerate_falls_back():
    result = relabel_subject(_records([(4.0, 6.0)] * 3))
    assert result.thresholds == (5.0, 5.0)
    assert result.fallback == (True, True)
    assert result.labels["m0"].valence_class == 0
    assert result.labels["m0"].arousal_class == 1


def test_relabel_per_dimension():
    result = relabel_subject(_records([(1, 9), (9, 1), (2, 8), (8, 2)]), mode="per_dimension")
    assert result.thresholds == pytest.approx((5.0, 5.0))
    assert result.labels["m0"].valence_class == 0
    assert result.labels["m0"].arousal_class == 1


def test_relabel_opposite_corners():
    result = relabel_subject(_records([(2, 8), (3, 7), (8, 2), (7, 3)]))
    assert result.thresholds == pytest.approx((5.0, 5.0))
    assert result.fallback == (False, False)
    assert [result.labels[f"m{i}"].valence_class for i in range(4)] == [0, 0, 1, 1]
    assert [result.labels[f"m{i}"].arousal_class for i in range(4)] == [1, 1, 0, 0]


def test_relabel_repeated_points():
    result = relabel_subject(_records([(1, 1), (1, 1), (9, 9), (9, 9)]))
    assert result.thresholds == pytest.approx((5.0, 5.0))
    assert [result.labels[f"m{i}"].valence_class for i in range(4)] == [0, 0, 1, 1]
    assert [result.labels[f"m{i}"].arousal_class for i in range(4)] == [0, 0, 1, 1]


def test_relabel_errors():
    with pytest.raises(TooFew):
        relabel_subject(_records([(1, 1)]))
    with pytest.raises(BadParams):
        relabel_subject(_records([(1, 1), (9, 9)]), mode="median")


def test_relabel_all_is_per_subject():
    records = _records([(1, 1), (3, 3)], "a") + _records([(7, 7), (9, 9)], "b")
    labels = relabel_all(records)
    assert labels[("a", "m1")].arousal_class == 1
    assert labels[("b", "m0")].arousal_class == 0


# ------------------------------------------------------------------ 折划分

def test_fold_plan_partitions_subjects():
    subjects = [f"s{i:02d}" for i in range(23)]
    plan = make_fold_plan(subjects, k=10, seed=4)
    assert plan.k == 10
    assert plan.subjects == sorted(subjects)
    assert sum(plan.sizes()) == 23
    assert max(plan.sizes()) - min(plan.sizes()) <= 1
    for i in range(plan.k):
        plan.check_disjoint(i)
        assert plan.train_subjects(i) | plan.folds[i] == frozenset(subjects)
    assert make_fold_plan(subjects, 10, 4) == plan
    assert make_fold_plan(subjects, 10, 5) != plan


def test_fold_plan_errors():
    with pytest.raises(TooFew):
        make_fold_plan(["a", "b"], k=3)
    with pytest.raises(LeakageDetected):
        FoldPlan.from_lists([["a", "b"], ["b", "c"]]).check_disjoint(0)


def test_subject_fraction():
    subjects = [f"s{i}" for i in range(10)]
    picked = select_subjects(subjects, 0.5, seed=1)
    assert len(picked) == 5 and set(picked) <= set(subjects)
    plan = plan_for_subjects(subjects, folds=10, fraction=0.5, seed=1)
    assert plan.k == 5
    assert plan.subjects == picked


# ------------------------------------------------------------------ 指标

def test_metrics_from_predictions():
    report = MetricsReport.from_predictions([1, 1, 0, 0], [1, 0, 0, 1])
    assert report.confusion == ((1, 1), (1, 1))
    assert (report.accuracy, report.precision, report.recall, report.f1) == (0.5, 0.5, 0.5, 0.5)


def test_metrics_no_positive_prediction():
    report = MetricsReport.from_predictions([1, 0, 0], [0, 0, 0])
    assert report.precision == 0.0
    assert report.f1 == 0.0
    assert report.accuracy == pytest.approx(2 / 3)


def test_metrics_errors():
    with pytest.raises(EmptySet):
        MetricsReport.from_predictions([], [])
    with pytest.raises(ShapeMismatch):
        MetricsReport.from_predictions([0, 1], [0])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=60))
def test_metrics_consistency(pairs):
    truth, pred = zip(*pairs)
    report = MetricsReport.from_predictions(truth, pred)
    (tn, fp), (fn, tp) = report.confusion
    assert report.support == len(pairs)
    assert report.accuracy == pytest.approx((tp + tn) / len(pairs))
    assert 0.0 <= report.f1 <= 1.0
    if report.precision + report.recall > 0:
        expected = 2 * report.precision * report.recall / (report.precision + report.recall)
        assert report.f1 == pytest.approx(expected)


def test_mean_metrics_averages_f1():
    a = MetricsReport.from_predictions([1, 1], [1, 1])
    b = MetricsReport.from_predictions([1, 0], [0, 0])
    mean = MeanMetrics.of([a, b])
    assert mean.f1 == pytest.approx(0.5)
    assert mean.accuracy == pytest.approx(0.75)


# ------------------------------------------------------------------ Pearson

def test_pearson_values():
    result = pearson_r([1, 2, 3], [1, 2, 4])
    assert result.r == pytest.approx(0.9820, abs=1e-4)
    assert result.n == 3
    r, t = pearson_r([1.0, 2.0, 5.0, 3.0], [-1.0, -2.0, -5.0, -3.0])
    assert r == pytest.approx(-1.0)
    assert t < -1e6


def test_pearson_errors():
    with pytest.raises(Degenerate):
        pearson_r([1, 1, 1], [1, 2, 3])
    with pytest.raises(TooFew):
        pearson_r([1, 2], [2, 1])
    with pytest.raises(ShapeMismatch):
        pearson_r([1, 2, 3], [1, 2])


# ------------------------------------------------------------------ SVM

def test_svm_separable(make_examples):
    train_set = make_examples(length=8, seed=0)
    test_set = make_examples(length=8, seed=1)
    report = svm_baseline(train_set, test_set, SvmConfig())
    assert report.accuracy == 1.0


def test_svm_label_flip_complements(make_examples):
    examples = make_examples(length=8)
    x = baseline_features(examples)
    y = np.array([e.label("arousal") for e in examples])
    a = LinearSvm(SvmConfig(seed=3)).fit(x, y)
    b = LinearSvm(SvmConfig(seed=3)).fit(x, 1 - y)
    np.testing.assert_array_equal(b.weights, -a.weights)
    np.testing.assert_array_equal(b.predict(x), 1 - a.predict(x))


def test_svm_features_need_music(make_examples):
    with pytest.raises(ConfigError):
        baseline_features(make_examples(), "music")
    fused = baseline_features(make_examples(music_dim=2), "fused")
    assert fused.shape == (16, 3 * 24 + 2)


# ------------------------------------------------------------------ 训练与交叉验证

def test_training_reduces_loss(tiny_config, make_examples):
    examples = make_examples()
    result = train(RtcanModel(tiny_config()), examples, SCHEDULE)
    assert len(result.loss_history) == SCHEDULE.epochs
    assert min(result.loss_history[-5:]) < result.loss_history[0]
    assert evaluate(result.model, examples).support == len(examples)


def test_training_halves_loss_on_separable_set(tiny_config, make_examples):
    examples = make_examples(n_subjects=8, per_subject=8)
    schedule = TrainSchedule(lr0=0.05, batch_size=8, epochs=30)
    result = train(RtcanModel(tiny_config(), seed=0), examples, schedule)
    assert result.loss_history[-1] < 0.5 * result.loss_history[0]


def test_same_seed_gives_identical_parameters(tiny_config, make_examples):
    examples = make_examples()
    schedule = TrainSchedule(lr0=0.05, batch_size=8, epochs=3, seed=7)
    first = train(RtcanModel(tiny_config(), seed=7), examples, schedule).model
    second = train(RtcanModel(tiny_config(), seed=7), examples, schedule).model
    assert first.params.keys() == second.params.keys()
    for name, param in first.params.items():
        np.testing.assert_array_equal(param.data, second.params[name].data)


def test_train_rejects_empty(tiny_config):
    with pytest.raises(EmptySet):
        train(RtcanModel(tiny_config()), [], SCHEDULE)


def test_cross_validate_is_deterministic(tiny_config, make_examples):
    examples = make_examples()
    plan = make_fold_plan([e.subject_id for e in examples], k=2, seed=0)
    schedule = TrainSchedule(lr0=0.05, batch_size=8, epochs=3)
    first = cross_validate(examples, tiny_config(), schedule, plan)
    second = cross_validate(examples, tiny_config(), schedule, plan, jobs=2, keep_models=True)
    assert first.to_dict() == second.to_dict()
    assert sum(sum(row) for row in first.pooled_confusion) == len(examples)
    assert first.folds[0].model is None
    assert second.folds[1].model is not None


def test_cross_validate_rejects_bad_plans(tiny_config, make_examples):
    examples = make_examples()
    with pytest.raises(LeakageDetected):
        cross_validate(examples, tiny_config(), SCHEDULE,
                       FoldPlan.from_lists([["s00", "s01"], ["s01", "s02", "s03"]]))
    with pytest.raises(BadParams):
        cross_validate(examples, tiny_config(), SCHEDULE, FoldPlan.from_lists([["s00"], ["s01"]]))


def test_svm_cross_validate(make_examples):
    examples = make_examples(length=8)
    plan = make_fold_plan([e.subject_id for e in examples], k=2)
    report = svm_cross_validate(examples, plan)
    assert len(report.folds) == 2
    assert report.mean.accuracy == 1.0


# ------------------------------------------------------------------ 语料组装

@pytest.fixture
def small_corpus():
    spec = SynthSpec(sampling_hz=4.0, duration_s=30.0)
    data = gen_dataset(n_subjects=10, traces_per_subject=2, spec_low=spec,
                       spec_high=SynthSpec(sampling_hz=4.0, duration_s=30.0, scr_rate_hz=0.25),
                       music_dim=3, seed=1)
    return data


def test_assemble_examples(small_corpus):
    corpus = Corpus(small_corpus.traces, small_corpus.annotations, small_corpus.stimuli)
    examples = assemble_examples(corpus, cvx_cfg=QUICK_CVX, input_len=24,
                                 pipeline=PipelineConfig(jobs=2), use_music=True)
    assert len(examples) == 20
    for e in examples:
        assert e.channels.shape == (3, 24)
        assert e.music.shape == (3,)
        assert e.label("arousal") == small_corpus.classes[e.stimulus_id]


def test_assemble_skips_unlabeled(small_corpus):
    kept = [r for r in small_corpus.annotations if r.subject_id != "subj000"]
    examples = assemble_examples(Corpus(small_corpus.traces, kept), cvx_cfg=QUICK_CVX, input_len=24)
    assert len(examples) == 18
    assert "subj000" not in {e.subject_id for e in examples}
    assert all(e.music is None for e in examples)


# ------------------------------------------------------------------ 清单

def test_manifest_helpers(tmp_path):
    (tmp_path / "a.bin").write_bytes(b"abc")
    assert file_digest(tmp_path / "a.bin") == hashlib.sha256(b"abc").hexdigest()
    path = write_json(tmp_path / "m.json", {"b": 1, "a": [1.5, "x"]})
    assert path.read_text().index('"a"') < path.read_text().index('"b"')
    assert read_json(path) == {"a": [1.5, "x"], "b": 1}

    watch = Stopwatch()
    with watch.section("x"):
        pass
    assert read_json(watch.write(tmp_path))["sections_s"].keys() == {"x"}


@pytest.mark.slow
def test_profiles_learn_default_synthetic_corpus(monkeypatch):
    """默认合成语料(20 被试 × 20 条，种子 42)上的 10 折被试独立交叉验证

    small-scale(只用 EDA)平均准确率 ≥ 0.90，large-scale(融合刺激特征)不低于它。
    """
    monkeypatch.delenv("RTCAN_SEED", raising=False)
    manager = ConfigManager()
    eda_run = manager.build(profile="small-scale")
    fused_run = manager.build(profile="large-scale")
    assert eda_run.rtcan.input_len == fused_run.rtcan.input_len

    data = gen_from_plan(SynthPlan())
    assert len(data.traces) == 400
    fused_examples = assemble_examples(Corpus(data.traces, data.annotations, data.stimuli),
                                       eda_run.irf, eda_run.cvxeda, eda_run.rtcan.input_len,
                                       eda_run.pipeline, use_music=True)
    eda_examples = [replace(e, music=None) for e in fused_examples]
    plan = make_fold_plan(sorted({e.subject_id for e in fused_examples}),
                          eda_run.pipeline.folds, eda_run.seed)

    eda = cross_validate(eda_examples, eda_run.rtcan, eda_run.schedule, plan, eda_run.pipeline.dim)
    fused_cfg = replace(fused_run.rtcan, music_dim=fused_examples[0].music.shape[0])
    fused = cross_validate(fused_examples, fused_cfg, fused_run.schedule, plan, fused_run.pipeline.dim)

    assert eda.mean.accuracy >= 0.90
    assert fused.mean.accuracy >= eda.mean.accuracy


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 30), st.integers(2, 10), st.integers(0, 1000))
def test_fold_plan_partition_property(n_subjects, k, seed):
    if n_subjects < k:
        return
    subjects = [f"s{i}" for i in range(n_subjects)]
    plan = make_fold_plan(subjects, k, seed)
    seen = [s for fold in plan.folds for s in fold]
    assert sorted(seen) == sorted(subjects)
    assert min(plan.sizes()) >= 1

