"""Metric correctness against brute-force oracles; CV and sweep wiring."""

import dataclasses

import numpy as np
import pytest

from molrepo import evaluate
from molrepo.evaluate import (
    MetricsReport,
    PipelineConfig,
    SingleClass,
    aupr,
    full_report,
    roc_auc,
    run_ablation,
    run_cv,
    select_threshold,
    thresholded_metrics,
)
from molrepo.model import ModelConfig, NoPositives
from molrepo.embed import SkipGramConfig


def brute_force_auc(scores, labels):
    """O(P*N) pairwise comparison with half credit for ties."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    wins = (pos[:, None] > neg[None, :]).sum()
    ties = (pos[:, None] == neg[None, :]).sum()
    return (wins + 0.5 * ties) / (pos.size * neg.size)


def brute_force_aupr(scores, labels):
    """Rank walk over distinct score levels, descending."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    total_pos = labels.sum()
    ap = 0.0
    tp = 0
    seen = 0
    for level in sorted(set(scores.tolist()), reverse=True):
        at = scores == level
        new_tp = int(labels[at].sum())
        tp += new_tp
        seen += int(at.sum())
        if new_tp:
            ap += new_tp * tp / seen
    return ap / total_pos


class TestRocAuc:
    def test_perfect_separation(self):
        assert roc_auc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]) == 1.0

    def test_all_ties_half(self):
        assert roc_auc([0.5] * 6, [1, 0, 1, 0, 1, 0]) == 0.5

    def test_hand_case(self):
        assert roc_auc([0.9, 0.8, 0.7, 0.6], [1, 0, 1, 0]) == pytest.approx(0.75)

    def test_single_class(self):
        with pytest.raises(SingleClass):
            roc_auc([0.1, 0.2], [1, 1])

    def test_against_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(300):
            n = int(rng.integers(4, 200))
            scores = np.round(rng.random(n), 2)  # induce plenty of ties
            labels = rng.integers(0, 2, n)
            if labels.sum() in (0, n):
                continue
            assert roc_auc(scores, labels) == pytest.approx(
                brute_force_auc(scores, labels), abs=1e-12
            )

    def test_monotone_transform_invariant(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            scores = rng.random(40)
            labels = rng.integers(0, 2, 40)
            if labels.sum() in (0, 40):
                continue
            assert roc_auc(scores, labels) == pytest.approx(
                roc_auc(scores**3, labels), abs=1e-12
            )


class TestAupr:
    def test_all_positives_first(self):
        assert aupr([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]) == 1.0

    def test_hand_case(self):
        assert aupr([0.9, 0.8, 0.7, 0.6], [1, 0, 1, 0]) == pytest.approx(5 / 6)

    def test_single_positive_ranked_last(self):
        n = 10
        scores = np.linspace(1.0, 0.1, n)
        labels = np.zeros(n)
        labels[-1] = 1
        assert aupr(scores, labels) == pytest.approx(1 / n)

    def test_no_positives(self):
        with pytest.raises(NoPositives):
            aupr([0.5, 0.4], [0, 0])

    def test_against_oracle(self):
        rng = np.random.default_rng(2)
        for _ in range(300):
            n = int(rng.integers(4, 200))
            scores = np.round(rng.random(n), 2)
            labels = rng.integers(0, 2, n)
            if labels.sum() == 0:
                continue
            assert aupr(scores, labels) == pytest.approx(
                brute_force_aupr(scores, labels), abs=1e-12
            )

    def test_monotone_transform_invariant(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            scores = rng.random(40)
            labels = rng.integers(0, 2, 40)
            if labels.sum() == 0:
                continue
            assert aupr(scores, labels) == pytest.approx(
                aupr(scores**3, labels), abs=1e-12
            )


class TestThresholded:
    def test_hand_confusion_case(self):
        # TP=2 FP=1 FN=1 TN=6 at threshold 0.5
        scores = [0.9, 0.8, 0.7, 0.3, 0.2, 0.2, 0.1, 0.1, 0.1, 0.1]
        labels = [1, 0, 1, 1, 0, 0, 0, 0, 0, 0]
        report = thresholded_metrics(scores, labels, 0.5)
        assert (report.tp, report.fp, report.fn, report.tn) == (2, 1, 1, 6)
        assert report.precision == pytest.approx(2 / 3)
        assert report.recall == pytest.approx(2 / 3)
        assert report.specificity == pytest.approx(6 / 7)
        assert report.accuracy == pytest.approx(0.8)
        assert report.f1 == pytest.approx(2 / 3)

    def test_threshold_zero_everything_positive(self):
        report = thresholded_metrics([0.4, 0.6, 0.7], [0, 1, 1], 0.0)
        assert report.specificity == 0.0
        assert report.recall == 1.0

    def test_threshold_one_everything_negative(self):
        report = thresholded_metrics([0.4, 0.6, 0.7], [0, 1, 1], 1.0)
        assert report.recall == 0.0
        assert report.f1 == 0.0

    def test_metrics_bounded(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            scores = rng.random(30)
            labels = rng.integers(0, 2, 30)
            if labels.sum() in (0, 30):
                continue
            report = full_report(scores, labels, float(rng.random()))
            for m in evaluate.METRIC_NAMES:
                assert 0.0 <= getattr(report, m) <= 1.0
            assert report.tp + report.fp + report.tn + report.fn == 30


class TestSelectThreshold:
    def test_fixed(self):
        assert select_threshold([0.1, 0.9], [0, 1], "fixed", fixed=0.5) == 0.5

    def test_separated_gap_midpoint(self):
        t = select_threshold([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0])
        assert t == pytest.approx(0.5)

    def test_sweep_case(self):
        t = select_threshold([0.9, 0.8, 0.7, 0.6], [1, 0, 1, 0])
        assert t <= 0.7
        report = thresholded_metrics([0.9, 0.8, 0.7, 0.6], [1, 0, 1, 0], t)
        assert report.f1 == pytest.approx(0.8)

    def test_single_class_rejected(self):
        with pytest.raises(SingleClass):
            select_threshold([0.5, 0.6], [1, 1])


@pytest.fixture(scope="module")
def tiny_cv_config():
    return PipelineConfig(
        model=ModelConfig(epochs=15, seed=0),
        skipgram=SkipGramConfig(epochs=2, seed=0),
    )


class TestCV:
    def test_fold_count_and_shape(self, dataset, tiny_cv_config):
        summary = run_cv(dataset, tiny_cv_config, k=10, seed=0)
        assert len(summary.reports) == 10
        assert set(summary.mean) == set(evaluate.METRIC_NAMES)
        assert all(isinstance(r, MetricsReport) for r in summary.reports)

    def test_same_seed_identical(self, dataset, tiny_cv_config):
        s1 = run_cv(dataset, tiny_cv_config, k=3, seed=5)
        s2 = run_cv(dataset, tiny_cv_config, k=3, seed=5)
        assert s1.as_dict() == s2.as_dict()

    def test_persists_artifacts(self, dataset, tiny_cv_config, tmp_path):
        run_cv(dataset, tiny_cv_config, k=3, seed=0, outdir=tmp_path)
        assert (tmp_path / "fold1.ckpt.npz").exists()
        assert (tmp_path / "fold3.report.json").exists()

    def test_fold_reports_independent_of_order(self, dataset, tiny_cv_config):
        from molrepo.hetnet import build_graph, drug_fingerprints, make_folds

        fingerprints = drug_fingerprints(dataset)
        table = evaluate.fit_embedding_table(dataset, tiny_cv_config)
        vectors = evaluate.drug_matrix(dataset, table)
        graph = build_graph(dataset, fingerprints)
        plan = make_folds(dataset.positives(), 40, 20, k=3, seed=1)
        forward_summary, _ = evaluate._cv_over_folds(graph, plan, vectors, tiny_cv_config)
        reversed_plan = dataclasses.replace(plan, folds=list(reversed(plan.folds)))
        reverse_summary, _ = evaluate._cv_over_folds(
            graph, reversed_plan, vectors, tiny_cv_config
        )
        for fold, report in zip(reversed_plan.folds, reverse_summary.reports):
            assert report.as_dict() == forward_summary.reports[fold.index].as_dict()


class TestAblation:
    def test_epsilon_zero_equals_plain_cv(self, dataset, tiny_cv_config):
        sweep = run_ablation(dataset, tiny_cv_config, [0.0], k=3, seed=2)
        plain = run_cv(dataset, tiny_cv_config, k=3, seed=2)
        assert sweep[0.0].as_dict() == plain.as_dict()

    def test_sweep_emits_requested_rows(self, dataset, tiny_cv_config):
        sweep = run_ablation(dataset, tiny_cv_config, [0.0, 0.5, 1.0], k=3, seed=2)
        assert sorted(sweep) == [0.0, 0.5, 1.0]
        table = evaluate.sweep_table(sweep)
        assert len(table.strip().split("\n")) == 4
