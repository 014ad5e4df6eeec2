"""Ranking metrics, thresholded metrics, cross-validation and ablation sweeps.

Ranking metrics use the average-rank convention for ties: ROC AUC is the
Mann-Whitney statistic, and average precision walks distinct score levels
so tied scores cannot reorder each other.  Both are therefore invariant
under strictly monotone transforms of the scores.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import numerics as nm
from .chem import morgan_sentence, parse_smiles
from .embed import (
    EmbeddingTable,
    SkipGramConfig,
    build_corpus,
    mean_molecule_vector,
    molecule_vector,
    train_skipgram,
)
from .hetnet import (
    Dataset,
    FoldPlan,
    HeteroGraph,
    ablate_edges,
    build_graph,
    drug_fingerprints,
    make_folds,
    mask_test_edges,
)
from .model import ModelConfig, NoPositives, TrainResult, inference_scores, train


class SingleClass(ValueError):
    """Scores contain only one label class; ranking metrics are undefined."""


METRIC_NAMES = ("auc", "aupr", "accuracy", "f1", "precision", "recall", "specificity")


@dataclass
class MetricsReport:
    auc: float
    aupr: float
    accuracy: float
    f1: float
    precision: float
    recall: float
    specificity: float
    threshold: float
    tp: int
    fp: int
    tn: int
    fn: int

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    def row(self) -> str:
        return "\t".join(f"{getattr(self, m):.4f}" for m in METRIC_NAMES)


def _validate(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel().astype(np.int64)
    if scores.shape != labels.shape:
        raise ValueError(f"scores {scores.shape} vs labels {labels.shape}")
    return scores, labels


def roc_auc(scores, labels) -> float:
    """Area under the ROC curve via average ranks (ties share their rank)."""
    scores, labels = _validate(scores, labels)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("ROC AUC needs both classes")
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(scores.size, dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < scores.size:
        j = i
        while j + 1 < scores.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0  # average of ranks i+1..j+1
        i = j + 1
    pos_rank_sum = ranks[labels == 1].sum()
    return float((pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def aupr(scores, labels) -> float:
    """Average precision over distinct score levels, descending."""
    scores, labels = _validate(scores, labels)
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise NoPositives("average precision needs at least one positive")
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_labels = labels[order]
    ap = 0.0
    tp = 0
    seen = 0
    i = 0
    n = scores.size
    while i < n:
        j = i
        while j + 1 < n and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        level_tp = int(sorted_labels[i : j + 1].sum())
        tp += level_tp
        seen = j + 1
        if level_tp:
            ap += level_tp * (tp / seen)
        i = j + 1
    return float(ap / n_pos)


def thresholded_metrics(scores, labels, threshold: float) -> MetricsReport:
    """Confusion-matrix metrics with the strict rule pred = score > threshold."""
    scores, labels = _validate(scores, labels)
    pred = scores > threshold
    actual = labels == 1
    tp = int(np.sum(pred & actual))
    fp = int(np.sum(pred & ~actual))
    fn = int(np.sum(~pred & actual))
    tn = int(np.sum(~pred & ~actual))

    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    specificity = tn / (tn + fp) if tn + fp else 0.0
    accuracy = (tp + tn) / scores.size if scores.size else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0

    n_pos = int(labels.sum())
    both_classes = 0 < n_pos < labels.size
    return MetricsReport(
        auc=roc_auc(scores, labels) if both_classes else float("nan"),
        aupr=aupr(scores, labels) if n_pos else float("nan"),
        accuracy=accuracy,
        f1=f1,
        precision=precision,
        recall=recall,
        specificity=specificity,
        threshold=float(threshold),
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
    )


def select_threshold(scores, labels, strategy: str = "max_f1", fixed: float = 0.5) -> float:
    """Pick a decision threshold.

    ``fixed`` returns the given value; ``max_f1`` sweeps midpoints between
    adjacent distinct scores (plus the [0, 1] boundaries) and returns the
    F1-maximizing candidate, breaking ties toward the smallest threshold
    (favoring recall).
    """
    if strategy == "fixed":
        return float(fixed)
    if strategy != "max_f1":
        raise ValueError(f"unknown threshold strategy {strategy!r}")
    scores, labels = _validate(scores, labels)
    n_pos = int(labels.sum())
    if n_pos == 0 or n_pos == labels.size:
        raise SingleClass("threshold selection needs both classes")
    distinct = np.unique(scores)
    mids = (distinct[:-1] + distinct[1:]) / 2.0 if distinct.size > 1 else np.zeros(0)
    candidates = np.unique(np.clip(np.concatenate([[0.0], mids, [1.0]]), 0.0, 1.0))
    best_t, best_f1 = float(candidates[0]), -1.0
    for t in candidates:
        pred = scores > t
        tp = int(np.sum(pred & (labels == 1)))
        fp = int(np.sum(pred & (labels == 0)))
        fn = n_pos - tp
        p = tp / (tp + fp) if tp + fp else 0.0
        r = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * p * r / (p + r) if p + r else 0.0
        if f1 > best_f1:
            best_f1, best_t = f1, float(t)
    return best_t


def full_report(scores, labels, threshold: float) -> MetricsReport:
    """All seven metrics at one threshold; AUC/AUPR need both classes."""
    report = thresholded_metrics(scores, labels, threshold)
    if np.isnan(report.auc) or np.isnan(report.aupr):
        raise SingleClass("full report needs both classes present")
    return report


# ---------------------------------------------------------------------------
# pipeline configuration and cross-validation


@dataclass
class PipelineConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    skipgram: SkipGramConfig = field(default_factory=SkipGramConfig)
    min_count: int = 3
    similarity_threshold: float = 0.0
    negative_policy: str = "all_unknown"
    negative_ratio: float = 1.0
    threshold_strategy: str = "max_f1"
    fixed_threshold: float = 0.5
    mean_pool: bool = False

    def to_dict(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "skipgram": dataclasses.asdict(self.skipgram),
            "min_count": self.min_count,
            "similarity_threshold": self.similarity_threshold,
            "negative_policy": self.negative_policy,
            "negative_ratio": self.negative_ratio,
            "threshold_strategy": self.threshold_strategy,
            "fixed_threshold": self.fixed_threshold,
            "mean_pool": self.mean_pool,
        }


@dataclass
class CVSummary:
    reports: list[MetricsReport]
    mean: dict[str, float]
    std: dict[str, float]
    k: int
    seed: int

    def table(self) -> str:
        header = "fold\t" + "\t".join(METRIC_NAMES)
        lines = [header]
        for i, report in enumerate(self.reports, start=1):
            lines.append(f"{i}\t" + report.row())
        lines.append("mean\t" + "\t".join(f"{self.mean[m]:.4f}" for m in METRIC_NAMES))
        lines.append("std\t" + "\t".join(f"{self.std[m]:.4f}" for m in METRIC_NAMES))
        return "\n".join(lines)

    def as_dict(self) -> dict:
        return {
            "k": self.k,
            "seed": self.seed,
            "folds": [r.as_dict() for r in self.reports],
            "mean": self.mean,
            "std": self.std,
        }


def _summarize(reports: list[MetricsReport], k: int, seed: int) -> CVSummary:
    mean = {}
    std = {}
    for m in METRIC_NAMES:
        values = np.array([getattr(r, m) for r in reports], dtype=np.float64)
        mean[m] = float(values.mean())
        std[m] = float(values.std())
    return CVSummary(reports=reports, mean=mean, std=std, k=k, seed=seed)


def drug_sentences(dataset: Dataset) -> list:
    return [morgan_sentence(parse_smiles(dataset.drug_smiles[d])) for d in dataset.drug_ids]


def fit_embedding_table(dataset: Dataset, config: PipelineConfig) -> EmbeddingTable:
    """Train the substructure table once, on the full drug corpus.

    The embeddings are unsupervised and never see disease labels, so this
    does not leak across folds.
    """
    corpus, counts = build_corpus(drug_sentences(dataset), min_count=config.min_count)
    return train_skipgram(corpus, counts, config.skipgram)


def drug_matrix(dataset: Dataset, table: EmbeddingTable, mean_pool: bool = False) -> np.ndarray:
    pool = mean_molecule_vector if mean_pool else molecule_vector
    rows = [
        pool(morgan_sentence(parse_smiles(dataset.drug_smiles[d])), table).values
        for d in dataset.drug_ids
    ]
    return np.stack(rows)


def _pair_scores(score_matrix: np.ndarray, pos: np.ndarray, neg: np.ndarray):
    pairs = np.vstack([pos.reshape(-1, 2), neg.reshape(-1, 2)])
    labels = np.concatenate([np.ones(pos.shape[0]), np.zeros(neg.shape[0])])
    return score_matrix[pairs[:, 0], pairs[:, 1]], labels


def _drop_pairs(pairs: np.ndarray, removed: set[tuple[int, int]]) -> np.ndarray:
    if not removed or pairs.size == 0:
        return pairs
    keep = np.array([(int(a), int(b)) not in removed for a, b in pairs], dtype=bool)
    return pairs[keep]


def _cv_over_folds(
    graph: HeteroGraph,
    plan: FoldPlan,
    mol_vectors: np.ndarray,
    config: PipelineConfig,
    removed: set[tuple[int, int]] | None = None,
    outdir: Path | None = None,
) -> tuple[CVSummary, list[TrainResult]]:
    removed = removed or set()
    reports = []
    results = []
    for fold in plan.folds:
        # The graph may already be ablated; masking only needs to strip the
        # fold's test positives.  Removed pairs additionally leave the
        # training supervision but stay in the test sets.
        fold_graph = mask_test_edges(graph, fold)
        train_pos = _drop_pairs(fold.train_pos, removed)
        fold_config = dataclasses.replace(config.model, seed=config.model.seed + fold.index)
        result = train(fold_graph, train_pos, fold.train_neg, fold_config, mol_vectors)
        results.append(result)
        _, _, scores = inference_scores(fold_graph, result.state, mol_vectors)

        train_scores, train_labels = _pair_scores(scores, train_pos, fold.train_neg)
        if config.threshold_strategy == "fixed":
            threshold = config.fixed_threshold
        else:
            try:
                threshold = select_threshold(train_scores, train_labels, "max_f1")
            except SingleClass:
                # Fully ablated supervision leaves no training positives.
                threshold = config.fixed_threshold
        test_scores, test_labels = _pair_scores(scores, fold.test_pos, fold.test_neg)
        report = full_report(test_scores, test_labels, threshold)
        reports.append(report)
        if outdir is not None:
            outdir.mkdir(parents=True, exist_ok=True)
            nm.save_params(
                outdir / f"fold{fold.index + 1}.ckpt.npz",
                result.state.params,
                metadata={"config": config.model.to_dict(), "fold": fold.index + 1},
            )
            (outdir / f"fold{fold.index + 1}.report.json").write_text(
                json.dumps(report.as_dict(), indent=2) + "\n", encoding="utf-8"
            )
    return _summarize(reports, plan.k, plan.seed), results


def run_cv(
    dataset: Dataset,
    config: PipelineConfig,
    k: int = 10,
    seed: int = 0,
    outdir: str | Path | None = None,
) -> CVSummary:
    """Mask, train and score each fold; aggregate mean/std per metric."""
    fingerprints = drug_fingerprints(dataset)
    table = fit_embedding_table(dataset, config)
    mol_vectors = drug_matrix(dataset, table, config.mean_pool)
    graph = build_graph(dataset, fingerprints, config.similarity_threshold)
    plan = make_folds(
        dataset.positives(),
        dataset.n_drugs,
        dataset.n_diseases,
        k=k,
        seed=seed,
        negative_policy=config.negative_policy,
        negative_ratio=config.negative_ratio,
    )
    summary, _ = _cv_over_folds(
        graph, plan, mol_vectors, config, outdir=Path(outdir) if outdir else None
    )
    return summary


def run_ablation(
    dataset: Dataset,
    config: PipelineConfig,
    epsilons,
    k: int = 10,
    seed: int = 0,
    outdir: str | Path | None = None,
) -> dict[float, CVSummary]:
    """Sparsity sweep: drop a fraction of association edges, then cross-validate.

    Folds are built once on the full positive set so every sweep entry is
    evaluated on identical test pairs; removed pairs vanish from the graph
    and from training supervision but still count as test positives.
    """
    fingerprints = drug_fingerprints(dataset)
    table = fit_embedding_table(dataset, config)
    mol_vectors = drug_matrix(dataset, table, config.mean_pool)
    graph = build_graph(dataset, fingerprints, config.similarity_threshold)
    plan = make_folds(
        dataset.positives(),
        dataset.n_drugs,
        dataset.n_diseases,
        k=k,
        seed=seed,
        negative_policy=config.negative_policy,
        negative_ratio=config.negative_ratio,
    )
    sweep: dict[float, CVSummary] = {}
    for eps in epsilons:
        ablated, removed_pairs = ablate_edges(graph, float(eps), seed=seed)
        removed = {(int(a), int(b)) for a, b in removed_pairs}
        subdir = Path(outdir) / f"eps{eps:g}" if outdir else None
        summary, _ = _cv_over_folds(
            ablated, plan, mol_vectors, config, removed=removed, outdir=subdir
        )
        sweep[float(eps)] = summary
    return sweep


def sweep_table(sweep: dict[float, CVSummary]) -> str:
    header = "epsilon\t" + "\t".join(f"mean_{m}" for m in METRIC_NAMES)
    lines = [header]
    for eps in sorted(sweep):
        summary = sweep[eps]
        lines.append(
            f"{eps:g}\t" + "\t".join(f"{summary.mean[m]:.4f}" for m in METRIC_NAMES)
        )
    return "\n".join(lines)
