"""Cold-start recommendation for drugs absent from training.

A query drug is embedded through the same substructure pipeline as training
drugs (parse, substructure tokens, vector sum, drug MLP in inference mode).
Its reciprocal-Euclidean-distance weights over the stored drug embeddings
combine the saved association matrix rows into raw disease scores, an
optional 0/1 prior adds known indications, and min-max normalization maps
the result onto [0, 1] for ranking.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chem import morgan_sentence, parse_smiles
from .embed import EmbeddingTable, molecule_vector
from .evaluate import MetricsReport, full_report
from .model import ModelConfig, ModelState, embed_drug_vectors
from .numerics import ShapeMismatch, load_params, save_params

DISTANCE_GUARD = 1e-8  # keeps 1/distance finite for exact duplicates
DEFAULT_SCORE_THRESHOLD = 0.24

_DB_FORMAT_VERSION = 1
_MLP_PARAMS = ("mlp.w1", "mlp.b1", "mlp.w2", "mlp.b2", "mlp.w3", "mlp.b3")


class UnknownDisease(KeyError):
    """A prior names a disease id absent from the database catalog."""


@dataclass
class EmbeddingDatabase:
    """Everything the recommender needs, frozen at end of training."""

    drug_ids: list[str]
    drug_embeddings: np.ndarray  # (n_drugs, embedding width)
    assoc_scores: np.ndarray  # (n_drugs, n_diseases), entries in (0, 1)
    disease_ids: list[str]
    disease_names: list[str]
    mlp_params: dict[str, np.ndarray]
    table: EmbeddingTable
    config: ModelConfig
    provenance: str

    def __post_init__(self):
        n, d = self.assoc_scores.shape
        if len(self.drug_ids) != n or self.drug_embeddings.shape[0] != n:
            raise ShapeMismatch("drug rows are misaligned")
        if len(self.disease_ids) != d or len(self.disease_names) != d:
            raise ShapeMismatch("disease columns are misaligned")

    def disease_index(self, disease_id: str) -> int:
        try:
            return self.disease_ids.index(disease_id)
        except ValueError:
            raise UnknownDisease(disease_id)

    def mlp_state(self) -> ModelState:
        return ModelState(
            params=dict(self.mlp_params),
            config=self.config,
            relation_order=[],
            feature_width=0,
        )

    def save(self, path) -> None:
        tokens = sorted(self.table.vectors)
        arrays = {
            "drug_ids": np.array(self.drug_ids, dtype=np.str_),
            "drug_embeddings": self.drug_embeddings,
            "assoc_scores": self.assoc_scores,
            "disease_ids": np.array(self.disease_ids, dtype=np.str_),
            "disease_names": np.array(self.disease_names, dtype=np.str_),
            "table_tokens": np.array(tokens, dtype=np.int64),
            "table_counts": np.array([self.table.counts.get(t, 0) for t in tokens], dtype=np.int64),
            "table_vectors": np.stack([self.table.vectors[t] for t in tokens]),
        }
        arrays.update({f"param:{k}": v for k, v in self.mlp_params.items()})
        save_params(
            path,
            arrays,
            metadata={
                "db_format_version": _DB_FORMAT_VERSION,
                "provenance": self.provenance,
                "config": self.config.to_dict(),
            },
        )

    @classmethod
    def load(cls, path) -> "EmbeddingDatabase":
        arrays, meta = load_params(path)
        if meta.get("db_format_version") != _DB_FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported database version")
        config = ModelConfig(**meta["config"])
        tokens = arrays["table_tokens"]
        vectors = {int(t): arrays["table_vectors"][i] for i, t in enumerate(tokens)}
        counts = {int(t): int(c) for t, c in zip(tokens, arrays["table_counts"])}
        table = EmbeddingTable(arrays["table_vectors"].shape[1], vectors, counts)
        return cls(
            drug_ids=[str(x) for x in arrays["drug_ids"]],
            drug_embeddings=arrays["drug_embeddings"],
            assoc_scores=arrays["assoc_scores"],
            disease_ids=[str(x) for x in arrays["disease_ids"]],
            disease_names=[str(x) for x in arrays["disease_names"]],
            mlp_params={
                k.split(":", 1)[1]: v for k, v in arrays.items() if k.startswith("param:")
            },
            table=table,
            config=config,
            provenance=meta.get("provenance", ""),
        )


@dataclass
class ColdStartQuery:
    smiles: str
    prior: np.ndarray | None = None  # 0/1 vector over the disease catalog

    def prior_vector(self, n_diseases: int) -> np.ndarray:
        if self.prior is None:
            return np.zeros(n_diseases)
        prior = np.asarray(self.prior, dtype=np.float64).ravel()
        if prior.shape[0] != n_diseases:
            raise ShapeMismatch(f"prior has {prior.shape[0]} entries, catalog has {n_diseases}")
        if not np.all(np.isin(prior, (0.0, 1.0))):
            raise ValueError("prior entries must be 0 or 1")
        return prior


@dataclass
class ColdStartResult:
    similarity_weights: np.ndarray  # over training drugs
    raw_scores: np.ndarray
    scores: np.ndarray  # min-max normalized, aligned to the disease catalog
    ranking: list[tuple[str, str, float]]  # (disease id, name, score) descending
    unk_tokens: int = 0
    tokens_summed: int = 0
    top_k: int | None = None


def embed_query(smiles: str, table: EmbeddingTable, state: ModelState) -> np.ndarray:
    """Embed one SMILES through the drug pipeline, inference mode."""
    sentence = morgan_sentence(parse_smiles(smiles))
    mol = molecule_vector(sentence, table)
    return embed_drug_vectors(state, mol.values[None, :])[0]


def similarity(query_embedding: np.ndarray, drug_embeddings: np.ndarray,
               guard: float = DISTANCE_GUARD) -> np.ndarray:
    """Reciprocal Euclidean distance to every stored drug embedding."""
    query_embedding = np.asarray(query_embedding, dtype=np.float64).ravel()
    drug_embeddings = np.asarray(drug_embeddings, dtype=np.float64)
    if drug_embeddings.ndim != 2 or drug_embeddings.shape[1] != query_embedding.shape[0]:
        raise ShapeMismatch(
            f"query width {query_embedding.shape[0]} vs stored {drug_embeddings.shape}"
        )
    distances = np.sqrt(((drug_embeddings - query_embedding) ** 2).sum(axis=1))
    return 1.0 / (distances + guard)


def combine(weights: np.ndarray, assoc_scores: np.ndarray, prior: np.ndarray) -> np.ndarray:
    """Weighted pooling of association rows plus the prior vector."""
    weights = np.asarray(weights, dtype=np.float64).ravel()
    prior = np.asarray(prior, dtype=np.float64).ravel()
    if assoc_scores.ndim != 2 or weights.shape[0] != assoc_scores.shape[0]:
        raise ShapeMismatch(f"weights {weights.shape} vs matrix {assoc_scores.shape}")
    if prior.shape[0] != assoc_scores.shape[1]:
        raise ShapeMismatch(f"prior {prior.shape} vs matrix {assoc_scores.shape}")
    return weights @ assoc_scores + prior


def normalize(raw: np.ndarray) -> np.ndarray:
    """(x - min) / (max - min); a constant vector maps to all 0.5."""
    raw = np.asarray(raw, dtype=np.float64).ravel()
    low, high = raw.min(), raw.max()
    if high == low:
        return np.full(raw.shape, 0.5)
    return (raw - low) / (high - low)


def recommend(query: ColdStartQuery, db: EmbeddingDatabase,
              top_k: int | None = None) -> ColdStartResult:
    """Full pipeline: embed, weight, combine, normalize, rank.

    Ranking is descending by score with ties broken by disease id.
    """
    sentence = morgan_sentence(parse_smiles(query.smiles))
    mol = molecule_vector(sentence, db.table)
    embedding = embed_drug_vectors(db.mlp_state(), mol.values[None, :])[0]
    weights = similarity(embedding, db.drug_embeddings)
    raw = combine(weights, db.assoc_scores, query.prior_vector(len(db.disease_ids)))
    scores = normalize(raw)
    order = sorted(
        range(len(db.disease_ids)), key=lambda i: (-scores[i], db.disease_ids[i])
    )
    if top_k is not None:
        order = order[:top_k]
    ranking = [(db.disease_ids[i], db.disease_names[i], float(scores[i])) for i in order]
    return ColdStartResult(
        similarity_weights=weights,
        raw_scores=raw,
        scores=scores,
        ranking=ranking,
        unk_tokens=mol.unk_count,
        tokens_summed=mol.tokens_summed,
        top_k=top_k,
    )


def prior_from_ids(db: EmbeddingDatabase, disease_ids) -> np.ndarray:
    """Build a 0/1 prior vector from a list of known disease ids."""
    prior = np.zeros(len(db.disease_ids))
    for disease_id in disease_ids:
        prior[db.disease_index(disease_id)] = 1.0
    return prior


def evaluate_coldstart(
    db: EmbeddingDatabase,
    test_smiles: dict[str, str],
    truth: list[tuple[str, str]],
    threshold: float = DEFAULT_SCORE_THRESHOLD,
) -> MetricsReport:
    """Score every held-out drug with a zero prior against the held-out truth.

    Every (test drug, catalog disease) pair is labeled by the truth list and
    scored by the recommender; the report carries all seven metrics at the
    given threshold plus AUC/AUPR.
    """
    truth_set = {(drug, disease) for drug, disease in truth}
    scores = []
    labels = []
    for drug_id in sorted(test_smiles):
        result = recommend(ColdStartQuery(test_smiles[drug_id]), db)
        scores.append(result.scores)
        labels.append(
            [1.0 if (drug_id, d) in truth_set else 0.0 for d in db.disease_ids]
        )
    return full_report(
        np.concatenate(scores), np.concatenate(labels), threshold
    )


def build_database(
    drug_ids: list[str],
    drug_embeddings: np.ndarray,
    assoc_scores: np.ndarray,
    disease_ids: list[str],
    disease_names: list[str],
    state: ModelState,
    table: EmbeddingTable,
    provenance: str,
) -> EmbeddingDatabase:
    """Bundle trained artifacts into the recommender's input container."""
    mlp_params = {k: state.params[k].copy() for k in _MLP_PARAMS}
    return EmbeddingDatabase(
        drug_ids=list(drug_ids),
        drug_embeddings=np.asarray(drug_embeddings, dtype=np.float64),
        assoc_scores=np.asarray(assoc_scores, dtype=np.float64),
        disease_ids=list(disease_ids),
        disease_names=list(disease_names),
        mlp_params=mlp_params,
        table=table,
        config=state.config,
        provenance=provenance,
    )
