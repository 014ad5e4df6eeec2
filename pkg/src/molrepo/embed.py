"""Skip-gram embeddings for substructure tokens and per-molecule vectors.

Substructure identifiers from :mod:`molrepo.chem` are treated as words in a
molecular sentence.  A small negative-sampling skip-gram learner turns a
corpus of sentences into a token -> 300-dim vector table; a molecule's
vector is the plain sum of its token vectors, with unseen tokens resolving
to a reserved UNK entry so any parseable input gets a vector.

Training is single-threaded and bit-reproducible for a fixed seed.  Stored
vectors are quantized to 9 significant decimal digits, which is also the
table file precision, so save/load round-trips are exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chem import SubstructureId

UNK = -1  # reserved sentinel token, always present in the vocabulary

DEFAULT_DIM = 300
DEFAULT_MIN_COUNT = 3
_NOISE_POWER = 0.75


class EmptyCorpus(ValueError):
    pass


class EmptySentence(ValueError):
    pass


class CorruptFile(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


def token_ids(sentence) -> list[int]:
    """Accept either raw integer tokens or SubstructureId sequences."""
    return [t.hash if isinstance(t, SubstructureId) else int(t) for t in sentence]


def quantize(values: np.ndarray) -> np.ndarray:
    """Round to 9 significant decimal digits, the table file precision.

    Trained tables are quantized before being returned, so the text format
    round-trips them exactly; hand-built tables should pass through this
    before relying on save/load losslessness.
    """
    flat = np.asarray(values, dtype=np.float64).ravel()
    out = np.array([float(f"{v:.9g}") for v in flat], dtype=np.float64)
    return out.reshape(np.shape(values))


@dataclass
class EmbeddingTable:
    """Learned token vectors plus the vocabulary counts behind them."""

    dim: int
    vectors: dict[int, np.ndarray]
    counts: dict[int, int]

    def __post_init__(self):
        if UNK not in self.vectors:
            raise ValueError("embedding table must contain the UNK token")
        for token, vec in self.vectors.items():
            if vec.shape != (self.dim,):
                raise DimensionMismatch(
                    f"token {token}: vector has {vec.shape[0]} components, expected {self.dim}"
                )

    def vector(self, token: int) -> np.ndarray:
        return self.vectors.get(token, self.vectors[UNK])

    def __contains__(self, token: int) -> bool:
        return token in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)


@dataclass
class MolVector:
    """Sum of resolved token vectors for one molecule."""

    values: np.ndarray
    tokens_summed: int
    unk_count: int


@dataclass
class SkipGramConfig:
    dim: int = DEFAULT_DIM
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    learning_rate: float = 0.025
    min_learning_rate: float = 1e-4
    seed: int = 0


def build_corpus(sentences, min_count: int = DEFAULT_MIN_COUNT):
    """Count tokens and replace rare ones (count < min_count) by UNK.

    Returns ``(corpus, counts)`` where ``corpus`` is a list of token-id
    lists and ``counts`` maps every corpus token (including UNK) to its
    frequency.
    """
    raw = [token_ids(s) for s in sentences]
    if not raw or all(len(s) == 0 for s in raw):
        raise EmptyCorpus("no sentences to build a corpus from")
    totals: dict[int, int] = {}
    for sent in raw:
        for tok in sent:
            totals[tok] = totals.get(tok, 0) + 1
    corpus = [[tok if totals[tok] >= min_count else UNK for tok in sent] for sent in raw]
    counts: dict[int, int] = {UNK: 0}
    for sent in corpus:
        for tok in sent:
            counts[tok] = counts.get(tok, 0) + 1
    return corpus, counts


def pair_gradients(center_vec, context_vec, negative_vecs):
    """Loss and gradients for one (center, context, negatives) step.

    Negative-sampling objective:
        loss = -log s(u_ctx . v_c) - sum_i log s(-u_neg_i . v_c)
    Returns ``(loss, d_center, d_context, d_negatives)``.
    """
    v = np.asarray(center_vec, dtype=np.float64)
    u = np.asarray(context_vec, dtype=np.float64)
    negs = np.asarray(negative_vecs, dtype=np.float64)

    pos_score = 1.0 / (1.0 + np.exp(-np.dot(u, v)))
    neg_scores = 1.0 / (1.0 + np.exp(-(negs @ v))) if negs.size else np.zeros(0)

    loss = -np.log(max(pos_score, 1e-300))
    if negs.size:
        loss -= np.log(np.maximum(1.0 - neg_scores, 1e-300)).sum()

    d_context = (pos_score - 1.0) * v
    d_center = (pos_score - 1.0) * u
    d_negatives = np.zeros_like(negs)
    if negs.size:
        d_center = d_center + negs.T @ neg_scores
        d_negatives = neg_scores[:, None] * v[None, :]
    return float(loss), d_center, d_context, d_negatives


def _init_vectors(rng: np.random.Generator, vocab_size: int, dim: int) -> np.ndarray:
    return (rng.random((vocab_size, dim)) - 0.5) / dim


def train_skipgram(corpus, counts, config: SkipGramConfig | None = None) -> EmbeddingTable:
    """Train token embeddings with negative-sampling skip-gram.

    Negatives are drawn from the unigram^0.75 distribution over the corpus
    vocabulary.  The learning rate decays linearly over all training pairs.
    Deterministic for a fixed seed.
    """
    if config is None:
        config = SkipGramConfig()
    if not corpus or all(len(s) == 0 for s in corpus):
        raise EmptyCorpus("cannot train on an empty corpus")

    vocab = sorted(counts)
    index = {tok: i for i, tok in enumerate(vocab)}
    freq = np.array([counts[tok] for tok in vocab], dtype=np.float64)

    noise = freq**_NOISE_POWER
    if noise.sum() == 0:
        noise = np.ones_like(noise)
    noise_cdf = np.cumsum(noise / noise.sum())

    rng = np.random.default_rng(config.seed)
    in_vecs = _init_vectors(rng, len(vocab), config.dim)
    out_vecs = np.zeros((len(vocab), config.dim), dtype=np.float64)

    encoded = [np.array([index[t] for t in sent], dtype=np.intp) for sent in corpus]
    pairs_per_epoch = sum(
        sum(min(pos, config.window) + min(len(s) - 1 - pos, config.window) for pos in range(len(s)))
        for s in encoded
    )
    total_pairs = max(pairs_per_epoch * config.epochs, 1)
    lr0, lr_min = config.learning_rate, config.min_learning_rate

    processed = 0
    for _ in range(config.epochs):
        for sent in encoded:
            length = len(sent)
            for pos in range(length):
                center = sent[pos]
                lo = max(0, pos - config.window)
                hi = min(length, pos + config.window + 1)
                for ctx_pos in range(lo, hi):
                    if ctx_pos == pos:
                        continue
                    context = sent[ctx_pos]
                    draws = rng.random(config.negatives)
                    neg_idx = np.searchsorted(noise_cdf, draws)
                    lr = max(lr0 * (1.0 - processed / total_pairs), lr_min)
                    _, d_c, d_ctx, d_negs = pair_gradients(
                        in_vecs[center], out_vecs[context], out_vecs[neg_idx]
                    )
                    in_vecs[center] -= lr * d_c
                    out_vecs[context] -= lr * d_ctx
                    # Duplicate negative draws accumulate one at a time.
                    for k, ni in enumerate(neg_idx):
                        out_vecs[ni] -= lr * d_negs[k]
                    processed += 1

    in_vecs = quantize(in_vecs)
    vectors = {tok: in_vecs[i].copy() for tok, i in index.items()}
    if UNK not in vectors:
        vectors[UNK] = np.zeros(config.dim)
    table_counts = dict(counts)
    table_counts.setdefault(UNK, 0)
    return EmbeddingTable(config.dim, vectors, table_counts)


def molecule_vector(sentence, table: EmbeddingTable) -> MolVector:
    """Sum the resolved token vectors; unknown tokens resolve to UNK."""
    tokens = token_ids(sentence)
    if not tokens:
        raise EmptySentence("cannot embed an empty sentence")
    total = np.zeros(table.dim, dtype=np.float64)
    unk = 0
    for tok in tokens:
        if tok not in table.vectors:
            unk += 1
        total += table.vector(tok)
    return MolVector(total, tokens_summed=len(tokens), unk_count=unk)


def mean_molecule_vector(sentence, table: EmbeddingTable) -> MolVector:
    """Mean-pooled variant; off by default in the pipeline."""
    mv = molecule_vector(sentence, table)
    return MolVector(mv.values / mv.tokens_summed, mv.tokens_summed, mv.unk_count)


# ---------------------------------------------------------------------------
# persistence: header `dim<TAB>vocab_size`, one `token<TAB>count<TAB>v1 ... vD`
# line per token, 9 significant digits per component; UNK spelled literally.


def save_table(table: EmbeddingTable, path) -> None:
    lines = [f"{table.dim}\t{len(table.vectors)}"]
    for token in sorted(table.vectors):
        name = "UNK" if token == UNK else str(token)
        comps = " ".join(f"{v:.9g}" for v in table.vectors[token])
        lines.append(f"{name}\t{table.counts.get(token, 0)}\t{comps}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_table(path) -> EmbeddingTable:
    with open(path, "r", encoding="utf-8") as fh:
        content = fh.read()
    lines = [ln for ln in content.split("\n") if ln]
    if not lines:
        raise CorruptFile(f"{path}: empty table file")
    header = lines[0].split("\t")
    if len(header) != 2:
        raise CorruptFile(f"{path}: malformed header {lines[0]!r}")
    try:
        dim, vocab_size = int(header[0]), int(header[1])
    except ValueError as exc:
        raise CorruptFile(f"{path}: malformed header {lines[0]!r}") from exc
    if len(lines) - 1 != vocab_size:
        raise CorruptFile(f"{path}: header says {vocab_size} tokens, found {len(lines) - 1}")

    vectors: dict[int, np.ndarray] = {}
    counts: dict[int, int] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split("\t")
        if len(fields) != 3:
            raise CorruptFile(f"{path}:{lineno}: expected 3 tab-separated fields")
        token = UNK if fields[0] == "UNK" else int(fields[0])
        comps = np.array([float(x) for x in fields[2].split()], dtype=np.float64)
        if comps.shape[0] != dim:
            raise DimensionMismatch(
                f"{path}:{lineno}: {comps.shape[0]} components, header says {dim}"
            )
        vectors[token] = comps
        counts[token] = int(fields[1])
    if UNK not in vectors:
        raise CorruptFile(f"{path}: UNK token missing")
    return EmbeddingTable(dim, vectors, counts)
