"""Corpus building, skip-gram learning and table persistence tests."""

import numpy as np
import pytest

from molrepo.chem import morgan_sentence, parse_smiles
from molrepo.embed import (
    UNK,
    CorruptFile,
    DimensionMismatch,
    EmbeddingTable,
    EmptyCorpus,
    EmptySentence,
    SkipGramConfig,
    _init_vectors,
    quantize,
    build_corpus,
    load_table,
    molecule_vector,
    pair_gradients,
    save_table,
    token_ids,
    train_skipgram,
)


def toy_corpus():
    sentences = [[1, 2, 3], [1, 2, 4], [2, 3, 1], [3, 1, 2]]
    return build_corpus(sentences, min_count=1)


class TestCorpus:
    def test_rare_tokens_become_unk(self):
        corpus, counts = build_corpus([[1, 2, 3]], min_count=3)
        assert corpus == [[UNK, UNK, UNK]]
        assert counts[UNK] == 3

    def test_min_count_one_keeps_all(self):
        corpus, counts = build_corpus([[5, 6], [6, 7]], min_count=1)
        assert corpus == [[5, 6], [6, 7]]
        assert set(counts) == {UNK, 5, 6, 7}

    def test_repetition_changes_counts_not_vocab(self):
        _, counts3 = build_corpus([[1, 2]] * 3, min_count=1)
        _, counts100 = build_corpus([[1, 2]] * 100, min_count=1)
        assert set(counts3) == set(counts100)
        assert counts100[1] == 100 and counts3[1] == 3

    def test_empty_corpus(self):
        with pytest.raises(EmptyCorpus):
            build_corpus([], min_count=1)
        with pytest.raises(EmptyCorpus):
            build_corpus([[]], min_count=1)

    def test_accepts_substructure_ids(self):
        sent = morgan_sentence(parse_smiles("CCO"))
        corpus, counts = build_corpus([sent], min_count=1)
        assert corpus[0] == token_ids(sent)


class TestSkipGram:
    def test_vector_dimension(self):
        corpus, counts = toy_corpus()
        table = train_skipgram(corpus, counts, SkipGramConfig(dim=300, epochs=1, seed=0))
        assert all(v.shape == (300,) for v in table.vectors.values())

    def test_zero_epochs_equals_initialization(self):
        corpus, counts = toy_corpus()
        config = SkipGramConfig(dim=16, epochs=0, seed=42)
        table = train_skipgram(corpus, counts, config)
        rng = np.random.default_rng(42)
        init = quantize(_init_vectors(rng, len(counts), 16))
        vocab = sorted(counts)
        for i, token in enumerate(vocab):
            assert np.array_equal(table.vectors[token], init[i])

    def test_deterministic(self):
        corpus, counts = toy_corpus()
        config = SkipGramConfig(dim=8, epochs=3, seed=5)
        t1 = train_skipgram(corpus, counts, config)
        t2 = train_skipgram(corpus, counts, config)
        for token in t1.vectors:
            assert np.array_equal(t1.vectors[token], t2.vectors[token])

    def test_cooccurrence_shapes_similarity(self):
        # 1,2 always co-occur (sharing context 10); 3,4 likewise with 20;
        # never across.  Shared contexts pull the input vectors together.
        sentences = [[1, 2, 10], [3, 4, 20]] * 60
        corpus, counts = build_corpus(sentences, min_count=1)
        table = train_skipgram(
            corpus, counts, SkipGramConfig(dim=16, epochs=10, window=2, seed=0)
        )

        def cos(a, b):
            va, vb = table.vectors[a], table.vectors[b]
            return float(va @ vb / (np.linalg.norm(va) * np.linalg.norm(vb)))

        assert cos(1, 2) > cos(1, 3)
        assert cos(3, 4) > cos(2, 4)

    def test_unk_always_present(self):
        corpus, counts = toy_corpus()
        table = train_skipgram(corpus, counts, SkipGramConfig(dim=4, epochs=1, seed=0))
        assert UNK in table.vectors


class TestPairGradients:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(2)
        center = rng.normal(size=10)
        context = rng.normal(size=10)
        negatives = rng.normal(size=(4, 10))
        _, d_center, d_context, d_negs = pair_gradients(center, context, negatives)
        h = 1e-6
        for k in range(10):
            cp, cm = center.copy(), center.copy()
            cp[k] += h
            cm[k] -= h
            num = (
                pair_gradients(cp, context, negatives)[0]
                - pair_gradients(cm, context, negatives)[0]
            ) / (2 * h)
            assert abs(num - d_center[k]) / max(abs(num), 1e-8) < 1e-4
        for k in range(10):
            up, um = context.copy(), context.copy()
            up[k] += h
            um[k] -= h
            num = (
                pair_gradients(center, up, negatives)[0]
                - pair_gradients(center, um, negatives)[0]
            ) / (2 * h)
            assert abs(num - d_context[k]) / max(abs(num), 1e-8) < 1e-4


class TestMoleculeVector:
    def table(self):
        vectors = {
            UNK: np.zeros(3),
            10: np.array([1.0, 0.0, 2.0]),
            11: np.array([0.5, -1.0, 0.0]),
        }
        return EmbeddingTable(3, vectors, {UNK: 0, 10: 4, 11: 5})

    def test_single_token(self):
        table = self.table()
        mv = molecule_vector([10], table)
        assert np.array_equal(mv.values, table.vectors[10])

    def test_repeated_token_doubles(self):
        table = self.table()
        mv = molecule_vector([10, 10], table)
        assert np.array_equal(mv.values, 2 * table.vectors[10])

    def test_permutation_invariant(self):
        table = self.table()
        a = molecule_vector([10, 11, 10], table)
        b = molecule_vector([10, 10, 11], table)
        assert np.array_equal(a.values, b.values)

    def test_concatenation_linear(self):
        table = self.table()
        s1, s2 = [10, 11], [11, 11, 10]
        joint = molecule_vector(s1 + s2, table)
        assert np.allclose(
            joint.values,
            molecule_vector(s1, table).values + molecule_vector(s2, table).values,
        )

    def test_unknown_tokens_resolve_to_unk(self):
        table = self.table()
        mv = molecule_vector([999, 10], table)
        assert mv.unk_count == 1
        assert np.array_equal(mv.values, table.vectors[10])

    def test_empty_sentence(self):
        with pytest.raises(EmptySentence):
            molecule_vector([], self.table())


class TestPersistence:
    def trained(self):
        corpus, counts = toy_corpus()
        return train_skipgram(corpus, counts, SkipGramConfig(dim=12, epochs=2, seed=9))

    def test_round_trip_exact(self, tmp_path):
        table = self.trained()
        path = tmp_path / "table.tsv"
        save_table(table, path)
        loaded = load_table(path)
        assert loaded.dim == table.dim
        assert loaded.counts == table.counts
        for token in table.vectors:
            assert np.array_equal(loaded.vectors[token], table.vectors[token])

    def test_resave_is_byte_identical(self, tmp_path):
        table = self.trained()
        p1, p2 = tmp_path / "a.tsv", tmp_path / "b.tsv"
        save_table(table, p1)
        save_table(load_table(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_dimension_mismatch(self, tmp_path):
        path = tmp_path / "bad.tsv"
        path.write_text("3\t2\nUNK\t0\t0 0 0\n7\t1\t1 2\n", encoding="utf-8")
        with pytest.raises(DimensionMismatch):
            load_table(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.tsv"
        path.write_text("", encoding="utf-8")
        with pytest.raises(CorruptFile):
            load_table(path)

    def test_garbage_header(self, tmp_path):
        path = tmp_path / "hdr.tsv"
        path.write_text("what\n", encoding="utf-8")
        with pytest.raises(CorruptFile):
            load_table(path)
