"""Encoder layers, loss semantics, training determinism and equivariance."""

import numpy as np
import pytest

from molrepo import numerics as nm
from molrepo.hetnet import Dataset, RelationEdges, HeteroGraph, build_graph
from molrepo.model import (
    GraphContext,
    ModelConfig,
    NoPositives,
    drug_embeddings,
    gat_layer,
    hetero_gcn_layer,
    init_features,
    init_state,
    layer_attention,
    disease_embeddings,
    pair_mask_and_labels,
    positive_weight,
    score_matrix,
    train,
    weighted_bce_loss,
    inference_scores,
)
from molrepo.numerics import ShapeMismatch


def micro_graph(seed=0, with_rd=True):
    """5 drugs, 4 diseases, 3 proteins, 2 genes, 2 pathways, <= 20 edges."""
    rng = np.random.default_rng(seed)
    relations = {
        "rp": np.array([[0, 0], [1, 1], [2, 2], [3, 0]], dtype=np.intp),
        "pg": np.array([[0, 0], [1, 1]], dtype=np.intp),
        "gw": np.array([[0, 0], [1, 1]], dtype=np.intp),
        "wd": np.array([[0, 0], [0, 1], [1, 2], [1, 3]], dtype=np.intp),
    }
    if with_rd:
        relations["rd"] = np.array(
            [[0, 0], [1, 1], [2, 2], [3, 3], [4, 0]], dtype=np.intp
        )
    sim = rng.random((4, 4)) * 0.5
    sim = (sim + sim.T) / 2
    np.fill_diagonal(sim, 1.0)
    ds = Dataset(
        name="micro",
        entity_ids={
            "drug": [f"R{i}" for i in range(5)],
            "protein": [f"P{i}" for i in range(3)],
            "gene": [f"G{i}" for i in range(2)],
            "pathway": [f"W{i}" for i in range(2)],
            "disease": [f"D{i}" for i in range(4)],
        },
        drug_smiles={},
        entity_names={},
        relations=relations,
        relation_weights={k: np.ones(len(v)) for k, v in relations.items()},
        disease_similarity=sim,
    )
    fingerprints = {
        f"R{i}": frozenset(rng.integers(0, 60, size=6).tolist()) for i in range(5)
    }
    return build_graph(ds, fingerprints)


def micro_config(**overrides):
    defaults = dict(
        hidden_width=8, embedding_width=8, drug_vector_width=12, dropout=0.0, seed=1
    )
    defaults.update(overrides)
    return ModelConfig(**defaults)


class TestConfig:
    def test_defaults_match_contract(self):
        config = ModelConfig()
        assert config.hidden_width == 64
        assert config.embedding_width == 64
        assert config.drug_vector_width == 300
        assert config.dropout == 0.4
        assert config.learning_rate == 0.005
        assert config.epochs == 4000

    def test_validation(self):
        with pytest.raises(ValueError):
            ModelConfig(dropout=1.0)
        with pytest.raises(ValueError):
            ModelConfig(hidden_width=0)
        with pytest.raises(ValueError):
            ModelConfig(attention_heads=4)
        with pytest.raises(ValueError):
            ModelConfig(hidden_width=32, embedding_width=64)


class TestLayers:
    def test_init_features_zero_rows_identical(self):
        graph = micro_graph()
        config = micro_config()
        state = init_state(graph, config)
        act = nm.activation(config.activation)
        out = init_features(
            nm.constant(graph.features),
            nm.constant(state.params["init.weight"]),
            nm.constant(state.params["init.bias"]),
            act,
        )
        off = graph.class_offsets["protein"]
        assert np.array_equal(out.value[off], out.value[off + 1])
        assert out.value.shape == (graph.n_nodes, 8)

    def test_gcn_no_edges_is_self_transform(self):
        graph = micro_graph()
        ctx = GraphContext(graph)
        rng = np.random.default_rng(0)
        hidden = nm.constant(rng.normal(size=(graph.n_nodes, 8)))
        w_self = nm.constant(rng.normal(size=(8, 8)))
        out = hetero_gcn_layer(hidden, ctx, {}, w_self, nm.elu)
        expected = nm.elu(nm.matmul(hidden, w_self)).value
        assert np.allclose(out.value, expected)

    def test_gcn_single_edge_unit_normalization(self):
        # One drug-disease edge between degree-1 endpoints: message weight 1.
        relations = {"rd": np.array([[0, 0]], dtype=np.intp)}
        ds = Dataset(
            name="pair",
            entity_ids={
                "drug": ["R0"], "protein": [], "gene": [], "pathway": [],
                "disease": ["D0"],
            },
            drug_smiles={},
            entity_names={},
            relations=relations,
            relation_weights={"rd": np.ones(1)},
            disease_similarity=np.eye(1),
        )
        graph = build_graph(ds, {"R0": frozenset([1])})
        ctx = GraphContext(graph)
        hidden = nm.constant(np.array([[1.0, 2.0], [3.0, 5.0]]))
        identity = nm.constant(np.eye(2))
        zero_self = nm.constant(np.zeros((2, 2)))
        out = hetero_gcn_layer(hidden, ctx, {"rd": identity}, zero_self, nm.relu)
        # Node 0 (drug) receives node 1 (disease) with weight 1 and vice versa.
        assert out.value[0] == pytest.approx([3.0, 5.0])
        assert out.value[1] == pytest.approx([1.0, 2.0])

    def test_gat_self_loop_only(self):
        # A graph with no edges leaves only self-loops in the attention.
        ds = Dataset(
            name="lonely",
            entity_ids={
                "drug": ["R0", "R1"], "protein": [], "gene": [], "pathway": [],
                "disease": ["D0"],
            },
            drug_smiles={},
            entity_names={},
            relations={},
            relation_weights={},
            disease_similarity=np.eye(1),
        )
        graph = build_graph(ds, {"R0": frozenset([1]), "R1": frozenset([2])})
        # strip similarity edges so only self-loops remain
        graph = graph.replace_relation(
            "rr", np.zeros((0, 2), dtype=np.intp), np.zeros(0)
        ).replace_relation("dd", np.zeros((0, 2), dtype=np.intp), np.zeros(0))
        ctx = GraphContext(graph)
        rng = np.random.default_rng(1)
        hidden = nm.constant(rng.normal(size=(3, 4)))
        weight = nm.constant(rng.normal(size=(4, 4)))
        out = gat_layer(
            hidden, ctx, weight,
            nm.constant(rng.normal(size=(4, 1))), nm.constant(rng.normal(size=(4, 1))),
        )
        assert np.allclose(out.value, hidden.value @ weight.value)

    def test_gat_attention_rows_sum_to_one(self):
        graph = micro_graph()
        ctx = GraphContext(graph)
        rng = np.random.default_rng(2)
        transformed = rng.normal(size=(graph.n_nodes, 8))
        logits = rng.normal(size=(ctx.gat_src.size, 1))
        # Recompute the normalized attention the same way the layer does.
        shift = np.full(ctx.n_nodes, -np.inf)
        np.maximum.at(shift, ctx.gat_dst, logits[:, 0])
        weights = np.exp(logits[:, 0] - shift[ctx.gat_dst])
        denom = np.zeros(ctx.n_nodes)
        np.add.at(denom, ctx.gat_dst, weights)
        attention = weights / denom[ctx.gat_dst]
        sums = np.zeros(ctx.n_nodes)
        np.add.at(sums, ctx.gat_dst, attention)
        assert np.allclose(sums, 1.0)

    def test_layer_attention_single_layer_identity(self):
        rng = np.random.default_rng(3)
        h = nm.constant(rng.normal(size=(5, 4)))
        out = layer_attention([h], nm.constant(np.array([1.7])))
        assert np.allclose(out.value, h.value)

    def test_layer_attention_equal_logits_mean(self):
        rng = np.random.default_rng(4)
        layers = [nm.constant(rng.normal(size=(5, 4))) for _ in range(3)]
        out = layer_attention(layers, nm.constant(np.zeros(3)))
        mean = sum(l.value for l in layers) / 3
        assert np.allclose(out.value, mean)

    def test_layer_attention_weights_sum_to_one(self):
        logits = nm.constant(np.array([0.3, -2.0, 5.0, 1.1]))
        weights = nm.softmax(logits)
        assert weights.value.sum() == pytest.approx(1.0, abs=1e-12)

    def test_layer_attention_shape_mismatch(self):
        a = nm.constant(np.zeros((3, 2)))
        b = nm.constant(np.zeros((4, 2)))
        with pytest.raises(ShapeMismatch):
            layer_attention([a, b], nm.constant(np.zeros(2)))


class TestEmbeddingsAndScores:
    def test_disease_embedding_shape_and_determinism(self):
        graph = micro_graph()
        config = micro_config()
        state = init_state(graph, config)
        ctx = GraphContext(graph)
        nodes = {k: nm.constant(v) for k, v in state.params.items()}
        e1 = disease_embeddings(ctx, nodes, config).value
        e2 = disease_embeddings(ctx, nodes, config).value
        assert e1.shape == (4, 8)
        assert np.array_equal(e1, e2)

    def test_masking_changes_disease_embeddings(self):
        graph = micro_graph()
        config = micro_config()
        state = init_state(graph, config)
        nodes = {k: nm.constant(v) for k, v in state.params.items()}
        full = disease_embeddings(GraphContext(graph), nodes, config).value
        rel = graph.relations["rd"]
        masked = graph.replace_relation("rd", rel.pairs[1:].copy(), rel.weights[1:].copy())
        dropped = disease_embeddings(GraphContext(masked), nodes, config).value
        assert not np.allclose(full, dropped)

    def test_drug_mlp_shapes_and_inference_consistency(self):
        graph = micro_graph()
        config = micro_config()
        state = init_state(graph, config)
        nodes = {k: nm.constant(v) for k, v in state.params.items()}
        rng = np.random.default_rng(5)
        row = rng.normal(size=12)
        vectors = nm.constant(np.stack([row, row, rng.normal(size=12)]))
        out = drug_embeddings(vectors, nodes, config, training=False)
        assert out.value.shape == (3, 8)
        assert np.array_equal(out.value[0], out.value[1])

    def test_drug_mlp_width_check(self):
        graph = micro_graph()
        config = micro_config()
        state = init_state(graph, config)
        nodes = {k: nm.constant(v) for k, v in state.params.items()}
        with pytest.raises(ShapeMismatch):
            drug_embeddings(nm.constant(np.zeros((2, 7))), nodes, config)

    def test_score_matrix_matches_brute_force(self):
        rng = np.random.default_rng(6)
        e_r = rng.normal(size=(5, 8))
        e_d = rng.normal(size=(4, 8))
        scores = score_matrix(nm.constant(e_r), nm.constant(e_d)).value
        brute = 1.0 / (1.0 + np.exp(-(e_r @ e_d.T)))
        assert np.max(np.abs(scores - brute)) < 1e-12
        assert np.all((scores > 0) & (scores < 1))

    def test_zero_drug_row_scores_half(self):
        e_r = np.zeros((1, 8))
        e_d = np.random.default_rng(7).normal(size=(4, 8))
        scores = score_matrix(nm.constant(e_r), nm.constant(e_d)).value
        assert scores[0] == pytest.approx([0.5] * 4)

    def test_drug_permutation_equivariance(self):
        graph = micro_graph()
        config = micro_config()
        state = init_state(graph, config)
        rng = np.random.default_rng(8)
        vectors = rng.normal(size=(5, 12))
        _, _, scores = inference_scores(graph, state, vectors)
        perm = rng.permutation(5)
        _, _, permuted = inference_scores(graph, state, vectors[perm])
        assert np.allclose(permuted, scores[perm])


class TestLoss:
    def test_hand_computed_weighted_case(self):
        # 1 positive at logit 0, 99 negatives at logit -30:
        # weight = 99, positive term = 99 * ln 2, negatives ~ 0.
        logits_value = np.full((10, 10), -30.0)
        logits_value[0, 0] = 0.0
        labels = np.zeros((10, 10))
        labels[0, 0] = 1.0
        mask = np.ones((10, 10), dtype=bool)
        loss = weighted_bce_loss(nm.constant(logits_value), labels, mask)
        assert float(loss.value) == pytest.approx(99 * np.log(2) / 100, rel=1e-6)

    def test_all_negative_raises(self):
        logits_value = np.zeros((2, 2))
        labels = np.zeros((2, 2))
        mask = np.ones((2, 2), dtype=bool)
        with pytest.raises(NoPositives):
            weighted_bce_loss(nm.constant(logits_value), labels, mask)

    def test_weight_is_count_ratio(self):
        labels = np.zeros((4, 5))
        labels[0, :3] = 1.0
        mask = np.ones((4, 5), dtype=bool)
        assert positive_weight(labels, mask) == pytest.approx(17 / 3)
        # doubling both counts leaves the ratio unchanged
        doubled = np.concatenate([labels, labels])
        mask2 = np.ones_like(doubled, dtype=bool)
        assert positive_weight(doubled, mask2) == pytest.approx(17 / 3)

    def test_masked_entries_only(self):
        logits_value = np.array([[0.0, 100.0], [-100.0, 0.0]])
        labels = np.array([[1.0, 0.0], [0.0, 0.0]])
        mask = np.array([[True, False], [False, True]])
        loss = weighted_bce_loss(nm.constant(logits_value), labels, mask)
        # within mask: one positive logit 0 (w=1), one negative logit 0
        assert float(loss.value) == pytest.approx(np.log(2))

    def test_global_scale_mode(self):
        logits_value = np.zeros((1, 4))
        labels = np.array([[1.0, 0.0, 0.0, 0.0]])
        mask = np.ones((1, 4), dtype=bool)
        per_class = weighted_bce_loss(nm.constant(logits_value), labels, mask)
        globally = weighted_bce_loss(
            nm.constant(logits_value), labels, mask, mode="global_scale"
        )
        assert float(globally.value) == pytest.approx(3 * np.log(2))
        assert float(per_class.value) == pytest.approx((3 + 3) * np.log(2) / 4)


class TestTraining:
    def test_deterministic_loss_trace(self):
        graph = micro_graph()
        config = micro_config(epochs=15, dropout=0.3)
        rng = np.random.default_rng(9)
        vectors = rng.normal(size=(5, 12))
        pos = graph.relations["rd"].pairs
        neg = np.array([[0, 1], [1, 2], [2, 3], [4, 1]], dtype=np.intp)
        r1 = train(graph, pos, neg, config, vectors)
        r2 = train(graph, pos, neg, config, vectors)
        assert r1.loss_trace == r2.loss_trace

    def test_loss_decreases(self):
        graph = micro_graph()
        config = micro_config(epochs=80, dropout=0.0, learning_rate=0.01)
        rng = np.random.default_rng(10)
        vectors = rng.normal(size=(5, 12))
        pos = graph.relations["rd"].pairs
        neg = np.array([[0, 1], [1, 2], [2, 3], [4, 1]], dtype=np.intp)
        result = train(graph, pos, neg, config, vectors)
        assert result.loss_trace[-1] < result.loss_trace[0]
        assert min(result.loss_trace) == pytest.approx(
            float(np.min(result.loss_trace))
        )

    def test_best_state_checkpointing(self):
        graph = micro_graph()
        config = micro_config(epochs=25, dropout=0.0)
        rng = np.random.default_rng(11)
        vectors = rng.normal(size=(5, 12))
        pos = graph.relations["rd"].pairs
        neg = np.array([[0, 1]], dtype=np.intp)
        result = train(graph, pos, neg, config, vectors)
        mask, labels = pair_mask_and_labels(5, 4, pos, neg)
        ctx_nodes = {k: nm.constant(v) for k, v in result.state.params.items()}
        from molrepo.model import forward

        _, _, logits = forward(
            GraphContext(graph), ctx_nodes, nm.constant(vectors), config
        )
        best_loss = float(weighted_bce_loss(logits, labels, mask).value)
        assert best_loss == pytest.approx(min(result.loss_trace), rel=1e-9)
