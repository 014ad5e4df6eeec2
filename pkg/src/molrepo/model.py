"""Association model: graph encoder for diseases, structure MLP for drugs.

Disease embeddings come from a heterogeneous-graph encoder: a fully
connected feature projection, two global graph-convolution layers over all
relation types, one per-relation subnetwork (summed), a single-head graph
attention layer, and a learned softmax attention over the four layer
outputs.  Drug embeddings come solely from a three-layer MLP over the
summed substructure vectors; drugs never read their embedding from the
graph.  The association matrix is the entrywise sigmoid of the embedding
product, trained with a class-weighted binary cross-entropy on logits.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import numerics as nm
from .hetnet import HeteroGraph
from .numerics import Node, ShapeMismatch


class NoPositives(ValueError):
    """The training mask selects no positive labels."""


@dataclass
class ModelConfig:
    hidden_width: int = 64
    embedding_width: int = 64
    drug_vector_width: int = 300
    dropout: float = 0.4
    learning_rate: float = 0.005
    epochs: int = 4000
    activation: str = "elu"
    attention_heads: int = 1
    leaky_slope: float = 0.2
    loss_mode: str = "per_class_weight"  # or "global_scale"
    seed: int = 0

    def __post_init__(self):
        if self.hidden_width <= 0 or self.embedding_width <= 0 or self.drug_vector_width <= 0:
            raise ValueError("widths must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.attention_heads != 1:
            raise ValueError("only single-head attention is supported")
        if self.hidden_width != self.embedding_width:
            # The layer-attention fusion feeds the disease slice directly,
            # so hidden and embedding widths must agree.
            raise ValueError("hidden_width must equal embedding_width")
        if self.loss_mode not in ("per_class_weight", "global_scale"):
            raise ValueError(f"unknown loss_mode {self.loss_mode!r}")
        nm.activation(self.activation)  # validate the name early

    def to_dict(self) -> dict:
        return {
            "hidden_width": self.hidden_width,
            "embedding_width": self.embedding_width,
            "drug_vector_width": self.drug_vector_width,
            "dropout": self.dropout,
            "learning_rate": self.learning_rate,
            "epochs": self.epochs,
            "activation": self.activation,
            "attention_heads": self.attention_heads,
            "leaky_slope": self.leaky_slope,
            "loss_mode": self.loss_mode,
            "seed": self.seed,
        }


class GraphContext:
    """Constants derived from one graph: normalized adjacencies, attention
    edge lists (with self-loops) and the node feature matrix."""

    def __init__(self, graph: HeteroGraph):
        self.graph = graph
        self.n_nodes = graph.n_nodes
        self.relation_order = sorted(graph.relations)
        self.adjacency = {
            family: nm.normalized_adjacency(
                graph.global_pairs(family),
                graph.relations[family].weights,
                graph.n_nodes,
            )
            for family in self.relation_order
        }
        src_parts = []
        dst_parts = []
        for family in self.relation_order:
            pairs = graph.global_pairs(family)
            if pairs.size == 0:
                continue
            src_parts.extend([pairs[:, 0], pairs[:, 1]])
            dst_parts.extend([pairs[:, 1], pairs[:, 0]])
        loops = np.arange(graph.n_nodes, dtype=np.intp)
        src_parts.append(loops)
        dst_parts.append(loops)
        self.gat_src = np.concatenate(src_parts)
        self.gat_dst = np.concatenate(dst_parts)
        self.features = nm.constant(graph.features)

        drug_off = graph.class_offsets["drug"]
        disease_off = graph.class_offsets["disease"]
        self.drug_rows = np.arange(drug_off, drug_off + graph.n_drugs, dtype=np.intp)
        self.disease_rows = np.arange(
            disease_off, disease_off + graph.n_diseases, dtype=np.intp
        )


@dataclass
class ModelState:
    """All learnable parameters plus the configuration that shaped them."""

    params: dict[str, np.ndarray]
    config: ModelConfig
    relation_order: list[str]
    feature_width: int

    def copy(self) -> "ModelState":
        return ModelState(
            {k: v.copy() for k, v in self.params.items()},
            self.config,
            list(self.relation_order),
            self.feature_width,
        )


def _xavier(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_state(graph: HeteroGraph, config: ModelConfig) -> ModelState:
    """Glorot-uniform weights, zero biases, zero layer-attention logits."""
    rng = np.random.default_rng(config.seed)
    h = config.hidden_width
    width = graph.features.shape[1]
    relations = sorted(graph.relations)

    params: dict[str, np.ndarray] = {}
    params["init.weight"] = _xavier(rng, width, h)
    params["init.bias"] = np.zeros(h)
    for layer in ("gcn1", "gcn2"):
        for family in relations:
            params[f"{layer}.{family}.weight"] = _xavier(rng, h, h)
        params[f"{layer}.self.weight"] = _xavier(rng, h, h)
    for family in relations:
        params[f"subnet.{family}.weight"] = _xavier(rng, h, h)
        params[f"subnet.{family}.self.weight"] = _xavier(rng, h, h)
    params["gat.weight"] = _xavier(rng, h, h)
    params["gat.attn_src"] = _xavier(rng, h, 1)
    params["gat.attn_dst"] = _xavier(rng, h, 1)
    params["layer_attention.logits"] = np.zeros(4)
    params["mlp.w1"] = _xavier(rng, config.drug_vector_width, h)
    params["mlp.b1"] = np.zeros(h)
    params["mlp.w2"] = _xavier(rng, h, h)
    params["mlp.b2"] = np.zeros(h)
    params["mlp.w3"] = _xavier(rng, h, config.embedding_width)
    params["mlp.b3"] = np.zeros(config.embedding_width)
    return ModelState(params, config, relations, width)


def _as_nodes(state: ModelState) -> dict[str, Node]:
    return {name: nm.parameter(value) for name, value in state.params.items()}


# ---------------------------------------------------------------------------
# layers


def init_features(features: Node, weight: Node, bias: Node, act) -> Node:
    """Project raw node features to the hidden width: act(X W + b)."""
    return act(nm.add(nm.matmul(features, weight), bias))


def hetero_gcn_layer(
    hidden: Node,
    ctx: GraphContext,
    relation_weights: dict[str, Node],
    self_weight: Node,
    act,
) -> Node:
    """Degree-normalized message passing summed over the given relations,
    plus a self transform, then activation."""
    out = nm.matmul(hidden, self_weight)
    for family, weight in relation_weights.items():
        msg = nm.matmul(nm.spmm(ctx.adjacency[family], hidden), weight)
        out = nm.add(out, msg)
    return act(out)


def gat_layer(
    hidden: Node,
    ctx: GraphContext,
    weight: Node,
    attn_src: Node,
    attn_dst: Node,
    leaky_slope: float = 0.2,
) -> Node:
    """Single-head graph attention over in-neighborhoods with self-loops.

    Attention logits are leaky-relu(a_src . Wh_u + a_dst . Wh_v) for each
    directed edge u -> v, softmax-normalized per destination node; the
    output is the attention-weighted sum of transformed source features.
    """
    transformed = nm.matmul(hidden, weight)
    src_feat = nm.gather_rows(transformed, ctx.gat_src)
    dst_feat = nm.gather_rows(transformed, ctx.gat_dst)
    logits = nm.leaky_relu(
        nm.add(nm.matmul(src_feat, attn_src), nm.matmul(dst_feat, attn_dst)),
        slope=leaky_slope,
    )
    # Shift by the per-destination max (a constant) for a stable softmax.
    shift = np.full(ctx.n_nodes, -np.inf)
    np.maximum.at(shift, ctx.gat_dst, logits.value[:, 0])
    shifted = nm.sub(logits, nm.constant(shift[ctx.gat_dst][:, None]))
    weights_exp = nm.exp(shifted)
    denom = nm.segment_sum(weights_exp, ctx.gat_dst, ctx.n_nodes)
    attn = nm.div(weights_exp, nm.gather_rows(denom, ctx.gat_dst))
    messages = nm.mul(attn, src_feat)
    return nm.segment_sum(messages, ctx.gat_dst, ctx.n_nodes)


def layer_attention(layer_outputs: list[Node], logits: Node) -> Node:
    """Softmax-weighted sum of equally shaped layer outputs."""
    if not layer_outputs:
        raise ShapeMismatch("layer_attention needs at least one layer output")
    shapes = {out.value.shape for out in layer_outputs}
    if len(shapes) != 1:
        raise ShapeMismatch(f"layer outputs disagree in shape: {shapes}")
    if logits.value.shape != (len(layer_outputs),):
        raise ShapeMismatch(
            f"{len(layer_outputs)} layers need {len(layer_outputs)} logits, "
            f"got shape {logits.value.shape}"
        )
    weights = nm.softmax(logits)
    fused = None
    for i, out in enumerate(layer_outputs):
        w_i = nm.gather_rows(nm.reshape(weights, (len(layer_outputs), 1)), np.array([i]))
        term = nm.mul(w_i, out)
        fused = term if fused is None else nm.add(fused, term)
    return fused


def encode_nodes(ctx: GraphContext, nodes: dict[str, Node], config: ModelConfig) -> Node:
    """Full encoder stack: FC init, two global GCNs, per-relation subnets
    (summed), GAT, then layer attention over the four graph outputs."""
    act = nm.activation(config.activation)
    h0 = init_features(ctx.features, nodes["init.weight"], nodes["init.bias"], act)
    h1 = hetero_gcn_layer(
        h0,
        ctx,
        {f: nodes[f"gcn1.{f}.weight"] for f in ctx.relation_order},
        nodes["gcn1.self.weight"],
        act,
    )
    h2 = hetero_gcn_layer(
        h1,
        ctx,
        {f: nodes[f"gcn2.{f}.weight"] for f in ctx.relation_order},
        nodes["gcn2.self.weight"],
        act,
    )
    subnet_sum = None
    for family in ctx.relation_order:
        sub = hetero_gcn_layer(
            h2,
            ctx,
            {family: nodes[f"subnet.{family}.weight"]},
            nodes[f"subnet.{family}.self.weight"],
            act,
        )
        subnet_sum = sub if subnet_sum is None else nm.add(subnet_sum, sub)
    h4 = gat_layer(
        subnet_sum,
        ctx,
        nodes["gat.weight"],
        nodes["gat.attn_src"],
        nodes["gat.attn_dst"],
        leaky_slope=config.leaky_slope,
    )
    return layer_attention([h1, h2, subnet_sum, h4], nodes["layer_attention.logits"])


def disease_embeddings(ctx: GraphContext, nodes: dict[str, Node], config: ModelConfig) -> Node:
    """Disease rows of the fused node matrix."""
    fused = encode_nodes(ctx, nodes, config)
    return nm.gather_rows(fused, ctx.disease_rows)


def drug_embeddings(
    mol_vectors: Node,
    nodes: dict[str, Node],
    config: ModelConfig,
    training: bool = False,
    rng: np.random.Generator | None = None,
) -> Node:
    """Three affine layers over molecule vectors; dropout between layers."""
    if mol_vectors.value.shape[1] != config.drug_vector_width:
        raise ShapeMismatch(
            f"molecule vectors have width {mol_vectors.value.shape[1]}, "
            f"expected {config.drug_vector_width}"
        )
    act = nm.activation(config.activation)
    x = act(nm.add(nm.matmul(mol_vectors, nodes["mlp.w1"]), nodes["mlp.b1"]))
    x = nm.dropout(x, config.dropout, training, rng)
    x = act(nm.add(nm.matmul(x, nodes["mlp.w2"]), nodes["mlp.b2"]))
    x = nm.dropout(x, config.dropout, training, rng)
    return nm.add(nm.matmul(x, nodes["mlp.w3"]), nodes["mlp.b3"])


def score_logits(drug_emb: Node, disease_emb: Node) -> Node:
    return nm.matmul(drug_emb, nm.transpose(disease_emb))


def score_matrix(drug_emb: Node, disease_emb: Node) -> Node:
    """Entrywise sigmoid of the embedding product; values in (0, 1)."""
    return nm.sigmoid(score_logits(drug_emb, disease_emb))


def forward(
    ctx: GraphContext,
    nodes: dict[str, Node],
    mol_vectors: Node,
    config: ModelConfig,
    training: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[Node, Node, Node]:
    """(drug embeddings, disease embeddings, association logits)."""
    e_d = disease_embeddings(ctx, nodes, config)
    e_r = drug_embeddings(mol_vectors, nodes, config, training=training, rng=rng)
    return e_r, e_d, score_logits(e_r, e_d)


# ---------------------------------------------------------------------------
# loss and training


def positive_weight(labels: np.ndarray, mask: np.ndarray) -> float:
    """N_neg / N_pos within the mask; raises when the mask has no positives."""
    selected = labels[mask.astype(bool)]
    n_pos = float(selected.sum())
    if n_pos == 0:
        raise NoPositives("training mask selects no positive pairs")
    return (selected.size - n_pos) / n_pos


def weighted_bce_loss(
    logits: Node,
    labels: np.ndarray,
    mask: np.ndarray,
    mode: str = "per_class_weight",
    pos_weight: float | None = None,
) -> Node:
    """Numerically stable class-weighted BCE over the masked entries.

    ``per_class_weight`` multiplies the positive-class term by
    N_neg / N_pos (counts within the mask); ``global_scale`` instead scales
    the whole mean loss by the same ratio, which only rescales gradients.
    An explicit ``pos_weight`` overrides the computed ratio (used by
    ablation sweeps where the mask may contain no positives at all).
    """
    labels = np.asarray(labels, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if logits.value.shape != labels.shape or labels.shape != mask.shape:
        raise ShapeMismatch(
            f"logits {logits.value.shape}, labels {labels.shape}, mask {mask.shape}"
        )
    flat_idx = np.flatnonzero(mask.ravel())
    if flat_idx.size == 0:
        raise ShapeMismatch("mask selects no entries")
    y = labels.ravel()[flat_idx][:, None]
    if pos_weight is None:
        weight = positive_weight(labels, mask)
    else:
        weight = float(pos_weight)

    x = nm.gather_rows(nm.reshape(logits, (logits.value.size, 1)), flat_idx)
    pos_term = nm.mul(nm.constant(y), nm.softplus(nm.scale(x, -1.0)))
    neg_term = nm.mul(nm.constant(1.0 - y), nm.softplus(x))
    if mode == "per_class_weight":
        per_entry = nm.add(nm.scale(pos_term, weight), neg_term)
        return nm.reduce_mean(per_entry)
    if mode == "global_scale":
        return nm.scale(nm.reduce_mean(nm.add(pos_term, neg_term)), weight)
    raise ValueError(f"unknown loss mode {mode!r}")


@dataclass
class TrainResult:
    state: ModelState  # best state by training loss
    final_state: ModelState
    loss_trace: list[float] = field(default_factory=list)


def pair_mask_and_labels(
    n_drugs: int,
    n_diseases: int,
    positives: np.ndarray,
    negatives: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    labels = np.zeros((n_drugs, n_diseases), dtype=np.float64)
    mask = np.zeros((n_drugs, n_diseases), dtype=bool)
    positives = np.asarray(positives, dtype=np.intp).reshape(-1, 2)
    negatives = np.asarray(negatives, dtype=np.intp).reshape(-1, 2)
    if positives.size:
        labels[positives[:, 0], positives[:, 1]] = 1.0
        mask[positives[:, 0], positives[:, 1]] = True
    if negatives.size:
        mask[negatives[:, 0], negatives[:, 1]] = True
    return mask, labels


def train(
    graph: HeteroGraph,
    train_pos: np.ndarray,
    train_neg: np.ndarray,
    config: ModelConfig,
    mol_vectors: np.ndarray,
) -> TrainResult:
    """Full-batch Adam training; deterministic for a fixed config seed.

    The best state by training loss is checkpointed and returned alongside
    the final state and the per-epoch loss trace.
    """
    ctx = GraphContext(graph)
    state = init_state(graph, config)
    adam = nm.AdamState(learning_rate=config.learning_rate)
    mask, labels = pair_mask_and_labels(graph.n_drugs, graph.n_diseases, train_pos, train_neg)
    has_positives = bool(labels[mask].sum() > 0)
    mol_const = nm.constant(np.asarray(mol_vectors, dtype=np.float64))
    dropout_rng = np.random.default_rng(np.random.SeedSequence(config.seed).spawn(1)[0])

    best_loss = np.inf
    best_state = state.copy()
    trace: list[float] = []
    for _ in range(config.epochs):
        nodes = _as_nodes(state)
        _, _, logits = forward(
            ctx, nodes, mol_const, config, training=True, rng=dropout_rng
        )
        loss = weighted_bce_loss(
            logits,
            labels,
            mask,
            mode=config.loss_mode,
            pos_weight=None if has_positives else 1.0,
        )
        value = float(loss.value)
        trace.append(value)
        if value < best_loss:
            # Snapshot before the update: the recorded loss belongs to the
            # parameters the forward pass actually used.
            best_loss = value
            best_state = state.copy()
        nm.backward(loss)
        grads = {name: node.grad for name, node in nodes.items() if node.grad is not None}
        nm.adam_step(state.params, grads, adam)
    return TrainResult(state=best_state, final_state=state, loss_trace=trace)


def inference_scores(
    graph: HeteroGraph, state: ModelState, mol_vectors: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(E_R, E_D, association score matrix) in inference mode."""
    ctx = GraphContext(graph)
    nodes = {name: nm.constant(value) for name, value in state.params.items()}
    e_r, e_d, logits = forward(ctx, nodes, nm.constant(mol_vectors), state.config)
    return e_r.value, e_d.value, nm.sigmoid(logits).value


def embed_drug_vectors(state: ModelState, mol_vectors: np.ndarray) -> np.ndarray:
    """Run only the drug MLP in inference mode."""
    nodes = {name: nm.constant(value) for name, value in state.params.items()}
    out = drug_embeddings(
        nm.constant(np.asarray(mol_vectors, dtype=np.float64)), nodes, state.config
    )
    return out.value
