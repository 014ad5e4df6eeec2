"""Shared fixtures: the synthetic dataset and a small trained database."""

import numpy as np
import pytest

from molrepo import coldstart, evaluate, hetnet, model, synth
from molrepo.embed import SkipGramConfig


@pytest.fixture(scope="session")
def synth_spec(tmp_path_factory):
    outdir = tmp_path_factory.mktemp("synthdata")
    return synth.make_synthetic(outdir, seed=7)


@pytest.fixture(scope="session")
def dataset(synth_spec):
    return hetnet.load_dataset(synth_spec.manifest_path)


@pytest.fixture(scope="session")
def quick_config():
    """Small-epoch pipeline config for fast smoke training."""
    return evaluate.PipelineConfig(
        model=model.ModelConfig(epochs=40, seed=0),
        skipgram=SkipGramConfig(epochs=5, seed=0),
    )


@pytest.fixture(scope="session")
def trained_artifacts(dataset, quick_config):
    """One quick full-data training run: graph, table, vectors, result."""
    fingerprints = hetnet.drug_fingerprints(dataset)
    table = evaluate.fit_embedding_table(dataset, quick_config)
    mol_vectors = evaluate.drug_matrix(dataset, table)
    graph = hetnet.build_graph(dataset, fingerprints)
    positives = dataset.positives()
    negatives = hetnet._all_unknown_pairs(positives, dataset.n_drugs, dataset.n_diseases)
    result = model.train(graph, positives, negatives, quick_config.model, mol_vectors)
    return graph, table, mol_vectors, result


@pytest.fixture(scope="session")
def trained_db(dataset, trained_artifacts):
    graph, table, mol_vectors, result = trained_artifacts
    e_r, _, scores = model.inference_scores(graph, result.state, mol_vectors)
    return coldstart.build_database(
        dataset.drug_ids,
        e_r,
        scores,
        dataset.disease_ids,
        [dataset.disease_name(d) for d in dataset.disease_ids],
        result.state,
        table,
        provenance=dataset.content_hash,
    )
