"""Structure-aware drug repositioning toolkit.

Subpackages: :mod:`molrepo.chem` (SMILES + fingerprints),
:mod:`molrepo.embed` (substructure embeddings), :mod:`molrepo.numerics`
(autodiff + Adam), :mod:`molrepo.hetnet` (dataset + graph),
:mod:`molrepo.model` (encoder + training), :mod:`molrepo.evaluate`
(metrics + CV), :mod:`molrepo.coldstart` (recommender),
:mod:`molrepo.analysis` (t-SNE, k-means, overlap scores),
:mod:`molrepo.cli` / :mod:`molrepo.service` (entry points).
"""

__version__ = "0.1.0"
