"""Multimodal dataset ingestion and heterogeneous graph construction.

A dataset is described by a JSON manifest naming entity lists (drugs with
SMILES, proteins, genes, pathways, diseases), typed relation files, and an
optional precomputed disease-disease similarity matrix.  Entities get stable
integer indices in sorted-ID order, so reloading identical files yields
identical indexing.

The graph places all node classes in one global index space (drugs first),
gives every node a feature vector of width N_diseases + N_drugs (drug rows
carry their fingerprint-similarity row, disease rows their similarity-matrix
row, everything else zero), and keeps one typed edge list per relation
family.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .chem import fingerprint, parse_smiles, tanimoto

log = logging.getLogger(__name__)

NODE_CLASSES = ("drug", "protein", "gene", "pathway", "disease")

# relation family -> (source class, destination class)
RELATION_FAMILIES = {
    "rr": ("drug", "drug"),
    "rp": ("drug", "protein"),
    "pg": ("protein", "gene"),
    "gw": ("gene", "pathway"),
    "wd": ("pathway", "disease"),
    "dd": ("disease", "disease"),
    "rd": ("drug", "disease"),
    "dp": ("disease", "protein"),
}

_CLASS_TO_MANIFEST_KEY = {
    "drug": "drugs",
    "protein": "proteins",
    "gene": "genes",
    "pathway": "pathways",
    "disease": "diseases",
}


class DatasetError(ValueError):
    pass


class UnknownEntity(DatasetError):
    def __init__(self, file: str, line: int, entity: str):
        super().__init__(f"{file}:{line}: unknown entity {entity!r}")
        self.file, self.line, self.entity = file, line, entity


class MalformedLine(DatasetError):
    def __init__(self, file: str, line: int, reason: str):
        super().__init__(f"{file}:{line}: {reason}")
        self.file, self.line = file, line


class MissingSimilarityFile(DatasetError):
    pass


class TooFewPositives(ValueError):
    pass


@dataclass
class DatasetManifest:
    """Resolved paths for one dataset."""

    name: str
    entity_files: dict[str, Path]  # node class -> path
    relation_files: dict[str, Path]  # family -> path
    disease_similarity: Path | None
    path: Path

    @classmethod
    def load(cls, manifest_path) -> "DatasetManifest":
        manifest_path = Path(manifest_path)
        try:
            raw = json.loads(manifest_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise DatasetError(f"{manifest_path}: not valid JSON: {exc}") from exc
        base = manifest_path.parent

        entity_files = {}
        for cls_name, key in _CLASS_TO_MANIFEST_KEY.items():
            if key in raw.get("entities", {}):
                entity_files[cls_name] = base / raw["entities"][key]
        if "drug" not in entity_files or "disease" not in entity_files:
            raise DatasetError(f"{manifest_path}: manifest must declare drugs and diseases")

        relation_files = {}
        for family, rel_path in raw.get("relations", {}).items():
            if family not in RELATION_FAMILIES:
                raise DatasetError(
                    f"{manifest_path}: unknown relation family {family!r} "
                    f"(known: {sorted(RELATION_FAMILIES)})"
                )
            relation_files[family] = base / rel_path

        sim = raw.get("disease_similarity")
        return cls(
            name=raw.get("name", manifest_path.stem),
            entity_files=entity_files,
            relation_files=relation_files,
            disease_similarity=base / sim if sim else None,
            path=manifest_path,
        )

    def content_hash(self) -> str:
        """sha256 over the manifest and every referenced file."""
        digest = hashlib.sha256()
        files = [self.path]
        files += [self.entity_files[c] for c in sorted(self.entity_files)]
        files += [self.relation_files[f] for f in sorted(self.relation_files)]
        if self.disease_similarity is not None:
            files.append(self.disease_similarity)
        for f in files:
            digest.update(f.name.encode("utf-8"))
            digest.update(f.read_bytes())
        return digest.hexdigest()


def _data_lines(path: Path):
    """Yield (line_number, stripped line) skipping blanks and # comments."""
    text = path.read_text(encoding="utf-8")
    for lineno, line in enumerate(text.split("\n"), start=1):
        stripped = line.rstrip("\r")
        if not stripped or stripped.lstrip().startswith("#"):
            continue
        yield lineno, stripped


def _load_entity_file(path: Path) -> tuple[list[str], dict[str, str]]:
    """Entity TSV: ``id[<TAB>name]``; returns sorted unique ids + names."""
    ids: set[str] = set()
    names: dict[str, str] = {}
    for lineno, line in _data_lines(path):
        parts = line.split("\t")
        if not parts[0]:
            raise MalformedLine(str(path), lineno, "empty entity id")
        ids.add(parts[0])
        if len(parts) > 1 and parts[1]:
            names[parts[0]] = parts[1]
    return sorted(ids), names


def _load_drug_file(path: Path) -> tuple[list[str], dict[str, str]]:
    """Drug TSV: ``id<TAB>smiles``."""
    smiles: dict[str, str] = {}
    for lineno, line in _data_lines(path):
        parts = line.split("\t")
        if len(parts) < 2 or not parts[0] or not parts[1]:
            raise MalformedLine(str(path), lineno, "expected `drug_id<TAB>smiles`")
        smiles[parts[0]] = parts[1]
    return sorted(smiles), smiles


@dataclass
class Dataset:
    """Entities with stable indices plus relations as index pairs."""

    name: str
    entity_ids: dict[str, list[str]]  # node class -> sorted ids
    drug_smiles: dict[str, str]
    entity_names: dict[str, dict[str, str]]  # node class -> id -> display name
    relations: dict[str, np.ndarray]  # family -> (m, 2) class-local index pairs
    relation_weights: dict[str, np.ndarray]
    disease_similarity: np.ndarray | None
    content_hash: str = ""
    index: dict[str, dict[str, int]] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.index:
            self.index = {
                cls_name: {eid: i for i, eid in enumerate(ids)}
                for cls_name, ids in self.entity_ids.items()
            }

    @property
    def drug_ids(self) -> list[str]:
        return self.entity_ids["drug"]

    @property
    def disease_ids(self) -> list[str]:
        return self.entity_ids["disease"]

    @property
    def n_drugs(self) -> int:
        return len(self.entity_ids["drug"])

    @property
    def n_diseases(self) -> int:
        return len(self.entity_ids["disease"])

    def disease_name(self, disease_id: str) -> str:
        return self.entity_names.get("disease", {}).get(disease_id, disease_id)

    def positives(self) -> np.ndarray:
        """Known drug-disease pairs as (drug index, disease index) rows."""
        return self.relations.get("rd", np.zeros((0, 2), dtype=np.intp)).copy()

    def summary(self) -> dict:
        counts = {cls_name: len(ids) for cls_name, ids in self.entity_ids.items()}
        rels = {family: int(pairs.shape[0]) for family, pairs in self.relations.items()}
        return {"name": self.name, "entities": counts, "relations": rels}


def load_dataset(manifest: DatasetManifest | str | Path) -> Dataset:
    """Load and index a dataset; relations become class-local index pairs.

    Duplicate relation lines are dropped with a warning; a relation line
    naming an undeclared entity raises :class:`UnknownEntity`.
    """
    if not isinstance(manifest, DatasetManifest):
        manifest = DatasetManifest.load(manifest)

    entity_ids: dict[str, list[str]] = {c: [] for c in NODE_CLASSES}
    entity_names: dict[str, dict[str, str]] = {}
    drug_smiles: dict[str, str] = {}
    for cls_name in NODE_CLASSES:
        path = manifest.entity_files.get(cls_name)
        if path is None:
            continue
        if not path.exists():
            raise DatasetError(f"entity file not found: {path}")
        if cls_name == "drug":
            entity_ids[cls_name], drug_smiles = _load_drug_file(path)
        else:
            entity_ids[cls_name], names = _load_entity_file(path)
            if names:
                entity_names[cls_name] = names

    index = {
        cls_name: {eid: i for i, eid in enumerate(ids)}
        for cls_name, ids in entity_ids.items()
    }

    relations: dict[str, np.ndarray] = {}
    relation_weights: dict[str, np.ndarray] = {}
    for family, path in manifest.relation_files.items():
        src_cls, dst_cls = RELATION_FAMILIES[family]
        if not path.exists():
            raise DatasetError(f"relation file not found: {path}")
        pairs: list[tuple[int, int]] = []
        weights: list[float] = []
        seen: set[tuple[int, int]] = set()
        same_class = src_cls == dst_cls
        for lineno, line in _data_lines(path):
            parts = line.split("\t")
            if len(parts) < 2:
                raise MalformedLine(str(path), lineno, "expected `src_id<TAB>dst_id[<TAB>weight]`")
            src, dst = parts[0], parts[1]
            if src not in index[src_cls]:
                raise UnknownEntity(str(path), lineno, src)
            if dst not in index[dst_cls]:
                raise UnknownEntity(str(path), lineno, dst)
            si, di = index[src_cls][src], index[dst_cls][dst]
            key = (min(si, di), max(si, di)) if same_class else (si, di)
            if key in seen:
                log.warning("%s:%d: duplicate relation %s-%s dropped", path, lineno, src, dst)
                continue
            seen.add(key)
            try:
                weight = float(parts[2]) if len(parts) > 2 and parts[2] else 1.0
            except ValueError:
                raise MalformedLine(str(path), lineno, f"bad weight {parts[2]!r}")
            pairs.append((si, di))
            weights.append(weight)
        relations[family] = np.array(pairs, dtype=np.intp).reshape(-1, 2)
        relation_weights[family] = np.array(weights, dtype=np.float64)

    disease_similarity = None
    if manifest.disease_similarity is not None:
        if not manifest.disease_similarity.exists():
            raise MissingSimilarityFile(
                f"disease similarity file not found: {manifest.disease_similarity}"
            )
        disease_similarity = _load_similarity(
            manifest.disease_similarity, entity_ids["disease"], index["disease"]
        )

    return Dataset(
        name=manifest.name,
        entity_ids=entity_ids,
        drug_smiles=drug_smiles,
        entity_names=entity_names,
        relations=relations,
        relation_weights=relation_weights,
        disease_similarity=disease_similarity,
        content_hash=manifest.content_hash(),
    )


def _load_similarity(path: Path, ids: list[str], index: dict[str, int]) -> np.ndarray:
    """Similarity as TSV triples ``id_a<TAB>id_b<TAB>value`` or a dense matrix.

    A dense file has one row of whitespace-separated floats per entity, in
    sorted-ID order.  The triple format is detected by its non-numeric first
    field.
    """
    n = len(ids)
    lines = list(_data_lines(path))
    if not lines:
        raise MissingSimilarityFile(f"{path}: empty similarity file")
    first_field = lines[0][1].split("\t")[0].split()[0]
    dense = True
    try:
        float(first_field)
    except ValueError:
        dense = False

    sim = np.eye(n, dtype=np.float64)
    if dense:
        if len(lines) != n:
            raise MalformedLine(str(path), lines[-1][0], f"expected {n} rows, found {len(lines)}")
        for row, (lineno, line) in enumerate(lines):
            values = line.replace("\t", " ").split()
            if len(values) != n:
                raise MalformedLine(str(path), lineno, f"expected {n} columns")
            sim[row] = [float(v) for v in values]
    else:
        for lineno, line in lines:
            parts = line.split("\t")
            if len(parts) < 3:
                raise MalformedLine(str(path), lineno, "expected `id_a<TAB>id_b<TAB>value`")
            if parts[0] not in index:
                raise UnknownEntity(str(path), lineno, parts[0])
            if parts[1] not in index:
                raise UnknownEntity(str(path), lineno, parts[1])
            a, b = index[parts[0]], index[parts[1]]
            value = float(parts[2])
            sim[a, b] = value
            sim[b, a] = value
    return sim


# ---------------------------------------------------------------------------
# graph


@dataclass
class RelationEdges:
    src_class: str
    dst_class: str
    pairs: np.ndarray  # (m, 2) class-local index pairs
    weights: np.ndarray


@dataclass
class HeteroGraph:
    class_counts: dict[str, int]
    class_offsets: dict[str, int]
    relations: dict[str, RelationEdges]
    features: np.ndarray
    drug_ids: list[str]
    disease_ids: list[str]

    def __post_init__(self):
        width = self.features.shape[1]
        expected = self.n_diseases + self.n_drugs
        if width != expected:
            raise ValueError(f"feature width {width} != N_diseases + N_drugs = {expected}")
        for family, rel in self.relations.items():
            src_cls, dst_cls = RELATION_FAMILIES[family]
            if (rel.src_class, rel.dst_class) != (src_cls, dst_cls):
                raise ValueError(f"relation {family}: endpoint classes do not match")
            if rel.pairs.size:
                if rel.pairs[:, 0].max() >= self.class_counts[src_cls]:
                    raise ValueError(f"relation {family}: source index out of range")
                if rel.pairs[:, 1].max() >= self.class_counts[dst_cls]:
                    raise ValueError(f"relation {family}: destination index out of range")

    @property
    def n_drugs(self) -> int:
        return self.class_counts["drug"]

    @property
    def n_diseases(self) -> int:
        return self.class_counts["disease"]

    @property
    def n_nodes(self) -> int:
        return sum(self.class_counts.values())

    def global_pairs(self, family: str) -> np.ndarray:
        """Relation pairs shifted into the global node index space."""
        rel = self.relations[family]
        out = rel.pairs.copy()
        out[:, 0] += self.class_offsets[rel.src_class]
        out[:, 1] += self.class_offsets[rel.dst_class]
        return out

    def replace_relation(self, family: str, pairs: np.ndarray, weights: np.ndarray) -> "HeteroGraph":
        """Non-destructive update of one relation's edge list."""
        relations = dict(self.relations)
        src_cls, dst_cls = RELATION_FAMILIES[family]
        relations[family] = RelationEdges(src_cls, dst_cls, pairs, weights)
        return replace(self, relations=relations)

    def equals(self, other: "HeteroGraph") -> bool:
        if self.class_counts != other.class_counts:
            return False
        if sorted(self.relations) != sorted(other.relations):
            return False
        for family, rel in self.relations.items():
            o = other.relations[family]
            if rel.pairs.shape != o.pairs.shape:
                return False
            if not (np.array_equal(rel.pairs, o.pairs) and np.array_equal(rel.weights, o.weights)):
                return False
        return np.array_equal(self.features, other.features)


def drug_fingerprints(dataset: Dataset) -> dict[str, frozenset[int]]:
    """Parse every drug's SMILES and compute its substructure identifier set."""
    return {
        drug_id: fingerprint(parse_smiles(dataset.drug_smiles[drug_id]))
        for drug_id in dataset.drug_ids
    }


def drug_similarity_matrix(dataset: Dataset, fingerprints: dict[str, frozenset[int]]) -> np.ndarray:
    n = dataset.n_drugs
    prints = [fingerprints[d] for d in dataset.drug_ids]
    sim = np.eye(n, dtype=np.float64)
    for i in range(n):
        for j in range(i + 1, n):
            s = tanimoto(prints[i], prints[j])
            sim[i, j] = s
            sim[j, i] = s
    return sim


def build_graph(
    dataset: Dataset,
    fingerprints: dict[str, frozenset[int]],
    similarity_threshold: float = 0.0,
) -> HeteroGraph:
    """Assemble the heterogeneous graph with initialized node features.

    Edges are the loaded relation lists plus similarity-derived drug-drug
    and disease-disease edges whose similarity exceeds the threshold
    (zero-similarity pairs are skipped: they carry no message weight).
    File-provided edges win over derived ones on overlap.
    """
    missing = [d for d in dataset.drug_ids if d not in fingerprints]
    if missing:
        raise DatasetError(f"missing fingerprints for drugs: {missing[:5]}...")

    class_counts = {c: len(dataset.entity_ids[c]) for c in NODE_CLASSES}
    offsets = {}
    running = 0
    for c in NODE_CLASSES:
        offsets[c] = running
        running += class_counts[c]

    n_drugs, n_diseases = class_counts["drug"], class_counts["disease"]
    drug_sim = drug_similarity_matrix(dataset, fingerprints)
    disease_sim = dataset.disease_similarity
    if disease_sim is None:
        # No similarity input declared: diseases fall back to self-similarity
        # only (identity rows), which keeps the feature contract intact for
        # datasets without disease-disease information.
        disease_sim = np.eye(n_diseases, dtype=np.float64)

    features = np.zeros((running, n_diseases + n_drugs), dtype=np.float64)
    features[offsets["drug"] : offsets["drug"] + n_drugs, n_diseases:] = drug_sim
    features[offsets["disease"] : offsets["disease"] + n_diseases, :n_diseases] = disease_sim

    relations: dict[str, RelationEdges] = {}
    for family, pairs in dataset.relations.items():
        src_cls, dst_cls = RELATION_FAMILIES[family]
        relations[family] = RelationEdges(
            src_cls, dst_cls, pairs.copy(), dataset.relation_weights[family].copy()
        )

    for family, sim in (("rr", drug_sim), ("dd", disease_sim)):
        existing = relations.get(family)
        seen: set[tuple[int, int]] = set()
        if existing is not None and existing.pairs.size:
            seen = {(min(a, b), max(a, b)) for a, b in existing.pairs}
        iu, ju = np.triu_indices(sim.shape[0], k=1)
        values = sim[iu, ju]
        keep = values > max(similarity_threshold, 0.0)
        pairs = [
            (int(a), int(b))
            for a, b, v in zip(iu[keep], ju[keep], values[keep])
            if (int(a), int(b)) not in seen
        ]
        weights = [
            float(v)
            for a, b, v in zip(iu[keep], ju[keep], values[keep])
            if (int(a), int(b)) not in seen
        ]
        if existing is not None and existing.pairs.size:
            all_pairs = np.vstack([existing.pairs, np.array(pairs, dtype=np.intp).reshape(-1, 2)])
            all_weights = np.concatenate([existing.weights, np.array(weights)])
        else:
            all_pairs = np.array(pairs, dtype=np.intp).reshape(-1, 2)
            all_weights = np.array(weights, dtype=np.float64)
        cls_name = RELATION_FAMILIES[family][0]
        relations[family] = RelationEdges(cls_name, cls_name, all_pairs, all_weights)

    return HeteroGraph(
        class_counts=class_counts,
        class_offsets=offsets,
        relations=relations,
        features=features,
        drug_ids=list(dataset.drug_ids),
        disease_ids=list(dataset.disease_ids),
    )


# ---------------------------------------------------------------------------
# folds, masking, ablation, cold-start split


@dataclass
class Fold:
    test_pos: np.ndarray
    test_neg: np.ndarray
    train_pos: np.ndarray
    train_neg: np.ndarray
    index: int = 0  # position in the plan; stable under evaluation reordering


@dataclass
class FoldPlan:
    k: int
    seed: int
    negative_policy: str
    folds: list[Fold]


def _all_unknown_pairs(positives: np.ndarray, n_drugs: int, n_diseases: int) -> np.ndarray:
    known = np.zeros((n_drugs, n_diseases), dtype=bool)
    if positives.size:
        known[positives[:, 0], positives[:, 1]] = True
    rows, cols = np.where(~known)
    return np.stack([rows, cols], axis=1).astype(np.intp)


def make_folds(
    positives: np.ndarray,
    n_drugs: int,
    n_diseases: int,
    k: int = 10,
    seed: int = 0,
    negative_policy: str = "all_unknown",
    negative_ratio: float = 1.0,
) -> FoldPlan:
    """Shuffle-split positives (and negatives per policy) into k folds.

    ``all_unknown`` splits every unknown pair across the folds;
    ``sampled`` draws ``negative_ratio`` x positives unknown pairs first.
    """
    positives = np.asarray(positives, dtype=np.intp).reshape(-1, 2)
    if positives.shape[0] < k:
        raise TooFewPositives(f"{positives.shape[0]} positives cannot fill {k} folds")
    rng = np.random.default_rng(seed)

    negatives = _all_unknown_pairs(positives, n_drugs, n_diseases)
    if negative_policy == "sampled":
        want = min(int(round(negative_ratio * positives.shape[0])), negatives.shape[0])
        pick = rng.choice(negatives.shape[0], size=want, replace=False)
        negatives = negatives[np.sort(pick)]
    elif negative_policy != "all_unknown":
        raise ValueError(f"unknown negative policy {negative_policy!r}")

    pos_order = rng.permutation(positives.shape[0])
    neg_order = rng.permutation(negatives.shape[0])
    pos_parts = np.array_split(pos_order, k)
    neg_parts = np.array_split(neg_order, k)

    folds = []
    for i in range(k):
        test_pos = positives[pos_parts[i]]
        test_neg = negatives[neg_parts[i]]
        if k > 1:
            train_pos = positives[np.concatenate([pos_parts[j] for j in range(k) if j != i])]
            train_neg = negatives[np.concatenate([neg_parts[j] for j in range(k) if j != i])]
        else:  # degenerate single fold: train = test = everything
            train_pos, train_neg = test_pos, test_neg
        folds.append(Fold(test_pos, test_neg, train_pos, train_neg, index=i))
    return FoldPlan(k=k, seed=seed, negative_policy=negative_policy, folds=folds)


def _pair_set(pairs: np.ndarray) -> set[tuple[int, int]]:
    return {(int(a), int(b)) for a, b in np.asarray(pairs).reshape(-1, 2)}


def mask_test_edges(graph: HeteroGraph, fold: Fold) -> HeteroGraph:
    """Drop the fold's test positives from the graph's drug-disease edges.

    Non-destructive: the input graph is never modified.
    """
    rel = graph.relations.get("rd")
    if rel is None:
        return replace(graph, relations=dict(graph.relations))
    if rel.pairs.size == 0 or fold.test_pos.size == 0:
        return graph.replace_relation("rd", rel.pairs.copy(), rel.weights.copy())
    masked = _pair_set(fold.test_pos)
    keep = np.array(
        [(int(a), int(b)) not in masked for a, b in rel.pairs], dtype=bool
    )
    return graph.replace_relation("rd", rel.pairs[keep].copy(), rel.weights[keep].copy())


def ablate_edges(
    graph: HeteroGraph, epsilon: float, seed: int = 0
) -> tuple[HeteroGraph, np.ndarray]:
    """Remove round(epsilon * |rd|) drug-disease edges uniformly at random.

    Returns the ablated graph and the removed pairs (which callers must also
    drop from training supervision).  Rounding is floor(x + 0.5).
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must be in [0, 1], got {epsilon}")
    rel = graph.relations.get("rd")
    if rel is None or rel.pairs.size == 0:
        return graph, np.zeros((0, 2), dtype=np.intp)
    m = rel.pairs.shape[0]
    count = int(np.floor(epsilon * m + 0.5))
    rng = np.random.default_rng(seed)
    removed_idx = np.sort(rng.choice(m, size=count, replace=False))
    keep = np.ones(m, dtype=bool)
    keep[removed_idx] = False
    removed = rel.pairs[removed_idx].copy()
    return (
        graph.replace_relation("rd", rel.pairs[keep].copy(), rel.weights[keep].copy()),
        removed,
    )


def write_dataset(dataset: Dataset, outdir) -> Path:
    """Write a dataset back to TSV files plus a JSON manifest.

    Inverse of :func:`load_dataset` up to file naming; returns the manifest
    path.  Used to persist cold-start training splits.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    def dump(name: str, lines) -> None:
        with open(outdir / name, "w", encoding="utf-8", newline="\n") as fh:
            content = "\n".join(lines)
            fh.write(content + "\n" if content else "")

    entities = {}
    for cls_name in NODE_CLASSES:
        ids = dataset.entity_ids.get(cls_name, [])
        if not ids:
            continue
        key = _CLASS_TO_MANIFEST_KEY[cls_name]
        filename = f"{key}.tsv"
        if cls_name == "drug":
            dump(filename, [f"{d}\t{dataset.drug_smiles[d]}" for d in ids])
        else:
            names = dataset.entity_names.get(cls_name, {})
            dump(
                filename,
                [f"{e}\t{names[e]}" if e in names else e for e in ids],
            )
        entities[key] = filename

    relations = {}
    for family, pairs in dataset.relations.items():
        src_cls, dst_cls = RELATION_FAMILIES[family]
        src_ids = dataset.entity_ids[src_cls]
        dst_ids = dataset.entity_ids[dst_cls]
        lines = []
        for (a, b), w in zip(pairs, dataset.relation_weights[family]):
            if w == 1.0:
                lines.append(f"{src_ids[a]}\t{dst_ids[b]}")
            else:
                lines.append(f"{src_ids[a]}\t{dst_ids[b]}\t{w:.9g}")
        filename = f"rel_{family}.tsv"
        dump(filename, lines)
        relations[family] = filename

    manifest = {"name": dataset.name, "entities": entities, "relations": relations}
    if dataset.disease_similarity is not None:
        dump(
            "disease_similarity.tsv",
            ["\t".join(f"{v:.9g}" for v in row) for row in dataset.disease_similarity],
        )
        manifest["disease_similarity"] = "disease_similarity.tsv"
    manifest_path = outdir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return manifest_path


def coldstart_split(
    dataset: Dataset, ratio: float = 0.9, seed: int = 0
) -> tuple[Dataset, dict[str, str], list[tuple[str, str]]]:
    """Partition drugs ratio : (1 - ratio) into a training dataset and
    held-out query drugs.

    The training dataset keeps only relations among its own drugs (drug
    similarity is recomputed over them at graph build time); held-out drugs
    keep nothing but their SMILES.  Returns
    ``(train_dataset, test_smiles, heldout_truth_pairs)`` where the truth
    pairs are (drug_id, disease_id) associations stripped from training.
    """
    rng = np.random.default_rng(seed)
    order = rng.permutation(dataset.n_drugs)
    n_train = int(np.floor(ratio * dataset.n_drugs + 0.5))
    train_ids = sorted(dataset.drug_ids[i] for i in order[:n_train])
    test_ids = sorted(dataset.drug_ids[i] for i in order[n_train:])
    train_set = set(train_ids)

    old_index = {d: i for i, d in enumerate(dataset.drug_ids)}
    new_index = {d: i for i, d in enumerate(train_ids)}
    remap = {old_index[d]: new_index[d] for d in train_ids}

    relations = {}
    weights = {}
    heldout: list[tuple[str, str]] = []
    for family, pairs in dataset.relations.items():
        src_cls, dst_cls = RELATION_FAMILIES[family]
        if "drug" not in (src_cls, dst_cls):
            relations[family] = pairs.copy()
            weights[family] = dataset.relation_weights[family].copy()
            continue
        kept_pairs = []
        kept_weights = []
        for (a, b), w in zip(pairs, dataset.relation_weights[family]):
            a, b = int(a), int(b)
            src_ok = src_cls != "drug" or dataset.drug_ids[a] in train_set
            dst_ok = dst_cls != "drug" or dataset.drug_ids[b] in train_set
            if src_ok and dst_ok:
                na = remap[a] if src_cls == "drug" else a
                nb = remap[b] if dst_cls == "drug" else b
                kept_pairs.append((na, nb))
                kept_weights.append(float(w))
            elif family == "rd":
                heldout.append((dataset.drug_ids[a], dataset.disease_ids[b]))
        relations[family] = np.array(kept_pairs, dtype=np.intp).reshape(-1, 2)
        weights[family] = np.array(kept_weights, dtype=np.float64)

    entity_ids = dict(dataset.entity_ids)
    entity_ids["drug"] = train_ids
    train_dataset = Dataset(
        name=f"{dataset.name}-cs-train",
        entity_ids=entity_ids,
        drug_smiles={d: dataset.drug_smiles[d] for d in train_ids},
        entity_names=dataset.entity_names,
        relations=relations,
        relation_weights=weights,
        disease_similarity=(
            dataset.disease_similarity.copy() if dataset.disease_similarity is not None else None
        ),
        content_hash=dataset.content_hash,
    )
    test_smiles = {d: dataset.drug_smiles[d] for d in test_ids}
    return train_dataset, test_smiles, heldout
