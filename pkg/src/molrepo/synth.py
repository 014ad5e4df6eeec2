"""Synthetic desk-scale dataset with planted structure.

Drugs come in structural families with distinct scaffolds (alcohols,
benzenes, carboxylic acids/esters, amines); diseases come in blocks of the
same count.  The ground-truth association matrix is block diagonal (family
f treats block f) with a configurable fraction of off-block noise pairs
added on top.  Proteins, genes and pathways bridge each family to its block
through a drug-protein-gene-pathway-disease chain, and the disease
similarity matrix mirrors the block structure.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

_FAMILY_SMILES = [
    # linear alcohols / ethers
    ["CCO", "CCCO", "CCCCO", "CCCCCO", "CCOC", "CCCOC", "CCOCC", "CCCCOC",
     "CCOCCO", "CCCOCC", "CCCCCCO", "CCCCOCC"],
    # benzene derivatives
    ["c1ccccc1", "Cc1ccccc1", "CCc1ccccc1", "Clc1ccccc1", "Brc1ccccc1",
     "Oc1ccccc1", "Nc1ccccc1", "Cc1ccccc1C", "Cc1ccc(C)cc1", "CCc1ccccc1C",
     "Cc1ccc(Cl)cc1", "Oc1ccccc1C"],
    # carboxylic acids and esters
    ["CC(=O)O", "CCC(=O)O", "CCCC(=O)O", "CC(=O)OC", "CCC(=O)OC",
     "CC(=O)OCC", "CCCC(=O)OC", "CCC(=O)OCC", "CC(C)C(=O)O", "CCCCC(=O)O",
     "CC(C)C(=O)OC", "CCCCC(=O)OC"],
    # amines and nitriles
    ["CCN", "CCCN", "CCCCN", "CC(C)N", "CCNCC", "CCCNC", "CC#N", "CCC#N",
     "CCNC", "CCCCNC", "CC(C)CN", "CCCC#N"],
]


@dataclass
class SynthSpec:
    """What was generated: ids, family/block structure, file locations."""

    manifest_path: Path
    drug_ids: list[str]
    disease_ids: list[str]
    drug_family: dict[str, int]
    disease_block: dict[str, int]
    positives: list[tuple[str, str]]
    noise_pairs: list[tuple[str, str]]
    seed: int


def make_synthetic(
    outdir,
    drugs_per_family: int = 10,
    diseases_per_block: int = 5,
    n_families: int = 4,
    n_proteins: int = 10,
    n_genes: int = 10,
    n_pathways: int = 10,
    noise: float = 0.1,
    seed: int = 0,
) -> SynthSpec:
    """Write a synthetic dataset (TSV files + JSON manifest) to ``outdir``."""
    if n_families > len(_FAMILY_SMILES):
        raise ValueError(f"at most {len(_FAMILY_SMILES)} families are available")
    if drugs_per_family > len(_FAMILY_SMILES[0]):
        raise ValueError(f"at most {len(_FAMILY_SMILES[0])} drugs per family")
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    drug_ids: list[str] = []
    drug_family: dict[str, int] = {}
    drug_smiles: dict[str, str] = {}
    for f in range(n_families):
        for j in range(drugs_per_family):
            drug_id = f"DRG{f}{j:02d}"
            drug_ids.append(drug_id)
            drug_family[drug_id] = f
            drug_smiles[drug_id] = _FAMILY_SMILES[f][j]

    n_diseases = n_families * diseases_per_block
    disease_ids = [f"DIS{d:03d}" for d in range(n_diseases)]
    disease_block = {d: i // diseases_per_block for i, d in enumerate(disease_ids)}
    disease_names = {
        d: f"Block {disease_block[d]} disorder {i % diseases_per_block}"
        for i, d in enumerate(disease_ids)
    }

    positives = [
        (r, d)
        for r in drug_ids
        for d in disease_ids
        if drug_family[r] == disease_block[d]
    ]
    # Off-block noise: extra associations that contradict the block layout.
    off_block = [
        (r, d)
        for r in drug_ids
        for d in disease_ids
        if drug_family[r] != disease_block[d]
    ]
    n_noise = int(np.floor(noise * len(positives) + 0.5))
    noise_idx = rng.choice(len(off_block), size=n_noise, replace=False)
    noise_pairs = [off_block[i] for i in sorted(noise_idx)]

    protein_ids = [f"PRT{i:02d}" for i in range(n_proteins)]
    gene_ids = [f"GEN{i:02d}" for i in range(n_genes)]
    pathway_ids = [f"PWY{i:02d}" for i in range(n_pathways)]

    rel_rp = [
        (r, p)
        for r in drug_ids
        for i, p in enumerate(protein_ids)
        if i % n_families == drug_family[r]
    ]
    rel_pg = [(protein_ids[i], gene_ids[i % n_genes]) for i in range(n_proteins)]
    rel_gw = [(gene_ids[i], pathway_ids[i % n_pathways]) for i in range(n_genes)]
    rel_wd = [
        (w, d)
        for i, w in enumerate(pathway_ids)
        for d in disease_ids
        if disease_block[d] == i % n_families
    ]

    sim = np.full((n_diseases, n_diseases), 0.05)
    for a in range(n_diseases):
        for b in range(n_diseases):
            if disease_block[disease_ids[a]] == disease_block[disease_ids[b]]:
                sim[a, b] = 0.85
    np.fill_diagonal(sim, 1.0)

    _tsv(outdir / "drugs.tsv", [f"{r}\t{drug_smiles[r]}" for r in drug_ids])
    _tsv(outdir / "proteins.tsv", protein_ids)
    _tsv(outdir / "genes.tsv", gene_ids)
    _tsv(outdir / "pathways.tsv", pathway_ids)
    _tsv(outdir / "diseases.tsv", [f"{d}\t{disease_names[d]}" for d in disease_ids])
    _tsv(outdir / "rel_rp.tsv", [f"{a}\t{b}" for a, b in rel_rp])
    _tsv(outdir / "rel_pg.tsv", [f"{a}\t{b}" for a, b in rel_pg])
    _tsv(outdir / "rel_gw.tsv", [f"{a}\t{b}" for a, b in rel_gw])
    _tsv(outdir / "rel_wd.tsv", [f"{a}\t{b}" for a, b in rel_wd])
    _tsv(
        outdir / "rel_rd.tsv",
        [f"{a}\t{b}" for a, b in positives] + [f"{a}\t{b}" for a, b in noise_pairs],
    )
    _tsv(
        outdir / "disease_similarity.tsv",
        ["\t".join(f"{v:.4f}" for v in row) for row in sim],
    )

    manifest = {
        "name": f"synthetic-{n_families}x{drugs_per_family}",
        "entities": {
            "drugs": "drugs.tsv",
            "proteins": "proteins.tsv",
            "genes": "genes.tsv",
            "pathways": "pathways.tsv",
            "diseases": "diseases.tsv",
        },
        "relations": {
            "rp": "rel_rp.tsv",
            "pg": "rel_pg.tsv",
            "gw": "rel_gw.tsv",
            "wd": "rel_wd.tsv",
            "rd": "rel_rd.tsv",
        },
        "disease_similarity": "disease_similarity.tsv",
    }
    manifest_path = outdir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")

    return SynthSpec(
        manifest_path=manifest_path,
        drug_ids=drug_ids,
        disease_ids=disease_ids,
        drug_family=drug_family,
        disease_block=disease_block,
        positives=positives,
        noise_pairs=noise_pairs,
        seed=seed,
    )


def _tsv(path: Path, lines) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
