"""Command-line entry points for every pipeline stage.

Exit codes: 0 success, 1 usage error, 2 input/parse error, 3 numeric
failure.  Every command that produces artifacts also writes a run manifest
(command, config snapshot, seeds, dataset hash, artifact list, timestamps)
so outputs stay traceable to their inputs.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import analysis, coldstart, evaluate, hetnet, model, numerics, service, synth
from .chem import SmilesError
from .coldstart import ColdStartQuery, ColdStartResult, EmbeddingDatabase
from .embed import (
    CorruptFile,
    DimensionMismatch,
    EmptyCorpus,
    EmptySentence,
    SkipGramConfig,
    build_corpus,
    load_table,
    save_table,
    train_skipgram,
)
from .evaluate import PipelineConfig, SingleClass
from .hetnet import DatasetError, DatasetManifest, TooFewPositives
from .model import ModelConfig, NoPositives
from .numerics import CorruptCheckpoint, ShapeMismatch

_INPUT_ERRORS = (
    SmilesError,
    DatasetError,
    CorruptFile,
    DimensionMismatch,
    CorruptCheckpoint,
    EmptyCorpus,
    EmptySentence,
    coldstart.UnknownDisease,
    FileNotFoundError,
    IsADirectoryError,
    json.JSONDecodeError,
)
_NUMERIC_ERRORS = (
    ShapeMismatch,
    NoPositives,
    SingleClass,
    TooFewPositives,
    analysis.TooFewPoints,
    analysis.KTooLarge,
    FloatingPointError,
)


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the CLI contract wants 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def write_quick_predict(result: ColdStartResult, path) -> None:
    """CSV with header ``disease_id,disease_name,score``, descending score,
    LF endings, 6-decimal scores; names containing commas are quoted."""

    def fmt(name: str) -> str:
        if any(c in name for c in (",", '"', "\n")):
            return '"' + name.replace('"', '""') + '"'
        return name

    lines = ["disease_id,disease_name,score"]
    for disease_id, name, score in result.ranking:
        lines.append(f"{fmt(disease_id)},{fmt(name)},{score:.6f}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_run_manifest(
    directory: Path,
    command: str,
    config: dict,
    seeds: dict,
    dataset_hash: str | None,
    artifacts: list[str],
    started: float,
) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {
        "command": command,
        "config": config,
        "seeds": seeds,
        "dataset_hash": dataset_hash,
        "artifacts": sorted(artifacts),
        "started": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime(started)),
        "finished": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime()),
    }
    (directory / "run_manifest.json").write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
    )


def _load_pipeline_config(path: str | None, args) -> PipelineConfig:
    """Start from a JSON config file (if any), then apply CLI overrides."""
    model_kwargs: dict = {}
    skipgram_kwargs: dict = {}
    extra: dict = {}
    if path:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        model_kwargs.update(raw.get("model", {}))
        skipgram_kwargs.update(raw.get("skipgram", {}))
        extra = {k: v for k, v in raw.items() if k not in ("model", "skipgram")}
    for key in ("epochs", "learning_rate", "dropout", "seed"):
        value = getattr(args, key.replace("learning_rate", "lr"), None)
        if value is not None:
            model_kwargs[key] = value
    if getattr(args, "sg_epochs", None) is not None:
        skipgram_kwargs["epochs"] = args.sg_epochs
    if getattr(args, "seed", None) is not None:
        skipgram_kwargs.setdefault("seed", args.seed)
    return PipelineConfig(
        model=ModelConfig(**model_kwargs),
        skipgram=SkipGramConfig(**skipgram_kwargs),
        **extra,
    )


def _load_dataset(manifest_path: str) -> tuple[hetnet.Dataset, str]:
    dataset = hetnet.load_dataset(manifest_path)
    return dataset, dataset.content_hash


def _read_prior_ids(path: str) -> list[str]:
    ids = []
    for line in Path(path).read_text(encoding="utf-8").split("\n"):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        ids.append(line.split("\t")[0])
    return ids


# ---------------------------------------------------------------------------
# command handlers


def _cmd_ingest(args) -> int:
    started = time.time()
    dataset, content_hash = _load_dataset(args.manifest)
    summary = dataset.summary()
    print(f"dataset: {summary['name']}")
    print("entities:")
    for cls_name, count in summary["entities"].items():
        print(f"  {cls_name:<10} {count}")
    print("relations:")
    for family, count in summary["relations"].items():
        print(f"  {family:<10} {count}")
    print(f"hash: {content_hash}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "ingest_summary.json").write_text(
            json.dumps({**summary, "hash": content_hash}, indent=2) + "\n",
            encoding="utf-8",
        )
        _write_run_manifest(
            out, "ingest", {}, {}, content_hash, ["ingest_summary.json"], started
        )
    return 0


def _cmd_embed_train(args) -> int:
    started = time.time()
    from .chem import morgan_sentence, parse_smiles

    drugs_path = Path(args.drugs)
    sentences = []
    for line in drugs_path.read_text(encoding="utf-8").split("\n"):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) < 2:
            raise DatasetError(f"{drugs_path}: expected `drug_id<TAB>smiles` lines")
        sentences.append(morgan_sentence(parse_smiles(parts[1])))
    config = SkipGramConfig(
        dim=args.dim,
        window=args.window,
        negatives=args.negatives,
        epochs=args.epochs if args.epochs is not None else 5,
        seed=args.seed or 0,
    )
    corpus, counts = build_corpus(sentences, min_count=args.min_count)
    table = train_skipgram(corpus, counts, config)
    save_table(table, args.out)
    out_dir = Path(args.out).parent
    _write_run_manifest(
        out_dir,
        "embed-train",
        dataclasses.asdict(config),
        {"seed": config.seed},
        None,
        [Path(args.out).name],
        started,
    )
    print(f"trained {len(table.vectors)} token vectors -> {args.out}")
    return 0


def _train_full(dataset, config: PipelineConfig):
    """Train one model on every known association (no fold masking)."""
    fingerprints = hetnet.drug_fingerprints(dataset)
    table = evaluate.fit_embedding_table(dataset, config)
    mol_vectors = evaluate.drug_matrix(dataset, table, config.mean_pool)
    graph = hetnet.build_graph(dataset, fingerprints, config.similarity_threshold)
    positives = dataset.positives()
    negatives = hetnet._all_unknown_pairs(positives, dataset.n_drugs, dataset.n_diseases)
    result = model.train(graph, positives, negatives, config.model, mol_vectors)
    return graph, table, mol_vectors, result


def _cmd_train(args) -> int:
    started = time.time()
    dataset, content_hash = _load_dataset(args.manifest)
    config = _load_pipeline_config(args.config, args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    graph, table, mol_vectors, result = _train_full(dataset, config)
    e_r, _, scores = model.inference_scores(graph, result.state, mol_vectors)

    numerics.save_params(
        out / "checkpoint.npz",
        result.state.params,
        metadata={"config": config.model.to_dict(), "dataset_hash": content_hash},
    )
    save_table(table, out / "table.tsv")
    db = coldstart.build_database(
        dataset.drug_ids,
        e_r,
        scores,
        dataset.disease_ids,
        [dataset.disease_name(d) for d in dataset.disease_ids],
        result.state,
        table,
        provenance=content_hash,
    )
    db.save(out / "db.npz")
    (out / "loss_trace.tsv").write_text(
        "\n".join(f"{i}\t{v:.9g}" for i, v in enumerate(result.loss_trace)) + "\n",
        encoding="utf-8",
    )
    _write_run_manifest(
        out,
        "train",
        config.to_dict(),
        {"seed": config.model.seed},
        content_hash,
        ["checkpoint.npz", "table.tsv", "db.npz", "loss_trace.tsv"],
        started,
    )
    print(f"final loss {result.loss_trace[-1]:.6f}; artifacts in {out}")
    return 0


def _cmd_cv(args) -> int:
    started = time.time()
    dataset, content_hash = _load_dataset(args.manifest)
    config = _load_pipeline_config(args.config, args)
    out = Path(args.out) if args.out else None
    summary = evaluate.run_cv(dataset, config, k=args.k, seed=args.seed or 0, outdir=out)
    print(summary.table())
    if out:
        (out / "cv_summary.json").write_text(
            json.dumps(summary.as_dict(), indent=2) + "\n", encoding="utf-8"
        )
        (out / "cv_summary.tsv").write_text(summary.table() + "\n", encoding="utf-8")
        _write_run_manifest(
            out,
            "cv",
            config.to_dict(),
            {"seed": args.seed or 0},
            content_hash,
            ["cv_summary.json", "cv_summary.tsv"],
            started,
        )
    return 0


def _cmd_ablate(args) -> int:
    started = time.time()
    dataset, content_hash = _load_dataset(args.manifest)
    config = _load_pipeline_config(args.config, args)
    epsilons = [float(e) for e in args.eps.split(",") if e != ""]
    out = Path(args.out) if args.out else None
    sweep = evaluate.run_ablation(
        dataset, config, epsilons, k=args.k, seed=args.seed or 0, outdir=out
    )
    table = evaluate.sweep_table(sweep)
    print(table)
    if out:
        (out / "ablation.tsv").write_text(table + "\n", encoding="utf-8")
        (out / "ablation.json").write_text(
            json.dumps({str(e): s.as_dict() for e, s in sweep.items()}, indent=2) + "\n",
            encoding="utf-8",
        )
        _write_run_manifest(
            out,
            "ablate",
            {**config.to_dict(), "epsilons": epsilons},
            {"seed": args.seed or 0},
            content_hash,
            ["ablation.tsv", "ablation.json"],
            started,
        )
    return 0


def _cmd_coldstart_split(args) -> int:
    started = time.time()
    dataset, content_hash = _load_dataset(args.manifest)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    train_ds, test_smiles, heldout = hetnet.coldstart_split(
        dataset, ratio=args.ratio, seed=args.seed or 0
    )
    train_manifest = hetnet.write_dataset(train_ds, out / "cs_train")
    test_lines = [f"{d}\t{s}" for d, s in sorted(test_smiles.items())]
    (out / "cs_test_drugs.tsv").write_text("\n".join(test_lines) + "\n", encoding="utf-8")
    truth_lines = [f"{a}\t{b}" for a, b in heldout]
    (out / "cs_truth.tsv").write_text("\n".join(truth_lines) + "\n", encoding="utf-8")
    (out / "cs_manifest.json").write_text(
        json.dumps(
            {
                "train_manifest": str(train_manifest.relative_to(out)),
                "test_drugs": "cs_test_drugs.tsv",
                "truth": "cs_truth.tsv",
                "ratio": args.ratio,
                "seed": args.seed or 0,
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    _write_run_manifest(
        out,
        "coldstart-split",
        {"ratio": args.ratio},
        {"seed": args.seed or 0},
        content_hash,
        ["cs_train", "cs_test_drugs.tsv", "cs_truth.tsv", "cs_manifest.json"],
        started,
    )
    print(
        f"split {dataset.n_drugs} drugs -> {train_ds.n_drugs} train / "
        f"{len(test_smiles)} held out; {len(heldout)} truth pairs"
    )
    return 0


def _cmd_coldstart_eval(args) -> int:
    started = time.time()
    db = EmbeddingDatabase.load(args.train_db)
    cs_dir = Path(args.test_manifest).parent
    cs = json.loads(Path(args.test_manifest).read_text(encoding="utf-8"))
    test_smiles = {}
    for line in (cs_dir / cs["test_drugs"]).read_text(encoding="utf-8").split("\n"):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        drug_id, smiles = line.split("\t")[:2]
        test_smiles[drug_id] = smiles
    truth = []
    for line in (cs_dir / cs["truth"]).read_text(encoding="utf-8").split("\n"):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        a, b = line.split("\t")[:2]
        truth.append((a, b))
    report = coldstart.evaluate_coldstart(db, test_smiles, truth, threshold=args.threshold)
    print(json.dumps(report.as_dict(), indent=2))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "coldstart_report.json").write_text(
            json.dumps(report.as_dict(), indent=2) + "\n", encoding="utf-8"
        )
        _write_run_manifest(
            out,
            "coldstart-eval",
            {"threshold": args.threshold},
            {},
            db.provenance,
            ["coldstart_report.json"],
            started,
        )
    return 0


def _cmd_predict(args) -> int:
    started = time.time()
    db = EmbeddingDatabase.load(args.db)
    prior = None
    if args.prior:
        prior = coldstart.prior_from_ids(db, _read_prior_ids(args.prior))
    result = coldstart.recommend(ColdStartQuery(args.smiles, prior), db, top_k=args.top)
    write_quick_predict(result, args.out)
    out_dir = Path(args.out).resolve().parent
    _write_run_manifest(
        out_dir,
        "predict",
        {"smiles": args.smiles, "top": args.top},
        {},
        db.provenance,
        [Path(args.out).name],
        started,
    )
    print(f"wrote {len(result.ranking)} disease scores -> {args.out}")
    return 0


def _cmd_analyze(args) -> int:
    started = time.time()
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if args.what == "tsne":
        db = EmbeddingDatabase.load(args.db)
        projection = analysis.tsne(
            db.drug_embeddings,
            perplexity=args.perplexity,
            iterations=args.iterations,
            seed=args.seed or 0,
        )
        analysis.write_projection(out, db.drug_ids, projection)
        config = {"perplexity": args.perplexity, "iterations": args.iterations}
    elif args.what == "kmeans":
        db = EmbeddingDatabase.load(args.db)
        clustering = analysis.kmeans(db.drug_embeddings, k=args.k, seed=args.seed or 0)
        analysis.write_assignments(out, db.drug_ids, clustering)
        config = {"k": args.k, "inertia": clustering.inertia}
    elif args.what == "pairscore":
        dataset, _ = _load_dataset(args.manifest)
        assignments = {}
        for line in Path(args.assignments).read_text(encoding="utf-8").split("\n"):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            drug_id, cluster = line.split("\t")[:2]
            assignments[drug_id] = int(cluster)
        order = [assignments[d] for d in dataset.drug_ids]
        disease_matrix = np.zeros((dataset.n_drugs, dataset.n_diseases), dtype=np.int64)
        pos = dataset.positives()
        if pos.size:
            disease_matrix[pos[:, 0], pos[:, 1]] = 1
        table = analysis.cluster_similarity_table(order, disease_matrix)
        k = table.shape[0]
        analysis.write_score_table(out, range(k), range(k), table)
        config = {"clusters": k}
    elif args.what == "heatmap":
        db = EmbeddingDatabase.load(args.train_db)
        cs_dir = Path(args.test_manifest).parent
        cs = json.loads(Path(args.test_manifest).read_text(encoding="utf-8"))
        test_ids = []
        test_embeddings = []
        state = db.mlp_state()
        for line in (cs_dir / cs["test_drugs"]).read_text(encoding="utf-8").split("\n"):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            drug_id, smiles = line.split("\t")[:2]
            test_ids.append(drug_id)
            test_embeddings.append(coldstart.embed_query(smiles, db.table, state))
        truth = np.zeros((len(test_ids), len(db.disease_ids)), dtype=np.int64)
        disease_index = {d: i for i, d in enumerate(db.disease_ids)}
        for line in (cs_dir / cs["truth"]).read_text(encoding="utf-8").split("\n"):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            a, b = line.split("\t")[:2]
            if a in test_ids and b in disease_index:
                truth[test_ids.index(a), disease_index[b]] = 1
        table = analysis.coldstart_label_heatmap(
            db.drug_embeddings,
            np.stack(test_embeddings),
            truth,
            db.assoc_scores,
            binarize_threshold=args.binarize,
        )
        analysis.write_score_table(
            out, test_ids, range(table.scores.shape[1]), table.scores
        )
        order_path = out.with_suffix(out.suffix + ".order.tsv")
        ordered_ids = [[db.drug_ids[j] for j in row] for row in table.order]
        with open(order_path, "w", encoding="utf-8", newline="\n") as fh:
            for test_id, row in zip(test_ids, ordered_ids):
                fh.write(test_id + "\t" + "\t".join(row) + "\n")
        config = {"binarize": args.binarize}
    else:  # pragma: no cover - argparse restricts choices
        raise ValueError(args.what)
    _write_run_manifest(
        out.parent,
        f"analyze-{args.what}",
        config,
        {"seed": getattr(args, "seed", 0) or 0},
        None,
        [out.name],
        started,
    )
    print(f"wrote {out}")
    return 0


def _cmd_serve(args) -> int:
    host, _, port = args.addr.partition(":")
    service.serve(
        args.db,
        host=host or "127.0.0.1",
        port=int(port) if port else 8000,
        static_dir=args.static,
    )
    return 0


def _cmd_synth(args) -> int:
    started = time.time()
    spec = synth.make_synthetic(
        args.out,
        drugs_per_family=args.drugs_per_family,
        diseases_per_block=args.diseases_per_block,
        noise=args.noise,
        seed=args.seed or 0,
    )
    _write_run_manifest(
        Path(args.out),
        "synth",
        {
            "drugs_per_family": args.drugs_per_family,
            "diseases_per_block": args.diseases_per_block,
            "noise": args.noise,
        },
        {"seed": args.seed or 0},
        None,
        ["manifest.json"],
        started,
    )
    print(f"synthetic dataset with {len(spec.drug_ids)} drugs -> {spec.manifest_path}")
    return 0


# ---------------------------------------------------------------------------
# parser wiring


def build_parser() -> _Parser:
    parser = _Parser(prog="molrepo", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="validate and index a dataset")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out")
    p.set_defaults(handler=_cmd_ingest)

    p = sub.add_parser("embed-train", help="train substructure embeddings")
    p.add_argument("--drugs", required=True, help="TSV: drug_id<TAB>smiles")
    p.add_argument("--out", required=True, help="output table path")
    p.add_argument("--dim", type=int, default=300)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--epochs", type=int)
    p.add_argument("--min-count", type=int, default=3, dest="min_count")
    p.add_argument("--seed", type=int)
    p.set_defaults(handler=_cmd_embed_train)

    for name, handler in (("train", _cmd_train), ("cv", _cmd_cv), ("ablate", _cmd_ablate)):
        p = sub.add_parser(name)
        p.add_argument("--manifest", required=True)
        p.add_argument("--config", help="pipeline config JSON")
        p.add_argument("--epochs", type=int)
        p.add_argument("--lr", type=float)
        p.add_argument("--dropout", type=float)
        p.add_argument("--sg-epochs", type=int, dest="sg_epochs")
        p.add_argument("--seed", type=int)
        if name == "train":
            p.add_argument("--out", required=True)
        else:
            p.add_argument("--out")
            p.add_argument("--k", type=int, default=10)
        if name == "ablate":
            p.add_argument("--eps", default="0,0.2,0.4,0.6,0.8,1.0")
        p.set_defaults(handler=handler)

    p = sub.add_parser("coldstart-split", help="partition drugs for cold start")
    p.add_argument("--manifest", required=True)
    p.add_argument("--ratio", type=float, default=0.9)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_coldstart_split)

    p = sub.add_parser("coldstart-eval", help="evaluate cold-start recommendations")
    p.add_argument("--train-db", required=True, dest="train_db")
    p.add_argument("--test-manifest", required=True, dest="test_manifest")
    p.add_argument("--threshold", type=float, default=0.24)
    p.add_argument("--out")
    p.set_defaults(handler=_cmd_coldstart_eval)

    p = sub.add_parser("predict", help="one-shot disease prediction for a SMILES")
    p.add_argument("--db", required=True)
    p.add_argument("--smiles", required=True)
    p.add_argument("--prior", help="TSV of known disease ids")
    p.add_argument("--top", type=int, help="limit output rows")
    p.add_argument("--out", default="quick_predict.csv")
    p.set_defaults(handler=_cmd_predict)

    p = sub.add_parser("analyze", help="projection, clustering and score exports")
    an = p.add_subparsers(dest="what", required=True, parser_class=_Parser)
    a = an.add_parser("tsne")
    a.add_argument("--db", required=True)
    a.add_argument("--perplexity", type=float, default=10.0)
    a.add_argument("--iterations", type=int, default=500)
    a.add_argument("--seed", type=int)
    a.add_argument("--out", required=True)
    a.set_defaults(handler=_cmd_analyze)
    a = an.add_parser("kmeans")
    a.add_argument("--db", required=True)
    a.add_argument("--k", type=int, default=6)
    a.add_argument("--seed", type=int)
    a.add_argument("--out", required=True)
    a.set_defaults(handler=_cmd_analyze)
    a = an.add_parser("pairscore")
    a.add_argument("--manifest", required=True)
    a.add_argument("--assignments", required=True, help="TSV from analyze kmeans")
    a.add_argument("--out", required=True)
    a.set_defaults(handler=_cmd_analyze)
    a = an.add_parser("heatmap")
    a.add_argument("--train-db", required=True, dest="train_db")
    a.add_argument("--test-manifest", required=True, dest="test_manifest")
    a.add_argument("--binarize", type=float, default=0.5)
    a.add_argument("--out", required=True)
    a.set_defaults(handler=_cmd_analyze)

    p = sub.add_parser("serve", help="start the HTTP prediction service")
    p.add_argument("--db", required=True)
    p.add_argument("--addr", default="127.0.0.1:8000")
    p.add_argument("--static", help="directory of web UI assets")
    p.set_defaults(handler=_cmd_serve)

    p = sub.add_parser("synth", help="generate the bundled synthetic dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--drugs-per-family", type=int, default=10, dest="drugs_per_family")
    p.add_argument("--diseases-per-block", type=int, default=5, dest="diseases_per_block")
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--seed", type=int)
    p.set_defaults(handler=_cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.handler(args)
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except _NUMERIC_ERRORS as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
