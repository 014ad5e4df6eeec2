"""CLI command contracts and HTTP API behavior."""

import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from molrepo import cli
from molrepo.coldstart import ColdStartQuery, EmbeddingDatabase, recommend
from molrepo.service import create_app


@pytest.fixture(scope="module")
def db_path(trained_db, tmp_path_factory):
    path = tmp_path_factory.mktemp("dbs") / "db.npz"
    trained_db.save(path)
    return path


@pytest.fixture(scope="module")
def client(db_path):
    return TestClient(create_app(EmbeddingDatabase.load(db_path)))


class TestCliContracts:
    def test_usage_error_exit_1(self, capsys):
        assert cli.main(["predict"]) == 1  # missing required args
        assert cli.main(["no-such-command"]) == 1

    def test_missing_input_exit_2(self, tmp_path, capsys):
        assert cli.main(["ingest", "--manifest", str(tmp_path / "nope.json")]) == 2

    def test_bad_smiles_exit_2(self, db_path, tmp_path, capsys):
        code = cli.main(
            ["predict", "--db", str(db_path), "--smiles", "C1CC",
             "--out", str(tmp_path / "x.csv")]
        )
        assert code == 2
        err = capsys.readouterr().err
        assert "offset 1" in err

    def test_numeric_error_exit_3(self, db_path, tmp_path, capsys):
        code = cli.main(
            ["analyze", "tsne", "--db", str(db_path), "--perplexity", "50",
             "--out", str(tmp_path / "t.tsv")]
        )
        assert code == 3  # 40 drugs < 3 * 50 perplexity

    def test_ingest_prints_counts(self, synth_spec, capsys):
        assert cli.main(["ingest", "--manifest", str(synth_spec.manifest_path)]) == 0
        out = capsys.readouterr().out
        assert "drug" in out and "40" in out
        assert "rd" in out and "220" in out


class TestQuickPredict:
    def test_file_contract(self, db_path, tmp_path, capsys):
        out = tmp_path / "quick_predict.csv"
        assert cli.main(
            ["predict", "--db", str(db_path), "--smiles", "CC(=O)O",
             "--out", str(out)]
        ) == 0
        raw = out.read_bytes()
        assert b"\r" not in raw
        lines = raw.decode("utf-8").splitlines()
        assert lines[0] == "disease_id,disease_name,score"
        assert len(lines) == 20 + 1  # header + one row per disease
        scores = [float(line.rsplit(",", 1)[1]) for line in lines[1:]]
        assert scores == sorted(scores, reverse=True)
        for line in lines[1:]:
            assert len(line.rsplit(",", 1)[1].split(".")[1]) == 6

    def test_scores_parse_back_within_tolerance(self, db_path, tmp_path, capsys):
        out = tmp_path / "qp.csv"
        cli.main(["predict", "--db", str(db_path), "--smiles", "CCO", "--out", str(out)])
        db = EmbeddingDatabase.load(db_path)
        result = recommend(ColdStartQuery("CCO"), db)
        parsed = [
            float(line.rsplit(",", 1)[1])
            for line in out.read_text().splitlines()[1:]
        ]
        for written, (_, _, score) in zip(parsed, result.ranking):
            assert abs(written - score) < 5e-7

    def test_comma_names_quoted(self, trained_db, tmp_path):
        import dataclasses

        db = dataclasses.replace(
            trained_db,
            disease_names=["weird, with comma"] + trained_db.disease_names[1:],
        )
        result = recommend(ColdStartQuery("CCO"), db)
        path = tmp_path / "q.csv"
        cli.write_quick_predict(result, path)
        content = path.read_text()
        assert '"weird, with comma"' in content

    def test_run_manifest_written(self, db_path, tmp_path, capsys):
        out = tmp_path / "qp.csv"
        cli.main(["predict", "--db", str(db_path), "--smiles", "C", "--out", str(out)])
        manifest = json.loads((tmp_path / "run_manifest.json").read_text())
        assert manifest["command"] == "predict"
        assert "qp.csv" in manifest["artifacts"]
        assert manifest["dataset_hash"]


class TestCliPipelines:
    def test_embed_train(self, synth_spec, tmp_path, capsys):
        drugs = synth_spec.manifest_path.parent / "drugs.tsv"
        out = tmp_path / "table.tsv"
        code = cli.main(
            ["embed-train", "--drugs", str(drugs), "--out", str(out),
             "--dim", "16", "--epochs", "1", "--seed", "0"]
        )
        assert code == 0
        from molrepo.embed import load_table

        table = load_table(out)
        assert table.dim == 16

    def test_cv_writes_summary(self, synth_spec, tmp_path, capsys):
        out = tmp_path / "cv"
        code = cli.main(
            ["cv", "--manifest", str(synth_spec.manifest_path), "--k", "3",
             "--seed", "0", "--epochs", "10", "--sg-epochs", "2",
             "--out", str(out)]
        )
        assert code == 0
        summary = json.loads((out / "cv_summary.json").read_text())
        assert len(summary["folds"]) == 3
        assert (out / "run_manifest.json").exists()
        stdout = capsys.readouterr().out
        assert stdout.count("\n") >= 5  # 3 folds + mean + std + header

    def test_coldstart_split_and_eval(self, synth_spec, db_path, tmp_path, capsys):
        split_dir = tmp_path / "cs"
        code = cli.main(
            ["coldstart-split", "--manifest", str(synth_spec.manifest_path),
             "--ratio", "0.9", "--seed", "0", "--out", str(split_dir)]
        )
        assert code == 0
        cs = json.loads((split_dir / "cs_manifest.json").read_text())
        assert (split_dir / cs["train_manifest"]).exists()
        test_lines = (split_dir / cs["test_drugs"]).read_text().strip().split("\n")
        assert len(test_lines) == 4

        # evaluating against the full-data db is only a wiring check here
        code = cli.main(
            ["coldstart-eval", "--train-db", str(db_path),
             "--test-manifest", str(split_dir / "cs_manifest.json"),
             "--threshold", "0.24", "--out", str(tmp_path / "cse")]
        )
        assert code == 0
        report = json.loads((tmp_path / "cse" / "coldstart_report.json").read_text())
        assert report["threshold"] == 0.24

    def test_analyze_chain(self, synth_spec, db_path, tmp_path, capsys):
        proj = tmp_path / "proj.tsv"
        assert cli.main(
            ["analyze", "tsne", "--db", str(db_path), "--perplexity", "8",
             "--iterations", "50", "--seed", "0", "--out", str(proj)]
        ) == 0
        assert len(proj.read_text().strip().split("\n")) == 40

        assign = tmp_path / "assign.tsv"
        assert cli.main(
            ["analyze", "kmeans", "--db", str(db_path), "--k", "4",
             "--seed", "0", "--out", str(assign)]
        ) == 0

        table = tmp_path / "pairscore.tsv"
        assert cli.main(
            ["analyze", "pairscore", "--manifest", str(synth_spec.manifest_path),
             "--assignments", str(assign), "--out", str(table)]
        ) == 0
        rows = table.read_text().strip().split("\n")
        assert len(rows) == 5  # header + 4 clusters

    def test_analyze_heatmap(self, synth_spec, db_path, tmp_path, capsys):
        split_dir = tmp_path / "cs"
        cli.main(
            ["coldstart-split", "--manifest", str(synth_spec.manifest_path),
             "--ratio", "0.9", "--seed", "0", "--out", str(split_dir)]
        )
        out = tmp_path / "heat.tsv"
        assert cli.main(
            ["analyze", "heatmap", "--train-db", str(db_path),
             "--test-manifest", str(split_dir / "cs_manifest.json"),
             "--out", str(out)]
        ) == 0
        rows = out.read_text().strip().split("\n")
        assert len(rows) == 1 + 4  # header + test drugs


class TestApi:
    def test_parse_benzene(self, client):
        response = client.post("/api/parse", json={"smiles": "c1ccccc1"})
        assert response.status_code == 200
        body = response.json()
        assert len(body["atoms"]) == 6
        assert len(body["bonds"]) == 6
        assert all(a["aromatic"] and a["in_ring"] for a in body["atoms"])

    def test_parse_error_offset(self, client):
        response = client.post("/api/parse", json={"smiles": "C1CC"})
        assert response.status_code == 400
        assert response.json()["error"]["offset"] == 1

    def test_predict_contract(self, client, trained_db):
        response = client.post("/api/predict", json={"smiles": "C"})
        assert response.status_code == 200
        results = response.json()["results"]
        assert len(results) == len(trained_db.disease_ids)
        scores = [r["score"] for r in results]
        assert scores == sorted(scores, reverse=True)
        assert all(0.0 <= s <= 1.0 for s in scores)

    def test_predict_deterministic_bytes(self, client):
        a = client.post("/api/predict", json={"smiles": "CCO"})
        b = client.post("/api/predict", json={"smiles": "CCO"})
        assert a.content == b.content

    def test_predict_unknown_prior_422(self, client):
        response = client.post(
            "/api/predict", json={"smiles": "C", "prior": ["NOT-A-DISEASE"]}
        )
        assert response.status_code == 422

    def test_predict_with_prior_shifts_scores(self, client, trained_db):
        base = client.post("/api/predict", json={"smiles": "C"}).json()["results"]
        disease = trained_db.disease_ids[0]
        with_prior = client.post(
            "/api/predict", json={"smiles": "C", "prior": [disease]}
        ).json()["results"]
        rank_base = [r["disease_id"] for r in base].index(disease)
        rank_prior = [r["disease_id"] for r in with_prior].index(disease)
        assert rank_prior <= rank_base

    def test_diseases_catalog(self, client, trained_db):
        body = client.get("/api/diseases").json()
        assert len(body["diseases"]) == len(trained_db.disease_ids)
        assert body["diseases"][0]["id"] == trained_db.disease_ids[0]

    def test_model_info(self, client, trained_db):
        body = client.get("/api/model").json()
        assert body["n_drugs"] == len(trained_db.drug_ids)
        assert body["provenance"] == trained_db.provenance
        assert body["config"]["dropout"] == trained_db.config.dropout

    def test_cli_and_api_agree(self, client, db_path, tmp_path):
        out = tmp_path / "qp.csv"
        cli.main(["predict", "--db", str(db_path), "--smiles", "CCNCC", "--out", str(out)])
        api = client.post("/api/predict", json={"smiles": "CCNCC"}).json()["results"]
        csv_rows = out.read_text().splitlines()[1:]
        assert len(csv_rows) == len(api)
        for row, item in zip(csv_rows, api):
            disease_id, _, score_text = row.split(",")
            assert disease_id == item["disease_id"]
            assert f"{item['score']:.6f}" == score_text

    def test_static_mount(self, db_path, tmp_path):
        static = tmp_path / "dist"
        static.mkdir()
        (static / "index.html").write_text("<html><body>ui</body></html>")
        app = create_app(EmbeddingDatabase.load(db_path), static_dir=static)
        with TestClient(app) as local_client:
            response = local_client.get("/")
            assert response.status_code == 200
            assert "ui" in response.text
