"""HTTP prediction service over one immutable embedding database.

The service is read-only: the database loads at startup and every request
reuses it, so concurrent requests are safe and identical requests produce
byte-identical responses.  Swap models by restarting with a new database.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .chem import SmilesError, parse_smiles
from .coldstart import (
    ColdStartQuery,
    EmbeddingDatabase,
    UnknownDisease,
    prior_from_ids,
    recommend,
)


class ParseRequest(BaseModel):
    smiles: str


class PredictRequest(BaseModel):
    smiles: str
    prior: list[str] | None = None  # disease ids with a known association


def _error_body(kind: str, message: str, offset: int | None = None) -> dict:
    body = {"error": {"type": kind, "message": message}}
    if offset is not None:
        body["error"]["offset"] = offset
    return body


def create_app(db: EmbeddingDatabase, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="molrepo prediction service")

    @app.post("/api/parse")
    def api_parse(request: ParseRequest):
        try:
            mol = parse_smiles(request.smiles)
        except SmilesError as exc:
            return JSONResponse(
                status_code=400,
                content=_error_body(type(exc).__name__, str(exc), exc.offset),
            )
        return {
            "smiles": mol.smiles,
            "atoms": [
                {
                    "element": a.element,
                    "charge": a.charge,
                    "explicit_h": a.explicit_h,
                    "aromatic": a.aromatic,
                    "in_ring": a.in_ring,
                }
                for a in mol.atoms
            ],
            "bonds": [
                {
                    "a": b.a,
                    "b": b.b,
                    "order": b.order,
                    "aromatic": b.aromatic,
                    "in_ring": b.in_ring,
                }
                for b in mol.bonds
            ],
        }

    @app.post("/api/predict")
    def api_predict(request: PredictRequest):
        prior = None
        if request.prior:
            try:
                prior = prior_from_ids(db, request.prior)
            except UnknownDisease as exc:
                return JSONResponse(
                    status_code=422,
                    content=_error_body("UnknownDisease", f"unknown disease id {exc.args[0]!r}"),
                )
        try:
            result = recommend(ColdStartQuery(request.smiles, prior), db)
        except SmilesError as exc:
            return JSONResponse(
                status_code=400,
                content=_error_body(type(exc).__name__, str(exc), exc.offset),
            )
        return {
            "results": [
                {"disease_id": d, "disease_name": name, "score": score}
                for d, name, score in result.ranking
            ],
            "count": len(result.ranking),
            "unk_tokens": result.unk_tokens,
        }

    @app.get("/api/diseases")
    def api_diseases():
        return {
            "diseases": [
                {"id": d, "name": n} for d, n in zip(db.disease_ids, db.disease_names)
            ]
        }

    @app.get("/api/model")
    def api_model():
        return {
            "provenance": db.provenance,
            "n_drugs": len(db.drug_ids),
            "n_diseases": len(db.disease_ids),
            "embedding_width": int(db.drug_embeddings.shape[1]),
            "config": db.config.to_dict(),
        }

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app


def serve(db_path: str, host: str = "127.0.0.1", port: int = 8000,
          static_dir: str | None = None) -> None:
    import uvicorn

    app = create_app(EmbeddingDatabase.load(db_path), static_dir=static_dir)
    uvicorn.run(app, host=host, port=port)
