"""Lossless persistence for named parameter arrays.

Checkpoints are numpy ``.npz`` containers: one array per parameter name,
plus a ``__meta__`` entry holding a JSON string (format version and any
caller-supplied metadata).  Binary float64 storage round-trips exactly.
"""

from __future__ import annotations

import json

import numpy as np

FORMAT_VERSION = 1
_META_KEY = "__meta__"


class CorruptCheckpoint(ValueError):
    """The file is not a readable parameter container."""


def save_params(path, params: dict[str, np.ndarray], metadata: dict | None = None) -> None:
    meta = {"format_version": FORMAT_VERSION, "metadata": metadata or {}}
    arrays = {name: np.asarray(value) for name, value in params.items()}
    if _META_KEY in arrays:
        raise ValueError(f"parameter name {_META_KEY!r} is reserved")
    arrays[_META_KEY] = np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_params(path) -> tuple[dict[str, np.ndarray], dict]:
    try:
        with np.load(path, allow_pickle=False) as archive:
            if _META_KEY not in archive:
                raise CorruptCheckpoint(f"{path}: missing container metadata")
            meta = json.loads(bytes(archive[_META_KEY]).decode("utf-8"))
            if meta.get("format_version") != FORMAT_VERSION:
                raise CorruptCheckpoint(
                    f"{path}: unsupported format version {meta.get('format_version')}"
                )
            params = {
                name: archive[name].copy() for name in archive.files if name != _META_KEY
            }
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        if isinstance(exc, CorruptCheckpoint):
            raise
        raise CorruptCheckpoint(f"{path}: {exc}") from exc
    return params, meta.get("metadata", {})
