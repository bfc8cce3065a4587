"""Readers and writers for the shared interchange files.

The code/label inputs are JSONL produced by the representation
pipeline; embeddings go out in its binary format (magic, version, N, E,
a JSON id blob, then N x E little-endian float32) so the two packages
stay decoupled at the file level.
"""

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .errors import DataMismatch, PqBertError

EMBEDDING_MAGIC = b"SFEM"
EMBEDDING_FORMAT_VERSION = 1


def read_jsonl(path: str | Path) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


def read_codes(path: str | Path) -> tuple[list[str], np.ndarray, np.ndarray]:
    """Load codes.jsonl into (program_ids, (N, P, M) ids, (N, P) validity)."""
    records = read_jsonl(path)
    if not records:
        raise DataMismatch(f"no code records in {path}")
    ids, codes, validity = [], [], []
    shape = None
    for r in records:
        arr = np.asarray(r["codes"], dtype=np.int64)
        if arr.ndim != 2:
            raise DataMismatch(f"{r['program_id']}: codes must be a P x M matrix")
        if shape is None:
            shape = arr.shape
        elif arr.shape != shape:
            raise DataMismatch(
                f"{r['program_id']}: shape {arr.shape} differs from {shape}"
            )
        ids.append(r["program_id"])
        codes.append(arr)
        validity.append(np.asarray(r.get("validity", [1] * shape[0]), dtype=bool))
    return ids, np.stack(codes), np.stack(validity)


def read_labels(path: str | Path) -> dict[str, dict]:
    return {r["program_id"]: r for r in read_jsonl(path)}


def corpus_hash(codes: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(codes).tobytes()).hexdigest()


def save_embeddings(program_ids: list[str], vectors: np.ndarray,
                    path: str | Path, producer: str = "pqbert") -> None:
    if len(program_ids) != vectors.shape[0]:
        raise DataMismatch("ids and vectors disagree on N")
    if not np.all(np.isfinite(vectors)):
        raise ValueError("embedding matrix contains non-finite entries")
    blob = json.dumps(
        {"program_ids": list(program_ids), "producer": producer}, sort_keys=True
    ).encode("utf-8")
    n, e = vectors.shape
    header = struct.pack("<4sIIII", EMBEDDING_MAGIC, EMBEDDING_FORMAT_VERSION,
                         n, e, len(blob))
    Path(path).write_bytes(header + blob + vectors.astype("<f4").tobytes())


def load_embeddings(path: str | Path) -> tuple[list[str], np.ndarray]:
    raw = Path(path).read_bytes()
    magic, version, n, e, blob_len = struct.unpack("<4sIIII", raw[:20])
    if magic != EMBEDDING_MAGIC:
        raise PqBertError("not an embedding file")
    if version != EMBEDDING_FORMAT_VERSION:
        raise PqBertError(f"unsupported embedding version {version}")
    meta = json.loads(raw[20:20 + blob_len].decode("utf-8"))
    vectors = np.frombuffer(raw[20 + blob_len:], dtype="<f4").reshape(n, e)
    return meta["program_ids"], vectors.astype(np.float64)


def write_report(report: dict, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(report, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
