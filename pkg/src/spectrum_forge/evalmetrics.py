"""Metrics and embedding-space analyses: Top-k accuracy, MAE, the k-NN
probe of embedding geometry, and the probe-alignment report."""

import json
import struct
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, MissingLabel, SpectrumForgeError
from .probes import BehaviorSpectrum, ProbeSet

EMBEDDING_MAGIC = b"SFEM"
EMBEDDING_FORMAT_VERSION = 1

KEY_FEATURE_INDEX = 51  # TotalInsts in the autophase-56 schema


@dataclass
class EmbeddingMatrix:
    program_ids: list[str]
    vectors: np.ndarray  # N x E float
    producer: str = "external"

    def __post_init__(self):
        if len(self.program_ids) != self.vectors.shape[0]:
            raise DimensionMismatch("ids and vectors disagree on N")
        if not np.all(np.isfinite(self.vectors)):
            raise ValueError("embedding matrix contains non-finite entries")


@dataclass
class PredictionRecord:
    program_id: str
    ranked_pass_ids: list[int]
    predicted_oz: float | None = None

    def __post_init__(self):
        if len(set(self.ranked_pass_ids)) != len(self.ranked_pass_ids):
            raise ValueError("ranked ids must be unique")


def topk_accuracy(
    preds: list[PredictionRecord], labels: dict[str, int], k: int
) -> float:
    """Percentage of programs whose true label is in the first k ranks."""
    if not preds:
        raise ValueError("empty prediction list")
    hits = 0
    for p in preds:
        if p.program_id not in labels:
            raise MissingLabel(p.program_id)
        if len(p.ranked_pass_ids) < k:
            raise ValueError(f"{p.program_id}: fewer than {k} ranked ids")
        if labels[p.program_id] in p.ranked_pass_ids[:k]:
            hits += 1
    return 100.0 * hits / len(preds)


def mae(preds: list[tuple[str, float]], labels: dict[str, float]) -> float:
    """Mean absolute error in percentage points."""
    if not preds:
        raise ValueError("empty prediction list")
    total = 0.0
    for pid, value in preds:
        if pid not in labels:
            raise MissingLabel(pid)
        total += abs(value - labels[pid])
    return total / len(preds)


def knn_classify(
    train_vectors: np.ndarray,
    train_labels: list[int],
    test_vectors: np.ndarray,
    k: int = 5,
    metric: str = "euclidean",
) -> list[int]:
    """Brute-force k-NN with documented tie rules.

    Neighbors order by (distance, train index). Majority vote; a vote
    tie resolves to the label of the nearest neighbor among the tied
    labels.
    """
    train = np.asarray(train_vectors, dtype=np.float64)
    test = np.asarray(test_vectors, dtype=np.float64)
    if train.ndim != 2 or train.shape[0] == 0:
        raise ValueError("train set must be a nonempty 2-D matrix")
    if test.shape[1] != train.shape[1]:
        raise DimensionMismatch(f"E mismatch: {test.shape[1]} vs {train.shape[1]}")
    if metric == "euclidean":
        d = np.sqrt(((test[:, None, :] - train[None, :, :]) ** 2).sum(axis=2))
    elif metric == "cosine":
        tn = train / np.maximum(np.linalg.norm(train, axis=1, keepdims=True), 1e-12)
        qn = test / np.maximum(np.linalg.norm(test, axis=1, keepdims=True), 1e-12)
        d = 1.0 - qn @ tn.T
    else:
        raise ValueError(f"unknown metric {metric!r}")

    labels = list(train_labels)
    out = []
    for row in d:
        order = sorted(range(len(labels)), key=lambda i: (row[i], i))[:k]
        votes = Counter(labels[i] for i in order)
        top = max(votes.values())
        tied = {lab for lab, n in votes.items() if n == top}
        for i in order:  # nearest neighbor among tied labels wins
            if labels[i] in tied:
                out.append(labels[i])
                break
    return out


@dataclass
class ProbeAlignmentReport:
    most_reactive_probe: int
    reaction_strength: float  # signed reaction at the key feature
    per_pass_counts: dict = field(default_factory=dict)
    total_aligned: int = 0


def probe_alignment_report(
    spectrum: BehaviorSpectrum,
    top5_pass_names: list[str],
    probes: ProbeSet,
    key_feature_index: int = KEY_FEATURE_INDEX,
) -> ProbeAlignmentReport:
    """Find the probe with the largest reduction (most negative reaction)
    at the key feature, then count top-5 pass occurrences inside it.
    Ties break to the lowest probe index."""
    if not 0 <= key_feature_index < spectrum.rows.shape[1]:
        raise ValueError(f"key feature index {key_feature_index} out of range")
    column = spectrum.rows[:, key_feature_index]
    idx = int(np.argmin(column))
    probe = probes.probes[idx]
    counts = {name: probe.passes.count(name) for name in top5_pass_names}
    return ProbeAlignmentReport(
        most_reactive_probe=idx,
        reaction_strength=float(column[idx]),
        per_pass_counts=counts,
        total_aligned=sum(counts.values()),
    )


def save_embeddings(em: EmbeddingMatrix, path: str | Path) -> None:
    """Shared binary format: magic, version, N, E, a JSON blob with the
    program ids and producer tag, then N x E little-endian float32."""
    ids_blob = json.dumps(
        {"program_ids": em.program_ids, "producer": em.producer},
        sort_keys=True,
    ).encode("utf-8")
    n, e = em.vectors.shape
    header = struct.pack("<4sIIII", EMBEDDING_MAGIC, EMBEDDING_FORMAT_VERSION,
                         n, e, len(ids_blob))
    Path(path).write_bytes(header + ids_blob + em.vectors.astype("<f4").tobytes())


def load_embeddings(path: str | Path) -> EmbeddingMatrix:
    raw = Path(path).read_bytes()
    magic, version, n, e, blob_len = struct.unpack("<4sIIII", raw[:20])
    if magic != EMBEDDING_MAGIC:
        raise SpectrumForgeError("not an embedding file")
    if version != EMBEDDING_FORMAT_VERSION:
        raise SpectrumForgeError(f"unsupported embedding version {version}")
    meta = json.loads(raw[20:20 + blob_len].decode("utf-8"))
    vectors = np.frombuffer(raw[20 + blob_len:], dtype="<f4").reshape(n, e)
    return EmbeddingMatrix(
        program_ids=meta["program_ids"],
        vectors=vectors.astype(np.float64),
        producer=meta.get("producer", "external"),
    )


def write_report(report: dict, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(report, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
