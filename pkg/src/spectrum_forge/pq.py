"""Product quantization of reaction vectors.

Each 56-dim reaction vector is split into M sub-vectors; each subspace
carries its own K-means codebook of k_star centroids. Encoding picks the
L2-nearest centroid per subspace (lowest index on ties); decoding
concatenates centroids back. One codebook is shared across all probe
positions.
"""

import hashlib
import json
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatch,
    DimensionNotDivisible,
    EmptyTrainingSet,
    IdOutOfRange,
    SpectrumForgeError,
)
from .kmeans import kmeans
from .probes import BehaviorSpectrum
from .seeding import stable_seed

CODEBOOK_MAGIC = b"SFCB"
CODEBOOK_FORMAT_VERSION = 1

DEFAULT_M = 8
DEFAULT_K_STAR = 256


@dataclass
class Codebook:
    M: int
    D: int
    k_star: int
    centroids: np.ndarray  # (M, k_star, D_sub) float32
    train_meta: dict = field(default_factory=dict)

    @property
    def D_sub(self) -> int:
        return self.D // self.M

    @property
    def virtual_vocabulary_size(self) -> int:
        return self.k_star**self.M

    @property
    def stored_centroid_count(self) -> int:
        return self.M * self.k_star

    def split(self, d: np.ndarray) -> np.ndarray:
        return d.reshape(self.M, self.D_sub)


@dataclass(frozen=True)
class CompositionalCode:
    ids: tuple[int, ...]


@dataclass
class CodeSequence:
    program_id: str
    codes: np.ndarray      # (P, M) int32
    validity: np.ndarray   # (P,) bool


def _dedupe_centroids(table: np.ndarray, data: np.ndarray) -> np.ndarray:
    """Replace duplicate centroids with the training points farthest from
    their nearest centroid, keeping all rows pairwise distinct."""
    seen: dict[bytes, int] = {}
    dup_rows = []
    for i, row in enumerate(table):
        key = row.tobytes()
        if key in seen:
            dup_rows.append(i)
        else:
            seen[key] = i
    if not dup_rows:
        return table
    d2 = ((data[:, None, :] - table[None, :, :]) ** 2).sum(axis=2).min(axis=1)
    order = np.argsort(-d2, kind="stable")
    fixed = table.copy()
    j = 0
    for i in dup_rows:
        while j < len(order):
            cand = data[order[j]]
            j += 1
            if cand.tobytes() not in seen:
                fixed[i] = cand
                seen[cand.tobytes()] = i
                break
    return fixed


def train_codebook(
    reactions: np.ndarray,
    M: int = DEFAULT_M,
    k_star: int = DEFAULT_K_STAR,
    seed: int = 0,
    max_iters: int = 100,
) -> Codebook:
    """Train per-subspace K-means codebooks over pooled reaction rows.

    reactions: (N, D) array. If a subspace has fewer distinct sub-vectors
    than k_star, k_star is reduced (with a warning) so centroids stay
    pairwise distinct. Deterministic given seed.
    """
    x = np.asarray(reactions, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise EmptyTrainingSet("need a nonempty (N, D) matrix of reactions")
    n, D = x.shape
    if D % M != 0:
        raise DimensionNotDivisible(f"D={D} not divisible by M={M}")
    d_sub = D // M

    subs = [np.ascontiguousarray(x[:, i * d_sub:(i + 1) * d_sub]) for i in range(M)]
    min_distinct = min(len(np.unique(s, axis=0)) for s in subs)
    k_eff = min(k_star, min_distinct)
    if k_eff < k_star:
        warnings.warn(
            f"k_star reduced from {k_star} to {k_eff}: "
            "fewer distinct sub-vectors than requested centroids",
            stacklevel=2,
        )

    tables = np.empty((M, k_eff, d_sub), dtype=np.float32)
    for i, sub in enumerate(subs):
        distinct = np.unique(sub, axis=0)
        if len(distinct) == k_eff:
            table = distinct
        else:
            table, _ = kmeans(sub, k_eff, seed=stable_seed(seed, "subspace", i),
                              max_iters=max_iters)
            table = _dedupe_centroids(table.astype(np.float64), distinct)
        tables[i] = table.astype(np.float32)

    meta = {
        "seed": seed,
        "max_iters": max_iters,
        "corpus_hash": hashlib.sha256(x.tobytes()).hexdigest(),
        "requested_k_star": k_star,
    }
    return Codebook(M=M, D=D, k_star=k_eff, centroids=tables, train_meta=meta)


def encode(cb: Codebook, d: np.ndarray) -> CompositionalCode:
    """Per-subspace nearest-centroid ids; ties break to the lowest index."""
    d = np.asarray(d, dtype=np.float64)
    if d.shape != (cb.D,):
        raise DimensionMismatch(f"expected length {cb.D}, got {d.shape}")
    ids = []
    for i, sub in enumerate(cb.split(d)):
        dist = ((cb.centroids[i].astype(np.float64) - sub) ** 2).sum(axis=1)
        ids.append(int(np.argmin(dist)))
    return CompositionalCode(ids=tuple(ids))


def decode(cb: Codebook, c: CompositionalCode) -> np.ndarray:
    """Concatenate the centroids named by the code."""
    if len(c.ids) != cb.M:
        raise IdOutOfRange(f"expected {cb.M} ids, got {len(c.ids)}")
    parts = []
    for i, cid in enumerate(c.ids):
        if not 0 <= cid < cb.k_star:
            raise IdOutOfRange(f"id {cid} outside [0, {cb.k_star}) in subspace {i}")
        parts.append(cb.centroids[i, cid].astype(np.float64))
    return np.concatenate(parts)


def encode_spectrum(cb: Codebook, s: BehaviorSpectrum) -> CodeSequence:
    codes = np.empty((s.rows.shape[0], cb.M), dtype=np.int32)
    for r, row in enumerate(s.rows):
        codes[r] = encode(cb, row).ids
    return CodeSequence(program_id=s.program_id, codes=codes,
                        validity=s.validity.copy())


def quantization_error(cb: Codebook, reactions: np.ndarray) -> float:
    """Mean squared reconstruction error over the given vectors."""
    x = np.asarray(reactions, dtype=np.float64)
    total = 0.0
    for d in x:
        d_hat = decode(cb, encode(cb, d))
        total += float(((d - d_hat) ** 2).sum())
    return total / len(x)


def save_codebook(cb: Codebook, path: str | Path) -> None:
    """Versioned binary layout: magic, version, M, D, k_star, seed,
    corpus-hash, then M row-major little-endian float32 tables. A JSON
    sidecar mirrors the header."""
    path = Path(path)
    corpus_hash = cb.train_meta.get("corpus_hash", "0" * 64)
    header = struct.pack(
        "<4sIIIIq", CODEBOOK_MAGIC, CODEBOOK_FORMAT_VERSION,
        cb.M, cb.D, cb.k_star, int(cb.train_meta.get("seed", 0)),
    ) + bytes.fromhex(corpus_hash)
    body = cb.centroids.astype("<f4").tobytes()
    path.write_bytes(header + body)
    sidecar = {
        "format_version": CODEBOOK_FORMAT_VERSION,
        "M": cb.M,
        "D": cb.D,
        "k_star": cb.k_star,
        "virtual_vocabulary_size": str(cb.virtual_vocabulary_size),
        "stored_centroid_count": cb.stored_centroid_count,
        "train_meta": cb.train_meta,
    }
    path.with_suffix(path.suffix + ".json").write_text(
        json.dumps(sidecar, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def load_codebook(path: str | Path) -> Codebook:
    raw = Path(path).read_bytes()
    magic, version, M, D, k_star, seed = struct.unpack("<4sIIIIq", raw[:28])
    if magic != CODEBOOK_MAGIC:
        raise SpectrumForgeError("not a codebook file")
    if version != CODEBOOK_FORMAT_VERSION:
        raise SpectrumForgeError(f"unsupported codebook version {version}")
    corpus_hash = raw[28:60].hex()
    table = np.frombuffer(raw[60:], dtype="<f4").reshape(M, k_star, D // M)
    return Codebook(
        M=M, D=D, k_star=k_star, centroids=table.copy(),
        train_meta={"seed": seed, "corpus_hash": corpus_hash},
    )
