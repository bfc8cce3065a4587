"""Corpus management, downstream labels, and the on-disk interchange
formats shared with the embedding trainer.

Formats (all carrying a format_version):
  features.jsonl    one object per program: 56-dim array + opcode map
  spectra.bin       binary header + P x 56 float32 rows per program,
                    indexed by spectra.index.json (offsets + validity)
  codes.jsonl       program_id + P x M integer matrix + validity bits
  labels.jsonl      program_id, best_pass_id, oz_benefit_pct, split
"""

import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import ir
from .driver import OptimizerDriver, apply_passes
from .errors import (
    AllPassesFailed,
    SpectrumForgeError,
    ZeroInstructionProgram,
)
from .features import extract_autophase, extract_instcount
from .pq import Codebook, encode_spectrum
from .probes import BehaviorSpectrum, ProbeSet, compute_spectrum

FORMAT_VERSION = 1
SPECTRA_MAGIC = b"SFSP"

DEFAULT_OZ_ALIAS = ["oz"]

VALID_SPLITS = ("train", "val", "test")


@dataclass(frozen=True)
class ManifestEntry:
    program_id: str
    source_path: str
    split: str
    suite: str = ""

    def __post_init__(self):
        if self.split not in VALID_SPLITS:
            raise ValueError(f"bad split {self.split!r} for {self.program_id}")


@dataclass
class CorpusManifest:
    entries: list[ManifestEntry]
    pipeline_config_hash: str = ""

    def __post_init__(self):
        ids = [e.program_id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate program_id in manifest")

    def to_json(self) -> str:
        doc = {
            "format_version": FORMAT_VERSION,
            "pipeline_config_hash": self.pipeline_config_hash,
            "entries": [
                {
                    "program_id": e.program_id,
                    "source_path": e.source_path,
                    "split": e.split,
                    "suite": e.suite,
                }
                for e in self.entries
            ],
        }
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "CorpusManifest":
        doc = json.loads(text)
        entries = [
            ManifestEntry(
                program_id=e["program_id"],
                source_path=e["source_path"],
                split=e["split"],
                suite=e.get("suite", ""),
            )
            for e in doc["entries"]
        ]
        return cls(entries=entries,
                   pipeline_config_hash=doc.get("pipeline_config_hash", ""))


def label_best_pass(
    driver: OptimizerDriver, program: str, pass_list: list[str]
) -> tuple[int, float]:
    """Apply each candidate pass singly; return (argmax index, reduction).

    Reduction is absolute instruction count removed. Ties break to the
    lowest index; failed passes score -inf and are never selected.
    """
    orig = ir.instruction_count(ir.parse_ir(program))
    best_id, best_red = None, -float("inf")
    for i, name in enumerate(pass_list):
        try:
            optimized = apply_passes(driver, program, [name])
            red = float(orig - ir.instruction_count(ir.parse_ir(optimized)))
        except SpectrumForgeError:
            continue
        if red > best_red:
            best_id, best_red = i, red
    if best_id is None:
        raise AllPassesFailed(f"all {len(pass_list)} candidate passes failed")
    return best_id, best_red


def label_oz_benefit(
    driver: OptimizerDriver, program: str, oz_passes: list[str] | None = None
) -> float:
    """Percentage instruction reduction under the -Oz pipeline alias."""
    orig = ir.instruction_count(ir.parse_ir(program))
    if orig == 0:
        raise ZeroInstructionProgram("cannot compute a relative reduction")
    optimized = apply_passes(driver, program, oz_passes or DEFAULT_OZ_ALIAS)
    opt = ir.instruction_count(ir.parse_ir(optimized))
    return 100.0 * (orig - opt) / orig


def _jsonl_line(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


class SpectraWriter:
    """Appends P x D float32 blocks to spectra.bin and tracks offsets."""

    def __init__(self, path: Path, P: int, D: int):
        self.path = path
        self.P, self.D = P, D
        self.index: dict = {}
        self._fh = open(path, "wb")
        self._fh.write(struct.pack("<4sIII", SPECTRA_MAGIC, FORMAT_VERSION, P, D))

    def add(self, spectrum: BehaviorSpectrum) -> int:
        offset = self._fh.tell()
        self._fh.write(spectrum.rows.astype("<f4").tobytes())
        self.index[spectrum.program_id] = {
            "offset": offset,
            "validity": [int(v) for v in spectrum.validity],
        }
        return offset

    def close(self) -> None:
        self._fh.close()
        index_doc = {
            "format_version": FORMAT_VERSION,
            "P": self.P,
            "D": self.D,
            "programs": self.index,
        }
        self.path.with_suffix(".index.json").write_text(
            json.dumps(index_doc, sort_keys=True, indent=2) + "\n",
            encoding="utf-8",
        )


def read_spectrum(spectra_path: Path, program_id: str) -> BehaviorSpectrum:
    index = json.loads(
        spectra_path.with_suffix(".index.json").read_text(encoding="utf-8")
    )
    P, D = index["P"], index["D"]
    rec = index["programs"][program_id]
    raw = spectra_path.read_bytes()
    magic, version, fp, fd = struct.unpack("<4sIII", raw[:16])
    if magic != SPECTRA_MAGIC or version != FORMAT_VERSION:
        raise SpectrumForgeError("bad spectra file header")
    if (fp, fd) != (P, D):
        raise SpectrumForgeError("spectra header disagrees with index")
    off = rec["offset"]
    rows = np.frombuffer(raw[off:off + P * D * 4], dtype="<f4").reshape(P, D)
    return BehaviorSpectrum(
        program_id=program_id,
        rows=rows.astype(np.float64),
        validity=np.array(rec["validity"], dtype=bool),
    )


def _content_digest(paths_and_blobs: list[bytes]) -> str:
    h = hashlib.sha256()
    for blob in paths_and_blobs:
        h.update(blob)
    return h.hexdigest()


def build_dataset(
    manifest: CorpusManifest,
    probes: ProbeSet,
    codebook: Codebook,
    driver: OptimizerDriver,
    out_dir: str | Path,
    pass_list: list[str],
    oz_passes: list[str] | None = None,
    failure_policy: str = "zero-fill",
    jobs: int = 1,
    config_hash: str = "",
) -> dict:
    """Materialize features, spectra, codes and labels for every manifest
    entry, in manifest order. Per-program failures land in errors.jsonl
    rather than aborting. Reruns with unchanged inputs are skipped (and
    are byte-identical when forced)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    sources = {}
    for e in manifest.entries:
        sources[e.program_id] = Path(e.source_path).read_text(encoding="utf-8")

    input_digest = _content_digest(
        [config_hash.encode()]
        + [probes.to_json().encode()]
        + [codebook.centroids.tobytes()]
        + [sources[e.program_id].encode() for e in manifest.entries]
    )
    meta_path = out / "dataset.meta.json"
    if meta_path.exists():
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        if meta.get("input_digest") == input_digest:
            return meta

    features_f = open(out / "features.jsonl", "w", encoding="utf-8")
    codes_f = open(out / "codes.jsonl", "w", encoding="utf-8")
    labels_f = open(out / "labels.jsonl", "w", encoding="utf-8")
    errors_f = open(out / "errors.jsonl", "w", encoding="utf-8")
    spectra = SpectraWriter(out / "spectra.bin", P=probes.P, D=codebook.D)

    n_ok = n_err = 0
    try:
        for e in manifest.entries:
            text = sources[e.program_id]
            try:
                module = ir.parse_ir(text, source_path=e.source_path)
                autophase = extract_autophase(module)
                instcount = extract_instcount(module)
                spectrum = compute_spectrum(
                    driver, text, probes, program_id=e.program_id,
                    failure_policy=failure_policy, jobs=jobs,
                )
                codes = encode_spectrum(codebook, spectrum)
                best_id, best_red = label_best_pass(driver, text, pass_list)
                if ir.instruction_count(module) > 0:
                    oz_pct = label_oz_benefit(driver, text, oz_passes)
                else:
                    oz_pct = 0.0
            except SpectrumForgeError as exc:
                errors_f.write(_jsonl_line({
                    "program_id": e.program_id,
                    "error": type(exc).__name__,
                    "message": str(exc),
                }))
                n_err += 1
                continue

            features_f.write(_jsonl_line({
                "format_version": FORMAT_VERSION,
                "program_id": e.program_id,
                "autophase": autophase.values.tolist(),
                "autophase_schema": autophase.schema_id,
                "instcount": instcount.as_dict(),
                "total_instructions": instcount.total_instructions,
            }))
            spectra.add(spectrum)
            codes_f.write(_jsonl_line({
                "format_version": FORMAT_VERSION,
                "program_id": e.program_id,
                "codes": codes.codes.tolist(),
                "validity": [int(v) for v in codes.validity],
            }))
            labels_f.write(_jsonl_line({
                "format_version": FORMAT_VERSION,
                "program_id": e.program_id,
                "best_pass_id": best_id,
                "best_pass_reduction": best_red,
                "oz_benefit_pct": oz_pct,
                "split": e.split,
            }))
            n_ok += 1
    finally:
        features_f.close()
        codes_f.close()
        labels_f.close()
        errors_f.close()
        spectra.close()

    meta = {
        "format_version": FORMAT_VERSION,
        "input_digest": input_digest,
        "config_hash": config_hash,
        "programs_ok": n_ok,
        "programs_failed": n_err,
        "P": probes.P,
        "M": codebook.M,
        "k_star": codebook.k_star,
    }
    meta_path.write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n",
                         encoding="utf-8")
    return meta


def read_jsonl(path: str | Path) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records
