"""`spectrum-forge` command line: the pipeline as reproducible subcommands.

Every subcommand reads one config document (TOML or JSON), applies flag
overrides, and derives all randomness from the single top-level seed.
Exit code 0 means no strict-mode errors; failures print a message to
stderr and exit nonzero.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import corpus as corpus_mod
from . import ir, pq
from .config import RunConfig, load_config
from .errors import SpectrumForgeError
from .evalmetrics import (
    PredictionRecord,
    knn_classify,
    load_embeddings,
    mae,
    probe_alignment_report,
    topk_accuracy,
    write_report,
)
from .features import extract_autophase, extract_instcount
from .probes import ProbeSet, build_probe_set, compute_spectrum
from .seeding import stable_seed


def _load_corpus(corpus_dir: Path) -> list[tuple[str, str]]:
    if not corpus_dir.is_dir():
        raise SpectrumForgeError(f"corpus directory not found: {corpus_dir}")
    out = []
    for path in sorted(corpus_dir.glob("*.ll")):
        out.append((path.stem, path.read_text(encoding="utf-8")))
    return out


def _auto_manifest(corpus_dir: Path, split: str = "train") -> corpus_mod.CorpusManifest:
    entries = [
        corpus_mod.ManifestEntry(
            program_id=p.stem, source_path=str(p), split=split, suite=corpus_dir.name
        )
        for p in sorted(corpus_dir.glob("*.ll"))
    ]
    return corpus_mod.CorpusManifest(entries=entries)


def cmd_features(cfg: RunConfig, args) -> int:
    corpus_dir = Path(args.corpus)
    if not corpus_dir.is_dir():
        print(f"error: corpus directory not found: {corpus_dir}", file=sys.stderr)
        return 1
    with open(args.out, "w", encoding="utf-8") as f:
        for pid, text in _load_corpus(corpus_dir):
            module = ir.parse_ir(text, source_path=pid)
            autophase = extract_autophase(module)
            instcount = extract_instcount(module)
            f.write(corpus_mod._jsonl_line({
                "format_version": corpus_mod.FORMAT_VERSION,
                "program_id": pid,
                "autophase": autophase.values.tolist(),
                "autophase_schema": autophase.schema_id,
                "instcount": instcount.as_dict(),
                "total_instructions": instcount.total_instructions,
            }))
    return 0


def cmd_build_probes(cfg: RunConfig, args) -> int:
    corpus = _load_corpus(Path(args.corpus))
    driver = cfg.make_driver()
    probe_set = build_probe_set(
        driver, corpus, P=cfg.P, L=cfg.L, pass_pool=cfg.pass_pool,
        method=cfg.method, budget=cfg.budget, seed=cfg.seed,
        config_hash=cfg.config_hash(),
    )
    Path(args.out).write_text(probe_set.to_json(), encoding="utf-8")
    return 0


def cmd_spectrum(cfg: RunConfig, args) -> int:
    corpus = _load_corpus(Path(args.corpus))
    probes = ProbeSet.from_json(Path(args.probes).read_text(encoding="utf-8"))
    driver = cfg.make_driver()
    writer = corpus_mod.SpectraWriter(Path(args.out), P=probes.P, D=56)
    try:
        for pid, text in corpus:
            spectrum = compute_spectrum(
                driver, text, probes, program_id=pid,
                failure_policy=cfg.failure_policy, jobs=cfg.jobs,
            )
            writer.add(spectrum)
    finally:
        writer.close()
    return 0


def cmd_train_codebook(cfg: RunConfig, args) -> int:
    spectra_path = Path(args.spectra)
    index = json.loads(
        spectra_path.with_suffix(".index.json").read_text(encoding="utf-8")
    )
    rows = []
    for pid in index["programs"]:
        rows.append(corpus_mod.read_spectrum(spectra_path, pid).rows)
    pooled = np.concatenate(rows, axis=0)
    cb = pq.train_codebook(
        pooled, M=cfg.M, k_star=cfg.k_star,
        seed=stable_seed(cfg.seed, "codebook"), max_iters=cfg.kmeans_max_iters,
    )
    pq.save_codebook(cb, args.out)
    return 0


def cmd_encode(cfg: RunConfig, args) -> int:
    spectra_path = Path(args.spectra)
    cb = pq.load_codebook(args.codebook)
    index = json.loads(
        spectra_path.with_suffix(".index.json").read_text(encoding="utf-8")
    )
    with open(args.out, "w", encoding="utf-8") as f:
        for pid in index["programs"]:
            spectrum = corpus_mod.read_spectrum(spectra_path, pid)
            seq = pq.encode_spectrum(cb, spectrum)
            f.write(corpus_mod._jsonl_line({
                "format_version": corpus_mod.FORMAT_VERSION,
                "program_id": pid,
                "codes": seq.codes.tolist(),
                "validity": [int(v) for v in seq.validity],
            }))
    return 0


def cmd_labels(cfg: RunConfig, args) -> int:
    driver = cfg.make_driver()
    if args.manifest:
        manifest = corpus_mod.CorpusManifest.from_json(
            Path(args.manifest).read_text(encoding="utf-8")
        )
    else:
        manifest = _auto_manifest(Path(args.corpus))
    with open(args.out, "w", encoding="utf-8") as f:
        for e in manifest.entries:
            text = Path(e.source_path).read_text(encoding="utf-8")
            best_id, best_red = corpus_mod.label_best_pass(driver, text, cfg.pass_list)
            module = ir.parse_ir(text)
            if ir.instruction_count(module) > 0:
                oz_pct = corpus_mod.label_oz_benefit(driver, text, cfg.oz_passes)
            else:
                oz_pct = 0.0
            f.write(corpus_mod._jsonl_line({
                "format_version": corpus_mod.FORMAT_VERSION,
                "program_id": e.program_id,
                "best_pass_id": best_id,
                "best_pass_reduction": best_red,
                "oz_benefit_pct": oz_pct,
                "split": e.split,
            }))
    return 0


def cmd_dataset(cfg: RunConfig, args) -> int:
    if args.manifest:
        manifest = corpus_mod.CorpusManifest.from_json(
            Path(args.manifest).read_text(encoding="utf-8")
        )
    else:
        manifest = _auto_manifest(Path(args.corpus))
    probes = ProbeSet.from_json(Path(args.probes).read_text(encoding="utf-8"))
    cb = pq.load_codebook(args.codebook)
    driver = cfg.make_driver()
    corpus_mod.build_dataset(
        manifest, probes, cb, driver, args.out,
        pass_list=cfg.pass_list, oz_passes=cfg.oz_passes,
        failure_policy=cfg.failure_policy, jobs=cfg.jobs,
        config_hash=cfg.config_hash(),
    )
    return 0


def cmd_eval(cfg: RunConfig, args) -> int:
    labels = corpus_mod.read_jsonl(args.labels)
    report: dict = {"task": args.task}

    if args.task == "knn":
        em = load_embeddings(args.embeddings)
        by_id = {r["program_id"]: r for r in labels}
        train_idx = [i for i, pid in enumerate(em.program_ids)
                     if by_id[pid]["split"] in ("train", "val")]
        test_idx = [i for i, pid in enumerate(em.program_ids)
                    if by_id[pid]["split"] == "test"]
        if not train_idx or not test_idx:
            print("error: knn task needs both train/val and test splits",
                  file=sys.stderr)
            return 1
        preds = knn_classify(
            em.vectors[train_idx],
            [by_id[em.program_ids[i]]["best_pass_id"] for i in train_idx],
            em.vectors[test_idx],
            k=cfg.knn_k,
        )
        truth = [by_id[em.program_ids[i]]["best_pass_id"] for i in test_idx]
        correct = sum(p == t for p, t in zip(preds, truth))
        report["knn_top1"] = 100.0 * correct / len(truth)
        report["n_train"] = len(train_idx)
        report["n_test"] = len(test_idx)
    elif args.task == "metrics":
        preds = corpus_mod.read_jsonl(args.preds)
        records = [
            PredictionRecord(program_id=p["program_id"],
                             ranked_pass_ids=p["ranked_pass_ids"],
                             predicted_oz=p.get("predicted_oz"))
            for p in preds
        ]
        cls_labels = {r["program_id"]: r["best_pass_id"] for r in labels}
        report["top1"] = topk_accuracy(records, cls_labels, k=1)
        report["top5"] = topk_accuracy(records, cls_labels, k=5)
        oz_preds = [(p["program_id"], p["predicted_oz"]) for p in preds
                    if p.get("predicted_oz") is not None]
        if oz_preds:
            oz_labels = {r["program_id"]: r["oz_benefit_pct"] for r in labels}
            report["mae"] = mae(oz_preds, oz_labels)
    elif args.task == "alignment":
        probes = ProbeSet.from_json(Path(args.probes).read_text(encoding="utf-8"))
        spectrum = corpus_mod.read_spectrum(Path(args.spectra), args.program_id)
        rep = probe_alignment_report(
            spectrum, args.top5.split(","), probes,
            key_feature_index=cfg.key_feature_index,
        )
        report.update({
            "program_id": args.program_id,
            "most_reactive_probe": rep.most_reactive_probe,
            "reaction_strength": rep.reaction_strength,
            "per_pass_counts": rep.per_pass_counts,
            "total_aligned": rep.total_aligned,
        })
    else:
        print(f"error: unknown eval task {args.task!r}", file=sys.stderr)
        return 1

    write_report(report, args.report)
    print(json.dumps(report, sort_keys=True, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spectrum-forge")
    ap.add_argument("--config", help="TOML or JSON run config")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--jobs", type=int)
    ap.add_argument("--mock-optimizer", action="store_true",
                    help="use the bundled deterministic mock optimizer")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("features", help="extract Autophase/InstCount per file")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("build-probes", help="cluster corpus and tune probes")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("spectrum", help="compute behavioral spectra")
    p.add_argument("--corpus", required=True)
    p.add_argument("--probes", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("train-codebook", help="train the PQ codebook")
    p.add_argument("--spectra", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("encode", help="encode spectra to compositional codes")
    p.add_argument("--spectra", required=True)
    p.add_argument("--codebook", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("labels", help="derive best-pass and -Oz labels")
    p.add_argument("--corpus")
    p.add_argument("--manifest")
    p.add_argument("--out", required=True)

    p = sub.add_parser("dataset", help="materialize the full dataset")
    p.add_argument("--corpus")
    p.add_argument("--manifest")
    p.add_argument("--probes", required=True)
    p.add_argument("--codebook", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("eval", help="metrics, knn probe, alignment report")
    p.add_argument("--task", required=True, choices=["knn", "metrics", "alignment"])
    p.add_argument("--labels", required=True)
    p.add_argument("--embeddings")
    p.add_argument("--preds")
    p.add_argument("--probes")
    p.add_argument("--spectra")
    p.add_argument("--program-id", dest="program_id")
    p.add_argument("--top5", help="comma-separated top-5 pass names")
    p.add_argument("--report", required=True)

    return ap


_COMMANDS = {
    "features": cmd_features,
    "build-probes": cmd_build_probes,
    "spectrum": cmd_spectrum,
    "train-codebook": cmd_train_codebook,
    "encode": cmd_encode,
    "labels": cmd_labels,
    "dataset": cmd_dataset,
    "eval": cmd_eval,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {"seed": args.seed, "jobs": args.jobs}
    if args.mock_optimizer:
        overrides["use_mock_optimizer"] = True
    try:
        cfg = load_config(args.config, overrides)
        return _COMMANDS[args.command](cfg, args)
    except SpectrumForgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
