"""`pqbert` command line: pretrain, embed, and train downstream heads.

All subcommands read the interchange files produced by the
representation pipeline and never import it as a library.
"""

import argparse
import json
import sys

import numpy as np

from .config import load_config
from .data import (
    load_embeddings,
    read_codes,
    read_labels,
    save_embeddings,
    write_report,
)
from .errors import PqBertError
from .model import program_embedding
from .train import (
    load_checkpoint,
    predict_ranked,
    predict_values,
    pretrain,
    save_checkpoint,
    train_head_classification,
    train_head_regression,
)


def cmd_pretrain(args) -> int:
    cfg = load_config(args.config, {"seed": args.seed})
    _, codes, validity = read_codes(args.codes)
    model, history = pretrain(codes, cfg, validity=validity,
                              max_steps=args.max_steps)
    save_checkpoint(model, args.out, codes,
                    extra={"steps": history["steps"],
                           "final_loss": history["losses"][-1]})
    print(json.dumps({"steps": history["steps"],
                      "final_loss": history["losses"][-1]}))
    return 0


def cmd_embed(args) -> int:
    model, _ = load_checkpoint(args.checkpoint)
    ids, codes, validity = read_codes(args.codes)
    vectors = np.stack([
        program_embedding(model, codes[i], validity[i])
        for i in range(len(ids))
    ])
    save_embeddings(ids, vectors, args.out)
    return 0


def _split_arrays(args):
    ids, vectors = load_embeddings(args.embeddings)
    labels = read_labels(args.labels)
    train_idx = [i for i, pid in enumerate(ids)
                 if labels[pid]["split"] in ("train", "val")]
    test_idx = [i for i, pid in enumerate(ids) if labels[pid]["split"] == "test"]
    return ids, vectors, labels, train_idx, test_idx or train_idx


def cmd_head_cls(args) -> int:
    ids, vectors, labels, train_idx, test_idx = _split_arrays(args)
    y = np.array([labels[pid]["best_pass_id"] for pid in ids])
    head, metrics = train_head_classification(
        vectors[train_idx], y[train_idx],
        epochs=args.epochs, lr=args.lr, seed=args.seed or 0,
    )
    ranked = predict_ranked(head, vectors[test_idx])
    truth = y[test_idx]
    k5 = min(5, ranked.shape[1])
    report = {
        "task": "best-pass-classification",
        "train_top1": metrics["train_top1"],
        "top1": float((ranked[:, 0] == truth).mean() * 100.0),
        "top5": float(np.mean([truth[i] in ranked[i, :k5]
                               for i in range(len(truth))]) * 100.0),
        "n_train": len(train_idx),
        "n_test": len(test_idx),
    }
    write_report(report, args.report)
    print(json.dumps(report, sort_keys=True, indent=2))
    return 0


def cmd_head_reg(args) -> int:
    ids, vectors, labels, train_idx, test_idx = _split_arrays(args)
    y = np.array([labels[pid]["oz_benefit_pct"] for pid in ids], dtype=np.float64)
    head, metrics = train_head_regression(
        vectors[train_idx], y[train_idx],
        epochs=args.epochs, lr=args.lr, seed=args.seed or 0,
    )
    preds = predict_values(head, vectors[test_idx])
    report = {
        "task": "oz-benefit-regression",
        "train_mae": metrics["train_mae"],
        "mae": float(np.abs(preds - y[test_idx]).mean()),
        "n_train": len(train_idx),
        "n_test": len(test_idx),
    }
    write_report(report, args.report)
    print(json.dumps(report, sort_keys=True, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pqbert")
    ap.add_argument("--config", help="TOML or JSON model config")
    ap.add_argument("--seed", type=int)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pretrain", help="masked-prediction pretraining")
    p.add_argument("--codes", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--max-steps", type=int, dest="max_steps")

    p = sub.add_parser("embed", help="export program embeddings")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--codes", required=True)
    p.add_argument("--out", required=True)

    for name in ("head-cls", "head-reg"):
        p = sub.add_parser(name, help=f"train the {name.split('-')[1]} head")
        p.add_argument("--embeddings", required=True)
        p.add_argument("--labels", required=True)
        p.add_argument("--report", required=True)
        p.add_argument("--epochs", type=int, default=100)
        p.add_argument("--lr", type=float, default=1e-4)

    return ap


_COMMANDS = {
    "pretrain": cmd_pretrain,
    "embed": cmd_embed,
    "head-cls": cmd_head_cls,
    "head-reg": cmd_head_reg,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except PqBertError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
