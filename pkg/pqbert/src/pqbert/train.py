"""Pretraining loop, checkpoints, and the downstream prediction heads."""

from pathlib import Path

import numpy as np
import torch
from torch import nn

from .config import PqBertConfig
from .data import corpus_hash
from .errors import DataMismatch
from .masking import corrupt, sample_mask_plan
from .model import PqBert, batch_mlm_loss

CHECKPOINT_FORMAT_VERSION = 1

N_PASS_CLASSES = 124


def _check_dataset(codes: np.ndarray, cfg: PqBertConfig) -> None:
    if codes.ndim != 3:
        raise DataMismatch(f"expected (N, P, M) ids, got shape {codes.shape}")
    n, p, m = codes.shape
    if (p, m) != (cfg.P, cfg.M):
        raise DataMismatch(
            f"dataset is ({p}, {m}) per program but config expects "
            f"({cfg.P}, {cfg.M})"
        )
    if codes.size and (codes.min() < 0 or codes.max() >= cfg.k_star):
        raise DataMismatch(f"code ids must lie in [0, {cfg.k_star})")


def pretrain(
    codes: np.ndarray,
    cfg: PqBertConfig,
    validity: np.ndarray | None = None,
    max_steps: int | None = None,
    eval_codes: np.ndarray | None = None,
) -> tuple[PqBert, dict]:
    """Seeded masked-prediction training over (N, P, M) code arrays.

    Returns the model and a history dict with per-step losses and, when
    eval_codes is given, periodic held-out masked accuracy.
    """
    codes = np.asarray(codes, dtype=np.int64)
    _check_dataset(codes, cfg)
    torch.manual_seed(cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    model = PqBert(cfg)
    opt = torch.optim.Adam(model.parameters(), lr=cfg.lr)

    n = codes.shape[0]
    losses: list[float] = []
    accuracies: list[float] = []
    step = 0
    done = False
    model.train()
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch_idx = order[start:start + cfg.batch_size]
            batch = codes[batch_idx]
            corrupted = np.empty_like(batch)
            selected = np.zeros(batch.shape, dtype=bool)
            for b in range(len(batch)):
                plan = sample_mask_plan(
                    cfg.P, cfg.M, cfg.k_star, rng,
                    mask_ratio=cfg.mask_ratio,
                    mask_token_frac=cfg.mask_token_frac,
                    random_frac=cfg.random_frac,
                )
                corrupted[b] = corrupt(batch[b], plan, cfg.mask_id)
                selected[b] = plan.selected
                if cfg.exclude_invalid_in_training and validity is not None:
                    selected[b] &= validity[batch_idx[b]][:, None]
            if not selected.any():
                continue
            loss = batch_mlm_loss(model, batch, corrupted, selected)
            opt.zero_grad()
            loss.backward()
            opt.step()
            losses.append(float(loss.detach()))
            step += 1
            if eval_codes is not None and step % 25 == 0:
                accuracies.append(masked_accuracy(model, eval_codes, seed=step))
                model.train()
            if max_steps is not None and step >= max_steps:
                done = True
                break
        if done:
            break
    history = {"losses": losses, "eval_accuracy": accuracies, "steps": step}
    return model, history


def masked_accuracy(model: PqBert, codes: np.ndarray, seed: int = 0) -> float:
    """Fraction of masked positions whose argmax prediction recovers the
    original id, over freshly sampled plans."""
    cfg = model.cfg
    codes = np.asarray(codes, dtype=np.int64)
    rng = np.random.default_rng(seed)
    model.eval()
    correct = total = 0
    with torch.no_grad():
        for seq in codes:
            plan = sample_mask_plan(cfg.P, cfg.M, cfg.k_star, rng,
                                    mask_ratio=cfg.mask_ratio)
            states = model.encode(corrupt(seq, plan, cfg.mask_id)[None, :, :])
            for i, logits in enumerate(model.head_logits(states)):
                mask = plan.selected[:, i]
                if not mask.any():
                    continue
                pred = logits[0, mask].argmax(dim=-1).numpy()
                truth = seq[mask, i]
                correct += int((pred == truth).sum())
                total += int(mask.sum())
    return correct / max(1, total)


def save_checkpoint(model: PqBert, path: str | Path, codes: np.ndarray,
                    extra: dict | None = None) -> None:
    torch.save(
        {
            "format_version": CHECKPOINT_FORMAT_VERSION,
            "config": model.cfg.to_dict(),
            "corpus_hash": corpus_hash(np.asarray(codes, dtype=np.int64)),
            "state_dict": model.state_dict(),
            "extra": extra or {},
        },
        path,
    )


def load_checkpoint(path: str | Path) -> tuple[PqBert, dict]:
    doc = torch.load(path, map_location="cpu", weights_only=False)
    if doc.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        raise DataMismatch("unsupported checkpoint format")
    cfg = PqBertConfig(**doc["config"])
    model = PqBert(cfg)
    model.load_state_dict(doc["state_dict"])
    model.eval()
    meta = {"corpus_hash": doc["corpus_hash"], "extra": doc["extra"]}
    return model, meta


def make_classification_head(in_dim: int, n_classes: int = N_PASS_CLASSES) -> nn.Module:
    return nn.Sequential(
        nn.Linear(in_dim, 512),
        nn.ReLU(),
        nn.Linear(512, 256),
        nn.ReLU(),
        nn.Linear(256, n_classes),
    )


def make_regression_head(in_dim: int) -> nn.Module:
    # Widths shrink stepwise from the embedding down to a scalar.
    dims = [in_dim, 128, 64, 32, 1]
    layers: list[nn.Module] = []
    for a, b in zip(dims[:-1], dims[1:]):
        layers.append(nn.Linear(a, b))
        if b != 1:
            layers.append(nn.ReLU())
    return nn.Sequential(*layers)


def _fit(head: nn.Module, x: torch.Tensor, y: torch.Tensor, loss_fn,
         epochs: int, lr: float, batch_size: int, seed: int) -> list[float]:
    rng = np.random.default_rng(seed)
    opt = torch.optim.Adam(head.parameters(), lr=lr)
    history = []
    n = x.shape[0]
    for _ in range(epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            loss = loss_fn(head(x[idx]), y[idx])
            opt.zero_grad()
            loss.backward()
            opt.step()
            epoch_loss += float(loss.detach()) * len(idx)
        history.append(epoch_loss / n)
    return history


def train_head_classification(
    embeddings: np.ndarray,
    labels: np.ndarray,
    n_classes: int = N_PASS_CLASSES,
    epochs: int = 100,
    lr: float = 1e-4,
    batch_size: int = 128,
    seed: int = 0,
) -> tuple[nn.Module, dict]:
    torch.manual_seed(seed)
    x = torch.from_numpy(np.asarray(embeddings, dtype=np.float32))
    y = torch.from_numpy(np.asarray(labels, dtype=np.int64))
    head = make_classification_head(x.shape[1], n_classes)
    history = _fit(head, x, y, nn.functional.cross_entropy,
                   epochs, lr, batch_size, seed)
    ranked = predict_ranked(head, embeddings)
    top1 = float((ranked[:, 0] == labels).mean() * 100.0)
    top5 = float(np.mean([labels[i] in ranked[i, :5] for i in range(len(labels))])
                 * 100.0)
    return head, {"loss_history": history, "train_top1": top1, "train_top5": top5}


def predict_ranked(head: nn.Module, embeddings: np.ndarray) -> np.ndarray:
    head.eval()
    with torch.no_grad():
        logits = head(torch.from_numpy(np.asarray(embeddings, dtype=np.float32)))
    return torch.argsort(logits, dim=1, descending=True).numpy()


def train_head_regression(
    embeddings: np.ndarray,
    targets: np.ndarray,
    epochs: int = 100,
    lr: float = 1e-4,
    batch_size: int = 128,
    seed: int = 0,
) -> tuple[nn.Module, dict]:
    torch.manual_seed(seed)
    x = torch.from_numpy(np.asarray(embeddings, dtype=np.float32))
    y = torch.from_numpy(np.asarray(targets, dtype=np.float32)).reshape(-1, 1)
    head = make_regression_head(x.shape[1])
    history = _fit(head, x, y, nn.functional.l1_loss,
                   epochs, lr, batch_size, seed)
    preds = predict_values(head, embeddings)
    mae = float(np.abs(preds - np.asarray(targets, dtype=np.float64)).mean())
    return head, {"loss_history": history, "train_mae": mae}


def predict_values(head: nn.Module, embeddings: np.ndarray) -> np.ndarray:
    head.eval()
    with torch.no_grad():
        out = head(torch.from_numpy(np.asarray(embeddings, dtype=np.float32)))
    return out.reshape(-1).numpy().astype(np.float64)
