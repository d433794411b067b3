"""Fine-tune on a canonical corpus and write a prediction file.

The output is one JSON object per eval row, in file order:
{"id": ..., "y_true": 0/1, "y_pred": 0/1, "p1": probability of class 1}
with y_pred = [p1 >= 0.5] by construction.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import torch
from torch import nn

from harmtrainer.config import TrainConfig
from harmtrainer.data import Row, encode, load_rows
from harmtrainer.model import CompactClassifier

__all__ = ["TrainResult", "train_and_predict", "macro_f1"]


@dataclass(frozen=True)
class TrainResult:
    preds_path: str
    n_train: int
    n_eval: int
    steps: int
    final_loss: float
    macro_f1: float


def _tensorize(rows: list[Row], config: TrainConfig) -> tuple[torch.Tensor, torch.Tensor]:
    ids = torch.tensor(
        [encode(r.text, config.vocab_size, config.max_len) for r in rows],
        dtype=torch.long,
    )
    labels = torch.tensor([r.label for r in rows], dtype=torch.long)
    return ids, labels


def _lr_at(step: int, total_steps: int, config: TrainConfig) -> float:
    # linear warmup to the configured rate, then linear decay to zero
    if config.warmup_steps and step < config.warmup_steps:
        return config.learning_rate * (step + 1) / config.warmup_steps
    if total_steps <= config.warmup_steps:
        return config.learning_rate
    remaining = total_steps - step
    span = total_steps - config.warmup_steps
    return config.learning_rate * max(0.0, remaining / span)


def macro_f1(y_true: list[int], y_pred: list[int]) -> float:
    """Mean of the two per-class F1 scores, 0/0 counted as 0."""
    f1s = []
    for cls in (0, 1):
        tp = sum(1 for t, p in zip(y_true, y_pred) if p == cls and t == cls)
        fp = sum(1 for t, p in zip(y_true, y_pred) if p == cls and t != cls)
        fn = sum(1 for t, p in zip(y_true, y_pred) if p != cls and t == cls)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1s.append(
            2.0 * precision * recall / (precision + recall)
            if precision + recall
            else 0.0
        )
    return sum(f1s) / 2.0


def train_and_predict(config: TrainConfig) -> TrainResult:
    # both files are validated in full before any model work starts
    train_rows = load_rows(config.train_path)
    eval_rows = load_rows(config.eval_path)

    torch.manual_seed(config.seed)
    model = CompactClassifier(
        vocab_size=config.vocab_size,
        max_len=config.max_len,
        dim=config.dim,
        layers=config.layers,
        heads=config.heads,
    )
    optimizer = torch.optim.AdamW(model.parameters(), lr=config.learning_rate)
    loss_fn = nn.CrossEntropyLoss()

    train_ids, train_labels = _tensorize(train_rows, config)
    n = len(train_rows)
    steps_per_epoch = (n + config.batch - 1) // config.batch
    total_steps = steps_per_epoch * config.epochs
    shuffler = torch.Generator().manual_seed(config.seed)

    model.train()
    step = 0
    final_loss = 0.0
    for _ in range(config.epochs):
        order = torch.randperm(n, generator=shuffler)
        for start in range(0, n, config.batch):
            batch_idx = order[start : start + config.batch]
            lr = _lr_at(step, total_steps, config)
            for group in optimizer.param_groups:
                group["lr"] = lr
            optimizer.zero_grad()
            logits = model(train_ids[batch_idx])
            loss = loss_fn(logits, train_labels[batch_idx])
            loss.backward()
            optimizer.step()
            final_loss = loss.item()
            step += 1

    model.eval()
    eval_ids, _ = _tensorize(eval_rows, config)
    with torch.no_grad():
        probs = torch.softmax(model(eval_ids), dim=1)[:, 1]

    out_path = Path(config.out_preds_path)
    if out_path.parent != Path(""):
        out_path.parent.mkdir(parents=True, exist_ok=True)
    y_true = [row.label for row in eval_rows]
    y_pred = []
    with open(out_path, "w", encoding="utf-8") as fh:
        for row, p1 in zip(eval_rows, probs.tolist()):
            pred = int(p1 >= 0.5)
            y_pred.append(pred)
            fh.write(
                json.dumps(
                    {"id": row.id, "y_true": row.label, "y_pred": pred, "p1": p1},
                    sort_keys=True,
                )
            )
            fh.write("\n")

    return TrainResult(
        preds_path=str(out_path),
        n_train=n,
        n_eval=len(eval_rows),
        steps=total_steps,
        final_loss=final_loss,
        macro_f1=macro_f1(y_true, y_pred),
    )
