"""Canonical corpus loading and the hash-bucket tokenizer.

The input contract is one JSON object per line with exactly the fields
the corpus tools emit: id, text, label (0/1), source, split. Validation
is strict and runs before any model exists, so a bad file can never
waste a training run.
"""

import json
import zlib
from dataclasses import dataclass

from harmtrainer.errors import SchemaError

REQUIRED_FIELDS = ("id", "text", "label", "source", "split")
SPLITS = ("train", "val", "test", "unassigned")

PAD_ID = 0


@dataclass(frozen=True)
class Row:
    id: str
    text: str
    label: int


def load_rows(path) -> list[Row]:
    """Read and validate one canonical JSONL file, preserving order."""
    rows = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}: line {line_no}: invalid JSON: {exc}")
            if not isinstance(obj, dict):
                raise SchemaError(f"{path}: line {line_no}: row is not an object")
            missing = [k for k in REQUIRED_FIELDS if k not in obj]
            if missing:
                raise SchemaError(
                    f"{path}: line {line_no}: missing fields {missing}"
                )
            if obj["label"] not in (0, 1) or isinstance(obj["label"], bool):
                raise SchemaError(
                    f"{path}: line {line_no}: label must be 0 or 1, "
                    f"got {obj['label']!r}"
                )
            if obj["split"] not in SPLITS:
                raise SchemaError(
                    f"{path}: line {line_no}: unknown split {obj['split']!r}"
                )
            text = str(obj["text"])
            if not text.strip():
                raise SchemaError(f"{path}: line {line_no}: empty text")
            row_id = str(obj["id"])
            if row_id in seen:
                raise SchemaError(f"{path}: line {line_no}: duplicate id {row_id!r}")
            seen.add(row_id)
            rows.append(Row(id=row_id, text=text, label=int(obj["label"])))
    if not rows:
        raise SchemaError(f"{path}: no rows")
    return rows


def encode(text: str, vocab_size: int, max_len: int) -> list[int]:
    """Token ids for one text: crc32 buckets, id 0 reserved for padding."""
    ids = []
    for token in text.lower().split():
        bucket = zlib.crc32(token.encode("utf-8")) % (vocab_size - 1) + 1
        ids.append(bucket)
        if len(ids) == max_len:
            break
    if not ids:
        ids = [1]
    return ids + [PAD_ID] * (max_len - len(ids))
