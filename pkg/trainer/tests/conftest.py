import json

import pytest


def write_corpus(path, n_per_class: int, split: str):
    """A small canonical corpus file with crudely separable classes."""
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(n_per_class):
            fh.write(
                json.dumps(
                    {
                        "id": f"{split}-h-{i}",
                        "text": f"hostile sneering post {i} mocking the group",
                        "label": 1,
                        "source": "toy",
                        "split": split,
                    }
                )
                + "\n"
            )
            fh.write(
                json.dumps(
                    {
                        "id": f"{split}-n-{i}",
                        "text": f"calm friendly post {i} praising the garden",
                        "label": 0,
                        "source": "toy",
                        "split": split,
                    }
                )
                + "\n"
            )
    return path


@pytest.fixture
def corpus_pair(tmp_path):
    train = write_corpus(tmp_path / "train.jsonl", 25, "train")
    evalf = write_corpus(tmp_path / "eval.jsonl", 25, "test")
    return train, evalf
