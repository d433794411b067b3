import json

import pytest

from harmsynth.backend import default_script_path
from harmsynth.corpus import Corpus, Example, Label


def build_corpus(n_harmful: int, n_nonharmful: int, name: str = "toy") -> Corpus:
    examples = []
    for i in range(n_harmful):
        examples.append(
            Example(
                id=f"h-{i:05d}",
                text=f"hostile post number {i} about [group] behavior in area {i % 17}",
                label=Label.HARMFUL,
                source=name,
            )
        )
    for i in range(n_nonharmful):
        examples.append(
            Example(
                id=f"n-{i:05d}",
                text=f"pleasant post number {i} about gardens and weather in region {i % 13}",
                label=Label.NON_HARMFUL,
                source=name,
            )
        )
    return Corpus(examples, name=name)


@pytest.fixture
def toy_corpus() -> Corpus:
    return build_corpus(300, 200)


def _script_with_rates(rate: float, kind: str = "malformed") -> list[dict]:
    with open(default_script_path(), encoding="utf-8") as fh:
        script = json.load(fh)
    for rule in script:
        rule["failure_rate"] = rate
        if rate > 0.0:
            rule["failure_kind"] = kind
    return script


@pytest.fixture(scope="session")
def zero_failure_script(tmp_path_factory) -> str:
    path = tmp_path_factory.mktemp("scripts") / "zero_fail.json"
    path.write_text(json.dumps(_script_with_rates(0.0)))
    return str(path)


@pytest.fixture(scope="session")
def all_fail_script_factory(tmp_path_factory):
    """Scripts whose synthesize rule always fails with a chosen kind."""

    def make(kind: str) -> str:
        with open(default_script_path(), encoding="utf-8") as fh:
            script = json.load(fh)
        for rule in script:
            if rule["tag"] == "synthesize":
                rule["mode"] = "text"
                rule["failure_rate"] = 1.0
                rule["failure_kind"] = kind
            else:
                rule["failure_rate"] = 0.0
        path = tmp_path_factory.mktemp("scripts") / f"all_fail_{kind}.json"
        path.write_text(json.dumps(script))
        return str(path)

    return make
