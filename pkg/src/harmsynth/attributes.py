"""Attribute extraction and the running index of harmful themes.

Each seed example contributes zero or more tagged attributes (a short
label plus the model's confidence). An attribute only enters the prompt
pool if a uniform draw clears its confidence, capped by ``p_max`` so no
tag is ever a certainty. Retained tags feed a cross-round theme index
that later drives style refinement.
"""

import json
from dataclasses import dataclass, field

from harmsynth.backend import GenerationRequest

__all__ = [
    "Attribute",
    "parse_attributes",
    "build_extraction_prompt",
    "extract_attributes",
    "gate_attribute",
    "ThemeEntry",
    "ThemeIndex",
    "pick_refinement_theme",
]

EXTRACTION_SYSTEM = (
    "You label short social-media posts for a content-safety research "
    "pipeline. Answer only in the requested JSON shape."
)

EXTRACTION_USER = (
    "Identify the salient rhetorical attributes of the post below: tone, "
    "target framing, slang or irony markers, and anything else that makes "
    "it characteristic. Reply with a JSON array of objects, each "
    '{{"tag": <short lowercase label>, "confidence": <0..1>}}.\n\n'
    "Post:\n{text}"
)


def _clamp01(x: float) -> float:
    if x < 0.0:
        return 0.0
    if x > 1.0:
        return 1.0
    return x


@dataclass(frozen=True)
class Attribute:
    """One extracted trait; confidence is clamped into [0, 1] on build."""

    tag: str
    confidence: float
    source_example_id: str

    def __post_init__(self):
        if not self.tag:
            raise ValueError("attribute tag must be non-empty")
        object.__setattr__(self, "confidence", _clamp01(float(self.confidence)))


def parse_attributes(text: str, source_example_id: str) -> list[Attribute] | None:
    """Pull the attribute array out of a model reply.

    The array may be wrapped in prose, so everything outside the
    outermost brackets is ignored. Returns None when no valid JSON array
    is found; entries without a usable tag or confidence are dropped
    rather than failing the whole reply.
    """
    start = text.find("[")
    end = text.rfind("]")
    if start == -1 or end <= start:
        return None
    try:
        raw = json.loads(text[start : end + 1])
    except json.JSONDecodeError:
        return None
    if not isinstance(raw, list):
        return None
    out = []
    for entry in raw:
        if not isinstance(entry, dict):
            continue
        tag = entry.get("tag")
        conf = entry.get("confidence")
        if not isinstance(tag, str) or not tag.strip():
            continue
        if not isinstance(conf, (int, float)) or isinstance(conf, bool):
            continue
        out.append(
            Attribute(
                tag=tag.strip().lower(),
                confidence=float(conf),
                source_example_id=source_example_id,
            )
        )
    return out


def build_extraction_prompt(text: str) -> GenerationRequest:
    return GenerationRequest(
        system_text=EXTRACTION_SYSTEM,
        user_text=EXTRACTION_USER.format(text=text),
        tag="extract_attributes",
    )


def extract_attributes(example, backend) -> tuple[list[Attribute], str | None]:
    """Ask the backend for an example's attributes.

    Returns (attributes, None) on success and ([], failure_kind) when the
    call fails or the reply does not parse; the caller charges the
    failure to the extraction stage.
    """
    resp = backend.generate(build_extraction_prompt(example.text))
    if not resp.ok:
        return [], resp.failure_kind
    attrs = parse_attributes(resp.text, example.id)
    if attrs is None:
        return [], "malformed"
    return attrs, None


def gate_attribute(attr: Attribute, rng_draw: float, p_max: float = 0.95) -> bool:
    """Keep an attribute iff the draw clears min(confidence, p_max)."""
    return rng_draw < min(attr.confidence, p_max)


@dataclass
class ThemeEntry:
    count: int
    first_seen_round: int


@dataclass
class ThemeIndex:
    """Counts of retained attribute tags across the whole run."""

    entries: dict[str, ThemeEntry] = field(default_factory=dict)

    def update(self, tags, round_number: int) -> None:
        for tag in tags:
            entry = self.entries.get(tag)
            if entry is None:
                self.entries[tag] = ThemeEntry(count=1, first_seen_round=round_number)
            else:
                entry.count += 1

    def themes(self) -> list[str]:
        """Themes ordered by falling count, then first appearance, then name."""
        return sorted(
            self.entries,
            key=lambda t: (
                -self.entries[t].count,
                self.entries[t].first_seen_round,
                t,
            ),
        )

    def snapshot(self) -> dict[str, dict]:
        return {
            t: {
                "count": self.entries[t].count,
                "first_seen_round": self.entries[t].first_seen_round,
            }
            for t in self.themes()
        }

    def save_jsonl(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for theme in self.themes():
                entry = self.entries[theme]
                fh.write(
                    json.dumps(
                        {
                            "count": entry.count,
                            "first_seen_round": entry.first_seen_round,
                            "theme": theme,
                        },
                        sort_keys=True,
                        ensure_ascii=False,
                    )
                    + "\n"
                )

    @classmethod
    def load_jsonl(cls, path) -> "ThemeIndex":
        index = cls()
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                row = json.loads(line)
                index.entries[row["theme"]] = ThemeEntry(
                    count=int(row["count"]),
                    first_seen_round=int(row["first_seen_round"]),
                )
        return index


def pick_refinement_theme(
    index: ThemeIndex, exclude: set[str], u: float
) -> str | None:
    """Choose a refinement target different from a record's own tags.

    Falls back to the full theme list when every theme is excluded, and
    to None when the index is empty. ``u`` is a uniform draw in [0, 1).
    """
    ordered = index.themes()
    if not ordered:
        return None
    candidates = [t for t in ordered if t not in exclude] or ordered
    k = int(u * len(candidates))
    if k >= len(candidates):
        k = len(candidates) - 1
    return candidates[k]
