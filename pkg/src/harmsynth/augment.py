"""Post-generation stages: context anchoring, scoring, selection, refinement.

A parsed candidate becomes a SyntheticRecord. It is then wrapped in
generated surrounding context (with one dropout draw deciding which
sides survive), scored 1 to 10 by the judge call, and the top tenth of
the round is rewritten onto a different indexed theme to grow the seed
pool in new directions.
"""

import re
from dataclasses import dataclass, replace

from harmsynth.attributes import ThemeIndex, pick_refinement_theme
from harmsynth.backend import GenerationRequest
from harmsynth.corpus import Label
from harmsynth.noise import NoiseDraw
from harmsynth.promptcraft import IndicatorSet

__all__ = [
    "ContextTriple",
    "SyntheticRecord",
    "DropoutConfig",
    "dropout_outcome",
    "contextual_anchoring",
    "quality_score",
    "select_top_decile",
    "thematic_style_refinement",
    "render_training_text",
]

CONTEXT_SEPARATOR = "<ctx>"


@dataclass(frozen=True)
class ContextTriple:
    core: str
    preceding: str | None = None
    succeeding: str | None = None

    def __post_init__(self):
        if not self.core:
            raise ValueError("context core must be non-empty")


@dataclass(frozen=True)
class SyntheticRecord:
    id: str
    context: ContextTriple
    label: Label
    indicators: IndicatorSet
    attribute_tags: tuple[str, ...]
    round_number: int
    valid: bool
    parent_seed_ids: tuple[str, ...]
    quality: int | None = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "context": {
                "preceding": self.context.preceding,
                "core": self.context.core,
                "succeeding": self.context.succeeding,
            },
            "label": int(self.label),
            "indicators": self.indicators.to_dict(),
            "attribute_tags": list(self.attribute_tags),
            "round": self.round_number,
            "valid": self.valid,
            "parent_seed_ids": list(self.parent_seed_ids),
            "quality": self.quality,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticRecord":
        ctx = d["context"]
        return cls(
            id=d["id"],
            context=ContextTriple(
                core=ctx["core"],
                preceding=ctx.get("preceding"),
                succeeding=ctx.get("succeeding"),
            ),
            label=Label(int(d["label"])),
            indicators=IndicatorSet.from_dict(d["indicators"]),
            attribute_tags=tuple(d.get("attribute_tags", ())),
            round_number=int(d["round"]),
            valid=bool(d["valid"]),
            parent_seed_ids=tuple(d.get("parent_seed_ids", ())),
            quality=d.get("quality"),
        )


@dataclass(frozen=True)
class DropoutConfig:
    """Context dropout distribution; the three outcomes must sum to one."""

    keep_both: float = 0.5
    drop_preceding: float = 0.25
    drop_succeeding: float = 0.25

    def __post_init__(self):
        probs = (self.keep_both, self.drop_preceding, self.drop_succeeding)
        if any(p < 0.0 for p in probs):
            raise ValueError("dropout probabilities must be non-negative")
        if abs(sum(probs) - 1.0) > 1e-9:
            raise ValueError("dropout probabilities must sum to 1")


def dropout_outcome(u: float, config: DropoutConfig) -> str:
    if u < config.keep_both:
        return "keep_both"
    if u < config.keep_both + config.drop_preceding:
        return "drop_preceding"
    return "drop_succeeding"


CONTEXT_SYSTEM = (
    "You extend posts for a content-safety training set with plausible "
    "surrounding conversation. Follow the output format exactly."
)

CONTEXT_USER = (
    "Write one short post that could plausibly appear immediately before "
    "the post below, and one that could appear immediately after it. "
    "Reply with exactly two lines:\nBEFORE: <text>\nAFTER: <text>\n\n"
    "Post:\n{core}"
)

_BEFORE = re.compile(r"^BEFORE:\s*(\S.*)$", re.MULTILINE)
_AFTER = re.compile(r"^AFTER:\s*(\S.*)$", re.MULTILINE)


def contextual_anchoring(
    record: SyntheticRecord,
    backend,
    noise: NoiseDraw,
    config: DropoutConfig = DropoutConfig(),
) -> tuple[SyntheticRecord, str | None]:
    """Generate context for a record's core, then apply one dropout draw.

    The dropout draw is consumed before the backend call so the record's
    randomness does not shift when the call fails. On failure the record
    survives with both sides absent and the failure kind is returned for
    the caller's books.
    """
    outcome = dropout_outcome(noise.uniform(), config)
    resp = backend.generate(
        GenerationRequest(
            system_text=CONTEXT_SYSTEM,
            user_text=CONTEXT_USER.format(core=record.context.core),
            tag="contextualize",
        )
    )
    if not resp.ok:
        return record, resp.failure_kind
    before = _BEFORE.search(resp.text)
    after = _AFTER.search(resp.text)
    if not before or not after:
        return record, "malformed"
    preceding = before.group(1).strip() if outcome != "drop_preceding" else None
    succeeding = after.group(1).strip() if outcome != "drop_succeeding" else None
    return (
        replace(
            record,
            context=ContextTriple(
                core=record.context.core,
                preceding=preceding,
                succeeding=succeeding,
            ),
        ),
        None,
    )


SCORE_SYSTEM = (
    "You judge synthetic training posts for a content-safety dataset: "
    "realism, fluency, and how clearly the post exhibits its category."
)

SCORE_USER = (
    "Rate the overall quality of this synthetic post on an integer scale "
    "from 1 (unusable) to 10 (excellent). Reply with the number only.\n\n"
    "Post:\n{core}"
)

_INT = re.compile(r"-?\d+")


def quality_score(
    record: SyntheticRecord, backend
) -> tuple[SyntheticRecord, str | None]:
    """Attach the judge's 1..10 score; out-of-range replies are clamped.

    A reply with no integer leaves the record unscored (it will rank
    last) and counts as a malformed judge call.
    """
    resp = backend.generate(
        GenerationRequest(
            system_text=SCORE_SYSTEM,
            user_text=SCORE_USER.format(core=record.context.core),
            tag="score_quality",
        )
    )
    if not resp.ok:
        return record, resp.failure_kind
    m = _INT.search(resp.text)
    if not m:
        return record, "malformed"
    score = min(10, max(1, int(m.group())))
    return replace(record, quality=score), None


def select_top_decile(records: list[SyntheticRecord]) -> list[SyntheticRecord]:
    """Keep the best ceil(10%) of the round, ties broken by ascending id.

    Unscored records sort below every scored one, so they are only ever
    chosen when scored records alone cannot fill the quota.
    """
    if not records:
        return []
    quota = min(len(records), -(-len(records) // 10))
    ranked = sorted(
        records,
        key=lambda r: (r.quality is None, -(r.quality or 0), r.id),
    )
    return ranked[:quota]


REFINE_SYSTEM = (
    "You rewrite synthetic training posts for a content-safety dataset, "
    "shifting their theme while keeping register and intensity."
)

REFINE_USER = (
    "Rewrite the post below so that its theme becomes: {theme}. Keep the "
    "register, intensity, and category of the original. Reply with the "
    "rewritten post only.\n\nPost:\n{core}"
)


def thematic_style_refinement(
    record: SyntheticRecord,
    index: ThemeIndex,
    backend,
    noise: NoiseDraw,
    new_id: str,
) -> tuple[SyntheticRecord | None, str | None]:
    """Rewrite a selected record onto a theme it does not already carry.

    The new record's parent chain extends the source record's, and its
    tag set is the target theme, ready to steer later prompts. Returns
    (None, failure_kind) when the backend call fails, and (None, None)
    when the index has no themes to offer.
    """
    theme = pick_refinement_theme(index, set(record.attribute_tags), noise.uniform())
    if theme is None:
        return None, None
    resp = backend.generate(
        GenerationRequest(
            system_text=REFINE_SYSTEM,
            user_text=REFINE_USER.format(theme=theme, core=record.context.core),
            tag="refine_theme",
        )
    )
    if not resp.ok:
        return None, resp.failure_kind
    text = resp.text.strip()
    if not text:
        return None, "malformed"
    return (
        SyntheticRecord(
            id=new_id,
            context=ContextTriple(core=text),
            label=record.label,
            indicators=record.indicators,
            attribute_tags=(theme,),
            round_number=record.round_number,
            valid=True,
            parent_seed_ids=tuple(record.parent_seed_ids) + (record.id,),
        ),
        None,
    )


def render_training_text(record: SyntheticRecord) -> str:
    """Flatten a record to one training string, sides fenced by a marker."""
    parts = [
        p
        for p in (
            record.context.preceding,
            record.context.core,
            record.context.succeeding,
        )
        if p
    ]
    return f"\n{CONTEXT_SEPARATOR}\n".join(parts)
