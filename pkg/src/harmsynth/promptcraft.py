"""Seed-batch sampling and prompt assembly for the synthesis loop.

Each round draws roughly a tenth of the seed pool, samples five style
indicators that are each independently masked or given a concrete
value, and folds both into one prompt that asks for a fixed number of
candidates back as a numbered list.
"""

import re
from dataclasses import dataclass
from importlib import resources
from math import ceil

from harmsynth.corpus import Example
from harmsynth.errors import TemplateError
from harmsynth.noise import NoiseDraw

__all__ = [
    "IndicatorDomains",
    "IndicatorSet",
    "SeedMember",
    "SeedBatch",
    "SynthesisPrompt",
    "seed_batch_size",
    "sample_seed_batch",
    "sample_indicators",
    "indicator_clauses",
    "load_template",
    "default_template_path",
    "assemble_prompt",
    "parse_numbered_list",
]

DEFAULT_COUNTRIES = ("United States", "United Kingdom", "India", "Australia")
DEFAULT_YEARS = tuple(range(2015, 2025))

TONE_VALUES = ("intensify", "weaken")
SWEAR_VALUES = ("increase", "avoid")
IRONY_VALUES = ("use", "avoid")

PLACEHOLDERS = ("{instruction}", "{seeds}", "{attributes}", "{indicators}")

SYNTHESIS_SYSTEM = (
    "You write synthetic training examples for a content-safety "
    "classifier. The material is deliberately unpleasant because the "
    "classifier must learn to recognize it. Follow the format exactly."
)

_INSTRUCTION = (
    "Study the seed posts below, then write exactly {count} new posts of "
    "the same kind: same register, same intent, new wording and new "
    "specifics. Answer only with a numbered list, one post per item, "
    'formatted "1. <post>".'
)


@dataclass(frozen=True)
class IndicatorDomains:
    """Value domains for the five indicators plus the masking probability."""

    countries: tuple[str, ...] = DEFAULT_COUNTRIES
    years: tuple[int, ...] = DEFAULT_YEARS
    mask_p: float = 0.5

    def __post_init__(self):
        if not self.countries:
            raise ValueError("country domain must be non-empty")
        if not self.years:
            raise ValueError("year domain must be non-empty")
        if not 0.0 <= self.mask_p <= 1.0:
            raise ValueError("mask_p must be in [0, 1]")


@dataclass(frozen=True)
class IndicatorSet:
    """Five style dials; None means the indicator is masked this round."""

    tone: str | None = None
    swear: str | None = None
    irony: str | None = None
    country: str | None = None
    year: int | None = None

    def __post_init__(self):
        if self.tone is not None and self.tone not in TONE_VALUES:
            raise ValueError(f"bad tone value: {self.tone!r}")
        if self.swear is not None and self.swear not in SWEAR_VALUES:
            raise ValueError(f"bad swear value: {self.swear!r}")
        if self.irony is not None and self.irony not in IRONY_VALUES:
            raise ValueError(f"bad irony value: {self.irony!r}")

    def to_dict(self) -> dict:
        return {
            "tone": self.tone,
            "swear": self.swear,
            "irony": self.irony,
            "country": self.country,
            "year": self.year,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "IndicatorSet":
        return cls(
            tone=d.get("tone"),
            swear=d.get("swear"),
            irony=d.get("irony"),
            country=d.get("country"),
            year=d.get("year"),
        )


@dataclass(frozen=True)
class SeedMember:
    example: Example
    tags: tuple[str, ...] = ()


@dataclass(frozen=True)
class SeedBatch:
    members: tuple[SeedMember, ...]
    round_number: int


@dataclass(frozen=True)
class SynthesisPrompt:
    system_text: str
    user_text: str
    indicator_set: IndicatorSet
    seed_ids: tuple[str, ...]


def seed_batch_size(pool_size: int) -> int:
    # ceil(pool/10) in integers, floored at one so tiny pools still seed.
    return max(1, -(-pool_size // 10))


def sample_seed_batch(
    pool: list[SeedMember], noise: NoiseDraw, round_number: int
) -> SeedBatch:
    """Draw the round's seed batch uniformly without replacement."""
    if not pool:
        raise ValueError("seed pool is empty")
    size = seed_batch_size(len(pool))
    members = tuple(noise.sample(pool, size))
    return SeedBatch(members=members, round_number=round_number)


def sample_indicators(noise: NoiseDraw, domains: IndicatorDomains) -> IndicatorSet:
    """Mask or value each indicator from its own substream.

    The first uniform per indicator decides masking; value draws come
    after it, so masked and unmasked paths consume from independent
    streams and one indicator's outcome can never shift another's.
    """

    def draw(name: str, values):
        sub = noise.substream("indicator", name)
        if sub.uniform() < domains.mask_p:
            return None
        return sub.choice(values)

    return IndicatorSet(
        tone=draw("tone", TONE_VALUES),
        swear=draw("swear", SWEAR_VALUES),
        irony=draw("irony", IRONY_VALUES),
        country=draw("country", domains.countries),
        year=draw("year", domains.years),
    )


def indicator_clauses(indicators: IndicatorSet) -> list[str]:
    """One directive sentence per unmasked indicator, fixed order."""
    clauses = []
    if indicators.tone == "intensify":
        clauses.append("Make the tone noticeably harsher than the seed posts.")
    elif indicators.tone == "weaken":
        clauses.append("Keep the tone milder than the seed posts.")
    if indicators.swear == "increase":
        clauses.append("Use more swear words than the seed posts do.")
    elif indicators.swear == "avoid":
        clauses.append("Do not use any swear words.")
    if indicators.irony == "use":
        clauses.append("Lean on irony and sarcasm.")
    elif indicators.irony == "avoid":
        clauses.append("Stay literal; no irony or sarcasm.")
    if indicators.country is not None:
        clauses.append(f"Ground the posts in {indicators.country}.")
    if indicators.year is not None:
        clauses.append(f"Write as if posted in {indicators.year}.")
    return clauses


def default_template_path() -> str:
    return str(resources.files("harmsynth") / "templates" / "synthesis_prompt.txt")


def load_template(path=None) -> str:
    with open(path or default_template_path(), encoding="utf-8") as fh:
        return fh.read()


def assemble_prompt(
    batch: SeedBatch,
    indicators: IndicatorSet,
    template: str,
    count: int,
) -> SynthesisPrompt:
    """Fill the template and return the round's generation prompt.

    ``count`` is the number of candidates requested; it is spelled out
    as "exactly N" so downstream parsing knows how many slots to expect.
    """
    if not batch.members:
        raise ValueError("seed batch is empty")
    if count < 1:
        raise ValueError("count must be positive")
    for ph in PLACEHOLDERS:
        if ph not in template:
            raise TemplateError(f"template missing placeholder {ph}")

    seed_lines = ["Seed posts:"]
    for i, member in enumerate(batch.members, start=1):
        tags = ", ".join(member.tags) if member.tags else "none"
        seed_lines.append(f"{i}. {member.example.text}")
        seed_lines.append(f"   tags: {tags}")

    all_tags = sorted({t for m in batch.members for t in m.tags})
    attr_text = (
        "Attributes to preserve: " + ", ".join(all_tags)
        if all_tags
        else "Attributes to preserve: none recorded"
    )

    clauses = indicator_clauses(indicators)
    ind_text = "Style requirements:\n" + "\n".join(clauses) if clauses else ""

    user_text = (
        template.replace("{instruction}", _INSTRUCTION.format(count=count))
        .replace("{seeds}", "\n".join(seed_lines))
        .replace("{attributes}", attr_text)
        .replace("{indicators}", ind_text)
        .rstrip()
        + "\n"
    )
    return SynthesisPrompt(
        system_text=SYNTHESIS_SYSTEM,
        user_text=user_text,
        indicator_set=indicators,
        seed_ids=tuple(m.example.id for m in batch.members),
    )


_NUMBERED = re.compile(r"^\s*(\d+)\.\s*(.*\S)?\s*$")


def parse_numbered_list(text: str, expected: int) -> list[str | None]:
    """Read "i. text" lines into positional slots 1..expected.

    Slots that never appear, appear bare, or carry indices outside the
    range stay None; the first occurrence of an index wins. Length is
    always ``expected`` so the caller can charge each empty slot as one
    malformed generation.
    """
    slots: list[str | None] = [None] * expected
    seen = set()
    for line in text.splitlines():
        m = _NUMBERED.match(line)
        if not m:
            continue
        idx = int(m.group(1))
        if not 1 <= idx <= expected or idx in seen:
            continue
        seen.add(idx)
        slots[idx - 1] = m.group(2) or None
    return slots
