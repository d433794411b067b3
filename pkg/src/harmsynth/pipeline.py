"""The synthesis loop: seed pool, rounds, accounting, and artifact output.

Each round extracts and gates attributes for fresh pool members, draws a
seed batch and an indicator set, asks the backend for a fixed number of
candidates, then contextualizes, scores, and selects the round's best
for theme refinement back into the pool. The loop stops once enough
valid records exist or the round cap is hit.

Accounting is exact: every round charges the full batch size, and each
of those slots ends up either a valid record or a counted failure.
Whole-call failures charge every slot to the call's failure kind.
"""

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from harmsynth.attributes import ThemeIndex, extract_attributes, gate_attribute
from harmsynth.augment import (
    DropoutConfig,
    ContextTriple,
    SyntheticRecord,
    contextual_anchoring,
    quality_score,
    render_training_text,
    select_top_decile,
    thematic_style_refinement,
)
from harmsynth.backend import GenerationRequest
from harmsynth.corpus import Corpus, Example, Label
from harmsynth.errors import ConfigError, SeedPoolError
from harmsynth.noise import NoiseDraw
from harmsynth.promptcraft import (
    DEFAULT_COUNTRIES,
    DEFAULT_YEARS,
    IndicatorDomains,
    SeedMember,
    assemble_prompt,
    load_template,
    parse_numbered_list,
    sample_indicators,
    sample_seed_batch,
)

__all__ = [
    "PipelineConfig",
    "RoundCounts",
    "RunReport",
    "AugmentedDataset",
    "select_seed_data",
    "run_synthesis",
    "emit",
]

GENERATION_FAILURE_KINDS = ("transport", "rate_limited", "refusal", "malformed")

AUX_STAGES = ("extract_attributes", "contextualize", "score_quality", "refine_theme")


@dataclass(frozen=True)
class PipelineConfig:
    """Everything that decides what a run produces.

    parallelism is deliberately not part of the run identity: it changes
    wall-clock behaviour only, and serialized reports omit it so runs at
    different worker counts stay byte-comparable.
    """

    target_total: int = 1000
    batch_size: int = 100
    refine_rounds: int = 3
    seed_count: int = 200
    master_seed: int = 0
    p_max: float = 0.95
    mask_p: float = 0.5
    keep_both: float = 0.5
    drop_preceding: float = 0.25
    drop_succeeding: float = 0.25
    countries: tuple[str, ...] = DEFAULT_COUNTRIES
    years: tuple[int, ...] = DEFAULT_YEARS
    max_rounds: int | None = None
    template_path: str | None = None
    parallelism: int = 1

    def __post_init__(self):
        if self.target_total < 1:
            raise ConfigError("target_total must be positive")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be positive")
        if self.refine_rounds < 0:
            raise ConfigError("refine_rounds must be non-negative")
        if self.seed_count < 1:
            raise ConfigError("seed_count must be positive")
        if not 0.0 < self.p_max < 1.0:
            raise ConfigError("p_max must be in (0, 1)")
        if not 0.0 < self.mask_p < 1.0:
            raise ConfigError("mask_p must be in (0, 1)")
        if self.parallelism < 1:
            raise ConfigError("parallelism must be positive")
        floor = -(-self.target_total // self.batch_size)
        if self.max_rounds is None:
            # Room for a realistic failure rate without looping forever.
            object.__setattr__(self, "max_rounds", 4 * floor)
        elif self.max_rounds < floor:
            raise ConfigError(
                f"max_rounds={self.max_rounds} cannot reach target_total "
                f"(needs at least {floor})"
            )
        object.__setattr__(self, "countries", tuple(self.countries))
        object.__setattr__(self, "years", tuple(int(y) for y in self.years))

    def dropout(self) -> DropoutConfig:
        return DropoutConfig(
            keep_both=self.keep_both,
            drop_preceding=self.drop_preceding,
            drop_succeeding=self.drop_succeeding,
        )

    def domains(self) -> IndicatorDomains:
        return IndicatorDomains(
            countries=self.countries, years=self.years, mask_p=self.mask_p
        )

    def to_dict(self) -> dict:
        return {
            "target_total": self.target_total,
            "batch_size": self.batch_size,
            "refine_rounds": self.refine_rounds,
            "seed_count": self.seed_count,
            "master_seed": self.master_seed,
            "p_max": self.p_max,
            "mask_p": self.mask_p,
            "keep_both": self.keep_both,
            "drop_preceding": self.drop_preceding,
            "drop_succeeding": self.drop_succeeding,
            "countries": list(self.countries),
            "years": list(self.years),
            "max_rounds": self.max_rounds,
            "template_path": self.template_path,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        known = {
            "target_total",
            "batch_size",
            "refine_rounds",
            "seed_count",
            "master_seed",
            "p_max",
            "mask_p",
            "keep_both",
            "drop_preceding",
            "drop_succeeding",
            "countries",
            "years",
            "max_rounds",
            "template_path",
            "parallelism",
        }
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown pipeline config keys: {sorted(extra)}")
        return cls(**d)


@dataclass(frozen=True)
class RoundCounts:
    round_number: int
    requested: int
    generated_valid: int
    failures: dict[str, int]

    def to_dict(self) -> dict:
        return {
            "round": self.round_number,
            "requested": self.requested,
            "generated_valid": self.generated_valid,
            "failures": {k: self.failures.get(k, 0) for k in GENERATION_FAILURE_KINDS},
        }


@dataclass
class RunReport:
    """Per-round and aggregate accounting for one synthesis run.

    elapsed_seconds is informational and never serialized: two runs of
    the same config must produce identical report files.
    """

    config: PipelineConfig
    rounds: list[RoundCounts] = field(default_factory=list)
    aux_failures: dict[str, dict[str, int]] = field(
        default_factory=lambda: {stage: {} for stage in AUX_STAGES}
    )
    seed_pool_size: int = 0
    themes: dict = field(default_factory=dict)
    elapsed_seconds: float = 0.0

    @property
    def total_requested(self) -> int:
        return sum(r.requested for r in self.rounds)

    @property
    def total_valid(self) -> int:
        return sum(r.generated_valid for r in self.rounds)

    def total_failures(self) -> dict[str, int]:
        out = {k: 0 for k in GENERATION_FAILURE_KINDS}
        for r in self.rounds:
            for k, n in r.failures.items():
                out[k] += n
        return out

    @property
    def success_rate(self) -> float:
        req = self.total_requested
        return self.total_valid / req if req else 0.0

    @property
    def shortfall(self) -> bool:
        return self.total_valid < self.config.target_total

    @property
    def exhausted(self) -> bool:
        """True when nothing was produced and only delivery failed.

        Zero valid records with every failure a transport or rate-limit
        problem means the run never got answers, not bad answers.
        """
        if self.total_valid:
            return False
        fails = self.total_failures()
        delivery = fails["transport"] + fails["rate_limited"]
        return delivery > 0 and delivery == sum(fails.values())

    def warning(self) -> str | None:
        if not self.shortfall:
            return None
        return (
            f"shortfall: produced {self.total_valid} of "
            f"{self.config.target_total} requested records in "
            f"{len(self.rounds)} rounds"
        )

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "rounds": [r.to_dict() for r in self.rounds],
            "totals": {
                "requested": self.total_requested,
                "generated_valid": self.total_valid,
                "failures": self.total_failures(),
            },
            "aux_failures": {
                stage: dict(sorted(kinds.items()))
                for stage, kinds in self.aux_failures.items()
            },
            "success_rate": self.success_rate,
            "seed_pool_size": self.seed_pool_size,
            "themes": self.themes,
            "shortfall": self.shortfall,
            "warning": self.warning(),
        }


@dataclass
class AugmentedDataset:
    """The original corpus plus the run's valid synthetic records."""

    original: Corpus
    synthetic: list[SyntheticRecord]

    def synthetic_examples(self) -> list[Example]:
        return [
            Example(
                id=rec.id,
                text=render_training_text(rec),
                label=rec.label,
                source="synthetic",
                split="train",
            )
            for rec in self.synthetic
        ]

    def combined_train(self) -> list[Example]:
        """Training view: original train material followed by synthetics.

        Originals that were never split (split still "unassigned") count
        as training material; val and test rows never leak in.
        """
        originals = [
            ex for ex in self.original.examples if ex.split in ("train", "unassigned")
        ]
        return originals + self.synthetic_examples()

    def combined_size(self) -> int:
        return len(self.original.examples) + len(self.synthetic)


def select_seed_data(corpus: Corpus, n: int, master_seed: int) -> list[Example]:
    """Draw n distinct harmful examples to found the seed pool."""
    harmful = corpus.harmful()
    if len(harmful) < n:
        raise SeedPoolError(
            f"need {n} harmful examples for the seed pool, corpus has "
            f"{len(harmful)}"
        )
    noise = NoiseDraw(master_seed).substream("seed_select")
    return noise.sample(harmful, n)


def _map_ordered(fn, items, parallelism: int):
    """Apply fn to items, possibly on threads, preserving input order."""
    if parallelism <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(fn, items))


def _bump(counter: dict[str, int], kind: str) -> None:
    counter[kind] = counter.get(kind, 0) + 1


def run_synthesis(
    config: PipelineConfig, corpus: Corpus, backend
) -> tuple[AugmentedDataset, RunReport]:
    """Run the full loop and return the dataset plus its accounting.

    Deterministic for a given (config, corpus, scripted backend): all
    randomness flows from master_seed through named substreams, and
    worker count never changes any draw.
    """
    started = time.monotonic()
    noise = NoiseDraw(config.master_seed)
    dropout = config.dropout()
    domains = config.domains()
    template = load_template(config.template_path)

    seeds = select_seed_data(corpus, config.seed_count, config.master_seed)
    pool: list[SeedMember] = [SeedMember(example=ex) for ex in seeds]
    pending_extraction = list(range(len(pool)))

    index = ThemeIndex()
    report = RunReport(config=config)
    synthetic: list[SyntheticRecord] = []

    for round_number in range(1, config.max_rounds + 1):
        # Tag whatever joined the pool since the last round. Draw keys use
        # the example id, so neither thread timing nor pool position moves
        # any attribute's gate draw.
        if pending_extraction:
            members = [pool[i] for i in pending_extraction]
            results = _map_ordered(
                lambda m: extract_attributes(m.example, backend),
                members,
                config.parallelism,
            )
            for slot, member, (attrs, failure) in zip(
                pending_extraction, members, results
            ):
                if failure is not None:
                    _bump(report.aux_failures["extract_attributes"], failure)
                    continue
                retained = []
                for i, attr in enumerate(attrs):
                    draw = noise.substream(
                        "gate", member.example.id, i
                    ).uniform()
                    if gate_attribute(attr, draw, config.p_max):
                        retained.append(attr.tag)
                retained = list(dict.fromkeys(retained))
                if retained:
                    index.update(retained, round_number)
                    pool[slot] = SeedMember(
                        example=member.example, tags=tuple(retained)
                    )
            pending_extraction = []

        batch = sample_seed_batch(
            pool, noise.substream("seed_batch", round_number), round_number
        )
        indicators = sample_indicators(
            noise.substream("indicators", round_number), domains
        )
        prompt = assemble_prompt(batch, indicators, template, config.batch_size)

        counts = {k: 0 for k in GENERATION_FAILURE_KINDS}
        resp = backend.generate(
            GenerationRequest(
                system_text=prompt.system_text,
                user_text=prompt.user_text,
                tag="synthesize",
            )
        )

        round_records: list[SyntheticRecord] = []
        if not resp.ok:
            counts[resp.failure_kind] += config.batch_size
        else:
            slots = parse_numbered_list(resp.text, config.batch_size)
            for i, text in enumerate(slots):
                if text is None:
                    counts["malformed"] += 1
                    continue
                round_records.append(
                    SyntheticRecord(
                        id=f"syn-{round_number:04d}-{i + 1:04d}",
                        context=ContextTriple(core=text),
                        label=Label.HARMFUL,
                        indicators=indicators,
                        attribute_tags=tuple(
                            sorted({t for m in batch.members for t in m.tags})
                        ),
                        round_number=round_number,
                        valid=True,
                        parent_seed_ids=prompt.seed_ids,
                    )
                )

            def anchor(rec):
                return contextual_anchoring(
                    rec, backend, noise.substream("cae", rec.id), dropout
                )

            anchored = []
            for rec, failure in _map_ordered(
                anchor, round_records, config.parallelism
            ):
                if failure is not None:
                    _bump(report.aux_failures["contextualize"], failure)
                anchored.append(rec)

            scored = []
            for rec, failure in _map_ordered(
                lambda r: quality_score(r, backend), anchored, config.parallelism
            ):
                if failure is not None:
                    _bump(report.aux_failures["score_quality"], failure)
                scored.append(rec)
            round_records = scored

        synthetic.extend(round_records)
        report.rounds.append(
            RoundCounts(
                round_number=round_number,
                requested=config.batch_size,
                generated_valid=len(round_records),
                failures=counts,
            )
        )

        done = len(synthetic) >= config.target_total
        if not done and round_number <= config.refine_rounds and round_records:
            selected = select_top_decile(round_records)

            def refine(rec):
                return thematic_style_refinement(
                    rec,
                    index,
                    backend,
                    noise.substream("tsr", rec.id),
                    new_id=f"{rec.id}-t",
                )

            for new_rec, failure in _map_ordered(
                refine, selected, config.parallelism
            ):
                if failure is not None:
                    _bump(report.aux_failures["refine_theme"], failure)
                    continue
                if new_rec is None:
                    continue
                pool.append(
                    SeedMember(
                        example=Example(
                            id=new_rec.id,
                            text=new_rec.context.core,
                            label=Label.HARMFUL,
                            source="synthetic",
                            split="unassigned",
                        ),
                        tags=new_rec.attribute_tags,
                    )
                )
        if done:
            break

    report.seed_pool_size = len(pool)
    report.themes = index.snapshot()
    report.elapsed_seconds = time.monotonic() - started
    return AugmentedDataset(original=corpus, synthetic=synthetic), report


def emit(dataset: AugmentedDataset, report: RunReport, out_dir) -> dict[str, Path]:
    """Write the run's four artifacts; repeat calls rewrite identical files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "synthetic": out / "synthetic.jsonl",
        "augmented_train": out / "augmented_train.jsonl",
        "report": out / "report.json",
        "themes": out / "themes.jsonl",
    }
    with open(paths["synthetic"], "w", encoding="utf-8") as fh:
        for rec in dataset.synthetic:
            fh.write(json.dumps(rec.to_dict(), sort_keys=True, ensure_ascii=False))
            fh.write("\n")
    with open(paths["augmented_train"], "w", encoding="utf-8") as fh:
        for ex in dataset.combined_train():
            fh.write(json.dumps(ex.to_dict(), sort_keys=True, ensure_ascii=False))
            fh.write("\n")
    with open(paths["report"], "w", encoding="utf-8") as fh:
        fh.write(json.dumps(report.to_dict(), indent=2, sort_keys=True))
        fh.write("\n")
    with open(paths["themes"], "w", encoding="utf-8") as fh:
        for theme, entry in report.themes.items():
            fh.write(
                json.dumps(
                    {
                        "count": entry["count"],
                        "first_seen_round": entry["first_seen_round"],
                        "theme": theme,
                    },
                    sort_keys=True,
                    ensure_ascii=False,
                )
            )
            fh.write("\n")
    return paths
