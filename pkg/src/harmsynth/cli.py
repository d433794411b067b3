"""Command-line entry points: ingest, synthesize, evaluate, report.

Exit codes: 0 success, 1 validation or usage error, 2 synthesis
shortfall, 3 backend exhaustion (nothing generated and every failure
was transport or rate limiting).
"""

import argparse
import json
import sys
from pathlib import Path

from harmsynth.backend import BackendConfig, build_backend
from harmsynth.corpus import (
    Corpus,
    Label,
    SplitRatio,
    dedup,
    ingest,
    language_filter,
    load_jsonl,
    load_label_mapping,
    downsize,
    save_jsonl,
    split,
)
from harmsynth.errors import ConfigError, HarmSynthError
from harmsynth.evalkit import (
    evaluate_predictions,
    load_predictions,
    robustness_variance,
)
from harmsynth.pipeline import PipelineConfig, emit, run_synthesis

__all__ = ["main"]

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_SHORTFALL = 2
EXIT_EXHAUSTED = 3


class _Parser(argparse.ArgumentParser):
    # argparse's default usage-error exit code collides with the
    # shortfall code, so route every usage problem to 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _build_parser() -> _Parser:
    parser = _Parser(prog="harmsynth", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="convert a raw dataset to canon form")
    p_ingest.add_argument("--input", required=True, help="raw CSV or JSONL file")
    p_ingest.add_argument("--format", required=True, choices=("csv", "jsonl"))
    p_ingest.add_argument(
        "--mapping", required=True, help="JSON file mapping source labels to 0/1"
    )
    p_ingest.add_argument("--out", required=True, help="canonical JSONL output path")
    p_ingest.add_argument("--seed", type=int, default=0)
    p_ingest.add_argument("--max-harmful", type=int, default=None)
    p_ingest.add_argument("--max-nonharmful", type=int, default=None)
    p_ingest.add_argument(
        "--source", default=None, help="source name recorded per row (default: stem)"
    )
    p_ingest.add_argument(
        "--english-only",
        action="store_true",
        help="drop rows that do not look like English",
    )

    p_syn = sub.add_parser("synthesize", help="run the synthesis pipeline")
    p_syn.add_argument("--config", required=True, help="run config JSON file")
    p_syn.add_argument("--out", required=True, help="output directory")
    p_syn.add_argument(
        "--parallelism",
        type=int,
        default=None,
        help="worker threads (overrides config; results are unaffected)",
    )

    p_eval = sub.add_parser("evaluate", help="score prediction files")
    p_eval.add_argument(
        "--preds",
        action="append",
        required=True,
        help="prediction JSONL file; repeat for multiple variants",
    )
    p_eval.add_argument(
        "--robustness",
        action="store_true",
        help="also report cross-variant robustness (needs >= 2 files)",
    )

    p_rep = sub.add_parser("report", help="render a run report as text")
    p_rep.add_argument("--report", required=True, help="path to report.json")

    return parser


def _pct(x: float) -> str:
    return f"{100.0 * x:.1f}"


def _cmd_ingest(args) -> int:
    mapping = load_label_mapping(args.mapping)
    source = args.source or Path(args.input).stem
    corpus = ingest(args.input, args.format, mapping, source)
    corpus, removed = dedup(corpus)
    if args.english_only:
        before = len(corpus)
        corpus = language_filter(corpus)
        dropped = before - len(corpus)
    else:
        dropped = 0
    corpus = downsize(
        corpus,
        max_harmful=args.max_harmful,
        max_nonharmful=args.max_nonharmful,
        seed=args.seed,
    )
    corpus = split(corpus, SplitRatio(), args.seed)
    save_jsonl(corpus, args.out)

    rows = []
    for name in ("train", "val", "test"):
        part = corpus.in_split(name)
        counts = {int(lab): 0 for lab in Label}
        for ex in part:
            counts[int(ex.label)] += 1
        rows.append((name, counts[1], counts[0], len(part)))
    total_h = sum(r[1] for r in rows)
    total_n = sum(r[2] for r in rows)
    rows.append(("total", total_h, total_n, total_h + total_n))

    print(f"Wrote {args.out}")
    print(f"Removed {removed} duplicates, {dropped} non-English rows")
    print(f"{'Split':<8}{'Harmful':>10}{'NonHarmful':>12}{'Total':>8}")
    for name, h, n, t in rows:
        print(f"{name:<8}{h:>10}{n:>12}{t:>8}")
    return EXIT_OK


def _load_run_config(path):
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ConfigError("run config must be a JSON object")
    known = {"corpus", "pipeline", "backend"}
    extra = set(raw) - known
    if extra:
        raise ConfigError(f"unknown run config keys: {sorted(extra)}")
    if "corpus" not in raw:
        raise ConfigError("run config needs a 'corpus' path")
    pipeline_cfg = PipelineConfig.from_dict(raw.get("pipeline", {}))
    backend_cfg = BackendConfig(**raw.get("backend", {}))
    return raw["corpus"], pipeline_cfg, backend_cfg


def _cmd_synthesize(args) -> int:
    corpus_path, config, backend_cfg = _load_run_config(args.config)
    if args.parallelism is not None:
        config = PipelineConfig.from_dict(
            {**config.to_dict(), "parallelism": args.parallelism}
        )
    corpus = load_jsonl(corpus_path)
    backend = build_backend(backend_cfg, master_seed=config.master_seed)
    dataset, report = run_synthesis(config, corpus, backend)
    paths = emit(dataset, report, args.out)

    print(f"Target Size {config.target_total}")
    print(f"Generated {report.total_valid}")
    print(f"Success (%) {_pct(report.success_rate)}")
    print(f"Rounds {len(report.rounds)}")
    print(f"Wrote {paths['synthetic']}")
    warning = report.warning()
    if warning:
        print(f"warning: {warning}", file=sys.stderr)
        return EXIT_EXHAUSTED if report.exhausted else EXIT_SHORTFALL
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    sets = [load_predictions(p) for p in args.preds]
    if args.robustness and len(sets) < 2:
        raise ConfigError(
            f"--robustness needs at least 2 prediction files, got {len(sets)}"
        )
    show_tags = len(sets) > 1
    for pset in sets:
        metrics = evaluate_predictions(pset)
        prefix = f"[{pset.variant_tag}] " if show_tags else ""
        print(f"{prefix}Accuracy: {_pct(metrics.accuracy)}")
        print(f"{prefix}Macro-F1: {_pct(metrics.macro_f1)}")
        if metrics.mean_loss is not None:
            print(f"{prefix}Mean-loss: {metrics.mean_loss:.4f}")
    if args.robustness:
        value = robustness_variance(sets)
        print(f"Robustness: {value:.6f}")
    return EXIT_OK


def _cmd_report(args) -> int:
    with open(args.report, encoding="utf-8") as fh:
        data = json.load(fh)
    totals = data["totals"]
    print(f"{'Round':<7}{'Requested':>10}{'Valid':>7}  Failures")
    for row in data["rounds"]:
        fails = ", ".join(
            f"{kind}={n}" for kind, n in sorted(row["failures"].items()) if n
        )
        print(
            f"{row['round']:<7}{row['requested']:>10}"
            f"{row['generated_valid']:>7}  {fails or '-'}"
        )
    print(
        f"{'total':<7}{totals['requested']:>10}{totals['generated_valid']:>7}  "
        + (
            ", ".join(
                f"{kind}={n}" for kind, n in sorted(totals["failures"].items()) if n
            )
            or "-"
        )
    )
    print(f"Success (%) {_pct(data['success_rate'])}")
    print(f"Seed pool size {data['seed_pool_size']}")
    # report.json keys are alphabetized on disk; restore ranking order
    themes = sorted(
        data.get("themes", {}).items(),
        key=lambda kv: (-kv[1]["count"], kv[1]["first_seen_round"], kv[0]),
    )
    if themes:
        print("Top themes:")
        for theme, entry in themes[:10]:
            print(
                f"  {theme}: {entry['count']} "
                f"(first seen round {entry['first_seen_round']})"
            )
    if data.get("warning"):
        print(f"warning: {data['warning']}")
    return EXIT_OK


_COMMANDS = {
    "ingest": _cmd_ingest,
    "synthesize": _cmd_synthesize,
    "evaluate": _cmd_evaluate,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (HarmSynthError, OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
