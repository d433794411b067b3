import csv
import json
import math

import pytest

from harmsynth.backend import BackendConfig, build_backend
from harmsynth.cli import main
from harmsynth.corpus import save_jsonl
from harmsynth.pipeline import PipelineConfig, emit, run_synthesis

from conftest import build_corpus


@pytest.fixture
def raw_csv(tmp_path):
    path = tmp_path / "raw.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["text", "label"])
        for i in range(40):
            writer.writerow([f"angry post {i} targeting [group] members", "hate"])
        # exact duplicate of row 0, removed by dedup
        writer.writerow(["angry post 0 targeting [group] members", "hate"])
        for i in range(27):
            writer.writerow([f"nice post {i} about the weather today", "normal"])
    return path


@pytest.fixture
def mapping_file(tmp_path):
    path = tmp_path / "mapping.json"
    path.write_text(json.dumps({"hate": 1, "normal": 0}))
    return path


def ingest_args(raw, mapping, out, *extra):
    return [
        "ingest",
        "--input",
        str(raw),
        "--format",
        "csv",
        "--mapping",
        str(mapping),
        "--out",
        str(out),
        *extra,
    ]


def test_ingest_happy_path(raw_csv, mapping_file, tmp_path, capsys):
    out = tmp_path / "corpus.jsonl"
    code = main(ingest_args(raw_csv, mapping_file, out))
    assert code == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == f"Wrote {out}"
    assert lines[1] == "Removed 1 duplicates, 0 non-English rows"
    assert lines[2].split() == ["Split", "Harmful", "NonHarmful", "Total"]
    # 40 harmful -> 28/4/8, 27 nonharmful -> 18/2/7
    assert lines[3].split() == ["train", "28", "18", "46"]
    assert lines[4].split() == ["val", "4", "2", "6"]
    assert lines[5].split() == ["test", "8", "7", "15"]
    assert lines[6].split() == ["total", "40", "27", "67"]
    assert out.exists()


def test_ingest_reruns_byte_identical(raw_csv, mapping_file, tmp_path):
    out1 = tmp_path / "a.jsonl"
    out2 = tmp_path / "b.jsonl"
    assert main(ingest_args(raw_csv, mapping_file, out1)) == 0
    assert main(ingest_args(raw_csv, mapping_file, out2)) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_ingest_english_only(mapping_file, tmp_path, capsys):
    path = tmp_path / "raw.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["text", "label"])
        for i in range(10):
            writer.writerow([f"angry post {i} about the [group] next door", "hate"])
        for i in range(10):
            writer.writerow([f"nice post {i} about the weather today", "normal"])
        writer.writerow(["это не английский текст совсем да нет", "normal"])
    out = tmp_path / "corpus.jsonl"
    code = main(ingest_args(path, mapping_file, out, "--english-only"))
    assert code == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[1] == "Removed 0 duplicates, 1 non-English rows"
    assert lines[6].split() == ["total", "10", "10", "20"]


def test_ingest_missing_mapping_exits_1(raw_csv, tmp_path, capsys):
    code = main(ingest_args(raw_csv, tmp_path / "nope.json", tmp_path / "o.jsonl"))
    assert code == 1
    assert capsys.readouterr().err.startswith("error:")


@pytest.fixture
def corpus_file(tmp_path):
    path = tmp_path / "corpus.jsonl"
    save_jsonl(build_corpus(60, 10), path)
    return path


def write_config(tmp_path, corpus_path, script_path=None, **pipeline):
    cfg = {
        "corpus": str(corpus_path),
        "pipeline": pipeline,
        "backend": {"kind": "mock"},
    }
    if script_path is not None:
        cfg["backend"]["script_path"] = str(script_path)
    path = tmp_path / "run.json"
    path.write_text(json.dumps(cfg))
    return path


SMALL = dict(
    target_total=20, batch_size=10, seed_count=15, master_seed=7, refine_rounds=2
)


def test_synthesize_happy_path(corpus_file, zero_failure_script, tmp_path, capsys):
    cfg = write_config(tmp_path, corpus_file, zero_failure_script, **SMALL)
    out = tmp_path / "run_out"
    code = main(["synthesize", "--config", str(cfg), "--out", str(out)])
    assert code == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "Target Size 20"
    assert lines[1] == "Generated 20"
    assert lines[2] == "Success (%) 100.0"
    assert lines[3] == "Rounds 2"
    assert lines[4] == f"Wrote {out / 'synthetic.jsonl'}"
    for name in ("synthetic.jsonl", "augmented_train.jsonl", "report.json", "themes.jsonl"):
        assert (out / name).exists()


def test_synthesize_parallelism_flag_changes_nothing(
    corpus_file, tmp_path, capsys
):
    cfg = write_config(tmp_path, corpus_file, **SMALL)
    out1 = tmp_path / "p1"
    out4 = tmp_path / "p4"
    assert main(["synthesize", "--config", str(cfg), "--out", str(out1)]) == 0
    assert (
        main(
            [
                "synthesize",
                "--config",
                str(cfg),
                "--out",
                str(out4),
                "--parallelism",
                "4",
            ]
        )
        == 0
    )
    capsys.readouterr()
    for name in ("synthetic.jsonl", "augmented_train.jsonl", "report.json", "themes.jsonl"):
        assert (out1 / name).read_bytes() == (out4 / name).read_bytes()


def test_synthesize_shortfall_exits_2(
    corpus_file, all_fail_script_factory, tmp_path, capsys
):
    script = all_fail_script_factory("refusal")
    cfg = write_config(tmp_path, corpus_file, script, max_rounds=2, **SMALL)
    out = tmp_path / "out"
    code = main(["synthesize", "--config", str(cfg), "--out", str(out)])
    captured = capsys.readouterr()
    assert code == 2
    assert "Generated 0" in captured.out
    assert captured.err.startswith("warning: shortfall")


def test_synthesize_exhaustion_exits_3(
    corpus_file, all_fail_script_factory, tmp_path, capsys
):
    script = all_fail_script_factory("transport")
    cfg = write_config(tmp_path, corpus_file, script, max_rounds=2, **SMALL)
    out = tmp_path / "out"
    code = main(["synthesize", "--config", str(cfg), "--out", str(out)])
    capsys.readouterr()
    assert code == 3


def test_synthesize_rejects_unknown_config_keys(corpus_file, tmp_path, capsys):
    cfg = write_config(tmp_path, corpus_file, target_totall=20)
    code = main(["synthesize", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert code == 1
    assert "unknown pipeline config keys" in capsys.readouterr().err

    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"corpus": str(corpus_file), "extra": 1}))
    code = main(["synthesize", "--config", str(bad), "--out", str(tmp_path / "o")])
    assert code == 1

    noc = tmp_path / "noc.json"
    noc.write_text(json.dumps({"pipeline": {}}))
    code = main(["synthesize", "--config", str(noc), "--out", str(tmp_path / "o")])
    assert code == 1
    assert "corpus" in capsys.readouterr().err


def write_preds(path, rows):
    with open(path, "w") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")


def test_evaluate_single_file_output(tmp_path, capsys):
    path = tmp_path / "preds.jsonl"
    write_preds(
        path,
        [
            {"id": "a", "y_true": 1, "y_pred": 0, "p1": 0.2},
            {"id": "b", "y_true": 1, "y_pred": 0, "p1": 0.4},
            {"id": "c", "y_true": 0, "y_pred": 0, "p1": 0.1},
            {"id": "d", "y_true": 0, "y_pred": 0, "p1": 0.3},
        ],
    )
    code = main(["evaluate", "--preds", str(path)])
    assert code == 0
    out = capsys.readouterr().out
    assert out == "Accuracy: 50.0\nMacro-F1: 33.3\nMean-loss: 0.7469\n"


def test_evaluate_perfect_predictions(tmp_path, capsys):
    path = tmp_path / "preds.jsonl"
    write_preds(
        path,
        [
            {"id": "a", "y_true": 1, "y_pred": 1},
            {"id": "b", "y_true": 0, "y_pred": 0},
        ],
    )
    assert main(["evaluate", "--preds", str(path)]) == 0
    out = capsys.readouterr().out
    assert "Accuracy: 100.0" in out
    assert "Macro-F1: 100.0" in out
    assert "Mean-loss" not in out, "no loss line without probabilities"


def test_evaluate_robustness_two_files(tmp_path, capsys):
    a = tmp_path / "a.jsonl"
    b = tmp_path / "b.jsonl"
    write_preds(a, [{"id": "x", "y_true": 1, "y_pred": 1, "p1": math.exp(-0.2)}])
    write_preds(b, [{"id": "x", "y_true": 1, "y_pred": 1, "p1": math.exp(-0.4)}])
    code = main(
        ["evaluate", "--preds", str(a), "--preds", str(b), "--robustness"]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "[a] Accuracy: 100.0" in out
    assert "[b] Accuracy: 100.0" in out
    assert "[a] Mean-loss: 0.2000" in out
    assert "[b] Mean-loss: 0.4000" in out
    assert out.rstrip().endswith("Robustness: 0.010000")


def test_evaluate_robustness_needs_two_files(tmp_path, capsys):
    a = tmp_path / "a.jsonl"
    write_preds(a, [{"id": "x", "y_true": 1, "y_pred": 1, "p1": 0.9}])
    code = main(["evaluate", "--preds", str(a), "--robustness"])
    captured = capsys.readouterr()
    assert code == 1
    assert captured.out == "", "nothing is printed before the check"
    assert "--robustness needs at least 2" in captured.err


def test_evaluate_bad_file_exits_1(tmp_path, capsys):
    path = tmp_path / "preds.jsonl"
    path.write_text('{"id": "a", "y_true": 3, "y_pred": 0}\n')
    assert main(["evaluate", "--preds", str(path)]) == 1
    assert capsys.readouterr().err.startswith("error:")


@pytest.fixture
def emitted_run(tmp_path):
    corpus = build_corpus(60, 10)
    cfg = PipelineConfig(**SMALL)
    backend = build_backend(BackendConfig(kind="mock"), master_seed=cfg.master_seed)
    ds, report = run_synthesis(cfg, corpus, backend)
    paths = emit(ds, report, tmp_path / "run")
    return report, paths


def test_report_rendering(emitted_run, capsys):
    report, paths = emitted_run
    code = main(["report", "--report", str(paths["report"])])
    assert code == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].split() == ["Round", "Requested", "Valid", "Failures"]
    total_line = next(l for l in lines if l.startswith("total"))
    assert total_line.split()[1] == str(report.total_requested)
    assert any(l.startswith("Success (%) ") for l in lines)
    assert any(l == f"Seed pool size {report.seed_pool_size}" for l in lines)
    if report.themes:
        top = next(iter(report.themes))
        i = lines.index("Top themes:")
        assert lines[i + 1].startswith(f"  {top}: ")
    assert not any(l.startswith("warning:") for l in lines)


def test_report_orders_themes_by_rank_not_name(emitted_run, capsys):
    report, paths = emitted_run
    code = main(["report", "--report", str(paths["report"])])
    assert code == 0
    lines = capsys.readouterr().out.splitlines()
    shown = [l.split(":")[0].strip() for l in lines[lines.index("Top themes:") + 1 :]]
    expected = list(report.themes)[:10]
    assert shown[: len(expected)] == expected


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["frobnicate"],
        ["evaluate"],
        ["synthesize", "--config"],
        ["ingest", "--input", "x.csv"],
    ],
)
def test_usage_errors_exit_1(argv, capsys):
    assert main(argv) == 1
    assert "error:" in capsys.readouterr().err
