"""Synthetic harmful-content training data for classifier research.

Generates labeled harmful-text examples with an LLM-in-the-loop
pipeline, prepares real corpora for training, and evaluates the
resulting classifiers. Built for content-safety work: the point of the
synthetic data is better detection of harmful text, and the bundled
mock backend emits sanitized placeholder content only.
"""

__version__ = "0.1.0"

from harmsynth.backend import (
    BackendConfig,
    GenerationRequest,
    GenerationResponse,
    HTTPBackend,
    MockBackend,
    build_backend,
)
from harmsynth.corpus import (
    Corpus,
    Example,
    Label,
    SplitRatio,
    dedup,
    downsize,
    ingest,
    language_filter,
    load_jsonl,
    save_jsonl,
    split,
)
from harmsynth.errors import HarmSynthError
from harmsynth.evalkit import (
    accuracy,
    evaluate_predictions,
    load_predictions,
    macro_f1,
    mean_cross_entropy,
    robustness_variance,
)
from harmsynth.noise import NoiseDraw
from harmsynth.pipeline import (
    AugmentedDataset,
    PipelineConfig,
    RunReport,
    emit,
    run_synthesis,
    select_seed_data,
)

__all__ = [
    "__version__",
    "BackendConfig",
    "GenerationRequest",
    "GenerationResponse",
    "HTTPBackend",
    "MockBackend",
    "build_backend",
    "Corpus",
    "Example",
    "Label",
    "SplitRatio",
    "dedup",
    "downsize",
    "ingest",
    "language_filter",
    "load_jsonl",
    "save_jsonl",
    "split",
    "HarmSynthError",
    "accuracy",
    "evaluate_predictions",
    "load_predictions",
    "macro_f1",
    "mean_cross_entropy",
    "robustness_variance",
    "NoiseDraw",
    "AugmentedDataset",
    "PipelineConfig",
    "RunReport",
    "emit",
    "run_synthesis",
    "select_seed_data",
]
