"""Command-line wrapper mirroring TrainConfig."""

import argparse
import sys

from harmtrainer.config import TrainConfig
from harmtrainer.errors import TrainerError
from harmtrainer.train import train_and_predict


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="harmtrainer",
        description="fine-tune a compact classifier and write predictions",
    )
    parser.add_argument("--train", required=True, dest="train_path")
    parser.add_argument("--eval", required=True, dest="eval_path")
    parser.add_argument("--out", required=True, dest="out_preds_path")
    parser.add_argument("--model-name", default="bert-compact")
    parser.add_argument("--learning-rate", type=float, default=None)
    parser.add_argument("--epochs", type=int, default=3)
    parser.add_argument("--batch", type=int, default=4)
    parser.add_argument("--warmup-steps", type=int, default=30)
    parser.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = TrainConfig(
            train_path=args.train_path,
            eval_path=args.eval_path,
            out_preds_path=args.out_preds_path,
            model_name=args.model_name,
            learning_rate=args.learning_rate,
            epochs=args.epochs,
            batch=args.batch,
            warmup_steps=args.warmup_steps,
            seed=args.seed,
        )
        result = train_and_predict(config)
    except (TrainerError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"Trained {result.steps} steps on {result.n_train} rows")
    print(f"Final loss {result.final_loss:.4f}")
    print(f"Wrote {result.preds_path} ({result.n_eval} predictions)")
    print(f"Self Macro-F1 {result.macro_f1:.10f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
