"""Training configuration with per-family default learning rates."""

from dataclasses import dataclass, field

from harmtrainer.errors import ConfigError

# Defaults by encoder family. The rates are deliberately odd-looking:
# they are tuned values, not round numbers, and family selection must
# reproduce them exactly.
FAMILY_LEARNING_RATES = {
    "bert": 1.8282e-5,
    "roberta": 1.1856e-5,
}


def family_of(model_name: str) -> str:
    name = model_name.lower()
    # "roberta" contains "bert", so check it first
    if "roberta" in name:
        return "roberta"
    if "bert" in name:
        return "bert"
    raise ConfigError(
        f"unsupported model family in {model_name!r}; expected a bert or "
        f"roberta variant"
    )


@dataclass(frozen=True)
class TrainConfig:
    train_path: str
    eval_path: str
    out_preds_path: str
    model_name: str = "bert-compact"
    learning_rate: float | None = None
    epochs: int = 3
    batch: int = 4
    warmup_steps: int = 30
    seed: int = 0
    # model size knobs; defaults keep a CPU run on a toy corpus in seconds
    vocab_size: int = 4096
    max_len: int = 64
    dim: int = 64
    layers: int = 2
    heads: int = 4

    def __post_init__(self):
        if self.learning_rate is None:
            object.__setattr__(
                self, "learning_rate", FAMILY_LEARNING_RATES[family_of(self.model_name)]
            )
        if self.learning_rate <= 0.0:
            raise ConfigError("learning_rate must be positive")
        if self.epochs < 1:
            raise ConfigError("epochs must be a positive integer")
        if self.batch < 1:
            raise ConfigError("batch must be a positive integer")
        if self.warmup_steps < 0:
            raise ConfigError("warmup_steps must be non-negative")
        if self.vocab_size < 2 or self.max_len < 1:
            raise ConfigError("vocab_size and max_len must allow at least one token")
        if self.dim % self.heads:
            raise ConfigError("dim must divide evenly into heads")
