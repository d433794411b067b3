"""Compare the compiled text-normalization kernel against the pure one.

Both kernels are imported directly, so this runs regardless of which
one the package facade selected. Outputs are checked for equality on
the whole workload before anything is timed; a speedup table follows.

Usage: python benchmarks/bench_textnorm.py [--texts N] [--repeats R]
"""

import argparse
import random
import string
import time

from harmsynth import _textkernel_py as pure

try:
    from harmsynth import _textkernel as compiled
except ImportError:
    compiled = None

WORDS = (
    "the a of and to in is it that was for on are with as his they at be "
    "this have from or had by word but what some we can out other were all "
    "there when up use your how said an each she which do their time if will "
    "way about many then them write would like so these her long make thing "
    "see him two has look more day could go come did number sound no most "
    "people my over know water than call first who may down side been now "
    "find running walked cities ponies glasses stopped playing dogs churches"
).split()


def make_texts(n: int, seed: int) -> list[str]:
    rng = random.Random(seed)
    texts = []
    for _ in range(n):
        tokens = []
        for _ in range(rng.randint(8, 60)):
            roll = rng.random()
            if roll < 0.05:
                tokens.append("https://example.test/" + "".join(
                    rng.choices(string.ascii_lowercase, k=8)))
            elif roll < 0.12:
                tokens.append("@" + "".join(rng.choices(string.ascii_lowercase, k=7)))
            else:
                word = rng.choice(WORDS)
                if rng.random() < 0.15:
                    word = word.upper()
                if rng.random() < 0.2:
                    word += rng.choice(".,!?;")
                tokens.append(word)
        sep = "  " if rng.random() < 0.1 else " "
        texts.append(sep.join(tokens))
    return texts


def time_pass(fn, texts: list[str], repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        for text in texts:
            fn(text)
        best = min(best, time.perf_counter() - start)
    return best


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--texts", type=int, default=2000)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    if compiled is None:
        print("compiled kernel not built; nothing to compare")
        return 0

    texts = make_texts(args.texts, args.seed)
    total_bytes = sum(len(t) for t in texts)
    print(
        f"workload: {len(texts)} texts, {total_bytes / 1e6:.2f} MB, "
        f"best of {args.repeats} passes"
    )

    mismatches = sum(
        1 for t in texts if pure.lemma_key(t) != compiled.lemma_key(t)
    )
    if mismatches:
        print(f"PARITY FAILURE: {mismatches} texts normalize differently")
        return 1
    print("parity: identical output on every text")

    tokens = [tok for t in texts for tok in pure.clean_text(t).split(" ")]
    cases = [
        ("clean_text", pure.clean_text, compiled.clean_text, texts),
        ("stem_token", pure.stem_token, compiled.stem_token, tokens),
        ("lemma_key", pure.lemma_key, compiled.lemma_key, texts),
    ]
    print(f"{'op':<12}{'pure (s)':>10}{'compiled (s)':>14}{'speedup':>9}")
    for name, pure_fn, fast_fn, data in cases:
        t_pure = time_pass(pure_fn, data, args.repeats)
        t_fast = time_pass(fast_fn, data, args.repeats)
        print(f"{name:<12}{t_pure:>10.4f}{t_fast:>14.4f}{t_pure / t_fast:>8.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
