"""Text normalization facade.

Picks the compiled kernel when the extension built, otherwise the
pure-Python twin. Set ``HARMSYNTH_PURE_KERNEL=1`` to force the pure
kernel (used by the parity tests and the benchmark).
"""

import os

if os.environ.get("HARMSYNTH_PURE_KERNEL"):
    from harmsynth import _textkernel_py as _impl

    COMPILED = False
else:
    try:
        from harmsynth import _textkernel as _impl  # type: ignore[no-redef]

        COMPILED = True
    except ImportError:
        from harmsynth import _textkernel_py as _impl  # type: ignore[no-redef]

        COMPILED = False

KERNEL = _impl.KERNEL

clean_text = _impl.clean_text
stem_token = _impl.stem_token


def normalize(text, stemmer=None):
    """Dedup key for a text: cleaned, lowercased, token-by-token stemmed.

    ``stemmer`` overrides the built-in suffix stemmer; it is applied to
    each cleaned token. Idempotent with the default stemmer: feeding the
    output back in returns it unchanged.
    """
    if stemmer is None:
        return _impl.lemma_key(text)
    cleaned = _impl.clean_text(text)
    if not cleaned:
        return ""
    return " ".join(stemmer(tok) for tok in cleaned.split(" "))
