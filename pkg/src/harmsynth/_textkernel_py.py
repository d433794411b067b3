"""Pure-Python text-normalization kernel.

Reference implementation of the normalization semantics; the compiled
Cython twin in ``_textkernel.pyx`` must produce byte-identical output on
every input (enforced by property tests). Selection between the two
happens in :mod:`harmsynth.textnorm`.

Normalization semantics, in order:
  1. one left-to-right scan drops URLs (``http://`` or ``https://`` up to
     the next whitespace, case-insensitive) and mentions (``@`` plus the
     following run of word characters),
  2. surviving non-whitespace runs become tokens, joined by single spaces
     (this collapses whitespace and trims the ends),
  3. the joined string is lowercased once,
  4. each token is reduced to its lemma key by the suffix stemmer.

The stemmer strips, first match per pass: ``'s``, ``ies``->``y``,
``sses``->``ss``, ``es``, ``s`` (not after ``s``), ``ing``, ``ed``; the
last two undouble a trailing doubled consonant (``nn``->``n`` but ``ss``
and ``ll`` stay). Passes repeat to a fixed point so normalize is
idempotent. Stopwords and non-alphabetic tokens pass through unchanged,
and no rule may leave fewer than two characters.
"""

from harmsynth._stopwords import STOPWORDS

KERNEL = "pure"

_VOWELS = "aeiou"


def _is_word(ch: str) -> bool:
    return ch.isalnum() or ch == "_"


def _url_at(text: str, i: int) -> bool:
    if text[i] not in "hH":
        return False
    rest = text[i : i + 8].lower()
    return rest.startswith("http://") or rest.startswith("https://")


def clean_text(text: str) -> str:
    """Strip URLs and mentions, collapse whitespace, lowercase."""
    tokens: list[str] = []
    buf: list[str] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            if buf:
                tokens.append("".join(buf))
                buf = []
            i += 1
        elif _url_at(text, i):
            while i < n and not text[i].isspace():
                i += 1
        elif ch == "@" and i + 1 < n and _is_word(text[i + 1]):
            i += 1
            while i < n and _is_word(text[i]):
                i += 1
        else:
            buf.append(ch)
            i += 1
    if buf:
        tokens.append("".join(buf))
    return " ".join(tokens).lower()


def _stemmable(token: str) -> bool:
    if not token:
        return False
    for ch in token:
        if not (ch.isalpha() or ch == "'"):
            return False
    return True


def _undouble(stem: str) -> str:
    if (
        len(stem) >= 2
        and stem[-1] == stem[-2]
        and stem[-1].isalpha()
        and stem[-1] not in _VOWELS
        and stem[-2:] not in ("ss", "ll")
    ):
        return stem[:-1]
    return stem


def _apply_one(t: str) -> str:
    n = len(t)
    if t.endswith("'s") and n - 2 >= 2:
        return t[:-2]
    if t.endswith("ies") and n - 2 >= 2:  # result is stem + "y"
        return t[:-3] + "y"
    if t.endswith("sses") and n - 2 >= 2:
        return t[:-2]
    if t.endswith("es") and not t.endswith("sses") and n - 2 >= 2:
        return t[:-2]
    if t.endswith("s") and not t.endswith("ss") and n - 1 >= 2:
        return t[:-1]
    if t.endswith("ing") and n - 3 >= 2:
        return _undouble(t[:-3])
    if t.endswith("ed") and n - 2 >= 2:
        return _undouble(t[:-2])
    return t


def stem_token(token: str) -> str:
    """Lemma key of one lowercase token (fixed point of the suffix rules)."""
    t = token
    while True:
        if t in STOPWORDS or not _stemmable(t):
            return t
        new = _apply_one(t)
        if new == t:
            return t
        t = new


def lemma_key(text: str) -> str:
    """Full normalization: clean, then stem every token."""
    cleaned = clean_text(text)
    if not cleaned:
        return ""
    return " ".join(stem_token(tok) for tok in cleaned.split(" "))
