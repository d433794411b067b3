# cython: language_level=3
# cython: boundscheck=False
# cython: wraparound=False
"""Compiled text-normalization kernel.

Same contract as ``_textkernel_py``; that module's docstring is the
reference. Any behavioural difference between the two is a bug, caught
by the parity property tests. This twin exists because normalization
runs once per corpus row and dominates ingest and dedup time.
"""

from harmsynth._stopwords import STOPWORDS

KERNEL = "compiled"

cdef frozenset _STOP = STOPWORDS


cdef inline bint _is_word(Py_UCS4 ch):
    return ch.isalnum() or ch == u'_'


cdef inline bint _is_vowel(Py_UCS4 ch):
    return ch == u'a' or ch == u'e' or ch == u'i' or ch == u'o' or ch == u'u'


cdef bint _url_at(str text, Py_ssize_t i, Py_ssize_t n):
    # "http" + optional "s" + "://", case-insensitive, starting at i
    cdef Py_ssize_t j
    if i + 7 > n:
        return False
    if text[i] != u'h' and text[i] != u'H':
        return False
    if text[i + 1] != u't' and text[i + 1] != u'T':
        return False
    if text[i + 2] != u't' and text[i + 2] != u'T':
        return False
    if text[i + 3] != u'p' and text[i + 3] != u'P':
        return False
    j = i + 4
    if j < n and (text[j] == u's' or text[j] == u'S'):
        j += 1
    if j + 3 > n:
        return False
    return text[j] == u':' and text[j + 1] == u'/' and text[j + 2] == u'/'


def clean_text(str text):
    """Strip URLs and mentions, collapse whitespace, lowercase."""
    cdef Py_ssize_t i = 0, n = len(text), start
    cdef Py_UCS4 ch
    cdef list tokens = []
    cdef list parts = []
    while i < n:
        ch = text[i]
        if ch.isspace():
            if parts:
                tokens.append(u"".join(parts))
                parts = []
            i += 1
        elif (ch == u'h' or ch == u'H') and _url_at(text, i, n):
            while i < n and not text[i].isspace():
                i += 1
        elif ch == u'@' and i + 1 < n and _is_word(text[i + 1]):
            i += 1
            while i < n and _is_word(text[i]):
                i += 1
        else:
            # kept run: ends at whitespace, a mention/URL start, or EOS
            start = i
            i += 1
            while i < n:
                ch = text[i]
                if ch.isspace() or ch == u'@':
                    break
                if (ch == u'h' or ch == u'H') and _url_at(text, i, n):
                    break
                i += 1
            parts.append(text[start:i])
    if parts:
        tokens.append(u"".join(parts))
    return (u" ".join(tokens)).lower()


cdef bint _stemmable(str token):
    cdef Py_ssize_t i, n = len(token)
    cdef Py_UCS4 ch
    if n == 0:
        return False
    for i in range(n):
        ch = token[i]
        if not (ch.isalpha() or ch == u"'"):
            return False
    return True


cdef str _undouble(str stem):
    cdef Py_ssize_t n = len(stem)
    cdef Py_UCS4 ch
    if n < 2:
        return stem
    ch = stem[n - 1]
    if ch != stem[n - 2]:
        return stem
    if not ch.isalpha() or _is_vowel(ch) or ch == u's' or ch == u'l':
        return stem
    return stem[: n - 1]


cdef str _apply_one(str t):
    cdef Py_ssize_t n = len(t)
    if t.endswith(u"'s") and n - 2 >= 2:
        return t[: n - 2]
    if t.endswith(u"ies") and n - 2 >= 2:  # result is stem + "y"
        return t[: n - 3] + u"y"
    if t.endswith(u"sses") and n - 2 >= 2:
        return t[: n - 2]
    if t.endswith(u"es") and not t.endswith(u"sses") and n - 2 >= 2:
        return t[: n - 2]
    if t.endswith(u"s") and not t.endswith(u"ss") and n - 1 >= 2:
        return t[: n - 1]
    if t.endswith(u"ing") and n - 3 >= 2:
        return _undouble(t[: n - 3])
    if t.endswith(u"ed") and n - 2 >= 2:
        return _undouble(t[: n - 2])
    return t


def stem_token(str token):
    """Lemma key of one lowercase token (fixed point of the suffix rules)."""
    cdef str t = token, new
    while True:
        if t in _STOP or not _stemmable(t):
            return t
        new = _apply_one(t)
        if new == t:
            return t
        t = new


def lemma_key(str text):
    """Full normalization: clean, then stem every token."""
    cdef str cleaned = clean_text(text)
    cdef list out
    cdef str tok
    if not cleaned:
        return u""
    out = []
    for tok in cleaned.split(u" "):
        out.append(stem_token(tok))
    return u" ".join(out)
