"""Shared English stopword list.

Used by two consumers that must agree: the suffix stemmer skips these
tokens (function words have no useful lemma key and naive stripping
mangles them, e.g. "this" -> "thi"), and the heuristic language filter
requires at least one of them to call a text English.
"""

STOPWORDS = frozenset(
    """
    a about after again all also an and any are as at be because been being
    but by can could did do does for from had has have he her here his how
    i if in into is it its just like me more most my no not now of on only
    or other our out over she so some than that the their them then there
    these they this those through to under up very was we were what when
    where which who why will with would you your
    """.split()
)
