"""Shared text folding used by the lexicon and the rule engine.

Folding is the single normalization both sides agree on: two strings that
fold to the same key are treated as the same surface form, which is what
makes "Hep B" / "hep-b" / "hepb" interchangeable.
"""

from __future__ import annotations

import re

_FOLD_STRIP = re.compile(r"[^a-z0-9]+")

# Word-ish units shared with the tokenizer: clinical fraction shorthand
# ("2/7" = 2 days, "2/52" = 2 weeks) stays a single unit.
WORD_RE = re.compile(r"\d+/\d+|[A-Za-z0-9]+(?:['’-][A-Za-z0-9]+)*")


def fold(s: str) -> str:
    """Collapse a surface form to its comparison key.

    Lowercases and strips everything but letters and digits, so spacing,
    hyphenation, and punctuation differences disappear: "rota-virus",
    "rota virus", and "Rotavirus" all fold to "rotavirus".
    """
    return _FOLD_STRIP.sub("", s.lower())


def word_count(s: str) -> int:
    """Number of word-ish units in a surface form (for match window sizing)."""
    return len(WORD_RE.findall(s))
