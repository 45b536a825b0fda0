"""Word normalization, edit distance, and rule-based sentence boundaries.

These are the primitives behind relaxed word agreement: casing, punctuation
and small spelling differences between consecutive ASR hypotheses should not
stall commitment.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .core import InvalidArgumentError

DEFAULT_ABBREVIATIONS = frozenset(
    {"dr", "mr", "mrs", "ms", "prof", "e.g", "i.e", "etc", "vs", "fig", "eq"}
)

_TERMINALS = ".!?…"
_CLOSERS = "\"'”’»)]}"


@dataclass(frozen=True)
class MatchConfig:
    """Relaxed word-equality settings for the commitment policy."""

    levenshtein_threshold: int = 2
    strip_punctuation: bool = True
    lowercase: bool = True

    def __post_init__(self) -> None:
        if self.levenshtein_threshold < 0:
            raise InvalidArgumentError(
                f"levenshtein_threshold must be >= 0, got {self.levenshtein_threshold}"
            )


def _is_punctuation(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def normalize_word(word: str, config: MatchConfig = MatchConfig()) -> str:
    """Lowercase and strip Unicode punctuation per the config flags.

    May return "" when the word was entirely punctuation.
    """
    out = word
    if config.lowercase:
        out = out.lower()
    if config.strip_punctuation:
        out = "".join(ch for ch in out if not _is_punctuation(ch))
    return out


def levenshtein(a: Sequence, b: Sequence) -> int:
    """Unit-cost insert/delete/substitute edit distance.

    Works on any element sequence, so it serves both character-level word
    matching and word-level segment alignment.
    """
    n, m = len(a), len(b)
    if n > m:
        a, b = b, a
        n, m = m, n
    current = list(range(n + 1))
    for i in range(1, m + 1):
        previous, current = current, [i] + [0] * n
        for j in range(1, n + 1):
            add = previous[j] + 1
            delete = current[j - 1] + 1
            change = previous[j - 1] + (a[j - 1] != b[i - 1])
            current[j] = min(add, delete, change)
    return current[n]


def words_match(a: str, b: str, config: MatchConfig = MatchConfig()) -> bool:
    """True when the normalized forms are within the edit-distance threshold."""
    return (
        levenshtein(normalize_word(a, config), normalize_word(b, config))
        <= config.levenshtein_threshold
    )


def has_terminal_mark(word: str) -> bool:
    """True when the word ends with . ! ? or an ellipsis, ignoring closers."""
    stripped = word.rstrip(_CLOSERS)
    return bool(stripped) and stripped[-1] in _TERMINALS


def is_sentence_terminal(
    word: str, abbreviations: frozenset[str] = DEFAULT_ABBREVIATIONS
) -> bool:
    """True when the word ends a sentence.

    The word must end with a terminal mark (optionally followed by closing
    quotes/brackets) and, stripped of that punctuation, must not be a known
    abbreviation or a single letter (initials like "J.").
    """
    if not has_terminal_mark(word):
        return False
    base = word.rstrip(_CLOSERS)[:-1].lower()
    if len(base) == 1:
        return False
    return base not in abbreviations


def detect_sentence_end(
    words: Sequence[str],
    from_index: int = 0,
    abbreviations: frozenset[str] = DEFAULT_ABBREVIATIONS,
) -> Optional[int]:
    """Index of the first sentence-final word at or after ``from_index``."""
    if from_index > len(words):
        raise InvalidArgumentError(
            f"from_index {from_index} beyond word count {len(words)}"
        )
    for i in range(from_index, len(words)):
        if is_sentence_terminal(words[i], abbreviations):
            return i
    return None


def load_abbreviations(path: str | Path) -> frozenset[str]:
    """Load an abbreviation list: plain text, one lowercase entry per line."""
    entries = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        entry = line.strip()
        if entry:
            entries.add(entry.lower())
    return frozenset(entries)
