"""Emission policies: relaxed prefix agreement, beam voting, and wait-k.

Three gates decide when text may leave the system:

* ``agreed_prefix_len`` commits ASR words once two consecutive hypotheses
  agree on them (relaxed word equality).
* ``ralcp_emit`` commits MT tokens once enough beams vote for the same
  token at the next position.
* ``waitk_allows`` holds back all MT output at the start of each segment
  until k source words have been read, to suppress early hallucination.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .core import SENTINEL, BeamSet, InvalidArgumentError
from .textnorm import MatchConfig, words_match


@dataclass(frozen=True)
class RalcpConfig:
    """Beam-voting settings.

    ``agreement_ratio`` is the fraction of the requested beam pool that must
    agree on a token before it is emitted. When ``filter_empty`` is on,
    beams with nothing beyond the committed prefix are removed from the
    vote; the vote bar stays at ceil(ratio * requested_size) unless
    ``recompute_votes_after_filter`` is set, in which case it is recomputed
    from the survivor count (the laxer reading; off by default because the
    fixed bar is the conservative guard against hallucination).
    """

    agreement_ratio: float = 0.5
    beam_size: int = 10
    filter_empty: bool = True
    recompute_votes_after_filter: bool = False

    def __post_init__(self) -> None:
        if not 0 < self.agreement_ratio <= 1:
            raise InvalidArgumentError(
                f"agreement_ratio must be in (0, 1], got {self.agreement_ratio}"
            )
        if self.beam_size < 1:
            raise InvalidArgumentError(f"beam_size must be >= 1, got {self.beam_size}")


@dataclass(frozen=True)
class WaitKConfig:
    """Initial per-segment hold: no output until k source words are read."""

    k: int = 3

    def __post_init__(self) -> None:
        if self.k < 1:
            raise InvalidArgumentError(f"k must be >= 1, got {self.k}")


def agreed_prefix_len(
    prev: Sequence[str],
    curr: Sequence[str],
    committed: int,
    matcher: MatchConfig = MatchConfig(),
) -> int:
    """Length of the relaxed common prefix of two hypotheses.

    The first ``committed`` positions are already emitted and skipped.
    Returns the largest n >= committed such that every position in
    [committed, n) matches under the relaxed rule.
    """
    if committed < 0:
        raise InvalidArgumentError(f"committed must be >= 0, got {committed}")
    n = committed
    limit = min(len(prev), len(curr))
    while n < limit and words_match(prev[n], curr[n], matcher):
        n += 1
    return n


def votes_needed(agreement_ratio: float, pool: int) -> int:
    # Fraction keeps ceil exact for ratios like 0.6 whose float products
    # round up (0.6 * 5 -> 3.0000000000000004).
    return math.ceil(Fraction(agreement_ratio) * pool)


def ralcp_emit(beams: BeamSet, committed: int, config: RalcpConfig) -> list[str]:
    """Vote the next tokens out of a beam set, never retracting.

    Walks positions starting at ``committed``; at each position the
    plurality token (ties broken by the highest-scoring beam holding the
    token) is emitted iff its vote count reaches the bar. Stops at the
    first failing position, or right after emitting the sentinel, which
    closes the segment for this call.
    """
    if committed < 0:
        raise InvalidArgumentError(f"committed must be >= 0, got {committed}")
    voters = list(beams.beams)
    if config.filter_empty:
        voters = [b for b in voters if len(b.tokens) > committed]
    pool = len(voters) if config.recompute_votes_after_filter else beams.requested_size
    needed = votes_needed(config.agreement_ratio, pool)

    emitted: list[str] = []
    position = committed
    while True:
        counts: dict[str, int] = {}
        first_holder: dict[str, int] = {}
        for rank, beam in enumerate(voters):
            if len(beam.tokens) > position:
                token = beam.tokens[position]
                counts[token] = counts.get(token, 0) + 1
                if token not in first_holder:
                    first_holder[token] = rank
        if not counts:
            break
        winner = max(counts, key=lambda t: (counts[t], -first_holder[t]))
        if counts[winner] < needed:
            break
        emitted.append(winner)
        position += 1
        if winner == SENTINEL:
            break
    return emitted


def waitk_allows(config: WaitKConfig, segment_source_words_read: int) -> bool:
    """True once the current segment has read at least k source words."""
    if segment_source_words_read < 0:
        raise InvalidArgumentError(
            f"segment_source_words_read must be >= 0, got {segment_source_words_read}"
        )
    return segment_source_words_read >= config.k
