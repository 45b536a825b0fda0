"""Streaming MT controller: sentinel-delimited history and gated emission.

Committed ASR words accumulate in an active source chunk. Each step asks
the backend for beams over (history, active source, committed target),
emits whatever the beam vote agrees on, and, when the sentinel token is
committed, consolidates the closed sentence pair into the history. The
source-side cut for that consolidation comes from the attention of the
token preceding the sentinel: the most-attended active source position is
the last word considered translated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .backends import MtBackend, MtRequest
from .core import (
    SENTINEL,
    BeamSet,
    EmissionRecord,
    InvalidArgumentError,
    ProtocolError,
    StreamHistory,
    VirtualClock,
)
from .policy import RalcpConfig, WaitKConfig, ralcp_emit, waitk_allows

HISTORY_REMOVE_MODES = ("oldest_sentence_pair", "word_count")


@dataclass(frozen=True)
class MtStreamConfig:
    ralcp: RalcpConfig = RalcpConfig()
    waitk: WaitKConfig = WaitKConfig()
    max_buffer_words: int = 80
    history_remove: str = "oldest_sentence_pair"
    history_remove_words: int = 20
    attention_layer_tag: str = "6"

    def __post_init__(self) -> None:
        if self.max_buffer_words < 1:
            raise InvalidArgumentError("max_buffer_words must be >= 1")
        if self.history_remove not in HISTORY_REMOVE_MODES:
            raise InvalidArgumentError(
                f"history_remove must be one of {HISTORY_REMOVE_MODES}, "
                f"got {self.history_remove!r}"
            )
        if self.history_remove_words < 1:
            raise InvalidArgumentError("history_remove_words must be >= 1")


@dataclass(frozen=True)
class SegmentClosure:
    """Bookkeeping for one closed segment: where the source was cut."""

    cut_index: int
    target_tokens: tuple[str, ...]


def segment_source(attention_row: Sequence[float]) -> int:
    """Index of the most-attended source position; ties take the largest.

    Consuming more source on a tie keeps the active buffer smaller.
    """
    if not attention_row:
        raise InvalidArgumentError("attention row must be non-empty")
    if any(w < 0 for w in attention_row):
        raise InvalidArgumentError("attention weights must be >= 0")
    best = 0
    for i, w in enumerate(attention_row):
        if w >= attention_row[best]:
            best = i
    return best


class MtStreamController:
    """One streaming translation session over a shared virtual clock."""

    def __init__(
        self, config: MtStreamConfig, backend: MtBackend, clock: VirtualClock
    ) -> None:
        self.config = config
        self.backend = backend
        self.clock = clock
        self.history = StreamHistory()
        self.segment_ordinal = 0
        self.segment_source_words_read = 0
        self.closures: list[SegmentClosure] = []
        self.translate_calls = 0
        self.evictions = 0
        self.dropped_beams = 0

    def step(self, new_source_words: Sequence[str]) -> list[EmissionRecord]:
        """Feed freshly committed source words; emit whatever agrees.

        A step with no new words is a no-op. A backend failure propagates
        before any state change, so the step is retryable.
        """
        if not new_source_words:
            return []
        for word in new_source_words:
            if not word or any(ch.isspace() for ch in word):
                raise InvalidArgumentError(f"bad source word {word!r}")
            if word == SENTINEL:
                raise InvalidArgumentError(
                    f"the reserved sentinel {SENTINEL!r} cannot appear as input"
                )
        self.history.active_source.extend(new_source_words)
        self.segment_source_words_read += len(new_source_words)
        if not waitk_allows(self.config.waitk, self.segment_source_words_read):
            return []
        return self._translate_and_emit()

    def flush(self, max_rounds: int = 64) -> list[EmissionRecord]:
        """End of stream: keep translating the leftover active source.

        The wait-k gate is bypassed; with nothing left to read, holding
        output back no longer prevents anything. Stops at the first round
        that emits nothing.
        """
        records: list[EmissionRecord] = []
        for _ in range(max_rounds):
            if not self.history.active_source:
                break
            emitted = self._translate_and_emit()
            records.extend(emitted)
            if not emitted:
                break
        return records

    def _translate_and_emit(self) -> list[EmissionRecord]:
        history = self.history
        request = MtRequest(
            history_source=tuple(tuple(s) for s in history.source_sentences),
            history_target=tuple(tuple(s) for s in history.target_sentences),
            active_source=tuple(history.active_source),
            committed_target=tuple(history.active_target_committed),
            beam_size=self.config.ralcp.beam_size,
            attention_layer_tag=self.config.attention_layer_tag,
        )
        response = self.backend.translate(request)
        self.clock.charge_compute(response.compute_cost_s)
        self.translate_calls += 1
        beams = self._validated(response.beams, request)

        committed_before = len(history.active_target_committed)
        emitted = ralcp_emit(beams, committed_before, self.config.ralcp)
        records = []
        for token in emitted:
            history.active_target_committed.append(token)
            records.append(
                EmissionRecord(
                    token=token,
                    segment_ordinal=self.segment_ordinal,
                    nca_time_s=self.clock.audio_available_s,
                    ca_time_s=self.clock.now_s,
                )
            )
        if emitted and emitted[-1] == SENTINEL:
            if not self._close_segment(beams):
                records.pop()
        self._evict()
        return records

    def _validated(self, beams: BeamSet, request: MtRequest) -> BeamSet:
        """Enforce the response contract; drop beams that rewrite history."""
        active_len = len(request.active_source)
        committed = request.committed_target
        kept = []
        for b, beam in enumerate(beams.beams):
            for j, row in enumerate(beam.attention):
                if len(row) != active_len:
                    raise ProtocolError(
                        f"beam {b} attention row {j} has length {len(row)}, "
                        f"expected {active_len} active source words"
                    )
            if beam.tokens[: len(committed)] != committed and len(beam.tokens) > len(
                committed
            ):
                self.dropped_beams += 1
                continue
            kept.append(beam)
        return BeamSet(tuple(kept), beams.requested_size)

    def _close_segment(self, beams: BeamSet) -> bool:
        history = self.history
        segment_tokens = tuple(history.active_target_committed)
        sentinel_pos = len(segment_tokens) - 1
        if sentinel_pos == 0:
            # Degenerate: the sentinel opened the segment. Close an empty
            # target segment against the first source word if one exists,
            # otherwise drop the sentinel to avoid an unpaired entry.
            if not history.active_source:
                history.active_target_committed.clear()
                return False
            cut = 0
        else:
            winner = next(
                (
                    b
                    for b in beams.beams
                    if len(b.tokens) > sentinel_pos and b.tokens[sentinel_pos] == SENTINEL
                ),
                None,
            )
            if winner is None:
                raise ProtocolError(
                    "no beam holds the committed sentinel; cannot segment source"
                )
            cut = segment_source(winner.attention[sentinel_pos - 1])
        history.source_sentences.append(history.active_source[: cut + 1])
        history.target_sentences.append(list(segment_tokens[:-1]))
        history.active_source = history.active_source[cut + 1 :]
        history.active_target_committed.clear()
        history.check_paired()
        self.closures.append(SegmentClosure(cut, segment_tokens))
        self.segment_ordinal += 1
        # Unconsumed words were already read; they count toward the new
        # segment's wait-k gate.
        self.segment_source_words_read = len(history.active_source)
        return True

    def _evict(self) -> None:
        history = self.history
        config = self.config
        while history.buffered_source_words() > config.max_buffer_words:
            if config.history_remove == "oldest_sentence_pair":
                if not history.source_sentences:
                    break
                history.source_sentences.pop(0)
                history.target_sentences.pop(0)
            else:
                if history.history_source_words() == 0:
                    break
                _drop_oldest_words(history.source_sentences, config.history_remove_words)
                _drop_oldest_words(history.target_sentences, config.history_remove_words)
                while (
                    history.source_sentences
                    and not history.source_sentences[0]
                    and not history.target_sentences[0]
                ):
                    history.source_sentences.pop(0)
                    history.target_sentences.pop(0)
            self.evictions += 1


def _drop_oldest_words(sentences: list[list[str]], count: int) -> None:
    remaining = count
    for sentence in sentences:
        if remaining <= 0:
            break
        taken = min(len(sentence), remaining)
        del sentence[:taken]
        remaining -= taken
