"""Shared value types, error taxonomy, and the virtual clock.

All timing is in seconds as 64-bit floats. Producers are deterministic, so
timestamp comparisons are exact (no epsilon). ``SENTINEL`` is a reserved
token string: inputs containing it as a word are rejected at ingestion
rather than escaped.
"""

from __future__ import annotations

from dataclasses import dataclass, field

SENTINEL = "[SEP]"

ATTENTION_SUM_TOL = 1e-6


class InvalidArgumentError(ValueError):
    """A caller violated an operation's contract (bad value, bad shape)."""


class BackendError(RuntimeError):
    """A backend call failed (timeout, crash, unavailable). Retryable."""


class ProtocolError(RuntimeError):
    """A backend reply violated the wire schema or an in-process contract."""


@dataclass(frozen=True)
class TimedWord:
    """A word with absolute start/end timestamps in source-audio seconds."""

    text: str
    start_s: float
    end_s: float

    def __post_init__(self) -> None:
        if not self.text:
            raise InvalidArgumentError("TimedWord.text must be non-empty")
        if any(ch.isspace() for ch in self.text):
            raise InvalidArgumentError(
                f"TimedWord.text contains whitespace: {self.text!r}"
            )
        if self.text == SENTINEL:
            raise InvalidArgumentError(
                f"the reserved sentinel {SENTINEL!r} cannot appear as input text"
            )
        if self.start_s < 0:
            raise InvalidArgumentError(f"start_s must be >= 0, got {self.start_s}")
        if self.start_s > self.end_s:
            raise InvalidArgumentError(
                f"start_s {self.start_s} > end_s {self.end_s} for {self.text!r}"
            )


@dataclass(frozen=True)
class AsrHypothesis:
    """One incremental ASR decode over an audio window.

    Timestamps are absolute: ``window_offset_s`` (the window start) has
    already been applied to every word.
    """

    words: tuple[TimedWord, ...]
    window_offset_s: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "words", tuple(self.words))
        if self.window_offset_s < 0:
            raise InvalidArgumentError(
                f"window_offset_s must be >= 0, got {self.window_offset_s}"
            )
        for a, b in zip(self.words, self.words[1:]):
            if a.end_s > b.end_s:
                raise InvalidArgumentError(
                    f"word end times must be non-decreasing: {a.text!r} ends "
                    f"{a.end_s} after {b.text!r} ends {b.end_s}"
                )

    def texts(self) -> list[str]:
        return [w.text for w in self.words]


@dataclass(frozen=True)
class BeamHypothesis:
    """A candidate target sequence with per-token attention rows.

    ``attention[j]`` holds one non-negative weight per active source word
    position at generation time; the producer normalizes each row to sum
    to 1.
    """

    tokens: tuple[str, ...]
    score: float
    attention: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(
            self, "attention", tuple(tuple(row) for row in self.attention)
        )
        if len(self.attention) != len(self.tokens):
            raise InvalidArgumentError(
                f"beam has {len(self.tokens)} tokens but "
                f"{len(self.attention)} attention rows"
            )
        for j, row in enumerate(self.attention):
            if not row:
                raise InvalidArgumentError(f"attention row {j} is empty")
            if any(w < 0 for w in row):
                raise InvalidArgumentError(f"attention row {j} has negative weight")
            if abs(sum(row) - 1.0) > ATTENTION_SUM_TOL:
                raise InvalidArgumentError(
                    f"attention row {j} sums to {sum(row)}, expected 1"
                )


@dataclass(frozen=True)
class BeamSet:
    """Beam search output, ordered by descending score.

    Backends may return fewer beams than requested, never more.
    """

    beams: tuple[BeamHypothesis, ...]
    requested_size: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "beams", tuple(self.beams))
        if self.requested_size < 0:
            raise InvalidArgumentError("requested_size must be >= 0")
        if len(self.beams) > self.requested_size:
            raise InvalidArgumentError(
                f"{len(self.beams)} beams exceed requested size {self.requested_size}"
            )
        for a, b in zip(self.beams, self.beams[1:]):
            if a.score < b.score:
                raise InvalidArgumentError("beams must be ordered by descending score")


@dataclass
class StreamHistory:
    """Paired source/target sentence history plus the active (open) chunk.

    ``source_sentences[i]`` translates to ``target_sentences[i]``; the lists
    stay the same length so the oldest pairs can be evicted together without
    desynchronizing the stream.
    """

    source_sentences: list[list[str]] = field(default_factory=list)
    target_sentences: list[list[str]] = field(default_factory=list)
    active_source: list[str] = field(default_factory=list)
    active_target_committed: list[str] = field(default_factory=list)

    def history_source_words(self) -> int:
        return sum(len(s) for s in self.source_sentences)

    def history_target_words(self) -> int:
        return sum(len(s) for s in self.target_sentences)

    def buffered_source_words(self) -> int:
        """History plus active source word count (the eviction budget)."""
        return self.history_source_words() + len(self.active_source)

    def check_paired(self) -> None:
        if len(self.source_sentences) != len(self.target_sentences):
            raise InvalidArgumentError(
                f"history desynchronized: {len(self.source_sentences)} source "
                f"vs {len(self.target_sentences)} target sentences"
            )


@dataclass(frozen=True)
class EmissionRecord:
    """One emitted target token with its NCA and CA commitment times.

    NCA time is the source audio consumed when the token was committed; CA
    time is the virtual wall clock, which additionally counts compute cost.
    """

    token: str
    segment_ordinal: int
    nca_time_s: float
    ca_time_s: float

    def __post_init__(self) -> None:
        if self.segment_ordinal < 0:
            raise InvalidArgumentError("segment_ordinal must be >= 0")
        if self.nca_time_s > self.ca_time_s:
            raise InvalidArgumentError(
                f"nca_time_s {self.nca_time_s} > ca_time_s {self.ca_time_s} "
                f"for {self.token!r}"
            )


def check_emission_log(records: list[EmissionRecord]) -> None:
    """Validate the append-only log invariants: NCA times non-decreasing."""
    for a, b in zip(records, records[1:]):
        if a.nca_time_s > b.nca_time_s:
            raise InvalidArgumentError(
                f"emission log not monotone: {a.token!r} at {a.nca_time_s} "
                f"precedes {b.token!r} at {b.nca_time_s}"
            )


@dataclass
class VirtualClock:
    """Deterministic simulation clock.

    ``audio_available_s`` tracks how much source audio exists; ``now_s`` is
    the virtual wall clock. Compute cost only ever pushes ``now_s`` forward,
    and audio arrival pulls ``now_s`` up to the audio front (audio cannot
    arrive from the future), so ``now_s >= audio_available_s`` holds after
    any backend call completes.
    """

    audio_available_s: float = 0.0
    now_s: float = 0.0

    def advance_audio(self, delta_s: float) -> None:
        if delta_s < 0:
            raise InvalidArgumentError(f"audio delta must be >= 0, got {delta_s}")
        self.audio_available_s += delta_s
        self.now_s = max(self.now_s, self.audio_available_s)

    def charge_compute(self, cost_s: float) -> None:
        if cost_s < 0:
            raise InvalidArgumentError(f"compute cost must be >= 0, got {cost_s}")
        self.now_s += cost_s
