"""End-to-end wiring: trace replay through ASR and MT controllers.

A trace is a list of audio-availability events. Each event advances the
shared virtual clock, triggers an ASR step, and feeds whatever words were
committed into the MT step. ``finalize`` drains both controllers at end of
stream. Replaying the same trace with the same configuration and seed
yields a byte-identical emission log.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

from .asr_stream import AsrStreamConfig, AsrStreamController
from .backends import AsrBackend, MtBackend
from .core import EmissionRecord, InvalidArgumentError, VirtualClock
from .mt_stream import MtStreamConfig, MtStreamController
from .policy import RalcpConfig, WaitKConfig
from .textnorm import MatchConfig

PIPELINE_MODES = ("adapted", "baseline")


@dataclass(frozen=True)
class PipelineConfig:
    asr: AsrStreamConfig
    mt: MtStreamConfig
    matcher: MatchConfig
    mode: str
    seed: int = 0

    def __post_init__(self) -> None:
        if self.mode not in PIPELINE_MODES:
            raise InvalidArgumentError(
                f"mode must be one of {PIPELINE_MODES}, got {self.mode!r}"
            )
        expected = "oldest_sentence_pair" if self.mode == "adapted" else "word_count"
        if self.mt.history_remove != expected:
            raise InvalidArgumentError(
                f"mode {self.mode!r} requires history_remove {expected!r}, "
                f"got {self.mt.history_remove!r}"
            )


def preset_config(mode: str, seed: int = 0) -> PipelineConfig:
    """Inference defaults for the two system variants.

    Shared: 1 s initial wait, 1 s decode chunk, ASR beam 5, wait-k 3,
    agreement ratio 0.5, MT beam 10, attention layer tag "6", 80-word
    buffer. The variants differ only in history eviction: the adapted
    system drops the oldest sentence pair, the baseline drops the oldest
    20 words from each side.
    """
    if mode not in PIPELINE_MODES:
        raise InvalidArgumentError(f"mode must be one of {PIPELINE_MODES}, got {mode!r}")
    matcher = MatchConfig(levenshtein_threshold=2)
    asr = AsrStreamConfig(
        max_window_s=30.0,
        min_chunk_s=1.0,
        initial_wait_s=1.0,
        matcher=matcher,
        backend_beam=5,
    )
    mt = MtStreamConfig(
        ralcp=RalcpConfig(agreement_ratio=0.5, beam_size=10),
        waitk=WaitKConfig(k=3),
        max_buffer_words=80,
        history_remove="oldest_sentence_pair" if mode == "adapted" else "word_count",
        history_remove_words=20,
        attention_layer_tag="6",
    )
    return PipelineConfig(asr=asr, mt=mt, matcher=matcher, mode=mode, seed=seed)


@dataclass(frozen=True)
class TraceEvent:
    t: float
    duration_s: float

    def __post_init__(self) -> None:
        if self.duration_s < 0:
            raise InvalidArgumentError("event duration must be >= 0")
        if self.t < 0:
            raise InvalidArgumentError("event time must be >= 0")


def read_trace(path: str | Path) -> list[TraceEvent]:
    """Load a JSONL trace of {"t": s, "kind": "audio", "dur": s} events."""
    events = []
    last_t = 0.0
    for lineno, line in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise InvalidArgumentError(f"{path}:{lineno}: bad JSON: {exc}") from exc
        if not isinstance(obj, dict) or obj.get("kind") != "audio":
            raise InvalidArgumentError(
                f"{path}:{lineno}: expected an audio event, got {line!r}"
            )
        try:
            event = TraceEvent(t=float(obj["t"]), duration_s=float(obj["dur"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidArgumentError(f"{path}:{lineno}: bad event: {exc}") from exc
        if event.t < last_t:
            raise InvalidArgumentError(
                f"{path}:{lineno}: event times must be non-decreasing"
            )
        last_t = event.t
        events.append(event)
    return events


@dataclass
class RunSummary:
    audio_s: float = 0.0
    events: int = 0
    words_committed: int = 0
    segments_closed: int = 0
    tokens_emitted: int = 0
    evictions: int = 0
    asr_calls: int = 0
    mt_calls: int = 0
    sentence_trims: int = 0
    force_trims: int = 0
    final_now_s: float = 0.0

    def to_dict(self) -> dict:
        return {
            "audio_s": self.audio_s,
            "events": self.events,
            "words_committed": self.words_committed,
            "segments_closed": self.segments_closed,
            "tokens_emitted": self.tokens_emitted,
            "evictions": self.evictions,
            "asr_calls": self.asr_calls,
            "mt_calls": self.mt_calls,
            "sentence_trims": self.sentence_trims,
            "force_trims": self.force_trims,
            "final_now_s": self.final_now_s,
        }


class Pipeline:
    """One stream: a clock, an ASR controller, and an MT controller."""

    def __init__(
        self,
        config: PipelineConfig,
        asr_backend: AsrBackend,
        mt_backend: MtBackend,
        stream_id: str = "stream0",
    ) -> None:
        self.config = config
        self.clock = VirtualClock()
        self.asr = AsrStreamController(config.asr, asr_backend, self.clock, stream_id)
        self.mt = MtStreamController(config.mt, mt_backend, self.clock)
        self.records: list[EmissionRecord] = []

    def feed_audio(self, duration_s: float) -> list[EmissionRecord]:
        """Advance audio availability and run one controller round."""
        self.clock.advance_audio(duration_s)
        words = self.asr.step()
        emitted = self.mt.step([w.text for w in words])
        self.records.extend(emitted)
        return emitted

    def finalize(self) -> list[EmissionRecord]:
        """Drain both controllers at end of stream."""
        words = self.asr.flush()
        emitted = self.mt.step([w.text for w in words])
        emitted += self.mt.flush()
        self.records.extend(emitted)
        return emitted

    def run_trace(
        self, events: Sequence[TraceEvent]
    ) -> tuple[list[EmissionRecord], RunSummary]:
        for event in events:
            self.feed_audio(event.duration_s)
        self.finalize()
        summary = RunSummary(
            audio_s=self.clock.audio_available_s,
            events=len(events),
            words_committed=len(self.asr.state.committed),
            segments_closed=self.mt.segment_ordinal,
            tokens_emitted=len(self.records),
            evictions=self.mt.evictions,
            asr_calls=self.asr.decodes,
            mt_calls=self.mt.translate_calls,
            sentence_trims=self.asr.sentence_trims,
            force_trims=self.asr.force_trims,
            final_now_s=self.clock.now_s,
        )
        return list(self.records), summary


def apply_overrides(config: PipelineConfig, overrides: dict) -> PipelineConfig:
    """Apply a nested override dict from a config file onto the preset.

    Recognized sections: "asr", "mt", "ralcp", "waitk", "matcher", plus the
    top-level "seed". Unknown keys are rejected so typos cannot silently
    run with defaults.
    """
    asr = config.asr
    mt = config.mt
    matcher = config.matcher
    seed = config.seed
    for section, value in overrides.items():
        if section == "seed":
            seed = int(value)
            continue
        if not isinstance(value, dict):
            raise InvalidArgumentError(f"override section {section!r} must be an object")
        try:
            if section == "asr":
                asr = replace(asr, **value)
            elif section == "mt":
                mt = replace(mt, **value)
            elif section == "ralcp":
                mt = replace(mt, ralcp=replace(mt.ralcp, **value))
            elif section == "waitk":
                mt = replace(mt, waitk=replace(mt.waitk, **value))
            elif section == "matcher":
                matcher = replace(matcher, **value)
                asr = replace(asr, matcher=matcher)
            else:
                raise InvalidArgumentError(f"unknown override section {section!r}")
        except TypeError as exc:
            raise InvalidArgumentError(
                f"bad override in section {section!r}: {exc}"
            ) from exc
    return PipelineConfig(asr=asr, mt=mt, matcher=matcher, mode=config.mode, seed=seed)
