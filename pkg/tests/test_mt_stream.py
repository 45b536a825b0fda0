from __future__ import annotations

import random

import pytest

from helpers import make_beam
from simulstream.backends import MockMtBackend, MtRequest, MtResponse, MtScript
from simulstream.core import (
    SENTINEL,
    BeamSet,
    InvalidArgumentError,
    ProtocolError,
    VirtualClock,
)
from simulstream.mt_stream import (
    MtStreamConfig,
    MtStreamController,
    segment_source,
)
from simulstream.policy import RalcpConfig, WaitKConfig


def _controller(backend=None, **config_kwargs) -> MtStreamController:
    backend = backend if backend is not None else MockMtBackend(MtScript())
    config = MtStreamConfig(**config_kwargs)
    return MtStreamController(config, backend, VirtualClock())


def test_segment_source_examples() -> None:
    assert segment_source([0.0, 0.0, 1.0, 0.0]) == 2
    assert segment_source([0.25, 0.25, 0.25, 0.25]) == 3  # tie takes the largest
    assert segment_source([0.1, 0.7, 0.2]) == 1
    with pytest.raises(InvalidArgumentError):
        segment_source([])
    with pytest.raises(InvalidArgumentError):
        segment_source([0.5, -0.1])


def test_full_sentence_closes_one_segment() -> None:
    controller = _controller(waitk=WaitKConfig(k=3))
    records = controller.step(["der", "hund", "lief", "nach", "hause."])
    tokens = [r.token for r in records]
    assert tokens == ["DER", "HUND", "LIEF", "NACH", "HAUSE.", SENTINEL]
    assert len(controller.closures) == 1
    assert controller.closures[0].cut_index == 4
    assert controller.history.source_sentences == [
        ["der", "hund", "lief", "nach", "hause."]
    ]
    assert controller.history.target_sentences == [
        ["DER", "HUND", "LIEF", "NACH", "HAUSE."]
    ]
    assert controller.history.active_source == []
    assert controller.segment_ordinal == 1


def test_waitk_gate_holds_short_input() -> None:
    controller = _controller(waitk=WaitKConfig(k=3))
    assert controller.step(["nur", "zwei"]) == []
    assert controller.translate_calls == 0
    # the third word opens the gate
    records = controller.step(["drei."])
    assert [r.token for r in records] == ["NUR", "ZWEI", "DREI.", SENTINEL]


def test_waitk_gate_restarts_after_closure() -> None:
    controller = _controller(waitk=WaitKConfig(k=3))
    controller.step(["eins", "zwei", "drei."])
    assert controller.segment_ordinal == 1
    # New segment: a single word stays gated even though the stream is warm.
    assert controller.step(["vier"]) == []
    assert controller.translate_calls == 1


def test_empty_step_is_a_noop() -> None:
    controller = _controller()
    assert controller.step([]) == []
    assert controller.translate_calls == 0


def test_step_rejects_bad_words() -> None:
    controller = _controller()
    with pytest.raises(InvalidArgumentError):
        controller.step(["ok", SENTINEL])
    with pytest.raises(InvalidArgumentError):
        controller.step(["two words"])


def test_emission_is_append_only_across_steps() -> None:
    rng = random.Random(71)
    backend = MockMtBackend(MtScript(tail_truncate_max=2, tail_perturb_prob=0.4, seed=7))
    controller = MtStreamController(
        MtStreamConfig(ralcp=RalcpConfig(agreement_ratio=0.5, beam_size=10)),
        backend,
        VirtualClock(),
    )
    emitted: list[str] = []
    vocab = ["eins", "zwei", "drei", "vier", "fünf"]
    for i in range(30):
        word = rng.choice(vocab) + ("." if rng.random() < 0.25 else "")
        records = controller.step([word])
        for r in records:
            emitted.append(r.token)
        # Committed target of the open segment always extends what we saw.
        segment = controller.history.active_target_committed
        if segment:
            assert emitted[-len(segment) :] == segment


def test_eviction_adapted_drops_oldest_pair() -> None:
    controller = _controller(max_buffer_words=80)
    history = controller.history
    history.source_sentences = [["w"] * 15, ["w"] * 10]
    history.target_sentences = [["t"] * 15, ["t"] * 10]
    history.active_source = ["w"] * 65  # 90 buffered in total
    controller._evict()
    assert history.source_sentences == [["w"] * 10]
    assert history.buffered_source_words() == 75
    assert controller.evictions == 1
    history.check_paired()


def test_eviction_baseline_drops_words_from_both_sides() -> None:
    controller = _controller(
        max_buffer_words=80, history_remove="word_count", history_remove_words=20
    )
    history = controller.history
    history.source_sentences = [["s"] * 15, ["s"] * 10]
    history.target_sentences = [["t"] * 12, ["t"] * 9]
    history.active_source = ["w"] * 65
    controller._evict()
    # 90 source words -> one pass removes 20 from each side's history
    assert history.history_source_words() == 5
    assert history.history_target_words() == 1
    assert len(history.source_sentences) == len(history.target_sentences)
    assert history.buffered_source_words() == 70


def test_eviction_stops_when_only_active_remains() -> None:
    controller = _controller(max_buffer_words=10)
    controller.history.active_source = ["w"] * 25
    controller._evict()  # nothing evictable; must not spin forever
    assert controller.history.buffered_source_words() == 25


def test_attention_row_length_mismatch_is_a_protocol_error() -> None:
    class BadBackend:
        def translate(self, request: MtRequest) -> MtResponse:
            beam = make_beam(("X",), src_len=max(1, len(request.active_source) - 1))
            return MtResponse(BeamSet((beam,), request.beam_size), 0.0)

    controller = _controller(BadBackend(), waitk=WaitKConfig(k=1))
    with pytest.raises(ProtocolError, match="attention row"):
        controller.step(["a", "b"])


def test_beams_rewriting_committed_prefix_are_dropped() -> None:
    class Rewriter:
        def translate(self, request: MtRequest) -> MtResponse:
            good = make_beam(
                (*request.committed_target, "NEXT"),
                score=0.0,
                src_len=len(request.active_source),
            )
            bad = make_beam(
                ("ROGUE",) * (len(request.committed_target) + 1),
                score=-1.0,
                src_len=len(request.active_source),
            )
            return MtResponse(BeamSet((good, bad), 2), 0.0)

    controller = _controller(
        Rewriter(), ralcp=RalcpConfig(agreement_ratio=0.5, beam_size=2), waitk=WaitKConfig(k=1)
    )
    controller.step(["a"])
    assert controller.history.active_target_committed == ["NEXT"]
    records = controller.step(["b"])
    assert controller.dropped_beams >= 1
    assert all(r.token != "ROGUE" for r in records)


def test_flush_translates_leftovers_without_waitk() -> None:
    controller = _controller(waitk=WaitKConfig(k=5))
    assert controller.step(["nur", "zwei."]) == []
    records = controller.flush()
    assert [r.token for r in records] == ["NUR", "ZWEI.", SENTINEL]
    assert controller.history.active_source == []


def test_records_carry_clock_times() -> None:
    backend = MockMtBackend(MtScript(cost_base_s=0.5, cost_per_word_s=0.0))
    clock = VirtualClock()
    clock.advance_audio(4.0)
    controller = MtStreamController(MtStreamConfig(), backend, clock)
    records = controller.step(["a", "b", "c."])
    assert records
    for r in records:
        assert r.nca_time_s == 4.0
        assert r.ca_time_s == pytest.approx(4.5)


def test_config_validation() -> None:
    with pytest.raises(InvalidArgumentError):
        MtStreamConfig(max_buffer_words=0)
    with pytest.raises(InvalidArgumentError):
        MtStreamConfig(history_remove="nonsense")
