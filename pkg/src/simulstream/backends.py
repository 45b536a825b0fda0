"""Backend contracts and deterministic mock implementations.

A backend is anything that can decode an audio window into timed words
(ASR) or turn a history-plus-active-source request into a beam set (MT).
The mocks here are referentially transparent: the response is a pure
function of (script, request), which makes every pipeline test replayable
byte for byte. Compute cost is *reported* by the backend rather than
measured, so computational-aware latency is deterministic in simulation;
the wire adapters in :mod:`simulstream.wire` can switch to measured host
time when driving real servers.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Protocol

from .core import (
    SENTINEL,
    AsrHypothesis,
    BeamHypothesis,
    BeamSet,
    InvalidArgumentError,
    TimedWord,
)
from .textnorm import has_terminal_mark


@dataclass(frozen=True)
class AsrRequest:
    stream_id: str
    window_start_s: float
    window_end_s: float
    beam_size: int


@dataclass(frozen=True)
class AsrResponse:
    hypothesis: AsrHypothesis
    compute_cost_s: float


@dataclass(frozen=True)
class MtRequest:
    history_source: tuple[tuple[str, ...], ...]
    history_target: tuple[tuple[str, ...], ...]
    active_source: tuple[str, ...]
    committed_target: tuple[str, ...]
    beam_size: int
    attention_layer_tag: str


@dataclass(frozen=True)
class MtResponse:
    beams: BeamSet
    compute_cost_s: float


class AsrBackend(Protocol):
    def decode(self, request: AsrRequest) -> AsrResponse: ...


class MtBackend(Protocol):
    def translate(self, request: MtRequest) -> MtResponse: ...


@dataclass(frozen=True)
class AsrScript:
    """Ground truth for the mock ASR: the words that exist in the audio.

    Words ending within ``stabilization_delay_s`` of the window end are
    still "unstable" and come back perturbed (case flip, punctuation
    toggle, or a small character edit, never more than two raw edits);
    earlier words are returned verbatim. Perturbations depend only on
    (seed, window end, word), so identical requests get identical replies.
    """

    words: tuple[TimedWord, ...]
    audio_duration_s: float
    stabilization_delay_s: float = 0.0
    seed: int = 0
    cost_base_s: float = 0.1
    cost_per_audio_s: float = 0.01

    def __post_init__(self) -> None:
        object.__setattr__(self, "words", tuple(self.words))
        if self.audio_duration_s < 0:
            raise InvalidArgumentError("audio_duration_s must be >= 0")
        if self.stabilization_delay_s < 0:
            raise InvalidArgumentError("stabilization_delay_s must be >= 0")
        for w in self.words:
            if w.end_s > self.audio_duration_s:
                raise InvalidArgumentError(
                    f"word {w.text!r} ends at {w.end_s} beyond audio duration "
                    f"{self.audio_duration_s}"
                )


@dataclass(frozen=True)
class MtScript:
    """Deterministic word-for-word translator behind the mock MT.

    Beam 1 maps each remaining active source word through ``word_map``
    (unmapped words are uppercased) and appends the sentinel after
    sentence-final source words. Beams 2..N truncate and/or perturb the
    tail of that continuation according to the seeded schedule; attention
    rows are one-hot diagonal, optionally blurred and renormalized.
    """

    word_map: Mapping[str, str] = field(default_factory=dict)
    tail_truncate_max: int = 0
    tail_perturb_prob: float = 0.0
    attention_blur: float = 0.0
    seed: int = 0
    cost_base_s: float = 0.1
    cost_per_word_s: float = 0.01

    def __post_init__(self) -> None:
        if self.tail_truncate_max < 0:
            raise InvalidArgumentError("tail_truncate_max must be >= 0")
        if not 0 <= self.tail_perturb_prob <= 1:
            raise InvalidArgumentError("tail_perturb_prob must be in [0, 1]")
        if self.attention_blur < 0:
            raise InvalidArgumentError("attention_blur must be >= 0")

    def map_word(self, word: str) -> str:
        return self.word_map.get(word, word.upper())


def _perturb_word(text: str, rng: random.Random) -> str:
    """Return a variant within raw edit distance 2 of ``text``."""
    kind = rng.randrange(5)
    out = text
    if kind == 0:
        pass
    elif kind == 1:  # case flip on the first character
        out = text[0].swapcase() + text[1:]
    elif kind == 2:  # punctuation toggle at the end
        if text[-1] in ".," and len(text) > 1:
            out = text[:-1]
        else:
            out = text + ","
    elif kind == 3:  # one character substitution
        i = rng.randrange(len(text))
        out = text[:i] + rng.choice("abcdefgh") + text[i + 1 :]
    else:  # two character substitutions
        for _ in range(2):
            i = rng.randrange(len(out))
            out = out[:i] + rng.choice("abcdefgh") + out[i + 1 :]
    if not out or out == SENTINEL:
        return text
    return out


_EXTENT_SLACK_S = 1e-6  # absorbs float accumulation in long traces


def mock_asr_decode(script: AsrScript, request: AsrRequest) -> AsrResponse:
    """Decode a window of the scripted audio, perturbing the unstable tail."""
    start, end = request.window_start_s, request.window_end_s
    if start < 0 or start > end or end > script.audio_duration_s + _EXTENT_SLACK_S:
        raise InvalidArgumentError(
            f"window [{start}, {end}] outside audio extent "
            f"[0, {script.audio_duration_s}]"
        )
    end = min(end, script.audio_duration_s)
    stable_before = end - script.stabilization_delay_s
    words = []
    for i, w in enumerate(script.words):
        if w.start_s < start or w.end_s > end:
            continue
        text = w.text
        if w.end_s > stable_before:
            rng = random.Random(f"{script.seed}:asr:{end!r}:{i}:{w.text}")
            text = _perturb_word(w.text, rng)
        words.append(TimedWord(text, w.start_s, w.end_s))
    cost = script.cost_base_s + script.cost_per_audio_s * (end - start)
    return AsrResponse(AsrHypothesis(tuple(words), start), cost)


def _mt_fingerprint(request: MtRequest) -> str:
    return json.dumps(
        [
            [list(s) for s in request.history_source],
            [list(s) for s in request.history_target],
            list(request.active_source),
            list(request.committed_target),
            request.beam_size,
            request.attention_layer_tag,
        ],
        ensure_ascii=False,
        separators=(",", ":"),
    )


def _one_hot(index: int, length: int, blur: float, rng: random.Random) -> tuple[float, ...]:
    row = [1.0 if i == index else 0.0 for i in range(length)]
    if blur > 0:
        row = [v + blur * rng.random() for v in row]
    total = sum(row)
    return tuple(v / total for v in row)


def mock_mt_translate(script: MtScript, request: MtRequest) -> MtResponse:
    """Translate the uncovered active source into a scripted beam set."""
    active = list(request.active_source)
    cost = script.cost_base_s + script.cost_per_word_s * len(active)
    if not active:
        return MtResponse(BeamSet((), request.beam_size), cost)

    full_tokens: list[str] = []
    positions: list[int] = []
    for i, word in enumerate(active):
        full_tokens.append(script.map_word(word))
        positions.append(i)
        if has_terminal_mark(word):
            full_tokens.append(SENTINEL)
            positions.append(i)

    committed = list(request.committed_target)
    n_committed = len(committed)
    continuation = full_tokens[n_committed:]
    fingerprint = _mt_fingerprint(request)

    beams = []
    for b in range(1, request.beam_size + 1):
        rng = random.Random(f"{script.seed}:mt:{fingerprint}:{b}")
        tail = list(continuation)
        if b > 1 and script.tail_truncate_max > 0:
            cut = rng.randint(0, min(script.tail_truncate_max, len(tail)))
            if cut:
                tail = tail[:-cut]
        if b > 1 and tail and rng.random() < script.tail_perturb_prob:
            tail[-1] = tail[-1] + "~"
        tokens = committed + tail
        rows = []
        for j in range(len(tokens)):
            pos = positions[j] if j < len(positions) else len(active) - 1
            rows.append(_one_hot(pos, len(active), script.attention_blur, rng))
        beams.append(BeamHypothesis(tuple(tokens), float(-(b - 1)), tuple(rows)))
    return MtResponse(BeamSet(tuple(beams), request.beam_size), cost)


class MockAsrBackend:
    """ASR backend contract over a script; counts calls for run summaries."""

    def __init__(self, script: AsrScript) -> None:
        self.script = script
        self.calls = 0

    def decode(self, request: AsrRequest) -> AsrResponse:
        self.calls += 1
        return mock_asr_decode(self.script, request)


class MockMtBackend:
    def __init__(self, script: MtScript) -> None:
        self.script = script
        self.calls = 0

    def translate(self, request: MtRequest) -> MtResponse:
        self.calls += 1
        return mock_mt_translate(self.script, request)


def _require(mapping: dict, key: str, kind: type, where: str):
    if key not in mapping:
        raise InvalidArgumentError(f"mock script missing field {where}.{key}")
    value = mapping[key]
    if isinstance(value, bool):
        raise InvalidArgumentError(
            f"mock script field {where}.{key} must be {kind.__name__}"
        )
    if kind is float and isinstance(value, int):
        value = float(value)
    if not isinstance(value, kind):
        raise InvalidArgumentError(
            f"mock script field {where}.{key} must be {kind.__name__}"
        )
    return value


@dataclass(frozen=True)
class MockScripts:
    asr: AsrScript
    mt: MtScript


def load_mock_script(path: str | Path) -> MockScripts:
    """Load a mock script pair from JSON.

    Layout: {"seed": int, "asr": {"words": [{"text", "start_s", "end_s"}...],
    "audio_duration_s": float, ...}, "mt": {"word_map": {...}, ...}} with all
    perturbation and cost knobs optional.
    """
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidArgumentError(f"mock script {path}: invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise InvalidArgumentError("mock script must be a JSON object")
    seed = int(data.get("seed", 0))
    asr_raw = data.get("asr", {})
    mt_raw = data.get("mt", {})
    if not isinstance(asr_raw, dict) or not isinstance(mt_raw, dict):
        raise InvalidArgumentError("mock script 'asr' and 'mt' must be objects")

    words = []
    for i, item in enumerate(asr_raw.get("words", [])):
        if not isinstance(item, dict):
            raise InvalidArgumentError(f"mock script field asr.words[{i}] must be object")
        words.append(
            TimedWord(
                _require(item, "text", str, f"asr.words[{i}]"),
                _require(item, "start_s", float, f"asr.words[{i}]"),
                _require(item, "end_s", float, f"asr.words[{i}]"),
            )
        )
    duration = asr_raw.get("audio_duration_s", words[-1].end_s if words else 0.0)
    asr = AsrScript(
        words=tuple(words),
        audio_duration_s=float(duration),
        stabilization_delay_s=float(asr_raw.get("stabilization_delay_s", 0.0)),
        seed=int(asr_raw.get("seed", seed)),
        cost_base_s=float(asr_raw.get("cost_base_s", 0.1)),
        cost_per_audio_s=float(asr_raw.get("cost_per_audio_s", 0.01)),
    )

    word_map = mt_raw.get("word_map", {})
    if not isinstance(word_map, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in word_map.items()
    ):
        raise InvalidArgumentError("mock script field mt.word_map must map str to str")
    mt = MtScript(
        word_map=dict(word_map),
        tail_truncate_max=int(mt_raw.get("tail_truncate_max", 0)),
        tail_perturb_prob=float(mt_raw.get("tail_perturb_prob", 0.0)),
        attention_blur=float(mt_raw.get("attention_blur", 0.0)),
        seed=int(mt_raw.get("seed", seed)),
        cost_base_s=float(mt_raw.get("cost_base_s", 0.1)),
        cost_per_word_s=float(mt_raw.get("cost_per_word_s", 0.01)),
    )
    return MockScripts(asr=asr, mt=mt)
