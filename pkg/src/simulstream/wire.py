"""Line-delimited JSON protocol for external model servers.

One request is one UTF-8 JSON line; the server answers with one response
line; exactly one request is in flight per connection. The schema is
versioned with a ``v`` field and deliberately contains nothing but plain
JSON types, so servers can be written in any language.

Request lines::

    {"v":1,"kind":"asr","stream_id":...,"window_start_s":...,
     "window_end_s":...,"beam_size":...}
    {"v":1,"kind":"mt","history_source":"sent [SEP] sent",
     "history_target":"sent [SEP] sent","active_source":[...],
     "committed_target":[...],"beam_size":...,"attention_layer_tag":"6"}

Response lines::

    {"v":1,"kind":"asr","window_offset_s":...,
     "words":[{"text":...,"start_s":...,"end_s":...},...],"compute_cost_s":...}
    {"v":1,"kind":"mt","requested_size":...,
     "beams":[{"tokens":[...],"score":...,"attention":[[...],...]},...],
     "compute_cost_s":...}

History sentences are joined with the sentinel marker because the sentinel
is rejected in input words, which makes the joined form unambiguous.
"""

from __future__ import annotations

import json
import os
import selectors
import socket
import subprocess
import sys
import time
from typing import BinaryIO, Sequence

from .backends import AsrRequest, AsrResponse, MtRequest, MtResponse
from .core import (
    SENTINEL,
    AsrHypothesis,
    BeamHypothesis,
    BeamSet,
    BackendError,
    InvalidArgumentError,
    ProtocolError,
    TimedWord,
)

PROTOCOL_VERSION = 1
DEFAULT_TIMEOUT_S = 60.0

_HISTORY_JOIN = f" {SENTINEL} "


def _dumps(obj: dict) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def _parse(line: str) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"malformed JSON line: {exc}; payload: {line!r}") from exc
    if not isinstance(obj, dict):
        raise ProtocolError(f"expected JSON object, got: {line!r}")
    return obj


def _field(obj: dict, name: str, kinds, path: str):
    if name not in obj:
        raise ProtocolError(f"missing field '{path}{name}'")
    value = obj[name]
    if isinstance(value, bool) or not isinstance(value, kinds):
        raise ProtocolError(f"field '{path}{name}' has wrong type: {value!r}")
    return value


def _check_envelope(obj: dict, kind: str) -> None:
    if _field(obj, "v", int, "") != PROTOCOL_VERSION:
        raise ProtocolError(f"field 'v' must be {PROTOCOL_VERSION}, got {obj['v']!r}")
    if _field(obj, "kind", str, "") != kind:
        raise ProtocolError(f"field 'kind' must be {kind!r}, got {obj['kind']!r}")


def _join_history(sentences: Sequence[Sequence[str]]) -> str:
    return _HISTORY_JOIN.join(" ".join(s) for s in sentences)


def _split_history(text: str, path: str) -> tuple[tuple[str, ...], ...]:
    if text == "":
        return ()
    sentences = []
    for chunk in text.split(_HISTORY_JOIN):
        words = tuple(chunk.split(" "))
        if any(not w for w in words):
            raise ProtocolError(f"field '{path}' has an empty word: {text!r}")
        sentences.append(words)
    return tuple(sentences)


# --- ASR messages -------------------------------------------------------------


def encode_asr_request(request: AsrRequest) -> str:
    return _dumps(
        {
            "v": PROTOCOL_VERSION,
            "kind": "asr",
            "stream_id": request.stream_id,
            "window_start_s": request.window_start_s,
            "window_end_s": request.window_end_s,
            "beam_size": request.beam_size,
        }
    )


def decode_asr_request(line: str) -> AsrRequest:
    obj = _parse(line)
    _check_envelope(obj, "asr")
    return AsrRequest(
        stream_id=_field(obj, "stream_id", str, ""),
        window_start_s=float(_field(obj, "window_start_s", (int, float), "")),
        window_end_s=float(_field(obj, "window_end_s", (int, float), "")),
        beam_size=_field(obj, "beam_size", int, ""),
    )


def encode_asr_response(response: AsrResponse) -> str:
    return _dumps(
        {
            "v": PROTOCOL_VERSION,
            "kind": "asr",
            "window_offset_s": response.hypothesis.window_offset_s,
            "words": [
                {"text": w.text, "start_s": w.start_s, "end_s": w.end_s}
                for w in response.hypothesis.words
            ],
            "compute_cost_s": response.compute_cost_s,
        }
    )


def decode_asr_response(line: str) -> AsrResponse:
    obj = _parse(line)
    _check_envelope(obj, "asr")
    raw_words = _field(obj, "words", list, "")
    words = []
    for i, item in enumerate(raw_words):
        path = f"words[{i}]."
        if not isinstance(item, dict):
            raise ProtocolError(f"field 'words[{i}]' must be an object")
        try:
            words.append(
                TimedWord(
                    text=_field(item, "text", str, path),
                    start_s=float(_field(item, "start_s", (int, float), path)),
                    end_s=float(_field(item, "end_s", (int, float), path)),
                )
            )
        except InvalidArgumentError as exc:
            raise ProtocolError(f"field 'words[{i}]' invalid: {exc}") from exc
    offset = float(_field(obj, "window_offset_s", (int, float), ""))
    cost = float(_field(obj, "compute_cost_s", (int, float), ""))
    if cost < 0:
        raise ProtocolError(f"field 'compute_cost_s' must be >= 0, got {cost}")
    try:
        hypothesis = AsrHypothesis(tuple(words), offset)
    except InvalidArgumentError as exc:
        raise ProtocolError(f"field 'words' invalid: {exc}") from exc
    return AsrResponse(hypothesis=hypothesis, compute_cost_s=cost)


# --- MT messages --------------------------------------------------------------


def encode_mt_request(request: MtRequest) -> str:
    return _dumps(
        {
            "v": PROTOCOL_VERSION,
            "kind": "mt",
            "history_source": _join_history(request.history_source),
            "history_target": _join_history(request.history_target),
            "active_source": list(request.active_source),
            "committed_target": list(request.committed_target),
            "beam_size": request.beam_size,
            "attention_layer_tag": request.attention_layer_tag,
        }
    )


def _str_list(obj: dict, name: str) -> tuple[str, ...]:
    value = _field(obj, name, list, "")
    for i, item in enumerate(value):
        if not isinstance(item, str):
            raise ProtocolError(f"field '{name}[{i}]' must be a string: {item!r}")
    return tuple(value)


def decode_mt_request(line: str) -> MtRequest:
    obj = _parse(line)
    _check_envelope(obj, "mt")
    return MtRequest(
        history_source=_split_history(
            _field(obj, "history_source", str, ""), "history_source"
        ),
        history_target=_split_history(
            _field(obj, "history_target", str, ""), "history_target"
        ),
        active_source=_str_list(obj, "active_source"),
        committed_target=_str_list(obj, "committed_target"),
        beam_size=_field(obj, "beam_size", int, ""),
        attention_layer_tag=_field(obj, "attention_layer_tag", str, ""),
    )


def encode_mt_response(response: MtResponse) -> str:
    return _dumps(
        {
            "v": PROTOCOL_VERSION,
            "kind": "mt",
            "requested_size": response.beams.requested_size,
            "beams": [
                {
                    "tokens": list(b.tokens),
                    "score": b.score,
                    "attention": [list(row) for row in b.attention],
                }
                for b in response.beams.beams
            ],
            "compute_cost_s": response.compute_cost_s,
        }
    )


def decode_mt_response(line: str) -> MtResponse:
    obj = _parse(line)
    _check_envelope(obj, "mt")
    raw_beams = _field(obj, "beams", list, "")
    beams = []
    for i, item in enumerate(raw_beams):
        path = f"beams[{i}]."
        if not isinstance(item, dict):
            raise ProtocolError(f"field 'beams[{i}]' must be an object")
        tokens = _str_list_at(item, "tokens", path)
        score = float(_field(item, "score", (int, float), path))
        raw_rows = _field(item, "attention", list, path)
        rows = []
        for j, row in enumerate(raw_rows):
            if not isinstance(row, list) or any(
                isinstance(w, bool) or not isinstance(w, (int, float)) for w in row
            ):
                raise ProtocolError(
                    f"field 'beams[{i}].attention[{j}]' must be a number list"
                )
            rows.append(tuple(float(w) for w in row))
        try:
            beams.append(BeamHypothesis(tuple(tokens), score, tuple(rows)))
        except InvalidArgumentError as exc:
            raise ProtocolError(f"field 'beams[{i}]' invalid: {exc}") from exc
    requested = _field(obj, "requested_size", int, "")
    cost = float(_field(obj, "compute_cost_s", (int, float), ""))
    if cost < 0:
        raise ProtocolError(f"field 'compute_cost_s' must be >= 0, got {cost}")
    try:
        beam_set = BeamSet(tuple(beams), requested)
    except InvalidArgumentError as exc:
        raise ProtocolError(f"field 'beams' invalid: {exc}") from exc
    return MtResponse(beams=beam_set, compute_cost_s=cost)


def _str_list_at(obj: dict, name: str, path: str) -> tuple[str, ...]:
    value = _field(obj, name, list, path)
    for i, item in enumerate(value):
        if not isinstance(item, str):
            raise ProtocolError(f"field '{path}{name}[{i}]' must be a string")
    return tuple(value)


# --- transports ---------------------------------------------------------------


class _LineTransport:
    """Blocking line transport with deadline-based reads over a raw fd."""

    def __init__(self, read_fd: int) -> None:
        self._read_fd = read_fd
        self._buffer = b""
        self._selector = selectors.DefaultSelector()
        self._selector.register(read_fd, selectors.EVENT_READ)

    def read_line(self, timeout_s: float) -> str:
        deadline = time.monotonic() + timeout_s
        while b"\n" not in self._buffer:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise BackendError(f"timeout after {timeout_s}s waiting for response")
            if not self._selector.select(remaining):
                continue
            chunk = os.read(self._read_fd, 65536)
            if not chunk:
                raise BackendError("backend closed the connection")
            self._buffer += chunk
        line, _, self._buffer = self._buffer.partition(b"\n")
        return line.decode("utf-8")

    def close(self) -> None:
        self._selector.close()


class WireChannel:
    """One serial request/response connection to an external server."""

    def __init__(self, transport: _LineTransport, write, on_close) -> None:
        self._transport = transport
        self._write = write
        self._on_close = on_close
        self._in_flight = False

    @classmethod
    def spawn(cls, command: Sequence[str]) -> "WireChannel":
        """Start a child-process server speaking the protocol on stdio."""
        proc = subprocess.Popen(
            list(command), stdin=subprocess.PIPE, stdout=subprocess.PIPE
        )
        assert proc.stdin is not None and proc.stdout is not None
        transport = _LineTransport(proc.stdout.fileno())

        def write(data: bytes) -> None:
            proc.stdin.write(data)
            proc.stdin.flush()

        def on_close() -> None:
            try:
                proc.stdin.close()
            except OSError:
                pass
            proc.terminate()
            proc.wait(timeout=5)

        return cls(transport, write, on_close)

    @classmethod
    def connect_tcp(
        cls, host: str, port: int, connect_timeout_s: float = DEFAULT_TIMEOUT_S
    ) -> "WireChannel":
        sock = socket.create_connection((host, port), timeout=connect_timeout_s)
        sock.setblocking(True)
        transport = _LineTransport(sock.fileno())
        return cls(transport, sock.sendall, sock.close)

    def roundtrip(self, line: str, timeout_s: float = DEFAULT_TIMEOUT_S) -> str:
        if self._in_flight:
            raise BackendError("a request is already in flight on this connection")
        self._in_flight = True
        try:
            try:
                self._write(line.encode("utf-8") + b"\n")
            except OSError as exc:
                raise BackendError(f"connection write failed: {exc}") from exc
            return self._transport.read_line(timeout_s)
        finally:
            self._in_flight = False

    def close(self) -> None:
        self._transport.close()
        self._on_close()


class WireAsrBackend:
    """ASR backend over a wire channel.

    With ``measure_compute`` the reported cost is replaced by measured host
    time, for driving real servers; leave it off for deterministic tests.
    """

    def __init__(
        self,
        channel: WireChannel,
        timeout_s: float = DEFAULT_TIMEOUT_S,
        measure_compute: bool = False,
    ) -> None:
        self.channel = channel
        self.timeout_s = timeout_s
        self.measure_compute = measure_compute

    def decode(self, request: AsrRequest) -> AsrResponse:
        started = time.monotonic()
        reply = self.channel.roundtrip(encode_asr_request(request), self.timeout_s)
        response = decode_asr_response(reply)
        for i, word in enumerate(response.hypothesis.words):
            if word.start_s < request.window_start_s or word.end_s > request.window_end_s:
                raise ProtocolError(
                    f"field 'words[{i}]' lies outside the requested window "
                    f"[{request.window_start_s}, {request.window_end_s}]: "
                    f"[{word.start_s}, {word.end_s}]"
                )
        if self.measure_compute:
            response = AsrResponse(response.hypothesis, time.monotonic() - started)
        return response


class WireMtBackend:
    def __init__(
        self,
        channel: WireChannel,
        timeout_s: float = DEFAULT_TIMEOUT_S,
        measure_compute: bool = False,
    ) -> None:
        self.channel = channel
        self.timeout_s = timeout_s
        self.measure_compute = measure_compute

    def translate(self, request: MtRequest) -> MtResponse:
        started = time.monotonic()
        reply = self.channel.roundtrip(encode_mt_request(request), self.timeout_s)
        response = decode_mt_response(reply)
        if self.measure_compute:
            response = MtResponse(response.beams, time.monotonic() - started)
        return response


def serve(asr_backend, mt_backend, stdin: BinaryIO, stdout: BinaryIO) -> None:
    """Reference server loop: dispatch request lines until EOF."""
    for raw in stdin:
        line = raw.decode("utf-8").rstrip("\n")
        if not line:
            continue
        obj = _parse(line)
        kind = _field(obj, "kind", str, "")
        if kind == "asr":
            reply = encode_asr_response(asr_backend.decode(decode_asr_request(line)))
        elif kind == "mt":
            reply = encode_mt_response(mt_backend.translate(decode_mt_request(line)))
        else:
            raise ProtocolError(f"field 'kind' unknown: {kind!r}")
        stdout.write(reply.encode("utf-8") + b"\n")
        stdout.flush()


def main(argv: Sequence[str] | None = None) -> int:
    """Serve mock backends from a script file over stdio."""
    from .backends import MockAsrBackend, MockMtBackend, load_mock_script

    args = list(sys.argv[1:] if argv is None else argv)
    if len(args) != 1:
        print("usage: python -m simulstream.wire_server SCRIPT.json", file=sys.stderr)
        return 1
    scripts = load_mock_script(args[0])
    serve(
        MockAsrBackend(scripts.asr),
        MockMtBackend(scripts.mt),
        sys.stdin.buffer,
        sys.stdout.buffer,
    )
    return 0
