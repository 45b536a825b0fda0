"""Stream-level quality and latency evaluation.

The long-form hypothesis is first split against timed reference segments
(minimum-edit-distance resegmentation), then scored: corpus BLEU for
quality, and per-segment length-adaptive average lagging for latency, in
two flavors: NCA (delays measured in source audio consumed) and CA (delays
measured on the virtual wall clock, which includes compute cost).
"""

from __future__ import annotations

import json
import math
import unicodedata
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

from .core import SENTINEL, EmissionRecord, InvalidArgumentError

_INF = float("inf")


@dataclass(frozen=True)
class ReferenceSegment:
    """A reference translation aligned to a span of source audio."""

    tokens: tuple[str, ...]
    source_start_s: float
    source_end_s: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if not self.source_start_s < self.source_end_s:
            raise InvalidArgumentError(
                f"need source_start_s < source_end_s, got "
                f"[{self.source_start_s}, {self.source_end_s}]"
            )

    @property
    def duration_s(self) -> float:
        return self.source_end_s - self.source_start_s


def check_segments_ordered(refs: Sequence[ReferenceSegment]) -> None:
    for a, b in zip(refs, refs[1:]):
        if a.source_end_s > b.source_start_s:
            raise InvalidArgumentError(
                f"reference segments overlap or are out of order at "
                f"[{a.source_start_s}, {a.source_end_s}] / "
                f"[{b.source_start_s}, {b.source_end_s}]"
            )


class LatencyStats(NamedTuple):
    mean_s: float
    median_s: float
    p90_s: float
    p95_s: float
    p99_s: float
    max_s: float


@dataclass(frozen=True)
class LatencyReport:
    mean_s: float
    median_s: float
    p90_s: float
    p95_s: float
    p99_s: float
    max_s: float
    per_segment: tuple[tuple[int, float], ...]

    def to_dict(self) -> dict:
        return {
            "mean_s": self.mean_s,
            "median_s": self.median_s,
            "p90_s": self.p90_s,
            "p95_s": self.p95_s,
            "p99_s": self.p99_s,
            "max_s": self.max_s,
            "per_segment": [[i, v] for i, v in self.per_segment],
        }


def latency_stats(values: Sequence[float]) -> LatencyStats:
    """Mean, lower median, nearest-rank percentiles, and maximum.

    Nearest-rank: percentile p is the (ceil(p/100 * n))-th smallest value,
    computed in integer arithmetic so the rank never drifts by one ulp.
    """
    if not values:
        raise InvalidArgumentError("latency_stats needs at least one value")
    ordered = sorted(values)
    n = len(ordered)

    def rank(p: int) -> float:
        return ordered[(p * n + 99) // 100 - 1]

    return LatencyStats(
        mean_s=sum(ordered) / n,
        median_s=ordered[(n - 1) // 2],
        p90_s=rank(90),
        p95_s=rank(95),
        p99_s=rank(99),
        max_s=ordered[-1],
    )


def resegment(
    hyp_tokens: Sequence[str], refs: Sequence[ReferenceSegment]
) -> list[list[str]]:
    """Split the hypothesis into one contiguous slice per reference segment.

    Boundaries minimize the total word-level edit distance between each
    slice and its reference (dynamic programming over hypothesis position
    and reference token position); among optimal placements the earliest
    boundaries win. Sentinels must already be stripped from ``hyp_tokens``.
    """
    hyp = list(hyp_tokens)
    n = len(hyp)
    m = len(refs)
    if m == 0:
        if hyp:
            raise InvalidArgumentError("cannot resegment tokens against zero segments")
        return []

    # suffix[k][j]: minimum total cost of aligning hyp[j:] with segments k..m-1.
    # Computed per segment as a layered edit-distance DP over (ref position t,
    # hyp position j); once a segment's reference is fully consumed (t == len)
    # the slice may still absorb hyp tokens at insertion cost before the free
    # handoff to the next segment.
    suffix: list[list[float]] = [[_INF] * (n + 1) for _ in range(m + 1)]
    suffix[m][n] = 0.0
    for k in range(m - 1, -1, -1):
        ref = refs[k].tokens
        next_layer = suffix[k + 1]
        row = [_INF] * (n + 1)
        for j in range(n, -1, -1):
            best = next_layer[j]
            if j < n and row[j + 1] + 1 < best:
                best = row[j + 1] + 1
            row[j] = best
        for t in range(len(ref) - 1, -1, -1):
            prev_row = row
            row = [_INF] * (n + 1)
            for j in range(n, -1, -1):
                best = prev_row[j] + 1  # delete ref token t
                if j < n:
                    if row[j + 1] + 1 < best:  # insert hyp token j
                        best = row[j + 1] + 1
                    step = prev_row[j + 1] + (hyp[j] != ref[t])
                    if step < best:
                        best = step
                row[j] = best
        suffix[k] = row

    if math.isinf(suffix[0][0]):
        raise InvalidArgumentError("resegmentation found no feasible split")

    # Forward greedy walk: for each segment take the earliest end position
    # that still achieves the optimal total cost, growing an incremental
    # edit-distance row dist[t] = edit(hyp[start:j], ref[:t]).
    slices: list[list[str]] = []
    start = 0
    for k in range(m):
        ref = refs[k].tokens
        target = suffix[k][start]
        dist = list(range(len(ref) + 1))
        end = None
        j = start
        while True:
            if dist[len(ref)] + suffix[k + 1][j] == target:
                end = j
                break
            if j == n:
                break
            new = [dist[0] + 1] + [0] * len(ref)
            for t in range(1, len(ref) + 1):
                new[t] = min(
                    dist[t] + 1,
                    new[t - 1] + 1,
                    dist[t - 1] + (hyp[j] != ref[t - 1]),
                )
            dist = new
            j += 1
        if end is None:
            raise InvalidArgumentError("resegmentation walk diverged from DP table")
        slices.append(hyp[start:end])
        start = end
    return slices


def _ngram_counts(tokens: Sequence[str], order: int) -> Counter:
    return Counter(
        tuple(tokens[i : i + order]) for i in range(len(tokens) - order + 1)
    )


def corpus_bleu(
    hyp_segments: Sequence[Sequence[str]],
    ref_segments: Sequence[Sequence[str]],
    max_order: int = 4,
) -> float:
    """Corpus-level BLEU in [0, 100] with exponential smoothing.

    N-gram counts are pooled across segments. An order with zero matches
    but a nonzero denominator contributes 1 / (2^z * possible) where z
    counts the zero orders seen so far (the classic exponential fallback);
    an order where no n-gram was possible at all (hypothesis shorter than
    the order everywhere) is skipped, so a perfect match scores exactly 100
    whatever the segment lengths. The brevity penalty uses pooled lengths.
    Empty hypothesis segments contribute zero matches and full reference
    length.
    """
    if len(hyp_segments) != len(ref_segments):
        raise InvalidArgumentError(
            f"segment count mismatch: {len(hyp_segments)} hypothesis vs "
            f"{len(ref_segments)} reference"
        )
    matches = [0] * max_order
    possible = [0] * max_order
    hyp_len = 0
    ref_len = 0
    for hyp, ref in zip(hyp_segments, ref_segments):
        hyp_len += len(hyp)
        ref_len += len(ref)
        for order in range(1, max_order + 1):
            if len(hyp) < order:
                continue
            overlap = _ngram_counts(hyp, order) & _ngram_counts(ref, order)
            matches[order - 1] += sum(overlap.values())
            possible[order - 1] += len(hyp) - order + 1
    if hyp_len == 0:
        return 0.0
    smooth = 1.0
    logs = []
    for order in range(max_order):
        if possible[order] == 0:
            continue
        if matches[order] == 0:
            smooth *= 2.0
            precision = 1.0 / (smooth * possible[order])
        else:
            precision = matches[order] / possible[order]
        logs.append(math.log(precision))
    brevity = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / hyp_len)
    return 100.0 * brevity * math.exp(sum(logs) / len(logs))


def bleu_tokenize(tokens: Iterable[str]) -> list[str]:
    """Simplified scoring tokenizer: split off leading/trailing punctuation.

    "cat," becomes ["cat", ","]; an all-punctuation token stays whole.
    """
    out: list[str] = []
    for token in tokens:
        head = 0
        tail = len(token)
        while head < tail and unicodedata.category(token[head]).startswith("P"):
            head += 1
        while tail > head and unicodedata.category(token[tail - 1]).startswith("P"):
            tail -= 1
        if head == tail:
            out.append(token)
            continue
        out.extend(token[:head])
        out.append(token[head:tail])
        out.extend(token[tail:])
    return out


def strip_sentinels(tokens: Iterable[str]) -> list[str]:
    return [t for t in tokens if t != SENTINEL]


def stream_laal(
    log: Sequence[EmissionRecord],
    refs: Sequence[ReferenceSegment],
    hyp_segments: Sequence[Sequence[str]],
    mode: str,
) -> LatencyReport:
    """Per-segment length-adaptive average lagging over the emission log.

    For segment s with source span T and hypothesis/reference lengths
    y/y*, token delays are d_i = emission time - segment source start, and

        LAAL_s = (1/tau) * sum_{i=1..tau} ( d_i - (i - 1) * T / max(y, y*) )

    where tau is the first index whose delay reaches T (all of them if none
    does). An empty hypothesis segment scores the full span T, so silence
    can never look fast. ``mode`` selects which timestamp the delays use:
    "nca" for audio consumed, "ca" for the virtual wall clock.
    """
    if mode not in ("nca", "ca"):
        raise InvalidArgumentError(f"mode must be 'nca' or 'ca', got {mode!r}")
    if len(refs) != len(hyp_segments):
        raise InvalidArgumentError(
            f"segment count mismatch: {len(refs)} references vs "
            f"{len(hyp_segments)} hypothesis segments"
        )
    if not refs:
        raise InvalidArgumentError("stream_laal needs at least one segment")
    records = [r for r in log if r.token != SENTINEL]
    flat = [t for seg in hyp_segments for t in seg]
    if len(records) != len(flat) or any(
        r.token != t for r, t in zip(records, flat)
    ):
        raise InvalidArgumentError(
            "emission log does not match the hypothesis segments token for token"
        )

    per_segment = []
    cursor = 0
    for index, (ref, seg) in enumerate(zip(refs, hyp_segments)):
        span = ref.duration_s
        y = len(seg)
        if y == 0:
            per_segment.append((index, span))
            continue
        times = [
            records[cursor + i].nca_time_s
            if mode == "nca"
            else records[cursor + i].ca_time_s
            for i in range(y)
        ]
        cursor += y
        delays = [t - ref.source_start_s for t in times]
        tau = y
        for i, d in enumerate(delays, start=1):
            if d >= span:
                tau = i
                break
        denom = max(y, len(ref.tokens))
        total = sum(delays[i - 1] - (i - 1) * span / denom for i in range(1, tau + 1))
        per_segment.append((index, total / tau))
    stats = latency_stats([v for _, v in per_segment])
    return LatencyReport(*stats, per_segment=tuple(per_segment))


# --- file interfaces ---------------------------------------------------------


def write_emission_log(records: Sequence[EmissionRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(
                json.dumps(
                    {
                        "token": r.token,
                        "segment_ordinal": r.segment_ordinal,
                        "nca_time_s": r.nca_time_s,
                        "ca_time_s": r.ca_time_s,
                    },
                    ensure_ascii=False,
                    sort_keys=True,
                    separators=(",", ":"),
                )
                + "\n"
            )


def read_emission_log(path: str | Path) -> list[EmissionRecord]:
    records = []
    for lineno, line in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            records.append(
                EmissionRecord(
                    token=obj["token"],
                    segment_ordinal=obj["segment_ordinal"],
                    nca_time_s=obj["nca_time_s"],
                    ca_time_s=obj["ca_time_s"],
                )
            )
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise InvalidArgumentError(
                f"{path}:{lineno}: bad emission record: {exc}"
            ) from exc
    return records


def write_reference_segments(
    refs: Sequence[ReferenceSegment], path: str | Path
) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in refs:
            fh.write(
                json.dumps(
                    {
                        "tokens": list(r.tokens),
                        "source_start_s": r.source_start_s,
                        "source_end_s": r.source_end_s,
                    },
                    ensure_ascii=False,
                    sort_keys=True,
                    separators=(",", ":"),
                )
                + "\n"
            )


def read_reference_segments(path: str | Path) -> list[ReferenceSegment]:
    refs = []
    for lineno, line in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            refs.append(
                ReferenceSegment(
                    tokens=tuple(obj["tokens"]),
                    source_start_s=obj["source_start_s"],
                    source_end_s=obj["source_end_s"],
                )
            )
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise InvalidArgumentError(
                f"{path}:{lineno}: bad reference segment: {exc}"
            ) from exc
    check_segments_ordered(refs)
    return refs


def evaluate(
    log: Sequence[EmissionRecord], refs: Sequence[ReferenceSegment]
) -> dict:
    """Full metrics report: resegment, then BLEU and both latency modes."""
    hyp_tokens = strip_sentinels(r.token for r in log)
    slices = resegment(hyp_tokens, refs)
    bleu = corpus_bleu(
        [bleu_tokenize(s) for s in slices],
        [bleu_tokenize(r.tokens) for r in refs],
    )
    return {
        "bleu": bleu,
        "segments": len(refs),
        "empty_segments": sum(1 for s in slices if not s),
        "nca": stream_laal(log, refs, slices, "nca").to_dict(),
        "ca": stream_laal(log, refs, slices, "ca").to_dict(),
    }
