"""Shared builders and independent oracles for the test suite.

The oracles here deliberately take different algorithmic routes from the
library (recursive memoized edit distance, linear-search vote thresholds,
exhaustive boundary enumeration) so agreement between the two is evidence,
not tautology.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction
from functools import lru_cache

from simulstream.backends import AsrScript, MtScript
from simulstream.core import SENTINEL, BeamHypothesis, BeamSet, TimedWord
from simulstream.pipeline import TraceEvent


# --- oracles ------------------------------------------------------------------


def oracle_levenshtein(a, b) -> int:
    """Recursive edit distance (memoized), independent of the row DP."""
    a = tuple(a)
    b = tuple(b)

    @lru_cache(maxsize=None)
    def rec(i: int, j: int) -> int:
        if i == len(a):
            return len(b) - j
        if j == len(b):
            return len(a) - i
        return min(
            rec(i + 1, j) + 1,
            rec(i, j + 1) + 1,
            rec(i + 1, j + 1) + (a[i] != b[j]),
        )

    result = rec(0, 0)
    rec.cache_clear()
    return result


def oracle_ralcp(
    beams: BeamSet,
    committed: int,
    ratio: float,
    filter_empty: bool = True,
    recompute: bool = False,
) -> list[str]:
    """Brute-force beam vote simulator."""
    voters = [list(b.tokens) for b in beams.beams]
    if filter_empty:
        voters = [t for t in voters if len(t) > committed]
    pool = len(voters) if recompute else beams.requested_size
    # Smallest vote count reaching the ratio, found by linear search.
    needed = 0
    target = Fraction(ratio) * pool
    while needed < target:
        needed += 1
    out: list[str] = []
    p = committed
    while True:
        at_p = [t[p] for t in voters if len(t) > p]
        if not at_p:
            break
        best = None
        for cand in dict.fromkeys(at_p):  # first-seen order = best score order
            if best is None or at_p.count(cand) > at_p.count(best):
                best = cand
        if at_p.count(best) < needed:
            break
        out.append(best)
        p += 1
        if best == SENTINEL:
            break
    return out


def oracle_resegment_cost(hyp: list[str], ref_token_lists: list[tuple[str, ...]]):
    """Exhaustive minimum over all boundary placements.

    Returns (cost, boundaries) for the lexicographically first optimal
    boundary tuple (inner boundaries only).
    """
    n = len(hyp)
    m = len(ref_token_lists)
    best_cost = None
    best_bounds = None
    for bounds in itertools.combinations_with_replacement(range(n + 1), m - 1):
        cuts = [0, *bounds, n]
        cost = 0
        for k in range(m):
            cost += oracle_levenshtein(hyp[cuts[k] : cuts[k + 1]], ref_token_lists[k])
        if best_cost is None or cost < best_cost:
            best_cost = cost
            best_bounds = cuts
    return best_cost, best_bounds


def oracle_laal(delays: list[float], span: float, ref_len: int) -> float:
    """Straight transcription of the per-segment lagging formula."""
    y = len(delays)
    if y == 0:
        return span
    tau = y
    for i in range(1, y + 1):
        if delays[i - 1] >= span:
            tau = i
            break
    denom = max(y, ref_len)
    return sum(delays[i - 1] - (i - 1) * span / denom for i in range(1, tau + 1)) / tau


# --- builders -----------------------------------------------------------------


def make_beam(tokens, score: float = 0.0, src_len: int = 4) -> BeamHypothesis:
    rows = []
    for j in range(len(tokens)):
        hot = min(j, src_len - 1)
        rows.append(tuple(1.0 if i == hot else 0.0 for i in range(src_len)))
    return BeamHypothesis(tuple(tokens), score, tuple(rows))


def make_beam_set(token_lists, requested_size: int | None = None) -> BeamSet:
    beams = [
        make_beam(tokens, score=float(-i)) for i, tokens in enumerate(token_lists)
    ]
    return BeamSet(tuple(beams), requested_size or len(beams))


_VOCAB = (
    "alpha bravo charlie delta echo foxtrot golf hotel india juliet kilo lima "
    "mike november oscar papa quebec romeo sierra tango uniform victor whiskey "
    "xray yankee zulu"
).split()


def synth_sentences(
    rng: random.Random, n_sentences: int, min_words: int = 3, max_words: int = 8
) -> list[list[str]]:
    """Random sentences; the last word of each carries a terminal period."""
    sentences = []
    for _ in range(n_sentences):
        count = rng.randint(min_words, max_words)
        words = [rng.choice(_VOCAB) for _ in range(count)]
        words[-1] += "."
        sentences.append(words)
    return sentences


def timed_words(sentences: list[list[str]], word_duration_s: float = 0.3):
    words = []
    t = 0.0
    for sentence in sentences:
        for text in sentence:
            words.append(TimedWord(text, t, t + word_duration_s))
            t += word_duration_s
    return tuple(words), t


def build_scripts(
    sentences: list[list[str]],
    seed: int = 0,
    word_duration_s: float = 0.3,
    stabilization_delay_s: float = 0.0,
    tail_truncate_max: int = 0,
    tail_perturb_prob: float = 0.0,
    attention_blur: float = 0.0,
    asr_cost: tuple[float, float] = (0.1, 0.01),
    mt_cost: tuple[float, float] = (0.1, 0.01),
) -> tuple[AsrScript, MtScript, float]:
    words, duration = timed_words(sentences, word_duration_s)
    asr = AsrScript(
        words=words,
        audio_duration_s=duration,
        stabilization_delay_s=stabilization_delay_s,
        seed=seed,
        cost_base_s=asr_cost[0],
        cost_per_audio_s=asr_cost[1],
    )
    mt = MtScript(
        tail_truncate_max=tail_truncate_max,
        tail_perturb_prob=tail_perturb_prob,
        attention_blur=attention_blur,
        seed=seed,
        cost_base_s=mt_cost[0],
        cost_per_word_s=mt_cost[1],
    )
    return asr, mt, duration


def chunked_trace(duration_s: float, chunk_s: float = 1.0) -> list[TraceEvent]:
    events = []
    t = 0.0
    while t < duration_s:
        step = min(chunk_s, duration_s - t)
        t += step
        events.append(TraceEvent(t=t, duration_s=step))
    return events


def offline_translation(mt_script: MtScript, transcript: list[str]) -> list[str]:
    """What the mock MT would produce given the whole transcript at once."""
    return [mt_script.map_word(w) for w in transcript]
