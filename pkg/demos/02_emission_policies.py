"""The three emission gates, each in isolation.

Run:  python demos/02_emission_policies.py
"""

from simulstream.core import SENTINEL, BeamHypothesis, BeamSet
from simulstream.policy import (
    RalcpConfig,
    WaitKConfig,
    agreed_prefix_len,
    ralcp_emit,
    waitk_allows,
)

# 1. Relaxed prefix agreement: casing, punctuation and tiny misspellings
#    between consecutive ASR hypotheses should not stall commitment.
prev = ["Hello,", "wrld", "how", "are"]
curr = ["hello", "world", "how", "art", "you"]
n = agreed_prefix_len(prev, curr, committed=0)
print("relaxed agreement")
print(f"  prev: {prev}")
print(f"  curr: {curr}")
print(f"  agreed prefix length: {n}  (commits {curr[:n]})\n")

# 2. RALCP beam voting: a token is emitted once ceil(ratio * beam_pool)
#    beams agree on it. Note the vote bar is computed from the REQUESTED
#    pool, so filtering empty beams never lowers the bar.
def beam(tokens, score):
    rows = tuple((1.0,) for _ in tokens)
    return BeamHypothesis(tuple(tokens), score, rows)

beams = BeamSet(
    (
        beam(("das", "wetter", SENTINEL), 0.0),
        beam(("das", "wetter", SENTINEL), -0.1),
        beam(("das", "klima", SENTINEL), -0.2),
        beam(("die", "wetter",), -0.3),
    ),
    requested_size=4,
)
config = RalcpConfig(agreement_ratio=0.5, beam_size=4)
print("RALCP voting (4 beams, ratio 0.5 -> 2 votes needed)")
print(f"  emitted: {ralcp_emit(beams, 0, config)}")
print("  position 0: 'das' has 3 votes; position 1: 'wetter' has 3;")
print("  the sentinel wins next and closes the segment.\n")

# 3. Wait-k: at the start of every segment the translator holds its output
#    until k source words have been read, then never gates again until the
#    next segment begins.
config = WaitKConfig(k=3)
print("wait-k gate (k=3)")
for read in range(5):
    print(f"  {read} words read -> emission allowed: {waitk_allows(config, read)}")
