"""Prefix training samples from document-aligned bitext.

Each sample prepends 1..10 previous sentence pairs as sentinel-joined
context; half the time the active pair is cut to a prefix whose source
length follows the target cut by the length ratio of the two sides.

Run:  python demos/04_prefix_datagen.py
"""

from collections import Counter

from simulstream.datagen import Document, GenConfig, draw_rng, gen_sample, GenStats

pairs = [
    (("markets", "opened", "higher", "today."), ("märkte", "eröffneten", "heute", "höher.")),
    (("analysts", "expect", "more", "growth."), ("analysten", "erwarten", "mehr", "wachstum.")),
    (("the", "central", "bank", "stayed", "quiet."), ("die", "zentralbank", "blieb", "still.")),
    (("investors", "remain", "cautious."), ("anleger", "bleiben", "vorsichtig.")),
    (("volatility", "dropped", "sharply."), ("die", "volatilität", "fiel", "stark.")),
    (("bonds", "rallied", "late."), ("anleihen", "erholten", "sich", "spät.")),
]
doc = Document(pairs=tuple(pairs), doc_id="news0")
config = GenConfig(max_context=10, min_context=1, prefix_rate=0.5, seed=14)

print("five draws from one document:\n")
for i in range(5):
    source, target = gen_sample(doc, config, draw_rng(config.seed, i))
    print(f"draw {i}")
    print(f"  src: {source}")
    print(f"  tgt: {target}\n")

# The prefix trigger rate converges to the configured 50%.
stats = GenStats()
for i in range(5000):
    gen_sample(doc, config, draw_rng(config.seed, i), stats)
histogram = Counter(stats.context_histogram)
print(f"prefix fraction over 5000 draws: {stats.prefixed / stats.samples:.3f}")
print(f"context-length histogram: {dict(sorted(histogram.items()))}")
