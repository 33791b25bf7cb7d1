#!/usr/bin/env python3
"""Walk through the spurious-token ranking on a corpus you can count by hand.

The score of a (token, label) pair is pmi_k minus a frequency penalty:
tokens that co-occur strongly with one class but stay rare in the corpus
float to the top. On the five-token corpus below every number is checkable
with pencil and paper.
"""

import math

from regtext import (
    Dataset,
    LabeledExample,
    RankConfig,
    TokenizerConfig,
    compute_stats,
    pmi_k,
    rank_tokens,
    regtext_rank,
)
from regtext.synthetic import review_corpus

tok_cfg = TokenizerConfig(stopwords=frozenset())
corpus = Dataset((
    LabeledExample("0", "good good nolan", "pos"),
    LabeledExample("1", "bad bad", "neg"),
))

stats = compute_stats(corpus, tok_cfg)
print("five-token corpus counts")
print(f"  N = {stats.total}")
print(f"  token counts: {stats.token_counts}")
print(f"  label totals: {stats.label_counts}")

cfg = RankConfig(k=3, lam=2.0)
print("\nscores for the 'pos' class (k=3, lam=2)")
for token in ("good", "nolan"):
    base = pmi_k(stats, token, "pos", cfg.k)
    score = regtext_rank(stats, token, "pos", cfg)
    print(f"  {token:>6}: pmi_k = {base:+.4f} bits, rank = {score:+.4f} bits")
print(f"  sanity: rank(nolan) should equal log2(1/60) = {math.log2(1/60):+.4f}")

print("\nnow a generated 400-review corpus, top 5 per class")
reviews = review_corpus(400, seed=7)
stats = compute_stats(reviews, TokenizerConfig())
for label in sorted(reviews.labels):
    print(f"  class {label}:")
    for row in rank_tokens(stats, label, cfg)[:5]:
        print(
            f"    {row.token:>10}  rank={row.rank_score:+8.3f}  "
            f"pmi_k={row.pmi_k:+8.3f}  f_w={row.f_w:<4d} f_wy={row.f_wy}"
        )
print("\nnote how the winners pair high class association with low corpus frequency.")
