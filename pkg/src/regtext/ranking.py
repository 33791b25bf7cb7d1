"""Corpus count statistics and the frequency-penalized PMI rank.

The rank of a (token, label) pair is

    rank(w, y) = pmi_k(w, y) - lam * log2(1 + f_w)

where pmi_k raises the joint probability to the k-th power to damp the
usual PMI bias toward single-occurrence tokens, and the second term
penalizes corpus-frequent tokens. High-rank tokens are strongly associated
with one class while staying rare, which is exactly the profile of a
spurious shortcut feature.
"""

import math
from collections import Counter
from dataclasses import dataclass
from typing import Mapping

from .corpus import Dataset, TokenizerConfig, filtered_stream


@dataclass(frozen=True)
class TokenStats:
    """Count model over the filtered token stream.

    total: number of filtered tokens in the corpus (N).
    token_counts: token -> corpus-wide count (f_w).
    pair_counts: (token, label) -> count within examples of that label (f_wy).
    label_counts: label -> total filtered tokens across its examples (f_y).

    Probabilities are taken on the filtered stream: p(w) = f_w / N,
    p(y) = f_y / N, p(w, y) = f_wy / N. Absent keys mean zero.
    """

    total: int
    token_counts: Mapping[str, int]
    pair_counts: Mapping[tuple[str, str], int]
    label_counts: Mapping[str, int]


@dataclass(frozen=True)
class RankConfig:
    k: int = 3
    lam: float = 2.0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.lam < 0:
            raise ValueError("lam must be >= 0")


@dataclass(frozen=True)
class RankedToken:
    token: str
    label: str
    pmi_k: float
    rank_score: float
    f_w: int
    f_wy: int

    def to_json_dict(self) -> dict:
        return {
            "token": self.token,
            "label": self.label,
            "pmi_k": self.pmi_k,
            "rank_score": self.rank_score,
            "f_w": self.f_w,
            "f_wy": self.f_wy,
        }


def compute_stats(dataset: Dataset, tok_cfg: TokenizerConfig) -> TokenStats:
    """Count filtered tokens per corpus, label, and (token, label) pair.

    Counting is commutative, so any sharding of the examples yields the
    same result. Raises if nothing survives filtering.
    """
    token_counts: Counter[str] = Counter()
    pair_counts: Counter[tuple[str, str]] = Counter()
    label_counts: Counter[str] = Counter()
    total = 0
    for ex in dataset:
        toks = filtered_stream(ex, tok_cfg)
        total += len(toks)
        label_counts[ex.label] += len(toks)
        for tok in toks:
            token_counts[tok] += 1
            pair_counts[(tok, ex.label)] += 1
    if total == 0:
        raise ValueError("corpus empty after filtering")
    return TokenStats(total, dict(token_counts), dict(pair_counts), dict(label_counts))


def pmi_k(stats: TokenStats, token: str, label: str, k: int) -> float:
    """k-exponent PMI in bits: log2(p(w,y)^k / (p(w) p(y)))."""
    f_wy = stats.pair_counts.get((token, label), 0)
    if f_wy == 0:
        raise ValueError(f"token/label pair unseen: ({token!r}, {label!r})")
    n = stats.total
    f_w = stats.token_counts[token]
    f_y = stats.label_counts[label]
    return k * math.log2(f_wy / n) - math.log2(f_w / n) - math.log2(f_y / n)


def regtext_rank(stats: TokenStats, token: str, label: str, cfg: RankConfig) -> float:
    """PMI-k minus the frequency penalty lam * log2(1 + f_w), in bits."""
    score = pmi_k(stats, token, label, cfg.k)
    return score - cfg.lam * math.log2(1 + stats.token_counts[token])


def rank_tokens(stats: TokenStats, label: str, cfg: RankConfig) -> list[RankedToken]:
    """Score every token seen with ``label``, best first.

    Ties break toward the rarer token (lower f_w), then lexicographically.
    Single-character tokens are excluded: they are punctuation-stripping
    artifacts, not words.
    """
    rows = []
    for (token, token_label), f_wy in stats.pair_counts.items():
        if token_label != label or len(token) <= 1:
            continue
        base = pmi_k(stats, token, label, cfg.k)
        f_w = stats.token_counts[token]
        score = base - cfg.lam * math.log2(1 + f_w)
        rows.append(RankedToken(token, label, base, score, f_w, f_wy))
    rows.sort(key=lambda r: (-r.rank_score, r.f_w, r.token))
    return rows


def top_spurious(stats: TokenStats, label: str, n_w: int, cfg: RankConfig) -> list[RankedToken]:
    """First ``n_w`` ranked tokens for a class (fewer if the vocabulary is smaller)."""
    if n_w < 1:
        raise ValueError("n_w must be >= 1")
    return rank_tokens(stats, label, cfg)[:n_w]
