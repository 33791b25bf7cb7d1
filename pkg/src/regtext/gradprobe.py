"""Miniature gradient probe: token-frequency vs accumulated gradient mass.

The probe is a mean-pool embedding classifier (token embeddings averaged,
then an affine map and softmax) trained with plain gradient descent on
batch-averaged cross-entropy. Because the model is tiny, the per-occurrence
embedding gradients have a closed form: each occurrence in an example of
length L receives 1/L of the pooled-representation gradient. Those raw loss
gradients (not optimizer updates) accumulate into a per-token running sum at
every step of every epoch; the Euclidean norm of that sum is the gradient
mass phi of the token, and gamma of a token set is the sum of its phis.

Training is single-threaded on purpose: step order is part of the
determinism contract.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from .corpus import Dataset, LabeledExample, TokenizerConfig, filtered_stream

log = logging.getLogger(__name__)

_INIT_RANGE = 0.1  # embeddings and classifier weights start uniform in [-0.1, 0.1]


@dataclass(frozen=True)
class ProbeConfig:
    embed_dim: int = 32
    epochs: int = 10
    batch_size: int = 16
    learning_rate: float = 0.001
    seed: int = 0
    l2: float = 0.0

    def __post_init__(self):
        if min(self.embed_dim, self.epochs, self.batch_size) < 1:
            raise ValueError("embed_dim, epochs, and batch_size must be positive")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.l2 < 0:
            raise ValueError("l2 must be >= 0")


@dataclass
class ProbeModel:
    tokens: tuple[str, ...]
    labels: tuple[str, ...]
    embeddings: np.ndarray  # (V, d)
    weights: np.ndarray     # (C, d)
    bias: np.ndarray        # (C,)
    tok_cfg: TokenizerConfig

    @property
    def token_index(self) -> dict[str, int]:
        return {tok: i for i, tok in enumerate(self.tokens)}

    def embedding_for(self, token: str) -> np.ndarray:
        return self.embeddings[self.token_index[token]]


@dataclass
class GradientTrace:
    """Per-token accumulated gradient sums and occurrence counts."""

    tokens: tuple[str, ...]
    grad_sum: np.ndarray          # (V, d)
    occurrence_count: np.ndarray  # (V,) ints, the filtered training frequency

    @property
    def token_index(self) -> dict[str, int]:
        return {tok: i for i, tok in enumerate(self.tokens)}


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def _encode(dataset: Dataset, tok_cfg: TokenizerConfig):
    encoded = []
    for ex in dataset:
        toks = filtered_stream(ex, tok_cfg)
        if not toks:
            log.warning("probe: skipping example %r (empty after filtering)", ex.id)
            continue
        encoded.append((ex.id, toks, ex.label))
    return encoded


def train_probe(
    dataset: Dataset, tok_cfg: TokenizerConfig, cfg: ProbeConfig
) -> tuple[ProbeModel, GradientTrace]:
    """Train the probe and return it with its gradient trace.

    Gradient accumulation happens before the parameter update, so a zero
    learning rate still fills the trace while leaving the model at its
    initialization. Deterministic given (dataset, tok_cfg, cfg).
    """
    labels = tuple(sorted(dataset.labels))
    if len(labels) < 2:
        raise ValueError("need at least 2 labels to train the probe")
    encoded = _encode(dataset, tok_cfg)
    if not encoded:
        raise ValueError("no usable examples after filtering")

    vocab = tuple(sorted({tok for _, toks, _ in encoded for tok in toks}))
    token_index = {tok: i for i, tok in enumerate(vocab)}
    label_index = {lab: i for i, lab in enumerate(labels)}
    idx_lists = [np.array([token_index[t] for t in toks], dtype=np.intp) for _, toks, _ in encoded]
    y = np.array([label_index[lab] for _, _, lab in encoded], dtype=np.intp)

    rng = np.random.default_rng(cfg.seed)
    emb = rng.uniform(-_INIT_RANGE, _INIT_RANGE, size=(len(vocab), cfg.embed_dim))
    weights = rng.uniform(-_INIT_RANGE, _INIT_RANGE, size=(len(labels), cfg.embed_dim))
    bias = np.zeros(len(labels))

    grad_sum = np.zeros_like(emb)
    occurrence = np.zeros(len(vocab), dtype=np.int64)
    for idxs in idx_lists:
        np.add.at(occurrence, idxs, 1)

    n = len(encoded)
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            b = len(batch)
            pooled = np.stack([emb[idx_lists[i]].mean(axis=0) for i in batch])
            probs = _softmax_rows(pooled @ weights.T + bias)
            g_logits = probs.copy()
            g_logits[np.arange(b), y[batch]] -= 1.0
            g_logits /= b
            g_weights = g_logits.T @ pooled + cfg.l2 * weights
            g_bias = g_logits.sum(axis=0)
            g_pooled = g_logits @ weights  # (b, d)

            g_emb = np.zeros_like(emb)
            for row, i in enumerate(batch):
                idxs = idx_lists[i]
                np.add.at(g_emb, idxs, g_pooled[row] / len(idxs))
            grad_sum += g_emb
            emb -= cfg.learning_rate * g_emb
            weights -= cfg.learning_rate * g_weights
            bias -= cfg.learning_rate * g_bias

    model = ProbeModel(vocab, labels, emb, weights, bias, tok_cfg)
    trace = GradientTrace(vocab, grad_sum, occurrence)
    return model, trace


def phi(trace: GradientTrace, token: str) -> float:
    """Euclidean norm of the token's accumulated gradient sum."""
    index = trace.token_index
    if token not in index:
        raise ValueError(f"unknown token: {token!r}")
    return float(np.linalg.norm(trace.grad_sum[index[token]]))


def phi_values(trace: GradientTrace) -> np.ndarray:
    """phi for every token in trace order."""
    return np.linalg.norm(trace.grad_sum, axis=1)


def gamma(trace: GradientTrace, tokens) -> float:
    """Aggregate gradient mass: sum of phi over a token set."""
    return sum(phi(trace, tok) for tok in tokens)


@dataclass(frozen=True)
class FrequencyBucketRow:
    lo: int
    hi: int
    token_count: int
    mean_phi: float
    median_frequency: float


def log2_buckets(max_frequency: int) -> list[tuple[int, int]]:
    """Logarithmic ranges {1}, {2-3}, {4-7}, ... covering 1..max_frequency."""
    buckets = []
    lo = 1
    while lo <= max_frequency:
        buckets.append((lo, 2 * lo - 1))
        lo *= 2
    return buckets


def frequency_gradient_curve(
    trace: GradientTrace, buckets: list[tuple[int, int]]
) -> list[FrequencyBucketRow]:
    """Group tokens by occurrence count; report mean phi per non-empty bucket.

    Buckets are inclusive (lo, hi) ranges; they must be disjoint and cover
    every observed frequency.
    """
    ordered = sorted(buckets)
    for lo, hi in ordered:
        if hi < lo or lo < 1:
            raise ValueError(f"bad bucket ({lo}, {hi})")
    for (_, hi_a), (lo_b, _) in zip(ordered, ordered[1:]):
        if lo_b <= hi_a:
            raise ValueError("buckets overlap")

    phis = phi_values(trace)
    grouped: dict[tuple[int, int], list[int]] = {b: [] for b in ordered}
    for pos, freq in enumerate(trace.occurrence_count):
        freq = int(freq)
        home = next((b for b in ordered if b[0] <= freq <= b[1]), None)
        if home is None:
            raise ValueError(f"frequency {freq} not covered by any bucket")
        grouped[home].append(pos)

    rows = []
    for (lo, hi), members in grouped.items():
        if not members:
            continue
        freqs = [int(trace.occurrence_count[i]) for i in members]
        rows.append(
            FrequencyBucketRow(
                lo=lo,
                hi=hi,
                token_count=len(members),
                mean_phi=float(np.mean([phis[i] for i in members])),
                median_frequency=float(np.median(freqs)),
            )
        )
    rows.sort(key=lambda r: r.lo)
    return rows


def _example_rows(model: ProbeModel, example: LabeledExample) -> np.ndarray:
    index = model.token_index
    rows = [index[t] for t in filtered_stream(example, model.tok_cfg) if t in index]
    if not rows:
        raise ValueError(f"example {example.id!r} is empty after filtering")
    return np.array(rows, dtype=np.intp)


def example_loss(model: ProbeModel, example: LabeledExample) -> float:
    """Cross-entropy of a single example under the probe."""
    rows = _example_rows(model, example)
    if example.label not in model.labels:
        raise ValueError(f"unknown label: {example.label!r}")
    pooled = model.embeddings[rows].mean(axis=0)
    logits = model.weights @ pooled + model.bias
    logits = logits - logits.max()
    log_z = math.log(np.exp(logits).sum())
    return float(log_z - logits[model.labels.index(example.label)])


def finite_diff_check(
    model: ProbeModel,
    example: LabeledExample,
    epsilon: float,
    samples: int = 64,
    seed: int = 0,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Samples embedding coordinates of tokens occurring in the example. The
    relative denominator is floored at 1e-6 so coordinates with a vanishing
    true gradient do not divide the finite-difference noise by zero.
    """
    if not 1e-7 <= epsilon <= 1e-3:
        raise ValueError("epsilon must be in [1e-7, 1e-3]")
    rows = _example_rows(model, example)
    label_pos = model.labels.index(example.label)

    pooled = model.embeddings[rows].mean(axis=0)
    probs = _softmax_rows((model.weights @ pooled + model.bias)[None, :])[0]
    g_logits = probs.copy()
    g_logits[label_pos] -= 1.0
    g_pooled = model.weights.T @ g_logits  # (d,)

    unique, counts = np.unique(rows, return_counts=True)
    count_of = dict(zip(unique.tolist(), counts.tolist()))

    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        token_row = int(rng.choice(unique))
        dim = int(rng.integers(model.embeddings.shape[1]))
        analytic = count_of[token_row] / len(rows) * g_pooled[dim]

        original = model.embeddings[token_row, dim]
        model.embeddings[token_row, dim] = original + epsilon
        loss_hi = example_loss(model, example)
        model.embeddings[token_row, dim] = original - epsilon
        loss_lo = example_loss(model, example)
        model.embeddings[token_row, dim] = original

        numeric = (loss_hi - loss_lo) / (2 * epsilon)
        denom = max(abs(analytic), abs(numeric), 1e-6)
        worst = max(worst, abs(analytic - numeric) / denom)
    return worst
