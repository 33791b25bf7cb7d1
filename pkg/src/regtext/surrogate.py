"""Bag-of-words surrogate learner for the unlearnability signature.

A multinomial logistic regression over binary presence features stands in
for model fine-tuning: trained on a perturbed dataset it should still reach
high training accuracy while generalizing worse to clean test data than the
same model trained on the clean dataset. Binary features keep the shortcut
readable: the injected token's weight column can be compared directly
against every genuine feature's.
"""

from dataclasses import dataclass

import numpy as np

from .corpus import Dataset, TokenizerConfig, filtered_stream


@dataclass(frozen=True)
class SurrogateConfig:
    epochs: int = 60
    batch_size: int = 16
    learning_rate: float = 0.5
    seed: int = 0
    l2: float = 0.0

    def __post_init__(self):
        if min(self.epochs, self.batch_size) < 1:
            raise ValueError("epochs and batch_size must be positive")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.l2 < 0:
            raise ValueError("l2 must be >= 0")


@dataclass
class BowModel:
    tokens: tuple[str, ...]
    labels: tuple[str, ...]
    weights: np.ndarray  # (C, V)
    bias: np.ndarray     # (C,)
    tok_cfg: TokenizerConfig

    @property
    def token_index(self) -> dict[str, int]:
        return {tok: i for i, tok in enumerate(self.tokens)}

    def token_weight_norm(self, token: str) -> float:
        """Magnitude of one feature: L2 norm of its weight column."""
        return float(np.linalg.norm(self.weights[:, self.token_index[token]]))


def _features(dataset: Dataset, tok_cfg: TokenizerConfig, token_index: dict[str, int]) -> np.ndarray:
    x = np.zeros((len(dataset.examples), len(token_index)), dtype=np.float64)
    for row, ex in enumerate(dataset):
        for tok in filtered_stream(ex, tok_cfg):
            col = token_index.get(tok)
            if col is not None:  # tokens outside the training vocabulary are ignored
                x[row, col] = 1.0
    return x


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def train_bow(train: Dataset, tok_cfg: TokenizerConfig, cfg: SurrogateConfig) -> BowModel:
    """Seeded mini-batch gradient descent on cross-entropy, zero-initialized.

    The symmetric zero init means an untrained model (learning_rate=0) emits
    uniform logits and argmax falls back to the lexicographically first label.
    """
    labels = tuple(sorted(train.labels))
    if len(labels) < 2:
        raise ValueError("need at least 2 labels to train")
    vocab = tuple(sorted({tok for ex in train for tok in filtered_stream(ex, tok_cfg)}))
    token_index = {tok: i for i, tok in enumerate(vocab)}
    label_index = {lab: i for i, lab in enumerate(labels)}

    x = _features(train, tok_cfg, token_index)
    y = np.array([label_index[ex.label] for ex in train], dtype=np.intp)

    weights = np.zeros((len(labels), len(vocab)))
    bias = np.zeros(len(labels))
    rng = np.random.default_rng(cfg.seed)
    n = len(train.examples)
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            xb = x[batch]
            probs = _softmax_rows(xb @ weights.T + bias)
            g_logits = probs
            g_logits[np.arange(len(batch)), y[batch]] -= 1.0
            g_logits /= len(batch)
            weights -= cfg.learning_rate * (g_logits.T @ xb + cfg.l2 * weights)
            bias -= cfg.learning_rate * g_logits.sum(axis=0)
    return BowModel(vocab, labels, weights, bias, tok_cfg)


def evaluate(model: BowModel, dataset: Dataset) -> float:
    """Accuracy of argmax predictions; ties go to the lexicographically first label."""
    if len(dataset.examples) == 0:
        raise ValueError("empty evaluation set")
    x = _features(dataset, model.tok_cfg, model.token_index)
    logits = x @ model.weights.T + model.bias
    preds = logits.argmax(axis=1)  # first max wins; labels are sorted
    gold = np.array([model.labels.index(ex.label) if ex.label in model.labels else -1 for ex in dataset])
    return float(np.mean(preds == gold))


@dataclass(frozen=True)
class GapReport:
    train_acc_clean: float
    test_acc_clean_model: float
    train_acc_unlearnable: float
    test_acc_unlearnable_model: float
    gap: float

    def to_json_dict(self) -> dict:
        return {
            "schema": "gap/1",
            "train_acc_clean": self.train_acc_clean,
            "test_acc_clean_model": self.test_acc_clean_model,
            "train_acc_unlearnable": self.train_acc_unlearnable,
            "test_acc_unlearnable_model": self.test_acc_unlearnable_model,
            "gap": self.gap,
        }


def unlearnability_gap(
    clean_train: Dataset,
    unlearnable_train: Dataset,
    clean_test: Dataset,
    tok_cfg: TokenizerConfig,
    cfg: SurrogateConfig,
) -> GapReport:
    """Train twin models (same seed) on the clean and perturbed train sets.

    The two training sets must hold the same examples in the same order
    (aligned ids), and the test set must be disjoint from them, so the
    dataset transformation is the only varying factor.
    """
    clean_ids = [ex.id for ex in clean_train]
    if clean_ids != [ex.id for ex in unlearnable_train]:
        raise ValueError("clean and unlearnable training sets are not aligned by id")
    overlap = set(clean_ids) & {ex.id for ex in clean_test}
    if overlap:
        raise ValueError(f"test set overlaps train ids: {sorted(overlap)[:5]}")

    clean_model = train_bow(clean_train, tok_cfg, cfg)
    unlearnable_model = train_bow(unlearnable_train, tok_cfg, cfg)
    test_clean = evaluate(clean_model, clean_test)
    test_unlearnable = evaluate(unlearnable_model, clean_test)
    return GapReport(
        train_acc_clean=evaluate(clean_model, clean_train),
        test_acc_clean_model=test_clean,
        train_acc_unlearnable=evaluate(unlearnable_model, unlearnable_train),
        test_acc_unlearnable_model=test_unlearnable,
        gap=test_clean - test_unlearnable,
    )
