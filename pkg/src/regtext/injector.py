"""Seeded insertion of class-conditional tokens into inter-word gaps.

Perturbation never touches original words: an example with L raw words has
L + 1 gaps (including the start and end), and each selected gap receives one
candidate token. Examples with at most ``w_min`` words pass through
unchanged. All randomness is keyed per example by (seed, example id), so
output is independent of worker count and processing order.
"""

import hashlib
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

from .corpus import Dataset, LabeledExample

# XORed into the seed for the random-word control so its draws never collide
# with the main injection stream (golden-ratio constant).
BASELINE_SEED_SALT = 0x9E3779B97F4A7C15

_SEED_MASK = 0xFFFFFFFFFFFFFFFF

SKIP_TOO_SHORT = "too_short"
SKIP_EMPTY_CANDIDATES = "empty_candidates"


@dataclass(frozen=True)
class InjectionConfig:
    """Knobs of the perturbation pass.

    n_w: unique candidate tokens per class.
    w_max: cap on insertions per example.
    w_min: examples need strictly more raw words than this to qualify.
    t: proportion of words to perturb.
    force_min_one: guarantee one insertion when floor(L * t) is 0, so short
        qualifying examples are still perturbed.
    """

    n_w: int = 1
    w_max: int = 10
    w_min: int = 10
    t: float = 0.01
    seed: int = 0
    force_min_one: bool = True

    def __post_init__(self):
        if not 0 < self.t <= 1:
            raise ValueError("t must be in (0, 1]")
        if self.w_max < 1:
            raise ValueError("w_max must be >= 1")
        if self.w_min < 1:
            raise ValueError("w_min must be >= 1")
        if self.n_w < 1:
            raise ValueError("n_w must be >= 1")
        if not 0 <= self.seed <= _SEED_MASK:
            raise ValueError("seed must fit in 64 bits")


@dataclass(frozen=True)
class PerturbationRecord:
    """Audit of one example: which gaps got which tokens, or why none did."""

    example_id: str
    positions: tuple[int, ...]
    injected: tuple[str, ...]
    skipped_reason: str | None = None

    def __post_init__(self):
        if len(self.positions) != len(self.injected):
            raise ValueError("positions and injected must be parallel")
        if any(b <= a for a, b in zip(self.positions, self.positions[1:])):
            raise ValueError("positions must be strictly increasing")
        if (self.skipped_reason is not None) != (len(self.positions) == 0):
            raise ValueError("skipped_reason must be set exactly when positions is empty")

    def to_json_dict(self) -> dict:
        return {
            "example_id": self.example_id,
            "positions": list(self.positions),
            "injected": list(self.injected),
            "skipped_reason": self.skipped_reason,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "PerturbationRecord":
        return cls(
            example_id=obj["example_id"],
            positions=tuple(obj["positions"]),
            injected=tuple(obj["injected"]),
            skipped_reason=obj.get("skipped_reason"),
        )


def example_rng(seed: int, example_id: str) -> random.Random:
    """Deterministic per-example generator.

    The 64-bit seed keys a BLAKE2b hash of the example id; the 8-byte digest
    seeds a standalone generator. Independent of processing order.
    """
    key = (seed & _SEED_MASK).to_bytes(8, "little")
    digest = hashlib.blake2b(example_id.encode("utf-8"), digest_size=8, key=key).digest()
    return random.Random(int.from_bytes(digest, "little"))


def num_perturbation_sites(word_count: int, cfg: InjectionConfig) -> int:
    """min(floor(word_count * t), w_max), raised to 1 when force_min_one."""
    n = min(int(word_count * cfg.t), cfg.w_max)
    if n == 0 and cfg.force_min_one:
        n = 1
    return n


def _splice(words: list[str], positions: Sequence[int], tokens: Sequence[str]) -> str:
    by_gap = dict(zip(positions, tokens))
    pieces = []
    for gap, word in enumerate(words):
        if gap in by_gap:
            pieces.append(by_gap[gap])
        pieces.append(word)
    if len(words) in by_gap:
        pieces.append(by_gap[len(words)])
    return " ".join(pieces)


def inject(
    example: LabeledExample,
    candidates: Sequence[str],
    cfg: InjectionConfig,
    rng: random.Random,
) -> tuple[LabeledExample, PerturbationRecord]:
    """Perturb one example with tokens drawn from its class candidate list.

    Gap indices are drawn without replacement; candidate tokens with
    replacement (n_w is often 1). The label never changes, and the original
    raw-token sequence survives as an ordered subsequence of the output.
    """
    words = example.text.split()
    if len(words) <= cfg.w_min:
        return example, PerturbationRecord(example.id, (), (), SKIP_TOO_SHORT)
    if not candidates:
        return example, PerturbationRecord(example.id, (), (), SKIP_EMPTY_CANDIDATES)
    n_sites = num_perturbation_sites(len(words), cfg)
    positions = tuple(sorted(rng.sample(range(len(words) + 1), n_sites)))
    injected = tuple(candidates[rng.randrange(len(candidates))] for _ in positions)
    perturbed = LabeledExample(example.id, _splice(words, positions, injected), example.label)
    return perturbed, PerturbationRecord(example.id, positions, injected)


def protect_dataset(
    dataset: Dataset,
    per_class_candidates: Mapping[str, Sequence[str]],
    cfg: InjectionConfig,
    workers: int = 1,
) -> tuple[Dataset, list[PerturbationRecord]]:
    """Apply ``inject`` to every example; output order equals input order."""
    missing = sorted(dataset.labels - set(per_class_candidates))
    if missing:
        raise ValueError(f"no candidates for labels: {', '.join(missing)}")

    def work(ex: LabeledExample) -> tuple[LabeledExample, PerturbationRecord]:
        return inject(ex, per_class_candidates[ex.label], cfg, example_rng(cfg.seed, ex.id))

    if workers <= 1:
        results = [work(ex) for ex in dataset]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, dataset.examples))
    return Dataset(tuple(r[0] for r in results)), [r[1] for r in results]


def random_baseline(
    dataset: Dataset,
    vocabulary: Sequence[str],
    records: Sequence[PerturbationRecord],
    cfg: InjectionConfig,
) -> Dataset:
    """Control dataset: uniform vocabulary words at the exact recorded gaps.

    Reuses the positions from a ``protect_dataset`` run on the same clean
    dataset, isolating the token choice as the only difference. Skipped
    examples stay skipped. Token draws come from a generator keyed by
    (seed XOR BASELINE_SEED_SALT, example id).
    """
    if len(records) != len(dataset.examples):
        raise ValueError("records do not align with dataset")
    vocab = list(vocabulary)
    out = []
    for ex, rec in zip(dataset, records):
        if rec.example_id != ex.id:
            raise ValueError(f"record/example mismatch: {rec.example_id!r} vs {ex.id!r}")
        if not rec.positions:
            out.append(ex)
            continue
        if not vocab:
            raise ValueError("empty vocabulary with recorded insertions")
        words = ex.text.split()
        if rec.positions[-1] > len(words):
            raise ValueError(f"record position out of range for example {ex.id!r}")
        rng = example_rng(cfg.seed ^ BASELINE_SEED_SALT, ex.id)
        tokens = [vocab[rng.randrange(len(vocab))] for _ in rec.positions]
        out.append(LabeledExample(ex.id, _splice(words, rec.positions, tokens), ex.label))
    return Dataset(tuple(out))
