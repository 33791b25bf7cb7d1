"""Deterministic synthetic corpora for the verification labs and demos.

Three generators, each seeded and pure:

- ``review_corpus``: mixed-length two-class text for exercising injection
  and fidelity bounds.
- ``zipf_corpus``: a frequency ladder where rare tokens are class-pure and
  frequent tokens are class-balanced by construction (balanced occurrences
  are dealt to mirrored example pairs, one per class, so their gradient
  contributions cancel instead of random-walking). Frequency then tracks
  class-informativeness the way it does in natural corpora: the head is
  filler, the tail carries the signal.
- ``shortcut_corpus``: train/test sets whose only reliable feature is a
  genuine marker token aligned with the label 90% of the time; the
  substrate for the unlearnability and random-baseline experiments.
"""

import random
from dataclasses import dataclass

from .corpus import Dataset, LabeledExample
from .stopwords import STOPWORDS_V1

_CONSONANTS = "bcdfghjklmnpqrstvwz"
_VOWELS = "aeiou"


def _pseudo_words(rng: random.Random, count: int, used: set[str], syllables: tuple[int, int] = (2, 3)) -> list[str]:
    words = []
    while len(words) < count:
        n = rng.randint(*syllables)
        word = "".join(rng.choice(_CONSONANTS) + rng.choice(_VOWELS) for _ in range(n))
        if word in used or word in STOPWORDS_V1:
            continue
        used.add(word)
        words.append(word)
    return words


def _chunks(items: list, n_groups: int) -> list[list]:
    base, extra = divmod(len(items), n_groups)
    out = []
    start = 0
    for i in range(n_groups):
        size = base + (1 if i < extra else 0)
        out.append(items[start : start + size])
        start += size
    return out


def review_corpus(n_examples: int = 1000, seed: int = 0, min_words: int = 3, max_words: int = 60) -> Dataset:
    """Two-class corpus with word counts spread over [min_words, max_words].

    Mimics the statistics of review text: Zipf-weighted neutral filler,
    sentiment words that usually (80%) but not always match the label, and a
    handful of rare name-like tokens that are perfectly class-pure, about
    15% of examples carrying one.
    """
    rng = random.Random(seed)
    used: set[str] = set()
    neutral = _pseudo_words(rng, 60, used)
    neutral_weights = [1 / (r + 1) for r in range(len(neutral))]
    class_pools = {"pos": _pseudo_words(rng, 12, used), "neg": _pseudo_words(rng, 12, used)}
    class_weights = [1 / (r + 1) for r in range(12)]
    names = {"pos": _pseudo_words(rng, 4, used), "neg": _pseudo_words(rng, 4, used)}
    opposite = {"pos": "neg", "neg": "pos"}
    examples = []
    for i in range(n_examples):
        label = "pos" if i % 2 == 0 else "neg"
        length = rng.randint(min_words, max_words)
        with_name = rng.random() < 0.15
        words = []
        for _ in range(length - 1 if with_name else length):
            if rng.random() < 0.25:
                pool = label if rng.random() < 0.8 else opposite[label]
                words.append(rng.choices(class_pools[pool], class_weights)[0])
            else:
                words.append(rng.choices(neutral, neutral_weights)[0])
        if with_name:
            words.insert(rng.randrange(len(words) + 1), rng.choice(names[label]))
        examples.append(LabeledExample(str(i), " ".join(words), label))
    return Dataset(tuple(examples))


# Frequency ladder for zipf_corpus at the reference size (600 examples):
# (type count, frequency range, class-pure type count). The pure fraction
# falls off with frequency; everything else is split exactly half-and-half
# across the two classes. The f=1 band is large on purpose: it supplies one
# pure occurrence to (almost) every example, which keeps the two members of
# a mirrored pair the same length. Type counts scale with the corpus size.
_ZIPF_LADDER = (
    (500, 1, 1, 500),
    (80, 2, 3, 24),
    (48, 4, 7, 5),
    (32, 8, 15, 1),
    (150, 16, 31, 0),
    (250, 32, 63, 0),
)
_ZIPF_REFERENCE_SIZE = 600


def zipf_corpus(n_examples: int = 600, seed: int = 0) -> Dataset:
    """Two-class corpus whose token frequencies span log buckets 1..63.

    Examples come in mirrored pairs (one per class) that share their
    balanced-token multiset, so a balanced token's class counts are equal
    and its occurrences sit in near-identical contexts. Pure tokens appear
    only in examples of their own class.
    """
    if n_examples < 2:
        raise ValueError("need at least 2 examples")
    n_examples -= n_examples % 2  # one example per class per pair
    n_pairs = n_examples // 2
    scale = n_examples / _ZIPF_REFERENCE_SIZE
    rng = random.Random(seed)
    used: set[str] = set()

    balanced_occurrences: list[str] = []  # one entry per PAIR of occurrences
    pure_occurrences = {0: [], 1: []}
    pure_parity = 0
    for n_types, f_lo, f_hi, n_pure in _ZIPF_LADDER:
        n_types = max(1, round(n_types * scale))
        n_pure = min(n_types, round(n_pure * scale)) if n_pure else 0
        words = _pseudo_words(rng, n_types, used)
        for idx, word in enumerate(words):
            if idx < n_pure:
                pure_occurrences[pure_parity].extend([word] * rng.randint(f_lo, f_hi))
                pure_parity ^= 1
            else:
                # balanced tokens get an even in-bucket count, half per class
                freq = rng.randrange(max(2, f_lo), f_hi + 1, 2)
                balanced_occurrences.extend([word] * (freq // 2))

    rng.shuffle(balanced_occurrences)
    pair_groups = _chunks(balanced_occurrences, n_pairs)
    class_groups = {}
    for cls in (0, 1):
        rng.shuffle(pure_occurrences[cls])
        class_groups[cls] = _chunks(pure_occurrences[cls], n_pairs)

    examples = []
    for pair in range(n_pairs):
        for cls in (0, 1):
            words = list(pair_groups[pair]) + class_groups[cls][pair]
            rng.shuffle(words)
            examples.append(
                LabeledExample(str(2 * pair + cls), " ".join(words), f"c{cls}")
            )
    return Dataset(tuple(examples))


@dataclass(frozen=True)
class ShortcutCorpus:
    train: Dataset
    test: Dataset
    genuine: dict[str, tuple[str, ...]]        # label -> genuine marker tokens
    rare_spurious: dict[str, tuple[str, ...]]  # label -> class-pure rare tokens (train only)
    fillers: tuple[str, ...]


def shortcut_corpus(
    n_train: int = 800,
    n_test: int = 300,
    seed: int = 0,
    genuine_strength: float = 0.9,
    markers_per_class: int = 32,
    rare_per_class: int = 3,
    rare_frequency: int = 30,
    filler_types: int = 60,
    words_per_example: tuple[int, int] = (12, 20),
) -> ShortcutCorpus:
    """Corpus whose only reliable signal is a pool of genuine marker tokens.

    Every example carries exactly one marker, drawn from its own class pool
    with probability ``genuine_strength`` and from the opposite pool
    otherwise; the rest is uniform filler. Spreading the genuine signal over
    a pool keeps each individual marker weak, the way real sentiment words
    are.

    The train split additionally seeds each class with a few
    100%-class-pure tokens at a controlled frequency (think director names
    in movie reviews): they carry no test-time signal, and their
    purity-at-moderate-rarity profile is exactly what the rank metric is
    built to surface, so they outrank both the markers and any filler. Every
    example is longer than the default injection gate (w_min=10), so a
    protection pass perturbs all of it. Test ids are disjoint from train
    ids.
    """
    if not 0.5 <= genuine_strength <= 1.0:
        raise ValueError("genuine_strength must be in [0.5, 1.0]")
    rng = random.Random(seed)
    used: set[str] = set()
    fillers = tuple(_pseudo_words(rng, filler_types, used))
    genuine = {
        "pos": tuple(_pseudo_words(rng, markers_per_class, used)),
        "neg": tuple(_pseudo_words(rng, markers_per_class, used)),
    }
    rare_spurious = {
        "pos": tuple(_pseudo_words(rng, rare_per_class, used)),
        "neg": tuple(_pseudo_words(rng, rare_per_class, used)),
    }
    opposite = {"pos": "neg", "neg": "pos"}

    def build(prefix: str, count: int) -> list[LabeledExample]:
        examples = []
        for i in range(count):
            label = "pos" if i % 2 == 0 else "neg"
            marker_label = label if rng.random() < genuine_strength else opposite[label]
            marker = rng.choice(genuine[marker_label])
            length = rng.randint(*words_per_example)
            words = [rng.choice(fillers) for _ in range(length - 1)]
            words.insert(rng.randrange(length), marker)
            examples.append(LabeledExample(f"{prefix}{i}", " ".join(words), label))
        return examples

    train = build("tr", n_train)
    for label in ("pos", "neg"):
        rows = [i for i, ex in enumerate(train) if ex.label == label]
        for token in rare_spurious[label]:
            for i in rng.sample(rows, min(rare_frequency, len(rows))):
                words = train[i].text.split()
                words.insert(rng.randrange(len(words) + 1), token)
                train[i] = LabeledExample(train[i].id, " ".join(words), label)

    return ShortcutCorpus(
        Dataset(tuple(train)), Dataset(tuple(build("te", n_test))), genuine, rare_spurious, fillers
    )
