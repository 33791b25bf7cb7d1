"""Dataset ingestion, whitespace tokenization, and normalization.

Every other stage consumes the filtered token stream produced here:
whitespace tokens, lowercased, edge punctuation stripped, stopwords dropped.
All operations are pure functions over immutable values.
"""

import csv
import json
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

from .stopwords import STOPWORDS_V1

DATASET_FORMATS = ("jsonl", "csv")
_CSV_HEADER = ["id", "text", "label"]


class DatasetError(ValueError):
    """Malformed or inconsistent dataset input."""


@dataclass(frozen=True)
class LabeledExample:
    id: str
    text: str
    label: str


@dataclass(frozen=True)
class Dataset:
    """Ordered collection of examples; ``labels`` is derived, never supplied."""

    examples: tuple[LabeledExample, ...]
    labels: frozenset[str] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "examples", tuple(self.examples))
        seen = set()
        for ex in self.examples:
            if ex.id in seen:
                raise DatasetError(f"duplicate example id: {ex.id!r}")
            seen.add(ex.id)
        object.__setattr__(self, "labels", frozenset(ex.label for ex in self.examples))

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self) -> Iterator[LabeledExample]:
        return iter(self.examples)


def _strip_edge_punctuation(token: str) -> str:
    # Only edges: interior hyphens/apostrophes stay intact.
    start, end = 0, len(token)
    while start < end and unicodedata.category(token[start]).startswith("P"):
        start += 1
    while end > start and unicodedata.category(token[end - 1]).startswith("P"):
        end -= 1
    return token[start:end]


def _normalize(token: str, lowercase: bool, strip_punctuation: bool) -> str:
    if lowercase:
        token = token.lower()
    if strip_punctuation:
        token = _strip_edge_punctuation(token)
    return token


@dataclass(frozen=True)
class TokenizerConfig:
    stopwords: frozenset[str] = STOPWORDS_V1
    lowercase: bool = True
    strip_punctuation: bool = True

    def __post_init__(self):
        object.__setattr__(self, "stopwords", frozenset(self.stopwords))
        for word in self.stopwords:
            if _normalize(word, self.lowercase, self.strip_punctuation) != word:
                raise ValueError(f"stopword not in normalized form: {word!r}")


def tokenize(text: str) -> list[str]:
    """Split on runs of Unicode whitespace; never yields empty tokens."""
    return text.split()


def normalize(token: str, cfg: TokenizerConfig) -> str:
    """Lowercase and strip edge punctuation per ``cfg``; may return ''."""
    return _normalize(token, cfg.lowercase, cfg.strip_punctuation)


def filtered_stream(example: LabeledExample, cfg: TokenizerConfig) -> list[str]:
    """Normalized, non-stopword tokens of an example, in text order."""
    out = []
    for raw in tokenize(example.text):
        tok = normalize(raw, cfg)
        if tok and tok not in cfg.stopwords:
            out.append(tok)
    return out


def load_stopword_file(path: str | Path) -> frozenset[str]:
    """Read a one-token-per-line stopword file; entries are normalized."""
    words = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            tok = _normalize(line.strip(), lowercase=True, strip_punctuation=True)
            if tok:
                words.add(tok)
    return frozenset(words)


def _coerce_record(lineno: int, index: int, obj: dict) -> LabeledExample:
    for key in ("text", "label"):
        value = obj.get(key)
        if not isinstance(value, str):
            raise DatasetError(f"line {lineno}: missing or non-string field {key!r}")
    raw_id = obj.get("id", "")
    if not isinstance(raw_id, str):
        raise DatasetError(f"line {lineno}: non-string field 'id'")
    return LabeledExample(raw_id if raw_id else str(index), obj["text"], obj["label"])


def _load_jsonl(path: Path) -> list[LabeledExample]:
    examples = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            content = line.rstrip("\r\n")
            if not content:
                raise DatasetError(f"line {lineno}: empty line")
            try:
                obj = json.loads(content)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"line {lineno}: invalid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise DatasetError(f"line {lineno}: record is not an object")
            examples.append(_coerce_record(lineno, len(examples), obj))
    return examples


def _load_csv(path: Path) -> list[LabeledExample]:
    examples = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return examples
        if header != _CSV_HEADER:
            raise DatasetError(f"line 1: header must be exactly {','.join(_CSV_HEADER)}")
        for row in reader:
            lineno = reader.line_num
            if len(row) != 3:
                raise DatasetError(f"line {lineno}: expected 3 fields, got {len(row)}")
            raw_id, text, label = row
            examples.append(
                LabeledExample(raw_id if raw_id else str(len(examples)), text, label)
            )
    return examples


def load_dataset(path: str | Path, format: str = "jsonl") -> Dataset:
    """Load a dataset file, preserving record order.

    Records missing an ``id`` get the 0-based record index rendered in
    decimal. Extra JSONL keys are ignored; they are not round-tripped.
    """
    path = Path(path)
    if format not in DATASET_FORMATS:
        raise DatasetError(f"unknown format {format!r}; expected one of {DATASET_FORMATS}")
    if not path.is_file():
        raise DatasetError(f"no such dataset file: {path}")
    loader = _load_jsonl if format == "jsonl" else _load_csv
    return Dataset(tuple(loader(path)))


def save_dataset(dataset: Dataset, path: str | Path, format: str = "jsonl") -> None:
    """Write a dataset in canonical form (fixed key order id, text, label).

    JSONL output is UTF-8 with LF line endings, so ``save(load(f))`` is
    byte-identical for files already in canonical form.
    """
    path = Path(path)
    if format == "jsonl":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            for ex in dataset:
                fh.write(json.dumps({"id": ex.id, "text": ex.text, "label": ex.label}, ensure_ascii=False))
                fh.write("\n")
    elif format == "csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(_CSV_HEADER)
            for ex in dataset:
                writer.writerow([ex.id, ex.text, ex.label])
    else:
        raise DatasetError(f"unknown format {format!r}; expected one of {DATASET_FORMATS}")
