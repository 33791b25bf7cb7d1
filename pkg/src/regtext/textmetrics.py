"""Fidelity comparison between a clean dataset and its perturbed twin.

ROUGE-L and the perturbation statistics always run locally. Semantic
similarity and grammar checking are delegated to external HTTP endpoints and
are reported as null when no client is configured or an endpoint keeps
failing past its budget.
"""

import logging
import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import requests

from .corpus import Dataset
from .injector import PerturbationRecord

log = logging.getLogger(__name__)


class EndpointError(RuntimeError):
    """External endpoint unreachable or returned an unusable response."""


@dataclass(frozen=True)
class ClientConfig:
    attempts: int = 3
    backoff: float = 0.5  # seconds; doubles after each failed attempt
    timeout: float = 10.0
    max_in_flight: int = 4
    failure_budget: int = 5


def _post_json(session: requests.Session, url: str, payload: dict, cfg: ClientConfig) -> dict:
    delay = cfg.backoff
    last: Exception | None = None
    for attempt in range(cfg.attempts):
        try:
            resp = session.post(url, json=payload, timeout=cfg.timeout)
            resp.raise_for_status()
            return resp.json()
        except (requests.RequestException, ValueError) as exc:
            last = exc
            if attempt + 1 < cfg.attempts:
                time.sleep(delay)
                delay *= 2
    raise EndpointError(f"POST {url} failed after {cfg.attempts} attempts: {last}")


class EmbeddingClient:
    """POST {"texts": [...]} -> {"vectors": [[...], ...]}."""

    def __init__(self, url: str, cfg: ClientConfig | None = None, session: requests.Session | None = None):
        self.url = url
        self.cfg = cfg or ClientConfig()
        self.session = session or requests.Session()

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        data = _post_json(self.session, self.url, {"texts": list(texts)}, self.cfg)
        vectors = data.get("vectors")
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise EndpointError(f"embedding endpoint returned {len(vectors) if isinstance(vectors, list) else 'no'} vectors for {len(texts)} texts")
        return vectors


class GrammarClient:
    """POST {"text": ...} -> {"findings": [{"rule", "offset", "length"}, ...]}."""

    def __init__(self, url: str, cfg: ClientConfig | None = None, session: requests.Session | None = None):
        self.url = url
        self.cfg = cfg or ClientConfig()
        self.session = session or requests.Session()

    def check(self, text: str) -> list[dict]:
        data = _post_json(self.session, self.url, {"text": text}, self.cfg)
        findings = data.get("findings")
        if not isinstance(findings, list):
            raise EndpointError("grammar endpoint returned no findings list")
        return findings


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    """Longest common subsequence length via the usual two-row dynamic program."""
    if not a or not b:
        return 0
    if len(b) > len(a):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        curr = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                curr.append(prev[j - 1] + 1)
            else:
                curr.append(max(prev[j], curr[j - 1]))
        prev = curr
    return prev[-1]


def rouge_l(reference: str, candidate: str) -> float:
    """ROUGE-L F-score over whitespace tokens (no normalization).

    Both empty -> 1.0; exactly one empty -> 0.0.
    """
    ref = reference.split()
    cand = candidate.split()
    if not ref and not cand:
        return 1.0
    if not ref or not cand:
        return 0.0
    lcs = lcs_length(ref, cand)
    if lcs == 0:
        return 0.0
    precision = lcs / len(cand)
    recall = lcs / len(ref)
    return 2 * precision * recall / (precision + recall)


def semantic_similarity(a: str, b: str, client: EmbeddingClient) -> float:
    """Cosine of the endpoint embeddings of the two texts."""
    va, vb = client.embed([a, b])
    va = np.asarray(va, dtype=float)
    vb = np.asarray(vb, dtype=float)
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        raise ValueError("degenerate embedding")
    return float(np.dot(va, vb) / (na * nb))


def _new_finding_count(clean_findings: list[dict], perturbed_findings: list[dict]) -> int:
    # Rule-id matching: insertion shifts offsets, so offsets cannot be compared.
    clean_rules = {f.get("rule") for f in clean_findings}
    return sum(1 for f in perturbed_findings if f.get("rule") not in clean_rules)


def grammar_error_rate(clean: Dataset, perturbed: Dataset, client: GrammarClient) -> float:
    """Percentage of examples where perturbation introduced a new grammar finding.

    A finding is new when no clean finding shares its rule id, so issues
    already present in the clean text are excluded.
    """
    _check_alignment(clean, perturbed)
    if len(clean) == 0:
        raise ValueError("empty dataset")
    flagged = 0
    for cex, pex in zip(clean, perturbed):
        clean_findings = client.check(cex.text)
        perturbed_findings = client.check(pex.text)
        if _new_finding_count(clean_findings, perturbed_findings) > 0:
            flagged += 1
    return 100.0 * flagged / len(clean)


@dataclass(frozen=True)
class ExampleFidelity:
    id: str
    rouge_l: float
    insertions: int
    skipped_reason: str | None


@dataclass
class FidelityReport:
    rouge_l_mean: float
    semantic_similarity_mean: float | None
    grammar_error_rate: float | None
    perturbed_fraction: float
    mean_insertions: float
    per_example: list[ExampleFidelity] = field(default_factory=list)
    semantic_failures: int = 0
    grammar_failures: int = 0

    def to_json_dict(self) -> dict:
        return {
            "schema": "fidelity/1",
            "rouge_l_mean": self.rouge_l_mean,
            "semantic_similarity_mean": self.semantic_similarity_mean,
            "grammar_error_rate": self.grammar_error_rate,
            "perturbed_fraction": self.perturbed_fraction,
            "mean_insertions": self.mean_insertions,
            "warnings": {
                "semantic_failures": self.semantic_failures,
                "grammar_failures": self.grammar_failures,
            },
            "per_example": [
                {
                    "id": row.id,
                    "rouge_l": row.rouge_l,
                    "insertions": row.insertions,
                    "skipped_reason": row.skipped_reason,
                }
                for row in self.per_example
            ],
        }


def _check_alignment(clean: Dataset, perturbed: Dataset) -> None:
    clean_ids = [ex.id for ex in clean]
    perturbed_ids = [ex.id for ex in perturbed]
    if clean_ids != perturbed_ids:
        raise ValueError("clean and perturbed datasets are not aligned by id")


def _map_with_budget(
    items: Sequence,
    fn: Callable,
    cfg: ClientConfig,
) -> tuple[list, int, bool]:
    """Apply fn under a concurrency cap; stop once failures exceed the budget.

    Returns (results with None at failed slots, failure count, exhausted flag).
    """
    results: list = [None] * len(items)
    failures = 0
    lock = threading.Lock()
    stop = threading.Event()

    def run(pair):
        nonlocal failures
        i, item = pair
        if stop.is_set():
            return
        try:
            results[i] = fn(item)
        except (EndpointError, ValueError) as exc:
            log.warning("external metric call failed: %s", exc)
            with lock:
                failures += 1
                if failures > cfg.failure_budget:
                    stop.set()

    with ThreadPoolExecutor(max_workers=max(1, cfg.max_in_flight)) as pool:
        list(pool.map(run, enumerate(items)))
    return results, failures, stop.is_set()


def fidelity(
    clean: Dataset,
    perturbed: Dataset,
    records: Sequence[PerturbationRecord],
    embedding_client: EmbeddingClient | None = None,
    grammar_client: GrammarClient | None = None,
) -> FidelityReport:
    """Build the full fidelity report for a clean/perturbed dataset pair.

    Local metrics always run. Each external metric runs only when its client
    is given; if its endpoint fails more than the client's failure budget,
    the metric comes back null with the failure count in the report.
    """
    _check_alignment(clean, perturbed)
    if len(records) != len(clean.examples):
        raise ValueError("records do not align with dataset")
    for ex, rec in zip(clean, records):
        if rec.example_id != ex.id:
            raise ValueError(f"record/example mismatch: {rec.example_id!r} vs {ex.id!r}")
    if len(clean) == 0:
        raise ValueError("empty dataset")

    rows = []
    for cex, pex, rec in zip(clean, perturbed, records):
        rows.append(
            ExampleFidelity(cex.id, rouge_l(cex.text, pex.text), len(rec.positions), rec.skipped_reason)
        )
    n = len(rows)
    # fsum keeps the means exactly order-independent
    rouge_mean = math.fsum(r.rouge_l for r in rows) / n
    perturbed_fraction = sum(1 for r in rows if r.insertions > 0) / n
    mean_insertions = sum(r.insertions for r in rows) / n

    semantic_mean = None
    semantic_failures = 0
    if embedding_client is not None:
        pairs = [(cex.text, pex.text) for cex, pex in zip(clean, perturbed)]
        values, semantic_failures, exhausted = _map_with_budget(
            pairs,
            lambda pair: semantic_similarity(pair[0], pair[1], embedding_client),
            embedding_client.cfg,
        )
        good = [v for v in values if v is not None]
        if not exhausted and good:
            semantic_mean = math.fsum(good) / len(good)

    grammar_rate = None
    grammar_failures = 0
    if grammar_client is not None:
        def one(pair):
            cex, pex = pair
            clean_findings = grammar_client.check(cex.text)
            perturbed_findings = grammar_client.check(pex.text)
            return _new_finding_count(clean_findings, perturbed_findings) > 0

        flags, grammar_failures, exhausted = _map_with_budget(
            list(zip(clean, perturbed)), one, grammar_client.cfg
        )
        good = [v for v in flags if v is not None]
        if not exhausted and good:
            grammar_rate = 100.0 * sum(1 for v in good if v) / len(good)

    return FidelityReport(
        rouge_l_mean=rouge_mean,
        semantic_similarity_mean=semantic_mean,
        grammar_error_rate=grammar_rate,
        perturbed_fraction=perturbed_fraction,
        mean_insertions=mean_insertions,
        per_example=rows,
        semantic_failures=semantic_failures,
        grammar_failures=grammar_failures,
    )
