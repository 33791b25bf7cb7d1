"""Run configuration: defaults, flat config files, and manifests.

Config files are flat key-value documents with dotted section keys:

    seed = 42
    rank.k = 3
    rank.lambda = 2
    injection.t = 0.01
    endpoints.embedding_url = http://localhost:8900/embed

Blank lines and '#' comments are ignored. Precedence is defaults < config
file < command-line flags. The endpoint URLs additionally fall back to the
REGTEXT_EMBED_URL / REGTEXT_GRAMMAR_URL environment variables when neither
the file nor a flag sets them; the environment never overrides either.

Seeding scheme: every stage consumes the single top-level seed directly;
the random-word control XORs in ``injector.BASELINE_SEED_SALT``. The
resolved configuration is echoed verbatim into every manifest, along with
sha256 digests (lowercase hex) of all input files.
"""

import hashlib
import json
import os
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .corpus import TokenizerConfig, load_stopword_file
from .gradprobe import ProbeConfig
from .injector import InjectionConfig
from .ranking import RankConfig
from .surrogate import SurrogateConfig
from .textmetrics import ClientConfig

ENV_EMBED_URL = "REGTEXT_EMBED_URL"
ENV_GRAMMAR_URL = "REGTEXT_GRAMMAR_URL"


class ConfigError(ValueError):
    """Unusable configuration file or option value."""


def _parse_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"not a boolean: {raw!r}")


@dataclass(frozen=True)
class RunConfig:
    seed: int = 42
    workers: int = 1
    data_format: str = "jsonl"
    stopword_file: str | None = None
    lowercase: bool = True
    strip_punctuation: bool = True
    rank: RankConfig = RankConfig()
    n_w: int = 1
    t: float = 0.01
    w_min: int = 10
    w_max: int = 10
    force_min_one: bool = True
    probe: ProbeConfig = ProbeConfig()
    surrogate: SurrogateConfig = SurrogateConfig()
    embedding_url: str | None = None
    grammar_url: str | None = None
    client: ClientConfig = ClientConfig()

    def tokenizer_config(self) -> TokenizerConfig:
        if self.stopword_file:
            stopwords = load_stopword_file(self.stopword_file)
            return TokenizerConfig(stopwords, self.lowercase, self.strip_punctuation)
        return TokenizerConfig(lowercase=self.lowercase, strip_punctuation=self.strip_punctuation)

    def injection_config(self) -> InjectionConfig:
        return InjectionConfig(
            n_w=self.n_w,
            w_max=self.w_max,
            w_min=self.w_min,
            t=self.t,
            seed=self.seed,
            force_min_one=self.force_min_one,
        )

    def probe_config(self) -> ProbeConfig:
        return replace(self.probe, seed=self.seed)

    def surrogate_config(self) -> SurrogateConfig:
        return replace(self.surrogate, seed=self.seed)

    def to_json_dict(self) -> dict:
        return {
            "seed": self.seed,
            "workers": self.workers,
            "io": {"format": self.data_format},
            "tokenizer": {
                "lowercase": self.lowercase,
                "strip_punctuation": self.strip_punctuation,
                "stopword_file": self.stopword_file,
            },
            "rank": {"k": self.rank.k, "lambda": self.rank.lam},
            "injection": {
                "n_w": self.n_w,
                "t": self.t,
                "w_min": self.w_min,
                "w_max": self.w_max,
                "force_min_one": self.force_min_one,
            },
            "probe": {
                "embed_dim": self.probe.embed_dim,
                "epochs": self.probe.epochs,
                "batch_size": self.probe.batch_size,
                "learning_rate": self.probe.learning_rate,
                "l2": self.probe.l2,
            },
            "surrogate": {
                "epochs": self.surrogate.epochs,
                "batch_size": self.surrogate.batch_size,
                "learning_rate": self.surrogate.learning_rate,
                "l2": self.surrogate.l2,
            },
            "endpoints": {
                "embedding_url": self.embedding_url,
                "grammar_url": self.grammar_url,
                "attempts": self.client.attempts,
                "backoff": self.client.backoff,
                "timeout": self.client.timeout,
                "max_in_flight": self.client.max_in_flight,
                "failure_budget": self.client.failure_budget,
            },
        }


def parse_config_file(path: str | Path) -> dict[str, str]:
    """Read a flat dotted-key config file into a string map."""
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, _, raw = stripped.partition("=")
            values[key.strip()] = raw.strip()
    return values


# key -> (RunConfig path, converter)
_KEY_CONVERTERS = {
    "seed": int,
    "workers": int,
    "io.format": str,
    "io.out": str,
    "tokenizer.lowercase": _parse_bool,
    "tokenizer.strip_punctuation": _parse_bool,
    "tokenizer.stopword_file": str,
    "rank.k": int,
    "rank.lambda": float,
    "injection.n_w": int,
    "injection.t": float,
    "injection.w_min": int,
    "injection.w_max": int,
    "injection.force_min_one": _parse_bool,
    "probe.embed_dim": int,
    "probe.epochs": int,
    "probe.batch_size": int,
    "probe.learning_rate": float,
    "probe.l2": float,
    "surrogate.epochs": int,
    "surrogate.batch_size": int,
    "surrogate.learning_rate": float,
    "surrogate.l2": float,
    "endpoints.embedding_url": str,
    "endpoints.grammar_url": str,
    "endpoints.attempts": int,
    "endpoints.backoff": float,
    "endpoints.timeout": float,
    "endpoints.max_in_flight": int,
    "endpoints.failure_budget": int,
}


def resolve_config(file_values: dict[str, str] | None = None, **flag_overrides) -> RunConfig:
    """Fold defaults, config-file values, and flag overrides into a RunConfig.

    ``flag_overrides`` uses the dotted keys with dots replaced by
    underscores is not needed: pass plain attribute overrides (seed=...,
    workers=..., data_format=...). Unknown file keys are rejected.
    """
    typed: dict[str, object] = {}
    for key, raw in (file_values or {}).items():
        converter = _KEY_CONVERTERS.get(key)
        if converter is None:
            raise ConfigError(f"unknown config key: {key!r}")
        try:
            typed[key] = converter(raw)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {raw!r} ({exc})") from exc

    try:
        cfg = RunConfig(
            seed=typed.get("seed", 42),
            workers=typed.get("workers", 1),
            data_format=typed.get("io.format", "jsonl"),
            stopword_file=typed.get("tokenizer.stopword_file"),
            lowercase=typed.get("tokenizer.lowercase", True),
            strip_punctuation=typed.get("tokenizer.strip_punctuation", True),
            rank=RankConfig(k=typed.get("rank.k", 3), lam=typed.get("rank.lambda", 2.0)),
            n_w=typed.get("injection.n_w", 1),
            t=typed.get("injection.t", 0.01),
            w_min=typed.get("injection.w_min", 10),
            w_max=typed.get("injection.w_max", 10),
            force_min_one=typed.get("injection.force_min_one", True),
            probe=ProbeConfig(
                embed_dim=typed.get("probe.embed_dim", 32),
                epochs=typed.get("probe.epochs", 10),
                batch_size=typed.get("probe.batch_size", 16),
                learning_rate=typed.get("probe.learning_rate", 0.001),
                l2=typed.get("probe.l2", 0.0),
            ),
            surrogate=SurrogateConfig(
                epochs=typed.get("surrogate.epochs", 60),
                batch_size=typed.get("surrogate.batch_size", 16),
                learning_rate=typed.get("surrogate.learning_rate", 0.5),
                l2=typed.get("surrogate.l2", 0.0),
            ),
            embedding_url=typed.get("endpoints.embedding_url"),
            grammar_url=typed.get("endpoints.grammar_url"),
            client=ClientConfig(
                attempts=typed.get("endpoints.attempts", 3),
                backoff=typed.get("endpoints.backoff", 0.5),
                timeout=typed.get("endpoints.timeout", 10.0),
                max_in_flight=typed.get("endpoints.max_in_flight", 4),
                failure_budget=typed.get("endpoints.failure_budget", 5),
            ),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    overrides = {k: v for k, v in flag_overrides.items() if v is not None}
    if overrides:
        cfg = replace(cfg, **overrides)
    # endpoints only: environment fills gaps, never overrides
    if cfg.embedding_url is None and os.environ.get(ENV_EMBED_URL):
        cfg = replace(cfg, embedding_url=os.environ[ENV_EMBED_URL])
    if cfg.grammar_url is None and os.environ.get(ENV_GRAMMAR_URL):
        cfg = replace(cfg, grammar_url=os.environ[ENV_GRAMMAR_URL])
    if cfg.data_format not in ("jsonl", "csv"):
        raise ConfigError(f"io.format must be jsonl or csv, got {cfg.data_format!r}")
    if cfg.workers < 1:
        raise ConfigError("workers must be >= 1")
    try:
        cfg.injection_config()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        while True:
            block = fh.read(1 << 20)
            if not block:
                break
            digest.update(block)
    return digest.hexdigest()


def write_manifest(
    path: Path,
    command: str,
    cfg: RunConfig,
    inputs: dict[str, Path],
    outputs: list[str],
) -> None:
    """Emit the run manifest: resolved config, input digests, versions.

    ``created_at`` is the only field that varies between identical runs;
    nothing digests the manifest itself.
    """
    doc = {
        "schema": "manifest/1",
        "command": command,
        "created_at": datetime.now(timezone.utc).isoformat(),
        "config": cfg.to_json_dict(),
        "inputs": {
            name: {"path": str(p), "sha256": sha256_file(p)} for name, p in inputs.items()
        },
        "outputs": outputs,
        "versions": {"regtext": __version__},
    }
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
