"""Command-line pipeline: rank, protect, baseline, compare, probe, evaluate.

Exit codes: 0 success, 2 user/input error, 3 internal error, 4 external
endpoint failed past its retry budget (with --strict-endpoints). No
subcommand mutates its inputs; given identical inputs and config, outputs
are byte-identical (manifests differ only in their created_at field).
"""

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from .config import ConfigError, RunConfig, parse_config_file, resolve_config, write_manifest
from .corpus import DatasetError, load_dataset, save_dataset
from .gradprobe import frequency_gradient_curve, log2_buckets, phi_values, train_probe
from .injector import protect_dataset, random_baseline, PerturbationRecord
from .ranking import compute_stats, rank_tokens
from .surrogate import unlearnability_gap
from .textmetrics import EmbeddingClient, EndpointError, GrammarClient, fidelity

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INTERNAL = 3
EXIT_ENDPOINT = 4

log = logging.getLogger(__name__)


def _safe_label(label: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_" else "_" for ch in label) or "_"


def _out_dir(args) -> Path:
    # --out flag beats the io.out config key; default is ./out
    out = Path(args.out or getattr(args, "config_out", None) or "out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _load(cfg: RunConfig, path: str):
    return load_dataset(path, cfg.data_format)


def _load_records(path: str | Path) -> list[PerturbationRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            content = line.strip()
            if not content:
                raise DatasetError(f"records line {lineno}: empty line")
            try:
                records.append(PerturbationRecord.from_json_dict(json.loads(content)))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise DatasetError(f"records line {lineno}: {exc}") from exc
    return records


def _candidates_by_class(cfg: RunConfig, dataset) -> dict[str, list[str]]:
    stats = compute_stats(dataset, cfg.tokenizer_config())
    return {
        label: [row.token for row in rank_tokens(stats, label, cfg.rank)[: cfg.n_w]]
        for label in sorted(dataset.labels)
    }


def cmd_rank(cfg: RunConfig, args) -> int:
    dataset = _load(cfg, args.dataset)
    stats = compute_stats(dataset, cfg.tokenizer_config())
    out = _out_dir(args)
    written = []
    for label in sorted(dataset.labels):
        rows = rank_tokens(stats, label, cfg.rank)
        if args.top:
            rows = rows[: args.top]
        path = out / f"rank_{_safe_label(label)}.jsonl"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            for row in rows:
                fh.write(json.dumps(row.to_json_dict(), ensure_ascii=False) + "\n")
        written.append(path.name)
    write_manifest(out / "manifest.json", "rank", cfg, {"dataset": Path(args.dataset)}, written)
    print(f"wrote {len(written)} rank report(s) to {out}")
    return EXIT_OK


def cmd_protect(cfg: RunConfig, args) -> int:
    dataset = _load(cfg, args.dataset)
    candidates = _candidates_by_class(cfg, dataset)
    perturbed, records = protect_dataset(dataset, candidates, cfg.injection_config(), cfg.workers)
    out = _out_dir(args)
    dataset_path = out / f"protected.{cfg.data_format}"
    records_path = out / "records.jsonl"
    save_dataset(perturbed, dataset_path, cfg.data_format)
    with open(records_path, "w", encoding="utf-8", newline="") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json_dict(), ensure_ascii=False) + "\n")
    write_manifest(
        out / "manifest.json", "protect", cfg, {"dataset": Path(args.dataset)},
        [dataset_path.name, records_path.name],
    )
    n_perturbed = sum(1 for r in records if r.positions)
    print(f"protected {n_perturbed}/{len(records)} examples -> {dataset_path}")
    return EXIT_OK


def cmd_baseline(cfg: RunConfig, args) -> int:
    dataset = _load(cfg, args.dataset)
    records = _load_records(args.records)
    stats = compute_stats(dataset, cfg.tokenizer_config())
    vocabulary = sorted(stats.token_counts)
    control = random_baseline(dataset, vocabulary, records, cfg.injection_config())
    out = _out_dir(args)
    path = out / f"baseline.{cfg.data_format}"
    save_dataset(control, path, cfg.data_format)
    write_manifest(
        out / "manifest.json", "baseline", cfg,
        {"dataset": Path(args.dataset), "records": Path(args.records)}, [path.name],
    )
    print(f"wrote random-word control -> {path}")
    return EXIT_OK


def cmd_compare(cfg: RunConfig, args) -> int:
    clean = _load(cfg, args.clean)
    perturbed = _load(cfg, args.perturbed)
    records = _load_records(args.records)
    embedding = EmbeddingClient(cfg.embedding_url, cfg.client) if cfg.embedding_url else None
    grammar = GrammarClient(cfg.grammar_url, cfg.client) if cfg.grammar_url else None
    report = fidelity(clean, perturbed, records, embedding, grammar)
    out = _out_dir(args)
    _write_json(out / "fidelity.json", report.to_json_dict())
    write_manifest(
        out / "manifest.json", "compare", cfg,
        {"clean": Path(args.clean), "perturbed": Path(args.perturbed), "records": Path(args.records)},
        ["fidelity.json"],
    )
    print(
        f"rouge_l_mean={report.rouge_l_mean:.4f} perturbed_fraction={report.perturbed_fraction:.3f}"
        f" semantic={report.semantic_similarity_mean} grammar={report.grammar_error_rate}"
    )
    failed_semantic = embedding is not None and report.semantic_similarity_mean is None
    failed_grammar = grammar is not None and report.grammar_error_rate is None
    if args.strict_endpoints and (failed_semantic or failed_grammar):
        print("endpoint metric(s) unavailable past retry budget", file=sys.stderr)
        return EXIT_ENDPOINT
    return EXIT_OK


def cmd_probe(cfg: RunConfig, args) -> int:
    dataset = _load(cfg, args.dataset)
    model, trace = train_probe(dataset, cfg.tokenizer_config(), cfg.probe_config())
    max_freq = int(trace.occurrence_count.max())
    rows = frequency_gradient_curve(trace, log2_buckets(max_freq))
    out = _out_dir(args)
    summary = {
        "schema": "probe/1",
        "vocabulary_size": len(trace.tokens),
        "total_occurrences": int(trace.occurrence_count.sum()),
        "buckets": [
            {
                "lo": r.lo,
                "hi": r.hi,
                "token_count": r.token_count,
                "mean_phi": r.mean_phi,
                "median_frequency": r.median_frequency,
            }
            for r in rows
        ],
    }
    _write_json(out / "probe_summary.json", summary)
    with open(out / "probe_curve.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lo", "hi", "token_count", "mean_phi", "median_frequency"])
        for r in rows:
            writer.writerow([r.lo, r.hi, r.token_count, r.mean_phi, r.median_frequency])
    outputs = ["probe_summary.json", "probe_curve.csv"]
    if args.tokens_csv:
        phis = phi_values(trace)
        with open(out / "probe_tokens.csv", "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["token", "frequency", "phi"])
            for i, tok in enumerate(trace.tokens):
                writer.writerow([tok, int(trace.occurrence_count[i]), float(phis[i])])
        outputs.append("probe_tokens.csv")
    write_manifest(out / "manifest.json", "probe", cfg, {"dataset": Path(args.dataset)}, outputs)
    print(f"probe curve over {len(rows)} buckets -> {out / 'probe_curve.csv'}")
    return EXIT_OK


def cmd_evaluate(cfg: RunConfig, args) -> int:
    clean_train = _load(cfg, args.clean_train)
    unlearnable_train = _load(cfg, args.unlearnable_train)
    clean_test = _load(cfg, args.clean_test)
    report = unlearnability_gap(
        clean_train, unlearnable_train, clean_test, cfg.tokenizer_config(), cfg.surrogate_config()
    )
    out = _out_dir(args)
    _write_json(out / "gap.json", report.to_json_dict())
    write_manifest(
        out / "manifest.json", "evaluate", cfg,
        {
            "clean_train": Path(args.clean_train),
            "unlearnable_train": Path(args.unlearnable_train),
            "clean_test": Path(args.clean_test),
        },
        ["gap.json"],
    )
    print(
        f"train_acc_unlearnable={report.train_acc_unlearnable:.4f}"
        f" test_clean={report.test_acc_clean_model:.4f}"
        f" test_unlearnable={report.test_acc_unlearnable_model:.4f} gap={report.gap:.4f}"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="regtext",
        description="Rank spurious tokens, inject them, and verify the result.",
    )
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="flat key=value config file")
    shared.add_argument("--seed", type=int, help="64-bit unsigned master seed")
    shared.add_argument("--workers", type=int, help="worker cap for parallel stages")
    shared.add_argument("--format", choices=["jsonl", "csv"], help="dataset file format")
    shared.add_argument("--out", help="output directory (default: io.out config key, then ./out)")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rank", parents=[shared], help="write per-class ranked-token reports")
    p.add_argument("dataset")
    p.add_argument("--top", type=int, default=0, help="keep only the top N tokens per class (0 = all)")
    p.set_defaults(handler=cmd_rank)

    p = sub.add_parser("protect", parents=[shared], help="inject ranked tokens into a dataset")
    p.add_argument("dataset")
    p.set_defaults(handler=cmd_protect)

    p = sub.add_parser("baseline", parents=[shared], help="random words at the recorded positions")
    p.add_argument("dataset")
    p.add_argument("records")
    p.set_defaults(handler=cmd_baseline)

    p = sub.add_parser("compare", parents=[shared], help="fidelity report between clean and perturbed")
    p.add_argument("clean")
    p.add_argument("perturbed")
    p.add_argument("records")
    p.add_argument("--strict-endpoints", action="store_true",
                   help="exit 4 when a configured endpoint metric stays unavailable")
    p.set_defaults(handler=cmd_compare)

    p = sub.add_parser("probe", parents=[shared], help="token frequency vs gradient-mass curve")
    p.add_argument("dataset")
    p.add_argument("--tokens-csv", action="store_true", help="also write per-token phi values")
    p.set_defaults(handler=cmd_probe)

    p = sub.add_parser("evaluate", parents=[shared], help="unlearnability gap via the surrogate learner")
    p.add_argument("clean_train")
    p.add_argument("unlearnable_train")
    p.add_argument("clean_test")
    p.set_defaults(handler=cmd_evaluate)
    return parser


def _resolve(args) -> RunConfig:
    file_values = parse_config_file(args.config) if args.config else {}
    args.config_out = file_values.get("io.out")
    return resolve_config(
        file_values,
        seed=args.seed,
        workers=args.workers,
        data_format=args.format,
    )


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, stream=sys.stderr)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve(args)
        return args.handler(cfg, args)
    except (ConfigError, DatasetError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except EndpointError as exc:
        print(f"endpoint error: {exc}", file=sys.stderr)
        return EXIT_ENDPOINT
    except Exception as exc:  # pragma: no cover - defensive
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    raise SystemExit(main())
