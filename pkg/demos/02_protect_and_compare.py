#!/usr/bin/env python3
"""Protect a dataset end to end and measure how little the text changes.

Ranked spurious tokens are injected at seeded random gaps (at most w_max per
example, none into examples of w_min words or fewer). The fidelity report
then quantifies the damage: ROUGE-L stays high because every original word
survives in order.
"""

from regtext import (
    InjectionConfig,
    RankConfig,
    TokenizerConfig,
    compute_stats,
    fidelity,
    protect_dataset,
    random_baseline,
    top_spurious,
)
from regtext.synthetic import review_corpus

tok_cfg = TokenizerConfig()
dataset = review_corpus(500, seed=3)
inj = InjectionConfig(n_w=1, t=0.01, w_min=10, w_max=10, seed=2024)

stats = compute_stats(dataset, tok_cfg)
candidates = {
    label: [row.token for row in top_spurious(stats, label, inj.n_w, RankConfig())]
    for label in sorted(dataset.labels)
}
print(f"per-class spurious candidates: {candidates}")

protected, records = protect_dataset(dataset, candidates, inj)
touched = sum(1 for r in records if r.positions)
print(f"perturbed {touched}/{len(records)} examples "
      f"(the rest have <= {inj.w_min} words)")

sample = next(r for r in records if len(r.positions) >= 1)
index = [ex.id for ex in dataset].index(sample.example_id)
print("\nbefore:", dataset.examples[index].text[:96], "...")
print("after: ", protected.examples[index].text[:96], "...")
print("record:", sample.to_json_dict())

report = fidelity(dataset, protected, records)
print("\nfidelity (local metrics)")
print(f"  rouge_l_mean       = {report.rouge_l_mean:.4f}")
print(f"  perturbed_fraction = {report.perturbed_fraction:.3f}")
print(f"  mean_insertions    = {report.mean_insertions:.3f}")

control = random_baseline(dataset, sorted(stats.token_counts), records, inj)
control_report = fidelity(dataset, control, records)
print("\nrandom-word control at the same positions")
print(f"  rouge_l_mean       = {control_report.rouge_l_mean:.4f} (same by construction)")
print("\nsemantic similarity / grammar metrics need the HTTP endpoints; see README.")
