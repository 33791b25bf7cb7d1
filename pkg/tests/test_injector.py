import pytest

from regtext import (
    Dataset,
    InjectionConfig,
    LabeledExample,
    PerturbationRecord,
    example_rng,
    inject,
    num_perturbation_sites,
    protect_dataset,
    random_baseline,
)


def make_example(n_words, label="pos", ex_id="0"):
    return LabeledExample(ex_id, " ".join(f"w{i}" for i in range(n_words)), label)


class TestNumPerturbationSites:
    def test_formula(self):
        cfg = InjectionConfig(t=0.01, w_max=10)
        assert num_perturbation_sites(250, cfg) == 2

    def test_cap_binds(self):
        cfg = InjectionConfig(t=0.01, w_max=10)
        assert num_perturbation_sites(2000, cfg) == 10

    def test_force_min_one(self):
        cfg = InjectionConfig(t=0.01, w_max=10, force_min_one=True)
        assert int(35 * 0.01) == 0
        assert num_perturbation_sites(35, cfg) == 1

    def test_force_min_one_off(self):
        cfg = InjectionConfig(t=0.01, w_max=10, force_min_one=False)
        assert num_perturbation_sites(35, cfg) == 0

    def test_config_validation(self):
        with pytest.raises(ValueError):
            InjectionConfig(t=0.0)
        with pytest.raises(ValueError):
            InjectionConfig(t=1.5)
        with pytest.raises(ValueError):
            InjectionConfig(w_max=0)
        with pytest.raises(ValueError):
            InjectionConfig(w_min=0)
        with pytest.raises(ValueError):
            InjectionConfig(n_w=0)


class TestInject:
    def test_short_example_unchanged(self):
        cfg = InjectionConfig(w_min=10)
        ex = make_example(8)
        out, rec = inject(ex, ["piston"], cfg, example_rng(0, ex.id))
        assert out == ex
        assert rec.skipped_reason == "too_short"
        assert rec.positions == ()

    def test_boundary_equal_wmin_unchanged(self):
        cfg = InjectionConfig(w_min=10)
        ex = make_example(10)
        out, rec = inject(ex, ["piston"], cfg, example_rng(0, ex.id))
        assert out == ex and rec.skipped_reason == "too_short"

    def test_empty_candidates(self):
        cfg = InjectionConfig()
        ex = make_example(40)
        out, rec = inject(ex, [], cfg, example_rng(0, ex.id))
        assert out == ex
        assert rec.skipped_reason == "empty_candidates"

    def test_insertion_preserves_words_as_subsequence(self):
        cfg = InjectionConfig(t=0.2, w_max=10)
        ex = LabeledExample(
            "ag1",
            "Ecclestone slams Silverstone after a stinging attack on Silverstone owners today",
            "Sports",
        )
        out, rec = inject(ex, ["piston"], cfg, example_rng(3, ex.id))
        original = ex.text.split()
        perturbed = out.text.split()
        assert len(perturbed) == len(original) + len(rec.positions)
        it = iter(perturbed)
        assert all(word in it for word in original)
        extras = [w for w in perturbed if w == "piston"]
        assert len(extras) == len(rec.positions) >= 1
        assert out.label == ex.label and out.id == ex.id

    def test_single_candidate_means_single_token(self):
        cfg = InjectionConfig(t=0.5, w_max=10)
        ex = make_example(30)
        out, rec = inject(ex, ["zz"], cfg, example_rng(1, ex.id))
        assert set(rec.injected) == {"zz"}
        assert len(rec.positions) == num_perturbation_sites(30, cfg)

    def test_positions_strictly_increasing_within_bounds(self):
        cfg = InjectionConfig(t=1.0, w_max=10)
        ex = make_example(12)
        _, rec = inject(ex, ["a", "b"], cfg, example_rng(4, ex.id))
        assert list(rec.positions) == sorted(set(rec.positions))
        assert all(0 <= p <= 12 for p in rec.positions)

    def test_gap_zero_and_end_allowed(self):
        # t=1 on a 12-word example requests 10 gaps of 13: over many seeds
        # both edge gaps must occur.
        cfg = InjectionConfig(t=1.0, w_max=12)
        ex = make_example(12)
        seen = set()
        for seed in range(30):
            _, rec = inject(ex, ["x"], cfg, example_rng(seed, ex.id))
            seen.update(rec.positions)
        assert 0 in seen and 12 in seen


class TestProtectDataset:
    def make_dataset(self, sizes, label="pos"):
        return Dataset(
            tuple(make_example(n, label=label, ex_id=str(i)) for i, n in enumerate(sizes))
        )

    def test_deterministic_across_runs(self):
        ds = self.make_dataset([30, 8, 50])
        cfg = InjectionConfig(seed=7)
        first = protect_dataset(ds, {"pos": ["zz"]}, cfg)
        second = protect_dataset(ds, {"pos": ["zz"]}, cfg)
        assert first == second

    def test_worker_count_invariance(self):
        ds = self.make_dataset(range(5, 45))
        cfg = InjectionConfig(seed=11)
        byone = protect_dataset(ds, {"pos": ["zz", "qq"]}, cfg, workers=1)
        byfour = protect_dataset(ds, {"pos": ["zz", "qq"]}, cfg, workers=4)
        assert byone == byfour

    def test_missing_label_fails_before_work(self):
        ds = Dataset((make_example(20, "pos", "0"), make_example(20, "neg", "1")))
        with pytest.raises(ValueError, match="neg"):
            protect_dataset(ds, {"pos": ["zz"]}, InjectionConfig())

    def test_all_short_dataset_untouched(self):
        ds = self.make_dataset([3, 5, 10])
        out, records = protect_dataset(ds, {"pos": ["zz"]}, InjectionConfig())
        assert out == ds
        assert all(r.skipped_reason == "too_short" for r in records)

    def test_gate_predicate_matches_word_count(self):
        sizes = list(range(1, 40))
        ds = self.make_dataset(sizes)
        cfg = InjectionConfig()
        out, records = protect_dataset(ds, {"pos": ["zz"]}, cfg)
        for ex, rec, n in zip(out, records, sizes):
            if n > cfg.w_min:
                assert rec.positions and rec.skipped_reason is None
            else:
                assert not rec.positions and rec.skipped_reason == "too_short"
                assert ex.text == ds.examples[int(ex.id)].text

    def test_labels_and_order_preserved(self):
        ds = Dataset((
            make_example(20, "pos", "a"),
            make_example(25, "neg", "b"),
            make_example(6, "pos", "c"),
        ))
        out, _ = protect_dataset(ds, {"pos": ["p"], "neg": ["n"]}, InjectionConfig(seed=2))
        assert [(e.id, e.label) for e in out] == [(e.id, e.label) for e in ds]

    def test_different_seeds_differ(self):
        ds = self.make_dataset([100] * 5)
        a, _ = protect_dataset(ds, {"pos": ["zz"]}, InjectionConfig(seed=1))
        b, _ = protect_dataset(ds, {"pos": ["zz"]}, InjectionConfig(seed=2))
        assert a != b


class TestRandomBaseline:
    def test_positions_reused_exactly(self):
        ds = Dataset((make_example(40, "pos", "0"), make_example(8, "pos", "1")))
        cfg = InjectionConfig(seed=5)
        protected, records = protect_dataset(ds, {"pos": ["zz"]}, cfg)
        control = random_baseline(ds, ["aa", "bb", "cc"], records, cfg)
        for clean_ex, ctrl_ex, rec in zip(ds, control, records):
            words = ctrl_ex.text.split()
            assert len(words) == len(clean_ex.text.split()) + len(rec.positions)
            # tokens at the recorded gaps come from the vocabulary
            clean_words = clean_ex.text.split()
            inserted = []
            offset = 0
            for pos in rec.positions:
                inserted.append(words[pos + offset])
                offset += 1
            assert all(tok in {"aa", "bb", "cc"} for tok in inserted)

    def test_lengths_match_protected(self):
        ds = Dataset(tuple(make_example(n, "pos", str(n)) for n in range(5, 60, 3)))
        cfg = InjectionConfig(seed=9)
        protected, records = protect_dataset(ds, {"pos": ["zz"]}, cfg)
        control = random_baseline(ds, ["aa", "bb"], records, cfg)
        for p, c in zip(protected, control):
            assert len(p.text.split()) == len(c.text.split())

    def test_skipped_examples_stay_skipped(self):
        ds = Dataset((make_example(4, "pos", "0"),))
        cfg = InjectionConfig()
        _, records = protect_dataset(ds, {"pos": ["zz"]}, cfg)
        control = random_baseline(ds, ["aa"], records, cfg)
        assert control.examples[0] == ds.examples[0]

    def test_record_mismatch_errors(self):
        ds = Dataset((make_example(40, "pos", "0"),))
        cfg = InjectionConfig()
        with pytest.raises(ValueError, match="align"):
            random_baseline(ds, ["aa"], [], cfg)
        bad = [PerturbationRecord("other", (1,), ("x",))]
        with pytest.raises(ValueError, match="mismatch"):
            random_baseline(ds, ["aa"], bad, cfg)

    def test_empty_vocabulary_with_insertions(self):
        ds = Dataset((make_example(40, "pos", "0"),))
        cfg = InjectionConfig()
        _, records = protect_dataset(ds, {"pos": ["zz"]}, cfg)
        with pytest.raises(ValueError, match="vocabulary"):
            random_baseline(ds, [], records, cfg)

    def test_empty_dataset(self):
        control = random_baseline(Dataset(()), ["aa"], [], InjectionConfig())
        assert len(control) == 0

    def test_baseline_differs_from_protected_tokens(self):
        ds = Dataset((make_example(60, "pos", "0"),))
        cfg = InjectionConfig(seed=3)
        protected, records = protect_dataset(ds, {"pos": ["zz"]}, cfg)
        control = random_baseline(ds, ["aa", "bb"], records, cfg)
        assert "zz" not in control.examples[0].text.split()


class TestPerturbationRecord:
    def test_parallel_lists_enforced(self):
        with pytest.raises(ValueError, match="parallel"):
            PerturbationRecord("x", (1, 2), ("a",))

    def test_strictly_increasing_enforced(self):
        with pytest.raises(ValueError, match="increasing"):
            PerturbationRecord("x", (2, 2), ("a", "b"))

    def test_skip_reason_consistency(self):
        with pytest.raises(ValueError, match="skipped_reason"):
            PerturbationRecord("x", (1,), ("a",), "too_short")
        with pytest.raises(ValueError, match="skipped_reason"):
            PerturbationRecord("x", (), ())

    def test_json_round_trip(self):
        rec = PerturbationRecord("x", (1, 5), ("a", "b"))
        assert PerturbationRecord.from_json_dict(rec.to_json_dict()) == rec
        skipped = PerturbationRecord("y", (), (), "too_short")
        assert PerturbationRecord.from_json_dict(skipped.to_json_dict()) == skipped


class TestExampleRng:
    def test_keyed_by_seed_and_id(self):
        a = example_rng(1, "x").random()
        assert a == example_rng(1, "x").random()
        assert a != example_rng(2, "x").random()
        assert a != example_rng(1, "y").random()
