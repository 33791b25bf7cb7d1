import numpy as np
import pytest

from regtext import (
    Dataset,
    GradientTrace,
    LabeledExample,
    ProbeConfig,
    TokenizerConfig,
    compute_stats,
    finite_diff_check,
    frequency_gradient_curve,
    gamma,
    log2_buckets,
    phi,
    train_probe,
)
from regtext.gradprobe import example_loss, phi_values
from regtext.synthetic import zipf_corpus

from .oracles import probe_reference

TINY_CFG = ProbeConfig(embed_dim=8, epochs=3, batch_size=4, seed=5)


def two_class_dataset(n=24, words=6):
    examples = []
    for i in range(n):
        label = "A" if i % 2 == 0 else "B"
        base = "aa bb" if label == "A" else "cc dd"
        text = " ".join((base + " ee").split()[i % 3] for _ in range(words))
        examples.append(LabeledExample(str(i), f"{base} {text}", label))
    return Dataset(tuple(examples))


class TestTrainProbe:
    def test_deterministic(self, plain_tokenizer):
        ds = two_class_dataset()
        m1, t1 = train_probe(ds, plain_tokenizer, TINY_CFG)
        m2, t2 = train_probe(ds, plain_tokenizer, TINY_CFG)
        assert np.array_equal(m1.embeddings, m2.embeddings)
        assert np.array_equal(m1.weights, m2.weights)
        assert np.array_equal(t1.grad_sum, t2.grad_sum)

    def test_zero_learning_rate_keeps_init_but_accumulates(self, plain_tokenizer):
        ds = two_class_dataset()
        cfg = ProbeConfig(embed_dim=8, epochs=2, batch_size=4, learning_rate=0.0, seed=9)
        model, trace = train_probe(ds, plain_tokenizer, cfg)
        rng = np.random.default_rng(cfg.seed)
        init_emb = rng.uniform(-0.1, 0.1, size=model.embeddings.shape)
        init_w = rng.uniform(-0.1, 0.1, size=model.weights.shape)
        assert np.array_equal(model.embeddings, init_emb)
        assert np.array_equal(model.weights, init_w)
        assert np.array_equal(model.bias, np.zeros(len(model.labels)))
        assert float(np.abs(trace.grad_sum).sum()) > 0.0

    def test_single_token_example_gets_full_pooled_gradient(self, plain_tokenizer):
        # Two one-token examples, one batch: mirror of the degenerate L=1
        # chain rule; verified against the independent reference loop.
        ds = Dataset((
            LabeledExample("0", "good", "A"),
            LabeledExample("1", "bad", "B"),
        ))
        cfg = ProbeConfig(embed_dim=4, epochs=1, batch_size=16, seed=3)
        _, trace = train_probe(ds, plain_tokenizer, cfg)
        vocab, _, _, _, ref_grad, _ = probe_reference(ds, plain_tokenizer, cfg)
        assert tuple(vocab) == trace.tokens
        assert np.allclose(trace.grad_sum, ref_grad, atol=1e-12)

    def test_matches_reference_loop(self, plain_tokenizer):
        ds = two_class_dataset(n=20, words=5)
        cfg = ProbeConfig(embed_dim=6, epochs=4, batch_size=8, learning_rate=0.05, seed=11)
        model, trace = train_probe(ds, plain_tokenizer, cfg)
        vocab, emb, weights, bias, ref_grad, _ = probe_reference(ds, plain_tokenizer, cfg)
        assert tuple(vocab) == trace.tokens
        assert np.allclose(trace.grad_sum, ref_grad, atol=1e-10)
        assert np.allclose(model.embeddings, emb, atol=1e-10)
        assert np.allclose(model.weights, weights, atol=1e-10)
        assert np.allclose(model.bias, bias, atol=1e-10)

    def test_occurrence_counts_match_compute_stats(self, plain_tokenizer):
        ds = zipf_corpus(200, seed=1)
        _, trace = train_probe(ds, plain_tokenizer, ProbeConfig(epochs=1, seed=0))
        stats = compute_stats(ds, plain_tokenizer)
        assert int(trace.occurrence_count.sum()) == stats.total
        for i, token in enumerate(trace.tokens):
            assert int(trace.occurrence_count[i]) == stats.token_counts[token]

    def test_single_label_rejected(self, plain_tokenizer):
        ds = Dataset((LabeledExample("0", "aa bb", "only"),))
        with pytest.raises(ValueError, match="labels"):
            train_probe(ds, plain_tokenizer, TINY_CFG)

    def test_empty_examples_skipped(self, caplog):
        cfg = TokenizerConfig(stopwords=frozenset({"the"}))
        ds = Dataset((
            LabeledExample("0", "aa bb", "A"),
            LabeledExample("1", "the", "B"),
            LabeledExample("2", "cc", "B"),
        ))
        with caplog.at_level("WARNING"):
            _, trace = train_probe(ds, cfg, TINY_CFG)
        assert "skipping example '1'" in caplog.text
        assert int(trace.occurrence_count.sum()) == 3


class TestPhiGamma:
    def make_trace(self):
        return GradientTrace(
            tokens=("aa", "bb", "cc"),
            grad_sum=np.array([[3.0, 4.0], [0.0, 0.0], [1.0, 0.0]]),
            occurrence_count=np.array([2, 1, 5]),
        )

    def test_euclidean_norm(self):
        trace = self.make_trace()
        assert phi(trace, "aa") == 5.0
        assert phi(trace, "bb") == 0.0

    def test_unknown_token(self):
        with pytest.raises(ValueError, match="unknown token"):
            phi(self.make_trace(), "zz")

    def test_gamma_empty_singleton_additive(self):
        trace = self.make_trace()
        assert gamma(trace, set()) == 0.0
        assert gamma(trace, {"aa"}) == phi(trace, "aa")
        assert gamma(trace, {"aa", "cc"}) == pytest.approx(
            gamma(trace, {"aa"}) + gamma(trace, {"cc"})
        )

    def test_gamma_unknown_token(self):
        with pytest.raises(ValueError):
            gamma(self.make_trace(), {"aa", "zz"})

    def test_phi_bounded_by_per_step_norm_sum(self, plain_tokenizer):
        ds = two_class_dataset(n=16, words=4)
        cfg = ProbeConfig(embed_dim=6, epochs=3, batch_size=4, learning_rate=0.05, seed=2)
        _, trace = train_probe(ds, plain_tokenizer, cfg)
        _, _, _, _, _, step_norms = probe_reference(ds, plain_tokenizer, cfg)
        phis = phi_values(trace)
        assert np.all(phis >= 0.0)
        assert np.all(phis <= step_norms + 1e-9)


class TestFrequencyCurve:
    def test_single_bucket(self):
        trace = GradientTrace(
            tokens=("aa", "bb"),
            grad_sum=np.array([[3.0, 4.0], [0.0, 1.0]]),
            occurrence_count=np.array([1, 9]),
        )
        rows = frequency_gradient_curve(trace, [(1, 10)])
        assert len(rows) == 1
        assert rows[0].token_count == 2
        assert rows[0].mean_phi == pytest.approx(3.0)
        assert rows[0].median_frequency == pytest.approx(5.0)

    def test_log_buckets_skip_empty(self):
        trace = GradientTrace(
            tokens=("aa", "bb"),
            grad_sum=np.zeros((2, 2)),
            occurrence_count=np.array([1, 9]),
        )
        rows = frequency_gradient_curve(trace, log2_buckets(9))
        assert [(r.lo, r.hi) for r in rows] == [(1, 1), (8, 15)]

    def test_uncovered_frequency(self):
        trace = GradientTrace(
            tokens=("aa",), grad_sum=np.zeros((1, 2)), occurrence_count=np.array([5])
        )
        with pytest.raises(ValueError, match="not covered"):
            frequency_gradient_curve(trace, [(1, 3)])

    def test_overlap_rejected(self):
        trace = GradientTrace(
            tokens=("aa",), grad_sum=np.zeros((1, 2)), occurrence_count=np.array([2])
        )
        with pytest.raises(ValueError, match="overlap"):
            frequency_gradient_curve(trace, [(1, 3), (3, 5)])

    def test_log2_buckets_cover(self):
        buckets = log2_buckets(600)
        assert buckets[0] == (1, 1)
        assert buckets[-1][1] >= 600
        for (_, hi_a), (lo_b, _) in zip(buckets, buckets[1:]):
            assert lo_b == hi_a + 1

    def test_shortcut_token_outweighs_frequent_fillers(self, plain_tokenizer):
        # One class-pure token at frequency 5 vs fillers at frequency 500:
        # identical filler content in every example isolates the signal.
        fillers = [f"fill{i}" for i in range(10)]
        examples = []
        for i in range(500):
            label = "A" if i % 2 == 0 else "B"
            words = list(fillers)
            if label == "A" and i < 10:
                words.append("shortcut")
            examples.append(LabeledExample(str(i), " ".join(words), label))
        ds = Dataset(tuple(examples))
        _, trace = train_probe(ds, plain_tokenizer, ProbeConfig(seed=0))
        idx = trace.token_index
        assert int(trace.occurrence_count[idx["shortcut"]]) == 5
        assert int(trace.occurrence_count[idx["fill0"]]) == 500
        rows = frequency_gradient_curve(trace, log2_buckets(500))
        by_bucket = {(r.lo, r.hi): r for r in rows}
        assert by_bucket[(4, 7)].mean_phi > by_bucket[(256, 511)].mean_phi


class TestFiniteDiff:
    def test_linear_coordinates_tight(self, plain_tokenizer):
        ds = two_class_dataset()
        model, _ = train_probe(ds, plain_tokenizer, TINY_CFG)
        err = finite_diff_check(model, ds.examples[0], 1e-5, samples=32, seed=1)
        assert err <= 1e-6

    def test_random_samples_within_tolerance(self, plain_tokenizer):
        ds = two_class_dataset(n=30, words=8)
        model, _ = train_probe(ds, plain_tokenizer, ProbeConfig(embed_dim=16, epochs=2, seed=7))
        worst = max(
            finite_diff_check(model, ex, 1e-5, samples=16, seed=i)
            for i, ex in enumerate(ds.examples[:8])
        )
        assert worst <= 1e-4

    def test_epsilon_range_enforced(self, plain_tokenizer):
        ds = two_class_dataset()
        model, _ = train_probe(ds, plain_tokenizer, TINY_CFG)
        with pytest.raises(ValueError, match="epsilon"):
            finite_diff_check(model, ds.examples[0], 1e-2)

    def test_empty_example_rejected(self, plain_tokenizer):
        ds = two_class_dataset()
        model, _ = train_probe(ds, plain_tokenizer, TINY_CFG)
        with pytest.raises(ValueError, match="empty"):
            finite_diff_check(model, LabeledExample("zz", "", "A"), 1e-5)

    def test_example_loss_positive(self, plain_tokenizer):
        ds = two_class_dataset()
        model, _ = train_probe(ds, plain_tokenizer, TINY_CFG)
        assert example_loss(model, ds.examples[0]) > 0.0
