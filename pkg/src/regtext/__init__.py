"""Unlearnable-text toolkit: rank spurious tokens, inject them, verify.

The pipeline: rank class-associated rare tokens with a frequency-penalized
PMI score, inject them at seeded random gaps to produce a perturbed twin of
a labeled dataset, then measure fidelity (ROUGE-L, optional endpoint
metrics) and demonstrate the intended training-time effects with two
desk-scale labs: a gradient probe relating token frequency to accumulated
gradient mass, and a bag-of-words surrogate exhibiting the
converges-but-does-not-generalize signature.
"""

__version__ = "0.1.0"

from .corpus import (
    Dataset,
    DatasetError,
    LabeledExample,
    TokenizerConfig,
    filtered_stream,
    load_dataset,
    load_stopword_file,
    normalize,
    save_dataset,
    tokenize,
)
from .gradprobe import (
    FrequencyBucketRow,
    GradientTrace,
    ProbeConfig,
    ProbeModel,
    finite_diff_check,
    frequency_gradient_curve,
    gamma,
    log2_buckets,
    phi,
    train_probe,
)
from .injector import (
    BASELINE_SEED_SALT,
    InjectionConfig,
    PerturbationRecord,
    example_rng,
    inject,
    num_perturbation_sites,
    protect_dataset,
    random_baseline,
)
from .ranking import (
    RankConfig,
    RankedToken,
    TokenStats,
    compute_stats,
    pmi_k,
    rank_tokens,
    regtext_rank,
    top_spurious,
)
from .stopwords import STOPWORDS_V1
from .surrogate import (
    BowModel,
    GapReport,
    SurrogateConfig,
    evaluate,
    train_bow,
    unlearnability_gap,
)
from .textmetrics import (
    ClientConfig,
    EmbeddingClient,
    EndpointError,
    FidelityReport,
    GrammarClient,
    fidelity,
    grammar_error_rate,
    lcs_length,
    rouge_l,
    semantic_similarity,
)
