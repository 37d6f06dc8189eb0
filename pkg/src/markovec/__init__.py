"""markovec: a lab for testing what skip-gram word2vec recovers from text
whose generating process is fully known.

Corpora are sampled from Markov chains with controllable block structure
(groups of words with identical context distributions), skip-gram models are
trained with the exact full-softmax loss, and metrics quantify how much of
the generating context matrix the learned factorization recovers.
"""

__version__ = "0.1.0"

from .errors import MarkovecError
from .kernel import (
    BlockSpec,
    ReferenceModel,
    StochasticMatrix,
    block_kernel,
    compress_duplicates,
    geometric_sum_map,
    invert_geometric_sum,
    kernel_from_reference,
    random_kernel,
    reference_from_kernel,
    stationary,
    validate_stochastic,
)
from .textgen import Corpus, MarkovModel, empirical_reference, empirical_unigram, sample_corpus
from .embedder import (
    TrainConfig,
    TrainTrace,
    Word2VecModel,
    cbow_prob,
    forward,
    init_model,
    mean_corpus_loss,
    skipgram_grad,
    skipgram_loss,
    train_skipgram,
)
from .metrics import (
    GroupSimilarityStats,
    block_similarity_stats,
    cross_entropy_row,
    embedding_cosine,
    expected_cross_entropy,
    group_distance,
    prob_dot_similarity,
    trace_cosine_distance,
)
from .polarity import (
    EmbedSettings,
    Lexicon,
    TokenizedCorpusSlice,
    VocabMap,
    build_vocab,
    centroid_cosine,
    encode_slice,
    load_lexicon,
    mean_pairwise_cosine,
    polarity_report,
)
from .harness import (
    ExperimentConfig,
    run_block_recovery,
    run_identifiability,
    run_losslimit_check,
    run_roundtrip_check,
)

__all__ = [name for name in dir() if not name.startswith("_")]
