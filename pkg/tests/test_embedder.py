import math

import numpy as np
import pytest

from markovec.embedder import (
    TrainConfig,
    TrainTrace,
    TraceRecord,
    Word2VecModel,
    cbow_prob,
    forward,
    forward_all,
    init_model,
    load_model,
    mean_corpus_loss,
    save_model,
    skipgram_grad,
    skipgram_loss,
    train_skipgram,
)
from markovec.errors import EmptyCorpus, IndexOutOfRange
from markovec.kernel import BlockSpec, block_kernel
from markovec.textgen import Corpus, MarkovModel, sample_corpus

FD_STEP = 1e-6


def finite_difference_grads(model, pivot, contexts):
    """Central-difference gradient oracle for skipgram_loss."""
    W, Wp = model.W, model.Wp
    d_row = np.zeros(model.dim)
    for n in range(model.dim):
        plus, minus = W.copy(), W.copy()
        plus[pivot, n] += FD_STEP
        minus[pivot, n] -= FD_STEP
        loss_plus = skipgram_loss(Word2VecModel(plus, Wp, model.width), pivot, contexts)
        loss_minus = skipgram_loss(Word2VecModel(minus, Wp, model.width), pivot, contexts)
        d_row[n] = (loss_plus - loss_minus) / (2 * FD_STEP)
    d_Wp = np.zeros_like(Wp)
    for n in range(model.dim):
        for j in range(model.vocab_size):
            plus, minus = Wp.copy(), Wp.copy()
            plus[n, j] += FD_STEP
            minus[n, j] -= FD_STEP
            loss_plus = skipgram_loss(Word2VecModel(W, plus, model.width), pivot, contexts)
            loss_minus = skipgram_loss(Word2VecModel(W, minus, model.width), pivot, contexts)
            d_Wp[n, j] = (loss_plus - loss_minus) / (2 * FD_STEP)
    return d_row, d_Wp


def relative_error(a, b):
    scale = max(1.0, float(np.abs(a).max()), float(np.abs(b).max()))
    return float(np.abs(a - b).max()) / scale


class TestInitModel:
    def test_deterministic(self):
        a = init_model(6, 4, 2, seed=11)
        b = init_model(6, 4, 2, seed=11)
        assert np.array_equal(a.W, b.W) and np.array_equal(a.Wp, b.Wp)

    def test_shapes(self):
        model = init_model(50, 10, 3, seed=0)
        assert model.W.shape == (50, 10)
        assert model.Wp.shape == (10, 50)
        assert model.width == 3

    def test_entries_bounded(self):
        model = init_model(30, 8, 1, seed=5)
        bound = 0.5 / 8
        assert np.abs(model.W).max() <= bound
        assert np.abs(model.Wp).max() <= bound


class TestForward:
    def test_zero_logits_give_uniform(self):
        model = Word2VecModel(np.zeros((4, 2)), np.zeros((2, 4)), 1)
        assert forward(model, 0) == pytest.approx([0.25] * 4, abs=1e-15)

    def test_closed_form_softmax(self):
        # logits (ln 2, 0) -> (2/3, 1/3)
        model = Word2VecModel([[1.0], [0.0]], [[math.log(2.0), 0.0]], 1)
        assert forward(model, 0) == pytest.approx([2 / 3, 1 / 3], abs=1e-15)

    def test_shift_invariance(self):
        model = Word2VecModel([[1.0], [0.0]], [[3.0, -1.0]], 1)
        shifted = Word2VecModel([[1.0], [0.0]], [[3.0 + 17.0, -1.0 + 17.0]], 1)
        assert forward(model, 0) == pytest.approx(forward(shifted, 0), abs=1e-14)

    def test_sums_to_one(self):
        model = init_model(40, 7, 1, seed=9)
        for i in (0, 13, 39):
            assert abs(forward(model, i).sum() - 1.0) <= 1e-12

    def test_forward_all_matches_rows(self):
        model = init_model(15, 4, 1, seed=2)
        table = forward_all(model)
        for i in range(15):
            assert table[i] == pytest.approx(forward(model, i), abs=1e-14)

    def test_index_checked(self):
        model = init_model(5, 2, 1, seed=0)
        with pytest.raises(IndexOutOfRange):
            forward(model, 5)


class TestSkipgramLoss:
    def test_uniform_model_two_contexts(self):
        model = Word2VecModel(np.zeros((2, 2)), np.zeros((2, 2)), 2)
        assert skipgram_loss(model, 0, [0, 1]) == pytest.approx(2 * math.log(2), abs=1e-14)

    def test_scalar_hand_value(self):
        # logits (1, 0), context 0: loss = -1 + log(e + 1)
        model = Word2VecModel([[1.0], [0.0]], [[1.0, 0.0]], 1)
        expected = -1.0 + math.log(math.e + 1.0)
        assert skipgram_loss(model, 0, [0]) == pytest.approx(expected, abs=1e-14)

    def test_matches_forward_decomposition(self):
        model = init_model(9, 3, 3, seed=4)
        contexts = [2, 7, 2]
        probs = forward(model, 1)
        expected = -sum(math.log(probs[j]) for j in contexts)
        assert skipgram_loss(model, 1, contexts) == pytest.approx(expected, abs=1e-10)

    def test_permutation_invariance(self):
        model = init_model(8, 3, 3, seed=6)
        assert skipgram_loss(model, 0, [1, 5, 2]) == skipgram_loss(model, 0, [2, 1, 5])

    def test_nonnegative(self):
        model = init_model(12, 5, 2, seed=8)
        for i in range(12):
            assert skipgram_loss(model, i, [(i + 1) % 12, (i + 3) % 12]) >= 0.0

    def test_context_length_enforced(self):
        model = init_model(5, 2, 2, seed=0)
        with pytest.raises(ValueError):
            skipgram_loss(model, 0, [1])


class TestSkipgramGrad:
    @pytest.mark.parametrize("vocab_size,dim", [(5, 3), (8, 4)])
    def test_matches_finite_differences(self, vocab_size, dim):
        rng = np.random.default_rng(vocab_size * 100 + dim)
        for _ in range(10):
            W = rng.normal(scale=0.5, size=(vocab_size, dim))
            Wp = rng.normal(scale=0.5, size=(dim, vocab_size))
            width = int(rng.integers(1, 4))
            model = Word2VecModel(W, Wp, width)
            pivot = int(rng.integers(vocab_size))
            contexts = rng.integers(vocab_size, size=width).tolist()
            d_row, d_Wp = skipgram_grad(model, pivot, contexts)
            fd_row, fd_Wp = finite_difference_grads(model, pivot, contexts)
            assert relative_error(d_row, fd_row) < 1e-5
            assert relative_error(d_Wp, fd_Wp) < 1e-5

    def test_gradient_vanishes_at_matching_model(self):
        # forward = uniform equals the one-hot average of contexts [0, 1]
        model = Word2VecModel(np.zeros((2, 3)), np.zeros((3, 2)), 2)
        d_row, d_Wp = skipgram_grad(model, 0, [0, 1])
        assert np.abs(d_row).max() < 1e-12
        assert np.abs(d_Wp).max() < 1e-12

    def test_zero_embedding_row_kills_context_gradient(self):
        rng = np.random.default_rng(3)
        W = rng.normal(size=(5, 3))
        W[2] = 0.0
        model = Word2VecModel(W, rng.normal(size=(3, 5)), 1)
        d_row, d_Wp = skipgram_grad(model, 2, [4])
        assert np.abs(d_Wp).max() == 0.0
        _, fd_Wp = finite_difference_grads(model, 2, [4])
        assert np.abs(fd_Wp).max() < 1e-9


class TestCbowProb:
    def test_single_context_equals_forward(self):
        model = init_model(7, 3, 2, seed=1)
        for target in (0, 3, 6):
            assert cbow_prob(model, [4], target) == pytest.approx(
                float(forward(model, 4)[target]), abs=1e-14
            )

    def test_repeated_context_equals_single(self):
        model = init_model(7, 3, 2, seed=2)
        assert cbow_prob(model, [5, 5, 5], 1) == cbow_prob(model, [5], 1)

    def test_cancelling_embeddings(self):
        # embeddings 1 and -1 average to 0, so the output is uniform
        model = Word2VecModel([[1.0], [-1.0]], [[1.0, 0.0]], 1)
        assert cbow_prob(model, [0, 1], 0) == pytest.approx(0.5, abs=1e-15)

    def test_empty_contexts_rejected(self):
        model = init_model(5, 2, 1, seed=0)
        with pytest.raises(ValueError):
            cbow_prob(model, [], 0)


class TestMeanCorpusLoss:
    def test_matches_per_pivot_average(self):
        model = init_model(6, 3, 2, seed=7)
        corpus = Corpus(np.array([0, 2, 4, 1, 5, 3, 0, 2]))
        pivots = corpus.pivot_positions(2)
        expected = np.mean([
            skipgram_loss(model, int(corpus.tokens[k]),
                          corpus.tokens[k + 1 : k + 3].tolist())
            for k in pivots
        ])
        assert mean_corpus_loss(model, corpus) == pytest.approx(expected, abs=1e-12)

    def test_respects_document_spans(self):
        tokens = np.array([0, 1, 2, 3])
        flat = Corpus(tokens)
        split = Corpus(tokens, doc_spans=((0, 2), (2, 4)))
        model = init_model(4, 2, 1, seed=1)
        assert mean_corpus_loss(model, flat) != mean_corpus_loss(model, split)


class TestTrainSkipgram:
    def test_bit_identical_reruns(self):
        corpus = sample_corpus(MarkovModel(block_kernel(20, BlockSpec(4, 3), seed=1)), 4000, seed=2)
        model = init_model(20, 5, 1, seed=3)
        config = TrainConfig(epochs=2, seed=3, log_every=1000)
        first, _ = train_skipgram(model, corpus, config)
        second, _ = train_skipgram(model, corpus, config)
        assert np.array_equal(first.W, second.W)
        assert np.array_equal(first.Wp, second.Wp)

    def test_loss_decreases_on_block_corpus(self):
        kernel = block_kernel(50, BlockSpec(8, 5), seed=1)
        corpus = sample_corpus(MarkovModel(kernel), 10**5, seed=2)
        model = init_model(50, 10, 1, seed=3)
        _, trace = train_skipgram(model, corpus, TrainConfig(epochs=1, seed=3, log_every=10_000))
        losses = trace.mean_losses()
        assert losses[-1] < losses[0]

    def test_deterministic_corpus_drives_loss_to_zero(self):
        corpus = Corpus(np.array([0, 1] * 1000))
        model = init_model(2, 2, 1, seed=0)
        config = TrainConfig(learning_rate=0.01, epochs=20, seed=0, log_every=2000)
        _, trace = train_skipgram(model, corpus, config)
        assert trace.final().mean_loss < 0.05

    def test_matches_reference_adam_steps(self):
        # one full epoch re-derived with skipgram_grad plus a textbook Adam
        corpus = Corpus(np.array([3, 1, 4, 1, 5, 2, 0]))
        model = init_model(6, 3, 1, seed=9)
        config = TrainConfig(learning_rate=0.05, epochs=1, seed=9, log_every=100)
        trained, _ = train_skipgram(model, corpus, config)

        W, Wp = model.W.copy(), model.Wp.copy()
        mW, vW = np.zeros_like(W), np.zeros_like(W)
        mP, vP = np.zeros_like(Wp), np.zeros_like(Wp)
        beta1, beta2, eps, lr = 0.9, 0.999, 1e-8, 0.05
        for step, k in enumerate(corpus.pivot_positions(1), start=1):
            current = Word2VecModel(W, Wp, 1)
            d_row, d_Wp = skipgram_grad(current, int(corpus.tokens[k]),
                                        [int(corpus.tokens[k + 1])])
            gW = np.zeros_like(W)
            gW[corpus.tokens[k]] = d_row
            corr1, corr2 = 1 - beta1**step, 1 - beta2**step
            for param, grad, m, v in ((W, gW, mW, vW), (Wp, d_Wp, mP, vP)):
                m[:] = beta1 * m + (1 - beta1) * grad
                v[:] = beta2 * v + (1 - beta2) * grad * grad
                param -= lr * (m / corr1) / (np.sqrt(v / corr2) + eps)
        assert np.allclose(trained.W, W, rtol=0, atol=1e-12)
        assert np.allclose(trained.Wp, Wp, rtol=0, atol=1e-12)

    def test_trace_steps_strictly_increasing(self):
        corpus = Corpus(np.arange(10) % 4)
        model = init_model(4, 2, 1, seed=0)
        _, trace = train_skipgram(model, corpus, TrainConfig(epochs=3, seed=0, log_every=4))
        steps = [r.step for r in trace.records]
        assert steps == sorted(set(steps))
        assert steps[-1] == 27  # 9 pivots x 3 epochs

    def test_shuffle_changes_order_not_determinism(self):
        corpus = sample_corpus(MarkovModel(block_kernel(10, BlockSpec(2, 3), seed=4)), 2000, seed=5)
        model = init_model(10, 3, 1, seed=6)
        shuffled = TrainConfig(epochs=1, seed=6, log_every=500, shuffle=True)
        a, _ = train_skipgram(model, corpus, shuffled)
        b, _ = train_skipgram(model, corpus, shuffled)
        plain, _ = train_skipgram(model, corpus, TrainConfig(epochs=1, seed=6, log_every=500))
        assert np.array_equal(a.W, b.W)
        assert not np.array_equal(a.W, plain.W)

    def test_empty_window_rejected(self):
        model = init_model(4, 2, 3, seed=0)
        with pytest.raises(EmptyCorpus):
            train_skipgram(model, Corpus(np.array([0, 1])), TrainConfig(epochs=1))

    def test_parallel_kernel_matches_serial_bitwise(self):
        # every prange block owns its output elements, so both compilations
        # of the step kernel must produce identical bits
        from markovec.embedder import _adam_window, _adam_window_parallel

        vocab_size, dim = 30, 6
        tokens = np.random.default_rng(11).integers(vocab_size, size=500)
        pivots = np.arange(499, dtype=np.int64)
        results = {}
        for name, kernel_fn in (("serial", _adam_window),
                                ("parallel", _adam_window_parallel)):
            rng = np.random.default_rng(12)
            W = (rng.random((vocab_size, dim)) - 0.5) / dim
            Wp = (rng.random((dim, vocab_size)) - 0.5) / dim
            moments = [np.zeros_like(W), np.zeros_like(W),
                       np.zeros_like(Wp), np.zeros_like(Wp)]
            loss, _ = kernel_fn(W, Wp, *moments, tokens, pivots, 0, 499, 1,
                                1e-3, 0.9, 0.999, 1e-8, 0)
            results[name] = (loss, W, Wp)
        assert results["serial"][0] == results["parallel"][0]
        assert np.array_equal(results["serial"][1], results["parallel"][1])
        assert np.array_equal(results["serial"][2], results["parallel"][2])


def test_trace_rejects_non_increasing_steps():
    with pytest.raises(ValueError):
        TrainTrace((TraceRecord(5, 1.0), TraceRecord(5, 0.9)))


def test_model_io_round_trip(tmp_path):
    model = init_model(9, 4, 2, seed=13)
    path = tmp_path / "model.txt"
    save_model(model, path)
    loaded = load_model(path)
    assert np.array_equal(loaded.W, model.W)
    assert np.array_equal(loaded.Wp, model.Wp)
    assert loaded.width == 2
    assert path.read_text().splitlines()[0] == "9 4 2"
