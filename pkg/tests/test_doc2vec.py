import numpy as np
import pytest
from helpers import finite_diff_grad, max_rel_error

from adscreen.doc2vec import (
    Doc2VecConfig,
    Doc2VecModel,
    build_context_pairs,
    build_vocab,
    context_nll_and_grad,
    softmax_context_prob,
    softmax_over_words,
    train_doc2vec,
)
from adscreen.errors import AllTokensOOVError, EmptyCorpusError, EmptySequenceError

TOY = [
    ["the", "boy", "takes", "a", "cookie"],
    ["the", "girl", "washes", "a", "dish"],
    ["the", "boy", "helps", "the", "girl"],
]


def oracle_pairs(docs, vocab, window):
    m = len(vocab)
    pairs = set()
    for d, toks in enumerate(docs):
        for pos, tok in enumerate(toks):
            if tok not in vocab:
                continue
            i = vocab[tok]
            pairs.add((i, m + d))
            for q, other in enumerate(toks):
                if q != pos and abs(q - pos) <= window and other in vocab:
                    pairs.add((i, vocab[other]))
    return sorted(pairs)


class TestContextPairs:
    def test_window_one_single_doc(self):
        docs = [["a", "b", "c"]]
        vocab = build_vocab(docs)
        pairs = set(map(tuple, build_context_pairs(docs, vocab, window=1)))
        m = len(vocab)
        b = vocab["b"]
        contexts_of_b = {ctx for i, ctx in pairs if i == b}
        assert contexts_of_b == {vocab["a"], vocab["c"], m + 0}

    def test_window_zero_only_documents(self):
        docs = [["a", "b"], ["b", "c"]]
        vocab = build_vocab(docs)
        with pytest.raises(ValueError):
            Doc2VecConfig(window=0)
        # direct builder call with window 0 still works for the bound check
        pairs = build_context_pairs(docs, vocab, window=0)
        assert all(ctx >= len(vocab) for _, ctx in pairs)

    def test_matches_exhaustive_enumeration(self):
        rng = np.random.default_rng(6)
        words = [f"w{i}" for i in range(9)]
        for _ in range(20):
            docs = [
                [words[k] for k in rng.integers(0, 9, size=rng.integers(1, 12))]
                for _ in range(3)
            ]
            vocab = build_vocab(docs)
            window = int(rng.integers(1, 4))
            got = [tuple(p) for p in build_context_pairs(docs, vocab, window)]
            assert got == oracle_pairs(docs, vocab, window)

    def test_set_semantics_deduplicates(self):
        docs = [["a", "b", "a", "b", "a", "b"]]
        vocab = build_vocab(docs)
        pairs = build_context_pairs(docs, vocab, window=2)
        assert len(pairs) == len({tuple(p) for p in pairs})


class TestSoftmax:
    def test_distribution_sums_to_one(self):
        rng = np.random.default_rng(8)
        for _ in range(30):
            W = rng.normal(size=(rng.integers(2, 10), 5))
            u = rng.normal(size=5)
            p = softmax_over_words(W, u)
            assert abs(p.sum() - 1.0) <= 1e-9
            assert np.all(p > 0)

    def test_zero_vectors_give_uniform(self):
        model = Doc2VecModel(
            word_vectors=np.zeros((4, 3)),
            doc_vectors=np.zeros((2, 3)),
            vocab_index={},
            config=Doc2VecConfig(vec_size=3),
        )
        prob = softmax_context_prob(model, word_id=0, context_ids=[1])
        assert prob == pytest.approx(1.0 / 4)

    def test_factor_matches_hand_computation(self):
        W = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.5]])
        model = Doc2VecModel(
            word_vectors=W,
            doc_vectors=np.zeros((1, 2)),
            vocab_index={},
            config=Doc2VecConfig(vec_size=2),
        )
        scores = W @ W[1]
        expected = np.exp(scores[0]) / np.exp(scores).sum()
        assert softmax_context_prob(model, 0, [1]) == pytest.approx(expected, abs=1e-10)

    def test_factors_normalize_over_words(self):
        rng = np.random.default_rng(12)
        model = Doc2VecModel(
            word_vectors=rng.normal(size=(6, 4)),
            doc_vectors=rng.normal(size=(3, 4)),
            vocab_index={},
            config=Doc2VecConfig(vec_size=4),
        )
        for ctx in [0, 5, 6, 8]:  # words and documents
            total = sum(softmax_context_prob(model, i, [ctx]) for i in range(6))
            assert total == pytest.approx(1.0, abs=1e-9)

    def test_product_over_context_set(self):
        rng = np.random.default_rng(13)
        model = Doc2VecModel(
            word_vectors=rng.normal(size=(5, 3)),
            doc_vectors=rng.normal(size=(2, 3)),
            vocab_index={},
            config=Doc2VecConfig(vec_size=3),
        )
        ctx = [1, 3, 5]
        single = [softmax_context_prob(model, 2, [c]) for c in ctx]
        assert softmax_context_prob(model, 2, ctx) == pytest.approx(
            np.prod(single), rel=1e-10
        )


class TestGradient:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(21)
        m, docs, n = 7, 3, 4
        for _ in range(15):
            W = rng.normal(scale=0.5, size=(m, n))
            D = rng.normal(scale=0.5, size=(docs, n))
            k = int(rng.integers(3, 10))
            pairs = np.stack(
                [rng.integers(0, m, size=k), rng.integers(0, m + docs, size=k)],
                axis=1,
            )
            _, gw, gd = context_nll_and_grad(W, D, pairs)

            num_w = finite_diff_grad(
                lambda Wv: context_nll_and_grad(Wv, D, pairs)[0], W.copy()
            )
            num_d = finite_diff_grad(
                lambda Dv: context_nll_and_grad(W, Dv, pairs)[0], D.copy()
            )
            assert max_rel_error(gw, num_w) < 1e-4
            assert max_rel_error(gd, num_d) < 1e-4

    def test_loss_is_exact_negative_log_product(self):
        rng = np.random.default_rng(22)
        W = rng.normal(size=(5, 3))
        D = rng.normal(size=(2, 3))
        model = Doc2VecModel(
            word_vectors=W, doc_vectors=D, vocab_index={}, config=Doc2VecConfig(vec_size=3)
        )
        pairs = np.array([[0, 1], [2, 5], [4, 6]])
        loss, _, _ = context_nll_and_grad(W, D, pairs)
        brute = -sum(
            np.log(softmax_context_prob(model, int(i), [int(c)])) for i, c in pairs
        )
        assert loss == pytest.approx(brute, abs=1e-10)


class TestTraining:
    def test_nll_decreases(self):
        model = train_doc2vec(TOY, Doc2VecConfig(vec_size=4, epochs=50, seed=1))
        hist = model.nll_history
        assert hist[-1] < hist[0]
        for prev, nxt in zip(hist, hist[1:]):
            assert nxt <= prev + 1e-3

    def test_reproducible_bit_for_bit(self):
        cfg = Doc2VecConfig(vec_size=4, epochs=5, seed=42)
        a = train_doc2vec(TOY, cfg)
        b = train_doc2vec(TOY, cfg)
        np.testing.assert_array_equal(a.word_vectors, b.word_vectors)
        np.testing.assert_array_equal(a.doc_vectors, b.doc_vectors)
        c = train_doc2vec(TOY, Doc2VecConfig(vec_size=4, epochs=5, seed=43))
        assert not np.array_equal(a.word_vectors, c.word_vectors)

    def test_init_range(self):
        model = train_doc2vec(TOY, Doc2VecConfig(vec_size=8, epochs=1, alpha=0.0025,
                                                 min_alpha=0.0025, seed=0))
        # after one tiny-rate epoch vectors stay near the +-0.5/n init box
        assert np.max(np.abs(model.word_vectors)) < 0.5 / 8 + 0.05

    def test_duplicated_documents_embed_nearby(self):
        docs = TOY + [list(TOY[0])]
        model = train_doc2vec(docs, Doc2VecConfig(vec_size=6, epochs=80, seed=3))

        def cos(a, b):
            return float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))

        twin = cos(model.doc_vectors[0], model.doc_vectors[3])
        other = cos(model.doc_vectors[0], model.doc_vectors[1])
        assert twin > other

    def test_extreme_rate_schedule_completes(self):
        model = train_doc2vec(
            TOY, Doc2VecConfig(vec_size=4, alpha=0.5, min_alpha=0.00025, epochs=30, seed=9)
        )
        assert np.all(np.isfinite(model.word_vectors))
        assert np.all(np.isfinite(model.doc_vectors))

    def test_empty_corpus(self):
        with pytest.raises(EmptyCorpusError):
            train_doc2vec([])

    def test_min_count_filters(self):
        docs = [["rare", "common", "common"], ["common"]]
        model = train_doc2vec(docs, Doc2VecConfig(vec_size=3, epochs=2, min_count=2))
        assert "rare" not in model.vocab_index
        assert "common" in model.vocab_index

    def test_invalid_config(self):
        with pytest.raises(ValueError):
            Doc2VecConfig(alpha=0.01, min_alpha=0.1)
        with pytest.raises(ValueError):
            Doc2VecConfig(vec_size=0)


@pytest.fixture(scope="module")
def model():
    return train_doc2vec(TOY, Doc2VecConfig(vec_size=6, epochs=60, seed=5))


class TestInfer:

    def test_deterministic(self, model):
        a = model.infer(["the", "boy", "takes"], seed=7)
        b = model.infer(["the", "boy", "takes"], seed=7)
        np.testing.assert_array_equal(a, b)

    def test_reinfer_training_document(self, model):
        def cos(a, b):
            return float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))

        vec = model.infer(TOY[0], seed=11)
        assert cos(vec, model.doc_vectors[0]) > cos(vec, model.doc_vectors[1])

    def test_all_oov(self, model):
        with pytest.raises(AllTokensOOVError):
            model.infer(["zebra", "quark"])

    def test_empty(self, model):
        with pytest.raises(EmptySequenceError):
            model.infer([])


def test_negative_sampling_engages_above_vocab_limit():
    rng = np.random.default_rng(30)
    words = [f"tok{i}" for i in range(2100)]
    docs = [
        [words[j] for j in rng.integers(0, 2100, size=30)] for _ in range(40)
    ] + [[w] for w in words]  # guarantee every token appears
    cfg = Doc2VecConfig(vec_size=8, epochs=1, negative=3, seed=2)
    model = train_doc2vec(docs, cfg)
    assert model.approximate
    assert np.all(np.isfinite(model.word_vectors))

    small = train_doc2vec(TOY, Doc2VecConfig(vec_size=4, epochs=1, negative=3))
    assert not small.approximate  # tiny vocab stays on the exact objective
