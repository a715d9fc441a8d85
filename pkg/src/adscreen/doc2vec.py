"""Document embeddings from word/document co-occurrence.

Each vocabulary word gets a vector, and each training document gets one.
A word's context set holds every vocabulary word seen within ``window``
positions of any of its occurrences, plus every document containing it
(set semantics: repeats collapse).  Training minimizes the summed negative
log softmax of the word given each of its contexts, where the softmax runs
over the vocabulary word vectors only; document vectors appear purely on
the context side.

The reference objective uses the full softmax.  Mini-batched SGD with a
linearly decaying learning rate keeps it tractable at small vocabulary
sizes; for larger vocabularies an optional negative-sampling mode trades
exactness for speed and is recorded on the model as an approximation.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    AllTokensOOVError,
    DivergenceDetectedError,
    EmptyCorpusError,
    EmptySequenceError,
)

FULL_SOFTMAX_VOCAB_LIMIT = 2000


@dataclass(frozen=True)
class Doc2VecConfig:
    vec_size: int = 50
    window: int = 5
    alpha: float = 0.25
    min_alpha: float = 0.0025
    epochs: int = 40
    min_count: int = 1
    batch_size: int = 256
    negative: int = 0          # 0 = exact full softmax
    seed: int = 0

    def __post_init__(self):
        if self.vec_size < 1 or self.window < 1 or self.epochs < 1:
            raise ValueError("vec_size, window and epochs must be positive")
        if not (0 < self.min_alpha <= self.alpha):
            raise ValueError("need 0 < min_alpha <= alpha")


def build_vocab(docs_tokens: Sequence[Sequence[str]], min_count: int = 1) -> dict[str, int]:
    counts = Counter(tok for doc in docs_tokens for tok in doc)
    kept = sorted(tok for tok, cnt in counts.items() if cnt >= min_count)
    if not kept:
        raise EmptyCorpusError("no tokens survive the frequency cutoff")
    return {tok: i for i, tok in enumerate(kept)}


def build_context_pairs(
    docs_tokens: Sequence[Sequence[str]],
    vocab_index: dict[str, int],
    window: int,
) -> np.ndarray:
    """All (word id, context id) pairs, deduplicated and sorted.

    Context ids 0..M-1 are vocabulary words; id M+d is training document d.
    """
    m = len(vocab_index)
    pairs: set[tuple[int, int]] = set()
    for d, tokens in enumerate(docs_tokens):
        ids = [vocab_index.get(t, -1) for t in tokens]
        for pos, i in enumerate(ids):
            if i < 0:
                continue
            pairs.add((i, m + d))
            lo = max(0, pos - window)
            hi = min(len(ids), pos + window + 1)
            for q in range(lo, hi):
                j = ids[q]
                if q != pos and j >= 0:
                    pairs.add((i, j))
    if not pairs:
        raise EmptyCorpusError("corpus yields no context pairs")
    return np.array(sorted(pairs), dtype=np.int64)


def softmax_over_words(word_vecs: np.ndarray, ctx_vec: np.ndarray) -> np.ndarray:
    """Conditional distribution over vocabulary words given one context vector."""
    scores = word_vecs @ ctx_vec
    scores -= scores.max()
    e = np.exp(scores)
    return e / e.sum()


def softmax_context_prob(model: "Doc2VecModel", word_id: int, context_ids: Sequence[int]) -> float:
    """Product over the word's context set of its softmax factors.

    Context ids follow the pair convention: ids below the vocabulary size
    are words, the rest are training documents.  Computed in log space and
    exponentiated, so moderate context sets stay well above underflow.
    """
    m = model.word_vectors.shape[0]
    log_prob = 0.0
    for ctx in context_ids:
        u = model.word_vectors[ctx] if ctx < m else model.doc_vectors[ctx - m]
        scores = model.word_vectors @ u
        shift = scores.max()
        log_prob += float(scores[word_id] - shift - np.log(np.exp(scores - shift).sum()))
    return float(np.exp(log_prob))


def context_nll_and_grad(
    word_vecs: np.ndarray,
    doc_vecs: np.ndarray,
    pairs: np.ndarray,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Summed negative log likelihood of the given pairs, with gradients.

    Word vectors receive gradient through both their target role (softmax
    numerator/denominator) and their context role; document vectors only
    through the context role.
    """
    m = word_vecs.shape[0]
    targets = pairs[:, 0]
    ctx = pairs[:, 1]
    is_word_ctx = ctx < m
    u = np.where(is_word_ctx[:, None], word_vecs[np.clip(ctx, 0, m - 1)],
                 doc_vecs[np.clip(ctx - m, 0, max(doc_vecs.shape[0] - 1, 0))])

    scores = word_vecs @ u.T                      # (M, B)
    scores -= scores.max(axis=0, keepdims=True)
    exp_s = np.exp(scores)
    z = exp_s.sum(axis=0)
    p = exp_s / z                                  # softmax per column
    b = len(pairs)
    loss = float(np.sum(np.log(z) - scores[targets, np.arange(b)]))

    resid = p.copy()
    resid[targets, np.arange(b)] -= 1.0            # (M, B)
    grad_w = resid @ u                             # target-role gradient
    grad_u = resid.T @ word_vecs                   # (B, n), context-role gradient

    grad_d = np.zeros_like(doc_vecs)
    w_idx = ctx[is_word_ctx]
    d_idx = ctx[~is_word_ctx] - m
    np.add.at(grad_w, w_idx, grad_u[is_word_ctx])
    np.add.at(grad_d, d_idx, grad_u[~is_word_ctx])
    return loss, grad_w, grad_d


def _negative_sampling_grad(
    word_vecs: np.ndarray,
    doc_vecs: np.ndarray,
    pairs: np.ndarray,
    negative: int,
    noise_probs: np.ndarray,
    rng: np.random.Generator,
) -> tuple[float, np.ndarray, np.ndarray]:
    # Binary logistic surrogate: pull the observed word toward its context,
    # push `negative` noise words away.  Not the exact objective.
    m = word_vecs.shape[0]
    targets = pairs[:, 0]
    ctx = pairs[:, 1]
    is_word_ctx = ctx < m
    u = np.where(is_word_ctx[:, None], word_vecs[np.clip(ctx, 0, m - 1)],
                 doc_vecs[np.clip(ctx - m, 0, max(doc_vecs.shape[0] - 1, 0))])
    b = len(pairs)
    neg = rng.choice(m, size=(b, negative), p=noise_probs)

    grad_w = np.zeros_like(word_vecs)
    grad_u = np.zeros_like(u)
    pos_s = np.einsum("bn,bn->b", word_vecs[targets], u)
    pos_sig = 1.0 / (1.0 + np.exp(-pos_s))
    loss = float(-np.sum(np.log(np.clip(pos_sig, 1e-12, None))))
    coef = pos_sig - 1.0
    np.add.at(grad_w, targets, coef[:, None] * u)
    grad_u += coef[:, None] * word_vecs[targets]

    neg_vecs = word_vecs[neg]                       # (B, K, n)
    neg_s = np.einsum("bkn,bn->bk", neg_vecs, u)
    neg_sig = 1.0 / (1.0 + np.exp(-neg_s))
    loss += float(-np.sum(np.log(np.clip(1.0 - neg_sig, 1e-12, None))))
    np.add.at(grad_w, neg.ravel(),
              (neg_sig[:, :, None] * u[:, None, :]).reshape(-1, u.shape[1]))
    grad_u += np.einsum("bk,bkn->bn", neg_sig, neg_vecs)

    grad_d = np.zeros_like(doc_vecs)
    np.add.at(grad_w, ctx[is_word_ctx], grad_u[is_word_ctx])
    np.add.at(grad_d, ctx[~is_word_ctx] - m, grad_u[~is_word_ctx])
    return loss, grad_w, grad_d


@dataclass
class Doc2VecModel:
    word_vectors: np.ndarray
    doc_vectors: np.ndarray
    vocab_index: dict[str, int]
    config: Doc2VecConfig
    nll_history: list[float] = field(default_factory=list)
    approximate: bool = False

    @property
    def vec_size(self) -> int:
        return int(self.word_vectors.shape[1])

    def document_vector(self, d: int) -> np.ndarray:
        return self.doc_vectors[d]

    def infer(self, tokens: Sequence[str], epochs: Optional[int] = None, seed: int = 1) -> np.ndarray:
        """Fit a fresh document vector against frozen word vectors."""
        if len(tokens) == 0:
            raise EmptySequenceError("cannot embed an empty token sequence")
        present = sorted({self.vocab_index[t] for t in tokens if t in self.vocab_index})
        if not present:
            raise AllTokensOOVError("no token is in the training vocabulary")
        cfg = self.config
        n_epochs = epochs if epochs is not None else cfg.epochs
        rng = np.random.default_rng(seed)
        n = self.vec_size
        vec = rng.uniform(-0.5 / n, 0.5 / n, size=n)
        targets = np.array(present, dtype=np.int64)
        total = max(n_epochs - 1, 1)
        for ep in range(n_epochs):
            lr = cfg.alpha + (cfg.min_alpha - cfg.alpha) * (ep / total)
            scores = self.word_vectors @ vec
            scores -= scores.max()
            p = np.exp(scores)
            p /= p.sum()
            # all targets share this context vector, so the softmax mean
            # enters once per target
            resid = len(targets) * p
            resid[targets] -= 1.0
            grad = resid @ self.word_vectors
            vec -= lr * grad
        return vec


def train_doc2vec(
    docs_tokens: Sequence[Sequence[str]],
    config: Doc2VecConfig = Doc2VecConfig(),
) -> Doc2VecModel:
    """Train word and document vectors by mini-batched SGD.

    The learning rate decays linearly from ``alpha`` to ``min_alpha`` over
    all updates; each batch applies the summed gradient of its pairs, which
    is per-pair SGD with parameters held fixed inside the batch.  The
    recorded history is the mean per-pair negative log likelihood of each
    epoch, measured as the epoch runs.
    """
    docs = [list(d) for d in docs_tokens]
    if not docs:
        raise EmptyCorpusError("no documents to train on")
    vocab_index = build_vocab(docs, config.min_count)
    m = len(vocab_index)
    use_negative = config.negative > 0 and m > FULL_SOFTMAX_VOCAB_LIMIT
    pairs = build_context_pairs(docs, vocab_index, config.window)

    rng = np.random.default_rng(config.seed)
    n = config.vec_size
    word_vecs = rng.uniform(-0.5 / n, 0.5 / n, size=(m, n))
    doc_vecs = rng.uniform(-0.5 / n, 0.5 / n, size=(len(docs), n))

    if use_negative:
        counts = Counter(tok for doc in docs for tok in doc if tok in vocab_index)
        freq = np.zeros(m)
        for tok, cnt in counts.items():
            freq[vocab_index[tok]] = cnt
        noise = freq ** 0.75
        noise /= noise.sum()

    n_pairs = len(pairs)
    batches_per_epoch = max(1, int(np.ceil(n_pairs / config.batch_size)))
    total_updates = max(config.epochs * batches_per_epoch - 1, 1)
    history = []
    step = 0
    for _epoch in range(config.epochs):
        order = rng.permutation(n_pairs)
        epoch_loss = 0.0
        for start in range(0, n_pairs, config.batch_size):
            batch = pairs[order[start : start + config.batch_size]]
            lr = config.alpha + (config.min_alpha - config.alpha) * (step / total_updates)
            if use_negative:
                loss, gw, gd = _negative_sampling_grad(
                    word_vecs, doc_vecs, batch, config.negative, noise, rng
                )
            else:
                loss, gw, gd = context_nll_and_grad(word_vecs, doc_vecs, batch)
            if not np.isfinite(loss):
                raise DivergenceDetectedError(
                    f"objective became non-finite at epoch {_epoch}"
                )
            # summed batch gradient = per-pair SGD steps applied with
            # within-batch-stale parameters, at the same learning rate
            word_vecs -= lr * gw
            doc_vecs -= lr * gd
            epoch_loss += loss
            step += 1
        history.append(epoch_loss / n_pairs)

    return Doc2VecModel(
        word_vectors=word_vecs,
        doc_vectors=doc_vecs,
        vocab_index=vocab_index,
        config=config,
        nll_history=history,
        approximate=use_negative,
    )
