"""Contextual token representations from a small bidirectional LSTM LM.

Two stacks of LSTM layers read each document left-to-right and
right-to-left; the forward stack is trained to predict the next token and
the backward stack the previous one, sharing the embedding table and the
output projection.  A document position then carries L+1 representation
layers, each the width of two hidden states: layer 0 duplicates the token
embedding, layer j >= 1 concatenates the two directions' hidden states.

A mixing head collapses the layers with softmax weights and a global
scale.  Document vectors are token means, and because averaging commutes
with the (linear) mix, per-document per-layer means can be cached once and
mixed cheaply while the head is being fitted.

Backpropagation is written out by hand so every gradient can be checked
against finite differences.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .classify import LogisticModel, logreg_train
from .errors import (
    DimensionMismatchError,
    DivergenceDetectedError,
    EmptyCorpusError,
    EmptySequenceError,
)


# -- LSTM cell ---------------------------------------------------------------

def lstm_cell_forward(
    w: np.ndarray,
    u: np.ndarray,
    b: np.ndarray,
    x: np.ndarray,
    h_prev: np.ndarray,
    c_prev: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, tuple]:
    """One step of a standard LSTM cell, batched over the leading axis.

    Gate layout in the fused matrices is input, forget, candidate, output.
    Returns the new hidden and cell states plus a cache for the backward
    pass.
    """
    hidden = h_prev.shape[-1]
    z = x @ w + h_prev @ u + b
    zi, zf, zg, zo = (z[..., k * hidden : (k + 1) * hidden] for k in range(4))
    i = 1.0 / (1.0 + np.exp(-zi))
    f = 1.0 / (1.0 + np.exp(-zf))
    g = np.tanh(zg)
    o = 1.0 / (1.0 + np.exp(-zo))
    c = f * c_prev + i * g
    h = o * np.tanh(c)
    return h, c, (x, h_prev, c_prev, i, f, g, o, c)


def lstm_cell_backward(
    w: np.ndarray,
    u: np.ndarray,
    cache: tuple,
    dh: np.ndarray,
    dc_in: np.ndarray,
) -> tuple:
    """Gradients of one cell step.

    Returns (dx, dh_prev, dc_prev, dw, du, db) given the loss gradients
    with respect to the step's outputs.
    """
    x, h_prev, c_prev, i, f, g, o, c = cache
    tc = np.tanh(c)
    do = dh * tc
    dc = dc_in + dh * o * (1.0 - tc * tc)
    di = dc * g
    df = dc * c_prev
    dg = dc * i
    dc_prev = dc * f
    dz = np.concatenate(
        [
            di * i * (1.0 - i),
            df * f * (1.0 - f),
            dg * (1.0 - g * g),
            do * o * (1.0 - o),
        ],
        axis=-1,
    )
    dx = dz @ w.T
    dh_prev = dz @ u.T
    dw = x.T @ dz
    du = h_prev.T @ dz
    db = dz.sum(axis=0)
    return dx, dh_prev, dc_prev, dw, du, db


# -- model -------------------------------------------------------------------

@dataclass(frozen=True)
class BiLMConfig:
    embed_size: int = 16
    hidden_size: int = 16
    layers: int = 2
    epochs: int = 60
    batch_size: int = 32
    learning_rate: float = 1e-2
    min_count: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.embed_size != self.hidden_size:
            raise DimensionMismatchError(
                "embed_size must equal hidden_size so the duplicated embedding "
                "layer is the same width as the concatenated hidden states"
            )
        if self.layers < 1:
            raise ValueError("need at least one LSTM layer per direction")


def _init_params(cfg: BiLMConfig, vocab_size: int, rng: np.random.Generator) -> dict:
    # vocab_size already includes the trailing UNK slot
    n, h = cfg.embed_size, cfg.hidden_size
    params = {"embed": rng.normal(0.0, 0.1, size=(vocab_size, n))}
    for direction in ("f", "b"):
        for layer in range(cfg.layers):
            in_dim = n if layer == 0 else h
            scale_w = 1.0 / np.sqrt(in_dim)
            scale_u = 1.0 / np.sqrt(h)
            params[f"{direction}{layer}_w"] = rng.uniform(-scale_w, scale_w, (in_dim, 4 * h))
            params[f"{direction}{layer}_u"] = rng.uniform(-scale_u, scale_u, (h, 4 * h))
            bias = np.zeros(4 * h)
            bias[h : 2 * h] = 1.0      # forget gate open at init
            params[f"{direction}{layer}_b"] = bias
    params["out_w"] = rng.normal(0.0, 0.1, size=(h, vocab_size))
    params["out_b"] = np.zeros(vocab_size)
    return params


def _run_stack(
    params: dict,
    direction: str,
    x: np.ndarray,
    n_layers: int,
    hidden: int,
    collect_caches: bool = True,
) -> tuple[list[np.ndarray], list[tuple]]:
    """Run one direction's LSTM stack over (B, T, n) inputs.

    The input projection of every step is one matmul per layer; only the
    recurrent term stays inside the time loop.  Gate activations and cell
    states are kept as stacked (B, T, h) arrays so the backward pass can
    batch its weight gradients.  Step for step this computes the same
    quantities as :func:`lstm_cell_forward`.  Inference passes skip the
    caches entirely.
    """
    batch, steps = x.shape[0], x.shape[1]
    layer_in = x
    states, caches = [], []
    for layer in range(n_layers):
        w = params[f"{direction}{layer}_w"]
        u = params[f"{direction}{layer}_u"]
        b = params[f"{direction}{layer}_b"]
        zx = (layer_in.reshape(-1, layer_in.shape[-1]) @ w + b).reshape(batch, steps, -1)
        h_t = np.zeros((batch, hidden))
        c_t = np.zeros((batch, hidden))
        hs = np.zeros((batch, steps, hidden))
        if collect_caches:
            cs = np.zeros((batch, steps, hidden))
            gi = np.zeros((batch, steps, hidden))
            gf = np.zeros((batch, steps, hidden))
            gg = np.zeros((batch, steps, hidden))
            go = np.zeros((batch, steps, hidden))
        for t in range(steps):
            z = zx[:, t] + h_t @ u
            i = 1.0 / (1.0 + np.exp(-z[:, :hidden]))
            f = 1.0 / (1.0 + np.exp(-z[:, hidden : 2 * hidden]))
            g = np.tanh(z[:, 2 * hidden : 3 * hidden])
            o = 1.0 / (1.0 + np.exp(-z[:, 3 * hidden :]))
            c_t = f * c_t + i * g
            h_t = o * np.tanh(c_t)
            if collect_caches:
                gi[:, t], gf[:, t], gg[:, t], go[:, t] = i, f, g, o
                cs[:, t] = c_t
            hs[:, t] = h_t
        states.append(hs)
        if collect_caches:
            caches.append((layer_in, hs, cs, gi, gf, gg, go))
        layer_in = hs
    return states, caches


def _backprop_stack(
    params: dict,
    direction: str,
    caches: list[tuple],
    d_states: list[np.ndarray],
    grads: dict,
    hidden: int,
) -> np.ndarray:
    """BPTT through one stack; d_states[j] is the loss gradient flowing into
    layer j's hidden states from outside the stack.  Returns the gradient on
    the stack's (B, T, n) input.

    Only the recurrent part of the chain runs step by step; gate-local
    gradients are turned into weight gradients with three batched matmuls
    per layer.  Mirrors :func:`lstm_cell_backward` exactly.
    """
    dx_below = None
    for layer in reversed(range(len(caches))):
        w = params[f"{direction}{layer}_w"]
        u = params[f"{direction}{layer}_u"]
        layer_in, hs, cs, gi, gf, gg, go = caches[layer]
        batch, steps = hs.shape[0], hs.shape[1]
        d_hs = d_states[layer].copy()
        if dx_below is not None:
            d_hs += dx_below
        tc = np.tanh(cs)
        dz = np.zeros((batch, steps, 4 * hidden))
        dh_next = np.zeros((batch, hidden))
        dc_next = np.zeros((batch, hidden))
        for t in reversed(range(steps)):
            i, f, g, o = gi[:, t], gf[:, t], gg[:, t], go[:, t]
            dh = d_hs[:, t] + dh_next
            do = dh * tc[:, t]
            dc = dc_next + dh * o * (1.0 - tc[:, t] * tc[:, t])
            c_prev = cs[:, t - 1] if t > 0 else np.zeros((batch, hidden))
            dz_t = dz[:, t]
            dz_t[:, :hidden] = dc * g * i * (1.0 - i)
            dz_t[:, hidden : 2 * hidden] = dc * c_prev * f * (1.0 - f)
            dz_t[:, 2 * hidden : 3 * hidden] = dc * i * (1.0 - g * g)
            dz_t[:, 3 * hidden :] = do * o * (1.0 - o)
            dc_next = dc * f
            dh_next = dz_t @ u.T
        flat_dz = dz.reshape(-1, 4 * hidden)
        h_prev = np.concatenate([np.zeros((batch, 1, hidden)), hs[:, :-1]], axis=1)
        grads[f"{direction}{layer}_w"] += layer_in.reshape(-1, layer_in.shape[-1]).T @ flat_dz
        grads[f"{direction}{layer}_u"] += h_prev.reshape(-1, hidden).T @ flat_dz
        grads[f"{direction}{layer}_b"] += flat_dz.sum(axis=0)
        dx_below = (flat_dz @ w.T).reshape(batch, steps, -1)
    return dx_below


def _reverse_valid(ids: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    out = ids.copy()
    for row, length in enumerate(lengths):
        out[row, :length] = ids[row, :length][::-1]
    return out


def _lm_direction_loss(
    params: dict,
    direction: str,
    ids: np.ndarray,
    lengths: np.ndarray,
    cfg: BiLMConfig,
    grads: Optional[dict],
) -> float:
    """Next-token cross entropy for one direction (inputs already oriented).

    Padding sits on the right, so padded steps never feed a predicted
    position and receive zero gradient.
    """
    hidden = cfg.hidden_size
    x = params["embed"][ids]
    states, caches = _run_stack(params, direction, x, cfg.layers, hidden)
    top = states[-1]
    steps = ids.shape[1]

    # position t predicts t+1; padding never feeds a predicted position
    mask = np.arange(steps)[None, :] < (lengths[:, None] - 1)
    n_pred = int(mask.sum())
    if n_pred == 0:
        return 0.0

    top_v = top[mask]                              # (P, hidden)
    logits = top_v @ params["out_w"] + params["out_b"]
    logits -= logits.max(axis=-1, keepdims=True)
    exp_l = np.exp(logits)
    z = exp_l.sum(axis=-1)
    targets = np.roll(ids, -1, axis=1)[mask]
    rows = np.arange(n_pred)
    ce = float(np.sum(np.log(z) - logits[rows, targets]) / n_pred)

    if grads is None:
        return ce

    dlogits = exp_l / z[:, None]
    dlogits[rows, targets] -= 1.0
    dlogits /= n_pred

    grads["out_w"] += top_v.T @ dlogits
    grads["out_b"] += dlogits.sum(axis=0)

    d_states = [np.zeros_like(s) for s in states]
    d_states[-1][mask] = dlogits @ params["out_w"].T
    dx = _backprop_stack(params, direction, caches, d_states, grads, hidden)
    np.add.at(grads["embed"], ids.ravel(), dx.reshape(-1, dx.shape[-1]))
    return ce


@dataclass
class BiLM:
    params: dict
    vocab_index: dict[str, int]
    config: BiLMConfig
    ce_history: list[float] = field(default_factory=list)

    @property
    def n_layers(self) -> int:
        return self.config.layers

    @property
    def rep_width(self) -> int:
        return 2 * self.config.hidden_size

    @property
    def unk_id(self) -> int:
        return len(self.vocab_index)

    def _ids(self, tokens: Sequence[str]) -> np.ndarray:
        if len(tokens) == 0:
            raise EmptySequenceError("cannot represent an empty token sequence")
        ids = [self.vocab_index.get(t, self.unk_id) for t in tokens]
        return np.array(ids, dtype=np.int64)

    def token_layers(self, tokens: Sequence[str]) -> list[np.ndarray]:
        """Per-layer token representations, each (T, 2*hidden).

        Layer 0 is the duplicated embedding; layer j concatenates the
        forward and backward hidden states of LSTM layer j.
        """
        ids = self._ids(tokens)
        steps = len(ids)
        x = self.params["embed"][ids][None]                       # (1, T, n)
        fwd, _ = _run_stack(
            self.params, "f", x, self.n_layers, self.config.hidden_size, collect_caches=False
        )
        x_rev = np.ascontiguousarray(x[:, ::-1])
        bwd_rev, _ = _run_stack(
            self.params, "b", x_rev, self.n_layers, self.config.hidden_size, collect_caches=False
        )

        layers = [np.concatenate([x[0], x[0]], axis=-1)]
        for j in range(self.n_layers):
            back = bwd_rev[j][0][::-1]                            # align to forward order
            layers.append(np.concatenate([fwd[j][0], back], axis=-1))
        assert all(layer.shape == (steps, self.rep_width) for layer in layers)
        return layers

    def doc_layer_means(self, tokens: Sequence[str], normalize: bool = False) -> np.ndarray:
        """Token-mean of each layer, stacked to (L+1, 2*hidden)."""
        layers = self.token_layers(tokens)
        if normalize:
            layers = normalize_token_vectors(layers)
        return np.stack([layer.mean(axis=0) for layer in layers])

    def doc_layer_means_many(
        self,
        docs_tokens: Sequence[Sequence[str]],
        normalize: bool = False,
        chunk: int = 256,
    ) -> np.ndarray:
        """Per-layer token means for many documents, (N, L+1, 2*hidden).

        Equal to stacking :meth:`doc_layer_means` over the documents, but
        the stacks run once per chunk of right-padded documents instead of
        once per document.  Padded steps beyond a document's length never
        reach its means, and each direction only ever sees that document's
        own prefix, so the batching cannot leak tokens across documents.
        """
        docs = list(docs_tokens)
        h = self.config.hidden_size
        out = np.zeros((len(docs), self.n_layers + 1, self.rep_width))
        for start in range(0, len(docs), chunk):
            block = docs[start : start + chunk]
            seqs = [self._ids(toks) for toks in block]
            lengths = np.array([len(s) for s in seqs], dtype=np.int64)
            ids = np.zeros((len(block), int(lengths.max())), dtype=np.int64)
            for row, seq in enumerate(seqs):
                ids[row, : len(seq)] = seq
            x = self.params["embed"][ids]
            fwd, _ = _run_stack(self.params, "f", x, self.n_layers, h, collect_caches=False)
            x_rev = self.params["embed"][_reverse_valid(ids, lengths)]
            bwd, _ = _run_stack(self.params, "b", x_rev, self.n_layers, h, collect_caches=False)
            for row, length in enumerate(lengths):
                emb = x[row, :length]
                layers = [np.concatenate([emb, emb], axis=-1)]
                for j in range(self.n_layers):
                    back = bwd[j][row, :length][::-1]
                    layers.append(np.concatenate([fwd[j][row, :length], back], axis=-1))
                if normalize:
                    layers = normalize_token_vectors(layers)
                out[start + row] = np.stack([layer.mean(axis=0) for layer in layers])
        return out


def normalize_token_vectors(layers: list[np.ndarray]) -> list[np.ndarray]:
    """Standardize every token vector to zero mean, unit variance across its
    components.  Near-constant vectors are left centered but unscaled."""
    out = []
    for layer in layers:
        mu = layer.mean(axis=-1, keepdims=True)
        sd = layer.std(axis=-1, keepdims=True)
        sd = np.where(sd < 1e-12, 1.0, sd)
        out.append((layer - mu) / sd)
    return out


def train_bilm(
    docs_tokens: Sequence[Sequence[str]],
    config: BiLMConfig = BiLMConfig(),
) -> BiLM:
    """Fit both direction stacks with Adam on the mean of the two
    next/previous-token cross entropies.  Deterministic for a fixed seed."""
    docs = [list(d) for d in docs_tokens if len(d) > 0]
    if not docs:
        raise EmptyCorpusError("no non-empty documents to train on")
    counts = Counter(tok for doc in docs for tok in doc)
    kept = sorted(tok for tok, cnt in counts.items() if cnt >= config.min_count)
    if not kept:
        raise EmptyCorpusError("no tokens survive the frequency cutoff")
    vocab_index = {tok: i for i, tok in enumerate(kept)}
    unk_id = len(kept)

    rng = np.random.default_rng(config.seed)
    params = _init_params(config, len(kept) + 1, rng)

    seqs = [
        np.array([vocab_index.get(t, unk_id) for t in doc], dtype=np.int64)
        for doc in docs
    ]

    adam_m = {k: np.zeros_like(v) for k, v in params.items()}
    adam_v = {k: np.zeros_like(v) for k, v in params.items()}
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    step = 0
    history = []

    for _epoch in range(config.epochs):
        order = rng.permutation(len(seqs))
        epoch_ce = []
        for start in range(0, len(seqs), config.batch_size):
            batch = [seqs[i] for i in order[start : start + config.batch_size]]
            lengths = np.array([len(s) for s in batch], dtype=np.int64)
            width = int(lengths.max())
            ids = np.zeros((len(batch), width), dtype=np.int64)
            for row, seq in enumerate(batch):
                ids[row, : len(seq)] = seq

            grads = {k: np.zeros_like(v) for k, v in params.items()}
            ce_f = _lm_direction_loss(params, "f", ids, lengths, config, grads)
            ids_rev = _reverse_valid(ids, lengths)
            ce_b = _lm_direction_loss(params, "b", ids_rev, lengths, config, grads)
            ce = 0.5 * (ce_f + ce_b)
            if not np.isfinite(ce):
                raise DivergenceDetectedError("language model loss became non-finite")
            for key in grads:
                grads[key] *= 0.5

            step += 1
            for key, grad in grads.items():
                adam_m[key] = beta1 * adam_m[key] + (1 - beta1) * grad
                adam_v[key] = beta2 * adam_v[key] + (1 - beta2) * grad * grad
                m_hat = adam_m[key] / (1 - beta1 ** step)
                v_hat = adam_v[key] / (1 - beta2 ** step)
                params[key] -= config.learning_rate * m_hat / (np.sqrt(v_hat) + eps)
            epoch_ce.append(ce)
        history.append(float(np.mean(epoch_ce)))

    return BiLM(params=params, vocab_index=vocab_index, config=config, ce_history=history)


# -- layer mixing ------------------------------------------------------------

@dataclass
class MixingHead:
    w: np.ndarray          # unnormalized layer scores, length L+1
    gamma: float = 1.0

    def weights(self) -> np.ndarray:
        return mixing_weights(self.w)


def mixing_weights(w: np.ndarray) -> np.ndarray:
    s = np.asarray(w, dtype=np.float64)
    s = s - s.max()
    e = np.exp(s)
    return e / e.sum()


def mix_layers(layer_means: np.ndarray, head: MixingHead) -> np.ndarray:
    """Collapse (L+1, D) per-layer vectors into one D-vector."""
    if len(head.w) != layer_means.shape[0]:
        raise DimensionMismatchError(
            f"head has {len(head.w)} weights for {layer_means.shape[0]} layers"
        )
    s = head.weights()
    return head.gamma * (s @ layer_means)


def mixing_loss_and_grad(
    w: np.ndarray,
    gamma: float,
    beta: np.ndarray,
    bias: float,
    layer_means: np.ndarray,
    y: np.ndarray,
    c: float,
) -> tuple[float, np.ndarray, float, np.ndarray, float]:
    """Joint objective: logistic loss of the mixed features, with the
    classifier's L2 term.  Gradients flow through the softmax mix into the
    layer scores and the scale."""
    s = mixing_weights(w)
    base = np.einsum("j,njd->nd", s, layer_means)          # (N, D)
    feats = gamma * base
    n = len(y)

    margin = feats @ beta + bias
    # stable log(1 + exp(-t*margin)) with t = +-1
    t = 2.0 * y - 1.0
    loss_vec = np.logaddexp(0.0, -t * margin)
    loss = float(loss_vec.mean() + 0.5 / c * beta @ beta)

    p = 1.0 / (1.0 + np.exp(-np.clip(margin, -500, 500)))
    resid = (p - y) / n
    d_beta = feats.T @ resid + beta / c
    d_bias = float(resid.sum())
    d_feats = np.outer(resid, beta)                        # (N, D)
    d_gamma = float(np.sum(d_feats * base))
    d_s = gamma * np.einsum("nd,njd->j", d_feats, layer_means)
    d_w = s * (d_s - float(s @ d_s))
    return loss, d_w, d_gamma, d_beta, d_bias


def fit_mixing_head(
    layer_means: np.ndarray,
    y: Sequence[int],
    c: float = 1.0,
    freeze_mixing: bool = False,
    max_iter: int = 2000,
    tol: float = 1e-7,
    schema_fingerprint: Optional[str] = None,
) -> tuple[MixingHead, LogisticModel, dict]:
    """Fit the layer mix jointly with a logistic classifier.

    Stage one solves the convex problem with the mix frozen at uniform
    weights and unit scale.  Unless ``freeze_mixing`` is set, stage two
    descends the joint objective from that point with backtracking line
    search, so the fitted head's training loss can only match or improve
    on the frozen one.
    """
    P = np.asarray(layer_means, dtype=np.float64)
    if P.ndim != 3:
        raise DimensionMismatchError("expected (n_docs, n_layers+1, width) layer means")
    yv = np.asarray(y, dtype=np.float64)
    n_layers_p1 = P.shape[1]

    w = np.zeros(n_layers_p1)
    gamma = 1.0
    uniform_feats = P.mean(axis=1)
    frozen = logreg_train(uniform_feats, yv, c=c, schema_fingerprint=schema_fingerprint)
    beta = frozen.weights.copy()
    bias = frozen.bias

    frozen_loss, *_ = mixing_loss_and_grad(w, gamma, beta, bias, P, yv, c)
    info = {"frozen_loss": frozen_loss, "fitted_loss": frozen_loss, "iterations": 0}

    if not freeze_mixing:
        loss, d_w, d_g, d_b, d_bias = mixing_loss_and_grad(w, gamma, beta, bias, P, yv, c)
        step_size = 1.0
        for it in range(max_iter):
            g_norm_sq = d_w @ d_w + d_g * d_g + d_b @ d_b + d_bias * d_bias
            if np.sqrt(g_norm_sq) < tol:
                break
            while step_size >= 1e-18:
                w_n = w - step_size * d_w
                g_n = gamma - step_size * d_g
                b_n = beta - step_size * d_b
                bias_n = bias - step_size * d_bias
                trial, t_dw, t_dg, t_db, t_dbias = mixing_loss_and_grad(
                    w_n, g_n, b_n, bias_n, P, yv, c
                )
                if trial <= loss - 1e-4 * step_size * g_norm_sq:
                    w, gamma, beta, bias = w_n, g_n, b_n, bias_n
                    loss, d_w, d_g, d_b, d_bias = trial, t_dw, t_dg, t_db, t_dbias
                    step_size = min(step_size * 2.0, 1e6)
                    break
                step_size *= 0.5
            else:
                break
            info["iterations"] = it + 1
        info["fitted_loss"] = loss

    head = MixingHead(w=w, gamma=float(gamma))
    model = LogisticModel(
        weights=beta, bias=float(bias), c=c, schema_fingerprint=schema_fingerprint
    )
    return head, model, info


def layer_representations(bilm: BiLM, tokens: Sequence[str]) -> list[np.ndarray]:
    """Per-layer token representations; see :meth:`BiLM.token_layers`."""
    return bilm.token_layers(tokens)


def embed_document(
    bilm: BiLM,
    tokens: Sequence[str],
    head: MixingHead,
    normalize: bool = False,
) -> np.ndarray:
    """Mixed, token-averaged document vector."""
    return mix_layers(bilm.doc_layer_means(tokens, normalize=normalize), head)
