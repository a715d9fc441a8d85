"""Versioned JSON serialization for trained models.

Every serialized component carries the hash of the vocabulary it was
fitted against; loaders recompute and compare, so a container whose
pieces drifted apart (or whose bytes were corrupted) is refused instead
of silently scoring garbage.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .bilm import BiLM, BiLMConfig, MixingHead, mix_layers
from .chat import Transcript, clean_text
from .classify import LogisticModel, logreg_predict_proba
from .doc2vec import Doc2VecConfig, Doc2VecModel
from .errors import SchemaMismatchError
from .features import (
    FeatureSchema,
    Standardizer,
    Vocabulary,
    assemble,
    bow_transform,
    demographic_features,
    linguistic_features,
)

CONTAINER_FORMAT_VERSION = 1


def _hash_index(index: dict[str, int]) -> str:
    h = hashlib.sha256()
    for tok, i in sorted(index.items()):
        h.update(f"{tok}:{i}\n".encode("utf-8"))
    return h.hexdigest()[:16]


def _canonical(d: dict) -> str:
    return json.dumps(d, sort_keys=True, separators=(",", ":"))


def content_version(d: dict) -> str:
    return hashlib.sha256(_canonical(d).encode("utf-8")).hexdigest()[:16]


# -- doc2vec -----------------------------------------------------------------

def doc2vec_to_dict(model: Doc2VecModel) -> dict:
    return {
        "format_version": CONTAINER_FORMAT_VERSION,
        "kind": "doc2vec",
        "config": {
            "vec_size": model.config.vec_size,
            "window": model.config.window,
            "alpha": model.config.alpha,
            "min_alpha": model.config.min_alpha,
            "epochs": model.config.epochs,
            "min_count": model.config.min_count,
            "batch_size": model.config.batch_size,
            "negative": model.config.negative,
            "seed": model.config.seed,
        },
        "vocab": dict(model.vocab_index),
        "vocab_hash": _hash_index(model.vocab_index),
        "word_vectors": model.word_vectors.tolist(),
        "doc_vectors": model.doc_vectors.tolist(),
        "approximate": model.approximate,
    }


def doc2vec_from_dict(d: dict) -> Doc2VecModel:
    if d.get("format_version") != CONTAINER_FORMAT_VERSION:
        raise SchemaMismatchError(
            f"unsupported doc2vec format version {d.get('format_version')!r}"
        )
    vocab = {str(k): int(v) for k, v in d["vocab"].items()}
    if _hash_index(vocab) != d.get("vocab_hash"):
        raise SchemaMismatchError("doc2vec vocabulary hash mismatch")
    word_vectors = np.asarray(d["word_vectors"], dtype=np.float64)
    if word_vectors.shape[0] != len(vocab):
        raise SchemaMismatchError(
            f"doc2vec has {word_vectors.shape[0]} word vectors for "
            f"{len(vocab)} vocabulary entries"
        )
    return Doc2VecModel(
        word_vectors=word_vectors,
        doc_vectors=np.asarray(d["doc_vectors"], dtype=np.float64),
        vocab_index=vocab,
        config=Doc2VecConfig(**d["config"]),
        approximate=bool(d.get("approximate", False)),
    )


def save_doc2vec(model: Doc2VecModel, path: str | Path) -> None:
    Path(path).write_text(_canonical(doc2vec_to_dict(model)) + "\n", encoding="utf-8")


def load_doc2vec(path: str | Path) -> Doc2VecModel:
    with open(path, encoding="utf-8") as fh:
        return doc2vec_from_dict(json.load(fh))


# -- biLM and mixing head ----------------------------------------------------

def bilm_to_dict(model: BiLM) -> dict:
    return {
        "format_version": CONTAINER_FORMAT_VERSION,
        "kind": "bilm",
        "config": {
            "embed_size": model.config.embed_size,
            "hidden_size": model.config.hidden_size,
            "layers": model.config.layers,
            "epochs": model.config.epochs,
            "batch_size": model.config.batch_size,
            "learning_rate": model.config.learning_rate,
            "min_count": model.config.min_count,
            "seed": model.config.seed,
        },
        "vocab": dict(model.vocab_index),
        "vocab_hash": _hash_index(model.vocab_index),
        "params": {k: v.tolist() for k, v in sorted(model.params.items())},
    }


def bilm_from_dict(d: dict) -> BiLM:
    if d.get("format_version") != CONTAINER_FORMAT_VERSION:
        raise SchemaMismatchError(
            f"unsupported bilm format version {d.get('format_version')!r}"
        )
    vocab = {str(k): int(v) for k, v in d["vocab"].items()}
    if _hash_index(vocab) != d.get("vocab_hash"):
        raise SchemaMismatchError("bilm vocabulary hash mismatch")
    params = {k: np.asarray(v, dtype=np.float64) for k, v in d["params"].items()}
    if params["embed"].shape[0] != len(vocab) + 1:  # one reserved unknown row
        raise SchemaMismatchError("bilm embedding table does not fit its vocabulary")
    return BiLM(params=params, vocab_index=vocab, config=BiLMConfig(**d["config"]))


def mixing_head_to_dict(head: MixingHead) -> dict:
    return {"w": head.w.tolist(), "gamma": head.gamma}


def mixing_head_from_dict(d: dict) -> MixingHead:
    return MixingHead(w=np.asarray(d["w"], dtype=np.float64), gamma=float(d["gamma"]))


# -- feature-space pieces ----------------------------------------------------

def vocabulary_to_dict(v: Vocabulary) -> dict:
    return {"index": dict(v.index), "fitted_on": v.fitted_on, "hash": _hash_index(v.index)}


def vocabulary_from_dict(d: dict) -> Vocabulary:
    index = {str(k): int(v) for k, v in d["index"].items()}
    if _hash_index(index) != d.get("hash"):
        raise SchemaMismatchError("count-vectorizer vocabulary hash mismatch")
    return Vocabulary(index=index, fitted_on=str(d["fitted_on"]))


def standardizer_to_dict(s: Standardizer) -> dict:
    return {"mean": s.mean.tolist(), "scale": s.scale.tolist()}


def standardizer_from_dict(d: dict) -> Standardizer:
    return Standardizer(
        mean=np.asarray(d["mean"], dtype=np.float64),
        scale=np.asarray(d["scale"], dtype=np.float64),
    )


def logistic_to_dict(m: LogisticModel) -> dict:
    return {
        "weights": m.weights.tolist(),
        "bias": m.bias,
        "c": m.c,
        "schema_fingerprint": m.schema_fingerprint,
    }


def logistic_from_dict(d: dict) -> LogisticModel:
    return LogisticModel(
        weights=np.asarray(d["weights"], dtype=np.float64),
        bias=float(d["bias"]),
        c=float(d["c"]),
        schema_fingerprint=d.get("schema_fingerprint"),
    )


# -- the container itself ----------------------------------------------------

@dataclass
class ModelContainer:
    pipeline: int
    config_hash: str
    schema: FeatureSchema
    vocabulary: Vocabulary
    classifier: LogisticModel
    ling_scaler: Optional[Standardizer] = None
    age_scaler: Optional[Standardizer] = None
    doc2vec: Optional[Doc2VecModel] = None
    bilm: Optional[BiLM] = None
    mixing_head: Optional[MixingHead] = None
    context_scaler: Optional[Standardizer] = None
    normalize_layers: bool = False
    risk_thresholds: tuple[float, float] = (0.3, 0.7)
    version: str = ""  # content hash, assigned when serialized


def container_to_dict(c: ModelContainer) -> dict:
    d = {
        "format_version": CONTAINER_FORMAT_VERSION,
        "kind": "model_container",
        "pipeline": c.pipeline,
        "config_hash": c.config_hash,
        "schema": {
            "blocks": [[name, size] for name, size in c.schema.blocks],
            "fingerprint": c.schema.fingerprint(),
        },
        "vocabulary": vocabulary_to_dict(c.vocabulary),
        "classifier": logistic_to_dict(c.classifier),
        "normalize_layers": c.normalize_layers,
        "risk_thresholds": list(c.risk_thresholds),
        "ling_scaler": None if c.ling_scaler is None else standardizer_to_dict(c.ling_scaler),
        "age_scaler": None if c.age_scaler is None else standardizer_to_dict(c.age_scaler),
        "doc2vec": None if c.doc2vec is None else doc2vec_to_dict(c.doc2vec),
        "bilm": None if c.bilm is None else bilm_to_dict(c.bilm),
        "mixing_head": None if c.mixing_head is None else mixing_head_to_dict(c.mixing_head),
        "context_scaler": (
            None if c.context_scaler is None else standardizer_to_dict(c.context_scaler)
        ),
    }
    return d


def container_from_dict(d: dict) -> ModelContainer:
    if d.get("format_version") != CONTAINER_FORMAT_VERSION:
        raise SchemaMismatchError(
            f"unsupported container format version {d.get('format_version')!r}"
        )
    stored_version = d.get("container_version")
    body = {k: v for k, v in d.items() if k != "container_version"}
    if stored_version != content_version(body):
        raise SchemaMismatchError("container content does not match its version hash")

    schema = FeatureSchema(
        blocks=tuple((str(n), int(s)) for n, s in d["schema"]["blocks"])
    )
    if schema.fingerprint() != d["schema"]["fingerprint"]:
        raise SchemaMismatchError("feature schema fingerprint mismatch")
    classifier = logistic_from_dict(d["classifier"])
    if classifier.schema_fingerprint not in (None, schema.fingerprint()):
        raise SchemaMismatchError("classifier was trained against a different schema")
    if classifier.dim != schema.dim:
        raise SchemaMismatchError(
            f"classifier has {classifier.dim} weights for a {schema.dim}-column schema"
        )

    return ModelContainer(
        pipeline=int(d["pipeline"]),
        config_hash=str(d["config_hash"]),
        schema=schema,
        vocabulary=vocabulary_from_dict(d["vocabulary"]),
        classifier=classifier,
        ling_scaler=None if d["ling_scaler"] is None else standardizer_from_dict(d["ling_scaler"]),
        age_scaler=None if d["age_scaler"] is None else standardizer_from_dict(d["age_scaler"]),
        doc2vec=None if d["doc2vec"] is None else doc2vec_from_dict(d["doc2vec"]),
        bilm=None if d["bilm"] is None else bilm_from_dict(d["bilm"]),
        mixing_head=None if d["mixing_head"] is None else mixing_head_from_dict(d["mixing_head"]),
        context_scaler=(
            None
            if d.get("context_scaler") is None
            else standardizer_from_dict(d["context_scaler"])
        ),
        normalize_layers=bool(d["normalize_layers"]),
        risk_thresholds=(float(d["risk_thresholds"][0]), float(d["risk_thresholds"][1])),
        version=str(stored_version),
    )


def save_container(c: ModelContainer, path: str | Path) -> str:
    """Write the container; returns the content version it was stamped with."""
    d = container_to_dict(c)
    version = content_version(d)
    d["container_version"] = version
    Path(path).write_text(
        json.dumps(d, sort_keys=True, indent=1) + "\n", encoding="utf-8"
    )
    return version


def load_container(path: str | Path) -> ModelContainer:
    with open(path, encoding="utf-8") as fh:
        return container_from_dict(json.load(fh))


# -- inference against a loaded container ------------------------------------

def transform_document(c: ModelContainer, t: Transcript) -> np.ndarray:
    """Featurize one transcript through every stage the container carries.

    Mirrors the training-time transform exactly: held-out text only ever
    meets frozen statistics and frozen model weights.
    """
    blocks = {"bow": bow_transform(t, c.vocabulary)}
    if c.pipeline >= 2:
        if c.ling_scaler is None or c.age_scaler is None:
            raise SchemaMismatchError("container lacks its fitted feature scalers")
        blocks["linguistic"] = linguistic_features(t, c.ling_scaler)
        blocks["demographic"] = demographic_features(t, c.age_scaler)
    tokens = clean_text(t)
    if c.pipeline >= 3:
        if c.doc2vec is None:
            raise SchemaMismatchError("container lacks its document embedder")
        blocks["doc2vec"] = c.doc2vec.infer(tokens, seed=1)
    if c.pipeline >= 4:
        if c.bilm is None or c.mixing_head is None or c.context_scaler is None:
            raise SchemaMismatchError("container lacks its contextual embedder")
        means = c.bilm.doc_layer_means(tokens, normalize=c.normalize_layers)
        blocks["context_emb"] = c.context_scaler.transform(
            mix_layers(means, c.mixing_head)
        )
    return assemble(blocks, c.schema)


def score_transcript(c: ModelContainer, t: Transcript) -> float:
    """Class-1 probability of one transcript under the stored classifier."""
    x = transform_document(c, t)
    return float(logreg_predict_proba(c.classifier, x))
