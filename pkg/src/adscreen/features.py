"""Per-transcript feature blocks and their assembly into pipeline vectors.

Block layout per pipeline id:

    1: BOW
    2: BOW + Linguistic + Demographic
    3: BOW + Linguistic + Demographic + Doc2Vec
    4: BOW + Linguistic + Demographic + Doc2Vec + ContextEmb

All fitting (vocabulary, z-score statistics) happens on the training split
only; fitted objects are immutable and safe to share across threads.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .chat import EventKind, Transcript, clean_text, event_counts
from .errors import (
    EmptyCorpusError,
    MissingDemographicsError,
    NonPositiveAudioLengthError,
    SchemaMismatchError,
)

SCHEMA_FORMAT_VERSION = 1

LINGUISTIC_FEATURE_NAMES = (
    "word_rate",
    "intervention_rate",
    "unintelligible_rate",
    "trailing_pause_rate",
    "filler_rate",
)


def _fingerprint(parts: Iterable[str]) -> str:
    h = hashlib.sha256()
    for p in parts:
        h.update(p.encode("utf-8"))
        h.update(b"\x00")
    return h.hexdigest()


@dataclass(frozen=True)
class Vocabulary:
    """Token -> dense column index, fitted on a training corpus."""

    index: dict[str, int]
    fitted_on: str  # corpus fingerprint

    def __len__(self) -> int:
        return len(self.index)

    @property
    def tokens(self) -> list[str]:
        out = [""] * len(self.index)
        for tok, i in self.index.items():
            out[i] = tok
        return out

    def content_hash(self) -> str:
        return _fingerprint(f"{t}:{i}" for t, i in sorted(self.index.items()))


def fit_count_vectorizer(train: Sequence[Transcript], min_df: int = 1) -> Vocabulary:
    """Build a vocabulary over cleaned participant tokens of the training split.

    Tokens occurring fewer than ``min_df`` times in total are dropped.
    Column order is lexicographic, which makes the mapping deterministic.
    """
    if not train:
        raise EmptyCorpusError("no training transcripts")
    counts: dict[str, int] = {}
    ids = []
    for t in train:
        ids.append(t.source_id)
        for tok in clean_text(t):
            counts[tok] = counts.get(tok, 0) + 1
    kept = sorted(tok for tok, c in counts.items() if c >= min_df)
    if not kept:
        raise EmptyCorpusError("training corpus has no tokens")
    return Vocabulary(
        index={tok: i for i, tok in enumerate(kept)},
        fitted_on=_fingerprint(ids + kept),
    )


def bow_transform(t: Transcript, vocab: Vocabulary) -> np.ndarray:
    """Raw occurrence counts of vocabulary tokens in the participant's speech.

    Out-of-vocabulary tokens are ignored.
    """
    vec = np.zeros(len(vocab), dtype=np.float64)
    for tok in clean_text(t):
        j = vocab.index.get(tok)
        if j is not None:
            vec[j] += 1.0
    return vec


@dataclass(frozen=True)
class Standardizer:
    """Per-column z-score transform with statistics frozen on the training split."""

    mean: np.ndarray
    scale: np.ndarray  # population std, floored to 1 where degenerate

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        X = np.asarray(X, dtype=np.float64)
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        scale = np.where(std > 1e-12, std, 1.0)
        return cls(mean=mean, scale=scale)

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.mean) / self.scale

    def state_hash(self) -> str:
        return _fingerprint([repr(self.mean.tolist()), repr(self.scale.tolist())])


def linguistic_raw(t: Transcript) -> np.ndarray:
    """Event and word rates per second of audio, before standardization.

    Order matches :data:`LINGUISTIC_FEATURE_NAMES`: cleaned participant words
    per second, interviewer turns per second, then unintelligible, pause
    (including trailing-off) and filler events per second.
    """
    if t.audio_length is None or t.audio_length <= 0:
        raise NonPositiveAudioLengthError(
            f"transcript {t.source_id!r} has no positive audio length"
        )
    counts = event_counts(t)
    secs = t.audio_length
    return np.array(
        [
            len(clean_text(t)) / secs,
            len(t.interviewer_utterances()) / secs,
            counts[EventKind.UNINTELLIGIBLE] / secs,
            counts[EventKind.PAUSE] / secs,
            counts[EventKind.FILLER] / secs,
        ],
        dtype=np.float64,
    )


def fit_linguistic_scaler(train: Sequence[Transcript]) -> Standardizer:
    return Standardizer.fit(np.stack([linguistic_raw(t) for t in train]))


def linguistic_features(t: Transcript, scaler: Standardizer) -> np.ndarray:
    return scaler.transform(linguistic_raw(t)[None, :])[0]


GENDER_ENCODING = {"male": 0.0, "female": 1.0}


def demographic_raw(t: Transcript) -> np.ndarray:
    """[age, gender(0=male, 1=female)], raising when either is absent."""
    d = t.demographics
    if d.age is None:
        raise MissingDemographicsError(f"transcript {t.source_id!r} lacks age")
    if d.gender not in GENDER_ENCODING:
        raise MissingDemographicsError(
            f"transcript {t.source_id!r} has unusable gender {d.gender!r}"
        )
    return np.array([float(d.age), GENDER_ENCODING[d.gender]], dtype=np.float64)


def fit_age_scaler(train: Sequence[Transcript]) -> Standardizer:
    ages = np.stack([demographic_raw(t) for t in train])[:, :1]
    return Standardizer.fit(ages)


def demographic_features(t: Transcript, age_scaler: Standardizer) -> np.ndarray:
    raw = demographic_raw(t)
    age = age_scaler.transform(raw[:1][None, :])[0, 0]
    return np.array([age, raw[1]], dtype=np.float64)


# -- schema and assembly -----------------------------------------------------

BLOCK_ORDER = ("bow", "linguistic", "demographic", "doc2vec", "context_emb")

PIPELINE_BLOCKS = {
    1: ("bow",),
    2: ("bow", "linguistic", "demographic"),
    3: ("bow", "linguistic", "demographic", "doc2vec"),
    4: ("bow", "linguistic", "demographic", "doc2vec", "context_emb"),
}


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered named blocks with contiguous, non-overlapping column spans."""

    blocks: tuple[tuple[str, int], ...]  # (name, size)

    @property
    def dim(self) -> int:
        return sum(size for _, size in self.blocks)

    @property
    def block_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.blocks)

    def offsets(self) -> dict[str, tuple[int, int]]:
        out = {}
        start = 0
        for name, size in self.blocks:
            out[name] = (start, start + size)
            start += size
        return out

    def column_names(self) -> list[str]:
        names = []
        for name, size in self.blocks:
            names.extend(f"{name}_{i}" for i in range(size))
        return names

    def fingerprint(self) -> str:
        return _fingerprint(f"{n}:{s}" for n, s in self.blocks)

    def to_descriptor(self) -> dict:
        return {
            "format_version": SCHEMA_FORMAT_VERSION,
            "blocks": [{"name": n, "size": s} for n, s in self.blocks],
            "dim": self.dim,
            "fingerprint": self.fingerprint(),
        }


def schema_for_pipeline(
    pipeline_id: int,
    vocab_size: int,
    doc2vec_size: int = 0,
    context_size: int = 0,
) -> FeatureSchema:
    if pipeline_id not in PIPELINE_BLOCKS:
        raise ValueError(f"unknown pipeline id {pipeline_id}")
    sizes = {
        "bow": vocab_size,
        "linguistic": len(LINGUISTIC_FEATURE_NAMES),
        "demographic": 2,
        "doc2vec": doc2vec_size,
        "context_emb": context_size,
    }
    return FeatureSchema(
        blocks=tuple((name, sizes[name]) for name in PIPELINE_BLOCKS[pipeline_id])
    )


def assemble(blocks: Mapping[str, np.ndarray], schema: FeatureSchema) -> np.ndarray:
    """Concatenate blocks in schema order into one dense vector.

    Raises :class:`SchemaMismatchError` on a missing block or size mismatch;
    extra blocks are ignored so one block dict can serve several pipelines.
    """
    parts = []
    for name, size in schema.blocks:
        if name not in blocks:
            raise SchemaMismatchError(f"missing block {name!r}")
        arr = np.asarray(blocks[name], dtype=np.float64).ravel()
        if arr.shape[0] != size:
            raise SchemaMismatchError(
                f"block {name!r} has size {arr.shape[0]}, schema wants {size}"
            )
        parts.append(arr)
    vec = np.concatenate(parts) if parts else np.zeros(0)
    if not np.all(np.isfinite(vec)):
        raise SchemaMismatchError("assembled vector contains non-finite values")
    return vec


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    schema: FeatureSchema
    label: Optional[int] = None  # 1 = dementia, 0 = control

    def __post_init__(self):
        if self.values.shape[0] != self.schema.dim:
            raise SchemaMismatchError(
                f"vector length {self.values.shape[0]} != schema dim {self.schema.dim}"
            )


# -- export ------------------------------------------------------------------

def features_to_csv(X: np.ndarray, schema: FeatureSchema, path, config_hash: str = "") -> None:
    """Write a feature matrix as CSV with schema column names.

    The first line is a comment carrying the format version and config hash.
    """
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# format_version={SCHEMA_FORMAT_VERSION} config_hash={config_hash}\n")
        fh.write(",".join(schema.column_names()) + "\n")
        for row in np.asarray(X):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def schema_to_json(schema: FeatureSchema, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(schema.to_descriptor(), fh, indent=2, sort_keys=True)
        fh.write("\n")
