"""Transcript-based dementia screening.

Parse CHAT-style picture-description transcripts, build count, rate,
demographic and embedding features, train regularized classifiers, and
measure how stable the whole protocol is under repeated resplits.  Four
pipelines of increasing feature richness share one evaluation harness; a
trained run exports a versioned model container that the bundled HTTP
service scores new descriptions against.
"""

from .bilm import (
    BiLM,
    BiLMConfig,
    MixingHead,
    fit_mixing_head,
    mix_layers,
    train_bilm,
)
from .chat import (
    Demographics,
    Label,
    RawChatDocument,
    Transcript,
    Utterance,
    clean_text,
    clean_tokens,
    event_counts,
    load_corpus,
    parse_chat,
    transcript_from_dict,
    transcript_to_dict,
)
from .classify import (
    DecisionTreeModel,
    LogisticModel,
    logreg_predict_proba,
    logreg_train,
    sigmoid,
    tree_predict_proba,
    tree_train,
)
from .container import (
    ModelContainer,
    load_container,
    save_container,
    score_transcript,
    transform_document,
)
from .corpus import SyntheticCorpusSpec, generate_synthetic_corpus
from .doc2vec import Doc2VecConfig, Doc2VecModel, train_doc2vec
from .errors import AdscreenError
from .evaluate import (
    ConfusionMatrix,
    RocCurve,
    SearchSpace,
    confusion,
    roc_auc,
    roc_to_csv,
    run_stability,
    split,
)
from .features import (
    FeatureSchema,
    Standardizer,
    Vocabulary,
    bow_transform,
    fit_count_vectorizer,
    schema_for_pipeline,
)
from .pipeline import (
    PipelineConfig,
    config_from_mapping,
    config_hash,
    featurize,
    parse_config_file,
    prepare_corpus,
    run_pipeline,
    run_protocol,
    run_search,
)

__version__ = "0.1.0"

__all__ = [
    "AdscreenError",
    "BiLM",
    "BiLMConfig",
    "ConfusionMatrix",
    "DecisionTreeModel",
    "Demographics",
    "Doc2VecConfig",
    "Doc2VecModel",
    "FeatureSchema",
    "Label",
    "LogisticModel",
    "MixingHead",
    "ModelContainer",
    "PipelineConfig",
    "RawChatDocument",
    "RocCurve",
    "SearchSpace",
    "Standardizer",
    "SyntheticCorpusSpec",
    "Transcript",
    "Utterance",
    "Vocabulary",
    "bow_transform",
    "clean_text",
    "clean_tokens",
    "config_from_mapping",
    "config_hash",
    "confusion",
    "event_counts",
    "featurize",
    "fit_count_vectorizer",
    "fit_mixing_head",
    "generate_synthetic_corpus",
    "load_container",
    "load_corpus",
    "logreg_predict_proba",
    "logreg_train",
    "mix_layers",
    "parse_chat",
    "parse_config_file",
    "prepare_corpus",
    "roc_auc",
    "roc_to_csv",
    "run_pipeline",
    "run_protocol",
    "run_search",
    "run_stability",
    "save_container",
    "schema_for_pipeline",
    "score_transcript",
    "sigmoid",
    "split",
    "transcript_from_dict",
    "transcript_to_dict",
    "transform_document",
    "train_bilm",
    "train_doc2vec",
    "tree_predict_proba",
    "tree_train",
]
