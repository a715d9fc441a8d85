"""End-to-end screening pipelines: featurize, tune, evaluate, stabilize.

Pipeline 1 classifies on word counts alone; 2 adds speech-rate and
demographic features; 3 adds a trained document embedding; 4 appends the
mixed contextual embedding.  Each run follows one protocol: split, fit
every feature stage on the training split only, pick the regularization
strength on the validation split, report on the test split, then repeat
the whole thing across reseeded splits for stability statistics.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import container as container_mod
from .bilm import (
    BiLM,
    BiLMConfig,
    MixingHead,
    fit_mixing_head,
    mix_layers,
    train_bilm,
)
from .chat import Label, Transcript, clean_tokens, clean_text, load_corpus
from .classify import LogisticModel, logreg_predict_proba, logreg_train, sigmoid
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
    search_candidates,
    split,
)
from .features import (
    FeatureSchema,
    Standardizer,
    Vocabulary,
    assemble,
    bow_transform,
    demographic_features,
    fit_age_scaler,
    fit_count_vectorizer,
    fit_linguistic_scaler,
    linguistic_features,
    schema_for_pipeline,
)

REPORT_FORMAT_VERSION = 1

# regularization strengths swept during model selection
C_GRID = (0.01, 0.05, 0.25, 0.5, 0.75, 0.99, 10.0, 1000.0, 1e6, 1e10)

VEC_SIZE_GRID = (40, 100, 200, 500, 750, 1000, 1250, 1500)
ALPHA_GRID = (0.001, 0.025, 0.01, 0.25, 0.35, 0.05, 0.1, 0.5)
MIN_ALPHA_GRID = (0.00025, 0.0025, 0.005, 0.01, 0.05, 0.1, 0.2, 0.5)


@dataclass(frozen=True)
class PipelineConfig:
    pipeline: int = 4
    seed: int = 0
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)
    stratified: bool = True
    repetitions: int = 100
    folds: int = 10
    min_df: int = 1
    c_grid: tuple[float, ...] = C_GRID
    vec_size: int = 40
    window: int = 5
    doc2vec_alpha: float = 0.25
    doc2vec_min_alpha: float = 0.0025
    doc2vec_epochs: int = 25
    # summed batch gradients blow up past ~100 pairs per step at the
    # default learning rate, so keep batches small here
    doc2vec_batch: int = 64
    negative: int = 0
    embed_size: int = 16
    bilm_layers: int = 2
    bilm_epochs: int = 24
    bilm_learning_rate: float = 0.015
    mixing_c: float = 20.0
    normalize_layers: bool = False
    logreg_tol: float = 1e-5
    logreg_max_iter: int = 800

    def __post_init__(self):
        if self.pipeline not in (1, 2, 3, 4):
            raise ValueError(f"pipeline must be 1..4, got {self.pipeline}")
        if len(self.ratios) != 3:
            raise ValueError("ratios must be (train, validation, test)")
        if not self.c_grid:
            raise ValueError("c_grid must not be empty")


_TUPLE_FIELDS = {"ratios", "c_grid"}


def config_from_mapping(mapping: dict, base: Optional[PipelineConfig] = None) -> PipelineConfig:
    """Build a config from string-valued overrides, type-checked per field."""
    base = base or PipelineConfig()
    fields = {f.name: f for f in dataclasses.fields(PipelineConfig)}
    unknown = sorted(set(mapping) - set(fields))
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(unknown)}")

    kwargs = {}
    for key, raw in mapping.items():
        if isinstance(raw, str):
            if key in _TUPLE_FIELDS:
                kwargs[key] = tuple(float(p) for p in raw.split(",") if p.strip())
            elif fields[key].type == "bool":
                if raw.strip().lower() not in ("true", "false"):
                    raise ValueError(f"{key} must be true or false, got {raw!r}")
                kwargs[key] = raw.strip().lower() == "true"
            elif fields[key].type == "int":
                kwargs[key] = int(raw)
            elif fields[key].type == "float":
                kwargs[key] = float(raw)
            else:
                raise ValueError(f"cannot parse config key {key!r}")
        else:
            kwargs[key] = raw
    return dataclasses.replace(base, **kwargs)


def parse_config_file(path: str | Path) -> dict[str, str]:
    """Plain ``key = value`` lines; ``#`` starts a comment."""
    out: dict[str, str] = {}
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{line_no}: expected key = value, got {line!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def config_to_mapping(cfg: PipelineConfig) -> dict[str, str]:
    out = {}
    for f in dataclasses.fields(PipelineConfig):
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            out[f.name] = ",".join(repr(x) for x in v)
        else:
            out[f.name] = repr(v) if isinstance(v, float) else str(v)
    return out


def config_hash(cfg: PipelineConfig) -> str:
    import hashlib

    h = hashlib.sha256()
    for k, v in sorted(config_to_mapping(cfg).items()):
        h.update(f"{k}={v}\n".encode("utf-8"))
    return h.hexdigest()[:12]


# -- corpus preparation ------------------------------------------------------

@dataclass(frozen=True)
class PreparedCorpus:
    transcripts: tuple[Transcript, ...]
    labels: np.ndarray            # 1 = dementia, 0 = control
    doc_tokens: tuple[tuple[str, ...], ...]
    utterance_tokens: tuple[tuple[tuple[str, ...], ...], ...]

    def __len__(self) -> int:
        return len(self.transcripts)


def prepare_corpus(transcripts: Sequence[Transcript]) -> PreparedCorpus:
    labels = []
    doc_tokens = []
    utt_tokens = []
    for t in transcripts:
        if t.label == Label.UNKNOWN:
            raise ValueError(f"transcript {t.source_id!r} has no diagnosis label")
        labels.append(1 if t.label == Label.DEMENTIA else 0)
        doc_tokens.append(tuple(clean_text(t)))
        utt_tokens.append(
            tuple(
                tuple(clean_tokens(u.tokens))
                for u in t.participant_utterances()
                if len(clean_tokens(u.tokens)) >= 2
            )
        )
    return PreparedCorpus(
        transcripts=tuple(transcripts),
        labels=np.array(labels, dtype=np.int64),
        doc_tokens=tuple(doc_tokens),
        utterance_tokens=tuple(utt_tokens),
    )


# -- featurization -----------------------------------------------------------

@dataclass
class FittedFeatures:
    schema: FeatureSchema
    vocab: Vocabulary
    X: np.ndarray
    ling_scaler: Optional[Standardizer] = None
    age_scaler: Optional[Standardizer] = None
    doc2vec: Optional[Doc2VecModel] = None
    bilm: Optional[BiLM] = None
    mixing_head: Optional[MixingHead] = None
    context_scaler: Optional[Standardizer] = None


def featurize(
    prepared: PreparedCorpus,
    train_idx: Sequence[int],
    cfg: PipelineConfig,
    seed: int,
) -> FittedFeatures:
    """Fit every feature stage on the training rows, transform all rows.

    Held-out documents only ever pass through frozen transforms: count
    lookup, z-scoring with training statistics, document-vector inference
    against frozen word vectors, and the trained language model.
    """
    train_idx = list(train_idx)
    train_transcripts = [prepared.transcripts[i] for i in train_idx]
    n = len(prepared)

    vocab = fit_count_vectorizer(train_transcripts, min_df=cfg.min_df)
    blocks_per_doc: list[dict[str, np.ndarray]] = [
        {"bow": bow_transform(t, vocab)} for t in prepared.transcripts
    ]

    ling_scaler = age_scaler = None
    if cfg.pipeline >= 2:
        ling_scaler = fit_linguistic_scaler(train_transcripts)
        age_scaler = fit_age_scaler(train_transcripts)
        for blocks, t in zip(blocks_per_doc, prepared.transcripts):
            blocks["linguistic"] = linguistic_features(t, ling_scaler)
            blocks["demographic"] = demographic_features(t, age_scaler)

    d2v = None
    if cfg.pipeline >= 3:
        d2v = train_doc2vec(
            [prepared.doc_tokens[i] for i in train_idx],
            Doc2VecConfig(
                vec_size=cfg.vec_size,
                window=cfg.window,
                alpha=cfg.doc2vec_alpha,
                min_alpha=cfg.doc2vec_min_alpha,
                epochs=cfg.doc2vec_epochs,
                min_count=1,
                negative=cfg.negative,
                batch_size=cfg.doc2vec_batch,
                seed=seed,
            ),
        )
        in_train = {doc: row for row, doc in enumerate(train_idx)}
        for i in range(n):
            if i in in_train:
                vec = d2v.doc_vectors[in_train[i]]
            else:
                vec = d2v.infer(prepared.doc_tokens[i], seed=1)
            blocks_per_doc[i]["doc2vec"] = vec

    bilm = head = context_scaler = None
    if cfg.pipeline >= 4:
        sequences = [
            list(u) for i in train_idx for u in prepared.utterance_tokens[i]
        ]
        bilm = train_bilm(
            sequences,
            BiLMConfig(
                embed_size=cfg.embed_size,
                hidden_size=cfg.embed_size,
                layers=cfg.bilm_layers,
                epochs=cfg.bilm_epochs,
                learning_rate=cfg.bilm_learning_rate,
                min_count=1,
                seed=seed,
            ),
        )
        means = bilm.doc_layer_means_many(
            prepared.doc_tokens, normalize=cfg.normalize_layers
        )
        train_rows = np.array(train_idx, dtype=np.int64)
        head, _, _ = fit_mixing_head(
            means[train_rows], prepared.labels[train_rows], c=cfg.mixing_c
        )
        mixed = np.stack([mix_layers(means[i], head) for i in range(n)])
        # per-layer activations sit on very different scales, which a
        # shared ridge penalty would punish; standardize on train rows
        context_scaler = Standardizer.fit(mixed[train_rows])
        for i in range(n):
            blocks_per_doc[i]["context_emb"] = context_scaler.transform(mixed[i])

    schema = schema_for_pipeline(
        cfg.pipeline,
        len(vocab),
        doc2vec_size=0 if d2v is None else d2v.vec_size,
        context_size=0 if bilm is None else bilm.rep_width,
    )
    X = np.stack([assemble(blocks, schema) for blocks in blocks_per_doc])
    return FittedFeatures(
        schema=schema,
        vocab=vocab,
        X=X,
        ling_scaler=ling_scaler,
        age_scaler=age_scaler,
        doc2vec=d2v,
        bilm=bilm,
        mixing_head=head,
        context_scaler=context_scaler,
    )


# -- one protocol pass -------------------------------------------------------

@dataclass
class ProtocolResult:
    plan: object
    fitted: FittedFeatures
    model: LogisticModel
    selected_c: float
    c_sweep: list[tuple[float, float]]   # (c, validation accuracy)
    test_accuracy: float
    test_auc: float
    test_confusion: ConfusionMatrix
    roc: RocCurve


def _scores(model: LogisticModel, X: np.ndarray) -> np.ndarray:
    return sigmoid(X @ model.weights + model.bias)


def select_regularization(
    X: np.ndarray,
    y: np.ndarray,
    train_rows: np.ndarray,
    val_rows: np.ndarray,
    cfg: PipelineConfig,
    fingerprint: str,
) -> tuple[LogisticModel, float, list[tuple[float, float]]]:
    """Sweep the c grid; ties go to the strongest regularization.

    Fits walk the grid from weakest to strongest regularization, each
    warm-started from the previous solution.  Shrinking an existing
    solution converges quickly, so within the iteration cap the small-c
    candidates (the ones the tie rule favors) are the best-converged;
    any leftover optimization error makes a candidate look worse on
    validation, never better, which keeps the selection conservative.
    """
    by_c = {}
    prev_w, prev_b = None, 0.0
    for c in sorted(set(cfg.c_grid), reverse=True):
        model = logreg_train(
            X[train_rows],
            y[train_rows],
            c=c,
            init_w=prev_w,
            init_b=prev_b,
            tol=cfg.logreg_tol,
            max_iter=cfg.logreg_max_iter,
            schema_fingerprint=fingerprint,
        )
        prev_w, prev_b = model.weights, model.bias
        pred = (_scores(model, X[val_rows]) >= 0.5).astype(int)
        by_c[float(c)] = (model, float(np.mean(pred == y[val_rows])))
    sweep = [(float(c), by_c[float(c)][1]) for c in cfg.c_grid]
    best = None
    for c, (model, acc) in by_c.items():
        if best is None or (acc, -c) > (best[1], -best[2]):
            best = (model, acc, c)
    return best[0], float(best[2]), sweep


def run_protocol(prepared: PreparedCorpus, cfg: PipelineConfig, seed: int) -> ProtocolResult:
    plan = split(prepared.labels, seed=seed, ratios=cfg.ratios, stratified=cfg.stratified)
    fitted = featurize(prepared, plan.train, cfg, seed)
    train_rows = np.array(plan.train, dtype=np.int64)
    val_rows = np.array(plan.validation, dtype=np.int64)
    test_rows = np.array(plan.test, dtype=np.int64)

    model, selected_c, sweep = select_regularization(
        fitted.X, prepared.labels, train_rows, val_rows, cfg, fitted.schema.fingerprint()
    )

    y_test = prepared.labels[test_rows]
    scores = _scores(model, fitted.X[test_rows])
    pred = (scores >= 0.5).astype(int)
    curve, auc = roc_auc(y_test, scores)
    return ProtocolResult(
        plan=plan,
        fitted=fitted,
        model=model,
        selected_c=selected_c,
        c_sweep=sweep,
        test_accuracy=float(np.mean(pred == y_test)),
        test_auc=auc,
        test_confusion=confusion(y_test, pred),
        roc=curve,
    )


@dataclass
class PipelineRepetition:
    """Picklable split/train/evaluate closure for the stability engine."""

    prepared: PreparedCorpus
    cfg: PipelineConfig

    def __call__(self, seed: int) -> tuple[float, float]:
        result = run_protocol(self.prepared, self.cfg, seed)
        return result.test_accuracy, result.test_auc


# -- hyperparameter search (CLI surface) -------------------------------------

def default_search_space(cfg: PipelineConfig) -> SearchSpace:
    """c always; embedding hyperparameters only when an embedder is in play."""
    space = {"c": list(cfg.c_grid)}
    if cfg.pipeline >= 3:
        space["vec_size"] = list(VEC_SIZE_GRID)
        space["alpha"] = list(ALPHA_GRID)
        space["min_alpha"] = list(MIN_ALPHA_GRID)
    return SearchSpace.from_dict(space)


def run_search(
    prepared: PreparedCorpus,
    cfg: PipelineConfig,
    candidates: Sequence[dict],
) -> tuple[dict, list]:
    """Mean validation accuracy per candidate over reseeded folds."""

    def eval_fold(params: dict, fold_seed: int) -> float:
        trial = dict(params)
        c = float(trial.pop("c", 1.0))
        renames = {"alpha": "doc2vec_alpha", "min_alpha": "doc2vec_min_alpha"}
        trial = {renames.get(k, k): v for k, v in trial.items()}
        fold_cfg = dataclasses.replace(cfg, **trial)
        if fold_cfg.doc2vec_min_alpha > fold_cfg.doc2vec_alpha:
            raise AdscreenError(
                "min_alpha exceeds alpha; candidate is not trainable"
            )
        plan = split(prepared.labels, seed=fold_seed, ratios=fold_cfg.ratios,
                     stratified=fold_cfg.stratified)
        fitted = featurize(prepared, plan.train, fold_cfg, fold_seed)
        train_rows = np.array(plan.train, dtype=np.int64)
        val_rows = np.array(plan.validation, dtype=np.int64)
        model = logreg_train(
            fitted.X[train_rows], prepared.labels[train_rows], c=c,
            tol=fold_cfg.logreg_tol, max_iter=fold_cfg.logreg_max_iter,
            schema_fingerprint=fitted.schema.fingerprint(),
        )
        pred = (_scores(model, fitted.X[val_rows]) >= 0.5).astype(int)
        return float(np.mean(pred == prepared.labels[val_rows]))

    return search_candidates(candidates, eval_fold, folds=cfg.folds, seed=cfg.seed)


# -- full run with artifacts -------------------------------------------------

def _csweep_csv(sweep: list[tuple[float, float]], path: Path, chash: str) -> None:
    lines = [f"# format_version={REPORT_FORMAT_VERSION} config_hash={chash}"]
    lines.append("c,validation_accuracy")
    for c, acc in sweep:
        lines.append(f"{c!r},{acc!r}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _table_txt(report: dict, path: Path, chash: str) -> None:
    acc = report["stability"]["accuracy"]
    auc = report["stability"]["auc"]
    lines = [
        f"# format_version={REPORT_FORMAT_VERSION} config_hash={chash}",
        f"{'Pipeline':<10}{'Test acc':<12}{'Test AUC':<12}"
        f"{'Mean acc':<12}{'Std acc':<12}{'Mean AUC':<12}{'Std AUC':<12}",
        f"{report['pipeline']:<10}"
        f"{report['test']['accuracy']:<12.4f}{report['test']['auc']:<12.4f}"
        f"{acc['mean']:<12.4f}{acc['std']:<12.4f}"
        f"{auc['mean']:<12.4f}{auc['std']:<12.4f}",
    ]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def build_container(
    cfg: PipelineConfig, result: ProtocolResult, chash: str
) -> container_mod.ModelContainer:
    f = result.fitted
    return container_mod.ModelContainer(
        pipeline=cfg.pipeline,
        config_hash=chash,
        schema=f.schema,
        vocabulary=f.vocab,
        classifier=result.model,
        ling_scaler=f.ling_scaler,
        age_scaler=f.age_scaler,
        doc2vec=f.doc2vec,
        bilm=f.bilm,
        mixing_head=f.mixing_head,
        context_scaler=f.context_scaler,
        normalize_layers=cfg.normalize_layers,
    )


def run_pipeline(
    cfg: PipelineConfig,
    corpus_dir: str | Path,
    metadata_path: str | Path,
    out_dir: Optional[str | Path] = None,
    stability: bool = True,
    workers: int = 1,
) -> dict:
    """Full protocol plus stability study; writes artifacts when ``out_dir`` is set.

    ``workers`` is an execution resource, not an experiment parameter: it
    lives outside the config, and the report carries no timestamps or
    environment detail, so identical config and seeds reproduce it byte
    for byte at any worker count.
    """
    transcripts = load_corpus(corpus_dir, metadata_path)
    prepared = prepare_corpus(transcripts)
    chash = config_hash(cfg)

    result = run_protocol(prepared, cfg, cfg.seed)
    report: dict = {
        "format_version": REPORT_FORMAT_VERSION,
        "config_hash": chash,
        "config": config_to_mapping(cfg),
        "pipeline": cfg.pipeline,
        "n_documents": len(prepared),
        "schema": result.fitted.schema.to_descriptor(),
        "split": {
            "train": len(result.plan.train),
            "validation": len(result.plan.validation),
            "test": len(result.plan.test),
        },
        "selected_c": result.selected_c,
        "c_sweep": [
            {"c": c, "validation_accuracy": acc} for c, acc in result.c_sweep
        ],
        "test": {
            "accuracy": result.test_accuracy,
            "auc": result.test_auc,
            "confusion": result.test_confusion.to_dict(),
        },
    }

    if stability:
        stab = run_stability(
            PipelineRepetition(prepared, cfg),
            repetitions=cfg.repetitions,
            base_seed=cfg.seed,
            pipeline_id=cfg.pipeline,
            workers=workers,
        )
        report["stability"] = stab.to_dict()

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(
            json.dumps(report, sort_keys=True, indent=1) + "\n", encoding="utf-8"
        )
        roc_to_csv(result.roc, out / "roc.csv", config_hash=chash)
        _csweep_csv(result.c_sweep, out / "c_sweep.csv", chash)
        if "stability" in report:
            _table_txt(report, out / "table.txt", chash)
        container_mod.save_container(
            build_container(cfg, result, chash), out / "model.json"
        )
    return report
