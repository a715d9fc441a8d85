"""Experiment machinery: splits, metrics, hyperparameter search, stability runs.

Everything here is deterministic given its seed.  Search candidates and
stability repetitions are independent units of work; the engines below can
fan them out over processes while keeping reports byte-identical regardless
of worker count, because each unit owns its seed and results are reduced in
submission order.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    AdscreenError,
    LengthMismatchError,
    SingleClassLabelsError,
    TooFewSamplesError,
)


# -- splitting ---------------------------------------------------------------

@dataclass(frozen=True)
class SplitPlan:
    train: tuple[int, ...]
    validation: tuple[int, ...]
    test: tuple[int, ...]
    seed: int
    ratios: tuple[float, float, float]
    stratified: bool


def _largest_remainder_counts(n: int, ratios: Sequence[float]) -> list[int]:
    exact = [r * n for r in ratios]
    base = [int(np.floor(e)) for e in exact]
    remainder = n - sum(base)
    order = sorted(range(len(ratios)), key=lambda i: -(exact[i] - base[i]))
    for i in order[:remainder]:
        base[i] += 1
    return base


def split(
    labels: Sequence[int],
    seed: int,
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1),
    stratified: bool = True,
) -> SplitPlan:
    """Partition sample indices into train/validation/test sets.

    Stratified mode allocates each class separately, so every split's class
    mix stays within one sample of the overall ratio.  Identical seeds give
    identical plans.
    """
    y = np.asarray(labels)
    n = len(y)
    if n < 10:
        raise TooFewSamplesError(f"need at least 10 labeled samples, got {n}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError("split ratios must sum to 1")
    rng = np.random.default_rng(seed)

    parts: list[list[int]] = [[], [], []]
    if stratified:
        for cls in np.unique(y):
            idx = np.flatnonzero(y == cls)
            rng.shuffle(idx)
            counts = _largest_remainder_counts(len(idx), ratios)
            start = 0
            for part, cnt in zip(parts, counts):
                part.extend(int(i) for i in idx[start : start + cnt])
                start += cnt
    else:
        idx = np.arange(n)
        rng.shuffle(idx)
        counts = _largest_remainder_counts(n, ratios)
        start = 0
        for part, cnt in zip(parts, counts):
            part.extend(int(i) for i in idx[start : start + cnt])
            start += cnt

    return SplitPlan(
        train=tuple(sorted(parts[0])),
        validation=tuple(sorted(parts[1])),
        test=tuple(sorted(parts[2])),
        seed=seed,
        ratios=tuple(ratios),
        stratified=stratified,
    )


# -- metrics -----------------------------------------------------------------

@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def n(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    @property
    def tpr(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def fpr(self) -> float:
        return self.fp / (self.tn + self.fp) if self.tn + self.fp else 0.0

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.n if self.n else 0.0

    def to_dict(self) -> dict:
        return {"tp": self.tp, "tn": self.tn, "fp": self.fp, "fn": self.fn}


def confusion(y_true: Sequence[int], y_pred: Sequence[int]) -> ConfusionMatrix:
    yt = np.asarray(y_true).astype(int)
    yp = np.asarray(y_pred).astype(int)
    if yt.shape != yp.shape:
        raise LengthMismatchError(f"got {yt.shape} true vs {yp.shape} predicted labels")
    return ConfusionMatrix(
        tp=int(np.sum((yt == 1) & (yp == 1))),
        tn=int(np.sum((yt == 0) & (yp == 0))),
        fp=int(np.sum((yt == 0) & (yp == 1))),
        fn=int(np.sum((yt == 1) & (yp == 0))),
    )


def accuracy(y_true: Sequence[int], y_pred: Sequence[int]) -> float:
    cm = confusion(y_true, y_pred)
    return cm.accuracy


@dataclass(frozen=True)
class RocCurve:
    """Operating points from (0,0) to (1,1), with the score cutoff per point.

    Point ``i`` results from predicting positive when score >= threshold[i];
    the initial (0,0) point carries an infinite threshold.
    """

    thresholds: np.ndarray
    fpr: np.ndarray
    tpr: np.ndarray


def roc_auc(y_true: Sequence[int], scores: Sequence[float]) -> tuple[RocCurve, float]:
    """ROC curve over distinct score cutoffs and its trapezoidal area.

    With ties handled by the trapezoid over grouped cutoffs, the area equals
    the probability that a random positive outscores a random negative,
    counting ties as one half.
    """
    y = np.asarray(y_true).astype(int)
    s = np.asarray(scores, dtype=np.float64)
    if y.shape != s.shape:
        raise LengthMismatchError(f"got {y.shape} labels vs {s.shape} scores")
    pos = int(np.sum(y == 1))
    neg = int(np.sum(y == 0))
    if pos == 0 or neg == 0:
        raise SingleClassLabelsError("ROC needs both classes present")

    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    y_sorted = y[order]

    thresholds = [np.inf]
    tps = [0]
    fps = [0]
    tp = fp = 0
    i = 0
    n = len(y)
    while i < n:
        j = i
        while j < n and s_sorted[j] == s_sorted[i]:
            tp += int(y_sorted[j] == 1)
            fp += int(y_sorted[j] == 0)
            j += 1
        thresholds.append(s_sorted[i])
        tps.append(tp)
        fps.append(fp)
        i = j

    tpr = np.array(tps, dtype=np.float64) / pos
    fpr = np.array(fps, dtype=np.float64) / neg
    auc = float(np.trapezoid(tpr, fpr))
    curve = RocCurve(
        thresholds=np.array(thresholds, dtype=np.float64), fpr=fpr, tpr=tpr
    )
    return curve, auc


def roc_to_csv(curve: RocCurve, path, config_hash: str = "") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# format_version=1 config_hash={config_hash}\n")
        fh.write("threshold,fpr,tpr\n")
        for thr, x, yv in zip(curve.thresholds, curve.fpr, curve.tpr):
            fh.write(f"{repr(float(thr))},{repr(float(x))},{repr(float(yv))}\n")


# -- hyperparameter search ---------------------------------------------------

@dataclass(frozen=True)
class SearchSpace:
    """Named hyperparameter -> candidate values, in declaration order."""

    params: tuple[tuple[str, tuple], ...]

    @classmethod
    def from_dict(cls, d: dict) -> "SearchSpace":
        if not d or any(len(v) == 0 for v in d.values()):
            raise ValueError("search space must have non-empty candidate lists")
        return cls(params=tuple((k, tuple(v)) for k, v in d.items()))

    def grid(self) -> list[dict]:
        names = [k for k, _ in self.params]
        lists = [v for _, v in self.params]
        return [dict(zip(names, combo)) for combo in itertools.product(*lists)]

    def sample(self, budget: int, seed: int) -> list[dict]:
        """Random-search subset of the grid, without replacement."""
        full = self.grid()
        if budget >= len(full):
            return full
        rng = np.random.default_rng(seed)
        picks = sorted(rng.choice(len(full), size=budget, replace=False).tolist())
        return [full[i] for i in picks]


@dataclass
class CandidateResult:
    params: dict
    fold_accuracies: list[float] = field(default_factory=list)
    mean_accuracy: Optional[float] = None
    error: Optional[str] = None


def _tie_key(entry: tuple[int, CandidateResult]) -> tuple:
    i, cand = entry
    return (
        -cand.mean_accuracy,
        cand.params.get("c", np.inf),
        cand.params.get("vec_size", np.inf),
        i,
    )


def search_candidates(
    candidates: Sequence[dict],
    eval_fold: Callable[[dict, int], float],
    folds: int,
    seed: int,
) -> tuple[dict, list[CandidateResult]]:
    """Average validation accuracy of each candidate over re-split folds.

    ``eval_fold(params, fold_seed)`` returns one fold's validation accuracy;
    a raised :class:`AdscreenError` marks the candidate failed rather than
    aborting the search.  Ties in mean accuracy go to the smallest ``c``,
    then the smallest ``vec_size``, then declaration order.
    """
    results = []
    for params in candidates:
        cand = CandidateResult(params=dict(params))
        try:
            for f in range(folds):
                cand.fold_accuracies.append(eval_fold(params, seed + 1 + f))
            cand.mean_accuracy = float(np.mean(cand.fold_accuracies))
        except AdscreenError as exc:
            cand.error = f"{type(exc).__name__}: {exc}"
        results.append(cand)

    ok = [(i, c) for i, c in enumerate(results) if c.error is None]
    if not ok:
        raise AdscreenError("every search candidate failed")
    best = min(ok, key=_tie_key)[1]
    return dict(best.params), results


# -- stability ---------------------------------------------------------------

@dataclass
class RepetitionResult:
    repetition: int
    seed: int
    accuracy: float
    auc: float


@dataclass
class StabilityReport:
    pipeline_id: int
    repetitions: int
    results: list[RepetitionResult]
    failures: list[dict]
    population_std: bool = True

    def _agg(self, values: list[float]) -> dict:
        arr = np.asarray(values, dtype=np.float64)
        ddof = 0 if self.population_std else 1
        return {
            "mean": float(arr.mean()) if len(arr) else float("nan"),
            "std": float(arr.std(ddof=ddof)) if len(arr) else float("nan"),
        }

    @property
    def accuracy_stats(self) -> dict:
        return self._agg([r.accuracy for r in self.results])

    @property
    def auc_stats(self) -> dict:
        return self._agg([r.auc for r in self.results])

    def to_dict(self) -> dict:
        return {
            "pipeline_id": self.pipeline_id,
            "repetitions": self.repetitions,
            "population_std": self.population_std,
            "accuracy": self.accuracy_stats,
            "auc": self.auc_stats,
            "per_repetition": [
                {
                    "repetition": r.repetition,
                    "seed": r.seed,
                    "accuracy": r.accuracy,
                    "auc": r.auc,
                }
                for r in self.results
            ],
            "failures": self.failures,
        }


def _safe_repetition(args) -> tuple[int, int, Optional[tuple[float, float]], Optional[str]]:
    repetition_fn, rep, seed = args
    try:
        acc, auc = repetition_fn(seed)
        return rep, seed, (acc, auc), None
    except AdscreenError as exc:
        return rep, seed, None, f"{type(exc).__name__}: {exc}"


def run_stability(
    repetition_fn: Callable[[int], tuple[float, float]],
    repetitions: int,
    base_seed: int,
    pipeline_id: int = 0,
    rep_seeds: Optional[Sequence[int]] = None,
    workers: int = 1,
    population_std: bool = True,
) -> StabilityReport:
    """Repeat split/train/evaluate, collecting per-repetition accuracy and AUC.

    Repetition ``i`` runs with seed ``base_seed + i`` unless ``rep_seeds``
    overrides the schedule.  ``repetition_fn`` must be picklable when
    ``workers > 1``.  Results are reduced in repetition order, so the report
    does not depend on the worker count.
    """
    if repetitions < 2:
        raise ValueError("need at least 2 repetitions")
    seeds = list(rep_seeds) if rep_seeds is not None else [base_seed + i for i in range(repetitions)]
    if len(seeds) != repetitions:
        raise ValueError("rep_seeds length must equal repetitions")

    tasks = [(repetition_fn, i, seeds[i]) for i in range(repetitions)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_safe_repetition, tasks))
    else:
        outcomes = [_safe_repetition(t) for t in tasks]

    results = []
    failures = []
    for rep, seed, ok, err in outcomes:
        if ok is not None:
            results.append(RepetitionResult(rep, seed, ok[0], ok[1]))
        else:
            failures.append({"repetition": rep, "seed": seed, "error": err})
    return StabilityReport(
        pipeline_id=pipeline_id,
        repetitions=repetitions,
        results=results,
        failures=failures,
        population_std=population_std,
    )
