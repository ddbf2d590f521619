"""Author-grouped k-fold cross-validation and the feature x classifier
experiment table."""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .corpus import Corpus, Gender
from .features import FeatureConfig, FeatureSet
from .folds import FoldAssignment, FoldError, assign_folds
from .learners import ModelKind, ModelSpec
from .pipeline import LeakageAudit, accuracy, fit_featurizer, fit_pipeline
from .preprocess import ProcessedTweet, SpellingMap, preprocess_corpus

# Mean accuracies (%) reported for the original 4015-tweet corpus. They are
# printed as context only: that corpus is not distributed.
REFERENCE_ACCURACY = {
    ModelKind.NAIVE_BAYES: {"char-ngrams": 87.3, "bag-of-words": 78.3, "ref-tokens": 71.0,
                            "top-hashtags": 54.5, "all": 85.0},
    ModelKind.SVM_RBF: {"char-ngrams": 89.7, "bag-of-words": 83.6, "ref-tokens": 87.5,
                        "top-hashtags": 56.4, "all": 89.5},
    ModelKind.RANDOM_FOREST: {"char-ngrams": 85.6, "bag-of-words": 84.5, "ref-tokens": 85.8,
                              "top-hashtags": 54.6, "all": 88.4},
}

FEATURESET_TITLES = {
    FeatureSet.CHAR_NGRAMS: "Character N grams",
    FeatureSet.BAG_OF_WORDS: "Bag-of-words",
    FeatureSet.REF_TOKENS: "Reference Tokens",
    FeatureSet.TOP_HASHTAGS: "Top Hashtags",
    FeatureSet.ALL: "All features",
}


class EvaluationError(ValueError):
    pass


def make_grouped_folds(c: Corpus | Sequence[str], k: int = 10, seed: int = 0) -> FoldAssignment:
    authors = [t.author_id for t in c.tweets] if isinstance(c, Corpus) else list(c)
    return assign_folds(authors, k, seed)


@dataclass
class FoldResult:
    fold: int
    accuracy: float
    n_test: int
    n_train: int
    confusion: dict[str, int]
    best_params: dict
    dimension: int


@dataclass
class CVReport:
    folds: list[FoldResult]
    fingerprint: dict = field(default_factory=dict)

    @property
    def fold_accuracies(self) -> list[float]:
        return [f.accuracy for f in self.folds]

    @property
    def mean_accuracy(self) -> float:
        accs = self.fold_accuracies
        return sum(accs) / len(accs) if accs else 0.0

    def as_dict(self) -> dict:
        return {
            "mean_accuracy": self.mean_accuracy,
            "fold_accuracies": self.fold_accuracies,
            "folds": [vars(f) for f in self.folds],
            "fingerprint": self.fingerprint,
        }

    def render(self) -> str:
        lines = [f"{'fold':>4}  {'train':>6}  {'test':>5}  {'dim':>5}  accuracy"]
        for f in self.folds:
            lines.append(f"{f.fold:>4}  {f.n_train:>6}  {f.n_test:>5}  {f.dimension:>5}  "
                         f"{f.accuracy:.4f}")
        lines.append(f"mean accuracy: {self.mean_accuracy:.4f}")
        lines.append("config: " + json.dumps(self.fingerprint, sort_keys=True))
        return "\n".join(lines)


def _confusion(pred, gold) -> dict[str, int]:
    out = {f"{g.value}->{p.value}": 0 for g in Gender for p in Gender}
    for p, g in zip(pred, gold):
        out[f"{g.value}->{p.value}"] += 1
    return out


def _by_id(tweets: list[ProcessedTweet]) -> list[ProcessedTweet]:
    return sorted(tweets, key=lambda t: t.id)


def _run_fold(args) -> tuple[FoldResult, LeakageAudit]:
    (fold, train, test, featureset, spec, config, seed, partitioned, inner_folds,
     featurizer) = args
    if len({t.gender for t in train}) < 2:
        raise EvaluationError(f"fold {fold}: training partition lacks a class")
    audit = LeakageAudit()
    pipe = fit_pipeline(train, featureset, spec, config, seed, partitioned, inner_folds,
                        featurizer=featurizer, audit=audit, audit_key=fold)
    pred = pipe.predict(test)
    gold = [t.gender for t in test]
    res = FoldResult(fold, accuracy(pred, gold), len(test), len(train), _confusion(pred, gold),
                     pipe.grid.best if pipe.grid else dict(spec.candidates()[0]), pipe.dimension)
    return res, audit


def fingerprint(featureset: FeatureSet, spec: ModelSpec, config: FeatureConfig, seed: int,
                k: int, **extra) -> dict:
    fp = {"featureset": featureset.value, "model": spec.as_dict(),
          "features": config.as_dict(), "seed": seed, "folds": k, **extra}
    fp["digest"] = hashlib.sha256(json.dumps(fp, sort_keys=True, default=str)
                                  .encode()).hexdigest()[:16]
    return fp


def cross_validate(c: Corpus, featureset: FeatureSet | str, spec: ModelSpec,
                   folds: FoldAssignment, config: FeatureConfig | None = None,
                   spelling: Mapping[str, str] | None = None, seed: int = 0,
                   partitioned: bool = False, global_fit: bool = False, inner_folds: int = 3,
                   jobs: int = 1, audit: LeakageAudit | None = None,
                   processed: list[ProcessedTweet] | None = None) -> CVReport:
    """Grouped k-fold CV. Every fitted artifact sees training tweets only,
    unless ``global_fit`` asks for the vocabulary to be fit on the full corpus."""
    featureset = FeatureSet(featureset)
    cfg = config or FeatureConfig()
    if len(folds.fold_of) != len(c.tweets):
        raise EvaluationError("fold assignment does not match the corpus")
    tweets = processed if processed is not None else preprocess_corpus(c.tweets, spelling)
    shared = None
    if global_fit:
        shared = fit_featurizer(_by_id(tweets), featureset, cfg, partitioned)
    jobs_args = []
    for f in range(folds.k):
        train = _by_id([tweets[i] for i in folds.train_rows(f)])
        test = _by_id([tweets[i] for i in folds.test_rows(f)])
        jobs_args.append((f, train, test, featureset, spec, cfg, seed, partitioned,
                          inner_folds, shared))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_run_fold, jobs_args))
    else:
        results = [_run_fold(a) for a in jobs_args]
    if audit is not None:
        for _, a in results:
            audit.merge(a)
        if global_fit:
            for f in range(folds.k):
                audit.record(f, "vocabulary", [t.id for t in tweets])
    fp = fingerprint(featureset, spec, cfg, seed, folds.k, partitioned=partitioned,
                     global_fit=global_fit, inner_folds=inner_folds)
    return CVReport([r for r, _ in results], fp)


@dataclass
class ExperimentTable:
    featuresets: list[FeatureSet]
    classifiers: list[ModelKind]
    cells: dict[tuple[FeatureSet, ModelKind], float]
    reports: dict[tuple[FeatureSet, ModelKind], CVReport]
    fingerprint: dict = field(default_factory=dict)

    def complete(self) -> bool:
        return all((f, k) in self.cells for f in self.featuresets for k in self.classifiers)

    def as_dict(self) -> dict:
        return {
            "cells": {f"{f.value}/{k.value}": v for (f, k), v in self.cells.items()},
            "reports": {f"{f.value}/{k.value}": r.as_dict() for (f, k), r in self.reports.items()},
            "fingerprint": self.fingerprint,
        }

    def render(self) -> str:
        out = []
        w = max(len(FEATURESET_TITLES[f]) for f in self.featuresets)
        w = max(w, len("Features (in %)"))
        for k in self.classifiers:
            out.append(f"Accuracy of each feature using {k.title}")
            out.append(f"{'Features (in %)':<{w}}  {k.title:>14}")
            for f in self.featuresets:
                out.append(f"{FEATURESET_TITLES[f]:<{w}}  {100 * self.cells[(f, k)]:>14.1f}")
            out.append("")
        header = f"{'Features (in %)':<{w}}" + "".join(f"  {k.title:>14}" for k in self.classifiers)
        out.append("Combined")
        out.append(header)
        for f in self.featuresets:
            out.append(f"{FEATURESET_TITLES[f]:<{w}}"
                       + "".join(f"  {100 * self.cells[(f, k)]:>14.1f}" for k in self.classifiers))
        out.append("")
        out.append("config: " + json.dumps(self.fingerprint, sort_keys=True, default=str))
        out.append("")
        out.append("Reference accuracies reported on the original 4015-tweet corpus "
                   "(not reproducible here; that corpus is not distributed):")
        out.append(f"{'Features (in %)':<{w}}" + "".join(f"  {k.title:>14}" for k in self.classifiers))
        for f in self.featuresets:
            out.append(f"{FEATURESET_TITLES[f]:<{w}}" + "".join(
                f"  {REFERENCE_ACCURACY[k][f.value]:>14.1f}" for k in self.classifiers))
        return "\n".join(out)


def run_experiment_table(c: Corpus, specs: Mapping[ModelKind, ModelSpec] | Sequence[ModelSpec],
                         folds: FoldAssignment,
                         featuresets: Sequence[FeatureSet] = tuple(FeatureSet),
                         config: FeatureConfig | None = None,
                         spelling: Mapping[str, str] | None = None, seed: int = 0,
                         **cv_kwargs) -> ExperimentTable:
    if not isinstance(specs, Mapping):
        specs = {s.kind: s for s in specs}
    cfg = config or FeatureConfig()
    processed = preprocess_corpus(c.tweets, spelling)
    cells, reports = {}, {}
    for fs in featuresets:
        for kind, spec in specs.items():
            rep = cross_validate(c, fs, spec, folds, cfg, seed=seed, processed=processed,
                                 **cv_kwargs)
            cells[(fs, kind)] = rep.mean_accuracy
            reports[(fs, kind)] = rep
    fp = {"seed": seed, "folds": folds.k, "features": cfg.as_dict(),
          "models": {k.value: s.as_dict() for k, s in specs.items()}}
    return ExperimentTable(list(featuresets), list(specs), cells, reports, fp)


__all__ = [
    "CVReport", "EvaluationError", "ExperimentTable", "FoldAssignment", "FoldError", "FoldResult",
    "LeakageAudit", "REFERENCE_ACCURACY", "SpellingMap", "cross_validate", "make_grouped_folds",
    "run_experiment_table",
]
