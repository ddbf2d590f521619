"""Featurize -> chi-square select -> (grid search) -> train, as one fitted object."""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .corpus import Gender
from .features import (
    FeatureConfig,
    FeatureMatrix,
    FeatureSet,
    PartitionedVocabulary,
    SelectionMask,
    Vocabulary,
    apply_mask,
    apply_mask_matrix,
    build_matrix,
    chi_square_select,
    fit_partitioned,
    fit_vocabulary,
)
from .folds import assign_folds
from .learners import (
    GridResult,
    ModelSpec,
    grid_search,
    model_from_dict,
    model_to_dict,
    train_arrays,
)
from .preprocess import ProcessedTweet

PIPELINE_FORMAT_VERSION = 1


@dataclass
class LeakageAudit:
    """Records which tweet ids fed each fitted artifact, per fold."""

    records: dict = field(default_factory=lambda: defaultdict(dict))

    def record(self, fold, artifact: str, ids) -> None:
        self.records[fold].setdefault(artifact, set()).update(ids)

    def merge(self, other: "LeakageAudit") -> None:
        for fold, arts in other.records.items():
            for art, ids in arts.items():
                self.record(fold, art, ids)

    def contributors(self, fold) -> set[str]:
        return set().union(*self.records.get(fold, {}).values())


@dataclass
class Pipeline:
    featurizer: Vocabulary | PartitionedVocabulary
    mask: SelectionMask
    model: object
    featureset: FeatureSet
    grid: GridResult | None = None

    @property
    def dimension(self) -> int:
        return len(self.mask)

    def transform(self, tweets: Sequence[ProcessedTweet]) -> FeatureMatrix:
        return apply_mask_matrix(build_matrix(tweets, self.featurizer), self.mask)

    def predict(self, tweets: Sequence[ProcessedTweet]) -> list[Gender]:
        if not tweets:
            return []
        X = self.transform(tweets).to_dense()
        return [Gender.from_sign(s) for s in self.model.predict_signs(X)]

    def predict_one(self, t: ProcessedTweet) -> Gender:
        x = apply_mask(self.featurizer.vectorize(t), self.mask)
        return Gender.from_sign(float(self.model.predict_signs(x.to_dense()[None, :])[0]))

    def dumps(self) -> str:
        if isinstance(self.featurizer, PartitionedVocabulary):
            feat = {"partitioned": True, "hi": self.featurizer.hi.dumps(),
                    "en": self.featurizer.en.dumps()}
        else:
            feat = {"partitioned": False, "vocabulary": self.featurizer.dumps()}
        return json.dumps({
            "format": "cmgender-pipeline",
            "version": PIPELINE_FORMAT_VERSION,
            "featureset": self.featureset.value,
            "featurizer": feat,
            "mask": self.mask.dumps(),
            "model": model_to_dict(self.model),
        })

    @classmethod
    def loads(cls, text: str) -> "Pipeline":
        d = json.loads(text)
        if d.get("format") != "cmgender-pipeline" or d.get("version") != PIPELINE_FORMAT_VERSION:
            raise ValueError("not a pipeline file of a supported version")
        f = d["featurizer"]
        if f["partitioned"]:
            feat = PartitionedVocabulary(Vocabulary.loads(f["hi"]), Vocabulary.loads(f["en"]))
        else:
            feat = Vocabulary.loads(f["vocabulary"])
        return cls(feat, SelectionMask.loads(d["mask"]), model_from_dict(d["model"]),
                   FeatureSet(d["featureset"]))


def fit_featurizer(tweets: Sequence[ProcessedTweet], featureset: FeatureSet,
                   config: FeatureConfig, partitioned: bool = False):
    if partitioned:
        return fit_partitioned(tweets, featureset, config)
    return fit_vocabulary(tweets, featureset, config)


def fit_pipeline(tweets: Sequence[ProcessedTweet], featureset: FeatureSet, spec: ModelSpec,
                 config: FeatureConfig | None = None, seed: int = 0, partitioned: bool = False,
                 inner_folds: int = 3, featurizer=None, audit: LeakageAudit | None = None,
                 audit_key=None) -> Pipeline:
    """Fit every artifact on ``tweets`` only. A prefit ``featurizer`` may be
    passed (used for the global-fit reading of the frequency thresholds)."""
    featureset = FeatureSet(featureset)
    cfg = config or FeatureConfig()
    ids = [t.id for t in tweets]
    if featurizer is None:
        featurizer = fit_featurizer(tweets, featureset, cfg, partitioned)
        if audit is not None:
            audit.record(audit_key, "vocabulary", ids)
    m = build_matrix(tweets, featurizer)
    mask = chi_square_select(m, cfg.k_best)
    if audit is not None:
        audit.record(audit_key, "selection", m.ids)
    m = apply_mask_matrix(m, mask)

    grid = None
    params = spec.params
    if len(spec.candidates()) > 1:
        n_auth = len(set(m.authors))
        if n_auth >= 2:
            inner = assign_folds(list(m.authors), min(inner_folds, n_auth), seed)
            grid = grid_search(spec, m, inner)
            params = grid.best
        else:
            params = spec.candidates()[0]
    if audit is not None:
        audit.record(audit_key, "model", m.ids)
    model = train_arrays(spec.kind, params, m.to_dense(), m.signs())
    return Pipeline(featurizer, mask, model, featureset, grid)


def accuracy(pred: Sequence[Gender], gold: Sequence[Gender]) -> float:
    if not gold:
        return 0.0
    return float(np.mean([p is g for p, g in zip(pred, gold)]))
