"""Feature families (character n-grams, word n-grams, reference tokens, top
hashtags), sparse vectorization and chi-square feature selection."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import asdict, dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

import numpy as np
from scipy import sparse

from .corpus import Gender, LanguageTag
from .preprocess import ProcessedTweet

VOCAB_MAGIC = "#cmgender-vocabulary"
MASK_MAGIC = "#cmgender-mask"
FORMAT_VERSION = 1


class FeatureKind(str, Enum):
    CHAR_NGRAM = "char"
    WORD_NGRAM = "word"
    REF_TOKEN = "ref"
    HASHTAG = "hashtag"


class FeatureSet(str, Enum):
    CHAR_NGRAMS = "char-ngrams"
    BAG_OF_WORDS = "bag-of-words"
    REF_TOKENS = "ref-tokens"
    TOP_HASHTAGS = "top-hashtags"
    ALL = "all"

    @property
    def kinds(self) -> tuple[FeatureKind, ...]:
        if self is FeatureSet.ALL:
            return tuple(FeatureKind)
        return ({
            FeatureSet.CHAR_NGRAMS: FeatureKind.CHAR_NGRAM,
            FeatureSet.BAG_OF_WORDS: FeatureKind.WORD_NGRAM,
            FeatureSet.REF_TOKENS: FeatureKind.REF_TOKEN,
            FeatureSet.TOP_HASHTAGS: FeatureKind.HASHTAG,
        }[self],)


@dataclass(frozen=True, order=True)
class FeatureId:
    kind: FeatureKind
    payload: str
    order: int = 1
    lang: str = ""  # only set for reference tokens (Hi / En dictionary)

    def __post_init__(self):
        if not self.payload:
            raise ValueError("feature payload must be non-empty")
        if self.order < 1:
            raise ValueError("feature order must be >= 1")


@dataclass(frozen=True)
class FeatureConfig:
    char_n: tuple[int, int] = (2, 5)
    word_n: tuple[int, int] = (1, 3)
    min_freq: int = 10
    ref_min_score: float = 0.6
    ref_min_freq: int = 2
    top_hashtags: int = 50
    k_best: int = 1000
    char_padding: bool = False

    def __post_init__(self):
        for lo, hi in (self.char_n, self.word_n):
            if not 1 <= lo <= hi:
                raise ValueError(f"invalid n-gram range ({lo}, {hi})")
        if self.min_freq < 1 or self.ref_min_freq < 1:
            raise ValueError("frequency thresholds must be >= 1")
        if self.top_hashtags < 1 or self.k_best < 1:
            raise ValueError("top_hashtags and k_best must be >= 1")

    def as_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureConfig":
        d = dict(d)
        for key in ("char_n", "word_n"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


# ---------------------------------------------------------------------------
# sparse containers

@dataclass(frozen=True)
class SparseVector:
    dimension: int
    indices: tuple[int, ...] = ()
    values: tuple[float, ...] = ()

    def __post_init__(self):
        if len(self.indices) != len(self.values):
            raise ValueError("indices and values differ in length")
        prev = -1
        for i in self.indices:
            if i <= prev or i >= self.dimension:
                raise ValueError("indices must be strictly increasing and < dimension")
            prev = i
        if any(v == 0 for v in self.values):
            raise ValueError("explicit zeros are not stored")

    @classmethod
    def from_counts(cls, dimension: int, counts: dict[int, float]) -> "SparseVector":
        items = sorted((i, v) for i, v in counts.items() if v != 0)
        return cls(dimension, tuple(i for i, _ in items), tuple(v for _, v in items))

    @classmethod
    def from_dense(cls, row: Sequence[float]) -> "SparseVector":
        return cls.from_counts(len(row), {i: v for i, v in enumerate(row) if v != 0})

    def get(self, i: int) -> float:
        lo, hi = 0, len(self.indices)
        while lo < hi:
            mid = (lo + hi) // 2
            if self.indices[mid] < i:
                lo = mid + 1
            else:
                hi = mid
        if lo < len(self.indices) and self.indices[lo] == i:
            return self.values[lo]
        return 0

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dimension)
        out[list(self.indices)] = self.values
        return out

    def items(self) -> Iterator[tuple[int, float]]:
        return zip(self.indices, self.values)


@dataclass(frozen=True)
class FeatureMatrix:
    rows: tuple[SparseVector, ...]
    labels: tuple[Gender, ...]
    authors: tuple[str, ...]
    ids: tuple[str, ...] = ()
    dimension: int = 0

    def __post_init__(self):
        if not (len(self.rows) == len(self.labels) == len(self.authors)):
            raise ValueError("rows, labels and authors must align")
        if self.ids and len(self.ids) != len(self.rows):
            raise ValueError("ids must align with rows")
        if any(r.dimension != self.dimension for r in self.rows):
            raise ValueError("all rows must share the matrix dimension")

    def __len__(self) -> int:
        return len(self.rows)

    @classmethod
    def from_dense(cls, X, labels, authors=None, ids=()) -> "FeatureMatrix":
        X = np.asarray(X, dtype=float)
        authors = tuple(authors) if authors is not None else tuple(str(i) for i in range(len(X)))
        return cls(tuple(SparseVector.from_dense(r) for r in X), tuple(labels), authors,
                   tuple(ids), X.shape[1] if X.ndim == 2 else 0)

    def to_dense(self) -> np.ndarray:
        out = np.zeros((len(self.rows), self.dimension))
        for r, vec in enumerate(self.rows):
            out[r, list(vec.indices)] = vec.values
        return out

    def to_csr(self) -> sparse.csr_matrix:
        indptr = [0]
        indices: list[int] = []
        data: list[float] = []
        for vec in self.rows:
            indices.extend(vec.indices)
            data.extend(vec.values)
            indptr.append(len(indices))
        return sparse.csr_matrix((np.asarray(data, dtype=float), indices, indptr),
                                 shape=(len(self.rows), self.dimension))

    def signs(self) -> np.ndarray:
        return np.array([g.sign for g in self.labels], dtype=float)

    def subset(self, rows: Sequence[int]) -> "FeatureMatrix":
        return FeatureMatrix(
            tuple(self.rows[i] for i in rows),
            tuple(self.labels[i] for i in rows),
            tuple(self.authors[i] for i in rows),
            tuple(self.ids[i] for i in rows) if self.ids else (),
            self.dimension,
        )


# ---------------------------------------------------------------------------
# n-gram enumeration

def char_ngrams(token: str, n_min: int, n_max: int, pad: bool = False) -> Iterator[str]:
    if pad:
        token = f" {token} "
    L = len(token)
    for n in range(n_min, min(n_max, L) + 1):
        for i in range(L - n + 1):
            yield token[i:i + n]


def word_ngrams(tokens: Sequence[str], n_min: int, n_max: int) -> Iterator[str]:
    L = len(tokens)
    for n in range(n_min, min(n_max, L) + 1):
        for i in range(L - n + 1):
            yield " ".join(tokens[i:i + n])


def fit_char_ngrams(corpus: Iterable[ProcessedTweet], n_min: int = 2, n_max: int = 5,
                    min_freq: int = 10, pad: bool = False) -> list[FeatureId]:
    if n_min > n_max or min_freq < 1:
        raise ValueError("need n_min <= n_max and min_freq >= 1")
    counts: Counter = Counter()
    for t in corpus:
        for tok in t.tokens:
            counts.update(char_ngrams(tok, n_min, n_max, pad))
    return sorted(FeatureId(FeatureKind.CHAR_NGRAM, g, len(g))
                  for g, c in counts.items() if c >= min_freq)


def fit_word_ngrams(corpus: Iterable[ProcessedTweet], n_min: int = 1, n_max: int = 3,
                    min_freq: int = 10) -> list[FeatureId]:
    if n_min > n_max or min_freq < 1:
        raise ValueError("need n_min <= n_max and min_freq >= 1")
    counts: Counter = Counter()
    for t in corpus:
        counts.update(word_ngrams(t.tokens, n_min, n_max))
    return sorted(FeatureId(FeatureKind.WORD_NGRAM, g, g.count(" ") + 1)
                  for g, c in counts.items() if c >= min_freq)


# ---------------------------------------------------------------------------
# reference tokens

@dataclass(frozen=True)
class RefTokenEntry:
    freq_male: int
    freq_female: int

    @property
    def total(self) -> int:
        return self.freq_male + self.freq_female

    @property
    def score(self) -> Fraction:
        return Fraction(max(self.freq_male, self.freq_female), self.total)


@dataclass(frozen=True)
class RefTokenTable:
    hi: dict[str, RefTokenEntry] = field(default_factory=dict)
    en: dict[str, RefTokenEntry] = field(default_factory=dict)

    def fragment(self) -> list[FeatureId]:
        out = [FeatureId(FeatureKind.REF_TOKEN, tok, 1, LanguageTag.HI.value) for tok in self.hi]
        out += [FeatureId(FeatureKind.REF_TOKEN, tok, 1, LanguageTag.EN.value) for tok in self.en]
        return sorted(out)


def token_class_counts(corpus: Iterable[ProcessedTweet]) -> dict[LanguageTag, dict[str, list[int]]]:
    """Per-language token frequencies split by gender: token -> [male, female]."""
    table: dict[LanguageTag, dict[str, list[int]]] = {LanguageTag.HI: {}, LanguageTag.EN: {}}
    for t in corpus:
        col = 0 if t.gender is Gender.MALE else 1
        for tok, lang in zip(t.tokens, t.langs):
            if lang is LanguageTag.O:
                continue
            table[lang].setdefault(tok, [0, 0])[col] += 1
    return table


def fit_reference_tokens(corpus: Iterable[ProcessedTweet], min_score: float = 0.6,
                         min_freq: int = 2) -> RefTokenTable:
    """Keep tokens whose majority-class share is >= ``min_score`` and whose
    training frequency is >= ``min_freq``; Hindi and English are kept apart."""
    threshold = Fraction(min_score).limit_denominator(10**6)
    kept: dict[LanguageTag, dict[str, RefTokenEntry]] = {}
    for lang, counts in token_class_counts(corpus).items():
        kept[lang] = {}
        for tok, (m, f) in sorted(counts.items()):
            entry = RefTokenEntry(m, f)
            if entry.total >= min_freq and entry.score >= threshold:
                kept[lang][tok] = entry
    return RefTokenTable(kept[LanguageTag.HI], kept[LanguageTag.EN])


def fit_top_hashtags(corpus: Iterable[ProcessedTweet], k: int = 50) -> list[FeatureId]:
    if k < 1:
        raise ValueError("k must be >= 1")
    counts = Counter(h for t in corpus for h in t.hashtags)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:k]
    return sorted(FeatureId(FeatureKind.HASHTAG, h) for h, _ in ranked)


# ---------------------------------------------------------------------------
# vocabulary

class Vocabulary:
    """Frozen bijection between :class:`FeatureId` and column index."""

    def __init__(self, features: Sequence[FeatureId], config: FeatureConfig | None = None):
        self.features: tuple[FeatureId, ...] = tuple(features)
        self.config = config or FeatureConfig()
        self.index = {f: i for i, f in enumerate(self.features)}
        if len(self.index) != len(self.features):
            raise ValueError("duplicate feature ids")
        self._char: dict[str, int] = {}
        self._word: dict[str, int] = {}
        self._ref: dict[tuple[str, str], int] = {}
        self._hashtag: dict[str, int] = {}
        for i, f in enumerate(self.features):
            if f.kind is FeatureKind.CHAR_NGRAM:
                self._char[f.payload] = i
            elif f.kind is FeatureKind.WORD_NGRAM:
                self._word[f.payload] = i
            elif f.kind is FeatureKind.REF_TOKEN:
                self._ref[(f.lang, f.payload)] = i
            else:
                self._hashtag[f.payload] = i

    def __len__(self) -> int:
        return len(self.features)

    @property
    def dimension(self) -> int:
        return len(self.features)

    def __eq__(self, other) -> bool:
        return (isinstance(other, Vocabulary) and self.features == other.features
                and self.config == other.config)

    def kinds(self) -> set[FeatureKind]:
        return {f.kind for f in self.features}

    def describe(self, i: int) -> str:
        f = self.features[i]
        lang = f"[{f.lang}]" if f.lang else ""
        return f"{f.kind.value}{lang}:{f.payload}"

    def vectorize(self, t: ProcessedTweet) -> SparseVector:
        cfg = self.config
        counts: Counter = Counter()
        if self._char:
            lo, hi = cfg.char_n
            idx = self._char
            for tok in t.tokens:
                for g in char_ngrams(tok, lo, hi, cfg.char_padding):
                    j = idx.get(g)
                    if j is not None:
                        counts[j] += 1
        if self._word:
            lo, hi = cfg.word_n
            idx = self._word
            for g in word_ngrams(t.tokens, lo, hi):
                j = idx.get(g)
                if j is not None:
                    counts[j] += 1
        if self._ref:
            for tok, lang in zip(t.tokens, t.langs):
                j = self._ref.get((lang.value, tok))
                if j is not None:
                    counts[j] += 1
        if self._hashtag:
            for h in set(t.hashtags):
                j = self._hashtag.get(h)
                if j is not None:
                    counts[j] = 1
        return SparseVector.from_counts(self.dimension, counts)

    def dumps(self) -> str:
        header = json.dumps({"version": FORMAT_VERSION, "config": self.config.as_dict()},
                            sort_keys=True)
        lines = [f"{VOCAB_MAGIC}\t{header}"]
        lines += [f"{f.kind.value}\t{f.payload}\t{f.order}\t{f.lang}\t{i}"
                  for i, f in enumerate(self.features)]
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "Vocabulary":
        lines = text.rstrip("\n").split("\n")
        magic, _, header = lines[0].partition("\t")
        if magic != VOCAB_MAGIC:
            raise ValueError("not a vocabulary file")
        meta = json.loads(header)
        if meta.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported vocabulary version {meta.get('version')}")
        feats = []
        for n, line in enumerate(lines[1:]):
            kind, payload, order, lang, idx = line.split("\t")
            if int(idx) != n:
                raise ValueError(f"vocabulary index {idx} out of sequence")
            feats.append(FeatureId(FeatureKind(kind), payload, int(order), lang))
        return cls(feats, FeatureConfig.from_dict(meta["config"]))


def fit_vocabulary(corpus: Sequence[ProcessedTweet], featureset: FeatureSet = FeatureSet.ALL,
                   config: FeatureConfig | None = None) -> Vocabulary:
    cfg = config or FeatureConfig()
    kinds = FeatureSet(featureset).kinds
    feats: list[FeatureId] = []
    if FeatureKind.CHAR_NGRAM in kinds:
        feats += fit_char_ngrams(corpus, *cfg.char_n, cfg.min_freq, cfg.char_padding)
    if FeatureKind.WORD_NGRAM in kinds:
        feats += fit_word_ngrams(corpus, *cfg.word_n, cfg.min_freq)
    if FeatureKind.REF_TOKEN in kinds:
        feats += fit_reference_tokens(corpus, cfg.ref_min_score, cfg.ref_min_freq).fragment()
    if FeatureKind.HASHTAG in kinds:
        feats += fit_top_hashtags(corpus, cfg.top_hashtags)
    return Vocabulary(feats, cfg)


def vectorize(t: ProcessedTweet, v) -> SparseVector:
    return v.vectorize(t)


def build_matrix(corpus: Sequence[ProcessedTweet], v) -> FeatureMatrix:
    return FeatureMatrix(
        tuple(v.vectorize(t) for t in corpus),
        tuple(t.gender for t in corpus),
        tuple(t.author_id for t in corpus),
        tuple(t.id for t in corpus),
        v.dimension,
    )


# ---------------------------------------------------------------------------
# language-partitioned featurization

def restrict_language(t: ProcessedTweet, lang: LanguageTag) -> ProcessedTweet:
    keep = [i for i, g in enumerate(t.langs) if g is lang]
    return ProcessedTweet(t.id, tuple(t.tokens[i] for i in keep), tuple(t.langs[i] for i in keep),
                          (), 0, 0, t.gender, t.author_id)


class PartitionedVocabulary:
    """Separate Hindi and English vocabularies whose vectors are concatenated."""

    def __init__(self, hi: Vocabulary, en: Vocabulary):
        self.hi = hi
        self.en = en

    @property
    def dimension(self) -> int:
        return self.hi.dimension + self.en.dimension

    def describe(self, i: int) -> str:
        if i < self.hi.dimension:
            return "Hi/" + self.hi.describe(i)
        return "En/" + self.en.describe(i - self.hi.dimension)

    def vectorize(self, t: ProcessedTweet) -> SparseVector:
        a = self.hi.vectorize(restrict_language(t, LanguageTag.HI))
        b = self.en.vectorize(restrict_language(t, LanguageTag.EN))
        off = self.hi.dimension
        return SparseVector(self.dimension, a.indices + tuple(i + off for i in b.indices),
                            a.values + b.values)


def fit_partitioned(corpus: Sequence[ProcessedTweet],
                    featureset: FeatureSet = FeatureSet.BAG_OF_WORDS,
                    config: FeatureConfig | None = None) -> PartitionedVocabulary:
    hi = fit_vocabulary([restrict_language(t, LanguageTag.HI) for t in corpus], featureset, config)
    en = fit_vocabulary([restrict_language(t, LanguageTag.EN) for t in corpus], featureset, config)
    return PartitionedVocabulary(hi, en)


# ---------------------------------------------------------------------------
# chi-square selection

@dataclass(frozen=True)
class SelectionMask:
    dimension: int
    indices: tuple[int, ...]
    scores: tuple[float, ...]  # aligned with indices

    def __len__(self) -> int:
        return len(self.indices)

    def dumps(self) -> str:
        header = json.dumps({"version": FORMAT_VERSION, "dimension": self.dimension})
        lines = [f"{MASK_MAGIC}\t{header}"]
        lines += [f"{i}\t{s!r}" for i, s in zip(self.indices, self.scores)]
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "SelectionMask":
        lines = text.rstrip("\n").split("\n")
        magic, _, header = lines[0].partition("\t")
        if magic != MASK_MAGIC:
            raise ValueError("not a selection mask file")
        meta = json.loads(header)
        if meta.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported mask version {meta.get('version')}")
        pairs = [line.split("\t") for line in lines[1:]]
        return cls(meta["dimension"], tuple(int(i) for i, _ in pairs),
                   tuple(float(s) for _, s in pairs))


def _contingency(m: FeatureMatrix) -> tuple[np.ndarray, np.ndarray, int, int]:
    """Per-column presence counts among male (A) and female (B) rows."""
    X = m.to_csr()
    X.data = (X.data != 0).astype(np.int64)
    male = np.array([g is Gender.MALE for g in m.labels])
    A = np.asarray(X[male].sum(axis=0)).ravel().astype(np.int64)
    B = np.asarray(X[~male].sum(axis=0)).ravel().astype(np.int64)
    return A, B, int(male.sum()), int((~male).sum())


def chi_square_terms(m: FeatureMatrix) -> list[tuple[int, int]]:
    """Exact (numerator, denominator) of each column's chi-square statistic;
    columns with a zero marginal give (0, 1)."""
    A, B, n_m, n_f = _contingency(m)
    N = n_m + n_f
    out = []
    for a, b in zip(A.tolist(), B.tolist()):
        c, d = n_m - a, n_f - b
        den = (a + b) * (c + d) * n_m * n_f
        out.append((N * (a * d - b * c) ** 2, den) if den else (0, 1))
    return out


def chi_square_scores(m: FeatureMatrix) -> np.ndarray:
    return np.array([num / den for num, den in chi_square_terms(m)], dtype=float)


def chi_square_select(m: FeatureMatrix, k: int = 1000) -> SelectionMask:
    """Keep the ``k`` columns with the largest positive chi-square score
    (ties to the lower index); the kept indices are returned sorted."""
    if k <= 0:
        raise ValueError("k must be positive")
    terms = chi_square_terms(m)
    ranked = sorted((j for j, (num, _) in enumerate(terms) if num > 0),
                    key=lambda j: (-Fraction(*terms[j]), j))[:k]
    keep = sorted(ranked)
    return SelectionMask(m.dimension, tuple(keep), tuple(terms[j][0] / terms[j][1] for j in keep))


def apply_mask(x: SparseVector, mask: SelectionMask, _pos: dict[int, int] | None = None) -> SparseVector:
    if x.dimension != mask.dimension:
        raise ValueError(f"vector dimension {x.dimension} != mask dimension {mask.dimension}")
    pos = _pos if _pos is not None else {j: i for i, j in enumerate(mask.indices)}
    counts = {pos[j]: v for j, v in x.items() if j in pos}
    return SparseVector.from_counts(len(mask.indices), counts)


def apply_mask_matrix(m: FeatureMatrix, mask: SelectionMask) -> FeatureMatrix:
    pos = {j: i for i, j in enumerate(mask.indices)}
    return FeatureMatrix(tuple(apply_mask(r, mask, pos) for r in m.rows), m.labels, m.authors,
                         m.ids, len(mask.indices))
