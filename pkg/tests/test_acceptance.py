"""Acceptance criteria. Each test carries an ``acceptance`` marker; the run
ends with one PASS/FAIL line per criterion (see conftest.py)."""

import io
import itertools
import math
import random
import time
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from cmgender.cli import main
from cmgender.corpus import (
    AnnotatedToken,
    AnnotatedTweet,
    Corpus,
    Gender,
    LanguageTag,
    compute_stats,
    parse_corpus,
    read_corpus,
    serialize_corpus,
)
from cmgender.datagen import GenConfig, generate
from cmgender.evaluation import cross_validate, make_grouped_folds
from cmgender.features import (
    FeatureConfig,
    FeatureKind,
    FeatureMatrix,
    FeatureSet,
    chi_square_scores,
    chi_square_select,
    fit_reference_tokens,
    fit_vocabulary,
)
from cmgender.learners import ModelSpec
from cmgender.learners.forest import build_tree, fit_random_forest
from cmgender.learners.naive_bayes import fit_naive_bayes
from cmgender.learners.svm import dual_objective, fit_svm, rbf_matrix, solve_smo
from cmgender.pipeline import LeakageAudit, accuracy, fit_pipeline
from cmgender.preprocess import preprocess_corpus
from helpers import brute_chi_square, brute_top_k
from test_corpus import TEN_TALLY

ROUND_TRIP = "format round-trip (500 corpora + fixture tally, < 10 s)"
CHI = "chi-square oracle (200 matrices, 1e-9, identical top-k, < 30 s)"
NB = "naive Bayes oracle (1e-12)"
SVM = "SVM correctness (KKT, XOR, dual vs alpha-grid, < 60 s)"
RF = "random forest (root split, bit-identical, planted accuracy >= 0.9)"
CV = "grouped CV soundness (100 corpora, no split authors, +-1 balance, no leakage)"
E2E = "end-to-end CLI (p=0.9 -> >= 0.90, p=0.5 -> 0.5 +- 0.07, < 5 min)"
THRESH = "threshold conformance (n-gram freq >= 10, ref score/freq, dim <= 1000)"

_SURFACE_CHARS = "abcxyzKLM019#@!?.,&<>\"'/_-काé\U0001F600"


def _random_corpus(rng: random.Random) -> Corpus:
    tweets = []
    for i in range(rng.randint(0, 12)):
        toks = tuple(
            AnnotatedToken("".join(rng.choice(_SURFACE_CHARS) for _ in range(rng.randint(1, 8))),
                           rng.choice(list(LanguageTag)))
            for _ in range(rng.randint(1, 10)))
        tid = str(i) + rng.choice(["", "&", "<x>", '"q"'])
        tweets.append(AnnotatedTweet(tid, f"a{rng.randint(0, 4)}", toks, rng.choice(list(Gender))))
    return Corpus(tuple(tweets))


@pytest.mark.acceptance(ROUND_TRIP)
def test_format_round_trip(ten_path):
    start = time.perf_counter()
    rng = random.Random(20240101)
    for _ in range(500):
        c = _random_corpus(rng)
        assert parse_corpus(serialize_corpus(c)) == c
    stats = compute_stats(read_corpus(ten_path))
    for key, want in TEN_TALLY.items():
        assert getattr(stats, key) == want, key
    assert time.perf_counter() - start < 10


@pytest.mark.acceptance(CHI)
def test_chi_square_oracle():
    start = time.perf_counter()
    rng = np.random.default_rng(7)
    for _ in range(200):
        n, d = int(rng.integers(2, 51)), int(rng.integers(1, 101))
        X = (rng.random((n, d)) < rng.uniform(0.05, 0.6)) * rng.integers(1, 4, (n, d))
        male = rng.random(n) < rng.uniform(0.2, 0.8)
        m = FeatureMatrix.from_dense(X, [Gender.MALE if s else Gender.FEMALE for s in male])
        want = brute_chi_square(X.tolist(), male.tolist())
        got = chi_square_scores(m)
        assert np.max(np.abs(got - np.array([float(w) for w in want]))) <= 1e-9
        k = int(rng.integers(1, d + 1))
        mask = chi_square_select(m, k)
        assert list(mask.indices) == brute_top_k(want, k)
    assert time.perf_counter() - start < 30


@pytest.mark.acceptance(NB)
def test_naive_bayes_oracle():
    # 2 male, 2 female documents over 3 words, alpha = 1
    X = np.array([[2, 1, 0], [1, 0, 1], [0, 2, 1], [0, 1, 2]], dtype=float)
    nb = fit_naive_bayes(X, np.array([1, 1, -1, -1]), 1.0)
    probes = np.array([[1, 1, 0], [0, 0, 2], [3, 0, 1]], dtype=float)
    hand = np.array([
        [math.log(1 / 2) + math.log(4 / 8) + math.log(2 / 8),
         math.log(1 / 2) + math.log(1 / 9) + math.log(4 / 9)],
        [math.log(1 / 2) + 2 * math.log(2 / 8),
         math.log(1 / 2) + 2 * math.log(4 / 9)],
        [math.log(1 / 2) + 3 * math.log(4 / 8) + math.log(2 / 8),
         math.log(1 / 2) + 3 * math.log(1 / 9) + math.log(4 / 9)],
    ])
    assert np.max(np.abs(nb.log_scores(probes) - hand)) <= 1e-12
    assert nb.predict_signs(probes).tolist() == [1, -1, 1]


@pytest.mark.acceptance(SVM)
def test_svm_correctness():
    start = time.perf_counter()
    # (a) separable set
    rng = np.random.default_rng(0)
    X = np.vstack([rng.normal(-2, 0.6, (10, 2)), rng.normal(2, 0.6, (10, 2))])
    y = np.r_[np.ones(10), -np.ones(10)]
    C = 10.0
    K = rbf_matrix(X, X, 0.5)
    r = solve_smo(K, y, C)
    model = fit_svm(X, y, C, 0.5)
    assert np.array_equal(model.predict_signs(X), y)
    yf = y * (K @ (r.alpha * y) + r.b)
    kkt = np.where(r.alpha <= 0, np.maximum(0, 1 - yf),
                   np.where(r.alpha >= C, np.maximum(0, yf - 1), np.abs(yf - 1)))
    assert kkt.max() < 1e-3
    assert abs(r.alpha @ y) < 1e-6
    assert np.all((r.alpha >= 0) & (r.alpha <= C))

    # (b) XOR
    Xx = np.array([[0, 0], [1, 1], [0, 1], [1, 0]], dtype=float)
    yx = np.array([1, 1, -1, -1], dtype=float)
    assert np.array_equal(fit_svm(Xx, yx, 10.0, 2.0).predict_signs(Xx), yx)

    # (c) dual objective vs brute-force alpha grid, step 0.25, C = 1
    X6 = np.random.default_rng(1).normal(size=(6, 2))
    y6 = np.array([1, 1, 1, -1, -1, -1], dtype=float)
    K6 = rbf_matrix(X6, X6, 1.0)
    ours = dual_objective(solve_smo(K6, y6, 1.0, tol=1e-8).alpha, y6, K6)
    grid = [dual_objective(np.array(a), y6, K6)
            for a in itertools.product([0, 0.25, 0.5, 0.75, 1.0], repeat=6)
            if abs(np.dot(a, y6)) < 1e-12]
    assert ours >= max(grid) - 1e-9
    assert time.perf_counter() - start < 60


@pytest.mark.acceptance(RF)
def test_random_forest():
    rng = np.random.default_rng(3)
    X = rng.integers(0, 3, (100, 10)).astype(float)
    y = np.where(rng.random(100) < 0.5, 1, -1)
    X[:, 6] = (y > 0) * 4 + rng.integers(0, 2, 100)
    assert build_tree(X, y).feature[0] == 6
    assert fit_random_forest(X, y, trees=1, mtry=10, bootstrap=False).trees[0].feature[0] == 6
    a = fit_random_forest(X, y, trees=20, seed=11)
    b = fit_random_forest(X, y, trees=20, seed=11)
    assert a.to_dict() == b.to_dict()

    c = generate(GenConfig(seed=2))
    tweets = preprocess_corpus(c.tweets)
    folds = make_grouped_folds(c, 5, 0)
    train = sorted((tweets[i] for i in folds.train_rows(0)), key=lambda t: t.id)
    test = [tweets[i] for i in folds.test_rows(0)]
    pipe = fit_pipeline(train, FeatureSet.ALL, ModelSpec("rf", {"trees": 100, "seed": 0}))
    assert accuracy(pipe.predict(test), [t.gender for t in test]) >= 0.9


@pytest.mark.acceptance(CV)
def test_grouped_cv_soundness():
    rng = random.Random(99)
    cfg = FeatureConfig(min_freq=2, k_best=300)
    audited = 0
    for trial in range(100):
        n_auth = rng.randint(4, 16)
        c = generate(GenConfig(n_authors=n_auth, tweets_per_author=rng.randint(1, 5),
                               female_fraction=rng.uniform(0.3, 0.7), seed=trial))
        tweets = list(c.tweets)
        rng.shuffle(tweets)  # rows of one author are not contiguous
        c = Corpus(tuple(tweets))
        k = rng.randint(2, min(10, n_auth))
        folds = make_grouped_folds(c, k, trial)
        fold_of_author = {}
        for row, t in enumerate(c.tweets):
            assert fold_of_author.setdefault(t.author_id, folds.fold_of[row]) == folds.fold_of[row]
        counts = folds.author_counts()
        assert max(counts) - min(counts) <= 1

        ok = all(len({c.tweets[i].gender for i in folds.train_rows(f)}) == 2 for f in range(k))
        if not ok:
            continue
        audit = LeakageAudit()
        cross_validate(c, rng.choice(list(FeatureSet)), ModelSpec.with_default_grid("nb"), folds,
                       cfg, audit=audit)
        for f in range(k):
            test_ids = {c.tweets[i].id for i in folds.test_rows(f)}
            assert not audit.contributors(f) & test_ids
            assert {"vocabulary", "selection", "model"} <= set(audit.records[f])
        audited += 1
    # a fold whose training part is single-gender cannot be fit; those trials only check grouping
    assert audited >= 90


def _cli(*argv):
    out = io.StringIO()
    assert main([str(a) for a in argv], out=out) == 0
    return out.getvalue()


@pytest.mark.slow
@pytest.mark.acceptance(E2E)
def test_end_to_end(tmp_path):
    import json

    start = time.perf_counter()
    signal = tmp_path / "signal.xml"
    _cli("generate", "--seed", 1, "-o", signal)
    assert len(read_corpus(signal)) == 1000
    report = json.loads(_cli("evaluate", signal, "--featureset", "all", "--classifier", "svm",
                             "--folds", 10, "--seed", 1, "--format", "structured"))
    print(f"p_signal=0.9 mean accuracy {report['mean_accuracy']:.4f}")
    assert report["mean_accuracy"] >= 0.90

    chance = tmp_path / "chance.xml"
    _cli("generate", "--seed", 1, "--signal", 0.5, "-o", chance)
    report = json.loads(_cli("evaluate", chance, "--featureset", "all", "--classifier", "svm",
                             "--folds", 10, "--seed", 1, "--format", "structured"))
    print(f"p_signal=0.5 mean accuracy {report['mean_accuracy']:.4f}")
    assert abs(report["mean_accuracy"] - 0.5) <= 0.07
    assert time.perf_counter() - start < 300


@pytest.mark.acceptance(THRESH)
def test_threshold_conformance():
    c = generate(GenConfig(seed=4))
    tweets = preprocess_corpus(c.tweets)
    folds = make_grouped_folds(c, 10, 0)
    train = sorted((tweets[i] for i in folds.train_rows(0)), key=lambda t: t.id)
    cfg = FeatureConfig()
    vocab = fit_vocabulary(train, FeatureSet.ALL, cfg)

    chars, words = Counter(), Counter()
    for t in train:
        for tok in t.tokens:
            for i in range(len(tok)):
                for j in range(i + 2, min(i + 5, len(tok)) + 1):
                    chars[tok[i:j]] += 1
        for n in (1, 2, 3):
            for i in range(len(t.tokens) - n + 1):
                words[" ".join(t.tokens[i:i + n])] += 1
    kinds = Counter(f.kind for f in vocab.features)
    assert kinds[FeatureKind.CHAR_NGRAM] > 0 and kinds[FeatureKind.WORD_NGRAM] > 0
    for f in vocab.features:
        if f.kind is FeatureKind.CHAR_NGRAM:
            assert chars[f.payload] >= 10, f
        elif f.kind is FeatureKind.WORD_NGRAM:
            assert words[f.payload] >= 10, f

    table = fit_reference_tokens(train)
    assert table.hi or table.en
    for entry in itertools.chain(table.hi.values(), table.en.values()):
        assert entry.score >= Fraction(3, 5) and entry.total >= 2

    pipe = fit_pipeline(train, FeatureSet.ALL, ModelSpec("nb"), cfg)
    assert vocab.dimension > 1000
    assert pipe.dimension <= 1000
