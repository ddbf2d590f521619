"""Command-line interface.

Exit codes: 0 success, 1 domain error, 2 I/O or parse error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

from . import __version__
from .corpus import (
    CorpusFormatError,
    compute_stats,
    ingest_raw,
    lint_corpus,
    read_corpus,
    render_stats,
    serialize_corpus,
    skeleton_record,
)
from .datagen import GenConfig, generate
from .evaluation import EvaluationError, cross_validate, make_grouped_folds, run_experiment_table
from .features import FeatureConfig, FeatureSet
from .folds import FoldError
from .learners import DEFAULT_GRIDS, DEFAULT_PARAMS, ModelKind, ModelSpec
from .learners.svm import ConvergenceWarning
from .pipeline import fit_pipeline
from .preprocess import SpellingMap, preprocess_corpus

DEFAULT_SEED = 1

log = logging.getLogger("cmgender")

_FS_META = "{" + ",".join(f.value for f in FeatureSet) + "}"


class DomainError(Exception):
    """Maps to exit status 1."""


# ---------------------------------------------------------------------------
# argument helpers

def _range(text: str) -> tuple[int, int]:
    try:
        lo, _, hi = text.partition("-")
        lo, hi = int(lo), int(hi or lo)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N or N-M, got {text!r}") from None
    return lo, hi


def _csv(enum):
    def parse(text: str):
        try:
            return [enum(x.strip()) for x in text.split(",") if x.strip()]
        except ValueError as err:
            raise argparse.ArgumentTypeError(str(err)) from None
    return parse


def _value(text: str):
    if text in ("None", "none"):
        return None
    if text == "1/D":
        return text
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def _param(text: str) -> tuple[str, object]:
    key, sep, val = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    return key, _value(val)


def _grid(text: str) -> tuple[str, list]:
    key, sep, vals = text.partition("=")
    if not sep or not key or not vals:
        raise argparse.ArgumentTypeError(f"expected KEY=V1,V2,..., got {text!r}")
    return key, [_value(v) for v in vals.split(",")]


def _add_feature_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("features")
    d = FeatureConfig()
    g.add_argument("--min-freq", type=int, default=d.min_freq,
                   help="minimum training frequency of char/word n-grams (default %(default)s)")
    g.add_argument("--char-n", type=_range, default=d.char_n, metavar="N-M",
                   help="character n-gram orders (default 2-5)")
    g.add_argument("--word-n", type=_range, default=d.word_n, metavar="N-M",
                   help="word n-gram orders (default 1-3)")
    g.add_argument("--char-padding", action="store_true",
                   help="pad tokens with boundary markers before extracting char n-grams")
    g.add_argument("--ref-min-score", type=float, default=d.ref_min_score,
                   help="reference token class-purity threshold (default %(default)s)")
    g.add_argument("--ref-min-freq", type=int, default=d.ref_min_freq,
                   help="reference token minimum frequency (default %(default)s)")
    g.add_argument("--top-hashtags", type=int, default=d.top_hashtags,
                   help="number of hashtag features (default %(default)s)")
    g.add_argument("--k-best", type=int, default=d.k_best,
                   help="chi-square selection size (default %(default)s)")
    sp = g.add_mutually_exclusive_group()
    sp.add_argument("--spelling", type=Path, metavar="PATH",
                    help="spelling normalization table (TSV: variant<TAB>canonical)")
    sp.add_argument("--no-spelling", action="store_true", help="disable spelling normalization")
    g.add_argument("--partitioned", action="store_true",
                   help="separate Hindi and English vocabularies")


def _add_model_flags(p: argparse.ArgumentParser, multi: bool = False) -> None:
    g = p.add_argument_group("model")
    if not multi:
        g.add_argument("--classifier", type=ModelKind, choices=list(ModelKind),
                       default=ModelKind.SVM_RBF, metavar="{nb,svm,rf}",
                       help="classifier (default svm)")
    g.add_argument("--param", type=_param, action="append", default=[], metavar="KEY=VALUE",
                   help="fixed hyperparameter, repeatable (e.g. C=10)")
    mx = g.add_mutually_exclusive_group()
    mx.add_argument("--no-grid", action="store_true",
                    help="skip the inner grid search and use fixed parameters")
    mx.add_argument("--grid", type=_grid, action="append", default=[], metavar="KEY=V1,V2",
                    help="custom grid axis, repeatable (replaces the default grid)")
    g.add_argument("--inner-folds", type=int, default=3,
                   help="folds of the inner grid search (default %(default)s)")


def _add_seed(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=DEFAULT_SEED,
                   help="random seed (default %(default)s)")


def _add_format(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("table", "structured"), default="table",
                   help="human-readable table or JSON (default table)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cmgender",
        description="Gender prediction for English-Hindi code-mixed tweets.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("validate", help="check an annotation file")
    p.add_argument("path", type=Path)

    p = sub.add_parser("stats", help="corpus statistics")
    p.add_argument("path", type=Path)
    _add_format(p)

    p = sub.add_parser("ingest", help="turn raw JSON-lines tweets into annotation skeletons")
    p.add_argument("raw", type=Path)
    p.add_argument("-o", "--output", type=Path, help="output file (default stdout)")
    p.add_argument("--skip-bad", action="store_true",
                   help="warn about and skip malformed records instead of failing")

    p = sub.add_parser("train", help="fit a model on a whole corpus")
    p.add_argument("corpus", type=Path)
    p.add_argument("-o", "--output", type=Path, required=True, help="model file")
    p.add_argument("--featureset", type=FeatureSet, choices=list(FeatureSet),
                   default=FeatureSet.ALL, metavar=_FS_META)
    _add_model_flags(p)
    _add_feature_flags(p)
    _add_seed(p)
    _add_format(p)

    p = sub.add_parser("evaluate", help="author-grouped k-fold cross-validation")
    p.add_argument("corpus", type=Path)
    p.add_argument("--featureset", type=FeatureSet, choices=list(FeatureSet),
                   default=FeatureSet.ALL, metavar=_FS_META)
    p.add_argument("--folds", type=int, default=10, help="number of folds (default %(default)s)")
    p.add_argument("--global-fit", action="store_true",
                   help="fit the vocabulary on the whole corpus instead of per fold")
    p.add_argument("--jobs", type=int, default=1, help="parallel fold workers")
    _add_model_flags(p)
    _add_feature_flags(p)
    _add_seed(p)
    _add_format(p)

    p = sub.add_parser("experiment", help="feature set x classifier accuracy table")
    p.add_argument("corpus", type=Path)
    p.add_argument("--classifiers", type=_csv(ModelKind), default=list(ModelKind),
                   help="comma list of nb,svm,rf (default all)")
    p.add_argument("--featuresets", type=_csv(FeatureSet),
                   default=[f for f in FeatureSet],
                   help="comma list of feature sets (default all five)")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--global-fit", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    _add_model_flags(p, multi=True)
    _add_feature_flags(p)
    _add_seed(p)
    _add_format(p)

    p = sub.add_parser("generate", help="write a synthetic annotated corpus")
    p.add_argument("-o", "--output", type=Path, help="output file (default stdout)")
    p.add_argument("--config", type=Path, help="JSON file with generator settings")
    p.add_argument("--seed", type=int, help=f"random seed (default {DEFAULT_SEED})")
    p.add_argument("--authors", type=int)
    p.add_argument("--tweets-per-author", type=int)
    p.add_argument("--signal", type=float, help="probability of an own-gender marker")
    p.add_argument("--mix", type=float, help="probability that a background token is Hindi")
    p.add_argument("--female-fraction", type=float)
    p.add_argument("--hashtag-rate", type=float, nargs=2, metavar=("MALE", "FEMALE"))
    p.add_argument("--punct-rate", type=float, nargs=2, metavar=("MALE", "FEMALE"))
    return parser


# ---------------------------------------------------------------------------
# config assembly

def _feature_config(a) -> FeatureConfig:
    try:
        return FeatureConfig(char_n=a.char_n, word_n=a.word_n, min_freq=a.min_freq,
                             ref_min_score=a.ref_min_score, ref_min_freq=a.ref_min_freq,
                             top_hashtags=a.top_hashtags, k_best=a.k_best,
                             char_padding=a.char_padding)
    except ValueError as err:
        raise DomainError(str(err)) from None


def _spelling(a) -> SpellingMap | None:
    if a.no_spelling:
        return None
    if a.spelling is not None:
        try:
            return SpellingMap.load(a.spelling)
        except ValueError as err:
            raise CorpusFormatError(0, f"spelling table {a.spelling}: {err}") from None
    return SpellingMap.default()


def _spec(kind: ModelKind, a, lenient: bool = False) -> ModelSpec:
    known = set(DEFAULT_PARAMS[kind])
    unknown = {k for k, _ in a.param + a.grid} - known
    if unknown and not lenient:
        raise DomainError(f"unknown {kind.value} parameters: {sorted(unknown)}")
    # experiment applies shared --param/--grid flags only where they fit
    params = {k: v for k, v in a.param if k in known}
    if a.no_grid:
        grid = {}
    elif a.grid:
        grid = {k: v for k, v in a.grid if k in known}
    else:
        grid = {k: v for k, v in DEFAULT_GRIDS[kind].items() if k not in params}
    if kind is ModelKind.RANDOM_FOREST:
        params.setdefault("seed", a.seed)
    try:
        return ModelSpec(kind, params, grid)
    except (ValueError, TypeError, KeyError) as err:
        raise DomainError(f"invalid {kind.value} parameters: {err}") from None


def _emit(text: str, out) -> None:
    out.write(text if text.endswith("\n") else text + "\n")


# ---------------------------------------------------------------------------
# commands

def cmd_validate(a, out) -> int:
    with open(a.path, encoding="utf-8") as fh:
        violations = lint_corpus(fh)
    for v in violations:
        _emit(str(v), out)
    return 1 if violations else 0


def cmd_stats(a, out) -> int:
    stats = compute_stats(read_corpus(a.path))
    if a.format == "structured":
        _emit(json.dumps(stats.as_dict(), sort_keys=True, default=str), out)
    else:
        _emit(render_stats(stats), out)
    return 0


def cmd_ingest(a, out) -> int:
    skipped: list[CorpusFormatError] = []
    with open(a.raw, encoding="utf-8") as fh:
        records = ingest_raw(fh, skip_bad=a.skip_bad, skipped=skipped)
    for err in skipped:
        log.warning("skipped %s", err)
    text = "".join(skeleton_record(r) for r in records)
    if a.output:
        a.output.write_text(text, encoding="utf-8")
    else:
        out.write(text)
    return 0


def cmd_train(a, out) -> int:
    corpus = read_corpus(a.corpus)
    if len({t.gender for t in corpus}) < 2:
        raise DomainError("training corpus must contain both genders")
    cfg = _feature_config(a)
    spec = _spec(a.classifier, a)
    tweets = sorted(preprocess_corpus(corpus.tweets, _spelling(a)), key=lambda t: t.id)
    pipe = fit_pipeline(tweets, a.featureset, spec, cfg, a.seed, a.partitioned, a.inner_folds)
    a.output.write_text(pipe.dumps(), encoding="utf-8")
    summary = {
        "tweets": len(tweets),
        "featureset": a.featureset.value,
        "classifier": spec.kind.value,
        "vocabulary_dimension": pipe.featurizer.dimension,
        "selected_dimension": pipe.dimension,
        "params": pipe.grid.best if pipe.grid else spec.candidates()[0],
        "seed": a.seed,
        "features": cfg.as_dict(),
        "model_file": str(a.output),
    }
    if a.format == "structured":
        _emit(json.dumps(summary, sort_keys=True, default=str), out)
    else:
        for k, v in summary.items():
            _emit(f"{k}: {json.dumps(v, default=str) if isinstance(v, dict) else v}", out)
    return 0


def _folds(corpus, k: int, seed: int):
    n_auth = len(corpus.authors)
    if n_auth < k:
        raise DomainError(f"corpus has {n_auth} authors, fewer than {k} folds; "
                          f"lower --folds to at most {n_auth}")
    try:
        return make_grouped_folds(corpus, k, seed)
    except FoldError as err:
        raise DomainError(f"{err}; adjust --folds") from None


def cmd_evaluate(a, out) -> int:
    corpus = read_corpus(a.corpus)
    folds = _folds(corpus, a.folds, a.seed)
    report = cross_validate(corpus, a.featureset, _spec(a.classifier, a), folds,
                            _feature_config(a), _spelling(a), a.seed, a.partitioned,
                            a.global_fit, a.inner_folds, a.jobs)
    if a.format == "structured":
        _emit(json.dumps(report.as_dict(), sort_keys=True, default=str), out)
    else:
        _emit(report.render(), out)
    return 0


def cmd_experiment(a, out) -> int:
    corpus = read_corpus(a.corpus)
    folds = _folds(corpus, a.folds, a.seed)
    specs = {k: _spec(k, a, lenient=True) for k in dict.fromkeys(a.classifiers)}
    table = run_experiment_table(corpus, specs, folds, list(dict.fromkeys(a.featuresets)),
                                 _feature_config(a), _spelling(a), a.seed,
                                 partitioned=a.partitioned, global_fit=a.global_fit,
                                 inner_folds=a.inner_folds, jobs=a.jobs)
    if a.format == "structured":
        _emit(json.dumps(table.as_dict(), sort_keys=True, default=str), out)
    else:
        _emit(table.render(), out)
    return 0


def cmd_generate(a, out) -> int:
    try:
        base = GenConfig.load(a.config).as_dict() if a.config else GenConfig().as_dict()
        overrides = {"seed": a.seed, "n_authors": a.authors,
                     "tweets_per_author": a.tweets_per_author, "p_signal": a.signal,
                     "hi_en_mix_ratio": a.mix, "female_fraction": a.female_fraction}
        base.update({k: v for k, v in overrides.items() if v is not None})
        if a.hashtag_rate:
            base["hashtag_rate"] = dict(zip(("male", "female"), a.hashtag_rate))
        if a.punct_rate:
            base["punct_rate"] = dict(zip(("male", "female"), a.punct_rate))
        cfg = GenConfig.from_dict(base)
    except (ValueError, TypeError) as err:
        raise DomainError(f"invalid generator config: {err}") from None
    text = serialize_corpus(generate(cfg))
    if a.output:
        a.output.write_bytes(text.encode("utf-8"))
    else:
        out.write(text)
    return 0


COMMANDS = {
    "validate": cmd_validate,
    "stats": cmd_stats,
    "ingest": cmd_ingest,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "experiment": cmd_experiment,
    "generate": cmd_generate,
}


def main(argv: list[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    warnings.simplefilter("default", ConvergenceWarning)
    try:
        return COMMANDS[a.command](a, out)
    except (CorpusFormatError, json.JSONDecodeError) as err:
        print(f"error: {getattr(a, 'path', None) or getattr(a, 'corpus', None) or getattr(a, 'raw', '')}: "
              f"{err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (DomainError, EvaluationError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
