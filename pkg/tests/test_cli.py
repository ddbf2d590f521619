import io
import json

import pytest

from cmgender.cli import main
from cmgender.corpus import read_corpus


def run(*argv):
    out = io.StringIO()
    code = main([str(a) for a in argv], out=out)
    return code, out.getvalue()


@pytest.fixture(scope="module")
def small_corpus(tmp_path_factory):
    p = tmp_path_factory.mktemp("cli") / "small.xml"
    assert run("generate", "--authors", 12, "--tweets-per-author", 8, "--seed", 3, "-o", p)[0] == 0
    return p


def test_validate_exit_codes(ten_path, fixtures, tmp_path):
    assert run("validate", ten_path) == (0, "")
    code, out = run("validate", fixtures / "bad_lang.xml")
    assert code == 1 and "Fr" in out
    assert run("validate", tmp_path / "missing.xml")[0] == 2
    broken = tmp_path / "broken.xml"
    broken.write_text('<tweet id="1">\n<word lang="En">a</word>\n', encoding="utf-8")
    assert run("validate", broken)[0] == 2


def test_stats_formats(ten_path, tmp_path):
    code, out = run("stats", ten_path)
    assert code == 0 and "Total words" in out and "44" in out
    code, out = run("stats", ten_path, "--format", "structured")
    d = json.loads(out)
    assert d["total_words"] == 44 and d["avg_hashtags_per_gender"]["male"] == 0.6
    empty = tmp_path / "empty.xml"
    empty.write_text("", encoding="utf-8")
    code, out = run("stats", empty, "--format", "structured")
    assert code == 0 and json.loads(out)["total_tweets"] == 0


def test_ingest(fixtures, tmp_path):
    out1, out2 = tmp_path / "a.xml", tmp_path / "b.xml"
    assert run("ingest", fixtures / "raw.jsonl", "-o", out1)[0] == 0
    assert run("ingest", fixtures / "raw.jsonl", "-o", out2)[0] == 0
    assert out1.read_bytes() == out2.read_bytes()
    text = out1.read_text()
    assert text.count("<tweet ") == 3 and "@boss" in text and "https://t.co/abc" in text
    # the placeholders are reported until someone annotates them
    code, listing = run("validate", out1)
    assert code == 1 and listing.count("gender") == 3
    assert run("ingest", fixtures / "raw_bad.jsonl")[0] == 2
    code, out = run("ingest", fixtures / "raw_bad.jsonl", "--skip-bad")
    assert code == 0 and out.count("<tweet ") == 2


def test_generate_is_byte_stable(tmp_path):
    a, b = tmp_path / "a.xml", tmp_path / "b.xml"
    run("generate", "--seed", 9, "-o", a)
    run("generate", "--seed", 9, "-o", b)
    assert a.read_bytes() == b.read_bytes()
    assert len(read_corpus(a)) == 1000
    assert run("validate", a)[0] == 0


def test_generate_invalid_config(tmp_path):
    assert run("generate", "--signal", 2)[0] == 1
    cfg = tmp_path / "cfg.json"
    cfg.write_text('{"n_authors": 1}', encoding="utf-8")
    assert run("generate", "--config", cfg)[0] == 1
    cfg.write_text('{"seed": 4, "n_authors": 6, "tweets_per_author": 2}', encoding="utf-8")
    code, out = run("generate", "--config", cfg)
    assert code == 0 and out.count("<tweet ") == 12


def test_train_and_reload(small_corpus, tmp_path):
    from cmgender.pipeline import Pipeline
    from cmgender.preprocess import SpellingMap, preprocess_corpus

    model = tmp_path / "m.json"
    code, out = run("train", small_corpus, "-o", model, "--classifier", "nb",
                    "--min-freq", 3, "--format", "structured")
    assert code == 0
    summary = json.loads(out)
    assert summary["selected_dimension"] <= 1000 and summary["seed"] == 1
    pipe = Pipeline.loads(model.read_text())
    tweets = preprocess_corpus(read_corpus(small_corpus).tweets, SpellingMap.default())
    again = tmp_path / "m2.json"
    run("train", small_corpus, "-o", again, "--classifier", "nb", "--min-freq", 3)
    assert Pipeline.loads(again.read_text()).predict(tweets) == pipe.predict(tweets)

    run("train", small_corpus, "-o", model, "--classifier", "nb", "--featureset", "char-ngrams",
        "--min-freq", 3)
    kinds = {f.kind.value for f in Pipeline.loads(model.read_text()).featurizer.features}
    assert kinds == {"char"}


def test_train_single_class(tmp_path, ten_path):
    only_male = tmp_path / "m.xml"
    text = ten_path.read_text().replace("<gender>female</gender>", "<gender>male</gender>")
    only_male.write_text(text)
    assert run("train", only_male, "-o", tmp_path / "x.json")[0] == 1


def test_evaluate(small_corpus):
    args = ("evaluate", small_corpus, "--folds", 4, "--classifier", "nb", "--min-freq", 3,
            "--seed", 7)
    code, out = run(*args)
    assert code == 0 and "mean accuracy" in out
    assert sum(1 for line in out.splitlines() if line[:4].strip().isdigit()) == 4
    assert run(*args) == (code, out)
    code, out = run(*args, "--format", "structured")
    d = json.loads(out)
    assert len(d["fold_accuracies"]) == 4 and d["fingerprint"]["seed"] == 7
    code, _ = run("evaluate", small_corpus, "--folds", 13)
    assert code == 1


def test_evaluate_advises_folds(small_corpus, capsys):
    run("evaluate", small_corpus, "--folds", 20)
    assert "--folds" in capsys.readouterr().err


def test_mutually_exclusive_flags(small_corpus):
    assert run("evaluate", small_corpus, "--no-grid", "--grid", "C=1,10")[0] == 2
    assert run("evaluate", small_corpus, "--spelling", "x", "--no-spelling")[0] == 2


def test_experiment(small_corpus):
    code, out = run("experiment", small_corpus, "--folds", 3, "--classifiers", "nb",
                    "--min-freq", 3, "--no-grid")
    assert code == 0
    assert "Naive Bayes" in out and "Kernel SVM" not in out.split("Reference")[0]
    assert '"seed": 1' in out and '"min_freq": 3' in out
    code, out = run("experiment", small_corpus, "--folds", 3, "--classifiers", "nb,rf",
                    "--param", "trees=5", "--no-grid", "--min-freq", 3, "--format", "structured")
    assert code == 0 and len(json.loads(out)["cells"]) == 10


def test_help_lists_subcommands(capsys):
    assert run("--help")[0] == 0
    text = capsys.readouterr().out
    for cmd in ("validate", "stats", "ingest", "train", "evaluate", "experiment", "generate"):
        assert cmd in text


def test_unknown_param_is_a_domain_error(small_corpus):
    assert run("evaluate", small_corpus, "--classifier", "nb", "--param", "C=1")[0] == 1
