"""Hypothesis strategies and small builders shared by the test modules."""

from hypothesis import strategies as st

from cmgender.corpus import AnnotatedToken, AnnotatedTweet, Corpus, Gender, LanguageTag
from cmgender.preprocess import preprocess_tweet

# anything without whitespace or control characters, including markup characters
surfaces = st.text(
    st.characters(blacklist_categories=("Zs", "Zl", "Zp", "Cc", "Cs")),
    min_size=1, max_size=12,
)
ids = st.text("abcdefghijklmnopqrstuvwxyz0123456789_-&<>\"'", min_size=1, max_size=8)
tokens = st.builds(AnnotatedToken, surfaces, st.sampled_from(list(LanguageTag)))


@st.composite
def corpora(draw, max_tweets=8):
    tweet_ids = draw(st.lists(ids, unique=True, max_size=max_tweets))
    tweets = []
    for tid in tweet_ids:
        tweets.append(AnnotatedTweet(
            tid,
            draw(ids),
            tuple(draw(st.lists(tokens, min_size=1, max_size=6))),
            draw(st.sampled_from(list(Gender))),
        ))
    return Corpus(tuple(tweets))


def tweet(tid, toks, gender="male", author=None):
    """Build a tweet from ``"surface/Lang"`` strings (lang defaults to O)."""
    out = []
    for t in toks:
        surface, _, lang = t.rpartition("/") if "/" in t[1:] else (t, "", "O")
        out.append(AnnotatedToken(surface, LanguageTag(lang)))
    return AnnotatedTweet(tid, author or tid, tuple(out), Gender(gender))


def processed(tid, words, gender="male", author=None, langs=None):
    toks = [f"{w}/{langs[i] if langs else 'En'}" for i, w in enumerate(words)]
    return preprocess_tweet(tweet(tid, toks, gender, author))


def brute_chi_square(X, male):
    """Chi-square per column from the full 2x2 table, sum over cells of
    (O - E)^2 / E, in exact rationals. Zero marginal -> 0."""
    from fractions import Fraction

    n = len(X)
    out = []
    for j in range(len(X[0]) if n else 0):
        obs = {(p, g): 0 for p in (True, False) for g in (True, False)}
        for r in range(n):
            obs[(X[r][j] != 0, bool(male[r]))] += 1
        row = {p: obs[(p, True)] + obs[(p, False)] for p in (True, False)}
        col = {g: obs[(True, g)] + obs[(False, g)] for g in (True, False)}
        if 0 in row.values() or 0 in col.values():
            out.append(Fraction(0))
            continue
        chi = Fraction(0)
        for (p, g), o in obs.items():
            e = Fraction(row[p] * col[g], n)
            chi += (o - e) ** 2 / e
        out.append(chi)
    return out


def brute_top_k(scores, k):
    ranked = sorted((j for j, s in enumerate(scores) if s > 0), key=lambda j: (-scores[j], j))
    return sorted(ranked[:k])
