"""Token normalization: placeholders for hashtags/mentions/urls, hashtag
decomposition, punctuation stripping and spelling normalization."""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Mapping

from .corpus import AnnotatedTweet, Gender, LanguageTag, is_punct_char

HASHTAG = "hashtag"
MENTION = "mention"
URL = "url"
PLACEHOLDERS = frozenset({HASHTAG, MENTION, URL})

_MENTION_RE = re.compile(r"@\w")
_HASHTAG_RE = re.compile(r"#\w")


def is_url(tok: str) -> bool:
    low = tok.lower()
    return low.startswith(("http://", "https://", "www."))


def is_mention(tok: str) -> bool:
    return _MENTION_RE.match(tok) is not None


def is_hashtag_token(tok: str) -> bool:
    return _HASHTAG_RE.match(tok) is not None


def strip_punct(tok: str) -> str:
    """Remove leading and trailing punctuation characters."""
    i, j = 0, len(tok)
    while i < j and _is_strippable(tok[i]):
        i += 1
    while j > i and _is_strippable(tok[j - 1]):
        j -= 1
    return tok[i:j]


def _is_strippable(ch: str) -> bool:
    return ch == "#" or is_punct_char(ch)


def tokenize(text: str) -> list[str]:
    out = []
    for tok in text.split():
        if is_url(tok) or is_mention(tok) or is_hashtag_token(tok):
            out.append(tok.lower())
            continue
        tok = strip_punct(tok).lower()
        if tok:
            out.append(tok)
    return out


class SpellingMap(dict):
    """variant -> canonical. Canonical forms must not themselves be variants."""

    def __init__(self, pairs: Mapping[str, str] | Iterable[tuple[str, str]] = ()):
        super().__init__(pairs)
        bad = sorted(set(self.values()) & set(self.keys()))
        if bad:
            raise ValueError(f"canonical forms also listed as variants: {bad}")

    @classmethod
    def parse(cls, text: str) -> "SpellingMap":
        pairs = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not all(parts):
                raise ValueError(f"spelling map line {lineno}: expected 'variant<TAB>canonical'")
            pairs.append((parts[0].lower(), parts[1].lower()))
        return cls(pairs)

    @classmethod
    def load(cls, path) -> "SpellingMap":
        with open(path, encoding="utf-8") as fh:
            return cls.parse(fh.read())

    @classmethod
    def default(cls) -> "SpellingMap":
        text = resources.files("cmgender.data").joinpath("spelling.tsv").read_text("utf-8")
        return cls.parse(text)


def normalize_spelling(tokens: list[str], spelling: Mapping[str, str]) -> list[str]:
    return [spelling.get(t, t) for t in tokens]


def decompose_hashtag(tag: str) -> list[str]:
    """Split a hashtag body at underscores, lower->upper case changes and
    letter/digit boundaries.

    >>> decompose_hashtag("wah_re_politics")
    ['wah', 're', 'politics']
    >>> decompose_hashtag("TripleTalaq")
    ['triple', 'talaq']
    >>> decompose_hashtag("gst2017")
    ['gst', '2017']
    """
    parts: list[str] = []
    buf = ""
    for ch in tag:
        if ch == "_":
            if buf:
                parts.append(buf)
            buf = ""
            continue
        if buf:
            prev = buf[-1]
            if (prev.islower() and ch.isupper()) or (prev.isdigit() != ch.isdigit()):
                parts.append(buf)
                buf = ""
        buf += ch
    if buf:
        parts.append(buf)
    parts = [p.lower() for p in parts]
    return parts or [tag.lower()]


@dataclass(frozen=True)
class ProcessedTweet:
    id: str
    tokens: tuple[str, ...]
    langs: tuple[LanguageTag, ...]
    hashtags: tuple[str, ...]
    mentions_count: int
    urls_count: int
    gender: Gender
    author_id: str


def preprocess_tweet(t: AnnotatedTweet, spelling: Mapping[str, str] | None = None) -> ProcessedTweet:
    tokens: list[str] = []
    langs: list[LanguageTag] = []
    hashtags: list[str] = []
    mentions = urls = 0
    for tok in t.tokens:
        s = tok.surface
        if is_url(s):
            tokens.append(URL)
            langs.append(LanguageTag.O)
            urls += 1
        elif is_mention(s):
            tokens.append(MENTION)
            langs.append(LanguageTag.O)
            mentions += 1
        elif is_hashtag_token(s):
            body = strip_punct(s[1:]) or s[1:]
            hashtags.append(body)
            words = decompose_hashtag(body)
            tokens.append(HASHTAG)
            tokens.extend(words)
            langs.extend([LanguageTag.O] * (len(words) + 1))
        else:
            s = strip_punct(s).lower()
            if s:
                tokens.append(s)
                langs.append(tok.lang)
    if spelling:
        tokens = normalize_spelling(tokens, spelling)
    return ProcessedTweet(
        id=t.id,
        tokens=tuple(tokens),
        langs=tuple(langs),
        hashtags=tuple(hashtags),
        mentions_count=mentions,
        urls_count=urls,
        gender=t.gender,
        author_id=t.author_id,
    )


def preprocess_corpus(tweets: Iterable[AnnotatedTweet],
                      spelling: Mapping[str, str] | None = None) -> list[ProcessedTweet]:
    return [preprocess_tweet(t, spelling) for t in tweets]
