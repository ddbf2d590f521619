"""Annotated tweet corpus: domain types, the annotation file format, raw
record ingestion, validation and corpus statistics.

Annotation format (one element per line, UTF-8)::

    <tweet id="1" author="a7">
    <word lang="Hi">Jab</word>
    <word lang="O">!!</word>
    <gender>female</gender>
    </tweet>
"""

from __future__ import annotations

import hashlib
import json
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import IO, Iterable, Iterator


class LanguageTag(str, Enum):
    EN = "En"
    HI = "Hi"
    O = "O"


class Gender(str, Enum):
    MALE = "male"
    FEMALE = "female"

    @property
    def sign(self) -> int:
        """+1 for male, -1 for female (fixed convention for margin classifiers)."""
        return 1 if self is Gender.MALE else -1

    @classmethod
    def from_sign(cls, s: float) -> "Gender":
        # ties go to male
        return cls.MALE if s >= 0 else cls.FEMALE


@dataclass(frozen=True)
class AnnotatedToken:
    surface: str
    lang: LanguageTag


@dataclass(frozen=True)
class AnnotatedTweet:
    id: str
    author_id: str
    tokens: tuple[AnnotatedToken, ...]
    gender: Gender


@dataclass(frozen=True)
class Corpus:
    tweets: tuple[AnnotatedTweet, ...] = ()

    def __len__(self) -> int:
        return len(self.tweets)

    def __iter__(self) -> Iterator[AnnotatedTweet]:
        return iter(self.tweets)

    @property
    def authors(self) -> list[str]:
        return sorted({t.author_id for t in self.tweets})


@dataclass(frozen=True)
class RawTweet:
    timestamp: str
    id: str
    text: str
    user: str = ""
    fullname: str = ""
    replies: int = 0
    retweets: int = 0


@dataclass(frozen=True)
class Violation:
    tweet_id: str
    rule: str
    line: int | None = None

    def __str__(self) -> str:
        where = f"line {self.line}: " if self.line is not None else ""
        return f"{where}tweet {self.tweet_id!r}: {self.rule}"


class CorpusFormatError(ValueError):
    """Malformed annotation or raw-record input, positioned by line number."""

    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


# ---------------------------------------------------------------------------
# annotation format

_TWEET_OPEN = re.compile(r'<tweet((?:\s+\w+="[^"]*")*)\s*>')
_ATTR = re.compile(r'(\w+)="([^"]*)"')
_WORD = re.compile(r'<word\s+lang="([^"]*)">(.*)</word>')
_GENDER = re.compile(r"<gender>(.*)</gender>")

_ESCAPES = [("&", "&amp;"), ("<", "&lt;"), (">", "&gt;"), ('"', "&quot;")]


def _escape(s: str) -> str:
    for raw, ent in _ESCAPES:
        s = s.replace(raw, ent)
    return s


def _unescape(s: str) -> str:
    for raw, ent in reversed(_ESCAPES):
        s = s.replace(ent, raw)
    return s


_LANGS = {t.value: t for t in LanguageTag}


def _parse(stream: Iterable[str], tag_errors: list[Violation] | None) -> Corpus:
    """Shared parser. With ``tag_errors`` given, unknown lang/gender values are
    recorded there instead of raising (structural errors always raise)."""
    tweets: list[AnnotatedTweet] = []
    seen: set[str] = set()
    cur: dict | None = None
    lineno = 0

    def bad_tag(reason: str) -> None:
        if tag_errors is None:
            raise CorpusFormatError(lineno, reason)
        tag_errors.append(Violation(cur["id"], reason, lineno))
        cur["tag_error"] = True

    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line:
            continue
        if cur is None:
            m = _TWEET_OPEN.fullmatch(line)
            if not m:
                raise CorpusFormatError(lineno, f"expected <tweet ...>, got {line[:40]!r}")
            attrs = {k: _unescape(v) for k, v in _ATTR.findall(m.group(1))}
            tid = attrs.get("id", "")
            if not tid:
                raise CorpusFormatError(lineno, "tweet without id")
            if tid in seen:
                raise CorpusFormatError(lineno, f"duplicate tweet id {tid!r}")
            seen.add(tid)
            author = attrs.get("author") or tid
            cur = {"id": tid, "author": author, "tokens": [], "gender": None,
                   "start": lineno, "tag_error": False}
            continue

        if line == "</tweet>":
            if not cur["tokens"] and not cur["tag_error"]:
                raise CorpusFormatError(lineno, f"empty tweet body in {cur['id']!r}")
            if cur["gender"] is None and not cur["tag_error"]:
                raise CorpusFormatError(lineno, f"missing gender line in {cur['id']!r}")
            if not cur["tag_error"]:
                tweets.append(AnnotatedTweet(cur["id"], cur["author"],
                                             tuple(cur["tokens"]), cur["gender"]))
            cur = None
            continue

        m = _WORD.fullmatch(line)
        if m:
            if cur["gender"] is not None:
                raise CorpusFormatError(lineno, "word line after gender line")
            surface = _unescape(m.group(2))
            if not surface or any(c.isspace() for c in surface):
                raise CorpusFormatError(lineno, f"invalid token surface {m.group(2)!r}")
            lang = _LANGS.get(m.group(1))
            if lang is None:
                bad_tag(f"unknown language tag {m.group(1)!r}")
                continue
            cur["tokens"].append(AnnotatedToken(surface, lang))
            continue

        m = _GENDER.fullmatch(line)
        if m:
            if cur["gender"] is not None:
                raise CorpusFormatError(lineno, "duplicate gender line")
            value = m.group(1).strip().lower()
            try:
                cur["gender"] = Gender(value)
            except ValueError:
                bad_tag(f"unknown gender value {m.group(1)!r}")
            continue

        raise CorpusFormatError(lineno, f"unexpected line {line[:40]!r}")

    if cur is not None:
        raise CorpusFormatError(lineno + 1, f"unterminated tweet {cur['id']!r} (opened line {cur['start']})")
    return Corpus(tuple(tweets))


def parse_corpus(stream: Iterable[str] | str) -> Corpus:
    """Parse annotation-format text (a string or any iterable of lines)."""
    if isinstance(stream, str):
        stream = stream.splitlines()
    return _parse(stream, None)


def lint_corpus(stream: Iterable[str] | str) -> list[Violation]:
    """Parse leniently and return every tag and invariant violation.

    Unknown tag values become violations; structural errors still raise
    :class:`CorpusFormatError`.
    """
    if isinstance(stream, str):
        stream = stream.splitlines()
    tag_errors: list[Violation] = []
    corpus = _parse(stream, tag_errors)
    return tag_errors + validate(corpus)


def serialize_tweet(t: AnnotatedTweet) -> str:
    lines = [f'<tweet id="{_escape(t.id)}" author="{_escape(t.author_id)}">']
    lines += [f'<word lang="{tok.lang.value}">{_escape(tok.surface)}</word>' for tok in t.tokens]
    lines.append(f"<gender>{t.gender.value}</gender>")
    lines.append("</tweet>")
    return "\n".join(lines) + "\n"


def serialize_corpus(c: Corpus) -> str:
    return "".join(serialize_tweet(t) for t in c.tweets)


def read_corpus(path) -> Corpus:
    with open(path, encoding="utf-8") as fh:
        return parse_corpus(fh)


def write_corpus(c: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_corpus(c))


# ---------------------------------------------------------------------------
# raw records

def ingest_raw(stream: Iterable[str], skip_bad: bool = False,
               skipped: list[CorpusFormatError] | None = None) -> list[RawTweet]:
    """Decode one JSON object per line into :class:`RawTweet` records.

    Fails on the first bad line unless ``skip_bad`` is set, in which case bad
    lines are appended to ``skipped`` (if given) and dropped.
    """
    out: list[RawTweet] = []
    for lineno, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            out.append(_decode_raw(line, lineno))
        except CorpusFormatError as err:
            if not skip_bad:
                raise
            if skipped is not None:
                skipped.append(err)
    return out


def _decode_raw(line: str, lineno: int) -> RawTweet:
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as err:
        raise CorpusFormatError(lineno, f"unparseable record: {err.msg}") from None
    if not isinstance(rec, dict):
        raise CorpusFormatError(lineno, "record is not an object")
    for name in ("id", "text"):
        if rec.get(name) in (None, ""):
            raise CorpusFormatError(lineno, f"missing field: {name}")
    try:
        replies = int(rec.get("replies") or 0)
        retweets = int(rec.get("retweets") or 0)
    except (TypeError, ValueError):
        raise CorpusFormatError(lineno, "replies/retweets must be integers") from None
    if not str(rec["text"]).strip():
        raise CorpusFormatError(lineno, "missing field: text")
    if replies < 0 or retweets < 0:
        raise CorpusFormatError(lineno, "replies/retweets must be non-negative")
    return RawTweet(
        timestamp=str(rec.get("timestamp") or ""),
        id=str(rec["id"]),
        text=str(rec["text"]),
        user=str(rec.get("user") or ""),
        fullname=str(rec.get("fullname") or ""),
        replies=replies,
        retweets=retweets,
    )


GENDER_PLACEHOLDER = "?"


def anonymize(user: str) -> str:
    return "u" + hashlib.sha256(user.encode("utf-8")).hexdigest()[:12]


def skeleton_record(raw: RawTweet) -> str:
    """Annotation record awaiting manual tagging: every token tagged O, the
    gender left as ``?``, the author replaced by a hash of the user name."""
    author = anonymize(raw.user) if raw.user else raw.id
    lines = [f'<tweet id="{_escape(raw.id)}" author="{_escape(author)}">']
    lines += [f'<word lang="O">{_escape(tok)}</word>' for tok in raw.text.split()]
    lines.append(f"<gender>{GENDER_PLACEHOLDER}</gender>")
    lines.append("</tweet>")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# validation

def validate(c: Corpus) -> list[Violation]:
    out: list[Violation] = []
    counts = Counter(t.id for t in c.tweets)
    reported: set[str] = set()
    for t in c.tweets:
        if not t.id:
            out.append(Violation(t.id, "empty tweet id"))
        if counts[t.id] > 1 and t.id not in reported:
            reported.add(t.id)
            out.append(Violation(t.id, f"duplicate tweet id ({counts[t.id]} occurrences)"))
        if not t.author_id:
            out.append(Violation(t.id, "empty author id"))
        if not isinstance(t.gender, Gender):
            out.append(Violation(t.id, f"invalid gender {t.gender!r}"))
        if not t.tokens:
            out.append(Violation(t.id, "empty token list"))
        for i, tok in enumerate(t.tokens):
            if not isinstance(tok.lang, LanguageTag):
                out.append(Violation(t.id, f"token {i}: invalid language tag {tok.lang!r}"))
            if not tok.surface:
                out.append(Violation(t.id, f"token {i}: empty surface"))
            elif any(ch.isspace() for ch in tok.surface):
                out.append(Violation(t.id, f"token {i}: whitespace in surface"))
    return out


# ---------------------------------------------------------------------------
# statistics

def is_punct_char(ch: str) -> bool:
    return ch != "#" and unicodedata.category(ch).startswith("P")


def is_punctuation(surface: str) -> bool:
    return bool(surface) and all(is_punct_char(ch) for ch in surface)


def is_hashtag(surface: str) -> bool:
    return len(surface) > 1 and surface[0] == "#"


@dataclass(frozen=True)
class CorpusStats:
    total_tweets: int = 0
    total_words: int = 0
    words_hi: int = 0
    words_en: int = 0
    words_other: int = 0
    male_tweets: int = 0
    female_tweets: int = 0
    # per-gender averages; a gender with no tweets maps to None
    avg_hashtags_per_gender: dict[Gender, Fraction | None] = field(default_factory=dict)
    avg_punct_per_gender: dict[Gender, Fraction | None] = field(default_factory=dict)
    avg_words_per_gender: dict[Gender, Fraction | None] = field(default_factory=dict)

    def as_dict(self) -> dict:
        def avg(d):
            return {g.value: (None if d.get(g) is None else float(d[g])) for g in Gender}

        return {
            "total_tweets": self.total_tweets,
            "total_words": self.total_words,
            "words_hi": self.words_hi,
            "words_en": self.words_en,
            "words_other": self.words_other,
            "male_tweets": self.male_tweets,
            "female_tweets": self.female_tweets,
            "avg_hashtags_per_gender": avg(self.avg_hashtags_per_gender),
            "avg_punct_per_gender": avg(self.avg_punct_per_gender),
            "avg_words_per_gender": avg(self.avg_words_per_gender),
        }


def compute_stats(c: Corpus) -> CorpusStats:
    langs: Counter = Counter()
    n = Counter()
    hashtags = Counter()
    punct = Counter()
    words = Counter()
    for t in c.tweets:
        n[t.gender] += 1
        words[t.gender] += len(t.tokens)
        for tok in t.tokens:
            langs[tok.lang] += 1
            if is_hashtag(tok.surface):
                hashtags[t.gender] += 1
            elif is_punctuation(tok.surface):
                punct[t.gender] += 1

    def avg(counter):
        return {g: (Fraction(counter[g], n[g]) if n[g] else None) for g in Gender}

    return CorpusStats(
        total_tweets=len(c.tweets),
        total_words=sum(langs.values()),
        words_hi=langs[LanguageTag.HI],
        words_en=langs[LanguageTag.EN],
        words_other=langs[LanguageTag.O],
        male_tweets=n[Gender.MALE],
        female_tweets=n[Gender.FEMALE],
        avg_hashtags_per_gender=avg(hashtags),
        avg_punct_per_gender=avg(punct),
        avg_words_per_gender=avg(words),
    )


_STATS_ROWS = [
    ("Tweets included in corpus", "total_tweets"),
    ("Total words", "total_words"),
    ("Words in Hindi (transliterated)", "words_hi"),
    ("Words in English", "words_en"),
    ("Others (emojis, punctuation, etc.)", "words_other"),
    ("Male tweets", "male_tweets"),
    ("Female tweets", "female_tweets"),
]


def render_stats(s: CorpusStats) -> str:
    def fmt(v):
        return "-" if v is None else f"{float(v):.2f}"

    rows = [(label, str(getattr(s, attr))) for label, attr in _STATS_ROWS]
    for label, d in (("Avg hashtags per tweet", s.avg_hashtags_per_gender),
                     ("Avg punctuation per tweet", s.avg_punct_per_gender),
                     ("Avg words per tweet", s.avg_words_per_gender)):
        for g in Gender:
            rows.append((f"{label} ({g.value})", fmt(d.get(g))))
    width = max(len(r[0]) for r in rows)
    vwidth = max(len(r[1]) for r in rows + [("", "Number")])
    sep = "-" * (width + vwidth + 3)
    out = [sep, f"{'':<{width}}   {'Number':>{vwidth}}", sep]
    out += [f"{label:<{width}}   {value:>{vwidth}}" for label, value in rows]
    out.append(sep)
    return "\n".join(out)
