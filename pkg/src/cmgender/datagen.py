"""Deterministic synthetic code-mixed corpus with a planted gender signal.

Each tweet is background Hindi/English tokens plus gendered marker tokens:
a marker of the author's own gender appears with probability ``p_signal``,
a marker of the other gender with probability ``1 - p_signal``. At
``p_signal = 0.5`` the corpus carries no gender information at all.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import asdict, dataclass, field, fields
from functools import lru_cache
from importlib import resources
from itertools import accumulate

from .corpus import AnnotatedToken, AnnotatedTweet, Corpus, Gender, LanguageTag

PUNCTUATION = ("!", "!!", "?", "...", ",", ".", "!!!", "?!")


@lru_cache(maxsize=None)
def _wordlist(name: str) -> tuple[str, ...]:
    text = resources.files("cmgender.data").joinpath(name).read_text("utf-8")
    seen: dict[str, None] = {}
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            seen.setdefault(line, None)
    return tuple(seen)


@dataclass(frozen=True)
class GenConfig:
    n_authors: int = 50
    tweets_per_author: int = 20
    tokens_per_tweet: tuple[int, int] = (15, 23)
    hi_en_mix_ratio: float = 0.55  # probability a background token is Hindi
    p_signal: float = 0.9
    male_markers: tuple[str, ...] = ("likhunga", "karunga", "jaunga")
    female_markers: tuple[str, ...] = ("likhungi", "karungi", "jaungi")
    hashtag_rate: dict = field(default_factory=lambda: {"male": 1.0, "female": 1.0})
    punct_rate: dict = field(default_factory=lambda: {"male": 1.0, "female": 1.0})
    mention_prob: float = 0.1
    url_prob: float = 0.05
    female_fraction: float = 0.5
    seed: int = 1

    def __post_init__(self):
        lo, hi = self.tokens_per_tweet
        if not 1 <= lo <= hi:
            raise ValueError("tokens_per_tweet must be a range 1 <= lo <= hi")
        for name in ("hi_en_mix_ratio", "p_signal", "mention_prob", "url_prob",
                     "female_fraction"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.n_authors < 2 or self.tweets_per_author < 1:
            raise ValueError("need n_authors >= 2 and tweets_per_author >= 1")
        n_f = self.n_female
        if n_f == 0 or n_f == self.n_authors:
            raise ValueError("configuration yields a single-gender corpus")
        for rates in (self.hashtag_rate, self.punct_rate):
            if set(rates) != {"male", "female"} or min(rates.values()) < 0:
                raise ValueError("rates need non-negative 'male' and 'female' entries")
        if not self.male_markers or not self.female_markers:
            raise ValueError("need at least one marker per gender")

    @property
    def n_female(self) -> int:
        return int(round(self.n_authors * self.female_fraction))

    def as_dict(self) -> dict:
        d = asdict(self)
        d["tokens_per_tweet"] = list(self.tokens_per_tweet)
        d["male_markers"] = list(self.male_markers)
        d["female_markers"] = list(self.female_markers)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GenConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        for key in ("tokens_per_tweet", "male_markers", "female_markers"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)

    @classmethod
    def load(cls, path) -> "GenConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _poisson(rng: random.Random, lam: float) -> int:
    # Knuth; rates here are small
    if lam <= 0:
        return 0
    limit, k, p = math.exp(-lam), 0, 1.0
    while True:
        p *= rng.random()
        if p <= limit:
            return k
        k += 1


def _zipf_weights(n: int) -> list[float]:
    return [1.0 / (r + 1) for r in range(n)]


def generate(cfg: GenConfig) -> Corpus:
    rng = random.Random(cfg.seed)
    hindi, english = _wordlist("hindi.txt"), _wordlist("english.txt")
    hashtags = _wordlist("hashtags.txt")
    markers = set(cfg.male_markers) | set(cfg.female_markers)
    hindi = tuple(w for w in hindi if w not in markers)
    english = tuple(w for w in english if w not in markers)
    hi_cum = list(accumulate(_zipf_weights(len(hindi))))
    en_cum = list(accumulate(_zipf_weights(len(english))))

    genders = [Gender.FEMALE] * cfg.n_female + [Gender.MALE] * (cfg.n_authors - cfg.n_female)
    rng.shuffle(genders)
    width = len(str(cfg.n_authors * cfg.tweets_per_author))
    tweets = []
    tid = 0
    for a, gender in enumerate(genders):
        author = f"author{a:03d}"
        own, other = ((cfg.male_markers, cfg.female_markers) if gender is Gender.MALE
                      else (cfg.female_markers, cfg.male_markers))
        for _ in range(cfg.tweets_per_author):
            n = rng.randint(*cfg.tokens_per_tweet)
            toks: list[AnnotatedToken] = []
            for _ in range(n):
                if rng.random() < cfg.hi_en_mix_ratio:
                    w = rng.choices(hindi, cum_weights=hi_cum)[0]
                    toks.append(AnnotatedToken(w, LanguageTag.HI))
                else:
                    w = rng.choices(english, cum_weights=en_cum)[0]
                    toks.append(AnnotatedToken(w, LanguageTag.EN))
            if toks and rng.random() < 0.3:
                first = toks[0]
                toks[0] = AnnotatedToken(first.surface.capitalize(), first.lang)
            extras: list[AnnotatedToken] = []
            for m in own:
                if rng.random() < cfg.p_signal:
                    extras.append(AnnotatedToken(m, LanguageTag.HI))
            for m in other:
                if rng.random() < 1.0 - cfg.p_signal:
                    extras.append(AnnotatedToken(m, LanguageTag.HI))
            for _ in range(_poisson(rng, cfg.hashtag_rate[gender.value])):
                extras.append(AnnotatedToken("#" + rng.choice(hashtags), LanguageTag.O))
            if rng.random() < cfg.mention_prob:
                extras.append(AnnotatedToken(f"@user{rng.randrange(500)}", LanguageTag.O))
            if rng.random() < cfg.url_prob:
                extras.append(AnnotatedToken(f"https://t.co/x{rng.randrange(10**6):06d}",
                                             LanguageTag.O))
            for tok in extras:
                toks.insert(rng.randint(0, len(toks)), tok)
            for _ in range(_poisson(rng, cfg.punct_rate[gender.value])):
                toks.insert(rng.randint(1, len(toks)),
                            AnnotatedToken(rng.choice(PUNCTUATION), LanguageTag.O))
            tweets.append(AnnotatedTweet(f"t{tid:0{width}d}", author, tuple(toks), gender))
            tid += 1
    return Corpus(tuple(tweets))

