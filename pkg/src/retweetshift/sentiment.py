"""Lexicon plus rule-based sentiment scoring for short informal texts.

The scorer sums per-token valences after applying four adjustment rules,
then squashes the total into [-1, 1]:

* negation: any negation term within the 3 preceding tokens multiplies the
  valence by -0.74;
* boosters: each booster term within the same window shifts the magnitude
  by its lexicon delta, aligned with the valence sign;
* ALL-CAPS emphasis: an upper-case lexicon token gains 0.733 magnitude;
* terminal exclamations: up to 3 trailing '!' each add 0.292 to the total,
  in the direction of its sign.

compound = s / sqrt(s^2 + alpha) with alpha = 15, clamped to [-1, 1].
All rule constants live in RuleConstants and can be overridden.
"""

from __future__ import annotations

import math
import string
from dataclasses import dataclass, field
from importlib import resources
from typing import IO, Iterable

from .errors import DataError

POSITIVE = "positive"
NEUTRAL = "neutral"
NEGATIVE = "negative"

_PUNCT_STRIP = string.punctuation + "“”‘’…"


class NoTweetsError(DataError):
    """A user-level aggregate was requested for an empty score sequence."""


@dataclass(frozen=True)
class RuleConstants:
    negation_factor: float = -0.74
    caps_boost: float = 0.733
    exclaim_boost: float = 0.292
    exclaim_cap: int = 3
    alpha: float = 15.0
    window: int = 3


@dataclass(frozen=True)
class SentimentScore:
    compound: float
    label: str


@dataclass
class SentimentLexicon:
    """Term valences, booster deltas, and negation terms.

    File format (UTF-8, tab separated): `term<TAB>valence` lines, with
    `#booster` switching to `term<TAB>delta` lines and `#negation` to one
    bare term per line.  `#` comments and blank lines are ignored.  A term
    may appear in at most one table.
    """

    valences: dict[str, float] = field(default_factory=dict)
    boosters: dict[str, float] = field(default_factory=dict)
    negations: set[str] = field(default_factory=set)

    def validate(self) -> None:
        seen: dict[str, str] = {}
        for table, terms in (
            ("valence", self.valences),
            ("booster", self.boosters),
            ("negation", self.negations),
        ):
            for term in terms:
                if term in seen:
                    raise DataError(
                        f"lexicon term {term!r} appears in both {seen[term]} and {table} tables"
                    )
                seen[term] = table


def load_lexicon(fp: IO[str]) -> SentimentLexicon:
    lex = SentimentLexicon()
    section = "valence"
    for lineno, raw in enumerate(fp, start=1):
        line = raw.strip()
        if line == "#booster":
            section = "booster"
            continue
        if line == "#negation":
            section = "negation"
            continue
        if not line or line.startswith("#"):
            continue
        if section == "negation":
            lex.negations.add(line.lower())
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise DataError(f"lexicon line {lineno}: expected 'term<TAB>value', got {line!r}")
        term, value = parts
        try:
            parsed = float(value)
        except ValueError as exc:
            raise DataError(f"lexicon line {lineno}: bad value {value!r}") from exc
        if section == "valence":
            lex.valences[term.lower()] = parsed
        else:
            lex.boosters[term.lower()] = parsed
    lex.validate()
    return lex


def load_lexicon_file(path: str) -> SentimentLexicon:
    try:
        with open(path, encoding="utf-8") as fp:
            return load_lexicon(fp)
    except OSError as exc:
        raise DataError(f"cannot read lexicon {path}: {exc}") from exc


def default_lexicon() -> SentimentLexicon:
    """The small general-purpose lexicon shipped with the package."""
    with resources.files("retweetshift.data").joinpath("lexicon.txt").open(
        "r", encoding="utf-8"
    ) as fp:
        return load_lexicon(fp)


def tokenize(text: str) -> list[str]:
    """Whitespace split, then strip flanking punctuation per token.

    Tokens that would shrink to two characters or fewer keep their original
    form, which preserves emoticons such as ':)' or ':-D'.
    """
    tokens = []
    for raw in text.split():
        stripped = raw.strip(_PUNCT_STRIP)
        tokens.append(raw if len(stripped) <= 2 else stripped)
    return tokens


def _trailing_exclaims(text: str) -> int:
    stripped = text.rstrip()
    count = 0
    for ch in reversed(stripped):
        if ch != "!":
            break
        count += 1
    return count


def score_text(
    text: str,
    lexicon: SentimentLexicon,
    constants: RuleConstants = RuleConstants(),
) -> SentimentScore:
    """Score one text.  Unknown tokens contribute nothing."""
    tokens = tokenize(text)
    lowered = [t.lower() for t in tokens]
    total = 0.0
    for i, tok in enumerate(lowered):
        valence = lexicon.valences.get(tok)
        if valence is None:
            continue
        if tokens[i].isupper() and len(tokens[i]) > 1 and valence != 0.0:
            valence += math.copysign(constants.caps_boost, valence)
        window = lowered[max(0, i - constants.window) : i]
        for prev in window:
            delta = lexicon.boosters.get(prev)
            if delta is None or valence == 0.0:
                continue
            # delta shifts the magnitude: boosters enlarge it, dampeners shrink it
            valence = valence + delta if valence > 0 else valence - delta
        if any(prev in lexicon.negations for prev in window):
            valence *= constants.negation_factor
        total += valence
    exclaims = min(_trailing_exclaims(text), constants.exclaim_cap)
    if exclaims and total != 0.0:
        total += math.copysign(exclaims * constants.exclaim_boost, total)
    compound = total / math.sqrt(total * total + constants.alpha)
    compound = max(-1.0, min(1.0, compound))
    return SentimentScore(compound=compound, label=classify(compound))


def classify(compound: float) -> str:
    """Three-way class: > 0.05 positive, < -0.05 negative, else neutral.

    The boundary values +-0.05 are neutral.
    """
    if compound > 0.05:
        return POSITIVE
    if compound < -0.05:
        return NEGATIVE
    return NEUTRAL


def user_sentiment(scores: Iterable[float]) -> float:
    """Arithmetic mean of a user's per-tweet compound scores."""
    values = list(scores)
    if not values:
        raise NoTweetsError("user has no scored tweets")
    return sum(values) / len(values)
