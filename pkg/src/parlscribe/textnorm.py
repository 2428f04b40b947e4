"""Text normalization for LM training corpora and for WER evaluation.

Two pipelines with different contracts: the LM-corpus pipeline strips markup
and parentheses, splits sentences, spells out numbers, and reduces text to
lowercase a-z plus apostrophes treated as separate tokens; the evaluation
pipeline lowercases, folds diacritics, drops punctuation and hesitation
words, and returns the word sequence actually compared by the WER metric.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path

from .errors import NotANumber

DEFAULT_HESITATIONS = frozenset({"eh", "ehm", "er", "ar", "uh", "e"})

_TAG_RE = re.compile(r"<[^>]*>")
_PAREN_RE = re.compile(r"\([^()]*\)")
_NUMBER_RE = re.compile(r"(?<![A-Za-z0-9])\d+(?:\.\d+)?(?![A-Za-z0-9])")
_NON_WORD_RE = re.compile(r"[^a-z']+")
_EVAL_KEEP_RE = re.compile(r"[^a-z0-9']+")

# Tokens before a period that do not end a sentence.
_ABBREVIATIONS = frozenset({
    "mr", "mrs", "ms", "dr", "prof", "st", "vs", "etc", "no", "fig",
    "cf", "jr", "sr", "e.g", "i.e",
})

_ONES = (
    "zero one two three four five six seven eight nine ten eleven twelve "
    "thirteen fourteen fifteen sixteen seventeen eighteen nineteen"
).split()
_TENS = (
    "_ _ twenty thirty forty fifty sixty seventy eighty ninety"
).split()
_SCALES = ("", "thousand", "million", "billion", "trillion", "quadrillion")


@dataclass(frozen=True)
class NormalizationProfile:
    """Which pipeline to apply and which hesitation words it drops."""

    mode: str = "evaluation"  # or "lm_corpus"
    hesitation_words: frozenset[str] = field(default=DEFAULT_HESITATIONS)

    def __post_init__(self):
        if self.mode == "evaluation" and not self.hesitation_words:
            raise ValueError("evaluation profile needs a non-empty hesitation set")


def load_hesitation_words(path: str | Path) -> frozenset[str]:
    """Read an override hesitation list, one word per line."""
    words = {
        line.strip().lower()
        for line in Path(path).read_text(encoding="utf-8").splitlines()
        if line.strip()
    }
    return frozenset(words)


def _spell_integer(n: int) -> list[str]:
    if n == 0:
        return ["zero"]
    groups = []
    while n > 0:
        groups.append(n % 1000)
        n //= 1000
    if len(groups) > len(_SCALES):
        return []  # caller falls back to digit-wise reading
    words: list[str] = []
    for i in range(len(groups) - 1, -1, -1):
        g = groups[i]
        if g == 0:
            continue
        hundreds, rest = divmod(g, 100)
        if hundreds:
            words += [_ONES[hundreds], "hundred"]
        if rest >= 20:
            words.append(_TENS[rest // 10])
            if rest % 10:
                words.append(_ONES[rest % 10])
        elif rest:
            words.append(_ONES[rest])
        if _SCALES[i]:
            words.append(_SCALES[i])
    return words


def number_to_words(token: str) -> str:
    """Spell an integer or decimal token as lowercase English words.

    Cardinals carry no hyphens and no "and"; decimal digits are read one by
    one after "point" ("9.74" -> "nine point seven four").
    """
    if not re.fullmatch(r"\d+(?:\.\d+)?", token):
        raise NotANumber(f"{token!r} is not an integer or decimal token")
    if "." in token:
        whole, frac = token.split(".")
        words = _spell_integer(int(whole)) + ["point"] + [_ONES[int(d)] for d in frac]
        return " ".join(words)
    words = _spell_integer(int(token))
    if not words:  # beyond the scale table: read digit-wise
        words = [_ONES[int(d)] for d in token]
    return " ".join(words)


def _split_sentences(text: str) -> list[str]:
    """Rule-based split on .!? followed by whitespace and a capital letter."""
    sentences = []
    start = 0
    for m in re.finditer(r"[.!?]+\s+(?=[A-Z])", text):
        candidate = text[start:m.end()]
        prev_word = candidate.rstrip(" .!?").rsplit(None, 1)
        if prev_word and prev_word[-1].lower().rstrip(".") in _ABBREVIATIONS:
            continue
        sentences.append(candidate)
        start = m.end()
    sentences.append(text[start:])
    return [s for s in sentences if s.strip()]


def normalize_lm_corpus(text: str) -> list[str]:
    """Normalize a raw document into LM training lines, one sentence each.

    Steps, in order: strip markup tags, strip parenthesized spans (innermost
    first), sentence-split, spell out numbers, lowercase, map non-word
    characters except the apostrophe to spaces, collapse whitespace, and
    surround apostrophes with spaces so they become separate tokens.
    """
    text = _TAG_RE.sub(" ", text)
    while _PAREN_RE.search(text):
        text = _PAREN_RE.sub(" ", text)
    lines = []
    for sentence in _split_sentences(text):
        sentence = _NUMBER_RE.sub(lambda m: number_to_words(m.group()), sentence)
        sentence = sentence.lower()
        sentence = _NON_WORD_RE.sub(" ", sentence)
        sentence = sentence.replace("'", " ' ")
        sentence = " ".join(sentence.split())
        if sentence:
            lines.append(sentence)
    return lines


def fold_diacritics(text: str) -> str:
    """Replace accented characters by their base form (orbán -> orban)."""
    decomposed = unicodedata.normalize("NFKD", text)
    return "".join(c for c in decomposed if not unicodedata.combining(c))


def normalize_for_eval(
    text: str, profile: NormalizationProfile | None = None
) -> list[str]:
    """Normalize text into the word sequence used for WER and entity counts.

    Lowercases, folds diacritics to ASCII, drops punctuation except the
    apostrophe, collapses whitespace, and removes hesitation words.
    """
    hesitations = (profile or NormalizationProfile()).hesitation_words
    text = fold_diacritics(text.lower())
    text = _EVAL_KEEP_RE.sub(" ", text)
    return [w for w in text.split() if w not in hesitations]
