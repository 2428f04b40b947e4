"""Word error rate and per-meeting entity precision/recall/F1.

WER = (S + D + I) / N over one minimal word-level alignment of the
evaluation-normalized reference and hypothesis. Entity metrics are
token-level multiset counts of hotwords aggregated over all segments of a
meeting before the ratios are taken.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .errors import EmptyHotwordList, EmptyReference
from .textnorm import NormalizationProfile, normalize_for_eval


@dataclass(frozen=True)
class WerReport:
    substitutions: int
    deletions: int
    insertions: int
    reference_words: int

    @property
    def wer(self) -> float:
        return (self.substitutions + self.deletions + self.insertions) / self.reference_words


@dataclass(frozen=True)
class EntityMetrics:
    meeting_id: str
    true_positives: int
    false_positives: int
    false_negatives: int

    @property
    def precision(self) -> float:
        tp, fp, fn = self.true_positives, self.false_positives, self.false_negatives
        if tp + fp == 0:
            return 1.0 if fn == 0 else 0.0
        return tp / (tp + fp)

    @property
    def recall(self) -> float:
        tp, fp, fn = self.true_positives, self.false_positives, self.false_negatives
        if tp + fn == 0:
            return 1.0 if fp == 0 else 0.0
        return tp / (tp + fn)

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        if p + r == 0:
            return 0.0
        return 2 * p * r / (p + r)


def align_counts(ref: list[str], hyp: list[str]) -> tuple[int, int, int]:
    """S, D, I from one minimal edit alignment.

    Ties during traceback prefer the diagonal (match/substitution) over
    deletion over insertion. The diagonal-first rule makes the substitution
    count symmetric under swapping the sides; the total S+D+I is optimal and
    alignment-independent either way.
    """
    n, m = len(ref), len(hyp)
    dist = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        dist[i][0] = i
    for j in range(m + 1):
        dist[0][j] = j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            sub = dist[i - 1][j - 1] + (ref[i - 1] != hyp[j - 1])
            dist[i][j] = min(dist[i - 1][j] + 1, sub, dist[i][j - 1] + 1)
    s = d = ins = 0
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and dist[i][j] == dist[i - 1][j - 1] + (ref[i - 1] != hyp[j - 1]):
            s += ref[i - 1] != hyp[j - 1]
            i -= 1
            j -= 1
        elif i > 0 and dist[i][j] == dist[i - 1][j] + 1:
            d += 1
            i -= 1
        else:
            ins += 1
            j -= 1
    return s, d, ins


def word_error_rate(
    reference: str, hypothesis: str, profile: NormalizationProfile | None = None
) -> WerReport:
    """WER of one segment; both sides get the evaluation normalization."""
    ref = normalize_for_eval(reference, profile)
    hyp = normalize_for_eval(hypothesis, profile)
    if not ref:
        raise EmptyReference(f"reference empty after normalization: {reference!r}")
    s, d, i = align_counts(ref, hyp)
    return WerReport(substitutions=s, deletions=d, insertions=i, reference_words=len(ref))


def corpus_wer(
    pairs: list[tuple[str, str]], profile: NormalizationProfile | None = None
) -> float:
    """Unweighted mean of per-segment WERs (not pooled counts)."""
    if not pairs:
        raise EmptyReference("no (reference, hypothesis) pairs")
    reports = [word_error_rate(ref, hyp, profile) for ref, hyp in pairs]
    return sum(r.wer for r in reports) / len(reports)


def entity_metrics(
    meeting_id: str,
    pairs: list[tuple[str, str]],
    hotwords: set[str],
    profile: NormalizationProfile | None = None,
) -> EntityMetrics:
    """Token-level TP/FP/FN of hotwords, summed over a meeting's segments.

    Per word: TP = min(reference count, hypothesis count), FP = hypothesis
    surplus, FN = reference surplus.
    """
    if not hotwords:
        raise EmptyHotwordList(f"meeting {meeting_id} has no hotwords")
    tp = fp = fn = 0
    for reference, hypothesis in pairs:
        ref = Counter(w for w in normalize_for_eval(reference, profile) if w in hotwords)
        hyp = Counter(w for w in normalize_for_eval(hypothesis, profile) if w in hotwords)
        for word in set(ref) | set(hyp):
            tp += min(ref[word], hyp[word])
            fp += max(hyp[word] - ref[word], 0)
            fn += max(ref[word] - hyp[word], 0)
    return EntityMetrics(
        meeting_id=meeting_id,
        true_positives=tp,
        false_positives=fp,
        false_negatives=fn,
    )
