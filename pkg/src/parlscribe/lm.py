"""Backoff n-gram language model: counting, Kneser-Ney fitting, ARPA I/O.

Estimation is interpolated Kneser-Ney with one absolute discount per order,
D_k = n1/(n1 + 2*n2), computed from the count-of-counts of that order's
adjusted counts (raw at the highest order, distinct-predecessor counts
below, raw again for grams starting with <s>). The leftover unigram mass
goes to <unk>. Probabilities are kept in log10 to match the ARPA format and
are rounded to the 7 decimals the serializer prints, so a written-then-read
model answers queries identically to the model in memory.
"""

from __future__ import annotations

import math
import warnings
from collections import defaultdict
from pathlib import Path
from typing import Iterable, NamedTuple

from .errors import ArpaSyntax, CountMismatch, DegenerateCounts, EmptyCorpus

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"

SENTINEL_LOG10 = -99.0  # conventional "never predicted" probability

Gram = tuple[str, ...]
Entry = tuple[float, float | None]  # (log10 prob, log10 backoff or None)


class LmState(NamedTuple):
    """Decoder-side query state: the most recent (order-1) words."""

    context: Gram


class NGramModel:
    """Tables of (log10 prob, log10 backoff) per order, queryable by backoff."""

    def __init__(self, order: int, tables: list[dict[Gram, Entry]]):
        assert len(tables) == order
        self.order = order
        self.tables = tables
        self.vocab = {g[0] for g in tables[0]} - {BOS}

    def initial_state(self) -> LmState:
        return LmState(context=(BOS,) * (self.order - 1))

    def lookup(self, gram: Gram) -> Entry | None:
        if len(gram) > self.order:
            return None
        return self.tables[len(gram) - 1].get(gram)

    def score_word(self, state: LmState, word: str) -> tuple[float, LmState]:
        """Backoff-score one word in context; OOV words map to <unk>.

        Returns the log10 probability and the advanced state. No backoff
        penalty is applied when the full n-gram is present.
        """
        w = word if word in self.vocab else UNK
        context = state.context[-(self.order - 1):] if self.order > 1 else ()
        penalty = 0.0
        ctx = context
        while True:
            entry = self.lookup(ctx + (w,))
            if entry is not None:
                logp = penalty + entry[0]
                break
            if not ctx:
                # unreachable for a well-formed model: <unk> is always a unigram
                logp = penalty + SENTINEL_LOG10
                break
            ctx_entry = self.lookup(ctx)
            if ctx_entry is not None and ctx_entry[1] is not None:
                penalty += ctx_entry[1]
            ctx = ctx[1:]
        next_context = (context + (w,))[-(self.order - 1):] if self.order > 1 else ()
        return logp, LmState(context=next_context)

    def sentence_logprob(self, words: list[str]) -> float:
        """log10 probability of a sentence including the end marker."""
        state = self.initial_state()
        total = 0.0
        for w in list(words) + [EOS]:
            logp, state = self.score_word(state, w)
            total += logp
        return total


def count_ngrams(lines: Iterable[str], order: int) -> list[dict[Gram, int]]:
    """Count all k-grams (k <= order) over <s>-padded, </s>-terminated lines.

    Each line gets (order-1) leading <s> and one trailing </s>. Grams ending
    in <s> are never predicted and are not counted.
    """
    counts: list[dict[Gram, int]] = [defaultdict(int) for _ in range(order)]
    seen_any = False
    for line in lines:
        words = line.split()
        if not words:
            continue
        seen_any = True
        padded = [BOS] * (order - 1) + words + [EOS]
        for k in range(1, order + 1):
            table = counts[k - 1]
            for i in range(len(padded) - k + 1):
                gram = tuple(padded[i:i + k])
                if gram[-1] != BOS:
                    table[gram] += 1
    if not seen_any:
        raise EmptyCorpus("no non-empty lines in the corpus")
    return [dict(t) for t in counts]


def _adjusted_counts(raw: list[dict[Gram, int]], order: int) -> list[dict[Gram, int]]:
    """Raw counts at the top order; distinct-predecessor counts below.

    Grams starting with <s> keep raw counts: nothing can precede them.
    """
    adjusted: list[dict[Gram, int]] = [dict() for _ in range(order)]
    adjusted[order - 1] = dict(raw[order - 1])
    for k in range(order - 1, 0, -1):
        continuation: dict[Gram, int] = defaultdict(int)
        for gram in raw[k]:  # (k+1)-grams; each key is one distinct predecessor
            continuation[gram[1:]] += 1
        table = {}
        for gram, c in raw[k - 1].items():
            if gram[0] == BOS:
                table[gram] = c
            else:
                table[gram] = continuation.get(gram, c)
        adjusted[k - 1] = table
    return adjusted


def _discounts(adjusted: list[dict[Gram, int]]) -> list[float]:
    out = []
    for k, table in enumerate(adjusted, start=1):
        n1 = sum(1 for c in table.values() if c == 1)
        n2 = sum(1 for c in table.values() if c == 2)
        if n1 == 0 or n2 == 0:
            warnings.warn(
                f"order {k}: count-of-counts n1={n1} n2={n2} make the discount "
                "degenerate; falling back to D=0.5",
                DegenerateCounts,
            )
            out.append(0.5)
        else:
            out.append(n1 / (n1 + 2 * n2))
    return out


def _round7(x: float) -> float:
    return round(x, 7)


def estimate_model(raw_counts: list[dict[Gram, int]], order: int) -> NGramModel:
    """Fit an interpolated Kneser-Ney model from raw count tables.

    The stored probability of a seen gram is the fully interpolated estimate;
    the backoff weight of a context is its discounted mass, so the backoff
    recursion sums to one over the vocabulary for every context.
    """
    if len(raw_counts) != order or not raw_counts[order - 1]:
        raise EmptyCorpus("cannot estimate a model from empty counts")
    adjusted = _adjusted_counts(raw_counts, order)
    discount = _discounts(adjusted)

    # Per-context totals and distinct continuation counts, per order.
    ctx_total: list[dict[Gram, int]] = [defaultdict(int) for _ in range(order)]
    ctx_distinct: list[dict[Gram, int]] = [defaultdict(int) for _ in range(order)]
    for k in range(1, order + 1):
        for gram, c in adjusted[k - 1].items():
            ctx_total[k - 1][gram[:-1]] += c
            ctx_distinct[k - 1][gram[:-1]] += 1

    def gamma(level: int, context: Gram) -> float:
        # leftover mass of `context` at `level` (the order being predicted)
        total = ctx_total[level - 1][context]
        return discount[level - 1] * ctx_distinct[level - 1][context] / total

    # Interpolated probabilities, bottom-up; kept linear until the final log.
    probs: list[dict[Gram, float]] = [dict() for _ in range(order)]
    unigram_total = sum(adjusted[0].values())
    d1 = discount[0]
    for gram, c in adjusted[0].items():
        probs[0][gram] = (c - d1) / unigram_total
    probs[0][(UNK,)] = d1 * len(adjusted[0]) / unigram_total
    for k in range(2, order + 1):
        dk = discount[k - 1]
        for gram, c in adjusted[k - 1].items():
            context = gram[:-1]
            lower = probs[k - 2][gram[1:]]  # suffix always present
            probs[k - 1][gram] = (
                (c - dk) / ctx_total[k - 1][context]
                + gamma(k, context) * lower
            )

    # Assemble entries; contexts of (k+1)-grams carry their backoff weight.
    tables: list[dict[Gram, Entry]] = [dict() for _ in range(order)]
    for k in range(1, order + 1):
        bow_contexts = set(ctx_total[k].keys()) if k < order else set()
        for gram, p in probs[k - 1].items():
            bow = _round7(math.log10(gamma(k + 1, gram))) if gram in bow_contexts else None
            tables[k - 1][gram] = (_round7(math.log10(p)), bow)
        # pure-<s> contexts exist only as backoff carriers, never predicted
        for context in bow_contexts - set(probs[k - 1]):
            tables[k - 1][context] = (
                SENTINEL_LOG10,
                _round7(math.log10(gamma(k + 1, context))),
            )
    return NGramModel(order, tables)


def fit_ngram_model(lines: Iterable[str], order: int) -> NGramModel:
    return estimate_model(count_ngrams(lines, order), order)


def perplexity(model: NGramModel, lines: Iterable[str]) -> float:
    """Per-token perplexity (base 10), counting the </s> after every line."""
    total = 0.0
    tokens = 0
    for line in lines:
        words = line.split()
        if not words:
            continue
        total += model.sentence_logprob(words)
        tokens += len(words) + 1
    if tokens == 0:
        raise EmptyCorpus("no non-empty lines to score")
    return 10.0 ** (-total / tokens)


def write_arpa(model: NGramModel, path: str | Path) -> None:
    """Serialize in ARPA text format with fixed 7-decimal printing."""
    lines = ["\\data\\"]
    for k in range(1, model.order + 1):
        lines.append(f"ngram {k}={len(model.tables[k - 1])}")
    for k in range(1, model.order + 1):
        lines.append("")
        lines.append(f"\\{k}-grams:")
        for gram in sorted(model.tables[k - 1]):
            logp, bow = model.tables[k - 1][gram]
            row = f"{logp:.7f}\t{' '.join(gram)}"
            if bow is not None:
                row += f"\t{bow:.7f}"
            lines.append(row)
    lines.append("")
    lines.append("\\end\\")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_arpa(path: str | Path) -> NGramModel:
    """Parse an ARPA file; diagnostics name the offending line."""
    declared: dict[int, int] = {}
    tables: list[dict[Gram, Entry]] = []
    section = None  # None -> before \data\, 0 -> \data\, k -> \k-grams:
    ended = False
    for lineno, rawline in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        line = rawline.strip()
        if not line:
            continue
        if line == "\\data\\":
            section = 0
            continue
        if line == "\\end\\":
            ended = True
            break
        if line.startswith("\\") and line.endswith("-grams:"):
            try:
                k = int(line[1:-len("-grams:")])
            except ValueError:
                raise ArpaSyntax(f"line {lineno}: bad section header {line!r}")
            if k not in declared:
                raise ArpaSyntax(f"line {lineno}: section {k} not declared in \\data\\")
            section = k
            continue
        if section == 0:
            if not line.startswith("ngram "):
                raise ArpaSyntax(f"line {lineno}: expected 'ngram k=N', got {line!r}")
            try:
                k_str, n_str = line[len("ngram "):].split("=")
                declared[int(k_str)] = int(n_str)
            except ValueError:
                raise ArpaSyntax(f"line {lineno}: malformed count {line!r}")
            while len(tables) < len(declared):
                tables.append({})
            continue
        if section is None:
            raise ArpaSyntax(f"line {lineno}: content before \\data\\")
        # tab- and space-separated layouts both reduce to whitespace tokens
        tokens = line.split()
        if len(tokens) not in (section + 1, section + 2):
            raise ArpaSyntax(
                f"line {lineno}: expected {section}-gram row, got {line!r}"
            )
        try:
            logp = float(tokens[0])
            bow = float(tokens[section + 1]) if len(tokens) == section + 2 else None
        except ValueError:
            raise ArpaSyntax(f"line {lineno}: non-numeric field in {line!r}")
        gram = tuple(tokens[1:section + 1])
        tables[section - 1][gram] = (logp, bow)
    if not ended:
        raise ArpaSyntax("missing \\end\\ marker")
    if not declared:
        raise ArpaSyntax("missing \\data\\ section")
    order = max(declared)
    if sorted(declared) != list(range(1, order + 1)):
        raise ArpaSyntax(f"non-contiguous n-gram orders declared: {sorted(declared)}")
    for k, n in declared.items():
        if len(tables[k - 1]) != n:
            raise CountMismatch(
                f"\\data\\ declares ngram {k}={n}, section holds {len(tables[k - 1])}"
            )
    return NGramModel(order, tables)
