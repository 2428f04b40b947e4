"""CTC decoding: greedy, prefix beam search, n-gram fusion, hotword boosts.

The beam search keeps one beam per labeling (collapsed token sequence) and
tracks blank/non-blank path mass separately, merging duplicate labelings by
log-sum-exp so that with no pruning the winning beam is exactly the
maximum-probability labeling. Language-model fusion adds
alpha * ln P(word | context) + beta once per completed word; hotword boosts
add weight * c_partial per character while the current partial word follows
the hotword trie and weight * c_full when a listed word completes.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import MissingLogits
from .lm import LmState, NGramModel
from .logits import LogitMatrix, Vocabulary, log_softmax, logit_file_name, read_logits

LN10 = math.log(10.0)
NEG_INF = float("-inf")


@dataclass(frozen=True)
class DecodeConfig:
    mode: str = "greedy"  # greedy | beam | beam_lm
    beam_width: int = 100
    alpha: float = 0.5
    beta: float = 1.0
    token_min_logp: float | None = -5.0  # natural log; None disables pruning
    hotwords: tuple[str, ...] = ()
    hotword_weight: float = 0.0
    partial_char_bonus: float = 1.0  # c_partial, per matched character
    full_word_bonus: float = 2.0    # c_full, on completing a listed word

    def __post_init__(self):
        if self.mode not in ("greedy", "beam", "beam_lm"):
            raise ValueError(f"unknown decode mode {self.mode!r}")
        if self.beam_width < 1:
            raise ValueError("beam_width must be >= 1")
        if self.alpha < 0 or self.hotword_weight < 0:
            raise ValueError("alpha and hotword_weight must be >= 0")


class HotwordTrie:
    """Character trie over the (lowercased) hotword set."""

    def __init__(self, words: "set[str] | tuple[str, ...] | list[str]"):
        self._children: list[dict[str, int]] = [{}]
        self._is_word: list[bool] = [False]
        for word in sorted({w.lower() for w in words if w}):
            node = 0
            for ch in word:
                nxt = self._children[node].get(ch)
                if nxt is None:
                    nxt = len(self._children)
                    self._children[node][ch] = nxt
                    self._children.append({})
                    self._is_word.append(False)
                node = nxt
            self._is_word[node] = True

    ROOT = 0

    def child(self, node: int, ch: str) -> int | None:
        return self._children[node].get(ch)

    def is_word(self, node: int) -> bool:
        return self._is_word[node]

    def __contains__(self, word: str) -> bool:
        node = 0
        for ch in word:
            node = self._children[node].get(ch)
            if node is None:
                return False
        return self._is_word[node]


@dataclass(frozen=True)
class BeamState:
    """One labeling hypothesis during prefix beam search.

    `words` keeps empty strings for delimiter runs so that distinct labelings
    never share a key; they are dropped when the text is rendered.
    """

    words: tuple[str, ...] = ()
    partial: str = ""
    last_token: int | None = None
    p_blank: float = 0.0
    p_non_blank: float = NEG_INF
    fusion: float = 0.0             # accumulated alpha/beta/hotword terms
    lm_state: LmState | None = None
    hot_node: int | None = None

    @property
    def key(self) -> tuple:
        return (self.words, self.partial, self.last_token)

    @property
    def acoustic(self) -> float:
        return np.logaddexp(self.p_blank, self.p_non_blank)

    @property
    def score(self) -> float:
        return float(self.acoustic + self.fusion)


@dataclass(frozen=True)
class DecodeResult:
    text: str
    score: float
    used_fallback: bool = False


def _collapse(ids: list[int], vocab: Vocabulary) -> str:
    out: list[str] = []
    prev = None
    for tok in ids:
        if tok != prev and not vocab.is_special(tok):
            out.append(vocab.tokens[tok])
        if tok == vocab.word_delimiter_index and tok != prev:
            out.append(" ")
        prev = tok
    return " ".join("".join(out).split())


def greedy_decode(logits: LogitMatrix, vocab: Vocabulary) -> str:
    """Frame-wise argmax, collapse repeats, drop blanks, delimiter -> space."""
    ids = np.argmax(logits.values, axis=1).tolist()  # argmax ties: lowest index
    return _collapse(ids, vocab)


def _complete_word(
    beam: BeamState,
    lm: NGramModel | None,
    config: DecodeConfig,
    trie: HotwordTrie | None,
    lm_cache: dict,
) -> tuple[float, LmState | None]:
    """Fusion delta and next LM state for completing beam.partial."""
    if not beam.partial:
        return 0.0, beam.lm_state
    delta = 0.0
    next_state = beam.lm_state
    if lm is not None:
        cache_key = (beam.lm_state.context, beam.partial)
        hit = lm_cache.get(cache_key)
        if hit is None:
            hit = lm.score_word(beam.lm_state, beam.partial)
            lm_cache[cache_key] = hit
        log10p, next_state = hit
        delta += config.alpha * log10p * LN10 + config.beta
    if trie is not None and beam.hot_node is not None and trie.is_word(beam.hot_node):
        delta += config.hotword_weight * config.full_word_bonus
    return delta, next_state


def beam_decode(
    logits: LogitMatrix,
    vocab: Vocabulary,
    config: DecodeConfig,
    lm: NGramModel | None = None,
) -> DecodeResult:
    """CTC prefix beam search, optionally fused with an n-gram model.

    Each frame expands every beam by blank, by repeating its last token, and
    by every character/delimiter above the pruning floor; the top beam_width
    expansions survive and same-labeling survivors are merged by log-sum-exp.
    """
    if config.mode == "beam_lm" and lm is None:
        raise ValueError("mode beam_lm needs a language model")
    if config.mode != "beam_lm":
        lm = None
    frames = log_softmax(logits).values.astype(np.float64)
    blank = vocab.blank_index
    delimiter = vocab.word_delimiter_index
    extendable = list(vocab.character_indices) + [delimiter]
    trie = HotwordTrie(config.hotwords) if config.hotwords else None
    lm_cache: dict = {}

    start = BeamState(
        lm_state=lm.initial_state() if lm is not None else None,
        hot_node=HotwordTrie.ROOT if trie is not None else None,
    )
    beams: dict[tuple, BeamState] = {start.key: start}

    for t in range(frames.shape[0]):
        lp = frames[t]
        if config.token_min_logp is not None:
            tokens = [k for k in extendable if lp[k] >= config.token_min_logp]
        else:
            tokens = extendable

        # (rank, tiebreak symbol, key, blank_side, mass, prototype beam)
        events: list[tuple] = []
        for beam in beams.values():
            total = beam.acoustic
            events.append((
                total + lp[blank] + beam.fusion, blank, beam.key, True,
                total + lp[blank], beam,
            ))
            if beam.last_token is not None and beam.p_non_blank > NEG_INF:
                mass = beam.p_non_blank + lp[beam.last_token]
                events.append((
                    mass + beam.fusion, beam.last_token, beam.key, False,
                    mass, beam,
                ))
            for tok in tokens:
                base = beam.p_blank if tok == beam.last_token else total
                if base == NEG_INF:
                    continue
                mass = base + lp[tok]
                if tok == delimiter:
                    delta, lm_next = _complete_word(beam, lm, config, trie, lm_cache)
                    new = replace(
                        beam,
                        words=beam.words + (beam.partial,),
                        partial="",
                        last_token=tok,
                        fusion=beam.fusion + delta,
                        lm_state=lm_next,
                        hot_node=HotwordTrie.ROOT if trie is not None else None,
                    )
                else:
                    ch = vocab.tokens[tok]
                    delta = 0.0
                    node = None
                    if trie is not None and beam.hot_node is not None:
                        node = trie.child(beam.hot_node, ch)
                        if node is not None:
                            delta = config.hotword_weight * config.partial_char_bonus
                    new = replace(
                        beam,
                        partial=beam.partial + ch,
                        last_token=tok,
                        fusion=beam.fusion + delta,
                        hot_node=node,
                    )
                events.append((mass + new.fusion, tok, new.key, False, mass, new))

        events.sort(key=lambda e: (-e[0], e[1], e[2]))
        merged: dict[tuple, BeamState] = {}
        for _rank, _sym, key, blank_side, mass, proto in events[:config.beam_width]:
            cur = merged.get(key)
            if cur is None:
                cur = replace(proto, p_blank=NEG_INF, p_non_blank=NEG_INF)
            if blank_side:
                cur = replace(cur, p_blank=float(np.logaddexp(cur.p_blank, mass)))
            else:
                cur = replace(cur, p_non_blank=float(np.logaddexp(cur.p_non_blank, mass)))
            merged[key] = cur
        if not merged:
            return DecodeResult(greedy_decode(logits, vocab), NEG_INF, used_fallback=True)
        beams = merged

    # score the trailing partial word as if completed: segments cut mid-speech
    finished: list[tuple[float, tuple, str]] = []
    for beam in beams.values():
        delta, _ = _complete_word(beam, lm, config, trie, lm_cache)
        words = beam.words + ((beam.partial,) if beam.partial else ())
        text = " ".join(w for w in words if w)
        finished.append((beam.score + delta, beam.key, text))
    finished.sort(key=lambda item: (-item[0], item[1]))
    return DecodeResult(text=finished[0][2], score=float(finished[0][0]))


def decode_segment(
    logits: LogitMatrix,
    vocab: Vocabulary,
    config: DecodeConfig,
    lm: NGramModel | None = None,
) -> DecodeResult:
    if config.mode == "greedy":
        return DecodeResult(text=greedy_decode(logits, vocab), score=0.0)
    return beam_decode(logits, vocab, config, lm)


@dataclass(frozen=True)
class TranscriptRecord:
    meeting_id: str
    segment_index: int
    start_seconds: float
    end_seconds: float
    text: str
    score: float
    decode_mode: str
    error: str | None = None


# shared per-worker state: the vocab, config, and language model are sent to
# each worker once instead of being pickled with every task
_WORKER: dict = {}


def _init_worker(logit_dir: str, vocab, config, lm) -> None:
    _WORKER.update(logit_dir=logit_dir, vocab=vocab, config=config, lm=lm)


def _decode_one(record: dict) -> TranscriptRecord:
    config: DecodeConfig = _WORKER["config"]
    name = logit_file_name(record["meeting_id"], record["segment_index"])
    path = Path(_WORKER["logit_dir"]) / name
    base = dict(
        meeting_id=record["meeting_id"],
        segment_index=record["segment_index"],
        start_seconds=record["start_seconds"],
        end_seconds=record["end_seconds"],
        decode_mode=config.mode,
    )
    try:
        if not path.exists():
            raise MissingLogits(f"no logit file {name}")
        result = decode_segment(
            read_logits(path), _WORKER["vocab"], config, _WORKER["lm"]
        )
        return TranscriptRecord(text=result.text, score=result.score, **base)
    except Exception as exc:  # failures stay isolated per segment
        return TranscriptRecord(
            text="", score=NEG_INF, error=f"{type(exc).__name__}: {exc}", **base
        )


def decode_corpus(
    manifest: list[dict],
    logit_dir: str | Path,
    vocab: Vocabulary,
    config: DecodeConfig,
    lm: NGramModel | None = None,
    jobs: int = 1,
) -> list[TranscriptRecord]:
    """Decode every manifest segment; order preserved, failures isolated.

    The result is identical for any worker count: the pool map keeps the
    manifest order and each decode is a pure function of its inputs.
    """
    if jobs <= 1 or len(manifest) <= 1:
        _init_worker(str(logit_dir), vocab, config, lm)
        try:
            return [_decode_one(rec) for rec in manifest]
        finally:
            _WORKER.clear()
    with ProcessPoolExecutor(
        max_workers=jobs,
        initializer=_init_worker,
        initargs=(str(logit_dir), vocab, config, lm),
    ) as pool:
        return list(pool.map(_decode_one, manifest))


def write_transcripts(path: str | Path, records: list[TranscriptRecord]) -> None:
    lines = ["meeting_id\tsegment_index\tstart_seconds\tend_seconds\ttext\tscore\tdecode_mode\terror"]
    for r in records:
        lines.append(
            f"{r.meeting_id}\t{r.segment_index}\t{r.start_seconds:.3f}\t{r.end_seconds:.3f}"
            f"\t{r.text}\t{r.score:.6f}\t{r.decode_mode}\t{r.error or ''}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_transcripts(path: str | Path) -> list[TranscriptRecord]:
    records = []
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    for line in lines[1:]:
        if not line:
            continue
        meeting_id, idx, start, end, text, score, mode, error = line.split("\t")
        records.append(TranscriptRecord(
            meeting_id=meeting_id,
            segment_index=int(idx),
            start_seconds=float(start),
            end_seconds=float(end),
            text=text,
            score=float(score),
            decode_mode=mode,
            error=error or None,
        ))
    return records
