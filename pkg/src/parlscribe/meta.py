"""Meeting metadata alignment, hotword list ingestion, corpus assembly.

Audio sessions are matched to agenda/minutes documents by date: same-day
documents link automatically; otherwise candidates from 5 days before to
2 days after are considered, a unique candidate links automatically, and
several candidates produce a needs_review record for a human override file.
"""

from __future__ import annotations

import datetime as dt
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

from .errors import MissingTranscript, UnparseableDate
from .textnorm import normalize_for_eval

WINDOW_BEFORE = 5
WINDOW_AFTER = 2

STATUS_SAME_DAY = "auto_same_day"
STATUS_WINDOW = "auto_window_unique"
STATUS_REVIEW = "needs_review"
STATUS_NONE = "none"
STATUS_OVERRIDE = "manual_override"

_STATUS_RANK = [STATUS_NONE, STATUS_SAME_DAY, STATUS_WINDOW, STATUS_REVIEW]


@dataclass
class MeetingRecord:
    meeting_id: str
    audio_date: dt.date
    agenda_path: str | None = None
    minutes_path: str | None = None
    alignment_status: str = STATUS_NONE
    review_candidates: dict[str, list[str]] = field(default_factory=dict)


def parse_date(value: str, source: str = "") -> dt.date:
    """Accept YYYYMMDD or YYYY-MM-DD; meeting ids may carry a _N suffix."""
    token = value.split("_")[0].replace("-", "")
    if len(token) == 8 and token.isdigit():
        try:
            return dt.date(int(token[:4]), int(token[4:6]), int(token[6:8]))
        except ValueError:
            pass
    raise UnparseableDate(f"cannot parse date {value!r}" + (f" in {source}" if source else ""))


def align_metadata(
    audio_sessions: list[tuple[str, str]],
    documents: list[tuple[str, str, str]],
) -> list[MeetingRecord]:
    """Link each (meeting_id, date) session to (doc_type, date, path) documents.

    Per document type: a same-day document wins outright; otherwise all
    documents dated within [audio-5, audio+2] days are candidates. One
    candidate links automatically, several demand review, none leaves the
    session without that document.
    """
    docs_by_type: dict[str, list[tuple[dt.date, str]]] = defaultdict(list)
    for doc_type, date_str, path in documents:
        docs_by_type[doc_type].append((parse_date(date_str, path), path))

    records = []
    for meeting_id, date_str in audio_sessions:
        audio_date = parse_date(date_str, meeting_id)
        record = MeetingRecord(meeting_id=meeting_id, audio_date=audio_date)
        statuses = []
        for doc_type in ("agenda", "minutes"):
            candidates = docs_by_type.get(doc_type, [])
            same_day = sorted(p for d, p in candidates if d == audio_date)
            in_window = sorted(
                p for d, p in candidates
                if dt.timedelta(-WINDOW_BEFORE) <= d - audio_date <= dt.timedelta(WINDOW_AFTER)
            )
            if same_day:
                status, path = STATUS_SAME_DAY, same_day[0]
            elif len(in_window) == 1:
                status, path = STATUS_WINDOW, in_window[0]
            elif len(in_window) > 1:
                status, path = STATUS_REVIEW, None
                record.review_candidates[doc_type] = in_window
            else:
                status, path = STATUS_NONE, None
            statuses.append(status)
            if doc_type == "agenda":
                record.agenda_path = path
            else:
                record.minutes_path = path
        record.alignment_status = max(statuses, key=_STATUS_RANK.index)
        records.append(record)
    return records


def read_overrides(path: str | Path) -> dict[str, str]:
    """Override file: meeting_id and document path, tab-separated."""
    overrides = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        meeting_id, doc_path = line.split("\t")
        overrides[meeting_id] = doc_path
    return overrides


def apply_overrides(records: list[MeetingRecord], overrides: dict[str, str]) -> None:
    """Resolve needs_review records with human-chosen document paths."""
    for record in records:
        chosen = overrides.get(record.meeting_id)
        if chosen is None or record.alignment_status != STATUS_REVIEW:
            continue
        for doc_type, candidates in list(record.review_candidates.items()):
            if chosen in candidates:
                if doc_type == "agenda":
                    record.agenda_path = chosen
                else:
                    record.minutes_path = chosen
                del record.review_candidates[doc_type]
        if not record.review_candidates:
            record.alignment_status = STATUS_OVERRIDE


def load_hotwords(path: str | Path) -> set[str]:
    """One entity per line; normalized, multi-word entries split into tokens."""
    words: set[str] = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        words.update(normalize_for_eval(line))
    return words


@dataclass(frozen=True)
class CorpusStats:
    total_words: int
    segment_count: int
    meeting_count: int
    words_per_segment_mean: float
    words_per_segment_sd: float
    words_per_meeting_mean: float
    words_per_meeting_sd: float


def _mean_sd(values: list[int]) -> tuple[float, float]:
    if not values:
        return 0.0, 0.0
    mean = sum(values) / len(values)
    sd = math.sqrt(sum((v - mean) ** 2 for v in values) / len(values))
    return mean, sd


def assemble_corpus(transcripts: list, out_dir: str | Path) -> CorpusStats:
    """Write one corpus file per meeting and recount the global statistics.

    Transcripts are TranscriptRecord-like objects; a record with an error or
    missing text raises MissingTranscript because the corpus must be complete.
    """
    by_meeting: dict[str, list] = defaultdict(list)
    for record in transcripts:
        if getattr(record, "error", None):
            raise MissingTranscript(
                f"{record.meeting_id}_{record.segment_index:03d}: {record.error}"
            )
        by_meeting[record.meeting_id].append(record)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    segment_words: list[int] = []
    meeting_words: list[int] = []
    for meeting_id in sorted(by_meeting):
        records = sorted(by_meeting[meeting_id], key=lambda r: r.segment_index)
        lines = ["meeting_id\tsegment_index\tstart_seconds\tend_seconds\ttext"]
        words_here = 0
        for r in records:
            lines.append(
                f"{r.meeting_id}\t{r.segment_index}\t{r.start_seconds:.3f}"
                f"\t{r.end_seconds:.3f}\t{r.text}"
            )
            n_words = len(r.text.split())
            segment_words.append(n_words)
            words_here += n_words
        meeting_words.append(words_here)
        (out / f"{meeting_id}.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    seg_mean, seg_sd = _mean_sd(segment_words)
    meet_mean, meet_sd = _mean_sd(meeting_words)
    return CorpusStats(
        total_words=sum(segment_words),
        segment_count=len(segment_words),
        meeting_count=len(meeting_words),
        words_per_segment_mean=seg_mean,
        words_per_segment_sd=seg_sd,
        words_per_meeting_mean=meet_mean,
        words_per_meeting_sd=meet_sd,
    )


def write_stats(path: str | Path, stats: CorpusStats) -> None:
    """Plain-text stats report, one key per line (machine-parsable)."""
    lines = [
        f"total_words\t{stats.total_words}",
        f"segment_count\t{stats.segment_count}",
        f"meeting_count\t{stats.meeting_count}",
        f"words_per_segment_mean\t{stats.words_per_segment_mean:.3f}",
        f"words_per_segment_sd\t{stats.words_per_segment_sd:.3f}",
        f"words_per_meeting_mean\t{stats.words_per_meeting_mean:.3f}",
        f"words_per_meeting_sd\t{stats.words_per_meeting_sd:.3f}",
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
