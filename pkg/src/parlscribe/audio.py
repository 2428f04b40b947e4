"""WAV reading/writing and silence-seeking segmentation of long recordings.

Recordings are 16 kHz 16-bit mono PCM. Long files are split into 5-30 s
segments by repeatedly cutting at the quietest one-second window (lowest sum
of squared amplitudes) found 5-30 s after the previous cut.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InsufficientAudio, MalformedWav, UnsupportedFormat

SAMPLE_RATE = 16000

# Cut-search geometry, in samples at 16 kHz.
WINDOW = SAMPLE_RATE              # 1 s energy window
STEP = SAMPLE_RATE // 10          # 0.1 s step
MIN_OFFSET = 5 * SAMPLE_RATE      # earliest window left edge after a start
MAX_OFFSET = 29 * SAMPLE_RATE     # latest left edge, so the window ends by 30 s
REMAINDER_LIMIT = 35 * SAMPLE_RATE  # below this, the rest becomes the final segment


@dataclass(frozen=True)
class AudioBuffer:
    """Mono PCM samples plus their sample rate (always 16000 after load)."""

    samples: np.ndarray  # int16
    sample_rate: int = SAMPLE_RATE

    @property
    def duration_seconds(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class Segment:
    """Half-open sample span [start_sample, end_sample) of one recording."""

    start_sample: int
    end_sample: int
    meeting_id: str
    segment_index: int

    @property
    def start_seconds(self) -> float:
        return self.start_sample / SAMPLE_RATE

    @property
    def end_seconds(self) -> float:
        return self.end_sample / SAMPLE_RATE

    @property
    def duration_seconds(self) -> float:
        return (self.end_sample - self.start_sample) / SAMPLE_RATE


def load_wav(path: str | Path) -> AudioBuffer:
    """Parse a RIFF/WAVE file into an AudioBuffer.

    Only PCM, mono, 16-bit, 16000 Hz input is accepted; anything else raises
    UnsupportedFormat with the values actually found. No resampling happens.
    """
    data = Path(path).read_bytes()
    if len(data) < 12 or data[0:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise MalformedWav(f"{path}: not a RIFF/WAVE file")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos:pos + 4]
        (chunk_size,) = struct.unpack("<I", data[pos + 4:pos + 8])
        body = data[pos + 8:pos + 8 + chunk_size]
        if chunk_id == b"fmt ":
            if len(body) < 16:
                raise MalformedWav(f"{path}: fmt chunk truncated ({len(body)} bytes)")
            fmt = struct.unpack("<HHIIHH", body[:16])
        elif chunk_id == b"data":
            if len(body) < chunk_size:
                raise MalformedWav(
                    f"{path}: data chunk declares {chunk_size} bytes, "
                    f"only {len(body)} present"
                )
            payload = body
        # chunks are word-aligned: odd sizes carry a pad byte
        pos += 8 + chunk_size + (chunk_size & 1)

    if fmt is None:
        raise MalformedWav(f"{path}: missing fmt chunk")
    if payload is None:
        raise MalformedWav(f"{path}: missing data chunk")

    audio_format, channels, rate, _byte_rate, _block_align, bits = fmt
    if audio_format != 1 or channels != 1 or rate != SAMPLE_RATE or bits != 16:
        raise UnsupportedFormat(
            f"{path}: need PCM mono 16-bit 16000 Hz, found format={audio_format} "
            f"channels={channels} rate={rate} bits={bits}"
        )

    samples = np.frombuffer(payload, dtype="<i2")
    return AudioBuffer(samples=samples, sample_rate=rate)


def write_wav(path: str | Path, samples: np.ndarray, sample_rate: int = SAMPLE_RATE) -> None:
    """Write int16 samples as a minimal mono PCM WAV file."""
    pcm = np.asarray(samples, dtype="<i2").tobytes()
    header = b"RIFF" + struct.pack("<I", 36 + len(pcm)) + b"WAVE"
    header += b"fmt " + struct.pack(
        "<IHHIIHH", 16, 1, 1, sample_rate, sample_rate * 2, 2, 16
    )
    header += b"data" + struct.pack("<I", len(pcm))
    Path(path).write_bytes(header + pcm)


def _window_energies(samples: np.ndarray, lefts: np.ndarray) -> np.ndarray:
    # 64-bit accumulation: 16000 * 32767^2 overflows 32 bits. Only the span
    # covered by the windows is summed, keeping each call O(search range).
    lo = int(lefts[0])
    hi = int(lefts[-1]) + WINDOW
    sq = samples[lo:hi].astype(np.int64) ** 2
    cumsum = np.concatenate(([0], np.cumsum(sq)))
    return cumsum[lefts - lo + WINDOW] - cumsum[lefts - lo]


def find_cut_point(audio: AudioBuffer, start_sample: int = 0) -> int:
    """Return the center of the quietest 1 s window 5-30 s after start_sample.

    Window left edges move in 0.1 s steps from start+5 s to start+29 s; each
    window's energy is the sum of squared amplitudes over its 16000 samples.
    Ties go to the earliest window.
    """
    n = len(audio.samples)
    first_left = start_sample + MIN_OFFSET
    last_left = min(start_sample + MAX_OFFSET, n - WINDOW)
    if last_left < first_left:
        raise InsufficientAudio(
            f"need at least {(MIN_OFFSET + WINDOW) / SAMPLE_RATE:.0f} s after "
            f"sample {start_sample}, have {(n - start_sample) / SAMPLE_RATE:.2f} s"
        )
    lefts = np.arange(first_left, last_left + 1, STEP)
    energies = _window_energies(audio.samples, lefts)
    best = int(np.argmin(energies))  # argmin takes the first minimum: earliest window
    return int(lefts[best] + WINDOW // 2)


def split_recording(audio: AudioBuffer, meeting_id: str) -> list[Segment]:
    """Split a recording into contiguous segments at local loudness minima.

    Each cut is the quietest moment 5-30 s after the previous cut; once fewer
    than 35 s remain, the rest is emitted as the final segment. Concatenating
    the segments reproduces the sample stream exactly.
    """
    n = len(audio.samples)
    if n == 0:
        raise InsufficientAudio("empty recording")
    bounds = [0]
    while n - bounds[-1] >= REMAINDER_LIMIT:
        bounds.append(find_cut_point(audio, bounds[-1]))
    bounds.append(n)
    return [
        Segment(start, end, meeting_id, i)
        for i, (start, end) in enumerate(zip(bounds, bounds[1:]))
    ]


def segment_wav_name(meeting_id: str, segment_index: int) -> str:
    return f"{meeting_id}_{segment_index:03d}.wav"


def write_segment_manifest(path: str | Path, segments: list[Segment]) -> None:
    """Write the segment manifest: one TSV record per segment."""
    lines = ["meeting_id\tsegment_index\tstart_seconds\tend_seconds"]
    for seg in segments:
        lines.append(
            f"{seg.meeting_id}\t{seg.segment_index}"
            f"\t{seg.start_seconds:.3f}\t{seg.end_seconds:.3f}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_segment_manifest(path: str | Path) -> list[dict]:
    """Read a segment manifest back into a list of record dicts."""
    records = []
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    for line in lines[1:]:
        if not line.strip():
            continue
        meeting_id, index, start, end = line.split("\t")
        records.append(
            {
                "meeting_id": meeting_id,
                "segment_index": int(index),
                "start_seconds": float(start),
                "end_seconds": float(end),
            }
        )
    return records
