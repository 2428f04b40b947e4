"""Run a character-CTC wav2vec2 model over segment WAVs, emit logit files.

The output follows the decoder's wire formats exactly: one .lgt file per
segment (magic "LGT1", u32-LE frames, u32-LE vocab size, float32-LE values
row-major by time) plus a vocab.txt sidecar listing the token inventory with
"#blank" and "#word_delimiter" directives. Token strings are lowercased on
the way out because the decoder's world is lowercase.

Segments are at most 35 s by construction and are processed whole; chunked
inference would introduce frame-boundary artifacts.
"""

from __future__ import annotations

import logging
import struct
import wave
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

logger = logging.getLogger(__name__)

MAGIC = b"LGT1"
SAMPLE_RATE = 16000


class ModelLoadError(Exception):
    """The acoustic model or its tokenizer could not be loaded."""


class SegmentReadError(Exception):
    """One segment WAV is missing or not 16 kHz mono 16-bit PCM."""


@dataclass(frozen=True)
class ExportJob:
    model: str               # Hugging Face id or local checkpoint directory
    manifest: Path
    audio_dir: Path
    out_dir: Path


@dataclass
class ExportReport:
    written: list[str] = field(default_factory=list)
    failures: list[tuple[str, str]] = field(default_factory=list)  # (segment, error)


def read_manifest(path: Path) -> list[tuple[str, int]]:
    rows = []
    for line in path.read_text(encoding="utf-8").splitlines()[1:]:
        if not line.strip():
            continue
        fields = line.split("\t")
        rows.append((fields[0], int(fields[1])))
    return rows


def read_segment_wav(path: Path) -> np.ndarray:
    if not path.exists():
        raise SegmentReadError(f"{path}: no such file")
    try:
        with wave.open(str(path), "rb") as wav:
            if (wav.getframerate(), wav.getnchannels(), wav.getsampwidth()) != (
                SAMPLE_RATE, 1, 2,
            ):
                raise SegmentReadError(
                    f"{path}: need 16 kHz mono 16-bit, found rate="
                    f"{wav.getframerate()} channels={wav.getnchannels()} "
                    f"width={wav.getsampwidth()}"
                )
            pcm = wav.readframes(wav.getnframes())
    except wave.Error as exc:
        raise SegmentReadError(f"{path}: {exc}")
    return np.frombuffer(pcm, dtype="<i2").astype(np.float32) / 32768.0


def load_model(model_id: str):
    from transformers import AutoFeatureExtractor, AutoTokenizer, Wav2Vec2ForCTC

    try:
        model = Wav2Vec2ForCTC.from_pretrained(model_id).eval()
        tokenizer = AutoTokenizer.from_pretrained(model_id)
        extractor = AutoFeatureExtractor.from_pretrained(model_id)
    except Exception as exc:
        raise ModelLoadError(f"cannot load {model_id!r}: {exc}")
    return model, tokenizer, extractor


def write_logit_file(path: Path, values: np.ndarray) -> None:
    values = np.ascontiguousarray(values, dtype="<f4")
    t, v = values.shape
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", t, v))
        fh.write(values.tobytes())


def write_vocabulary_sidecar(path: Path, tokenizer) -> int:
    """Lowercased token list with blank and word-delimiter directives."""
    size = max(tokenizer.get_vocab().values()) + 1
    tokens = [tokenizer.convert_ids_to_tokens(i).lower() for i in range(size)]
    if len(set(tokens)) != len(tokens):
        raise ModelLoadError("token inventory is not unique after lowercasing")
    blank = tokenizer.pad_token_id
    delimiter = tokenizer.convert_tokens_to_ids(tokenizer.word_delimiter_token)
    lines = [f"#blank {blank}", f"#word_delimiter {delimiter}"]
    lines.extend(tokens)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return size


def export(job: ExportJob) -> ExportReport:
    """Emit one logit file per manifest segment plus the vocabulary sidecar.

    Per-segment failures are logged and collected, never fatal.
    """
    model, tokenizer, extractor = load_model(job.model)
    job.out_dir.mkdir(parents=True, exist_ok=True)
    vocab_size = write_vocabulary_sidecar(job.out_dir / "vocab.txt", tokenizer)

    report = ExportReport()
    for meeting_id, segment_index in read_manifest(job.manifest):
        name = f"{meeting_id}_{segment_index:03d}"
        try:
            samples = read_segment_wav(job.audio_dir / f"{name}.wav")
            inputs = extractor(
                samples, sampling_rate=SAMPLE_RATE, return_tensors="pt"
            )
            with torch.no_grad():
                logits = model(inputs.input_values).logits[0].cpu().numpy()
            if logits.shape[1] != vocab_size:
                raise SegmentReadError(
                    f"model emits {logits.shape[1]} scores, sidecar lists {vocab_size}"
                )
            write_logit_file(job.out_dir / f"{name}.lgt", logits)
            report.written.append(name)
        except Exception as exc:
            logger.warning("segment %s failed: %s", name, exc)
            report.failures.append((name, f"{type(exc).__name__}: {exc}"))
    return report
