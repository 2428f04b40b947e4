"""Binary logit-matrix format and the CTC token vocabulary sidecar.

One .lgt file holds the raw (pre-softmax) acoustic scores for one audio
segment: magic "LGT1", u32-LE frame count T, u32-LE vocabulary size V, then
T*V float32-LE values, row-major by time. The vocabulary lives in a sidecar
text file: two directive lines naming the blank and word-delimiter indices,
then one token per line in index order.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BadMagic, BadVocabulary, DimensionMismatch, NonFiniteValue

MAGIC = b"LGT1"
WORD_CHARS = set("abcdefghijklmnopqrstuvwxyz'")


@dataclass(frozen=True)
class Vocabulary:
    """Ordered CTC token inventory with blank and word-delimiter roles.

    Tokens other than the blank and the delimiter are single characters from
    a-z plus the apostrophe; angle-bracketed markers (e.g. "<unk>") are
    tolerated as extra specials that the decoders never emit.
    """

    tokens: tuple[str, ...]
    blank_index: int
    word_delimiter_index: int

    def __post_init__(self):
        if len(set(self.tokens)) != len(self.tokens):
            raise BadVocabulary("duplicate tokens")
        for idx, name in ((self.blank_index, "blank"),
                          (self.word_delimiter_index, "word_delimiter")):
            if not 0 <= idx < len(self.tokens):
                raise BadVocabulary(f"{name} index {idx} out of range")
        if self.blank_index == self.word_delimiter_index:
            raise BadVocabulary("blank and word_delimiter must differ")
        for i, tok in enumerate(self.tokens):
            if i in (self.blank_index, self.word_delimiter_index):
                continue
            if tok.startswith("<") and tok.endswith(">"):
                continue
            if len(tok) != 1 or tok not in WORD_CHARS:
                raise BadVocabulary(f"token {tok!r} is not a single character from a-z'")

    def __len__(self) -> int:
        return len(self.tokens)

    def is_special(self, index: int) -> bool:
        """True for blank, delimiter, and angle-bracket markers."""
        if index in (self.blank_index, self.word_delimiter_index):
            return True
        tok = self.tokens[index]
        return tok.startswith("<") and tok.endswith(">")

    @property
    def character_indices(self) -> tuple[int, ...]:
        """Indices of emittable single-character tokens."""
        return tuple(
            i for i in range(len(self.tokens))
            if not self.is_special(i)
        )


@dataclass(frozen=True)
class LogitMatrix:
    """T x V grid of acoustic scores; raw unless produced by log_softmax."""

    values: np.ndarray  # float32, shape (T, V)

    @property
    def frames(self) -> int:
        return self.values.shape[0]

    @property
    def vocab_size(self) -> int:
        return self.values.shape[1]


def write_logits(path: str | Path, matrix: LogitMatrix) -> None:
    values = np.ascontiguousarray(matrix.values, dtype="<f4")
    t, v = values.shape
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", t, v))
        fh.write(values.tobytes())


def read_logits(path: str | Path) -> LogitMatrix:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise BadMagic(f"{path}: expected magic {MAGIC!r}, found {data[:4]!r}")
    if len(data) < 12:
        raise DimensionMismatch(f"{path}: header truncated")
    t, v = struct.unpack("<II", data[4:12])
    expected = 12 + 4 * t * v
    if len(data) != expected:
        raise DimensionMismatch(
            f"{path}: header declares {t}x{v} ({expected} bytes), file has {len(data)}"
        )
    if t < 1 or v < 1:
        raise DimensionMismatch(f"{path}: degenerate shape {t}x{v}")
    values = np.frombuffer(data[12:], dtype="<f4").reshape(t, v)
    if not np.all(np.isfinite(values)):
        raise NonFiniteValue(f"{path}: payload contains non-finite values")
    return LogitMatrix(values=values)


def log_softmax(matrix: LogitMatrix) -> LogitMatrix:
    """Row-wise log-softmax, stable under large scores via max subtraction.

    Keeps float64 in memory; precision is only reduced to float32 on disk.
    """
    values = matrix.values.astype(np.float64)
    shifted = values - values.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    return LogitMatrix(values=shifted - log_norm)


def write_vocabulary(path: str | Path, vocab: Vocabulary) -> None:
    lines = [
        f"#blank {vocab.blank_index}",
        f"#word_delimiter {vocab.word_delimiter_index}",
    ]
    lines.extend(vocab.tokens)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_vocabulary(path: str | Path) -> Vocabulary:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if len(lines) < 4:
        raise BadVocabulary(f"{path}: too short to hold directives plus tokens")
    indices = {}
    for i, name in enumerate(("blank", "word_delimiter")):
        parts = lines[i].split()
        if len(parts) != 2 or parts[0] != f"#{name}":
            raise BadVocabulary(f"{path}: line {i + 1} must be '#{name} <index>'")
        indices[name] = int(parts[1])
    return Vocabulary(
        tokens=tuple(lines[2:]),
        blank_index=indices["blank"],
        word_delimiter_index=indices["word_delimiter"],
    )


def logit_file_name(meeting_id: str, segment_index: int) -> str:
    return f"{meeting_id}_{segment_index:03d}.lgt"
