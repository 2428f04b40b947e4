"""Exception hierarchy shared across the toolkit.

Every error raised on a documented failure path derives from ParlscribeError
so the CLI can report a single machine-parsable class name and exit non-zero.
"""


class ParlscribeError(Exception):
    """Base class for all errors raised by this package."""


# --- audio ---

class MalformedWav(ParlscribeError):
    """File is not a well-formed RIFF/WAVE container."""


class UnsupportedFormat(ParlscribeError):
    """WAV is valid but not PCM / 16-bit / mono / 16000 Hz."""


class InsufficientAudio(ParlscribeError):
    """Not enough samples after the requested start point."""


# --- logits ---

class BadMagic(ParlscribeError):
    """Logit file does not start with the expected magic bytes."""


class DimensionMismatch(ParlscribeError):
    """Logit payload length disagrees with the header dimensions."""


class NonFiniteValue(ParlscribeError):
    """Logit payload contains NaN or infinity."""


class BadVocabulary(ParlscribeError):
    """Vocabulary sidecar violates the format or its invariants."""


# --- language model ---

class EmptyCorpus(ParlscribeError):
    """No usable input lines / documents."""


class DegenerateCounts(UserWarning):
    """Count-of-counts make the discount undefined; fell back to D=0.5."""


class ArpaSyntax(ParlscribeError):
    """ARPA file is syntactically broken; message carries line/section info."""


class CountMismatch(ParlscribeError):
    """ARPA header n-gram counts disagree with the section contents."""


# --- decoding ---

class EmptyBeam(ParlscribeError):
    """All beam extensions were pruned away."""


class MissingLogits(ParlscribeError):
    """A manifest segment has no corresponding logit file."""


# --- text normalization ---

class NotANumber(ParlscribeError):
    """Token does not match the integer/decimal pattern."""


# --- evaluation ---

class EmptyReference(ParlscribeError):
    """Reference text is empty after evaluation normalization."""


class EmptyHotwordList(ParlscribeError):
    """Entity metrics are undefined without hotwords for the meeting."""


# --- tuning ---

class TooFewMeetings(ParlscribeError):
    """Cannot build k folds out of fewer than k meetings."""


# --- corpus metadata ---

class UnparseableDate(ParlscribeError):
    """A date string could not be parsed; message names the offending item."""


class MissingTranscript(ParlscribeError):
    """Corpus assembly found a manifest segment without a transcript."""


# --- topics ---

class NoCoveredWords(ParlscribeError):
    """A topic has fewer than two top words covered by the embedding table."""


# --- cli / config ---

class ConfigError(ParlscribeError):
    """Configuration file or flag is invalid; message names the field."""
