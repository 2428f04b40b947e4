"""parlscribe: build and evaluate a text corpus from long meeting recordings."""

from .audio import AudioBuffer, Segment, find_cut_point, load_wav, split_recording, write_wav
from .decoder import (
    BeamState,
    DecodeConfig,
    DecodeResult,
    HotwordTrie,
    beam_decode,
    decode_corpus,
    greedy_decode,
)
from .evaluation import EntityMetrics, WerReport, corpus_wer, entity_metrics, word_error_rate
from .lm import LmState, NGramModel, count_ngrams, estimate_model, fit_ngram_model, read_arpa, write_arpa
from .logits import LogitMatrix, Vocabulary, log_softmax, read_logits, read_vocabulary, write_logits, write_vocabulary
from .meta import CorpusStats, MeetingRecord, align_metadata, assemble_corpus, load_hotwords
from .textnorm import NormalizationProfile, normalize_for_eval, normalize_lm_corpus, number_to_words
from .topics import LdaModel, coherence, fit_lda, select_topic_count
from .tuning import FoldPlan, GridSpec, Params, grid_search, make_folds, weight_sweep

__version__ = "0.1.0"
