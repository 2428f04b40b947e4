import subprocess
import sys

import numpy as np
import pytest
from click.testing import CliRunner
from ctcref import build_vocab, frames_to_logits

from parlscribe.cli import main
from parlscribe.lm import fit_ngram_model, read_arpa, write_arpa
from parlscribe.audio import write_wav
from parlscribe.logits import logit_file_name, write_logits, write_vocabulary


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, args):
    result = runner.invoke(main, args, catch_exceptions=False)
    assert result.exit_code == 0, result.output
    return result


def word_frames(text, prob=0.95):
    frames = []
    for word in text.split():
        for ch in word:
            frames.append({ch: prob})
        frames.append({"|": prob})
    return frames[:-1]


def make_decode_inputs(tmp_path, texts_by_segment, chars):
    """Write vocab, logits, and a manifest for synthetic segments."""
    vocab = build_vocab(chars)
    logit_dir = tmp_path / "logits"
    logit_dir.mkdir(exist_ok=True)
    write_vocabulary(logit_dir / "vocab.txt", vocab)
    manifest_lines = ["meeting_id\tsegment_index\tstart_seconds\tend_seconds"]
    for (meeting, index), text in sorted(texts_by_segment.items()):
        logits = frames_to_logits(word_frames(text), vocab)
        write_logits(logit_dir / logit_file_name(meeting, index), logits)
        manifest_lines.append(f"{meeting}\t{index}\t0.000\t10.000")
    manifest = tmp_path / "segments.tsv"
    manifest.write_text("\n".join(manifest_lines) + "\n")
    return manifest, logit_dir


class TestSegmentCommand:
    def test_manifest_and_wav_emission(self, runner, tmp_path):
        rng = np.random.default_rng(0)
        audio_dir = tmp_path / "audio"
        audio_dir.mkdir()
        samples = rng.integers(-2000, 2000, size=16000 * 45).astype(np.int16)
        write_wav(audio_dir / "20140915.wav", samples)
        out = tmp_path / "segs"
        invoke(runner, ["segment", "--in", str(audio_dir), "--out", str(out),
                        "--emit-wavs"])
        manifest = (out / "segments.tsv").read_text().splitlines()
        assert manifest[0] == "meeting_id\tsegment_index\tstart_seconds\tend_seconds"
        assert len(manifest) >= 3  # 45 s splits at least once
        assert (out / "20140915_000.wav").exists()
        assert (out / "run_manifest.tsv").exists()
        assert (out / "effective_config.cfg").exists()

    def test_rerun_byte_identical(self, runner, tmp_path):
        rng = np.random.default_rng(1)
        audio_dir = tmp_path / "audio"
        audio_dir.mkdir()
        write_wav(audio_dir / "m.wav",
                  rng.integers(-2000, 2000, size=16000 * 50).astype(np.int16))
        outputs = []
        for name in ("first", "second"):
            out = tmp_path / name
            invoke(runner, ["segment", "--in", str(audio_dir), "--out", str(out)])
            outputs.append((out / "segments.tsv").read_bytes())
        assert outputs[0] == outputs[1]


class TestFitLmCommand:
    def test_raw_corpus_to_arpa(self, runner, tmp_path):
        corpus = tmp_path / "corpus.txt"
        corpus.write_text(
            "The committee will vote. The committee may raise 1 point. "
            "Members raise a point of order."
        )
        out = tmp_path / "lm" / "model.arpa"
        invoke(runner, ["fit-lm", "--in", str(corpus), "--out", str(out),
                        "--order", "2"])
        model = read_arpa(out)
        assert model.order == 2
        assert "one" in model.vocab  # numbers were spelled out


class TestDecodeCommand:
    def test_greedy_transcripts(self, runner, tmp_path):
        manifest, logit_dir = make_decode_inputs(
            tmp_path, {("m1", 0): "aba", ("m1", 1): "b ab"}, "ab"
        )
        out = tmp_path / "out"
        invoke(runner, ["decode", "--manifest", str(manifest), "--logits",
                        str(logit_dir), "--out", str(out), "--mode", "greedy"])
        lines = (out / "transcripts.tsv").read_text().splitlines()
        assert len(lines) == 3
        assert lines[1].split("\t")[4] == "aba"
        assert lines[2].split("\t")[4] == "b ab"

    def test_beam_lm_requires_lm(self, runner, tmp_path):
        manifest, logit_dir = make_decode_inputs(tmp_path, {("m1", 0): "a"}, "ab")
        result = runner.invoke(main, [
            "decode", "--manifest", str(manifest), "--logits", str(logit_dir),
            "--out", str(tmp_path / "x"), "--mode", "beam_lm",
        ], catch_exceptions=True)
        assert result.exit_code != 0


class TestEvaluateAndReport:
    def build_pipeline(self, runner, tmp_path):
        texts = {("m1", 0): "a ba", ("m1", 1): "bb", ("m2", 0): "ab a"}
        manifest, logit_dir = make_decode_inputs(tmp_path, texts, "ab")
        fixtures = tmp_path / "fixtures"
        fixtures.mkdir()
        references = {("m1", 0): "a ba", ("m1", 1): "ba", ("m2", 0): "ab a"}
        for (meeting, index), text in references.items():
            (fixtures / f"{meeting}_{index:03d}.txt").write_text(text)
        hotwords = tmp_path / "hotwords"
        hotwords.mkdir()
        (hotwords / "m1.txt").write_text("ba\n")
        decode_out = tmp_path / "decoded"
        invoke(runner, ["decode", "--manifest", str(manifest), "--logits",
                        str(logit_dir), "--out", str(decode_out), "--mode", "greedy"])
        eval_out = tmp_path / "evaluated"
        invoke(runner, ["evaluate", "--transcripts",
                        str(decode_out / "transcripts.tsv"), "--fixtures",
                        str(fixtures), "--out", str(eval_out),
                        "--hotwords-dir", str(hotwords)])
        return eval_out

    def test_evaluation_tables(self, runner, tmp_path):
        eval_out = self.build_pipeline(runner, tmp_path)
        wer_lines = (eval_out / "per_segment_wer.tsv").read_text().splitlines()
        assert len(wer_lines) == 4
        by_segment = {tuple(l.split("\t")[:2]): l.split("\t")[2] for l in wer_lines[1:]}
        assert by_segment[("m1", "0")] == "0.0000"
        assert by_segment[("m1", "1")] == "1.0000"
        entity_lines = (eval_out / "entity_metrics.tsv").read_text().splitlines()
        cells = {l.split("\t")[0]: l.split("\t")[1:] for l in entity_lines[1:]}
        assert cells["m2"][:3] == ["", "", ""]  # no hotwords: metrics absent
        # hotword "ba": present in both sides of segment 0, missed in segment 1
        assert cells["m1"][0] == "1.00" and cells["m1"][1] == "0.50"
        summary = (eval_out / "summary.tsv").read_text()
        assert "corpus_wer" in summary

    def test_report_renders_tables_and_figures(self, runner, tmp_path):
        eval_out = self.build_pipeline(runner, tmp_path)
        report_out = tmp_path / "report"
        invoke(runner, ["report", "--in", str(eval_out), "--out", str(report_out)])
        table = (report_out / "wer_by_mode.tsv").read_text().splitlines()
        assert table[0] == "configuration\tmean_wer"
        assert table[1].startswith("greedy\t")
        assert (report_out / "wer_by_mode.png").stat().st_size > 0


class TestTuneCommand:
    def test_planted_alpha_recovered(self, runner, tmp_path):
        # acoustics slightly prefer the wrong word; the LM prefers the
        # reference, so alpha=1 beats alpha=0 on WER
        vocab_chars = "abr"
        texts = {}
        references = {}
        for m in range(5):
            meeting = f"m{m}"
            texts[(meeting, 0)] = "bar"
            references[(meeting, 0)] = "bar"
        manifest, logit_dir = make_decode_inputs(tmp_path, texts, vocab_chars)
        # overwrite every segment with a rendering whose acoustics slightly
        # prefer the out-of-vocabulary "ba" over the reference "bar"
        vocab = build_vocab(vocab_chars)
        ambiguous = frames_to_logits(
            [{"b": 0.9}, {"a": 0.55, "r": 0.45}, {"a": 0.52, "r": 0.48}], vocab
        )
        for m in range(5):
            write_logits(logit_dir / logit_file_name(f"m{m}", 0), ambiguous)
        fixtures = tmp_path / "fixtures"
        fixtures.mkdir()
        for (meeting, index), text in references.items():
            (fixtures / f"{meeting}_{index:03d}.txt").write_text(text)
        lm_path = tmp_path / "lm.arpa"
        write_arpa(fit_ngram_model(["bar bar bar", "bar", "bar bar"], 2), lm_path)
        out = tmp_path / "tuned"
        invoke(runner, [
            "tune", "--manifest", str(manifest), "--logits", str(logit_dir),
            "--fixtures", str(fixtures), "--lm", str(lm_path), "--out", str(out),
            "--grid-alpha", "0.0,1.0", "--grid-beta", "0.0", "--grid-weight", "0.0",
            "--folds", "5", "--seed", "0",
        ])
        best = (out / "best_params.txt").read_text()
        assert "alpha = 1" in best
        assert (out / "cells.tsv").exists() and (out / "folds.tsv").exists()


class TestAlignMetaCommand:
    def test_alignment_outputs(self, runner, tmp_path):
        audio = tmp_path / "audio.tsv"
        audio.write_text("20140915\t20140915\n20141001\t20141001\n")
        docs = tmp_path / "docs.tsv"
        docs.write_text(
            "agenda\t20140915\ta1.pdf\n"
            "agenda\t20140929\ta2.pdf\nagenda\t20140930\ta3.pdf\n"
        )
        out = tmp_path / "meta"
        invoke(runner, ["align-meta", "--audio", str(audio), "--documents",
                        str(docs), "--out", str(out)])
        lines = (out / "alignment.tsv").read_text().splitlines()
        status = {l.split("\t")[0]: l.split("\t")[2] for l in lines[1:]}
        assert status["20140915"] == "auto_same_day"
        assert status["20141001"] == "needs_review"
        assert (out / "needs_review.tsv").exists()


class TestAssembleCommand:
    def test_corpus_and_stats(self, runner, tmp_path):
        transcripts = tmp_path / "transcripts.tsv"
        transcripts.write_text(
            "meeting_id\tsegment_index\tstart_seconds\tend_seconds\ttext\tscore\tdecode_mode\terror\n"
            "m1\t0\t0.000\t10.000\thello there\t-1.000000\tbeam\t\n"
            "m1\t1\t10.000\t20.000\tgeneral remarks\t-1.000000\tbeam\t\n"
        )
        out = tmp_path / "corpus"
        invoke(runner, ["assemble", "--transcripts", str(transcripts), "--out", str(out)])
        stats = (out / "stats.tsv").read_text()
        assert "total_words\t4" in stats
        assert (out / "m1.tsv").exists()


class TestTopicsCommand:
    def test_select_and_report(self, runner, tmp_path):
        corpus = tmp_path / "corpus"
        corpus.mkdir()
        rng = np.random.default_rng(0)
        for m in range(4):
            words = ["crime", "terror", "victim"] if m % 2 else ["data", "privacy", "law"]
            lines = ["meeting_id\tsegment_index\tstart_seconds\tend_seconds\ttext"]
            for i in range(3):
                text = " ".join(words[rng.integers(0, 3)] for _ in range(12))
                lines.append(f"m{m}\t{i}\t0.000\t10.000\t{text}")
            (corpus / f"m{m}.tsv").write_text("\n".join(lines) + "\n")
        vectors = tmp_path / "vecs.txt"
        vectors.write_text(
            "crime 9 0\nterror 9.1 0.2\nvictim 8.8 0.1\n"
            "data 0 9\nprivacy 0.1 9.2\nlaw 0.2 8.9\n"
        )
        out = tmp_path / "topics"
        invoke(runner, ["topics", "--corpus", str(corpus), "--embeddings",
                        str(vectors), "--k-candidates", "2,3", "--iterations", "60",
                        "--seed", "1", "--out", str(out)])
        assert (out / "chosen_k.txt").read_text().strip() == "2"
        assert (out / "topics.tsv").exists()
        assert (out / "coherence.png").exists()


class TestErrorReporting:
    def test_single_line_error_class(self, tmp_path):
        bad_config = tmp_path / "bad.cfg"
        bad_config.write_text("nonsense.key = 1\n")
        proc = subprocess.run(
            [sys.executable, "-m", "parlscribe.cli", "fit-lm", "--in",
             str(bad_config), "--out", str(tmp_path / "x.arpa"),
             "--config", str(bad_config)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 1
        error_lines = [l for l in proc.stderr.splitlines() if l.strip()]
        assert len(error_lines) == 1
        assert error_lines[0].startswith("ConfigError:")

    def test_env_var_config_fallback(self, tmp_path):
        config = tmp_path / "conf.cfg"
        config.write_text("decode.beam_width = 25\n")
        corpus = tmp_path / "c.txt"
        corpus.write_text("a b a. b a b.")
        proc = subprocess.run(
            [sys.executable, "-m", "parlscribe.cli", "fit-lm", "--in", str(corpus),
             "--out", str(tmp_path / "lm.arpa"), "--order", "2"],
            capture_output=True, text=True,
            env={"PATH": "/usr/bin:/bin", "PARLSCRIBE_CONFIG": str(config)},
        )
        assert proc.returncode == 0, proc.stderr
        cfg = (tmp_path / "effective_config.cfg").read_text()
        assert "decode.beam_width = 25" in cfg
