"""Command-line pipeline: segment, fit-lm, decode, evaluate, tune,
align-meta, assemble, topics, report.

Every subcommand writes a run manifest (input digests + effective config)
into its output directory. Known failures exit non-zero after printing a
single machine-parsable `ErrorClass: message` line on stderr.
"""

from __future__ import annotations

import os
import sys
from pathlib import Path

import click

from . import audio as audio_mod
from . import config as config_mod
from . import decoder as decoder_mod
from . import lm as lm_mod
from . import meta as meta_mod
from . import report as report_mod
from . import textnorm
from . import topics as topics_mod
from . import tuning as tuning_mod
from .errors import ConfigError, ParlscribeError
from .evaluation import corpus_wer, entity_metrics, word_error_rate
from .logits import read_logits, read_vocabulary


def _load_file_config(path: str | None) -> dict[str, str]:
    path = path or os.environ.get("PARLSCRIBE_CONFIG")
    return config_mod.load_config(path) if path else {}


def _effective(file_cfg: dict[str, str], **flags) -> dict[str, str]:
    merged = dict(file_cfg)
    merged.update({k: str(v) for k, v in flags.items() if v is not None})
    return merged


@click.group()
def main():
    """Speech-to-corpus toolkit for long committee recordings."""


def run_cli() -> None:
    try:
        main(standalone_mode=False)
    except click.ClickException as exc:
        click.echo(f"UsageError: {exc.format_message()}", err=True)
        sys.exit(2)
    except click.Abort:
        sys.exit(130)
    except (ParlscribeError, ValueError, OSError) as exc:
        click.echo(f"{type(exc).__name__}: {exc}", err=True)
        sys.exit(1)


@main.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--emit-wavs", is_flag=True, help="Also write one WAV per segment.")
@click.option("--config", "config_path", type=click.Path(exists=True))
def segment(in_path, out_dir, emit_wavs, config_path):
    """Split recordings into 5-30 s segments and write the manifest."""
    cfg = _effective(_load_file_config(config_path), **{"paths.audio_dir": in_path})
    in_path = Path(in_path)
    wavs = sorted(in_path.glob("*.wav")) if in_path.is_dir() else [in_path]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    segments = []
    for wav in wavs:
        buffer = audio_mod.load_wav(wav)
        recording = audio_mod.split_recording(buffer, wav.stem)
        segments.extend(recording)
        if emit_wavs:
            for seg in recording:
                audio_mod.write_wav(
                    out / audio_mod.segment_wav_name(seg.meeting_id, seg.segment_index),
                    buffer.samples[seg.start_sample:seg.end_sample],
                )
    audio_mod.write_segment_manifest(out / "segments.tsv", segments)
    config_mod.write_run_manifest(out, [str(w) for w in wavs], cfg)
    click.echo(f"wrote {len(segments)} segments from {len(wavs)} recordings")


@main.command("fit-lm")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--order", default=3, show_default=True, type=int)
@click.option("--normalized", is_flag=True,
              help="Input is already one normalized sentence per line.")
@click.option("--config", "config_path", type=click.Path(exists=True))
def fit_lm(in_path, out_path, order, normalized, config_path):
    """Fit a Kneser-Ney n-gram model on a text corpus, write ARPA."""
    cfg = _effective(_load_file_config(config_path), **{"paths.lm": out_path})
    text = Path(in_path).read_text(encoding="utf-8")
    if normalized:
        lines = [line for line in text.splitlines() if line.strip()]
    else:
        lines = textnorm.normalize_lm_corpus(text)
    model = lm_mod.fit_ngram_model(lines, order)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    lm_mod.write_arpa(model, out_path)
    config_mod.write_run_manifest(out_path.parent, [in_path], cfg)
    click.echo(f"fitted {order}-gram model on {len(lines)} lines -> {out_path}")


def _decode_config(mode, beam_width, alpha, beta, hotwords_path, hotword_weight):
    hotwords: tuple[str, ...] = ()
    if hotwords_path:
        hotwords = tuple(sorted(meta_mod.load_hotwords(hotwords_path)))
    return decoder_mod.DecodeConfig(
        mode=mode,
        beam_width=beam_width,
        alpha=alpha,
        beta=beta,
        hotwords=hotwords,
        hotword_weight=hotword_weight,
    )


@main.command()
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--logits", "logit_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--mode", default="beam_lm", show_default=True,
              type=click.Choice(["greedy", "beam", "beam_lm"]))
@click.option("--beam-width", default=100, show_default=True, type=int)
@click.option("--alpha", default=0.5, show_default=True, type=float)
@click.option("--beta", default=1.0, show_default=True, type=float)
@click.option("--lm", "lm_path", type=click.Path(exists=True))
@click.option("--hotwords", "hotwords_path", type=click.Path(exists=True))
@click.option("--hotword-weight", default=0.0, show_default=True, type=float)
@click.option("--jobs", default=None, type=int,
              help="Decode workers; defaults to the available cores.")
@click.option("--config", "config_path", type=click.Path(exists=True))
def decode(manifest, logit_dir, out_dir, mode, beam_width, alpha, beta,
           lm_path, hotwords_path, hotword_weight, jobs, config_path):
    """Decode every manifest segment from its logit file."""
    if jobs is None:
        jobs = os.cpu_count() or 1
    cfg = _effective(
        _load_file_config(config_path),
        **{"decode.mode": mode, "decode.beam_width": beam_width,
           "decode.alpha": alpha, "decode.beta": beta,
           "decode.hotword_weight": hotword_weight, "decode.jobs": jobs,
           "paths.logits_dir": logit_dir, "paths.manifest": manifest},
    )
    records = audio_mod.read_segment_manifest(manifest)
    vocab = read_vocabulary(Path(logit_dir) / "vocab.txt")
    model = lm_mod.read_arpa(lm_path) if lm_path else None
    if mode == "beam_lm" and model is None:
        raise ConfigError("decode.mode=beam_lm requires --lm")
    dconfig = _decode_config(mode, beam_width, alpha, beta, hotwords_path, hotword_weight)
    transcripts = decoder_mod.decode_corpus(
        records, logit_dir, vocab, dconfig, model, jobs=jobs
    )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    decoder_mod.write_transcripts(out / "transcripts.tsv", transcripts)
    inputs = [manifest] + ([lm_path] if lm_path else [])
    config_mod.write_run_manifest(out, inputs, cfg)
    failures = sum(1 for t in transcripts if t.error)
    click.echo(f"decoded {len(transcripts)} segments ({failures} failures)")


def _read_reference(fixtures_dir: Path, meeting_id: str, segment_index: int) -> str | None:
    path = fixtures_dir / f"{meeting_id}_{segment_index:03d}.txt"
    if not path.exists():
        return None
    return path.read_text(encoding="utf-8").strip()


def _meeting_hotwords(hotwords_dir: str | None, meeting_id: str) -> set[str]:
    if not hotwords_dir:
        return set()
    path = Path(hotwords_dir) / f"{meeting_id}.txt"
    if not path.exists():
        return set()
    return meta_mod.load_hotwords(path)


@main.command()
@click.option("--transcripts", required=True, type=click.Path(exists=True))
@click.option("--fixtures", "fixtures_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--hotwords-dir", type=click.Path(exists=True))
@click.option("--hesitations", "hesitations_path", type=click.Path(exists=True),
              help="Override the hesitation word list, one word per line.")
@click.option("--config", "config_path", type=click.Path(exists=True))
def evaluate(transcripts, fixtures_dir, out_dir, hotwords_dir, hesitations_path,
             config_path):
    """Score transcripts against reference fixtures: WER + entity metrics."""
    cfg = _effective(_load_file_config(config_path),
                     **{"paths.fixtures_dir": fixtures_dir})
    profile = None
    if hesitations_path:
        profile = textnorm.NormalizationProfile(
            hesitation_words=textnorm.load_hesitation_words(hesitations_path)
        )
    records = decoder_mod.read_transcripts(transcripts)
    fixtures = Path(fixtures_dir)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    wer_lines = ["meeting_id\tsegment_index\twer\tS\tD\tI\tN\tdecode_mode"]
    pairs_by_meeting: dict[str, list[tuple[str, str]]] = {}
    wers_by_meeting: dict[str, list[float]] = {}
    all_wers = []
    for rec in records:
        reference = _read_reference(fixtures, rec.meeting_id, rec.segment_index)
        if reference is None or rec.error:
            continue
        report = word_error_rate(reference, rec.text, profile)
        wer_lines.append(
            f"{rec.meeting_id}\t{rec.segment_index}\t{report.wer:.4f}"
            f"\t{report.substitutions}\t{report.deletions}\t{report.insertions}"
            f"\t{report.reference_words}\t{rec.decode_mode}"
        )
        pairs_by_meeting.setdefault(rec.meeting_id, []).append((reference, rec.text))
        wers_by_meeting.setdefault(rec.meeting_id, []).append(report.wer)
        all_wers.append(report.wer)
    (out / "per_segment_wer.tsv").write_text("\n".join(wer_lines) + "\n", encoding="utf-8")

    meeting_ids = sorted(pairs_by_meeting)
    entity_rows = []
    for meeting_id in meeting_ids:
        hotwords = _meeting_hotwords(hotwords_dir, meeting_id)
        wer_mean = sum(wers_by_meeting[meeting_id]) / len(wers_by_meeting[meeting_id])
        if hotwords:
            metrics = entity_metrics(meeting_id, pairs_by_meeting[meeting_id],
                                     hotwords, profile)
            entity_rows.append((metrics, wer_mean))
        else:
            entity_rows.append((None, wer_mean))  # no hotwords: metrics absent
    report_mod.render_entity_table(entity_rows, meeting_ids, out)

    if all_wers:
        summary = f"corpus_wer\t{sum(all_wers) / len(all_wers):.4f}\nsegments\t{len(all_wers)}\n"
        with open(out / "summary.tsv", "a", encoding="utf-8") as fh:
            fh.write(summary)
    config_mod.write_run_manifest(out, [transcripts, fixtures_dir], cfg)
    click.echo(f"evaluated {len(all_wers)} segments over {len(meeting_ids)} meetings")


def _parse_grid(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise ConfigError(f"grid value list {text!r} is not comma-separated numbers")


@main.command()
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--logits", "logit_dir", required=True, type=click.Path(exists=True))
@click.option("--fixtures", "fixtures_dir", required=True, type=click.Path(exists=True))
@click.option("--lm", "lm_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--hotwords-dir", type=click.Path(exists=True))
@click.option("--grid-alpha", default="0.0,0.5,1.0,1.5,2.0", show_default=True)
@click.option("--grid-beta", default="-2.0,-1.0,0.0,1.0,2.0", show_default=True)
@click.option("--grid-weight", default="0.0", show_default=True)
@click.option("--objective", default="min_wer", show_default=True,
              type=click.Choice(["min_wer", "max_recall"]))
@click.option("--folds", default=5, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--beam-width", default=100, show_default=True, type=int)
@click.option("--config", "config_path", type=click.Path(exists=True))
def tune(manifest, logit_dir, fixtures_dir, lm_path, out_dir, hotwords_dir,
         grid_alpha, grid_beta, grid_weight, objective, folds, seed,
         beam_width, config_path):
    """Grid-search alpha/beta/hotword weight by meeting-grouped CV."""
    cfg = _effective(
        _load_file_config(config_path),
        **{"grid.alpha": grid_alpha, "grid.beta": grid_beta,
           "grid.weight": grid_weight, "grid.objective": objective,
           "tune.folds": folds, "seeds.folds": seed},
    )
    records = audio_mod.read_segment_manifest(manifest)
    vocab = read_vocabulary(Path(logit_dir) / "vocab.txt")
    model = lm_mod.read_arpa(lm_path)
    fixtures = Path(fixtures_dir)

    segments: tuning_mod.Segments = {}
    hotwords_by_meeting: dict[str, set[str]] = {}
    for rec in records:
        reference = _read_reference(fixtures, rec["meeting_id"], rec["segment_index"])
        if reference is None:
            continue
        logit_path = Path(logit_dir) / f"{rec['meeting_id']}_{rec['segment_index']:03d}.lgt"
        payload = (rec["meeting_id"], str(logit_path))
        segments.setdefault(rec["meeting_id"], []).append((reference, payload))
        hotwords_by_meeting.setdefault(
            rec["meeting_id"], _meeting_hotwords(hotwords_dir, rec["meeting_id"])
        )

    def decode_fn(params: tuning_mod.Params, payload) -> str:
        meeting_id, logit_path = payload
        # each meeting is decoded with its own hotword list
        hotwords = hotwords_by_meeting.get(meeting_id, set()) if params.weight > 0 else set()
        dconfig = decoder_mod.DecodeConfig(
            mode="beam_lm",
            beam_width=beam_width,
            alpha=params.alpha,
            beta=params.beta,
            hotwords=tuple(sorted(hotwords)),
            hotword_weight=params.weight,
        )
        return decoder_mod.beam_decode(read_logits(logit_path), vocab, dconfig, model).text

    def wer_fn(by_meeting: dict[str, list[tuple[str, str]]]) -> float:
        pairs = [p for items in by_meeting.values() for p in items]
        return corpus_wer(pairs)

    def recall_fn(by_meeting: dict[str, list[tuple[str, str]]]) -> float:
        tp = fn = 0
        for meeting_id, pairs in by_meeting.items():
            hotwords = hotwords_by_meeting.get(meeting_id, set())
            if not hotwords:
                continue
            metrics = entity_metrics(meeting_id, pairs, hotwords)
            tp += metrics.true_positives
            fn += metrics.false_negatives
        return tp / (tp + fn) if tp + fn else 1.0

    plan = tuning_mod.make_folds(sorted(segments), k=folds, seed=seed)
    grid = tuning_mod.GridSpec(
        alpha_values=_parse_grid(grid_alpha),
        beta_values=_parse_grid(grid_beta),
        weight_values=_parse_grid(grid_weight),
        objective=objective,
    )
    eval_fn = wer_fn if objective == "min_wer" else recall_fn
    result = tuning_mod.grid_search(plan, grid, decode_fn, eval_fn, segments)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cell_lines = ["alpha\tbeta\tweight\tmean_objective\tsd_objective"]
    cell_lines += [
        f"{c.params.alpha:g}\t{c.params.beta:g}\t{c.params.weight:g}"
        f"\t{c.mean_objective:.4f}\t{c.sd_objective:.4f}"
        for c in result.cell_rows
    ]
    (out / "cells.tsv").write_text("\n".join(cell_lines) + "\n", encoding="utf-8")
    fold_lines = ["fold\talpha\tbeta\tweight\ttrain_objective\ttest_objective"]
    fold_lines += [
        f"{r.fold}\t{r.params.alpha:g}\t{r.params.beta:g}\t{r.params.weight:g}"
        f"\t{r.train_objective:.4f}\t{r.test_objective:.4f}"
        for r in result.fold_rows
    ]
    (out / "folds.tsv").write_text("\n".join(fold_lines) + "\n", encoding="utf-8")
    best = result.best_params
    (out / "best_params.txt").write_text(
        f"alpha = {best.alpha:g}\nbeta = {best.beta:g}\nweight = {best.weight:g}\n",
        encoding="utf-8",
    )
    if len(grid.weight_values) > 1:
        sweep = tuning_mod.weight_sweep(
            plan, tuple(sorted(grid.weight_values)), decode_fn, recall_fn, wer_fn,
            segments, alpha=best.alpha, beta=best.beta,
        )
        report_mod.render_weight_sweep(sweep, out)
    config_mod.write_run_manifest(out, [manifest, lm_path], cfg)
    click.echo(f"best params: alpha={best.alpha:g} beta={best.beta:g} weight={best.weight:g}")


@main.command("align-meta")
@click.option("--audio", "audio_path", required=True, type=click.Path(exists=True),
              help="TSV: meeting_id, date per line.")
@click.option("--documents", "documents_path", required=True, type=click.Path(exists=True),
              help="TSV: type, date, path per line.")
@click.option("--overrides", "overrides_path", type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(exists=True))
def align_meta(audio_path, documents_path, overrides_path, out_dir, config_path):
    """Align audio sessions with agenda/minutes documents by date window."""
    cfg = _effective(_load_file_config(config_path), **{})
    sessions = []
    for line in Path(audio_path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            meeting_id, date = line.split("\t")
            sessions.append((meeting_id, date))
    documents = []
    for line in Path(documents_path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            doc_type, date, path = line.split("\t")
            documents.append((doc_type, date, path))
    records = meta_mod.align_metadata(sessions, documents)
    if overrides_path:
        meta_mod.apply_overrides(records, meta_mod.read_overrides(overrides_path))

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["meeting_id\taudio_date\tstatus\tagenda\tminutes"]
    review_lines = ["meeting_id\tdoc_type\tcandidates"]
    for r in records:
        lines.append(
            f"{r.meeting_id}\t{r.audio_date.isoformat()}\t{r.alignment_status}"
            f"\t{r.agenda_path or ''}\t{r.minutes_path or ''}"
        )
        for doc_type, candidates in sorted(r.review_candidates.items()):
            review_lines.append(f"{r.meeting_id}\t{doc_type}\t{','.join(candidates)}")
    (out / "alignment.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    if len(review_lines) > 1:
        (out / "needs_review.tsv").write_text(
            "\n".join(review_lines) + "\n", encoding="utf-8"
        )
    config_mod.write_run_manifest(out, [audio_path, documents_path], cfg)
    needs = sum(1 for r in records if r.alignment_status == meta_mod.STATUS_REVIEW)
    click.echo(f"aligned {len(records)} sessions ({needs} need review)")


@main.command()
@click.option("--transcripts", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(exists=True))
def assemble(transcripts, out_dir, config_path):
    """Assemble per-meeting corpus files and recount the statistics."""
    cfg = _effective(_load_file_config(config_path), **{"paths.corpus_dir": out_dir})
    records = decoder_mod.read_transcripts(transcripts)
    stats = meta_mod.assemble_corpus(records, out_dir)
    meta_mod.write_stats(Path(out_dir) / "stats.tsv", stats)
    config_mod.write_run_manifest(out_dir, [transcripts], cfg)
    click.echo(
        f"{stats.total_words} words over {stats.segment_count} segments "
        f"in {stats.meeting_count} meetings"
    )


@main.command()
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True),
              help="Directory of per-meeting corpus TSV files.")
@click.option("--embeddings", "embeddings_path", required=True, type=click.Path(exists=True))
@click.option("--k", "fixed_k", type=int)
@click.option("--k-candidates", default="", help="Comma-separated candidate counts.")
@click.option("--stopwords", "stopwords_path", type=click.Path(exists=True))
@click.option("--lemmas", "lemmas_path", type=click.Path(exists=True))
@click.option("--iterations", default=1000, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(exists=True))
def topics(corpus_dir, embeddings_path, fixed_k, k_candidates, stopwords_path,
           lemmas_path, iterations, seed, out_dir, config_path):
    """Fit an LDA topic model on the corpus; pick k by coherence if asked."""
    cfg = _effective(_load_file_config(config_path),
                     **{"topics.iterations": iterations, "seeds.lda": seed})
    texts = []
    for path in sorted(Path(corpus_dir).glob("*.tsv")):
        words = []
        for line in path.read_text(encoding="utf-8").splitlines()[1:]:
            fields = line.split("\t")
            if len(fields) >= 5:
                words.append(fields[4])
        texts.append(" ".join(words))
    stop = topics_mod.load_word_list(stopwords_path) if stopwords_path else set()
    lemmas = topics_mod.load_lemma_map(lemmas_path) if lemmas_path else {}
    docs = topics_mod.prepare_documents(texts, stop, lemmas)
    embeddings = topics_mod.load_embeddings(embeddings_path)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if fixed_k is None:
        candidates = [int(x) for x in k_candidates.split(",") if x.strip()]
        if not candidates:
            raise ConfigError("provide --k or --k-candidates")
        fixed_k, table = topics_mod.select_topic_count(
            docs, candidates, embeddings, seed=seed, iterations=iterations
        )
        report_mod.render_coherence_curve(table, out)
    model = topics_mod.fit_lda(docs, fixed_k, iterations=iterations, seed=seed)
    report_mod.render_topic_table(model, out)
    (out / "chosen_k.txt").write_text(f"{fixed_k}\n", encoding="utf-8")
    config_mod.write_run_manifest(out, [corpus_dir, embeddings_path], cfg)
    click.echo(f"fitted LDA with k={fixed_k} on {len(docs)} documents")


@main.command()
@click.option("--in", "in_dir", required=True, type=click.Path(exists=True),
              help="Directory of evaluation outputs (per_segment_wer.tsv etc.).")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(exists=True))
def report(in_dir, out_dir, config_path):
    """Summarize stored evaluations: mean WER per configuration + figures."""
    cfg = _effective(_load_file_config(config_path), **{})
    in_dir = Path(in_dir)
    wers_by_mode: dict[str, list[float]] = {}
    for path in sorted(in_dir.rglob("per_segment_wer.tsv")):
        for line in path.read_text(encoding="utf-8").splitlines()[1:]:
            fields = line.split("\t")
            wers_by_mode.setdefault(fields[7], []).append(float(fields[2]))
    if not wers_by_mode:
        raise ConfigError(f"no per_segment_wer.tsv files under {in_dir}")
    rows = [
        (mode, sum(values) / len(values))
        for mode, values in sorted(wers_by_mode.items())
    ]
    report_mod.render_wer_by_mode(rows, out_dir)

    sweep_path = next(iter(sorted(in_dir.rglob("weight_sweep.tsv"))), None)
    if sweep_path is not None:
        sweep_rows = []
        for line in sweep_path.read_text(encoding="utf-8").splitlines()[1:]:
            w, rm, rs, wm, ws = (float(x) for x in line.split("\t"))
            sweep_rows.append(tuning_mod.SweepRow(w, rm, rs, wm, ws))
        report_mod.render_weight_sweep(sweep_rows, out_dir)
    config_mod.write_run_manifest(out_dir, [str(in_dir)], cfg)
    click.echo(f"report over {sum(len(v) for v in wers_by_mode.values())} segment scores")


if __name__ == "__main__":
    run_cli()
