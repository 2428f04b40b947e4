"""Report rendering: delimited tables plus matplotlib figures on disk.

Each render_* function writes a .tsv and, where a picture helps, a .png next
to it: mean WER per decode configuration as a bar chart, and the hotword
weight sweep as mean curves with a shaded one-standard-deviation band.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
from scipy import stats

from .evaluation import EntityMetrics
from .tuning import SweepRow

FIG_SIZE = (7.0, 4.5)
plt.rc("axes", grid=True)
plt.rc("grid", alpha=0.3)
plt.rc("savefig", dpi=150, bbox="tight")


def render_wer_by_mode(rows: list[tuple[str, float]], out_dir: str | Path) -> None:
    """Mean WER per decode configuration: TSV table and bar chart."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["configuration\tmean_wer"]
    lines += [f"{label}\t{wer:.4f}" for label, wer in rows]
    (out / "wer_by_mode.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    fig, ax = plt.subplots(figsize=FIG_SIZE)
    labels = [label for label, _ in rows]
    ax.bar(labels, [wer for _, wer in rows], color="tab:blue")
    ax.set_ylabel("mean WER")
    ax.set_xlabel("configuration")
    fig.savefig(out / "wer_by_mode.png")
    plt.close(fig)


def render_weight_sweep(rows: list[SweepRow], out_dir: str | Path) -> None:
    """Hotword weight sweep: per-weight mean with a shaded +/- 1 sd band."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["weight\trecall_mean\trecall_sd\twer_mean\twer_sd"]
    lines += [
        f"{r.weight:g}\t{r.recall_mean:.4f}\t{r.recall_sd:.4f}"
        f"\t{r.wer_mean:.4f}\t{r.wer_sd:.4f}"
        for r in rows
    ]
    (out / "weight_sweep.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    weights = [r.weight for r in rows]
    fig, axes = plt.subplots(1, 2, figsize=(FIG_SIZE[0] * 1.6, FIG_SIZE[1]))
    for ax, name, means, sds in (
        (axes[0], "hotword recall",
         [r.recall_mean for r in rows], [r.recall_sd for r in rows]),
        (axes[1], "WER",
         [r.wer_mean for r in rows], [r.wer_sd for r in rows]),
    ):
        low = [m - s for m, s in zip(means, sds)]
        high = [m + s for m, s in zip(means, sds)]
        ax.plot(weights, means, marker="o", color="tab:blue")
        ax.fill_between(weights, low, high, alpha=0.25, color="tab:blue")
        ax.set_xlabel("hotword weight")
        ax.set_ylabel(name)
    fig.savefig(out / "weight_sweep.png")
    plt.close(fig)


def render_entity_table(
    rows: list[tuple[EntityMetrics | None, float | None]],
    meeting_ids: list[str],
    out_dir: str | Path,
) -> None:
    """Per-meeting precision/recall/F1/WER table plus a rank correlation.

    Meetings without hotwords appear with empty metric cells. The Spearman
    correlation between WER and F1 over the covered meetings is appended to
    summary.tsv (a report statistic, not a library API).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["meeting_id\tprecision\trecall\tf1\twer"]
    f1s, wers = [], []
    for meeting_id, (metrics, wer) in zip(meeting_ids, rows):
        wer_cell = f"{wer:.4f}" if wer is not None else ""
        if metrics is None:
            lines.append(f"{meeting_id}\t\t\t\t{wer_cell}")
        else:
            lines.append(
                f"{meeting_id}\t{metrics.precision:.2f}\t{metrics.recall:.2f}"
                f"\t{metrics.f1:.2f}\t{wer_cell}"
            )
            if wer is not None:
                f1s.append(metrics.f1)
                wers.append(wer)
    (out / "entity_metrics.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    summary = []
    if len(f1s) >= 3:
        rho, p = stats.spearmanr(wers, f1s)
        summary.append(f"spearman_wer_f1_rho\t{rho:.3f}")
        summary.append(f"spearman_wer_f1_p\t{p:.3f}")
        summary.append(f"spearman_n\t{len(f1s)}")
    if summary:
        with open(out / "summary.tsv", "a", encoding="utf-8") as fh:
            fh.write("\n".join(summary) + "\n")


def render_topic_table(model, out_dir: str | Path, top_n: int = 10) -> None:
    """Top words and weights per topic, one row per (topic, rank)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["topic\trank\tword\tweight"]
    for topic in range(model.k):
        for rank, (word, weight) in enumerate(model.top_words(topic, top_n), start=1):
            lines.append(f"{topic + 1}\t{rank}\t{word}\t{weight:.4f}")
    (out / "topics.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")


def render_coherence_curve(table: list[tuple[int, float]], out_dir: str | Path) -> None:
    """Coherence per candidate topic count: TSV and line figure."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["k\tmean_coherence"]
    lines += [f"{k}\t{c:.6f}" for k, c in table]
    (out / "coherence.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    fig, ax = plt.subplots(figsize=FIG_SIZE)
    ax.plot([k for k, _ in table], [c for _, c in table], marker="o")
    ax.set_xlabel("number of topics")
    ax.set_ylabel("mean coherence")
    fig.savefig(out / "coherence.png")
    plt.close(fig)
