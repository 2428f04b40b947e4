import pytest

from parlscribe.config import (
    format_config,
    load_config,
    parse_config_text,
    write_run_manifest,
)
from parlscribe.errors import ConfigError
from parlscribe.evaluation import EntityMetrics
from parlscribe.report import (
    render_entity_table,
    render_weight_sweep,
    render_wer_by_mode,
)
from parlscribe.tuning import SweepRow


class TestConfig:
    def test_round_trip_lossless(self, tmp_path):
        text = "decode.alpha = 0.5\n# comment\npaths.lm = /models/lm.arpa\n"
        values = parse_config_text(text)
        assert values == {"decode.alpha": "0.5", "paths.lm": "/models/lm.arpa"}
        path = tmp_path / "conf.cfg"
        path.write_text(format_config(values))
        assert load_config(path) == values
        assert format_config(load_config(path)) == format_config(values)

    def test_unknown_field_named(self):
        with pytest.raises(ConfigError, match="decode.gamma"):
            parse_config_text("decode.gamma = 1\n")

    def test_malformed_line(self):
        with pytest.raises(ConfigError, match="line 1"):
            parse_config_text("just words\n")

    def test_run_manifest_digests(self, tmp_path):
        data = tmp_path / "input.txt"
        data.write_text("payload")
        out = tmp_path / "out"
        write_run_manifest(out, [data], {"decode.alpha": "0.5"})
        manifest = (out / "run_manifest.tsv").read_text().splitlines()
        assert manifest[0] == "path\tsha256"
        assert manifest[1].startswith(str(data))
        assert len(manifest[1].split("\t")[1]) == 64
        assert (out / "effective_config.cfg").read_text() == "decode.alpha = 0.5\n"

    def test_run_manifest_deterministic(self, tmp_path):
        data = tmp_path / "input.txt"
        data.write_text("payload")
        first, second = tmp_path / "a", tmp_path / "b"
        write_run_manifest(first, [data], {})
        write_run_manifest(second, [data], {})
        assert (first / "run_manifest.tsv").read_bytes() == \
            (second / "run_manifest.tsv").read_bytes()


class TestReport:
    def test_wer_by_mode_outputs(self, tmp_path):
        render_wer_by_mode([("greedy", 0.28), ("beam_lm", 0.18)], tmp_path)
        table = (tmp_path / "wer_by_mode.tsv").read_text().splitlines()
        assert table[1] == "greedy\t0.2800"
        assert (tmp_path / "wer_by_mode.png").stat().st_size > 0

    def test_weight_sweep_outputs(self, tmp_path):
        rows = [SweepRow(float(w), 0.8 + w / 100, 0.02, 0.2 + w / 50, 0.01)
                for w in range(4)]
        render_weight_sweep(rows, tmp_path)
        table = (tmp_path / "weight_sweep.tsv").read_text().splitlines()
        assert table[0] == "weight\trecall_mean\trecall_sd\twer_mean\twer_sd"
        assert len(table) == 5
        assert (tmp_path / "weight_sweep.png").stat().st_size > 0

    def test_entity_table_with_absent_meeting_and_spearman(self, tmp_path):
        rows = []
        ids = []
        for i, (f1_seed, wer) in enumerate(
            ((1, 0.25), (3, 0.21), (2, 0.26), (5, 0.24))
        ):
            ids.append(f"m{i}")
            rows.append((
                EntityMetrics(f"m{i}", true_positives=f1_seed, false_positives=1,
                              false_negatives=1),
                wer,
            ))
        ids.append("m4")
        rows.append((None, 0.3))  # meeting without hotwords: cells stay empty
        render_entity_table(rows, ids, tmp_path)
        lines = (tmp_path / "entity_metrics.tsv").read_text().splitlines()
        assert lines[-1].split("\t")[:4] == ["m4", "", "", ""]
        summary = (tmp_path / "summary.tsv").read_text()
        assert "spearman_wer_f1_rho" in summary
