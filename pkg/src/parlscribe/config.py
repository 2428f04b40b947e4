"""Flat key-value configuration with section prefixes, plus run manifests.

Config files are diff-friendly experiment records: one `section.key = value`
per line, '#' comments allowed. Command-line flags override file values.
Every CLI run writes a manifest of its input digests and the effective
config so results can be reproduced byte for byte.
"""

from __future__ import annotations

import hashlib
from pathlib import Path

from .errors import ConfigError

KNOWN_KEYS = {
    "paths.audio_dir", "paths.logits_dir", "paths.corpus_dir", "paths.lm",
    "paths.hotwords_dir", "paths.fixtures_dir", "paths.manifest",
    "decode.mode", "decode.beam_width", "decode.alpha", "decode.beta",
    "decode.token_min_logp", "decode.hotword_weight", "decode.jobs",
    "grid.alpha", "grid.beta", "grid.weight", "grid.objective",
    "tune.folds", "seeds.folds", "seeds.lda", "topics.iterations",
}


def parse_config_text(text: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'section.key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown field {key!r}")
        values[key] = value.strip()
    return values


def load_config(path: str | Path) -> dict[str, str]:
    return parse_config_text(Path(path).read_text(encoding="utf-8"))


def format_config(values: dict[str, str]) -> str:
    return "\n".join(f"{k} = {values[k]}" for k in sorted(values)) + "\n"


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def write_run_manifest(
    out_dir: str | Path,
    inputs: list[str | Path],
    effective_config: dict[str, str],
) -> None:
    """Record input digests and the effective config of one CLI run."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["path\tsha256"]
    for item in sorted(str(p) for p in inputs):
        p = Path(item)
        if p.is_dir():
            for child in sorted(p.rglob("*")):
                if child.is_file():
                    lines.append(f"{child}\t{sha256_file(child)}")
        elif p.is_file():
            lines.append(f"{p}\t{sha256_file(p)}")
    (out / "run_manifest.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    (out / "effective_config.cfg").write_text(
        format_config(effective_config), encoding="utf-8"
    )
