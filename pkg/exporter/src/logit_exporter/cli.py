"""Command line for the exporter: --model, --manifest, --audio-dir, --out."""

import argparse
import logging
import sys
from pathlib import Path

from .export import ExportJob, ModelLoadError, export


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Export acoustic-model logits for segmented WAV files."
    )
    parser.add_argument("--model", required=True,
                        help="Model id or local checkpoint directory.")
    parser.add_argument("--manifest", required=True, type=Path,
                        help="Segment manifest TSV produced by the segmenter.")
    parser.add_argument("--audio-dir", required=True, type=Path,
                        help="Directory holding <meeting>_<index>.wav files.")
    parser.add_argument("--out", required=True, type=Path,
                        help="Output directory for .lgt files and vocab.txt.")
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    try:
        report = export(ExportJob(
            model=args.model, manifest=args.manifest,
            audio_dir=args.audio_dir, out_dir=args.out,
        ))
    except ModelLoadError as exc:
        print(f"ModelLoadError: {exc}", file=sys.stderr)
        return 1
    print(f"exported {len(report.written)} segments, {len(report.failures)} failures")
    for name, error in report.failures:
        print(f"  failed {name}: {error}", file=sys.stderr)
    return 0 if not report.failures else 2


if __name__ == "__main__":
    sys.exit(main())
