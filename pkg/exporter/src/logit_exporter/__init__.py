"""logit-exporter: acoustic-model inference writing parlscribe logit files."""

from .export import ExportJob, ExportReport, ModelLoadError, SegmentReadError, export

__version__ = "0.1.0"
