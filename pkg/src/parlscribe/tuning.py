"""Meeting-grouped cross-validation, grid search, and weight sweeps.

All segments of one meeting share a fold so no speaker or topic information
leaks between the tuning and held-out partitions. Grid cells are
(alpha, beta, hotword weight) triples; ties always go to the
lexicographically smallest cell so results do not depend on enumeration
order.
"""

from __future__ import annotations

import random
import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple

from .errors import TooFewMeetings


class Params(NamedTuple):
    alpha: float
    beta: float
    weight: float


DEFAULT_ALPHA_GRID = tuple(0.25 * i for i in range(9))       # 0.0 .. 2.0
DEFAULT_BETA_GRID = tuple(-2.0 + 0.5 * i for i in range(9))  # -2.0 .. 2.0
DEFAULT_WEIGHT_GRID = tuple(0.5 * i for i in range(13))      # 0.0 .. 6.0


@dataclass(frozen=True)
class GridSpec:
    alpha_values: tuple[float, ...] = DEFAULT_ALPHA_GRID
    beta_values: tuple[float, ...] = DEFAULT_BETA_GRID
    weight_values: tuple[float, ...] = (0.0,)
    objective: str = "min_wer"  # or "max_recall"

    def __post_init__(self):
        if not (self.alpha_values and self.beta_values and self.weight_values):
            raise ValueError("grid value lists must be non-empty")
        if self.objective not in ("min_wer", "max_recall"):
            raise ValueError(f"unknown objective {self.objective!r}")

    @property
    def cells(self) -> list[Params]:
        return sorted(
            Params(a, b, w)
            for a in self.alpha_values
            for b in self.beta_values
            for w in self.weight_values
        )


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignment: dict[str, int]  # meeting_id -> fold index

    def meetings_in(self, fold: int) -> list[str]:
        return sorted(m for m, f in self.assignment.items() if f == fold)

    def meetings_not_in(self, fold: int) -> list[str]:
        return sorted(m for m, f in self.assignment.items() if f != fold)


def make_folds(meetings: list[str], k: int = 5, seed: int = 0) -> FoldPlan:
    """Assign whole meetings to k folds: seeded shuffle, then round-robin."""
    unique = sorted(set(meetings))
    if len(unique) < k:
        raise TooFewMeetings(f"{len(unique)} meetings cannot fill {k} folds")
    random.Random(seed).shuffle(unique)
    return FoldPlan(k=k, assignment={m: i % k for i, m in enumerate(unique)})


# A segment is (reference_text, payload); decode_fn turns the payload into a
# hypothesis for a given parameter cell.
Segments = dict[str, list[tuple[str, object]]]
DecodeFn = Callable[[Params, object], str]
EvalFn = Callable[[dict[str, list[tuple[str, str]]]], float]


def _decode_cells(
    cells: list[Params], segments: Segments, decode_fn: DecodeFn
) -> tuple[dict[Params, dict[str, list[tuple[str, str]]]], set[Params]]:
    """Hypotheses per cell per meeting; cells whose decode failed are flagged."""
    decoded: dict[Params, dict[str, list[tuple[str, str]]]] = {}
    failed: set[Params] = set()
    for cell in cells:
        per_meeting: dict[str, list[tuple[str, str]]] = {}
        try:
            for meeting, items in segments.items():
                per_meeting[meeting] = [
                    (ref, decode_fn(cell, payload)) for ref, payload in items
                ]
        except Exception as exc:
            warnings.warn(f"grid cell {cell} failed and is excluded: {exc}")
            failed.add(cell)
            continue
        decoded[cell] = per_meeting
    return decoded, failed


def _better(objective: str, a: float, b: float) -> bool:
    return a < b if objective == "min_wer" else a > b


@dataclass(frozen=True)
class FoldRow:
    fold: int
    params: Params
    train_objective: float
    test_objective: float


@dataclass(frozen=True)
class CellRow:
    params: Params
    mean_objective: float
    sd_objective: float
    per_fold: tuple[float, ...]


@dataclass(frozen=True)
class GridSearchResult:
    best_params: Params
    fold_rows: tuple[FoldRow, ...]
    cell_rows: tuple[CellRow, ...]


def _population_sd(values: list[float]) -> float:
    mean = sum(values) / len(values)
    return (sum((v - mean) ** 2 for v in values) / len(values)) ** 0.5


def grid_search(
    folds: FoldPlan,
    grid: GridSpec,
    decode_fn: DecodeFn,
    eval_fn: EvalFn,
    segments: Segments,
) -> GridSearchResult:
    """Select parameters by grouped cross-validation over the grid.

    Per fold: pick the cell that is best on the k-1 training folds, then
    apply it to the held-out fold. The global choice is the cell with the
    best mean per-fold objective.
    """
    cells = grid.cells
    decoded, failed = _decode_cells(cells, segments, decode_fn)
    live = [c for c in cells if c not in failed]
    if not live:
        raise ValueError("every grid cell failed to decode")

    per_fold: dict[Params, list[float]] = {c: [] for c in live}
    for cell in live:
        for fold in range(folds.k):
            subset = {m: decoded[cell][m] for m in folds.meetings_in(fold)}
            per_fold[cell].append(eval_fn(subset))

    fold_rows = []
    for fold in range(folds.k):
        train_meetings = folds.meetings_not_in(fold)
        best_cell = None
        best_value = None
        for cell in live:  # cells are sorted: first strict winner = smallest tie
            subset = {m: decoded[cell][m] for m in train_meetings}
            value = eval_fn(subset)
            if best_value is None or _better(grid.objective, value, best_value):
                best_cell, best_value = cell, value
        fold_rows.append(FoldRow(
            fold=fold,
            params=best_cell,
            train_objective=best_value,
            test_objective=per_fold[best_cell][fold],
        ))

    cell_rows = []
    best_cell = None
    best_mean = None
    for cell in live:
        values = per_fold[cell]
        mean = sum(values) / len(values)
        cell_rows.append(CellRow(
            params=cell,
            mean_objective=mean,
            sd_objective=_population_sd(values),
            per_fold=tuple(values),
        ))
        if best_mean is None or _better(grid.objective, mean, best_mean):
            best_cell, best_mean = cell, mean
    return GridSearchResult(
        best_params=best_cell,
        fold_rows=tuple(fold_rows),
        cell_rows=tuple(cell_rows),
    )


@dataclass(frozen=True)
class SweepRow:
    weight: float
    recall_mean: float
    recall_sd: float
    wer_mean: float
    wer_sd: float


def weight_sweep(
    folds: FoldPlan,
    weights: tuple[float, ...],
    decode_fn: DecodeFn,
    recall_fn: EvalFn,
    wer_fn: EvalFn,
    segments: Segments,
    alpha: float = 0.0,
    beta: float = 0.0,
) -> list[SweepRow]:
    """Per-weight mean and population sd of recall and WER across folds."""
    cells = [Params(alpha, beta, w) for w in weights]
    decoded, failed = _decode_cells(cells, segments, decode_fn)
    rows = []
    for cell in cells:
        if cell in failed:
            continue
        recalls, wers = [], []
        for fold in range(folds.k):
            subset = {m: decoded[cell][m] for m in folds.meetings_in(fold)}
            recalls.append(recall_fn(subset))
            wers.append(wer_fn(subset))
        rows.append(SweepRow(
            weight=cell.weight,
            recall_mean=sum(recalls) / len(recalls),
            recall_sd=_population_sd(recalls),
            wer_mean=sum(wers) / len(wers),
            wer_sd=_population_sd(wers),
        ))
    return rows
