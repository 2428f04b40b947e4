import math

import pytest

from parlscribe.errors import TooFewMeetings
from parlscribe.tuning import (
    FoldPlan,
    GridSpec,
    Params,
    grid_search,
    make_folds,
    weight_sweep,
)


def planted_segments(meetings, per_meeting=10):
    return {
        m: [(f"ref {m} {i}", (m, i)) for i in range(per_meeting)]
        for m in meetings
    }


class TestMakeFolds:
    def test_paper_layout(self):
        meetings = [f"m{i:02d}" for i in range(10)]
        plan = make_folds(meetings, k=5, seed=0)
        sizes = [len(plan.meetings_in(f)) for f in range(5)]
        assert sizes == [2] * 5
        # with 10 segments per meeting every fold holds 20 segments
        segments = planted_segments(meetings)
        assert all(
            sum(len(segments[m]) for m in plan.meetings_in(f)) == 20
            for f in range(5)
        )

    def test_leave_one_meeting_out(self):
        meetings = ["a", "b", "c"]
        plan = make_folds(meetings, k=3, seed=1)
        assert sorted(len(plan.meetings_in(f)) for f in range(3)) == [1, 1, 1]

    def test_deterministic_under_seed(self):
        meetings = [f"m{i}" for i in range(7)]
        assert make_folds(meetings, 3, seed=42) == make_folds(meetings, 3, seed=42)
        assert make_folds(meetings, 3, seed=42) != make_folds(meetings, 3, seed=43)

    def test_too_few_meetings(self):
        with pytest.raises(TooFewMeetings):
            make_folds(["a", "b"], k=3)

    def test_group_integrity(self):
        plan = make_folds([f"m{i}" for i in range(9)], k=4, seed=7)
        for fold in range(4):
            train = set(plan.meetings_in(fold))
            test = set(plan.meetings_not_in(fold))
            assert not train & test
            assert train | test == set(plan.assignment)


def objective_from_table(table):
    """eval_fn whose value is a planted function of the decoded 'hypothesis'."""
    def eval_fn(by_meeting):
        values = [table[hyp] for pairs in by_meeting.values() for _ref, hyp in pairs]
        return sum(values) / len(values)
    return eval_fn


class TestGridSearch:
    def setup_method(self):
        self.meetings = [f"m{i}" for i in range(5)]
        self.segments = planted_segments(self.meetings, per_meeting=4)
        self.folds = make_folds(self.meetings, k=5, seed=0)

    def test_planted_optimum_returned(self):
        planted = Params(0.5, 1.0, 0.0)

        def decode_fn(params, payload):
            distance = abs(params.alpha - planted.alpha) + abs(params.beta - planted.beta)
            return f"{distance:.4f}"

        def eval_fn(by_meeting):
            values = [float(h) for pairs in by_meeting.values() for _r, h in pairs]
            return sum(values) / len(values)

        grid = GridSpec(alpha_values=(0.0, 0.5, 1.0), beta_values=(0.0, 1.0, 2.0),
                        objective="min_wer")
        result = grid_search(self.folds, grid, decode_fn, eval_fn, self.segments)
        assert result.best_params == planted
        assert all(row.params == planted for row in result.fold_rows)

    def test_all_equal_ties_to_smallest(self):
        grid = GridSpec(alpha_values=(1.0, 0.0), beta_values=(2.0, -1.0),
                        weight_values=(3.0, 0.0), objective="min_wer")
        result = grid_search(
            self.folds, grid, lambda p, payload: "x",
            objective_from_table({"x": 0.25}), self.segments,
        )
        assert result.best_params == Params(0.0, -1.0, 0.0)

    def test_fig2_shaped_recall_curve_selects_weight_three(self):
        # recall rises until weight 3, then stays flat: smallest argmax is 3
        recall_by_weight = {0.0: 0.82, 1.0: 0.83, 2.0: 0.84, 3.0: 0.85,
                            4.0: 0.85, 5.0: 0.85, 6.0: 0.85}

        def decode_fn(params, payload):
            return f"{recall_by_weight[params.weight]:.4f}"

        def eval_fn(by_meeting):
            values = [float(h) for pairs in by_meeting.values() for _r, h in pairs]
            return sum(values) / len(values)

        grid = GridSpec(alpha_values=(0.5,), beta_values=(0.0,),
                        weight_values=tuple(recall_by_weight), objective="max_recall")
        result = grid_search(self.folds, grid, decode_fn, eval_fn, self.segments)
        assert result.best_params.weight == 3.0

    def test_failed_cells_excluded_with_warning(self):
        def decode_fn(params, payload):
            if params.alpha == 1.0:
                raise RuntimeError("decode exploded")
            return "0.5" if params.alpha == 0.0 else "0.9"

        def eval_fn(by_meeting):
            values = [float(h) for pairs in by_meeting.values() for _r, h in pairs]
            return sum(values) / len(values)

        grid = GridSpec(alpha_values=(0.0, 0.5, 1.0), beta_values=(0.0,),
                        objective="min_wer")
        with pytest.warns(UserWarning, match="excluded"):
            result = grid_search(self.folds, grid, decode_fn, eval_fn, self.segments)
        assert result.best_params.alpha == 0.0
        assert all(c.params.alpha != 1.0 for c in result.cell_rows)

    def test_enumeration_order_invariance(self):
        table = {"lo": 0.1, "hi": 0.9}

        def decode_fn(params, payload):
            return "lo" if (params.alpha, params.beta) == (0.5, 0.0) else "hi"

        forward = GridSpec(alpha_values=(0.0, 0.5), beta_values=(0.0, 1.0),
                           objective="min_wer")
        backward = GridSpec(alpha_values=(0.5, 0.0), beta_values=(1.0, 0.0),
                            objective="min_wer")
        results = [
            grid_search(self.folds, grid, decode_fn, objective_from_table(table),
                        self.segments)
            for grid in (forward, backward)
        ]
        assert results[0].best_params == results[1].best_params == Params(0.5, 0.0, 0.0)

    def test_best_mean_dominates_all_cells(self):
        def decode_fn(params, payload):
            meeting, index = payload
            return f"{(params.alpha + 1) * (index + 1) % 7 / 7:.4f}"

        def eval_fn(by_meeting):
            values = [float(h) for pairs in by_meeting.values() for _r, h in pairs]
            return sum(values) / len(values)

        grid = GridSpec(alpha_values=(0.0, 1.0, 2.0), beta_values=(0.0,),
                        objective="min_wer")
        result = grid_search(self.folds, grid, decode_fn, eval_fn, self.segments)
        best_mean = min(c.mean_objective for c in result.cell_rows)
        chosen = next(c for c in result.cell_rows if c.params == result.best_params)
        assert chosen.mean_objective == best_mean


class TestWeightSweep:
    def test_single_fold_sd_zero(self):
        segments = planted_segments(["a"], per_meeting=3)
        folds = FoldPlan(k=1, assignment={"a": 0})
        rows = weight_sweep(
            folds, (0.0, 1.0), lambda p, payload: "0.8",
            objective_from_table({"0.8": 0.8}), objective_from_table({"0.8": 0.2}),
            segments,
        )
        assert all(r.recall_sd == 0.0 and r.wer_sd == 0.0 for r in rows)

    def test_two_fold_mean_and_population_sd(self):
        segments = planted_segments(["a", "b"], per_meeting=2)
        folds = FoldPlan(k=2, assignment={"a": 0, "b": 1})

        def recall_fn(by_meeting):
            return 0.8 if "a" in by_meeting else 0.9

        rows = weight_sweep(
            folds, (2.0,), lambda p, payload: "h", recall_fn,
            objective_from_table({"h": 0.0}), segments,
        )
        assert rows[0].recall_mean == pytest.approx(0.85)
        assert rows[0].recall_sd == pytest.approx(0.05)

    def test_matches_recomputation(self):
        segments = planted_segments(["a", "b", "c"], per_meeting=2)
        folds = make_folds(["a", "b", "c"], k=3, seed=0)

        def decode_fn(params, payload):
            meeting, index = payload
            return f"{params.weight * (index + 1):.4f}"

        def metric(by_meeting):
            values = [float(h) for pairs in by_meeting.values() for _r, h in pairs]
            return sum(values) / len(values)

        weights = (0.0, 1.0, 2.0)
        rows = weight_sweep(folds, weights, decode_fn, metric, metric, segments)
        for row in rows:
            per_fold = [row.weight * 1.5] * 3  # indices 0,1 -> mean of w*(1,2)
            mean = sum(per_fold) / 3
            sd = math.sqrt(sum((v - mean) ** 2 for v in per_fold) / 3)
            assert row.recall_mean == pytest.approx(mean)
            assert row.recall_sd == pytest.approx(sd)
