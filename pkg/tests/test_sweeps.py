import math

import numpy as np
import pytest

from uavlc.exceptions.app_exceptions import ValidationException
from uavlc.schemas.runs import Scheme, SweepRow
from uavlc.services import sweeps
from uavlc.services.sweeps import SweepCell, plotdata, reduction_table, run_cell, run_sweep, sweep_scenario


def row(value, scheme, seed, power, feasible=True):
    return SweepRow(
        sweep_var="users", value=value, scheme=scheme, seed=seed,
        total_power_W=power, runtime_s=0.1, feasible=feasible,
    )


@pytest.fixture
def rows():
    return [
        row(4, Scheme.NO_RIS, 0, 10.0),
        row(4, Scheme.NO_RIS, 1, 20.0),
        row(4, Scheme.SCHEME1_DUAL, 0, 8.0),
        row(4, Scheme.SCHEME1_DUAL, 1, 15.0),
        row(6, Scheme.NO_RIS, 0, 30.0),
        row(6, Scheme.SCHEME1_DUAL, 0, 27.0),
        row(6, Scheme.SCHEME1_DUAL, 1, float("nan"), feasible=False),
    ]


class TestReductions:

    def test_plotdata_means_feasible_rows(self, rows):
        frame = plotdata(rows)
        assert list(frame["value"]) == [4.0, 6.0]
        assert list(frame[Scheme.NO_RIS.value]) == [15.0, 30.0]
        assert list(frame[Scheme.SCHEME1_DUAL.value]) == [11.5, 27.0]

    def test_reduction_is_paired_by_seed(self, rows):
        table = reduction_table(rows)
        first = table[table["value"] == 4].iloc[0]
        # seed 0: 20 %, seed 1: 25 %
        assert first["reduction_pct"] == pytest.approx(22.5)
        assert first["seeds"] == 2
        second = table[table["value"] == 6].iloc[0]
        assert second["reduction_pct"] == pytest.approx(10.0)
        assert second["seeds"] == 1
        assert set(table["scheme"]) == {Scheme.SCHEME1_DUAL.value}

    def test_reduction_without_baseline_is_empty(self, rows):
        table = reduction_table([r for r in rows if r.scheme != Scheme.NO_RIS])
        assert table.empty


class TestSweepCells:

    def test_sweep_scenario_sets_the_value(self, bundled):
        assert sweep_scenario(bundled, "users", 9, seed=1).user_count == 9
        assert sweep_scenario(bundled, "ris-count", 2, seed=1).ris_count == 2
        assert sweep_scenario(bundled, "elements", 7, seed=1).ris_elements == 7
        assert sweep_scenario(bundled, "height", 30.0, seed=1).uav_altitude == 30.0

    def test_unknown_variable(self, bundled):
        with pytest.raises(ValidationException):
            sweep_scenario(bundled, "area", 10, seed=0)

    def test_failed_cell_becomes_infeasible_row(self, bundled):
        result = run_cell(SweepCell("height", 3.0, Scheme.INITIAL_ONLY, 0), bundled)
        assert not result.feasible
        assert math.isnan(result.total_power_W)
        assert "ris_height" in result.error

    def test_numerical_error_becomes_infeasible_row(self, bundled, monkeypatch):
        def singular(scenario, config):
            raise np.linalg.LinAlgError("Singular matrix")

        monkeypatch.setattr(sweeps, "run", singular)
        result = run_cell(SweepCell("users", 4, Scheme.SCHEME1_DUAL, 0), bundled)
        assert not result.feasible
        assert math.isnan(result.total_power_W)
        assert result.error == "LinAlgError: Singular matrix"

    def test_programming_errors_still_propagate(self, bundled, monkeypatch):
        def broken(scenario, config):
            raise KeyError("phases")

        monkeypatch.setattr(sweeps, "run", broken)
        with pytest.raises(KeyError):
            run_cell(SweepCell("users", 4, Scheme.SCHEME1_DUAL, 0), bundled)


class TestRunSweep:

    def test_rows_sorted_and_complete(self, bundled):
        rows = run_sweep(
            bundled, "users", [4, 2], [Scheme.NO_RIS, Scheme.INITIAL_ONLY], seeds=2,
            options={"max_outer": 1, "sca_max_iters": 3, "user_dual_iters": 5},
        )
        keys = [(r.value, r.scheme.value, r.seed) for r in rows]
        assert keys == sorted(keys)
        assert len(rows) == 8
        assert all(r.feasible for r in rows)

    def test_rejects_unknown_variable(self, bundled):
        with pytest.raises(ValidationException):
            run_sweep(bundled, "speed", [1], [Scheme.NO_RIS], seeds=1)
