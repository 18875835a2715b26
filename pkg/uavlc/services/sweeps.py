"""
Sweep engine: runs every (value, scheme, seed) cell in a process pool and
reduces the rows to plot-ready series.
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from uavlc.core.logging_config import logger
from uavlc.exceptions.app_exceptions import AppException, ValidationException
from uavlc.models.scenario import Scenario
from uavlc.repositories.results import sweep_frame
from uavlc.repositories.scenarios import random_scenario
from uavlc.schemas.runs import RunConfig, Scheme, SweepRow
from uavlc.schemas.scenario import ScenarioCounts
from uavlc.services.orchestrator import run, summarize

SWEEP_VARS = ("users", "height", "ris-count", "elements")
BASELINE = Scheme.NO_RIS
NUMERICAL_ERRORS = (np.linalg.LinAlgError, FloatingPointError, ZeroDivisionError)


@dataclass(frozen=True)
class SweepCell:
    sweep_var: str
    value: float
    scheme: Scheme
    seed: int
    options: Dict[str, float] = field(default_factory=dict)


def sweep_scenario(base: Scenario, sweep_var: str, value: float, seed: int) -> Scenario:
    """Random drop of `seed` with the swept quantity set to `value`."""
    if sweep_var == "users":
        return random_scenario(seed, ScenarioCounts(user_count=int(value)), base)
    if sweep_var == "ris-count":
        return random_scenario(seed, ScenarioCounts(ris_count=int(value)), base)
    if sweep_var == "elements":
        return random_scenario(seed, ScenarioCounts(ris_elements=int(value)), base)
    if sweep_var == "height":
        return random_scenario(seed, None, base).with_changes(uav_altitude=float(value))
    raise ValidationException(f"unknown sweep variable {sweep_var!r}, expected one of {SWEEP_VARS}")


def _failed_row(cell: SweepCell, error: str) -> SweepRow:
    return SweepRow(
        sweep_var=cell.sweep_var, value=cell.value, scheme=cell.scheme, seed=cell.seed,
        total_power_W=float("nan"), runtime_s=0.0, feasible=False, error=error,
    )


def run_cell(cell: SweepCell, base: Scenario) -> SweepRow:
    """
    Runs one cell end to end. Application errors and numerical errors from
    numpy / scipy become rows with feasible=False; anything else propagates.
    """
    try:
        scenario = sweep_scenario(base, cell.sweep_var, cell.value, cell.seed)
        config = RunConfig.from_settings(scheme=cell.scheme, seed=cell.seed, **cell.options)
        summary = summarize(run(scenario, config), scenario)
    except AppException as exc:
        logger.warning(
            "Sweep cell failed (var=%s, value=%s, scheme=%s, seed=%s, error=%s)",
            cell.sweep_var, cell.value, cell.scheme.value, cell.seed, exc.message,
        )
        return _failed_row(cell, exc.message)
    except NUMERICAL_ERRORS as exc:
        logger.error(
            "Sweep cell hit a numerical error (var=%s, value=%s, scheme=%s, seed=%s)",
            cell.sweep_var, cell.value, cell.scheme.value, cell.seed, exc_info=True,
        )
        return _failed_row(cell, f"{type(exc).__name__}: {exc}")
    return SweepRow(
        sweep_var=cell.sweep_var,
        value=cell.value,
        scheme=cell.scheme,
        seed=cell.seed,
        total_power_W=summary.total_power_W,
        runtime_s=summary.runtime_s,
        seconds_per_iteration=summary.seconds_per_iteration,
        outer_iters=summary.outer_iters,
        feasible=summary.feasible,
        nearest_ris_fraction=summary.nearest_ris_fraction,
    )


def run_sweep(
    base: Scenario,
    sweep_var: str,
    values: Sequence[float],
    schemes: Sequence[Scheme],
    seeds: int,
    options: Optional[Dict[str, float]] = None,
    threads: int = 1,
) -> List[SweepRow]:
    """
    Seeds 0..seeds−1 for every value and scheme. Rows come back sorted by
    (value, scheme, seed) whatever order the pool finishes in.
    """
    if sweep_var not in SWEEP_VARS:
        raise ValidationException(f"unknown sweep variable {sweep_var!r}, expected one of {SWEEP_VARS}")
    cells = [
        SweepCell(sweep_var, float(value), Scheme(scheme), seed, dict(options or {}))
        for value, scheme, seed in product(values, schemes, range(seeds))
    ]
    logger.info("Starting sweep (var=%s, cells=%s, threads=%s)", sweep_var, len(cells), threads)
    if threads <= 1:
        rows = [run_cell(cell, base) for cell in cells]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(run_cell, cells, [base] * len(cells)))
    return sorted(rows, key=lambda row: (row.value, row.scheme.value, row.seed))


def plotdata(rows: Sequence[SweepRow]) -> pd.DataFrame:
    """Mean total power of feasible rows per sweep value, one column per scheme."""
    frame = sweep_frame(rows)
    frame = frame[frame["feasible"]]
    if frame.empty:
        return pd.DataFrame(columns=["sweep_var", "value"])
    table = frame.pivot_table(index=["sweep_var", "value"], columns="scheme", values="total_power_W", aggfunc="mean")
    table.columns.name = None
    return table.reset_index()


def reduction_table(rows: Sequence[SweepRow], baseline: Scheme = BASELINE) -> pd.DataFrame:
    """
    Mean percentage reduction of each scheme's power against `baseline`,
    paired by (value, seed) over cells where both runs are feasible.
    """
    frame = sweep_frame(rows)
    frame = frame[frame["feasible"]]
    base = frame[frame["scheme"] == baseline.value][["value", "seed", "total_power_W"]]
    paired = frame[frame["scheme"] != baseline.value].merge(base, on=["value", "seed"], suffixes=("", "_baseline"))
    paired["reduction_pct"] = 100.0 * (paired["total_power_W_baseline"] - paired["total_power_W"]) / paired["total_power_W_baseline"]
    if paired.empty:
        return pd.DataFrame(columns=["value", "scheme", "mean_power_W", "baseline_power_W", "reduction_pct", "seeds"])
    return (
        paired.groupby(["value", "scheme"], as_index=False)
        .agg(
            mean_power_W=("total_power_W", "mean"),
            baseline_power_W=("total_power_W_baseline", "mean"),
            reduction_pct=("reduction_pct", "mean"),
            seeds=("seed", "count"),
        )
    )
