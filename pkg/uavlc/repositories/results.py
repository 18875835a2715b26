"""
Result files of the CLI.

    <out>/solution.json   reproducible RunTrace (no wall-clock fields)
    <out>/summary.csv     one RunSummary row per run
    <out>/sweep.csv       one SweepRow per (value, scheme, seed)
    <out>/plotdata.csv    mean power per sweep value, one column per scheme
    <out>/reduction.csv   mean reduction of each scheme against no-ris
"""
from pathlib import Path
from typing import Iterable, List

import pandas as pd

from uavlc.models.trace import RunTrace
from uavlc.schemas.runs import RunSummary, RunTraceOut, SweepRow

SUMMARY_COLUMNS = [
    "scheme", "seed", "total_power_W", "outer_iters", "runtime_s",
    "seconds_per_iteration", "feasible", "nearest_ris_fraction",
]
SWEEP_COLUMNS = list(SweepRow.model_fields)


def _target(out_dir: Path, name: str) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir / name


def write_solution(trace: RunTrace, out_dir: Path) -> Path:
    path = _target(out_dir, "solution.json")
    path.write_text(RunTraceOut.from_domain(trace).model_dump_json(indent=2) + "\n", encoding="utf-8")
    return path


def write_summary(rows: Iterable[RunSummary], out_dir: Path) -> Path:
    path = _target(out_dir, "summary.csv")
    frame = pd.DataFrame([row.model_dump(mode="json", exclude={"solution"}) for row in rows], columns=SUMMARY_COLUMNS)
    frame.to_csv(path, index=False)
    return path


def sweep_frame(rows: Iterable[SweepRow]) -> pd.DataFrame:
    return pd.DataFrame([row.model_dump(mode="json") for row in rows], columns=SWEEP_COLUMNS)


def write_sweep(rows: List[SweepRow], out_dir: Path) -> Path:
    path = _target(out_dir, "sweep.csv")
    sweep_frame(rows).to_csv(path, index=False)
    return path


def write_frame(frame: pd.DataFrame, out_dir: Path, name: str) -> Path:
    path = _target(out_dir, name)
    frame.to_csv(path, index=False)
    return path
