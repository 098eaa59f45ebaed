"""Trial-log persistence: one CSV row per started trial.

Columns are fixed by the space's parameter order:

    trial_index, generator, <param names...>, objective, sem, status, elapsed_ms

Reals are rendered with 17 significant digits so float64 values round-trip
losslessly.  FAILED trials have empty objective and sem cells.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from .errors import UsageError
from .loop import Experiment
from .space import CHOICE, FIXED, RANGE_INT, SearchSpace


@dataclass(frozen=True)
class TrialLogRecord:
    trial_index: int
    generator: str
    params: dict
    objective: float | None
    sem: float | None
    status: str
    elapsed_ms: int


def _format_value(v) -> str:
    if isinstance(v, bool):
        return str(v)
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def _format_real(v: float | None) -> str:
    return "" if v is None else format(float(v), ".17g")


def records_from_experiment(experiment: Experiment) -> list[TrialLogRecord]:
    records = []
    for t in experiment.trials:
        records.append(
            TrialLogRecord(
                trial_index=t.index,
                generator=t.generator.value,
                params=dict(t.arm.values),
                objective=None if t.observation is None else t.observation.objective,
                sem=None if t.observation is None else t.observation.sem,
                status=t.status.value,
                elapsed_ms=t.elapsed_ms,
            )
        )
    return records


def write_trial_log(experiment: Experiment, path) -> None:
    """Write the experiment's trials as CSV; header row first."""
    path = Path(path)
    names = experiment.space.names
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["trial_index", "generator", *names, "objective", "sem", "status", "elapsed_ms"])
            for r in records_from_experiment(experiment):
                writer.writerow(
                    [
                        r.trial_index,
                        r.generator,
                        *(_format_value(r.params[n]) for n in names),
                        _format_real(r.objective),
                        _format_real(r.sem),
                        r.status,
                        r.elapsed_ms,
                    ]
                )
    except OSError as exc:
        raise UsageError(f"cannot write trial log to {path}: {exc}") from exc


def _parse_param_value(cell: str, space: SearchSpace | None, name: str):
    if space is not None:
        p = space.param(name)
        if p.kind == RANGE_INT:
            return int(cell)
        if p.kind == CHOICE:
            for option in p.options:
                if _format_value(option) == cell:
                    return option
            raise UsageError(f"value {cell!r} is not an option of parameter {name!r}")
        if p.kind == FIXED:
            if _format_value(p.value) == cell:
                return p.value
            raise UsageError(f"value {cell!r} does not match fixed parameter {name!r}")
        return float(cell)
    # Best-effort typing without a space; numeric-looking strings become
    # numbers, so string choice options like "1" will not round-trip.
    for parse in (int, float):
        try:
            return parse(cell)
        except ValueError:
            pass
    if cell in ("True", "False"):
        return cell == "True"
    return cell


def read_trial_log(path, space: SearchSpace | None = None) -> list[TrialLogRecord]:
    """Read records back; pass the space to recover exact parameter types."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise UsageError(f"cannot read trial log from {path}: {exc}") from exc
    if not rows:
        raise UsageError(f"trial log {path} is empty (missing header)")
    header = rows[0]
    if header[:2] != ["trial_index", "generator"] or header[-4:] != [
        "objective",
        "sem",
        "status",
        "elapsed_ms",
    ]:
        raise UsageError(f"trial log {path} has an unexpected header: {header}")
    names = header[2:-4]
    records = []
    for row in rows[1:]:
        if not row:
            continue
        params = {
            name: _parse_param_value(cell, space, name)
            for name, cell in zip(names, row[2 : 2 + len(names)])
        }
        objective_cell, sem_cell, status, elapsed = row[2 + len(names) :]
        records.append(
            TrialLogRecord(
                trial_index=int(row[0]),
                generator=row[1],
                params=params,
                objective=float(objective_cell) if objective_cell else None,
                sem=float(sem_cell) if sem_cell else None,
                status=status,
                elapsed_ms=int(elapsed),
            )
        )
    return records
