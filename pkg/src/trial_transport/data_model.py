"""Observation schema, validation, and CSV ingestion for pooled trial/target data."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterator, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .errors import SchemaError, ValidationError

LOGGER = logging.getLogger(__name__)

TARGET_TRIAL_ID = 0
MISSING_TREATMENT = -1

CANONICAL_TRIAL_COLUMN = "trial"
CANONICAL_TREATMENT_COLUMN = "treatment"
CANONICAL_OUTCOME_COLUMN = "outcome"


@dataclass(frozen=True)
class CsvSchema:
    """Column mapping for reading pooled data files."""

    trial: str = CANONICAL_TRIAL_COLUMN
    treatment: str = CANONICAL_TREATMENT_COLUMN
    outcome: str = CANONICAL_OUTCOME_COLUMN
    # None: every column not mapped above, in header order.
    covariates: Optional[Tuple[str, ...]] = None
    # Declared treatment set; each level must occur among trial rows.
    levels: Optional[Tuple[int, ...]] = None


@dataclass(frozen=True)
class Observation:
    """A single row (X, S, A, Y); treatment and outcome may be absent for target rows."""

    trial_id: int
    treatment: Optional[int]
    outcome: Optional[float]
    covariates: Tuple[float, ...]

    def __post_init__(self) -> None:
        if self.trial_id < 0:
            raise ValidationError(f"trial id must be non-negative, got {self.trial_id}")
        if self.participation and (self.treatment is None or self.outcome is None):
            raise ValidationError("trial rows require both treatment and outcome")
        if not all(np.isfinite(self.covariates)):
            raise ValidationError("covariates must be finite")

    @property
    def participation(self) -> int:
        return int(self.trial_id >= 1)


def _frozen(values: np.ndarray) -> np.ndarray:
    values = np.array(values, copy=True)
    values.setflags(write=False)
    return values


@dataclass(frozen=True)
class ObservationTable:
    """Immutable pooled table of trial rows (S >= 1) and target rows (S = 0).

    Treatment codes are stored as int64 with ``MISSING_TREATMENT`` for absent
    values; outcomes are float64 with NaN for absent values.
    """

    trial_id: np.ndarray
    treatment: np.ndarray
    outcome: np.ndarray
    covariates: np.ndarray
    covariate_names: Tuple[str, ...] = ()
    declared_levels: Optional[Tuple[int, ...]] = None
    treatment_levels: Tuple[int, ...] = field(init=False)
    trial_ids: Tuple[int, ...] = field(init=False)

    def __post_init__(self) -> None:
        trial = np.asarray(self.trial_id)
        covariates = np.asarray(self.covariates, dtype=float)
        n = trial.shape[0] if trial.ndim == 1 else -1
        if n <= 0:
            raise ValidationError("table has no rows")
        if covariates.ndim == 1 and n > 0:
            covariates = covariates.reshape(n, -1)
        if covariates.ndim != 2 or covariates.shape[0] != n:
            raise ValidationError("covariate matrix must have one row per observation")

        if not np.issubdtype(trial.dtype, np.integer):
            if not np.all(np.isfinite(trial)) or not np.all(np.mod(trial, 1) == 0):
                raise SchemaError("trial ids must be integers")
        trial = trial.astype(np.int64)
        if (trial < 0).any():
            raise ValidationError("trial ids must be non-negative", row=int(np.argmax(trial < 0)))

        treatment = np.asarray(self.treatment)
        if treatment.shape != (n,):
            raise ValidationError("treatment column length mismatch")
        if not np.issubdtype(treatment.dtype, np.integer):
            treatment = np.asarray(treatment, dtype=float)
            absent = np.isnan(treatment)
            bad = ~absent & (np.mod(np.where(absent, 0.0, treatment), 1) != 0)
            if bad.any():
                raise ValidationError("treatment codes must be integers", row=int(np.argmax(bad)))
            treatment = np.where(absent, MISSING_TREATMENT, treatment).astype(np.int64)
        treatment = treatment.astype(np.int64)
        if (treatment < MISSING_TREATMENT).any():
            raise ValidationError(
                "treatment codes must be non-negative", row=int(np.argmax(treatment < MISSING_TREATMENT))
            )

        outcome = np.asarray(self.outcome, dtype=float)
        if outcome.shape != (n,):
            raise ValidationError("outcome column length mismatch")

        participation = trial >= 1
        missing_treatment = participation & (treatment == MISSING_TREATMENT)
        if missing_treatment.any():
            raise ValidationError("trial row is missing its treatment", row=int(np.argmax(missing_treatment)))
        missing_outcome = participation & np.isnan(outcome)
        if missing_outcome.any():
            raise ValidationError("trial row is missing its outcome", row=int(np.argmax(missing_outcome)))
        infinite_outcome = np.isinf(outcome)
        if infinite_outcome.any():
            raise ValidationError("outcome is not finite", row=int(np.argmax(infinite_outcome)))

        finite = np.isfinite(covariates).all(axis=1)
        if not finite.all():
            raise ValidationError("covariates must be finite", row=int(np.argmin(finite)))

        if not (~participation).any():
            raise ValidationError("table has no target rows (trial id 0)")
        if not participation.any():
            raise ValidationError("table has no trial rows (trial id >= 1)")

        observed_levels = tuple(int(v) for v in np.unique(treatment[participation]))
        levels = observed_levels
        if self.declared_levels is not None:
            declared = tuple(sorted(int(v) for v in self.declared_levels))
            absent_levels = [level for level in declared if level not in observed_levels]
            if absent_levels:
                raise ValidationError(
                    f"treatment levels {absent_levels} never occur among trial rows; "
                    "positivity of treatment in the trials is violated"
                )
            levels = declared

        names = tuple(self.covariate_names) or tuple(f"x{j + 1}" for j in range(covariates.shape[1]))
        if len(names) != covariates.shape[1]:
            raise ValidationError("covariate name count does not match covariate columns")

        object.__setattr__(self, "trial_id", _frozen(trial))
        object.__setattr__(self, "treatment", _frozen(treatment))
        object.__setattr__(self, "outcome", _frozen(outcome))
        object.__setattr__(self, "covariates", _frozen(covariates))
        object.__setattr__(self, "covariate_names", names)
        object.__setattr__(self, "treatment_levels", levels)
        object.__setattr__(self, "trial_ids", tuple(int(v) for v in np.unique(trial[participation])))

    @property
    def n(self) -> int:
        return int(self.trial_id.shape[0])

    @property
    def p(self) -> int:
        return int(self.covariates.shape[1])

    @property
    def participation(self) -> np.ndarray:
        """Indicator R, true exactly on rows with trial id >= 1."""
        return self.trial_id >= 1

    @property
    def target_mask(self) -> np.ndarray:
        return self.trial_id == TARGET_TRIAL_ID

    @property
    def n_target(self) -> int:
        return int(self.target_mask.sum())

    @property
    def n_trials(self) -> int:
        return len(self.trial_ids)

    @property
    def trial_sizes(self) -> Dict[int, int]:
        ids, counts = np.unique(self.trial_id[self.participation], return_counts=True)
        return {int(s): int(c) for s, c in zip(ids, counts)}

    def arm_mask(self, level: int) -> np.ndarray:
        """Rows with R = 1 and A = level."""
        return self.participation & (self.treatment == level)

    def target_arm_mask(self, level: int) -> np.ndarray:
        """Target rows that happen to carry treatment ``level`` and an outcome."""
        return self.target_mask & (self.treatment == level) & ~np.isnan(self.outcome)

    @property
    def rows(self) -> Iterator[Observation]:
        for i in range(self.n):
            participating = bool(self.trial_id[i] >= 1)
            treatment = int(self.treatment[i])
            outcome = float(self.outcome[i])
            yield Observation(
                trial_id=int(self.trial_id[i]),
                treatment=None if treatment == MISSING_TREATMENT else treatment,
                outcome=None if np.isnan(outcome) and not participating else outcome,
                covariates=tuple(float(v) for v in self.covariates[i]),
            )

    def take(self, indices: Sequence[int] | np.ndarray) -> "ObservationTable":
        """Return a new validated table built from the given row indices (repeats allowed)."""
        idx = np.asarray(indices, dtype=np.int64)
        return ObservationTable(
            trial_id=self.trial_id[idx],
            treatment=self.treatment[idx],
            outcome=self.outcome[idx],
            covariates=self.covariates[idx],
            covariate_names=self.covariate_names,
            declared_levels=self.declared_levels,
        )

    def same_data(self, other: "ObservationTable") -> bool:
        """Exact equality of every stored value (NaN matches NaN)."""
        return (
            np.array_equal(self.trial_id, other.trial_id)
            and np.array_equal(self.treatment, other.treatment)
            and np.array_equal(self.outcome, other.outcome, equal_nan=True)
            and np.array_equal(self.covariates, other.covariates)
        )

    def to_frame(self) -> pd.DataFrame:
        """Canonical frame: trial, treatment, outcome, x1..xp."""
        treatment = pd.array(
            np.where(self.treatment == MISSING_TREATMENT, 0, self.treatment), dtype="Int64"
        )
        treatment[self.treatment == MISSING_TREATMENT] = pd.NA
        frame = pd.DataFrame(
            {
                CANONICAL_TRIAL_COLUMN: self.trial_id,
                CANONICAL_TREATMENT_COLUMN: treatment,
                CANONICAL_OUTCOME_COLUMN: self.outcome,
            }
        )
        for j in range(self.p):
            frame[f"x{j + 1}"] = self.covariates[:, j]
        return frame


def observation_table_from_rows(
    rows: Sequence[Observation], declared_levels: Optional[Tuple[int, ...]] = None
) -> ObservationTable:
    """Build a table from ``Observation`` records."""
    if not rows:
        raise ValidationError("table has no rows")
    widths = {len(row.covariates) for row in rows}
    if len(widths) != 1:
        raise ValidationError("rows disagree on covariate length")
    return ObservationTable(
        trial_id=np.array([row.trial_id for row in rows], dtype=np.int64),
        treatment=np.array(
            [MISSING_TREATMENT if row.treatment is None else row.treatment for row in rows], dtype=np.int64
        ),
        outcome=np.array([np.nan if row.outcome is None else row.outcome for row in rows], dtype=float),
        covariates=np.array([row.covariates for row in rows], dtype=float).reshape(len(rows), -1),
        declared_levels=declared_levels,
    )


def _numeric_column(frame: pd.DataFrame, column: str) -> np.ndarray:
    series = frame[column]
    if series.dtype == object:
        converted = pd.to_numeric(series.replace("", np.nan), errors="coerce")
        bad = converted.isna() & series.notna() & (series != "")
        if bad.any():
            raise SchemaError(
                f"column '{column}' holds non-numeric value {series[bad].iloc[0]!r}", row=int(np.argmax(bad.to_numpy()))
            )
        series = converted
    return series.to_numpy(dtype=float)


def load_csv(path: Path | str, schema: CsvSchema = CsvSchema()) -> ObservationTable:
    """
    Read and validate a pooled data file of trial and target rows.

    Args:
        path: UTF-8 CSV with one row per participant or target-sample member
        schema: Column mapping; covariates default to every unmapped column

    Returns:
        A validated ObservationTable. Target rows (trial id 0) may leave
        treatment and outcome empty.

    Raises:
        SchemaError: the file cannot be decoded or parsed, or a column is missing
        ValidationError: a row breaks a table invariant; the error names the row
    """
    path = Path(path)
    LOGGER.info(f"Loading observations from {path}")
    try:
        frame = pd.read_csv(path, encoding="utf-8", float_precision="round_trip")
    except UnicodeDecodeError as error:
        raise SchemaError(f"{path.name} is not valid UTF-8 (byte offset {error.start})") from error
    except pd.errors.EmptyDataError as error:
        raise SchemaError(f"{path.name} is empty") from error
    except pd.errors.ParserError as error:
        raise SchemaError(f"{path.name} could not be parsed as CSV: {error}") from error

    mapped = [schema.trial, schema.treatment, schema.outcome]
    missing = [column for column in mapped if column not in frame.columns]
    if schema.covariates is not None:
        missing.extend(column for column in schema.covariates if column not in frame.columns)
    if missing:
        raise SchemaError(f"missing columns: {', '.join(missing)}")

    covariate_columns = (
        list(schema.covariates)
        if schema.covariates is not None
        else [column for column in frame.columns if column not in mapped]
    )

    trial = _numeric_column(frame, schema.trial)
    bad_trial = ~np.isfinite(trial) | (np.mod(np.nan_to_num(trial, nan=0.5), 1) != 0) | (trial < 0)
    if bad_trial.any():
        raise SchemaError(
            f"column '{schema.trial}' must hold non-negative integers", row=int(np.argmax(bad_trial))
        )

    covariates = np.column_stack(
        [_numeric_column(frame, column) for column in covariate_columns]
    ) if covariate_columns else np.empty((len(frame), 0))

    table = ObservationTable(
        trial_id=trial.astype(np.int64),
        treatment=_numeric_column(frame, schema.treatment),
        outcome=_numeric_column(frame, schema.outcome),
        covariates=covariates,
        covariate_names=tuple(covariate_columns),
        declared_levels=schema.levels,
    )
    LOGGER.info(
        "Loaded %d rows: %d target rows, %d trials, treatment levels %s",
        table.n,
        table.n_target,
        table.n_trials,
        list(table.treatment_levels),
    )
    return table


def write_csv(table: ObservationTable, path: Path | str) -> None:
    """Write the canonical CSV (header trial,treatment,outcome,x1..xp) in input row order."""
    path = Path(path)
    table.to_frame().to_csv(path, index=False, lineterminator="\n", encoding="utf-8")
    LOGGER.info("Wrote %d rows to %s", table.n, path)


__all__ = [
    "CsvSchema",
    "MISSING_TREATMENT",
    "Observation",
    "ObservationTable",
    "TARGET_TRIAL_ID",
    "load_csv",
    "observation_table_from_rows",
    "write_csv",
]
