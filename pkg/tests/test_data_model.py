from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from conftest import make_table

from trial_transport.data_model import (
    CsvSchema,
    Observation,
    ObservationTable,
    load_csv,
    observation_table_from_rows,
    write_csv,
)
from trial_transport.errors import SchemaError, ValidationError


def test_load_four_row_file(four_row_csv: Path) -> None:
    table = load_csv(four_row_csv)
    assert table.n == 4
    assert table.n_target == 1
    assert table.n_trials == 2
    assert table.treatment_levels == (0, 1)
    assert table.covariate_names == ("x",)
    assert table.participation.tolist() == [True, True, True, False]


def test_missing_outcome_names_the_row(tmp_path: Path) -> None:
    path = tmp_path / "bad.csv"
    path.write_text("trial,treatment,outcome,x\n0,,,0.1\n1,1,,0.5\n1,0,1.0,0.2\n", encoding="utf-8")
    with pytest.raises(ValidationError) as excinfo:
        load_csv(path)
    assert excinfo.value.row == 1
    assert "row 1" in str(excinfo.value)


def test_missing_column_is_schema_error(four_row_csv: Path) -> None:
    with pytest.raises(SchemaError, match="arm"):
        load_csv(four_row_csv, CsvSchema(treatment="arm"))


def test_negative_trial_id_is_schema_error(tmp_path: Path) -> None:
    path = tmp_path / "neg.csv"
    path.write_text("trial,treatment,outcome,x\n-1,1,2.0,0.5\n0,,,0.0\n", encoding="utf-8")
    with pytest.raises(SchemaError):
        load_csv(path)


def test_non_finite_covariate_rejected(tmp_path: Path) -> None:
    path = tmp_path / "inf.csv"
    path.write_text("trial,treatment,outcome,x\n1,1,2.0,inf\n1,0,1.0,0.0\n0,,,0.0\n", encoding="utf-8")
    with pytest.raises(ValidationError) as excinfo:
        load_csv(path)
    assert excinfo.value.row == 0


def test_declared_level_absent_from_trials_rejected(four_row_csv: Path) -> None:
    with pytest.raises(ValidationError, match="positivity"):
        load_csv(four_row_csv, CsvSchema(levels=(0, 1, 2)))


def test_target_rows_may_carry_values() -> None:
    table = ObservationTable(
        trial_id=np.array([0, 1, 1]),
        treatment=np.array([1, 0, 1]),
        outcome=np.array([5.0, 1.0, 2.0]),
        covariates=np.zeros((3, 1)),
    )
    assert table.treatment_levels == (0, 1)
    assert table.n_target == 1


def test_table_requires_target_and_trial_rows() -> None:
    with pytest.raises(ValidationError, match="target"):
        ObservationTable(
            trial_id=np.array([1, 1]), treatment=np.array([0, 1]), outcome=np.array([1.0, 2.0]), covariates=np.zeros((2, 1))
        )
    with pytest.raises(ValidationError, match="trial rows"):
        ObservationTable(
            trial_id=np.array([0, 0]),
            treatment=np.array([np.nan, np.nan]),
            outcome=np.array([np.nan, np.nan]),
            covariates=np.zeros((2, 1)),
        )


def test_table_is_read_only(small_table: ObservationTable) -> None:
    with pytest.raises(ValueError):
        small_table.outcome[0] = 1.0


def test_write_csv_leaves_target_cells_empty(four_row_csv: Path, tmp_path: Path) -> None:
    out = tmp_path / "out.csv"
    write_csv(load_csv(four_row_csv), out)
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "trial,treatment,outcome,x1"
    assert len(lines) == 5
    assert lines[4] == "0,,,0.0"


def test_round_trip_random_tables(tmp_path: Path) -> None:
    rng = np.random.default_rng(7)
    for case in range(20):
        table = make_table(rng, n_trial=int(rng.integers(6, 40)), n_target=int(rng.integers(1, 20)), p=int(rng.integers(1, 4)))
        first = tmp_path / f"first_{case}.csv"
        second = tmp_path / f"second_{case}.csv"
        write_csv(table, first)
        reloaded = load_csv(first)
        assert reloaded.same_data(table)
        write_csv(reloaded, second)
        assert first.read_bytes() == second.read_bytes()


def test_rows_round_trip_through_observations(small_table: ObservationTable) -> None:
    rebuilt = observation_table_from_rows(list(small_table.rows))
    assert rebuilt.same_data(small_table)


def test_observation_requires_treatment_in_trials() -> None:
    with pytest.raises(ValidationError):
        Observation(trial_id=2, treatment=None, outcome=1.0, covariates=(0.0,))
    assert Observation(trial_id=0, treatment=None, outcome=None, covariates=(0.0,)).participation == 0


def test_take_resamples_rows(small_table: ObservationTable) -> None:
    indices = np.array([0, 0, small_table.n - 1])
    taken = small_table.take(indices)
    assert taken.n == 3
    assert np.array_equal(taken.covariates, small_table.covariates[indices])
