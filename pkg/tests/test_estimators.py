from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest
from conftest import make_table

from trial_transport.data_model import ObservationTable
from trial_transport.errors import (
    EstimatorMismatchError,
    MissingModelError,
    NotApplicableError,
    PositivityError,
    ValidationError,
)
from trial_transport.estimators import (
    ArmEstimate,
    EstimateReport,
    EstimatorKind,
    NuisanceBundle,
    benchmark_estimates,
    contrast,
    estimate,
    if_variance,
    if_variance_contrast,
    influence_values,
    psi_aug,
    psi_benchmark,
    psi_g,
    psi_w,
    rho_w,
)
from trial_transport.nuisance import ConstantModel, KnownTreatmentProbabilities, LinearModel, LogisticModel
from trial_transport.pipeline import fit_nuisance_bundle


def _half(p: int) -> KnownTreatmentProbabilities:
    return KnownTreatmentProbabilities({0: 0.5, 1: 0.5}, p)


HALF = _half(1)


def _bundle(outcome_models, participation=ConstantModel(0.5, 1), treatment=HALF, per_trial=None) -> NuisanceBundle:
    return NuisanceBundle(
        outcome_models=outcome_models,
        participation_model=participation,
        treatment_model=treatment,
        per_trial_treatment_models=per_trial,
    )


def _shifted(table: ObservationTable, shift: float) -> ObservationTable:
    return ObservationTable(
        trial_id=table.trial_id,
        treatment=table.treatment,
        outcome=table.outcome + shift,
        covariates=table.covariates,
    )


def test_three_row_hand_example() -> None:
    table = ObservationTable(
        trial_id=np.array([1, 0, 0]),
        treatment=np.array([1, -1, -1]),
        outcome=np.array([2.0, np.nan, np.nan]),
        covariates=np.array([[1.0], [1.5], [0.5]]),
    )
    bundle = _bundle({1: LinearModel(np.array([0.0, 1.0]), (0,), 1)})
    assert psi_aug(table, bundle, 1) == pytest.approx(2.0, abs=1e-12)


def test_psi_g_averages_saturated_model_over_target() -> None:
    table = ObservationTable(
        trial_id=np.array([1, 1, 0, 0, 0]),
        treatment=np.array([1, 0, -1, -1, -1]),
        outcome=np.array([1.0, 0.0, np.nan, np.nan, np.nan]),
        covariates=np.array([[0.0], [1.0], [0.0], [0.0], [1.0]]),
    )
    bundle = _bundle({1: LinearModel(np.array([1.0, 2.0]), (0,), 1)})
    assert psi_g(table, bundle, 1) == pytest.approx(5 / 3, abs=1e-12)
    assert psi_g(table, _bundle({1: ConstantModel(3.25, 1)}), 1) == 3.25


def test_unnormalized_weighting_doubles_constant_outcome() -> None:
    c = 1.75
    table = ObservationTable(
        trial_id=np.array([1, 1, 1, 1, 0, 0]),
        treatment=np.array([1, 1, 0, 0, -1, -1]),
        outcome=np.array([c, c, c, c, np.nan, np.nan]),
        covariates=np.zeros((6, 1)),
    )
    assert psi_w(table, _bundle({}), 1) == pytest.approx(2 * c, abs=1e-12)


def test_weighting_without_arm_rows_is_zero(small_table: ObservationTable) -> None:
    p = small_table.p
    bundle = _bundle(
        {}, participation=ConstantModel(0.5, p), treatment=KnownTreatmentProbabilities({0: 0.4, 1: 0.4, 2: 0.2}, p)
    )
    assert psi_w(small_table, bundle, 2) == 0.0


def test_augmented_collapses_to_weighting_and_gformula() -> None:
    rng = np.random.default_rng(11)
    for _ in range(100):
        table = make_table(rng, n_trial=int(rng.integers(40, 120)), n_target=int(rng.integers(20, 80)))
        bundle = fit_nuisance_bundle(table)
        for a in table.treatment_levels:
            zero_outcome = replace(bundle, outcome_models={a: ConstantModel(0.0, table.p)})
            assert abs(psi_aug(table, zero_outcome, a) - psi_w(table, zero_outcome, a)) <= 1e-12
            full_participation = replace(bundle, participation_model=ConstantModel(1.0, table.p))
            assert abs(psi_aug(table, full_participation, a) - psi_g(table, full_participation, a)) <= 1e-12


def test_gformula_matches_stratified_oracle() -> None:
    rng = np.random.default_rng(12)
    n_trial, n_target = 300, 150
    trial_id = np.r_[np.zeros(n_target, dtype=int), np.ones(n_trial, dtype=int)]
    x = rng.integers(0, 2, size=n_trial + n_target).astype(float)
    treatment = np.r_[np.full(n_target, -1), np.arange(n_trial) % 2]
    outcome = np.r_[np.full(n_target, np.nan), 1.0 + 2.0 * x[n_target:] + treatment[n_target:] + rng.normal(size=n_trial)]
    table = ObservationTable(trial_id=trial_id, treatment=treatment, outcome=outcome, covariates=x.reshape(-1, 1))
    bundle = fit_nuisance_bundle(table)
    target_x = x[:n_target]
    for a in (0, 1):
        arm = table.arm_mask(a)
        cell_means = {v: table.outcome[arm & (x == v)].mean() for v in (0.0, 1.0)}
        oracle = np.mean([cell_means[v] for v in target_x])
        assert psi_g(table, bundle, a) == pytest.approx(oracle, abs=1e-10)


def test_gformula_and_augmented_shift_with_outcomes(small_table: ObservationTable) -> None:
    shift = 3.5
    bundle = fit_nuisance_bundle(small_table)
    shifted = _shifted(small_table, shift)
    shifted_bundle = fit_nuisance_bundle(shifted)
    for a in (0, 1):
        assert psi_g(shifted, shifted_bundle, a) == pytest.approx(psi_g(small_table, bundle, a) + shift, abs=1e-10)
        assert psi_aug(shifted, shifted_bundle, a) == pytest.approx(psi_aug(small_table, bundle, a) + shift, abs=1e-10)


def test_contrast_examples() -> None:
    first = ArmEstimate(level=1, value=2.0, kind=EstimatorKind.AUGMENTED)
    second = ArmEstimate(level=0, value=5.0, kind=EstimatorKind.AUGMENTED)
    assert contrast(first, second) == -3.0
    assert contrast(first, first) == 0.0


def test_contrast_rejects_mixed_estimators() -> None:
    first = ArmEstimate(level=1, value=2.0, kind=EstimatorKind.AUGMENTED, digest="abc")
    with pytest.raises(EstimatorMismatchError):
        contrast(first, ArmEstimate(level=0, value=5.0, kind=EstimatorKind.WEIGHTING, digest="abc"))
    with pytest.raises(EstimatorMismatchError):
        contrast(first, ArmEstimate(level=0, value=5.0, kind=EstimatorKind.AUGMENTED, digest="xyz"))


def test_trial_weighting_reduces_to_weighting_difference(rng: np.random.Generator) -> None:
    table = make_table(rng, trials=1)
    known = KnownTreatmentProbabilities({0: 0.4, 1: 0.6}, table.p)
    bundle = fit_nuisance_bundle(table)
    bundle = replace(bundle, treatment_model=known, per_trial_treatment_models={1: known})
    expected = psi_w(table, bundle, 1) - psi_w(table, bundle, 0)
    assert rho_w(table, bundle, 1, 0) == pytest.approx(expected, abs=1e-12)


def test_trial_weighting_of_zero_outcome(rng: np.random.Generator) -> None:
    table = make_table(rng)
    zero = ObservationTable(
        trial_id=table.trial_id,
        treatment=table.treatment,
        outcome=np.where(table.participation, 0.0, np.nan),
        covariates=table.covariates,
    )
    per_trial = {1: _half(table.p), 2: _half(table.p)}
    bundle = _bundle({}, participation=ConstantModel(0.5, table.p), treatment=_half(table.p), per_trial=per_trial)
    assert rho_w(zero, bundle, 1, 0) == 0.0


def test_trial_weighting_requires_per_trial_models(small_table: ObservationTable) -> None:
    bundle = fit_nuisance_bundle(small_table)
    with pytest.raises(MissingModelError):
        rho_w(small_table, bundle, 1, 0)
    with pytest.raises(MissingModelError):
        rho_w(small_table, replace(bundle, per_trial_treatment_models={1: _half(small_table.p)}), 1, 0)


def test_influence_values_have_mean_zero(small_table: ObservationTable) -> None:
    bundle = fit_nuisance_bundle(small_table)
    for a in (0, 1):
        values = influence_values(small_table, bundle, a)
        assert values.shape == (small_table.n,)
        assert abs(values.mean()) < 1e-10
        assert if_variance(small_table, bundle, a) > 0


def test_contrast_variance_uses_paired_influence_values(small_table: ObservationTable) -> None:
    bundle = fit_nuisance_bundle(small_table)
    assert if_variance_contrast(small_table, bundle, 1, 1) == 0.0
    difference = influence_values(small_table, bundle, 1) - influence_values(small_table, bundle, 0)
    expected = np.var(difference, ddof=1) / small_table.n
    assert if_variance_contrast(small_table, bundle, 1, 0) == pytest.approx(expected, rel=1e-12)
    report = estimate(small_table, bundle, EstimatorKind.AUGMENTED, (0, 1), [(1, 0)], with_variance=True)
    assert report.variances["delta(1,0)"] == pytest.approx(expected, rel=1e-12)


def test_variance_is_zero_for_perfect_outcome_model() -> None:
    table = ObservationTable(
        trial_id=np.array([1, 1, 2, 2, 0, 0, 0]),
        treatment=np.array([0, 1, 0, 1, -1, -1, -1]),
        outcome=np.array([4.0, 4.0, 4.0, 4.0, np.nan, np.nan, np.nan]),
        covariates=np.arange(7.0).reshape(-1, 1),
    )
    bundle = _bundle({0: ConstantModel(4.0, 1), 1: ConstantModel(4.0, 1)})
    assert if_variance(table, bundle, 1) == 0.0


def test_positivity_violation_names_row(small_table: ObservationTable) -> None:
    bundle = fit_nuisance_bundle(small_table)
    p = small_table.p
    first_arm_row = int(np.flatnonzero(small_table.arm_mask(1))[0])
    for intercept in (-40.0, 40.0):
        extreme = LogisticModel(np.r_[intercept, np.zeros(p)], tuple(range(p)), p, True, 0, 0.0)
        with pytest.raises(PositivityError) as excinfo:
            psi_w(small_table, replace(bundle, participation_model=extreme), 1)
        assert excinfo.value.row == first_arm_row


def test_missing_outcome_model(small_table: ObservationTable) -> None:
    bundle = fit_nuisance_bundle(small_table, levels=(0,))
    with pytest.raises(MissingModelError):
        psi_g(small_table, bundle, 1)


def test_report_contrasts_equal_arm_differences(small_table: ObservationTable) -> None:
    bundle = fit_nuisance_bundle(small_table)
    for kind in EstimatorKind:
        report = estimate(small_table, bundle, kind, (0, 1), [(1, 0)], with_variance=True)
        assert report.contrasts[(1, 0)] == report.estimates[1] - report.estimates[0]
        assert report.pi_hat == small_table.n_target / small_table.n
        assert report.nuisance_digest == bundle.digest
        assert bool(report.variances) == (kind is EstimatorKind.AUGMENTED)
    assert set(report.point_values()) == {"psi(0)", "psi(1)", "delta(1,0)"}


def test_report_rejects_inconsistent_values() -> None:
    common = dict(estimator=EstimatorKind.GFORMULA, pi_hat=0.5, n=4, n_target=2, nuisance_digest="")
    with pytest.raises(ValidationError):
        EstimateReport(estimates={0: 1.0, 1: 2.0}, contrasts={(1, 0): 0.5}, **common)
    with pytest.raises(ValidationError):
        EstimateReport(estimates={0: 1.0}, contrasts={}, intervals={"psi(0)": (1.5, 2.0)}, **common)


def test_benchmark_uses_target_rows_with_treatment_and_outcome() -> None:
    table = ObservationTable(
        trial_id=np.array([1, 1, 1, 1, 0, 0, 0, 0, 0]),
        treatment=np.array([0, 1, 0, 1, 0, 1, 1, 0, -1]),
        outcome=np.array([1.0, 2.0, 1.0, 2.0, 3.0, 5.0, 7.0, np.nan, np.nan]),
        covariates=np.zeros((9, 0)),
    )
    assert table.target_arm_mask(1).sum() == 2
    values = benchmark_estimates(table, (0, 1), [(1, 0)])
    assert values == {"psi(0)": 3.0, "psi(1)": 6.0, "delta(1,0)": 3.0}
    outcome_models = {0: ConstantModel(1.0, 0), 1: ConstantModel(2.0, 0)}
    bundle = _bundle(outcome_models, participation=ConstantModel(0.5, 0), treatment=_half(0))
    report = estimate(table, bundle, EstimatorKind.GFORMULA, (0, 1), [(1, 0)], with_benchmark=True)
    assert report.benchmark == values
    assert report.estimates == {0: 1.0, 1: 2.0}


def test_benchmark_without_observed_target_arm_is_not_applicable(small_table: ObservationTable) -> None:
    with pytest.raises(NotApplicableError):
        psi_benchmark(small_table, 1)
