from __future__ import annotations

import math

import numpy as np
import pytest

from trial_transport.errors import SolverError, ValidationError
from trial_transport.simulation import (
    DESK_REPLICATIONS,
    LN2,
    STANDARD_ESTIMATORS,
    ScenarioConfig,
    calibrate,
    correlation_matrix,
    draw_covariates,
    generate_cohort,
    standard_grid,
    resolve_estimators,
    run_grid,
    solve_intercept,
    true_psi,
)

FAST_CALIBRATION = 50_000


def _small_config(**overrides) -> ScenarioConfig:
    settings = dict(n=2000, n_trial_total=400, replications=4, calibration_size=FAST_CALIBRATION)
    settings.update(overrides)
    return ScenarioConfig(**settings)


def test_solve_intercept_closed_forms() -> None:
    sample = np.random.default_rng(1).normal(size=(1000, 3))
    assert solve_intercept(500, (0.0, 0.0, 0.0), sample) == pytest.approx(0.0, abs=1e-9)
    assert solve_intercept(250, (0.0, 0.0, 0.0), sample) == pytest.approx(math.log(1 / 3), abs=1e-9)


def test_solve_intercept_reproduces_expected_count() -> None:
    sample = draw_covariates(np.random.default_rng(2), 10000, 3, 0.5)
    beta0 = solve_intercept(1000, (LN2, LN2, LN2), sample)
    linear = beta0 + sample @ np.full(3, LN2)
    assert abs((1.0 / (1.0 + np.exp(-linear))).sum() - 1000) <= 0.5


def test_solve_intercept_rejects_impossible_targets() -> None:
    with pytest.raises(SolverError):
        solve_intercept(0, (1.0,), np.zeros((10, 1)))


def test_covariate_correlation() -> None:
    covariates = draw_covariates(np.random.default_rng(3), 100_000, 3, 0.5)
    assert np.abs(np.corrcoef(covariates, rowvar=False) - correlation_matrix(3, 0.5)).max() < 0.01
    assert np.abs(covariates.mean(axis=0)).max() < 0.02


def test_scenario_validation() -> None:
    with pytest.raises(ValidationError):
        ScenarioConfig(n=100, n_trial_total=100)
    with pytest.raises(ValidationError):
        ScenarioConfig(selection_slopes=(1.0, 1.0))
    with pytest.raises(ValidationError):
        ScenarioConfig(correlation=-0.6)
    with pytest.raises(ValidationError):
        ScenarioConfig(oracle_draw_size=1000)


def test_standard_grid_has_every_scenario() -> None:
    grid = standard_grid(replications=10)
    assert len(grid) == 24
    assert len({(c.n, c.n_trial_total, c.balanced, c.txam_varies) for c in grid}) == 24
    assert all(config.replications == 10 for config in grid)


def test_cohort_respects_design() -> None:
    config = ScenarioConfig()
    cohort = generate_cohort(config, 11)
    table = cohort.table
    assert cohort.observed_consistent()
    assert list(table.to_frame().columns) == ["trial", "treatment", "outcome", "x1", "x2", "x3"]
    assert table.n == config.n
    assert table.trial_ids == (1, 2, 3)

    share = config.n_trial_total / config.n
    realized = int(table.participation.sum())
    assert abs(realized - config.n_trial_total) <= 3 * math.sqrt(config.n * share * (1 - share))

    sizes = np.array(list(table.trial_sizes.values()), dtype=float)
    spread = 3 * math.sqrt(realized * (1 / 3) * (2 / 3))
    assert np.abs(sizes[:, None] - sizes[None, :]).max() <= 2 * spread

    treated = table.treatment[table.participation]
    assert abs(treated.mean() - 0.5) <= 3 * math.sqrt(0.25 / realized)


def test_cohort_is_reproducible_from_seed() -> None:
    config = _small_config()
    first = generate_cohort(config, 5)
    assert first.table.same_data(generate_cohort(config, 5).table)
    assert not first.table.same_data(generate_cohort(config, 6).table)


def test_calibration_hits_trial_shares() -> None:
    config = _small_config(balanced=False)
    calibration = calibrate(config)
    assert calibrate(config) is calibration
    assert np.isfinite([calibration.beta0, calibration.gamma0, calibration.zeta0]).all()
    # unbalanced shares 4:2:1 make trials 2 and 3 less likely than the reference
    assert calibration.gamma0 < 0.0 and calibration.zeta0 < 0.0


def test_truth_for_constant_outcome_model() -> None:
    config = _small_config(theta0=(2.5, 0.0, 0.0, 0.0))
    assert true_psi(config, 0).value == pytest.approx(2.5, abs=1e-10)


def test_truth_without_selection_is_the_intercept() -> None:
    config = _small_config(selection_slopes=(0.0, 0.0, 0.0))
    assert true_psi(config, 1).value == pytest.approx(config.theta1[0], abs=1e-10)


def test_truth_standard_error_is_small() -> None:
    truth = true_psi(_small_config(), 0)
    assert 0.0 < truth.standard_error < 0.002


def test_resolve_estimators() -> None:
    assert resolve_estimators(["standard"]) == STANDARD_ESTIMATORS
    names = [entry.name for entry in resolve_estimators(["g", "double_robustness", "g"])]
    assert names[0] == "g" and names.count("g") == 1 and "aug_null_outcome" in names
    with pytest.raises(ValidationError, match="unknown estimator"):
        resolve_estimators(["nope"])


def test_run_grid_is_deterministic_across_workers() -> None:
    configs = [_small_config(), _small_config(txam_varies=True)]
    serial = run_grid(configs, master_seed=9)
    parallel = run_grid(configs, master_seed=9, n_jobs=2)
    assert serial.to_frame().equals(parallel.to_frame())
    bias = serial.bias_table()
    assert list(bias.columns) == ["arm", "n", "n_trial_total", "balanced", "txam_varies", "aug", "g", "w"]
    assert len(bias) == 4
    row = serial.lookup("aug", 1, txam_varies=True)
    assert row.replications == 4 and row.failures == 0
    assert math.isfinite(row.mean_if_variance)
    assert math.isnan(serial.lookup("g", 0, txam_varies=False).mean_if_variance)
    assert len(serial.calibration_table()) == 2


def test_run_grid_requires_scenarios() -> None:
    with pytest.raises(ValidationError):
        run_grid([])


@pytest.mark.slow
def test_desk_bias_and_variance_match_reference_pattern() -> None:
    config = ScenarioConfig(n=10000, n_trial_total=1000, balanced=True, txam_varies=False)
    summary = run_grid([config], replications=1000, master_seed=1, n_jobs=-1)
    for a in (0, 1):
        g = summary.lookup("g", a)
        aug = summary.lookup("aug", a)
        w = summary.lookup("w", a)
        assert g.variance < aug.variance < w.variance
        for row in (g, aug):
            monte_carlo_se = math.sqrt(row.variance / row.replications)
            assert abs(row.bias) <= 0.001 + 3 * monte_carlo_se
    assert summary.lookup("g", 0).variance == pytest.approx(0.0075, rel=0.25)
    assert summary.lookup("aug", 0).variance == pytest.approx(0.0242, rel=0.25)
    assert summary.lookup("w", 0).variance == pytest.approx(0.3349, rel=0.35)


@pytest.mark.slow
def test_influence_variance_tracks_monte_carlo_variance() -> None:
    config = ScenarioConfig(n=10000, n_trial_total=5000, balanced=True, txam_varies=False)
    summary = run_grid([config], estimators=resolve_estimators(["aug"]), replications=1000, master_seed=2, n_jobs=-1)
    row = summary.lookup("aug", 0)
    assert row.mean_if_variance == pytest.approx(row.variance, rel=0.2)
    assert row.variance == pytest.approx(0.0038, rel=0.25)


@pytest.mark.slow
def test_augmented_estimator_survives_one_misspecified_model() -> None:
    config = ScenarioConfig(n=100_000, n_trial_total=5000, balanced=False, txam_varies=True)
    entries = resolve_estimators(["aug_null_outcome", "aug_null_participation"])
    summary = run_grid([config], estimators=entries, replications=500, master_seed=3, n_jobs=-1)
    for entry in entries:
        for a in (0, 1):
            row = summary.lookup(entry.name, a)
            assert abs(row.bias) <= 0.02


@pytest.mark.slow
def test_crippled_single_model_estimators_are_biased() -> None:
    entries = resolve_estimators(["g_null_outcome", "w_null_participation"])
    configs = [
        ScenarioConfig(n=100_000, n_trial_total=5000, balanced=balanced, txam_varies=True) for balanced in (True, False)
    ]
    summary = run_grid(configs, estimators=entries, replications=500, master_seed=4, n_jobs=-1)
    for entry in entries:
        largest = max(abs(row.bias) for row in summary.rows if row.estimator == entry.name)
        assert largest >= 0.1, entry.name


@pytest.mark.slow
def test_weighting_is_biased_downward_with_varying_assignment() -> None:
    config = ScenarioConfig(n=10000, n_trial_total=1000, balanced=True, txam_varies=True)
    summary = run_grid([config], replications=1000, master_seed=5, n_jobs=-1)
    assert summary.lookup("w", 0).bias <= -0.05
    assert abs(summary.lookup("aug", 0).bias) <= 0.01


@pytest.mark.slow
def test_variance_ordering_holds_in_every_small_scenario() -> None:
    configs = [config for config in standard_grid() if config.n == 10000]
    summary = run_grid(configs, replications=DESK_REPLICATIONS, master_seed=6, n_jobs=-1)
    for config in configs:
        scenario = dict(n_trial_total=config.n_trial_total, balanced=config.balanced, txam_varies=config.txam_varies)
        for a in (0, 1):
            g, aug, w = (summary.lookup(name, a, **scenario).variance for name in ("g", "aug", "w"))
            assert aug >= 1.5 * g, (config.label(), a)
            assert w >= 1.5 * aug, (config.label(), a)
