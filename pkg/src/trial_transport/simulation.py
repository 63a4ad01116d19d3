"""Synthetic cohorts of three trials plus a target census, and bias/variance grids.

A cohort is generated in six steps: correlated normal covariates, logistic
selection into any trial, the census of non-selected rows as the target sample,
multinomial allocation of participants to trials, Bernoulli treatment
assignment, and linear potential outcomes with standard normal errors.
Intercepts of the selection and allocation models are solved per scenario on a
large fixed calibration draw.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from itertools import product
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy import linalg
from scipy.optimize import bisect
from scipy.special import expit, softmax

from .data_model import ObservationTable
from .errors import ModelFitError, PositivityError, SimulationError, SolverError, ValidationError
from .estimators import ESTIMATORS, EstimatorKind, NuisanceBundle, if_variance
from .pipeline import NuisanceSpec, TreatmentSource, fit_nuisance_bundle
from .seeding import CALIBRATION_STREAM, ORACLE_STREAM, SIMULATION_STREAM, replicate_rng

LOGGER = logging.getLogger(__name__)

LN2 = math.log(2.0)
LN15 = math.log(1.5)
LN075 = math.log(0.75)

N_TRIALS = 3
ARMS = (0, 1)
DEFAULT_REPLICATIONS = 10000
DESK_REPLICATIONS = 1000
DEFAULT_CALIBRATION_SIZE = 500_000
DEFAULT_CALIBRATION_SEED = 20190607
MIN_ORACLE_DRAW_SIZE = 1_000_000
ALLOCATION_RTOL = 1e-3
INTERCEPT_ATOL = 0.5
MAX_ALLOCATION_SWEEPS = 200
MAX_FAILURE_RATE = 0.01
CHUNK_SIZE = 25

ReplicationFailure = (ValidationError, ModelFitError, PositivityError)


@dataclass(frozen=True)
class ScenarioConfig:
    """Every parameter of one simulated scenario; defaults reproduce the standard design."""

    n: int = 10000
    n_trial_total: int = 1000
    balanced: bool = True
    txam_varies: bool = False
    covariate_dim: int = 3
    correlation: float = 0.5
    selection_slopes: Tuple[float, ...] = (LN2, LN2, LN2)
    gamma_slopes: Tuple[float, ...] = (LN15, LN15, LN15)
    zeta_slopes: Tuple[float, ...] = (LN075, LN075, LN075)
    theta0: Tuple[float, ...] = (1.5, 1.0, 1.0, 1.0)
    theta1: Tuple[float, ...] = (0.5, -1.0, -1.0, -1.0)
    replications: int = DEFAULT_REPLICATIONS
    master_seed: int = 0
    calibration_size: int = DEFAULT_CALIBRATION_SIZE
    calibration_seed: int = DEFAULT_CALIBRATION_SEED
    oracle_draw_size: int = MIN_ORACLE_DRAW_SIZE

    def __post_init__(self) -> None:
        for name in ("selection_slopes", "gamma_slopes", "zeta_slopes", "theta0", "theta1"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        if not 0 < self.n_trial_total < self.n:
            raise ValidationError(f"n_trial_total must lie in (0, n); got {self.n_trial_total} with n={self.n}")
        if self.covariate_dim < 1:
            raise ValidationError("covariate_dim must be positive")
        for name in ("selection_slopes", "gamma_slopes", "zeta_slopes"):
            if len(getattr(self, name)) != self.covariate_dim:
                raise ValidationError(f"{name} needs {self.covariate_dim} entries")
        for name in ("theta0", "theta1"):
            if len(getattr(self, name)) != self.covariate_dim + 1:
                raise ValidationError(f"{name} needs an intercept and {self.covariate_dim} slopes")
        if self.covariate_dim > 1 and not -1.0 / (self.covariate_dim - 1) < self.correlation < 1.0:
            raise ValidationError(f"correlation {self.correlation} does not give a positive definite matrix")
        if self.replications < 1:
            raise ValidationError("replications must be positive")
        if self.master_seed < 0 or self.calibration_seed < 0:
            raise ValidationError("seeds must be non-negative")
        if self.calibration_size <= self.n_trial_total:
            raise ValidationError("calibration_size must exceed n_trial_total")
        if self.oracle_draw_size < MIN_ORACLE_DRAW_SIZE:
            raise ValidationError(f"oracle_draw_size must be at least {MIN_ORACLE_DRAW_SIZE}")

    @property
    def trial_shares(self) -> Tuple[float, ...]:
        if self.balanced:
            return (1 / 3, 1 / 3, 1 / 3)
        return (4 / 7, 2 / 7, 1 / 7)

    @property
    def assignment_probabilities(self) -> Dict[int, float]:
        """Pr[A = 1 | S = s] per trial."""
        if self.txam_varies:
            return {1: 1 / 2, 2: 1 / 3, 3: 2 / 3}
        return {1: 1 / 2, 2: 1 / 2, 3: 1 / 2}

    def theta(self, a: int) -> np.ndarray:
        if a not in ARMS:
            raise ValidationError(f"treatment level {a} is not simulated")
        return np.array(self.theta1 if a == 1 else self.theta0)

    def label(self) -> str:
        return (
            f"n={self.n} trials={self.n_trial_total} balanced={'yes' if self.balanced else 'no'} "
            f"txam_varies={'yes' if self.txam_varies else 'no'}"
        )


def standard_grid(
    replications: int = DEFAULT_REPLICATIONS,
    master_seed: int = 0,
    n_values: Sequence[int] = (10000, 100000),
    trial_totals: Sequence[int] = (1000, 2000, 5000),
) -> List[ScenarioConfig]:
    """The 24 standard scenarios in table order."""
    return [
        ScenarioConfig(
            n=n,
            n_trial_total=total,
            balanced=balanced,
            txam_varies=varies,
            replications=replications,
            master_seed=master_seed,
        )
        for n, total, balanced, varies in product(n_values, trial_totals, (True, False), (False, True))
    ]


def correlation_matrix(dim: int, correlation: float) -> np.ndarray:
    sigma = np.full((dim, dim), float(correlation))
    np.fill_diagonal(sigma, 1.0)
    return sigma


def draw_covariates(rng: np.random.Generator, size: int, dim: int, correlation: float) -> np.ndarray:
    """Mean-zero normal rows with unit variances, via the lower Cholesky factor."""
    factor = linalg.cholesky(correlation_matrix(dim, correlation), lower=True)
    return rng.standard_normal((size, dim)) @ factor.T


def _bisect_increasing(
    func: Callable[[float], float], label: str, xtol: float = 1e-12, start: float = 0.0
) -> float:
    """Root of an increasing function, widening the bracket around ``start``."""
    half_width = 1.0
    for _ in range(60):
        lower, upper = start - half_width, start + half_width
        if func(lower) <= 0.0 <= func(upper):
            break
        half_width *= 2.0
    else:
        raise SolverError(f"could not bracket the {label} intercept")
    if func(lower) == 0.0:
        return lower
    if func(upper) == 0.0:
        return upper
    return float(bisect(func, lower, upper, xtol=xtol, maxiter=500))


def solve_intercept(target_count: float, linear_predictor_slopes: Sequence[float], covariate_sample: np.ndarray) -> float:
    """beta0 such that sum_i expit(beta0 + slopes . X_i) equals ``target_count`` within 0.5."""
    covariates = np.asarray(covariate_sample, dtype=float)
    if covariates.ndim == 1:
        covariates = covariates.reshape(-1, 1)
    if not 0 < target_count < covariates.shape[0]:
        raise SolverError(f"target count {target_count} is outside (0, {covariates.shape[0]})")
    linear = covariates @ np.asarray(linear_predictor_slopes, dtype=float)

    def excess(beta0: float) -> float:
        return float(np.sum(expit(beta0 + linear)) - target_count)

    beta0 = _bisect_increasing(excess, "selection")
    if abs(excess(beta0)) > INTERCEPT_ATOL:
        raise SolverError(f"selection intercept misses the target count by {excess(beta0):.3g}")
    return beta0


def allocation_probabilities(
    covariates: np.ndarray,
    gamma: Tuple[float, Sequence[float]],
    zeta: Tuple[float, Sequence[float]],
) -> np.ndarray:
    """Pr[S = 1, 2, 3 | X, R = 1]; trial 1 is the reference category."""
    eta_gamma = gamma[0] + covariates @ np.asarray(gamma[1])
    eta_zeta = zeta[0] + covariates @ np.asarray(zeta[1])
    return softmax(np.column_stack([np.zeros(covariates.shape[0]), eta_gamma, eta_zeta]), axis=1)


def solve_allocation_intercepts(
    target_counts: Sequence[float],
    gamma_slopes: Sequence[float],
    zeta_slopes: Sequence[float],
    covariate_sample: np.ndarray,
    weights: np.ndarray,
) -> Tuple[float, float]:
    """(gamma0, zeta0) whose expected trial counts sum_i w_i Pr[S = s | X_i] hit the targets.

    Solved coordinate-wise; each count is monotone in its own intercept.
    """
    targets = np.asarray(target_counts, dtype=float)
    linear_gamma = covariate_sample @ np.asarray(gamma_slopes, dtype=float)
    linear_zeta = covariate_sample @ np.asarray(zeta_slopes, dtype=float)

    def counts(gamma0: float, zeta0: float) -> np.ndarray:
        eta = np.column_stack([np.zeros(linear_gamma.shape[0]), gamma0 + linear_gamma, zeta0 + linear_zeta])
        return weights @ softmax(eta, axis=1)

    gamma0 = zeta0 = 0.0
    for sweep in range(MAX_ALLOCATION_SWEEPS):
        gamma0 = _bisect_increasing(lambda g: counts(g, zeta0)[1] - targets[1], "allocation gamma", 1e-8, gamma0)
        zeta0 = _bisect_increasing(lambda z: counts(gamma0, z)[2] - targets[2], "allocation zeta", 1e-8, zeta0)
        relative = np.abs(counts(gamma0, zeta0) - targets) / targets
        if (relative <= ALLOCATION_RTOL).all():
            LOGGER.debug("Allocation intercepts converged after %d sweeps", sweep + 1)
            return gamma0, zeta0
    raise SolverError("allocation intercepts did not reach the requested trial shares")


@dataclass(frozen=True)
class Calibration:
    beta0: float
    gamma0: float
    zeta0: float


@lru_cache(maxsize=64)
def _calibrate(
    n: int,
    n_trial_total: int,
    shares: Tuple[float, ...],
    dim: int,
    correlation: float,
    selection_slopes: Tuple[float, ...],
    gamma_slopes: Tuple[float, ...],
    zeta_slopes: Tuple[float, ...],
    size: int,
    seed: int,
) -> Calibration:
    rng = replicate_rng(seed, CALIBRATION_STREAM)
    sample = draw_covariates(rng, size, dim, correlation)
    participation_target = n_trial_total / n * size
    beta0 = solve_intercept(participation_target, selection_slopes, sample)
    weights = expit(beta0 + sample @ np.asarray(selection_slopes))
    gamma0, zeta0 = solve_allocation_intercepts(
        [share * participation_target for share in shares], gamma_slopes, zeta_slopes, sample, weights
    )
    LOGGER.info(
        "Calibrated n=%d trials=%d shares=%s: beta0=%.6f gamma0=%.6f zeta0=%.6f",
        n,
        n_trial_total,
        [round(share, 4) for share in shares],
        beta0,
        gamma0,
        zeta0,
    )
    return Calibration(beta0=beta0, gamma0=gamma0, zeta0=zeta0)


def calibrate(config: ScenarioConfig) -> Calibration:
    """Selection and allocation intercepts for a scenario (cached per design)."""
    return _calibrate(
        config.n,
        config.n_trial_total,
        config.trial_shares,
        config.covariate_dim,
        config.correlation,
        config.selection_slopes,
        config.gamma_slopes,
        config.zeta_slopes,
        config.calibration_size,
        config.calibration_seed,
    )


@dataclass(frozen=True)
class Cohort:
    """Estimator-facing table plus the hidden potential outcomes (columns Y0, Y1)."""

    table: ObservationTable
    potential_outcomes: np.ndarray = field(repr=False)

    def observed_consistent(self) -> bool:
        rows = self.table.participation
        treated = self.table.treatment[rows] == 1
        expected = np.where(treated, self.potential_outcomes[rows, 1], self.potential_outcomes[rows, 0])
        return bool(np.array_equal(expected, self.table.outcome[rows]))


def generate_cohort(
    config: ScenarioConfig,
    seed: Union[int, np.random.Generator],
    calibration: Optional[Calibration] = None,
) -> Cohort:
    """
    Draw one synthetic cohort: the trial participants plus the census of everyone else.

    Args:
        config: Scenario parameters (sizes, trial shares, assignment, outcome models)
        seed: Integer master seed, or a generator already keyed to one replication
        calibration: Precomputed intercepts; solved (and cached) from ``config`` when omitted

    Returns:
        Cohort whose table has ``config.n`` rows and whose hidden potential
        outcomes agree with the observed outcome on every trial row.
    """
    rng = seed if isinstance(seed, np.random.Generator) else replicate_rng(int(seed), SIMULATION_STREAM)
    calibration = calibration or calibrate(config)
    n = config.n

    covariates = draw_covariates(rng, n, config.covariate_dim, config.correlation)
    selection = expit(calibration.beta0 + covariates @ np.asarray(config.selection_slopes))
    participating = rng.random(n) < selection

    selected = covariates[participating]
    allocation = allocation_probabilities(
        selected,
        (calibration.gamma0, config.gamma_slopes),
        (calibration.zeta0, config.zeta_slopes),
    )
    cumulative = np.cumsum(allocation, axis=1)
    draws = rng.random(selected.shape[0])
    trial_of_selected = 1 + (draws[:, None] >= cumulative[:, :-1]).sum(axis=1)

    assignment = np.array([config.assignment_probabilities[s] for s in range(1, N_TRIALS + 1)])
    treated = rng.random(selected.shape[0]) < assignment[trial_of_selected - 1]

    design = np.column_stack([np.ones(n), covariates])
    potential = np.column_stack(
        [
            design @ config.theta(0) + rng.standard_normal(n),
            design @ config.theta(1) + rng.standard_normal(n),
        ]
    )

    trial_id = np.zeros(n, dtype=np.int64)
    trial_id[participating] = trial_of_selected
    treatment = np.full(n, -1, dtype=np.int64)
    treatment[participating] = treated.astype(np.int64)
    outcome = np.full(n, np.nan)
    outcome[participating] = np.where(treated, potential[participating, 1], potential[participating, 0])

    table = ObservationTable(
        trial_id=trial_id,
        treatment=treatment,
        outcome=outcome,
        covariates=covariates,
        covariate_names=tuple(f"x{j + 1}" for j in range(config.covariate_dim)),
    )
    return Cohort(table=table, potential_outcomes=potential)


@dataclass(frozen=True)
class OracleValue:
    value: float
    standard_error: float


@lru_cache(maxsize=256)
def _oracle(
    theta: Tuple[float, ...],
    beta0: float,
    selection_slopes: Tuple[float, ...],
    dim: int,
    correlation: float,
    draw_size: int,
    seed: int,
) -> OracleValue:
    rng = replicate_rng(seed, ORACLE_STREAM)
    covariates = draw_covariates(rng, draw_size, dim, correlation)
    design = np.column_stack([np.ones(draw_size), covariates])
    mean_outcome = design @ np.asarray(theta)
    weight = 1.0 - expit(beta0 + covariates @ np.asarray(selection_slopes))
    # covariates have known mean zero, so regression intercepts are control-variate means
    coefficients, *_ = linalg.lstsq(design, np.column_stack([weight * mean_outcome, weight]))
    numerator, denominator = coefficients[0]
    value = float(numerator / denominator)
    residuals = np.column_stack([weight * mean_outcome, weight]) - design @ coefficients
    linearized = (residuals[:, 0] - value * residuals[:, 1]) / denominator
    standard_error = float(np.sqrt(np.var(linearized, ddof=1) / draw_size))
    return OracleValue(value=value, standard_error=standard_error)


def true_psi(config: ScenarioConfig, a: int, oracle_draw_size: Optional[int] = None) -> OracleValue:
    """Monte-Carlo value of E[Y^a | R = 0] with its standard error."""
    draw_size = int(oracle_draw_size or config.oracle_draw_size)
    if draw_size < MIN_ORACLE_DRAW_SIZE:
        raise ValidationError(f"oracle_draw_size must be at least {MIN_ORACLE_DRAW_SIZE}")
    calibration = calibrate(config)
    return _oracle(
        tuple(config.theta(a)),
        calibration.beta0,
        config.selection_slopes,
        config.covariate_dim,
        config.correlation,
        draw_size,
        config.calibration_seed,
    )


@dataclass(frozen=True)
class EstimatorEntry:
    """A named estimator together with the working models it uses."""

    name: str
    kind: EstimatorKind
    spec: NuisanceSpec = NuisanceSpec()

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", EstimatorKind(self.kind))


STANDARD_ESTIMATORS = (
    EstimatorEntry("aug", EstimatorKind.AUGMENTED),
    EstimatorEntry("g", EstimatorKind.GFORMULA),
    EstimatorEntry("w", EstimatorKind.WEIGHTING),
)

_CORRECT_TREATMENT = dict(treatment_source=TreatmentSource.TRIAL_MIXTURE, per_trial_treatment_covariates=())

DOUBLE_ROBUSTNESS_ESTIMATORS = (
    EstimatorEntry("aug_null_outcome", EstimatorKind.AUGMENTED, NuisanceSpec(outcome_covariates=(), **_CORRECT_TREATMENT)),
    EstimatorEntry("g_null_outcome", EstimatorKind.GFORMULA, NuisanceSpec(outcome_covariates=())),
    EstimatorEntry(
        "aug_null_participation",
        EstimatorKind.AUGMENTED,
        NuisanceSpec(participation_covariates=(), **_CORRECT_TREATMENT),
    ),
    EstimatorEntry(
        "w_null_participation",
        EstimatorKind.WEIGHTING,
        NuisanceSpec(participation_covariates=(), **_CORRECT_TREATMENT),
    ),
    EstimatorEntry("w_mixture", EstimatorKind.WEIGHTING, NuisanceSpec(**_CORRECT_TREATMENT)),
)

ESTIMATOR_REGISTRY: Mapping[str, EstimatorEntry] = {
    entry.name: entry for entry in STANDARD_ESTIMATORS + DOUBLE_ROBUSTNESS_ESTIMATORS
}
ESTIMATOR_PRESETS: Mapping[str, Tuple[EstimatorEntry, ...]] = {
    "standard": STANDARD_ESTIMATORS,
    "double_robustness": DOUBLE_ROBUSTNESS_ESTIMATORS,
}


def resolve_estimators(names: Sequence[str]) -> Tuple[EstimatorEntry, ...]:
    """Expand preset names and estimator names into entries, keeping order."""
    entries: List[EstimatorEntry] = []
    for name in names:
        if name in ESTIMATOR_PRESETS:
            entries.extend(ESTIMATOR_PRESETS[name])
        elif name in ESTIMATOR_REGISTRY:
            entries.append(ESTIMATOR_REGISTRY[name])
        else:
            known = sorted(ESTIMATOR_PRESETS) + sorted(ESTIMATOR_REGISTRY)
            raise ValidationError(f"unknown estimator {name!r}; choose from {known}")
    return tuple(dict.fromkeys(entries))


ReplicationResult = Tuple[int, Optional[Dict[Tuple[str, int], Tuple[float, float]]], Optional[str]]


def _evaluate_replication(
    cohort: Cohort, estimators: Sequence[EstimatorEntry], arms: Sequence[int]
) -> Dict[Tuple[str, int], Tuple[float, float]]:
    bundles: List[Tuple[NuisanceSpec, NuisanceBundle]] = []
    values: Dict[Tuple[str, int], Tuple[float, float]] = {}
    for entry in estimators:
        bundle = next((fitted for spec, fitted in bundles if spec == entry.spec), None)
        if bundle is None:
            bundle = fit_nuisance_bundle(cohort.table, entry.spec, ARMS)
            bundles.append((entry.spec, bundle))
        for a in arms:
            point = ESTIMATORS[entry.kind](cohort.table, bundle, a)
            variance = if_variance(cohort.table, bundle, a) if entry.kind is EstimatorKind.AUGMENTED else math.nan
            values[(entry.name, a)] = (point, variance)
    return values


def _run_replications(
    config: ScenarioConfig,
    scenario_index: int,
    master_seed: int,
    calibration: Calibration,
    estimators: Tuple[EstimatorEntry, ...],
    arms: Tuple[int, ...],
    replications: range,
) -> List[ReplicationResult]:
    results: List[ReplicationResult] = []
    for replication in replications:
        rng = replicate_rng(master_seed, SIMULATION_STREAM, scenario_index, replication)
        try:
            cohort = generate_cohort(config, rng, calibration)
            values = _evaluate_replication(cohort, estimators, arms)
        except ReplicationFailure as error:
            results.append((replication, None, type(error).__name__))
            continue
        results.append((replication, values, None))
    return results


@dataclass(frozen=True)
class SummaryRow:
    arm: int
    n: int
    n_trial_total: int
    balanced: bool
    txam_varies: bool
    estimator: str
    truth: float
    truth_se: float
    mean_estimate: float
    bias: float
    variance: float
    mean_if_variance: float
    replications: int
    failures: int
    master_seed: int


@dataclass(frozen=True)
class SimulationSummary:
    """Bias and variance per (scenario, estimator, arm) plus per-scenario calibration."""

    rows: Tuple[SummaryRow, ...]
    calibrations: Tuple[Tuple[ScenarioConfig, Calibration], ...]
    estimators: Tuple[str, ...]
    master_seed: int

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(row) for row in self.rows])

    def _table(self, value: str) -> pd.DataFrame:
        frame = self.to_frame()
        keys = ["arm", "n", "n_trial_total", "balanced", "txam_varies"]
        order = frame[keys].drop_duplicates()
        wide = frame.pivot_table(index=keys, columns="estimator", values=value, sort=False, aggfunc="first")
        wide = wide.reindex(columns=list(self.estimators)).reset_index()
        wide = order.merge(wide, on=keys, how="left").sort_values("arm", kind="stable")
        wide.columns.name = None
        return wide.reset_index(drop=True)

    def bias_table(self) -> pd.DataFrame:
        """Arm, n, trial total, balanced, txam_varies, then one bias column per estimator."""
        return self._table("bias")

    def variance_table(self) -> pd.DataFrame:
        return self._table("variance")

    def calibration_table(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {
                    "n": config.n,
                    "n_trial_total": config.n_trial_total,
                    "balanced": config.balanced,
                    "txam_varies": config.txam_varies,
                    "beta0": calibration.beta0,
                    "gamma0": calibration.gamma0,
                    "zeta0": calibration.zeta0,
                    "calibration_size": config.calibration_size,
                    "calibration_seed": config.calibration_seed,
                }
                for config, calibration in self.calibrations
            ]
        )

    def lookup(self, estimator: str, arm: int, **scenario: object) -> SummaryRow:
        for row in self.rows:
            if row.estimator == estimator and row.arm == arm and all(
                getattr(row, key) == value for key, value in scenario.items()
            ):
                return row
        raise KeyError((estimator, arm, scenario))


def _summarise(
    config: ScenarioConfig,
    results: List[ReplicationResult],
    estimators: Tuple[EstimatorEntry, ...],
    arms: Tuple[int, ...],
    master_seed: int,
) -> List[SummaryRow]:
    successful = [values for _, values, _ in sorted(results, key=lambda item: item[0]) if values is not None]
    failures = len(results) - len(successful)
    rows = []
    for a in arms:
        truth = true_psi(config, a)
        for entry in estimators:
            estimates = np.array([values[(entry.name, a)][0] for values in successful])
            variances = np.array([values[(entry.name, a)][1] for values in successful])
            mean_estimate = float(np.mean(estimates))
            rows.append(
                SummaryRow(
                    arm=a,
                    n=config.n,
                    n_trial_total=config.n_trial_total,
                    balanced=config.balanced,
                    txam_varies=config.txam_varies,
                    estimator=entry.name,
                    truth=truth.value,
                    truth_se=truth.standard_error,
                    mean_estimate=mean_estimate,
                    bias=mean_estimate - truth.value,
                    variance=float(np.var(estimates, ddof=1)) if estimates.size > 1 else 0.0,
                    mean_if_variance=float(np.mean(variances)),
                    replications=len(successful),
                    failures=failures,
                    master_seed=master_seed,
                )
            )
    return rows


def run_grid(
    configs: Sequence[ScenarioConfig],
    estimators: Sequence[EstimatorEntry] = STANDARD_ESTIMATORS,
    replications: Optional[int] = None,
    master_seed: Optional[int] = None,
    *,
    arms: Sequence[int] = ARMS,
    n_jobs: int = 1,
) -> SimulationSummary:
    """
    Monte-Carlo bias and variance of each estimator over every scenario.

    Args:
        configs: Scenarios to simulate, in output order
        estimators: Named estimators with their working-model specifications
        replications: Overrides every scenario's replication count when given
        master_seed: Overrides every scenario's master seed when given
        arms: Treatment levels whose means are estimated
        n_jobs: joblib workers; replication r of scenario i always draws from the
            stream keyed by (seed, i, r), so the summary does not depend on it

    Returns:
        SimulationSummary with one row per (scenario, estimator, arm).

    Raises:
        SimulationError: more than 1% of a scenario's replications failed
    """
    if not configs:
        raise ValidationError("no scenarios to simulate")
    estimators = tuple(estimators)
    arms = tuple(int(a) for a in arms)
    rows: List[SummaryRow] = []
    calibrations = []
    for index, config in enumerate(configs):
        total = int(replications or config.replications)
        seed = int(config.master_seed if master_seed is None else master_seed)
        calibration = calibrate(config)
        calibrations.append((config, calibration))
        LOGGER.info(f"Simulating {config.label()} with {total} replications")
        chunks = [range(start, min(start + CHUNK_SIZE, total)) for start in range(0, total, CHUNK_SIZE)]
        chunk_results = Parallel(n_jobs=n_jobs)(
            delayed(_run_replications)(config, index, seed, calibration, estimators, arms, chunk) for chunk in chunks
        )
        results = [item for chunk in chunk_results for item in chunk]
        failures = [reason for _, values, reason in results if values is None]
        if len(failures) > MAX_FAILURE_RATE * total:
            raise SimulationError(
                f"{len(failures)} of {total} replications failed in scenario {config.label()} "
                f"(first failure: {failures[0]})"
            )
        if failures:
            LOGGER.warning("Scenario %s: %d replications failed and were excluded", config.label(), len(failures))
        rows.extend(_summarise(config, results, estimators, arms, seed))
    return SimulationSummary(
        rows=tuple(rows),
        calibrations=tuple(calibrations),
        estimators=tuple(entry.name for entry in estimators),
        master_seed=int(configs[0].master_seed if master_seed is None else master_seed),
    )


__all__ = [
    "Calibration",
    "Cohort",
    "DESK_REPLICATIONS",
    "DOUBLE_ROBUSTNESS_ESTIMATORS",
    "ESTIMATOR_PRESETS",
    "ESTIMATOR_REGISTRY",
    "EstimatorEntry",
    "OracleValue",
    "STANDARD_ESTIMATORS",
    "ScenarioConfig",
    "SimulationSummary",
    "SummaryRow",
    "allocation_probabilities",
    "calibrate",
    "draw_covariates",
    "generate_cohort",
    "standard_grid",
    "resolve_estimators",
    "run_grid",
    "solve_allocation_intercepts",
    "solve_intercept",
    "true_psi",
]
