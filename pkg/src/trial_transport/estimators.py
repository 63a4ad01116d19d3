"""Potential outcome mean and treatment effect estimators for the target population."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from .data_model import ObservationTable
from .errors import (
    EstimatorMismatchError,
    MissingModelError,
    NotApplicableError,
    PositivityError,
    ValidationError,
)
from .nuisance import (
    ConstantModel,
    FittedModel,
    KnownTreatmentProbabilities,
    category_probability,
)

LOGGER = logging.getLogger(__name__)

POSITIVITY_EPS = 1e-12


class EstimatorKind(str, Enum):
    GFORMULA = "gformula"
    WEIGHTING = "weighting"
    AUGMENTED = "augmented"


@dataclass(frozen=True)
class NuisanceBundle:
    """Fitted nuisances feeding the estimators.

    ``treatment_model`` answers Pr[A = a | X, R = 1]; ``per_trial_treatment_models``
    answer Pr[A = a | X, S = s, R = 1] and are only needed by ``rho_w``.
    """

    outcome_models: Mapping[int, FittedModel]
    participation_model: FittedModel
    treatment_model: Optional[FittedModel]
    per_trial_treatment_models: Optional[Mapping[int, FittedModel]] = None
    digest: str = ""


def _exempt_from_upper_bound(model: Any) -> bool:
    return isinstance(model, (ConstantModel, KnownTreatmentProbabilities))


def _require_interior(
    values: np.ndarray, rows: np.ndarray, label: str, *, allow_one: bool
) -> None:
    """Positivity guard on probabilities that enter a weight denominator."""
    bad = values <= POSITIVITY_EPS
    if not allow_one:
        bad |= values >= 1.0 - POSITIVITY_EPS
    if bad.any():
        position = int(np.argmax(bad))
        raise PositivityError(
            f"{label} = {values[position]:.3g} is outside (0, 1); weights are undefined",
            row=int(rows[position]),
        )


def _outcome_model(bundle: NuisanceBundle, a: int) -> FittedModel:
    try:
        return bundle.outcome_models[a]
    except KeyError:
        raise MissingModelError(f"no outcome model for treatment level {a}") from None


def _inverse_odds_weights(table: ObservationTable, bundle: NuisanceBundle, a: int) -> Tuple[np.ndarray, np.ndarray]:
    """Rows with R = 1, A = a and their weights (1 - p) / (p e_a)."""
    if bundle.treatment_model is None:
        raise MissingModelError("bundle has no treatment probability source")
    rows = np.flatnonzero(table.arm_mask(a))
    covariates = table.covariates[rows]
    participation = bundle.participation_model.predict(covariates)
    _require_interior(
        participation,
        rows,
        "participation probability",
        allow_one=_exempt_from_upper_bound(bundle.participation_model),
    )
    treatment = category_probability(bundle.treatment_model, covariates, a)
    _require_interior(
        treatment,
        rows,
        f"probability of treatment {a}",
        allow_one=_exempt_from_upper_bound(bundle.treatment_model),
    )
    return rows, (1.0 - participation) / (participation * treatment)


def psi_g(table: ObservationTable, bundle: NuisanceBundle, a: int) -> float:
    """g-formula: average of the arm-a outcome model over target rows."""
    model = _outcome_model(bundle, a)
    predictions = model.predict(table.covariates[table.target_mask])
    return float(np.sum(predictions) / table.n_target)


def psi_w(table: ObservationTable, bundle: NuisanceBundle, a: int) -> float:
    """Inverse-odds-of-participation x inverse-probability-of-treatment weighting (not normalized)."""
    rows, weights = _inverse_odds_weights(table, bundle, a)
    return float(np.sum(weights * table.outcome[rows]) / table.n_target)


def psi_aug(table: ObservationTable, bundle: NuisanceBundle, a: int) -> float:
    """Augmented (doubly robust) estimator of E[Y^a | R = 0]."""
    model = _outcome_model(bundle, a)
    rows, weights = _inverse_odds_weights(table, bundle, a)
    residuals = table.outcome[rows] - model.predict(table.covariates[rows])
    target_predictions = model.predict(table.covariates[table.target_mask])
    # n * pi_hat is exactly n_target
    return float((np.sum(weights * residuals) + np.sum(target_predictions)) / table.n_target)


ESTIMATORS = {
    EstimatorKind.GFORMULA: psi_g,
    EstimatorKind.WEIGHTING: psi_w,
    EstimatorKind.AUGMENTED: psi_aug,
}


def estimate_arm(table: ObservationTable, bundle: NuisanceBundle, a: int, kind: EstimatorKind) -> "ArmEstimate":
    kind = EstimatorKind(kind)
    return ArmEstimate(level=a, value=ESTIMATORS[kind](table, bundle, a), kind=kind, digest=bundle.digest)


@dataclass(frozen=True)
class ArmEstimate:
    level: int
    value: float
    kind: EstimatorKind
    digest: str = ""


def contrast(first: ArmEstimate, second: ArmEstimate) -> float:
    """delta(a, a') = psi(a) - psi(a'); both arms must come from the same estimator and bundle."""
    if first.kind != second.kind:
        raise EstimatorMismatchError(
            f"cannot contrast a {first.kind.value} estimate with a {second.kind.value} estimate"
        )
    if first.digest != second.digest:
        raise EstimatorMismatchError("arm estimates were produced with different nuisance bundles")
    return first.value - second.value


def rho_w(table: ObservationTable, bundle: NuisanceBundle, a: int, a_prime: int) -> float:
    """Trial-stratified weighting estimator of E[Y^a - Y^a' | R = 0].

    Uses per-trial treatment probabilities Pr[A | X, S, R = 1], which identifies the
    effect when only conditional average effects (not means) transport across trials.
    """
    per_trial = bundle.per_trial_treatment_models
    if not per_trial:
        raise MissingModelError("rho_w needs per-trial treatment models")
    weights = np.zeros(table.n)
    participation_exempt = _exempt_from_upper_bound(bundle.participation_model)
    for level, sign in ((a, 1.0), (a_prime, -1.0)):
        rows = np.flatnonzero(table.arm_mask(level))
        if rows.size == 0:
            continue
        covariates = table.covariates[rows]
        participation = bundle.participation_model.predict(covariates)
        _require_interior(participation, rows, "participation probability", allow_one=participation_exempt)
        treatment = np.empty(rows.size)
        trials = table.trial_id[rows]
        for trial in np.unique(trials):
            members = trials == trial
            try:
                model = per_trial[int(trial)]
            except KeyError:
                raise MissingModelError(f"no treatment model for trial {int(trial)}") from None
            treatment[members] = category_probability(model, covariates[members], level)
            _require_interior(
                treatment[members],
                rows[members],
                f"probability of treatment {level} in trial {int(trial)}",
                allow_one=_exempt_from_upper_bound(model),
            )
        weights[rows] += sign * (1.0 - participation) / (participation * treatment)
    participating = table.participation
    # Pr[R = 0]^-1 n^-1 sum(w Y) with Pr[R = 0] estimated by n_target / n
    return float(np.sum(weights[participating] * table.outcome[participating]) / table.n_target)


def influence_values(table: ObservationTable, bundle: NuisanceBundle, a: int) -> np.ndarray:
    """Plug-in efficient influence function values for psi(a), one per row."""
    model = _outcome_model(bundle, a)
    estimate = psi_aug(table, bundle, a)
    pi_hat = table.n_target / table.n
    values = np.zeros(table.n)
    rows, weights = _inverse_odds_weights(table, bundle, a)
    values[rows] = weights * (table.outcome[rows] - model.predict(table.covariates[rows]))
    target = table.target_mask
    values[target] += model.predict(table.covariates[target]) - estimate
    values /= pi_hat
    mean = float(np.mean(values))
    scale = float(np.max(np.abs(values))) or 1.0
    if abs(mean) > 1e-10 * max(1.0, scale):
        LOGGER.warning("Influence values for arm %s have mean %.3g, expected 0", a, mean)
    return values


def if_variance(table: ObservationTable, bundle: NuisanceBundle, a: int) -> float:
    """n^-1 times the sample variance of the plug-in influence values."""
    values = influence_values(table, bundle, a)
    return float(np.var(values, ddof=1) / table.n)


def if_variance_contrast(table: ObservationTable, bundle: NuisanceBundle, a: int, a_prime: int) -> float:
    """Influence-function variance of delta(a, a') for the augmented estimator."""
    values = influence_values(table, bundle, a) - influence_values(table, bundle, a_prime)
    return float(np.var(values, ddof=1) / table.n)


def psi_benchmark(table: ObservationTable, a: int) -> float:
    """Unadjusted mean outcome of target rows observed under treatment a."""
    rows = table.target_arm_mask(a)
    if not rows.any():
        raise NotApplicableError(f"no target rows carry treatment {a} together with an outcome")
    return float(np.mean(table.outcome[rows]))


def psi_label(a: int) -> str:
    return f"psi({a})"


def delta_label(a: int, a_prime: int) -> str:
    return f"delta({a},{a_prime})"


def rho_label(a: int, a_prime: int) -> str:
    return f"rho({a},{a_prime})"


@dataclass(frozen=True)
class EstimateReport:
    """Point estimates, contrasts, optional variances/intervals, and provenance."""

    estimator: EstimatorKind
    estimates: Mapping[int, float]
    contrasts: Mapping[Tuple[int, int], float]
    pi_hat: float
    n: int
    n_target: int
    nuisance_digest: str
    variances: Mapping[str, float] = field(default_factory=dict)
    intervals: Mapping[str, Tuple[float, float]] = field(default_factory=dict)
    trial_weighted_contrasts: Mapping[Tuple[int, int], float] = field(default_factory=dict)
    benchmark: Mapping[str, float] = field(default_factory=dict)
    metadata: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for (a, a_prime), value in self.contrasts.items():
            if value != self.estimates[a] - self.estimates[a_prime]:
                raise ValidationError(f"contrast {delta_label(a, a_prime)} is not the arm difference")
        points = self.point_values()
        for label, (lower, upper) in self.intervals.items():
            point = points.get(label)
            if point is not None and not lower <= point <= upper:
                raise ValidationError(f"interval for {label} [{lower}, {upper}] excludes the point {point}")

    def point_values(self) -> Dict[str, float]:
        """Flat mapping from quantity label to point estimate."""
        values = {psi_label(a): v for a, v in self.estimates.items()}
        values.update({delta_label(a, b): v for (a, b), v in self.contrasts.items()})
        values.update({rho_label(a, b): v for (a, b), v in self.trial_weighted_contrasts.items()})
        return values


def point_estimates(
    table: ObservationTable,
    bundle: NuisanceBundle,
    kind: EstimatorKind,
    arms: Sequence[int],
    contrasts: Sequence[Tuple[int, int]] = (),
    trial_weighted: Sequence[Tuple[int, int]] = (),
) -> Dict[str, float]:
    """Every requested quantity keyed by its label."""
    kind = EstimatorKind(kind)
    arm_estimates = {a: estimate_arm(table, bundle, a, kind) for a in _arms_needed(arms, contrasts)}
    values = {psi_label(a): arm_estimates[a].value for a in arms}
    for a, b in contrasts:
        values[delta_label(a, b)] = contrast(arm_estimates[a], arm_estimates[b])
    for a, b in trial_weighted:
        values[rho_label(a, b)] = rho_w(table, bundle, a, b)
    return values


def benchmark_estimates(
    table: ObservationTable, arms: Sequence[int], contrasts: Sequence[Tuple[int, int]] = ()
) -> Dict[str, float]:
    values = {psi_label(a): psi_benchmark(table, a) for a in _arms_needed(arms, contrasts)}
    for a, b in contrasts:
        values[delta_label(a, b)] = values[psi_label(a)] - values[psi_label(b)]
    return values


def _arms_needed(arms: Sequence[int], contrasts: Sequence[Tuple[int, int]]) -> Tuple[int, ...]:
    needed = list(dict.fromkeys(int(a) for a in arms))
    for pair in contrasts:
        for level in pair:
            if level not in needed:
                needed.append(int(level))
    return tuple(needed)


def estimate(
    table: ObservationTable,
    bundle: NuisanceBundle,
    kind: EstimatorKind,
    arms: Sequence[int],
    contrasts: Sequence[Tuple[int, int]] = (),
    *,
    trial_weighted: Sequence[Tuple[int, int]] = (),
    with_variance: bool = False,
    with_benchmark: bool = False,
    metadata: Optional[Mapping[str, Any]] = None,
) -> EstimateReport:
    """Evaluate one estimator for every requested arm and contrast.

    ``with_benchmark`` adds the unadjusted comparison among target rows that
    carry treatment and outcome, labelled like the transported quantities.
    """
    kind = EstimatorKind(kind)
    needed = _arms_needed(arms, contrasts)
    values = point_estimates(table, bundle, kind, needed, contrasts, trial_weighted)
    variances: Dict[str, float] = {}
    if with_variance and kind is EstimatorKind.AUGMENTED:
        for a in needed:
            variances[psi_label(a)] = if_variance(table, bundle, a)
        for a, b in contrasts:
            variances[delta_label(a, b)] = if_variance_contrast(table, bundle, a, b)
    benchmark = benchmark_estimates(table, needed, contrasts) if with_benchmark else {}
    LOGGER.info("Computed %s estimates for arms %s", kind.value, list(needed))
    return EstimateReport(
        estimator=kind,
        estimates={a: values[psi_label(a)] for a in needed},
        contrasts={(a, b): values[delta_label(a, b)] for a, b in contrasts},
        pi_hat=table.n_target / table.n,
        n=table.n,
        n_target=table.n_target,
        nuisance_digest=bundle.digest,
        variances=variances,
        trial_weighted_contrasts={(a, b): values[rho_label(a, b)] for a, b in trial_weighted},
        benchmark=benchmark,
        metadata=dict(metadata or {}),
    )


__all__ = [
    "ArmEstimate",
    "EstimateReport",
    "EstimatorKind",
    "NuisanceBundle",
    "benchmark_estimates",
    "contrast",
    "delta_label",
    "estimate",
    "estimate_arm",
    "if_variance",
    "if_variance_contrast",
    "influence_values",
    "point_estimates",
    "psi_aug",
    "psi_benchmark",
    "psi_g",
    "psi_label",
    "psi_w",
    "rho_label",
    "rho_w",
]
