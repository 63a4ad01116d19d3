"""Fit every nuisance regression an estimator needs from one observation table."""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from .data_model import ObservationTable
from .errors import MissingModelError, ValidationError
from .estimators import NuisanceBundle
from .nuisance import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    CategoricalModel,
    FittedModel,
    KnownTreatmentProbabilities,
    TrialMixtureModel,
    fit_categorical,
    fit_logistic,
    fit_ols,
    model_to_dict,
)

LOGGER = logging.getLogger(__name__)

CovariateIndex = Optional[Tuple[int, ...]]


class TreatmentSource(str, Enum):
    POOLED = "pooled"
    KNOWN = "known"
    TRIAL_MIXTURE = "trial_mixture"


@dataclass(frozen=True)
class NuisanceSpec:
    """Working-model designs and probability sources.

    Covariate indices select main effects; ``None`` uses every covariate and
    ``()`` fits an intercept-only model.
    """

    outcome_covariates: CovariateIndex = None
    participation_covariates: CovariateIndex = None
    treatment_covariates: CovariateIndex = None
    treatment_source: TreatmentSource = TreatmentSource.POOLED
    known_treatment_probabilities: Optional[Mapping[int, float]] = None
    membership_covariates: CovariateIndex = None
    per_trial_treatment_covariates: CovariateIndex = None
    per_trial_known_probabilities: Optional[Mapping[int, Mapping[int, float]]] = None
    fit_per_trial: bool = False
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER

    def __post_init__(self) -> None:
        object.__setattr__(self, "treatment_source", TreatmentSource(self.treatment_source))
        for name in (
            "outcome_covariates",
            "participation_covariates",
            "treatment_covariates",
            "membership_covariates",
            "per_trial_treatment_covariates",
        ):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, tuple(int(i) for i in value))
        if self.treatment_source is TreatmentSource.KNOWN and not self.known_treatment_probabilities:
            raise ValidationError("known treatment source requires known_treatment_probabilities")
        if self.known_treatment_probabilities and self.treatment_source is not TreatmentSource.KNOWN:
            raise ValidationError(
                "known_treatment_probabilities are only used with the known treatment source, "
                f"not {self.treatment_source.value!r}"
            )
        uses_per_trial = self.fit_per_trial or self.treatment_source is TreatmentSource.TRIAL_MIXTURE
        if self.per_trial_known_probabilities is not None and not uses_per_trial:
            raise ValidationError(
                "per_trial_known_probabilities need per-trial models (fit_per_trial or the trial_mixture source)"
            )

    def describe(self) -> Dict[str, object]:
        def index(value: CovariateIndex) -> object:
            return "all" if value is None else list(value)

        return {
            "outcome_covariates": index(self.outcome_covariates),
            "participation_covariates": index(self.participation_covariates),
            "treatment_covariates": index(self.treatment_covariates),
            "treatment_source": self.treatment_source.value,
            "membership_covariates": index(self.membership_covariates),
            "per_trial_treatment_covariates": index(self.per_trial_treatment_covariates),
            "known_treatment_probabilities": _probabilities(self.known_treatment_probabilities),
            "per_trial_known_probabilities": None
            if self.per_trial_known_probabilities is None
            else {
                str(trial): _probabilities(probabilities)
                for trial, probabilities in sorted(self.per_trial_known_probabilities.items())
            },
            "fit_per_trial": self.fit_per_trial,
        }


def _probabilities(values: Optional[Mapping[int, float]]) -> Optional[Dict[str, float]]:
    if values is None:
        return None
    return {str(level): float(p) for level, p in sorted(values.items())}


def bundle_digest(bundle_models: Mapping[str, object]) -> str:
    """sha256 over the canonical JSON form of every fitted model."""
    payload = json.dumps(bundle_models, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _fit_levels(
    labels: np.ndarray,
    covariates: np.ndarray,
    levels: Sequence[int],
    covariate_index: CovariateIndex,
    names: Sequence[str],
    spec: NuisanceSpec,
) -> CategoricalModel:
    if len(levels) == 1:
        return KnownTreatmentProbabilities({int(levels[0]): 1.0}, covariates.shape[1])
    return fit_categorical(
        labels,
        covariates,
        levels,
        covariate_index=covariate_index,
        column_names=names,
        tol=spec.tol,
        max_iter=spec.max_iter,
    )


def _known(probabilities: Mapping[int, float], levels: Sequence[int], n_covariates: int) -> KnownTreatmentProbabilities:
    model = KnownTreatmentProbabilities(probabilities, n_covariates)
    missing = [level for level in levels if level not in model.categories]
    if missing:
        raise MissingModelError(f"no known treatment probability for levels {missing}")
    return model


def fit_per_trial_treatment_models(table: ObservationTable, spec: NuisanceSpec) -> Dict[int, CategoricalModel]:
    """Pr[A = a | X, S = s, R = 1] for each trial, fitted or known by design."""
    models: Dict[int, CategoricalModel] = {}
    names = table.covariate_names
    for trial in table.trial_ids:
        rows = table.trial_id == trial
        observed = tuple(int(v) for v in np.unique(table.treatment[rows]))
        if spec.per_trial_known_probabilities is not None:
            try:
                probabilities = spec.per_trial_known_probabilities[int(trial)]
            except KeyError:
                raise MissingModelError(f"no known treatment probabilities for trial {int(trial)}") from None
            models[int(trial)] = _known(probabilities, observed, table.p)
            continue
        models[int(trial)] = _fit_levels(
            table.treatment[rows],
            table.covariates[rows],
            observed,
            spec.per_trial_treatment_covariates,
            names,
            spec,
        )
    return models


def _treatment_model(
    table: ObservationTable,
    spec: NuisanceSpec,
    levels: Sequence[int],
    per_trial: Optional[Mapping[int, CategoricalModel]],
) -> FittedModel:
    if spec.treatment_source is TreatmentSource.KNOWN:
        return _known(spec.known_treatment_probabilities or {}, levels, table.p)
    trial_rows = table.participation
    if spec.treatment_source is TreatmentSource.POOLED:
        return _fit_levels(
            table.treatment[trial_rows],
            table.covariates[trial_rows],
            levels,
            spec.treatment_covariates,
            table.covariate_names,
            spec,
        )
    assert per_trial is not None
    membership = None
    if len(table.trial_ids) > 1:
        membership = fit_categorical(
            table.trial_id[trial_rows],
            table.covariates[trial_rows],
            table.trial_ids,
            covariate_index=spec.membership_covariates,
            column_names=table.covariate_names,
            tol=spec.tol,
            max_iter=spec.max_iter,
        )
    return TrialMixtureModel(
        membership_model=membership,
        per_trial=dict(per_trial),
        categories=tuple(int(v) for v in levels),
        n_covariates=table.p,
    )


def fit_nuisance_bundle(
    table: ObservationTable,
    spec: NuisanceSpec = NuisanceSpec(),
    levels: Optional[Sequence[int]] = None,
) -> NuisanceBundle:
    """Arm-specific outcome regressions, participation model and treatment probabilities."""
    levels = tuple(int(v) for v in (levels if levels is not None else table.treatment_levels))
    unknown = [level for level in levels if level not in table.treatment_levels]
    if unknown:
        raise ValidationError(f"treatment levels {unknown} never occur among trial rows")
    names = table.covariate_names

    outcome_models = {}
    for level in levels:
        rows = table.arm_mask(level)
        outcome_models[level] = fit_ols(
            table.outcome[rows],
            table.covariates[rows],
            covariate_index=spec.outcome_covariates,
            column_names=names,
        )

    participation_model = fit_logistic(
        table.participation.astype(float),
        table.covariates,
        spec.tol,
        spec.max_iter,
        covariate_index=spec.participation_covariates,
        column_names=names,
    )

    per_trial = None
    if spec.fit_per_trial or spec.treatment_source is TreatmentSource.TRIAL_MIXTURE:
        per_trial = fit_per_trial_treatment_models(table, spec)
    # over every observed level, not only the estimated arms
    treatment_model = _treatment_model(table, spec, table.treatment_levels, per_trial)

    described = {
        "outcome": {str(level): model_to_dict(model) for level, model in outcome_models.items()},
        "participation": model_to_dict(participation_model),
        "treatment": model_to_dict(treatment_model),
        "per_trial": None
        if per_trial is None
        else {str(s): model_to_dict(model) for s, model in sorted(per_trial.items())},
    }
    digest = bundle_digest(described)
    LOGGER.debug(
        "Fitted nuisances for levels %s (participation converged=%s, digest %s)",
        list(levels),
        participation_model.converged,
        digest[:12],
    )
    return NuisanceBundle(
        outcome_models=outcome_models,
        participation_model=participation_model,
        treatment_model=treatment_model,
        per_trial_treatment_models=per_trial,
        digest=digest,
    )


__all__ = [
    "NuisanceSpec",
    "TreatmentSource",
    "bundle_digest",
    "fit_nuisance_bundle",
    "fit_per_trial_treatment_models",
]
