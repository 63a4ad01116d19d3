"""Nuisance regressions: outcome means, participation and treatment probabilities.

Every fitted model is an immutable dataclass exposing ``predict`` on a covariate
matrix (rows x p, the full table width). Designs are intercept plus the main
effects selected by ``covariate_index``; ``None`` selects every covariate and
``()`` gives an intercept-only model.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg
from scipy.special import expit, logsumexp, softmax

from .errors import (
    DegenerateOutcomeError,
    DesignError,
    ModelFitError,
    SeparationError,
    SingularDesignError,
    ValidationError,
)

LOGGER = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 100
DEFAULT_MAX_COEFFICIENT_NORM = 1e3
MAX_STEP_HALVINGS = 30
# likelihood changes smaller than this, relative to |log-likelihood|, are roundoff
LIKELIHOOD_ROUNDOFF = 1e-12
# an accepted step below this, relative to the coefficient scale, ends the iteration
NEGLIGIBLE_STEP = 1e-14
# a converged fit whose every residual is below this reproduces the labels exactly
PERFECT_FIT_RESIDUAL = 1e-6


def resolve_index(n_covariates: int, covariate_index: Optional[Sequence[int]]) -> Tuple[int, ...]:
    if covariate_index is None:
        return tuple(range(n_covariates))
    index = tuple(int(j) for j in covariate_index)
    for j in index:
        if j < 0 or j >= n_covariates:
            raise DesignError(f"covariate index {j} outside 0..{n_covariates - 1}")
    return index


def design_matrix(covariates: np.ndarray, covariate_index: Sequence[int]) -> np.ndarray:
    """Intercept column followed by the selected covariate columns."""
    covariates = np.asarray(covariates, dtype=float)
    if covariates.ndim == 1:
        covariates = covariates.reshape(1, -1)
    selected = covariates[:, list(covariate_index)] if covariate_index else np.empty((covariates.shape[0], 0))
    return np.column_stack([np.ones(covariates.shape[0]), selected])


def _column_labels(covariate_index: Sequence[int], names: Optional[Sequence[str]]) -> Tuple[str, ...]:
    if names is None:
        return ("intercept",) + tuple(f"x{j + 1}" for j in covariate_index)
    return ("intercept",) + tuple(names[j] for j in covariate_index)


def check_full_rank(design: np.ndarray, labels: Sequence[str]) -> None:
    """Raise ``SingularDesignError`` naming the first column that adds no rank."""
    rows, columns = design.shape
    if rows < columns:
        raise SingularDesignError(f"design has {rows} rows but {columns} columns")
    if np.linalg.matrix_rank(design) == columns:
        return
    for j in range(1, columns + 1):
        if np.linalg.matrix_rank(design[:, :j]) < j:
            raise SingularDesignError(f"design column '{labels[j - 1]}' is collinear", column=labels[j - 1])
    raise SingularDesignError("design is rank deficient")


def _as_matrix(X: np.ndarray, n_rows: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1) if X.size else np.empty((n_rows, 0))
    if X.shape[0] != n_rows:
        raise DesignError(f"design has {X.shape[0]} rows but the response has {n_rows}")
    return X


def _check_width(covariates: np.ndarray, n_covariates: int) -> np.ndarray:
    covariates = np.asarray(covariates, dtype=float)
    if covariates.ndim == 1:
        covariates = covariates.reshape(1, -1)
    if covariates.shape[1] != n_covariates:
        raise DesignError(f"expected {n_covariates} covariates, got {covariates.shape[1]}")
    return covariates


@dataclass(frozen=True)
class LinearModel:
    """Least-squares outcome regression g(X) = b0 + b.X."""

    coefficients: np.ndarray
    covariate_index: Tuple[int, ...]
    n_covariates: int

    def __post_init__(self) -> None:
        coefficients = np.asarray(self.coefficients, dtype=float)
        if coefficients.shape != (len(self.covariate_index) + 1,) or not np.isfinite(coefficients).all():
            raise ModelFitError("linear model coefficients must be finite and match the design")
        object.__setattr__(self, "coefficients", coefficients)

    def predict(self, covariates: np.ndarray) -> np.ndarray:
        covariates = _check_width(covariates, self.n_covariates)
        return design_matrix(covariates, self.covariate_index) @ self.coefficients


@dataclass(frozen=True)
class LogisticModel:
    """Binary logistic regression; ``predict`` returns Pr[category = categories[1]]."""

    coefficients: np.ndarray
    covariate_index: Tuple[int, ...]
    n_covariates: int
    converged: bool
    iterations: int
    final_gradient_norm: float
    categories: Tuple[int, ...] = (0, 1)
    log_likelihood_path: Tuple[float, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "coefficients", np.asarray(self.coefficients, dtype=float))

    def predict(self, covariates: np.ndarray) -> np.ndarray:
        covariates = _check_width(covariates, self.n_covariates)
        return expit(design_matrix(covariates, self.covariate_index) @ self.coefficients)

    def class_probabilities(self, covariates: np.ndarray) -> np.ndarray:
        upper = self.predict(covariates)
        return np.column_stack([1.0 - upper, upper])


@dataclass(frozen=True)
class MultinomialLogisticModel:
    """Baseline-category logit; row k of ``coefficients`` belongs to ``categories[k + 1]``."""

    coefficients: np.ndarray
    categories: Tuple[int, ...]
    covariate_index: Tuple[int, ...]
    n_covariates: int
    converged: bool
    iterations: int
    final_gradient_norm: float
    log_likelihood_path: Tuple[float, ...] = ()

    def __post_init__(self) -> None:
        coefficients = np.asarray(self.coefficients, dtype=float).reshape(len(self.categories) - 1, -1)
        object.__setattr__(self, "coefficients", coefficients)

    def predict(self, covariates: np.ndarray) -> np.ndarray:
        covariates = _check_width(covariates, self.n_covariates)
        eta = design_matrix(covariates, self.covariate_index) @ self.coefficients.T
        full = np.column_stack([np.zeros(eta.shape[0]), eta])
        return softmax(full, axis=1)

    def class_probabilities(self, covariates: np.ndarray) -> np.ndarray:
        return self.predict(covariates)


@dataclass(frozen=True)
class ConstantModel:
    """A nuisance fixed at one value for every row (e.g. g = 0 or p = 1)."""

    value: float
    n_covariates: int

    def predict(self, covariates: np.ndarray) -> np.ndarray:
        covariates = _check_width(covariates, self.n_covariates)
        return np.full(covariates.shape[0], float(self.value))


@dataclass(frozen=True)
class KnownTreatmentProbabilities:
    """Randomization probabilities known by design, constant in X."""

    probabilities: Mapping[int, float]
    n_covariates: int
    categories: Tuple[int, ...] = field(init=False)

    def __post_init__(self) -> None:
        probabilities = {int(k): float(v) for k, v in sorted(self.probabilities.items())}
        values = np.array(list(probabilities.values()))
        if not probabilities or (values < 0).any() or (values > 1).any():
            raise ValidationError("known treatment probabilities must lie in [0, 1]")
        object.__setattr__(self, "probabilities", probabilities)
        object.__setattr__(self, "categories", tuple(probabilities))

    def class_probabilities(self, covariates: np.ndarray) -> np.ndarray:
        covariates = _check_width(covariates, self.n_covariates)
        row = np.array([self.probabilities[level] for level in self.categories])
        return np.tile(row, (covariates.shape[0], 1))

    def predict(self, covariates: np.ndarray) -> np.ndarray:
        return self.class_probabilities(covariates)


CategoricalModel = Union[LogisticModel, MultinomialLogisticModel, KnownTreatmentProbabilities]


@dataclass(frozen=True)
class TrialMixtureModel:
    """Pr[A = a | X, R = 1] = sum_s Pr[S = s | X, R = 1] Pr[A = a | X, S = s, R = 1]."""

    membership_model: Optional[CategoricalModel]
    per_trial: Mapping[int, CategoricalModel]
    categories: Tuple[int, ...]
    n_covariates: int

    def class_probabilities(self, covariates: np.ndarray) -> np.ndarray:
        covariates = _check_width(covariates, self.n_covariates)
        trials = tuple(sorted(self.per_trial))
        if self.membership_model is None:
            membership = np.ones((covariates.shape[0], 1))
        else:
            membership = self.membership_model.class_probabilities(covariates)
        mixture = np.zeros((covariates.shape[0], len(self.categories)))
        for column, trial in enumerate(trials):
            weight = membership[:, column]
            model = self.per_trial[trial]
            # a trial that never uses a level contributes zero probability for it
            probabilities = model.class_probabilities(covariates)
            for k, level in enumerate(self.categories):
                if level in model.categories:
                    mixture[:, k] += weight * probabilities[:, tuple(model.categories).index(level)]
        return mixture

    def predict(self, covariates: np.ndarray) -> np.ndarray:
        return self.class_probabilities(covariates)


FittedModel = Union[
    LinearModel,
    LogisticModel,
    MultinomialLogisticModel,
    ConstantModel,
    KnownTreatmentProbabilities,
    TrialMixtureModel,
]


def category_probability(model: Any, covariates: np.ndarray, level: int) -> np.ndarray:
    """Probability of one category under a categorical (or mixture) model."""
    categories = tuple(model.categories)
    if level not in categories:
        raise ValidationError(f"treatment level {level} is not modelled (levels {list(categories)})")
    return model.class_probabilities(covariates)[:, categories.index(level)]


def predict(model: FittedModel, x_row: Sequence[float]) -> Union[float, np.ndarray]:
    """Evaluate a fitted model at a single covariate vector of length p."""
    row = np.asarray(x_row, dtype=float)
    if row.ndim != 1:
        raise DesignError("predict expects a single covariate vector")
    if row.shape[0] != model.n_covariates:
        raise DesignError(f"expected {model.n_covariates} covariates, got {row.shape[0]}")
    value = model.predict(row.reshape(1, -1))
    if isinstance(model, (LinearModel, LogisticModel, ConstantModel)):
        return float(value[0])
    return value[0]


def fit_ols(
    y: np.ndarray,
    X: np.ndarray,
    *,
    covariate_index: Optional[Sequence[int]] = None,
    column_names: Optional[Sequence[str]] = None,
) -> LinearModel:
    """Ordinary least squares on an intercept + main-effects design."""
    y = np.asarray(y, dtype=float)
    X = _as_matrix(X, y.shape[0])
    index = resolve_index(X.shape[1], covariate_index)
    design = design_matrix(X, index)
    check_full_rank(design, _column_labels(index, column_names))
    coefficients, *_ = linalg.lstsq(design, y)
    return LinearModel(coefficients=coefficients, covariate_index=index, n_covariates=X.shape[1])


def _acceptable(candidate_ll: float, log_likelihood: float) -> bool:
    return candidate_ll >= log_likelihood - LIKELIHOOD_ROUNDOFF * max(1.0, abs(log_likelihood))


def _negligible(step: np.ndarray, coefficients: np.ndarray) -> bool:
    return float(np.max(np.abs(step))) <= NEGLIGIBLE_STEP * (1.0 + float(np.max(np.abs(coefficients))))


def _binary_log_likelihood(design: np.ndarray, y: np.ndarray, beta: np.ndarray) -> float:
    eta = design @ beta
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def fit_logistic(
    y: np.ndarray,
    X: np.ndarray,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    *,
    covariate_index: Optional[Sequence[int]] = None,
    column_names: Optional[Sequence[str]] = None,
    max_coefficient_norm: float = DEFAULT_MAX_COEFFICIENT_NORM,
) -> LogisticModel:
    """Maximum likelihood logistic regression by IRLS with step-halving."""
    y = np.asarray(y, dtype=float)
    X = _as_matrix(X, y.shape[0])
    if not np.isin(y, (0.0, 1.0)).all():
        raise ValidationError("logistic response must be coded 0/1")
    successes = y.sum()
    if successes == 0 or successes == y.shape[0]:
        raise DegenerateOutcomeError("logistic response has a single class")

    index = resolve_index(X.shape[1], covariate_index)
    design = design_matrix(X, index)
    check_full_rank(design, _column_labels(index, column_names))

    beta = np.zeros(design.shape[1])
    beta[0] = np.log(successes / (y.shape[0] - successes))
    log_likelihood = _binary_log_likelihood(design, y, beta)
    path = [log_likelihood]
    converged = False
    stalled = False
    gradient_norm = np.inf
    iteration = 0

    for iteration in range(max_iter + 1):
        mu = expit(design @ beta)
        gradient = design.T @ (y - mu)
        gradient_norm = float(np.max(np.abs(gradient)))
        if gradient_norm <= tol:
            converged = True
            break
        if iteration == max_iter or stalled:
            break
        weights = mu * (1.0 - mu)
        hessian = design.T @ (design * weights[:, None])
        try:
            step = linalg.solve(hessian, gradient, assume_a="pos")
        except (linalg.LinAlgError, ValueError) as exc:
            raise SeparationError(f"information matrix is singular at iteration {iteration}") from exc

        scale = 1.0
        for _ in range(MAX_STEP_HALVINGS):
            candidate = beta + scale * step
            candidate_ll = _binary_log_likelihood(design, y, candidate)
            if _acceptable(candidate_ll, log_likelihood):
                break
            scale /= 2.0
        else:
            LOGGER.debug("Logistic IRLS stalled at iteration %d (gradient %.3g)", iteration, gradient_norm)
            break

        stalled = _negligible(scale * step, beta)
        beta = candidate
        log_likelihood = candidate_ll
        path.append(log_likelihood)
        if np.linalg.norm(beta) > max_coefficient_norm:
            raise SeparationError(
                f"coefficient norm {np.linalg.norm(beta):.3g} exceeds {max_coefficient_norm:g}; "
                "the response appears separated"
            )

    if converged and np.max(np.abs(y - mu)) < PERFECT_FIT_RESIDUAL:
        raise SeparationError("fitted probabilities are numerically 0 or 1; the response appears separated")
    if not converged:
        LOGGER.warning(
            "Logistic IRLS did not converge after %d iterations (gradient %.3g)", iteration, gradient_norm
        )
    return LogisticModel(
        coefficients=beta,
        covariate_index=index,
        n_covariates=X.shape[1],
        converged=converged,
        iterations=iteration,
        final_gradient_norm=gradient_norm,
        log_likelihood_path=tuple(path),
    )


def _multinomial_log_likelihood(design: np.ndarray, indicators: np.ndarray, coefficients: np.ndarray) -> float:
    eta = design @ coefficients.T
    full = np.column_stack([np.zeros(eta.shape[0]), eta])
    return float(np.sum(indicators * full) - np.sum(logsumexp(full, axis=1)))


def fit_multinomial(
    labels: np.ndarray,
    X: np.ndarray,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    *,
    categories: Optional[Sequence[int]] = None,
    covariate_index: Optional[Sequence[int]] = None,
    column_names: Optional[Sequence[str]] = None,
    max_coefficient_norm: float = DEFAULT_MAX_COEFFICIENT_NORM,
) -> MultinomialLogisticModel:
    """Baseline-category multinomial logit by Newton-Raphson with step-halving.

    The first category is the reference; its coefficients are fixed at zero.
    """
    labels = np.asarray(labels)
    X = _as_matrix(X, labels.shape[0])
    observed = tuple(int(v) for v in np.unique(labels))
    levels = tuple(sorted(int(v) for v in categories)) if categories is not None else observed
    if len(levels) < 2:
        raise DegenerateOutcomeError("multinomial response needs at least two categories")
    absent = [level for level in levels if level not in observed]
    if absent:
        raise DegenerateOutcomeError(f"categories {absent} never occur in the response")
    unexpected = [level for level in observed if level not in levels]
    if unexpected:
        raise ValidationError(f"response holds undeclared categories {unexpected}")

    index = resolve_index(X.shape[1], covariate_index)
    design = design_matrix(X, index)
    check_full_rank(design, _column_labels(index, column_names))
    n_rows, width = design.shape
    n_free = len(levels) - 1

    indicators = np.column_stack([(labels == level).astype(float) for level in levels])
    counts = indicators.sum(axis=0)
    coefficients = np.zeros((n_free, width))
    coefficients[:, 0] = np.log(counts[1:] / counts[0])
    log_likelihood = _multinomial_log_likelihood(design, indicators, coefficients)
    path = [log_likelihood]
    converged = False
    stalled = False
    gradient_norm = np.inf
    iteration = 0

    for iteration in range(max_iter + 1):
        eta = design @ coefficients.T
        probabilities = softmax(np.column_stack([np.zeros(n_rows), eta]), axis=1)[:, 1:]
        gradient = ((indicators[:, 1:] - probabilities).T @ design).ravel()
        gradient_norm = float(np.max(np.abs(gradient)))
        if gradient_norm <= tol:
            converged = True
            break
        if iteration == max_iter or stalled:
            break

        information = np.empty((n_free * width, n_free * width))
        for j in range(n_free):
            for k in range(j, n_free):
                weight = probabilities[:, j] * ((j == k) - probabilities[:, k])
                block = design.T @ (design * weight[:, None])
                information[j * width:(j + 1) * width, k * width:(k + 1) * width] = block
                information[k * width:(k + 1) * width, j * width:(j + 1) * width] = block.T
        try:
            step = linalg.solve(information, gradient, assume_a="pos").reshape(n_free, width)
        except (linalg.LinAlgError, ValueError) as exc:
            raise SeparationError(f"information matrix is singular at iteration {iteration}") from exc

        scale = 1.0
        for _ in range(MAX_STEP_HALVINGS):
            candidate = coefficients + scale * step
            candidate_ll = _multinomial_log_likelihood(design, indicators, candidate)
            if _acceptable(candidate_ll, log_likelihood):
                break
            scale /= 2.0
        else:
            LOGGER.debug("Multinomial Newton stalled at iteration %d (gradient %.3g)", iteration, gradient_norm)
            break

        stalled = _negligible(scale * step, coefficients)
        coefficients = candidate
        log_likelihood = candidate_ll
        path.append(log_likelihood)
        if np.linalg.norm(coefficients) > max_coefficient_norm:
            raise SeparationError(
                f"coefficient norm {np.linalg.norm(coefficients):.3g} exceeds {max_coefficient_norm:g}; "
                "some category appears separated"
            )

    if converged and np.max(np.abs(indicators[:, 1:] - probabilities)) < PERFECT_FIT_RESIDUAL:
        raise SeparationError("fitted probabilities are numerically 0 or 1; the categories appear separated")
    if not converged:
        LOGGER.warning(
            "Multinomial fit did not converge after %d iterations (gradient %.3g)", iteration, gradient_norm
        )
    return MultinomialLogisticModel(
        coefficients=coefficients,
        categories=levels,
        covariate_index=index,
        n_covariates=X.shape[1],
        converged=converged,
        iterations=iteration,
        final_gradient_norm=gradient_norm,
        log_likelihood_path=tuple(path),
    )


def fit_categorical(
    labels: np.ndarray,
    X: np.ndarray,
    categories: Sequence[int],
    *,
    covariate_index: Optional[Sequence[int]] = None,
    column_names: Optional[Sequence[str]] = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> CategoricalModel:
    """Logistic fit for two categories, multinomial for more."""
    levels = tuple(sorted(int(v) for v in categories))
    labels = np.asarray(labels)
    if len(levels) == 2:
        unexpected = np.setdiff1d(np.unique(labels), levels)
        if unexpected.size:
            raise ValidationError(f"response holds undeclared categories {unexpected.tolist()}")
        model = fit_logistic(
            (labels == levels[1]).astype(float),
            X,
            tol,
            max_iter,
            covariate_index=covariate_index,
            column_names=column_names,
        )
        return replace(model, categories=levels)
    return fit_multinomial(
        labels,
        X,
        tol,
        max_iter,
        categories=levels,
        covariate_index=covariate_index,
        column_names=column_names,
    )


def model_to_dict(model: FittedModel) -> Dict[str, Any]:
    """Structured description of a fitted model (kind, coefficients, labels)."""
    if isinstance(model, LinearModel):
        return {
            "kind": "linear",
            "coefficients": model.coefficients.tolist(),
            "covariate_index": list(model.covariate_index),
            "n_covariates": model.n_covariates,
        }
    if isinstance(model, LogisticModel):
        return {
            "kind": "logistic",
            "coefficients": model.coefficients.tolist(),
            "categories": list(model.categories),
            "covariate_index": list(model.covariate_index),
            "n_covariates": model.n_covariates,
            "converged": model.converged,
            "iterations": model.iterations,
            "final_gradient_norm": model.final_gradient_norm,
        }
    if isinstance(model, MultinomialLogisticModel):
        return {
            "kind": "multinomial",
            "coefficients": model.coefficients.tolist(),
            "categories": list(model.categories),
            "covariate_index": list(model.covariate_index),
            "n_covariates": model.n_covariates,
            "converged": model.converged,
            "iterations": model.iterations,
            "final_gradient_norm": model.final_gradient_norm,
        }
    if isinstance(model, ConstantModel):
        return {"kind": "constant", "value": float(model.value), "n_covariates": model.n_covariates}
    if isinstance(model, KnownTreatmentProbabilities):
        return {
            "kind": "known",
            "probabilities": {str(k): v for k, v in model.probabilities.items()},
            "n_covariates": model.n_covariates,
        }
    if isinstance(model, TrialMixtureModel):
        return {
            "kind": "trial_mixture",
            "membership_model": None if model.membership_model is None else model_to_dict(model.membership_model),
            "per_trial": {str(s): model_to_dict(m) for s, m in sorted(model.per_trial.items())},
            "categories": list(model.categories),
            "n_covariates": model.n_covariates,
        }
    raise TypeError(f"unsupported model type {type(model).__name__}")


def model_from_dict(payload: Mapping[str, Any]) -> FittedModel:
    kind = payload.get("kind")
    index = tuple(payload.get("covariate_index", ()))
    if kind == "linear":
        return LinearModel(np.array(payload["coefficients"]), index, payload["n_covariates"])
    if kind == "logistic":
        return LogisticModel(
            coefficients=np.array(payload["coefficients"]),
            covariate_index=index,
            n_covariates=payload["n_covariates"],
            converged=payload["converged"],
            iterations=payload["iterations"],
            final_gradient_norm=payload["final_gradient_norm"],
            categories=tuple(payload["categories"]),
        )
    if kind == "multinomial":
        return MultinomialLogisticModel(
            coefficients=np.array(payload["coefficients"]),
            categories=tuple(payload["categories"]),
            covariate_index=index,
            n_covariates=payload["n_covariates"],
            converged=payload["converged"],
            iterations=payload["iterations"],
            final_gradient_norm=payload["final_gradient_norm"],
        )
    if kind == "constant":
        return ConstantModel(payload["value"], payload["n_covariates"])
    if kind == "known":
        return KnownTreatmentProbabilities(
            {int(k): v for k, v in payload["probabilities"].items()}, payload["n_covariates"]
        )
    if kind == "trial_mixture":
        membership = payload["membership_model"]
        return TrialMixtureModel(
            membership_model=None if membership is None else model_from_dict(membership),
            per_trial={int(s): model_from_dict(m) for s, m in payload["per_trial"].items()},
            categories=tuple(payload["categories"]),
            n_covariates=payload["n_covariates"],
        )
    raise ValidationError(f"unknown model kind {kind!r}")


def save_model(model: FittedModel, path: Path | str) -> None:
    payload = {"format_version": MODEL_FORMAT_VERSION, "model": model_to_dict(model)}
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")


def load_model(path: Path | str) -> FittedModel:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("format_version") != MODEL_FORMAT_VERSION:
        raise ValidationError(f"unsupported model format version {payload.get('format_version')!r}")
    return model_from_dict(payload["model"])


__all__ = [
    "CategoricalModel",
    "ConstantModel",
    "FittedModel",
    "KnownTreatmentProbabilities",
    "LinearModel",
    "LogisticModel",
    "MultinomialLogisticModel",
    "TrialMixtureModel",
    "category_probability",
    "check_full_rank",
    "design_matrix",
    "fit_categorical",
    "fit_logistic",
    "fit_multinomial",
    "fit_ols",
    "load_model",
    "model_from_dict",
    "model_to_dict",
    "predict",
    "resolve_index",
    "save_model",
]
