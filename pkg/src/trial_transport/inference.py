"""Nonparametric bootstrap intervals for transported means and contrasts."""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, replace
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from scipy.stats import norm

from .data_model import ObservationTable
from .errors import InferenceError, ModelFitError, PositivityError, ValidationError
from .estimators import EstimateReport, EstimatorKind, estimate, point_estimates
from .pipeline import NuisanceSpec, fit_nuisance_bundle
from .seeding import BOOTSTRAP_STREAM, replicate_rng

LOGGER = logging.getLogger(__name__)

CHUNK_SIZE = 50
SNAP_TOLERANCE = 1e-9

ReplicateFailure = (ValidationError, ModelFitError, PositivityError)


class ResamplingScheme(str, Enum):
    POOLED = "pooled"
    STRATIFIED_BY_R = "stratified_by_R"


@dataclass(frozen=True)
class BootstrapConfig:
    replicates: int = 10000
    level: float = 0.95
    master_seed: int = 0
    scheme: ResamplingScheme = ResamplingScheme.POOLED
    n_jobs: int = 1
    max_failure_rate: float = 0.05

    def __post_init__(self) -> None:
        object.__setattr__(self, "scheme", ResamplingScheme(self.scheme))
        if self.replicates < 2:
            raise ValidationError("bootstrap needs at least 2 replicates")
        if not 0.0 < self.level < 1.0:
            raise ValidationError("confidence level must lie strictly between 0 and 1")
        if self.master_seed < 0:
            raise ValidationError("master seed must be non-negative")


def resample_indices(table: ObservationTable, scheme: ResamplingScheme, rng: np.random.Generator) -> np.ndarray:
    """Row indices of one bootstrap replicate."""
    if scheme is ResamplingScheme.POOLED:
        return rng.integers(0, table.n, size=table.n)
    target = np.flatnonzero(table.target_mask)
    trials = np.flatnonzero(table.participation)
    return np.concatenate(
        [
            trials[rng.integers(0, trials.size, size=trials.size)],
            target[rng.integers(0, target.size, size=target.size)],
        ]
    )


def _run_chunk(
    table: ObservationTable,
    kind: EstimatorKind,
    spec: NuisanceSpec,
    levels: Tuple[int, ...],
    arms: Tuple[int, ...],
    contrasts: Tuple[Tuple[int, int], ...],
    trial_weighted: Tuple[Tuple[int, int], ...],
    config: BootstrapConfig,
    replicates: range,
) -> List[Tuple[int, Optional[Dict[str, float]], Optional[str]]]:
    results = []
    for replicate in replicates:
        rng = replicate_rng(config.master_seed, BOOTSTRAP_STREAM, replicate)
        try:
            sample = table.take(resample_indices(table, config.scheme, rng))
            bundle = fit_nuisance_bundle(sample, spec, levels)
            values = point_estimates(sample, bundle, kind, arms, contrasts, trial_weighted)
        except ReplicateFailure as error:
            results.append((replicate, None, type(error).__name__))
            continue
        if not all(math.isfinite(v) for v in values.values()):
            results.append((replicate, None, "NonFiniteEstimate"))
            continue
        results.append((replicate, values, None))
    return results


def _chunks(total: int, size: int) -> List[range]:
    return [range(start, min(start + size, total)) for start in range(0, total, size)]


def percentile_interval(values: np.ndarray, level: float) -> Tuple[float, float]:
    """Empirical (alpha/2, 1 - alpha/2) quantiles; endpoints are order statistics."""
    alpha = 1.0 - level
    ordered = np.sort(np.asarray(values, dtype=float))
    lower, upper = np.quantile(ordered, [alpha / 2.0, 1.0 - alpha / 2.0], method="inverted_cdf")
    return float(lower), float(upper)


def _contain_point(interval: Tuple[float, float], point: float) -> Tuple[Tuple[float, float], bool]:
    """Extend the quantile pair to cover the point estimate; the flag says whether it moved."""
    lower, upper = interval
    slack = SNAP_TOLERANCE * max(1.0, abs(point))
    widened = point < lower - slack or point > upper + slack
    return (min(lower, point), max(upper, point)), widened


def influence_wald_intervals(report: EstimateReport, level: float) -> Dict[str, Tuple[float, float]]:
    z = float(norm.ppf(0.5 + level / 2.0))
    points = report.point_values()
    intervals = {}
    for label, variance in report.variances.items():
        half_width = z * math.sqrt(max(variance, 0.0))
        intervals[label] = (points[label] - half_width, points[label] + half_width)
    return intervals


def bootstrap_ci(
    table: ObservationTable,
    kind: EstimatorKind,
    spec: NuisanceSpec,
    arms: Sequence[int],
    contrasts: Sequence[Tuple[int, int]] = (),
    config: BootstrapConfig = BootstrapConfig(),
    *,
    trial_weighted: Sequence[Tuple[int, int]] = (),
    with_benchmark: bool = False,
) -> EstimateReport:
    """Point estimates from the original data with percentile bootstrap intervals.

    Every replicate resamples rows, refits all nuisance models and recomputes
    every requested quantity. Replicates whose fit or estimate fails are excluded
    and counted; exceeding ``config.max_failure_rate`` raises ``InferenceError``.
    An interval whose quantile pair misses the point estimate is extended to cover
    it, and the original pair is kept under ``metadata["widened_intervals"]``.
    """
    kind = EstimatorKind(kind)
    arms = tuple(int(a) for a in arms)
    contrasts = tuple((int(a), int(b)) for a, b in contrasts)
    trial_weighted = tuple((int(a), int(b)) for a, b in trial_weighted)
    levels = table.treatment_levels

    bundle = fit_nuisance_bundle(table, spec, levels)
    report = estimate(
        table,
        bundle,
        kind,
        arms,
        contrasts,
        trial_weighted=trial_weighted,
        with_variance=kind is EstimatorKind.AUGMENTED,
        with_benchmark=with_benchmark,
    )
    reported_arms = tuple(report.estimates)

    LOGGER.info(
        "Running %d %s bootstrap replicates for the %s estimator",
        config.replicates,
        config.scheme.value,
        kind.value,
    )
    chunk_results = Parallel(n_jobs=config.n_jobs)(
        delayed(_run_chunk)(table, kind, spec, levels, reported_arms, contrasts, trial_weighted, config, chunk)
        for chunk in _chunks(config.replicates, CHUNK_SIZE)
    )
    results = sorted((item for chunk in chunk_results for item in chunk), key=lambda item: item[0])

    failures = Counter(reason for _, values, reason in results if values is None)
    n_failed = sum(failures.values())
    if n_failed > config.max_failure_rate * config.replicates:
        raise InferenceError(
            f"{n_failed} of {config.replicates} bootstrap replicates failed ({dict(failures)}); "
            "try the stratified_by_R scheme or simpler working models"
        )
    if n_failed:
        LOGGER.warning("Excluded %d failed bootstrap replicates: %s", n_failed, dict(failures))

    successful = [values for _, values, _ in results if values is not None]
    points = report.point_values()
    intervals = {}
    widened: Dict[str, List[float]] = {}
    for label, point in points.items():
        replicate_values = np.array([values[label] for values in successful])
        quantiles = percentile_interval(replicate_values, config.level)
        intervals[label], moved = _contain_point(quantiles, point)
        if moved:
            # a skewed or short replicate distribution can miss the original-data estimate
            LOGGER.warning(
                "Percentile interval [%.6g, %.6g] for %s excludes the point estimate %.6g; widened to cover it",
                quantiles[0],
                quantiles[1],
                label,
                point,
            )
            widened[label] = list(quantiles)

    metadata = dict(report.metadata)
    metadata.update(
        {
            "ci_method": "percentile",
            "ci_level": config.level,
            "bootstrap_replicates": config.replicates,
            "bootstrap_failures": n_failed,
            "bootstrap_failure_reasons": dict(sorted(failures.items())),
            "bootstrap_scheme": config.scheme.value,
            "master_seed": config.master_seed,
            "widened_intervals": widened,
        }
    )
    if report.variances:
        metadata["influence_wald_intervals"] = {
            label: list(bounds) for label, bounds in influence_wald_intervals(report, config.level).items()
        }
    return replace(report, intervals=intervals, metadata=metadata)


__all__ = [
    "BootstrapConfig",
    "ResamplingScheme",
    "bootstrap_ci",
    "influence_wald_intervals",
    "percentile_interval",
    "resample_indices",
]
