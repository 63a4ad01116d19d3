"""Diagnostic test of equal conditional outcome means across trials within an arm."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg
from scipy.stats import f as f_distribution

from .data_model import ObservationTable
from .errors import DesignError, NotApplicableError, SingularDesignError
from .nuisance import check_full_rank, design_matrix, resolve_index

LOGGER = logging.getLogger(__name__)

SUPPORT_NOTE = (
    "The restriction concerns covariate patterns that occur in the target population; "
    "this parametric test pools all trial rows and cannot restrict itself to the target support. "
    "Treat the result as diagnostic evidence, not as a gate."
)


@dataclass(frozen=True)
class HomogeneityReport:
    level: int
    statistic: float
    df_numerator: int
    df_denominator: int
    p_value: float
    rss_restricted: float
    rss_expanded: float
    reference_trial: int
    trials: Tuple[int, ...]
    n_rows: int
    deviations: Dict[int, Dict[str, float]] = field(default_factory=dict)
    note: str = SUPPORT_NOTE

    def to_dict(self) -> Dict[str, object]:
        return {
            "treatment_level": self.level,
            "statistic": self.statistic,
            "df_numerator": self.df_numerator,
            "df_denominator": self.df_denominator,
            "p_value": self.p_value,
            "rss_restricted": self.rss_restricted,
            "rss_expanded": self.rss_expanded,
            "reference_trial": self.reference_trial,
            "trials": list(self.trials),
            "n_rows": self.n_rows,
            "deviations": {str(s): values for s, values in self.deviations.items()},
            "note": self.note,
        }


def _residual_sum_of_squares(design: np.ndarray, y: np.ndarray) -> Tuple[float, np.ndarray]:
    coefficients, *_ = linalg.lstsq(design, y)
    residuals = y - design @ coefficients
    return float(residuals @ residuals), coefficients


def test_mean_homogeneity(
    table: ObservationTable,
    a: int,
    design: Optional[Sequence[int]] = None,
) -> HomogeneityReport:
    """Nested-model F test of E[Y | X, S = s, R = 1, A = a] being equal across trials.

    The restricted model is intercept plus the ``design`` covariates; the expanded
    model adds trial indicators and trial-by-covariate interactions, with the
    smallest trial id as reference.
    """
    rows = table.arm_mask(a)
    trials = tuple(int(s) for s in np.unique(table.trial_id[rows]))
    if len(trials) < 2:
        raise NotApplicableError(
            f"treatment level {a} occurs in {len(trials)} trial(s); the homogeneity test needs at least 2"
        )
    index = resolve_index(table.p, design)
    names = [table.covariate_names[j] for j in index]
    y = table.outcome[rows]
    restricted = design_matrix(table.covariates[rows], index)
    membership = table.trial_id[rows]

    blocks = [restricted]
    labels = ["intercept", *names]
    reference, others = trials[0], trials[1:]
    for trial in others:
        indicator = (membership == trial).astype(float)
        blocks.append(indicator[:, None])
        blocks.append(indicator[:, None] * restricted[:, 1:])
        labels.extend([f"trial{trial}", *(f"trial{trial}:{name}" for name in names)])
    expanded = np.column_stack(blocks)

    try:
        check_full_rank(expanded, labels)
    except SingularDesignError as error:
        raise DesignError(f"expanded homogeneity design for arm {a} is rank deficient: {error}") from error
    df_numerator = expanded.shape[1] - restricted.shape[1]
    df_denominator = expanded.shape[0] - expanded.shape[1]
    if df_denominator <= 0:
        raise DesignError(f"arm {a} has too few trial rows ({expanded.shape[0]}) for the expanded design")

    rss_restricted, _ = _residual_sum_of_squares(restricted, y)
    rss_expanded, coefficients = _residual_sum_of_squares(expanded, y)
    rss_restricted = max(rss_restricted, rss_expanded)
    if rss_expanded <= 0.0:
        statistic, p_value = float("inf"), 0.0
    else:
        statistic = ((rss_restricted - rss_expanded) / df_numerator) / (rss_expanded / df_denominator)
        p_value = float(f_distribution.sf(statistic, df_numerator, df_denominator))

    width = restricted.shape[1]
    deviations: Dict[int, Dict[str, float]] = {}
    for position, trial in enumerate(others):
        start = width + position * width
        block = coefficients[start : start + width]
        deviations[trial] = {"intercept": float(block[0])}
        deviations[trial].update({name: float(value) for name, value in zip(names, block[1:])})

    LOGGER.info(
        "Homogeneity test for arm %s across trials %s: F=%.4g on (%d, %d) df, p=%.4g",
        a,
        list(trials),
        statistic,
        df_numerator,
        df_denominator,
        p_value,
    )
    return HomogeneityReport(
        level=int(a),
        statistic=float(statistic),
        df_numerator=df_numerator,
        df_denominator=df_denominator,
        p_value=p_value,
        rss_restricted=rss_restricted,
        rss_expanded=rss_expanded,
        reference_trial=reference,
        trials=trials,
        n_rows=int(rows.sum()),
        deviations=deviations,
    )


__all__ = ["HomogeneityReport", "SUPPORT_NOTE", "test_mean_homogeneity"]

# not a pytest test despite the name
test_mean_homogeneity.__test__ = False  # type: ignore[attr-defined]
