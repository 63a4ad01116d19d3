"""Serialize estimate, diagnostic and simulation results to JSON and CSV files."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, Mapping

import numpy as np

from . import get_version
from .diagnostics import HomogeneityReport
from .estimators import EstimateReport, delta_label, psi_label, rho_label
from .simulation import SimulationSummary

REPORT_FORMAT_VERSION = 1


def _ensure_dir(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    return path


def _jsonable(value: Any) -> Any:
    if isinstance(value, Mapping):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, float) and not np.isfinite(value):
        return None if np.isnan(value) else ("inf" if value > 0 else "-inf")
    if isinstance(value, Path):
        return str(value)
    return value


def provenance(seed: Any, flags: Mapping[str, Any], digests: Any = None) -> Dict[str, Any]:
    """Version, seed, nuisance digests and the echoed flags."""
    return {
        "tool_version": get_version(),
        "seed": seed,
        "nuisance_digests": digests,
        "flags": _jsonable(dict(flags)),
    }


def estimate_report_to_dict(report: EstimateReport) -> Dict[str, Any]:
    quantities = []
    points = report.point_values()
    for label, point in points.items():
        entry: Dict[str, Any] = {"quantity": label, "estimate": point}
        if label in report.variances:
            entry["variance"] = report.variances[label]
        if label in report.intervals:
            entry["ci_lower"], entry["ci_upper"] = report.intervals[label]
        quantities.append(entry)
    return {
        "format_version": REPORT_FORMAT_VERSION,
        "estimator": report.estimator.value,
        "n": report.n,
        "n_target": report.n_target,
        "pi_hat": report.pi_hat,
        "nuisance_digest": report.nuisance_digest,
        "estimates": {psi_label(a): v for a, v in report.estimates.items()},
        "contrasts": {delta_label(a, b): v for (a, b), v in report.contrasts.items()},
        "trial_weighted_contrasts": {rho_label(a, b): v for (a, b), v in report.trial_weighted_contrasts.items()},
        "benchmark": dict(report.benchmark),
        "quantities": quantities,
        "metadata": _jsonable(report.metadata),
    }


def write_json(payload: Mapping[str, Any], path: Path | str) -> Path:
    path = Path(path)
    _ensure_dir(path.parent)
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def write_estimate_report(report: EstimateReport, path: Path | str, provenance_block: Mapping[str, Any]) -> Path:
    payload = estimate_report_to_dict(report)
    payload["provenance"] = dict(provenance_block)
    return write_json(payload, path)


def write_homogeneity_reports(
    reports: Mapping[int, HomogeneityReport], path: Path | str, provenance_block: Mapping[str, Any]
) -> Path:
    payload = {
        "format_version": REPORT_FORMAT_VERSION,
        "arms": {str(a): report.to_dict() for a, report in sorted(reports.items())},
        "provenance": dict(provenance_block),
    }
    return write_json(payload, path)


def write_simulation_summary(
    summary: SimulationSummary, output_dir: Path | str, provenance_block: Mapping[str, Any]
) -> Dict[str, Path]:
    """One CSV per table (bias, variance, long form, calibration) plus a provenance JSON."""
    output_dir = _ensure_dir(Path(output_dir))
    tables = {
        "bias": summary.bias_table(),
        "variance": summary.variance_table(),
        "summary": summary.to_frame(),
        "calibration": summary.calibration_table(),
    }
    written = {}
    for name, frame in tables.items():
        path = output_dir / f"{name}.csv"
        frame.to_csv(path, index=False, lineterminator="\n", float_format="%.10g")
        written[name] = path
    written["provenance"] = write_json(dict(provenance_block), output_dir / "provenance.json")
    return written


__all__ = [
    "estimate_report_to_dict",
    "provenance",
    "write_estimate_report",
    "write_homogeneity_reports",
    "write_json",
    "write_simulation_summary",
]
