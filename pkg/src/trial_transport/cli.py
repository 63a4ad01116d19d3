"""Command-line interface: estimate, simulate and diagnose."""

from __future__ import annotations

import json
import logging
from functools import wraps
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from .config import load_grid
from .data_model import CsvSchema, load_csv
from .diagnostics import test_mean_homogeneity
from .errors import TransportError, ValidationError, exit_code_for
from .estimators import EstimatorKind, estimate
from .inference import BootstrapConfig, ResamplingScheme, bootstrap_ci
from .pipeline import NuisanceSpec, TreatmentSource, fit_nuisance_bundle
from .report import provenance, write_estimate_report, write_homogeneity_reports, write_simulation_summary
from .simulation import DESK_REPLICATIONS, resolve_estimators, run_grid

app = typer.Typer(add_completion=False, help="Transport trial findings to a target population.")
console = Console()
LOGGER = logging.getLogger(__name__)


def _configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


def _fail(error: BaseException) -> None:
    code = exit_code_for(error)
    detail = {
        "error": type(error).__name__,
        "message": getattr(error, "message", str(error)),
        "exit_code": code,
        "row": getattr(error, "row", None),
    }
    if getattr(error, "key", None) is not None:
        detail["key"] = error.key  # type: ignore[attr-defined]
    typer.echo(json.dumps(detail, sort_keys=True), err=True)
    raise typer.Exit(code)


def _reporting_errors(command: Callable[..., None]) -> Callable[..., None]:
    """Map library errors onto exit codes with a JSON line on stderr."""

    @wraps(command)
    def wrapper(*args: Any, **kwargs: Any) -> None:
        try:
            command(*args, **kwargs)
        except (TransportError, OSError) as error:
            _fail(error)

    return wrapper


def _parse_pair(text: str) -> Tuple[int, int]:
    parts = [part.strip() for part in text.split(",")]
    if len(parts) != 2:
        raise ValidationError(f"expected 'a,b' for a treatment pair, got {text!r}")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError:
        raise ValidationError(f"treatment codes in {text!r} must be integers") from None


def _parse_design(text: Optional[str], names: Sequence[str]) -> Optional[Tuple[int, ...]]:
    """'all' selects every covariate, 'none' none; otherwise comma-separated names or indices."""
    if text is None or text.strip().lower() == "all":
        return None
    if text.strip().lower() == "none":
        return ()
    index = []
    for token in (t.strip() for t in text.split(",") if t.strip()):
        if token in names:
            index.append(list(names).index(token))
        elif token.isdigit() and int(token) < len(names):
            index.append(int(token))
        else:
            raise ValidationError(f"unknown covariate {token!r} in design {text!r}")
    return tuple(index)


def _parse_probabilities(items: Sequence[str]) -> Optional[Dict[int, float]]:
    if not items:
        return None
    probabilities = {}
    for item in items:
        level, _, value = item.partition("=")
        try:
            probabilities[int(level)] = float(value)
        except ValueError:
            raise ValidationError(f"expected 'level=probability', got {item!r}") from None
    return probabilities


def _parse_trial_probabilities(items: Sequence[str]) -> Optional[Dict[int, Dict[int, float]]]:
    """'s:a=p' entries into per-trial probability tables."""
    if not items:
        return None
    tables: Dict[int, Dict[int, float]] = {}
    for item in items:
        trial, separator, rest = item.partition(":")
        if not separator:
            raise ValidationError(f"expected 'trial:level=probability', got {item!r}")
        try:
            trial_id = int(trial)
        except ValueError:
            raise ValidationError(f"trial id in {item!r} must be an integer") from None
        tables.setdefault(trial_id, {}).update(_parse_probabilities([rest]) or {})
    return tables


def _schema(
    trial_column: str, treatment_column: str, outcome_column: str, covariates: Optional[List[str]]
) -> CsvSchema:
    return CsvSchema(
        trial=trial_column,
        treatment=treatment_column,
        outcome=outcome_column,
        covariates=tuple(covariates) if covariates else None,
    )


def _default_contrasts(arms: Sequence[int]) -> List[Tuple[int, int]]:
    if len(arms) < 2:
        return []
    reference = arms[0]
    return [(a, reference) for a in arms[1:]]


def _print_estimates(report: Any) -> None:
    table = Table(title=f"{report.estimator.value} estimates (n={report.n}, target n={report.n_target})")
    table.add_column("Quantity")
    table.add_column("Estimate", justify="right")
    table.add_column("CI", justify="right")
    for label, value in report.point_values().items():
        interval = report.intervals.get(label)
        table.add_row(label, f"{value:.4f}", "" if interval is None else f"[{interval[0]:.4f}, {interval[1]:.4f}]")
    for label, value in report.benchmark.items():
        table.add_row(f"benchmark {label}", f"{value:.4f}", "")
    console.print(table)


@app.command("estimate")
@_reporting_errors
def cmd_estimate(
    input_path: Path = typer.Argument(..., help="Pooled CSV of trial and target rows."),
    output: Path = typer.Option(..., "--output", "-o", help="Where to write the JSON report."),
    estimator: EstimatorKind = typer.Option(EstimatorKind.AUGMENTED, help="Estimator for every arm."),
    arm: Optional[List[int]] = typer.Option(None, help="Treatment level to estimate (repeatable)."),
    contrast: Optional[List[str]] = typer.Option(None, help="Contrast 'a,b' meaning psi(a) - psi(b)."),
    trial_weighted: Optional[List[str]] = typer.Option(
        None, help="Trial-stratified weighting contrast 'a,b' (fits per-trial treatment models)."
    ),
    trial_column: str = typer.Option("trial"),
    treatment_column: str = typer.Option("treatment"),
    outcome_column: str = typer.Option("outcome"),
    covariate: Optional[List[str]] = typer.Option(None, help="Covariate column (repeatable; default all others)."),
    outcome_design: Optional[str] = typer.Option(None, help="'all', 'none' or comma list of covariates."),
    participation_design: Optional[str] = typer.Option(None),
    treatment_design: Optional[str] = typer.Option(None),
    treatment_source: Optional[TreatmentSource] = typer.Option(
        None, help="Treatment probability source; defaults to known when --known-probability is given, else pooled."
    ),
    known_probability: Optional[List[str]] = typer.Option(None, help="Known Pr[A=a|R=1] as 'a=p' (repeatable)."),
    trial_known_probability: Optional[List[str]] = typer.Option(
        None, help="Known Pr[A=a|S=s,R=1] as 's:a=p' (repeatable); replaces fitted per-trial models."
    ),
    benchmark: bool = typer.Option(
        False, "--benchmark", help="Also report unadjusted means of target rows that carry treatment and outcome."
    ),
    bootstrap: int = typer.Option(0, help="Bootstrap replicates; 0 skips intervals."),
    level: float = typer.Option(0.95, help="Confidence level."),
    scheme: ResamplingScheme = typer.Option(ResamplingScheme.POOLED),
    seed: int = typer.Option(0, help="Master seed for every random stream."),
    workers: int = typer.Option(1, help="Parallel workers; results do not depend on it."),
    verbose: bool = typer.Option(False, "--verbose", "-v"),
) -> None:
    """Estimate transported potential outcome means and contrasts."""
    _configure_logging(verbose)
    table = load_csv(input_path, _schema(trial_column, treatment_column, outcome_column, covariate))
    names = table.covariate_names
    arms = tuple(arm) if arm else table.treatment_levels
    contrasts = [_parse_pair(item) for item in contrast] if contrast else _default_contrasts(arms)
    rho_pairs = [_parse_pair(item) for item in trial_weighted or []]
    known = _parse_probabilities(known_probability or [])
    if treatment_source is None:
        treatment_source = TreatmentSource.KNOWN if known else TreatmentSource.POOLED
    spec = NuisanceSpec(
        outcome_covariates=_parse_design(outcome_design, names),
        participation_covariates=_parse_design(participation_design, names),
        treatment_covariates=_parse_design(treatment_design, names),
        treatment_source=treatment_source,
        known_treatment_probabilities=known,
        per_trial_known_probabilities=_parse_trial_probabilities(trial_known_probability or []),
        fit_per_trial=bool(rho_pairs),
    )

    if bootstrap > 0:
        config = BootstrapConfig(replicates=bootstrap, level=level, master_seed=seed, scheme=scheme, n_jobs=workers)
        report = bootstrap_ci(
            table, estimator, spec, arms, contrasts, config, trial_weighted=rho_pairs, with_benchmark=benchmark
        )
    else:
        bundle = fit_nuisance_bundle(table, spec)
        report = estimate(
            table,
            bundle,
            estimator,
            arms,
            contrasts,
            trial_weighted=rho_pairs,
            with_variance=estimator is EstimatorKind.AUGMENTED,
            with_benchmark=benchmark,
        )

    flags = {
        "input": input_path.name,
        "estimator": estimator.value,
        "arms": list(arms),
        "contrasts": [list(pair) for pair in contrasts],
        "trial_weighted": [list(pair) for pair in rho_pairs],
        "nuisance": spec.describe(),
        "bootstrap": bootstrap,
        "level": level,
        "scheme": scheme.value,
        "benchmark": benchmark,
    }
    write_estimate_report(report, output, provenance(seed, flags, report.nuisance_digest))
    _print_estimates(report)
    console.print(f"[green]Report written to {output}[/green]")


@app.command("simulate")
@_reporting_errors
def cmd_simulate(
    output_dir: Path = typer.Option(Path("simulation_results"), "--output-dir", "-o"),
    config: Optional[Path] = typer.Option(None, "--config", "-c", help="TOML scenario grid."),
    replications: Optional[int] = typer.Option(None, help="Override replications per scenario."),
    desk: bool = typer.Option(False, "--desk", help=f"Use the {DESK_REPLICATIONS}-replication preset."),
    seed: Optional[int] = typer.Option(None, help="Override the master seed."),
    estimators: Optional[List[str]] = typer.Option(None, help="Estimator or preset names (repeatable)."),
    workers: int = typer.Option(1, help="Parallel workers; results do not depend on it."),
    verbose: bool = typer.Option(False, "--verbose", "-v"),
) -> None:
    """Monte-Carlo bias and variance tables for a scenario grid."""
    _configure_logging(verbose)
    grid = load_grid(config)
    if desk and replications is None:
        replications = DESK_REPLICATIONS
    grid = grid.with_overrides(replications=replications, master_seed=seed)
    entries = resolve_estimators(estimators or grid.estimators)
    summary = run_grid(grid.scenarios, entries, n_jobs=workers)
    flags = {
        "config": None if config is None else config.name,
        "replications": grid.replications,
        "estimators": [entry.name for entry in entries],
        "scenarios": len(grid.scenarios),
    }
    written = write_simulation_summary(summary, output_dir, provenance(grid.master_seed, flags))
    console.print(summary.bias_table().to_string(index=False))
    console.print(f"[green]Wrote {', '.join(sorted(p.name for p in written.values()))} to {output_dir}[/green]")


@app.command("diagnose")
@_reporting_errors
def cmd_diagnose(
    input_path: Path = typer.Argument(..., help="Pooled CSV of trial and target rows."),
    output: Path = typer.Option(..., "--output", "-o"),
    arm: Optional[List[int]] = typer.Option(None, help="Treatment level to test (repeatable)."),
    design: Optional[str] = typer.Option(None, help="'all', 'none' or comma list of covariates."),
    trial_column: str = typer.Option("trial"),
    treatment_column: str = typer.Option("treatment"),
    outcome_column: str = typer.Option("outcome"),
    covariate: Optional[List[str]] = typer.Option(None),
    verbose: bool = typer.Option(False, "--verbose", "-v"),
) -> None:
    """Test whether conditional outcome means agree across trials within each arm."""
    _configure_logging(verbose)
    table = load_csv(input_path, _schema(trial_column, treatment_column, outcome_column, covariate))
    index = _parse_design(design, table.covariate_names)
    arms = tuple(arm) if arm else table.treatment_levels
    reports = {a: test_mean_homogeneity(table, a, index) for a in arms}
    flags = {"input": input_path.name, "arms": list(arms), "design": "all" if index is None else list(index)}
    write_homogeneity_reports(reports, output, provenance(None, flags))
    for a, result in reports.items():
        console.print(
            f"arm {a}: F={result.statistic:.4f} on ({result.df_numerator}, {result.df_denominator}) df, "
            f"p={result.p_value:.4g}"
        )
    console.print(f"[dim]{reports[arms[0]].note}[/dim]")


if __name__ == "__main__":
    app()
