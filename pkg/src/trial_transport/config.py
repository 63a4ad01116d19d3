"""Scenario grid files: flat, typed TOML key/value pairs."""

from __future__ import annotations

import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, replace
from itertools import product
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple

from .errors import ConfigError
from .simulation import (
    DEFAULT_REPLICATIONS,
    DESK_REPLICATIONS,
    ScenarioConfig,
    standard_grid,
)

LOGGER = logging.getLogger(__name__)

PRESETS = {"standard": DEFAULT_REPLICATIONS, "desk": DESK_REPLICATIONS}

INT_KEYS = ("replications", "master_seed", "calibration_size", "calibration_seed", "oracle_draw_size")
FLOAT_KEYS = ("correlation",)
STRING_KEYS = ("preset",)
AXIS_KEYS = {"n": int, "n_trial_total": int, "balanced": bool, "txam_varies": bool}
VECTOR_KEYS = ("selection_slopes", "gamma_slopes", "zeta_slopes", "theta0", "theta1")
LIST_STRING_KEYS = ("estimators",)
KNOWN_KEYS = frozenset(INT_KEYS + FLOAT_KEYS + STRING_KEYS + tuple(AXIS_KEYS) + VECTOR_KEYS + LIST_STRING_KEYS)

DEFAULT_AXES: Dict[str, Tuple[Any, ...]] = {
    "n": (10000, 100000),
    "n_trial_total": (1000, 2000, 5000),
    "balanced": (True, False),
    "txam_varies": (False, True),
}


@dataclass(frozen=True)
class GridConfig:
    scenarios: Tuple[ScenarioConfig, ...]
    estimators: Tuple[str, ...] = ("standard",)
    replications: int = DEFAULT_REPLICATIONS
    master_seed: int = 0

    def with_overrides(self, replications: Optional[int] = None, master_seed: Optional[int] = None) -> "GridConfig":
        replications = self.replications if replications is None else int(replications)
        master_seed = self.master_seed if master_seed is None else int(master_seed)
        scenarios = tuple(replace(s, replications=replications, master_seed=master_seed) for s in self.scenarios)
        return GridConfig(scenarios, self.estimators, replications, master_seed)


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _check_scalar(key: str, value: Any) -> Any:
    if key in INT_KEYS:
        if not _is_int(value):
            raise ConfigError(f"config key '{key}' must be an integer", key=key)
        return value
    if key in FLOAT_KEYS:
        if not (_is_int(value) or isinstance(value, float)):
            raise ConfigError(f"config key '{key}' must be a number", key=key)
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(f"config key '{key}' must be a string", key=key)
    if key == "preset" and value not in PRESETS:
        raise ConfigError(f"config key 'preset' must be one of {sorted(PRESETS)}", key=key)
    return value


def _check_axis(key: str, value: Any) -> Tuple[Any, ...]:
    values = value if isinstance(value, list) else [value]
    expected = AXIS_KEYS[key]
    for item in values:
        valid = isinstance(item, bool) if expected is bool else _is_int(item)
        if not valid:
            raise ConfigError(f"config key '{key}' must hold {expected.__name__} values", key=key)
    if not values:
        raise ConfigError(f"config key '{key}' must not be empty", key=key)
    return tuple(values)


def _check_vector(key: str, value: Any) -> Tuple[float, ...]:
    if not isinstance(value, list) or not all(_is_int(v) or isinstance(v, float) for v in value):
        raise ConfigError(f"config key '{key}' must be a list of numbers", key=key)
    return tuple(float(v) for v in value)


def grid_from_mapping(payload: Mapping[str, Any]) -> GridConfig:
    """Validate a parsed grid document and expand its axes into scenarios."""
    unknown = sorted(set(payload) - KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"unknown config key '{unknown[0]}'", key=unknown[0])

    scalars: Dict[str, Any] = {}
    for key in INT_KEYS + FLOAT_KEYS + STRING_KEYS:
        if key in payload:
            scalars[key] = _check_scalar(key, payload[key])
    axes = {key: _check_axis(key, payload[key]) if key in payload else DEFAULT_AXES[key] for key in AXIS_KEYS}
    vectors = {key: _check_vector(key, payload[key]) for key in VECTOR_KEYS if key in payload}
    estimators: Tuple[str, ...] = ("standard",)
    if "estimators" in payload:
        value = payload["estimators"]
        if not isinstance(value, list) or not value or not all(isinstance(v, str) for v in value):
            raise ConfigError("config key 'estimators' must be a non-empty list of names", key="estimators")
        estimators = tuple(value)

    preset = scalars.pop("preset", "standard")
    replications = scalars.pop("replications", PRESETS[preset])
    master_seed = scalars.pop("master_seed", 0)
    scenarios = tuple(
        ScenarioConfig(
            n=n,
            n_trial_total=total,
            balanced=balanced,
            txam_varies=varies,
            replications=replications,
            master_seed=master_seed,
            **scalars,
            **vectors,
        )
        for n, total, balanced, varies in product(
            axes["n"], axes["n_trial_total"], axes["balanced"], axes["txam_varies"]
        )
    )
    return GridConfig(scenarios=scenarios, estimators=estimators, replications=replications, master_seed=master_seed)


def load_grid(path: Optional[Path | str] = None) -> GridConfig:
    """Read a grid file; without one, the 24 standard scenarios are used."""
    if path is None:
        return GridConfig(scenarios=tuple(standard_grid()))
    path = Path(path)
    try:
        with path.open("rb") as handle:
            payload = tomllib.load(handle)
    except FileNotFoundError:
        raise ConfigError(f"grid file {path} does not exist") from None
    except tomllib.TOMLDecodeError as error:
        raise ConfigError(f"grid file {path} is not valid TOML: {error}") from error
    grid = grid_from_mapping(payload)
    LOGGER.info("Loaded %d scenarios from %s", len(grid.scenarios), path)
    return grid


__all__ = ["GridConfig", "PRESETS", "grid_from_mapping", "load_grid"]
