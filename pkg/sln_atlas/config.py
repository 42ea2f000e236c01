import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional

import yaml

logger = logging.getLogger("sln_atlas")

DEFAULT_CONFIG_FILE = Path(".sln-atlas.yaml")
TOL_MATCH_ENV = "SLN_ATLAS_TOL_MATCH"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Tolerances:
    tol_zero: float = 1e-9
    tol_match: float = 1e-6


def _load_config(path: Path) -> Dict[str, Any]:
    context: Dict[str, Any] = {}
    if path.exists():
        logger.debug(f"loading config from {path}")
        with open(path, "r") as f:
            try:
                context = yaml.safe_load(f) or {}
            except yaml.YAMLError as exc:
                raise ConfigError(f"{path}: {exc}") from exc
    if not isinstance(context, dict):
        raise ConfigError(f"{path}: expected a mapping at the top level")
    return context


def _positive(value: Any, source: str) -> float:
    try:
        number = float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{source}: {value!r} is not a number") from exc
    if not number > 0:
        raise ConfigError(f"{source}: tolerance must be positive, got {number}")
    return number


def load_tolerances(
    config_file: Optional[Path] = None, tol_zero: Optional[float] = None, tol_match: Optional[float] = None
) -> Tolerances:
    """ Flag > environment (tol_match only) > yaml config file > defaults """
    defaults = Tolerances()
    context = _load_config(config_file or DEFAULT_CONFIG_FILE)
    logger.debug(f"{context=}")

    resolved_zero = defaults.tol_zero
    if "tol_zero" in context:
        resolved_zero = _positive(context["tol_zero"], "config tol_zero")
    if tol_zero is not None:
        resolved_zero = _positive(tol_zero, "--tol-zero")

    resolved_match = defaults.tol_match
    if "tol_match" in context:
        resolved_match = _positive(context["tol_match"], "config tol_match")
    if (env := os.environ.get(TOL_MATCH_ENV)) is not None:
        resolved_match = _positive(env, TOL_MATCH_ENV)
    if tol_match is not None:
        resolved_match = _positive(tol_match, "--tol-match")

    tolerances = Tolerances(resolved_zero, resolved_match)
    logger.debug(f"{tolerances=}")
    return tolerances
