"""
Experiment configuration: loading, validation and model construction.

Every config is a JSON object with `"schema": 1`, a `"mode"` and a `"seed"`;
the remaining keys depend on the mode (see the bundled defaults in
`lmsc_hmm/src/cli/configs/`). The config hash is taken over the effective
settings, after command-line overrides.
"""
import copy
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from lmsc_hmm.src.common.configs import (config_hash, default_config_path,
                                         load_json_config)
from lmsc_hmm.src.common.exceptions import ConfigError, InvalidInputError
from lmsc_hmm.src.distributions.families import (FAMILIES,
                                                 EmissionDistribution,
                                                 distribution_from_dict)
from lmsc_hmm.src.fitting.annealing import SaConfig
from lmsc_hmm.src.hmm.model import BW_STARTS
from lmsc_hmm.src.markov.chain import MarkovChain, stationary_distribution

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
MODES = ("simulate", "fit-bw", "baseline", "sweep", "curve-fit", "pipeline")
METHOD_PATTERN = re.compile(r"^(BW|T[1-9][0-9]*)$")

# Settings that change how a run executes but not what it computes.
EXECUTION_KEYS = ("workers",)
AMPLITUDE_UNITS = ("auto", "linear", "db")


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Validated settings of one experiment run.

    Attributes:
        mode (str): One of `MODES`.
        settings (Dict[str, Any]): The effective JSON object, overrides applied.
        source (Optional[str]): File the settings were read from.
    """
    mode: str
    settings: Dict[str, Any] = field(default_factory=dict)
    source: Optional[str] = None

    @property
    def seed(self) -> int:
        return int(self.settings["seed"])

    @property
    def config_hash(self) -> str:
        return config_hash({k: v for k, v in self.settings.items() if k not in EXECUTION_KEYS})

    def section(self, name: str) -> Dict[str, Any]:
        value = self.settings.get(name) or {}
        if not isinstance(value, dict):
            raise ConfigError(f"'{name}' must be a JSON object.")
        return value

    def get(self, name: str, default: Any = None) -> Any:
        return self.settings.get(name, default)


def load_experiment_config(
        path: Optional[Union[str, Path]],
        mode: str,
        overrides: Optional[Dict[str, Any]] = None,
) -> ExperimentConfig:
    """
    Reads, overrides and validates an experiment config.

    Args:
        path (Optional[Union[str, Path]]): Config file; the bundled default for `mode` when None.
        mode (str): Subcommand being run; must match the file's `mode`.
        overrides (Optional[Dict[str, Any]]): Top-level keys replaced before validation,
            None values are ignored.

    Returns:
        ExperimentConfig: The validated config.

    Raises:
        ConfigError: If the file cannot be read or a setting is invalid.
    """
    path = Path(path) if path is not None else default_config_path(mode)
    settings = load_json_config(path)
    for key, value in (overrides or {}).items():
        if value is not None:
            settings[key] = value

    settings.setdefault("mode", mode)
    config = ExperimentConfig(mode=mode, settings=settings, source=str(path))
    validate_config(config)

    log.info(f"Loaded {mode} config from '{path}' (hash {config.config_hash}, seed {config.seed}).")

    return config


def from_settings(settings: Dict[str, Any]) -> ExperimentConfig:
    """
    Builds and validates a config from an in-memory JSON object.
    """
    settings = copy.deepcopy(settings)
    config = ExperimentConfig(mode=str(settings.get("mode", "")), settings=settings)
    validate_config(config)
    return config


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and np.isfinite(value)


def _check_int(settings: Dict[str, Any], key: str, minimum: int, default: Optional[int] = None) -> None:
    value = settings.get(key, default)
    _require(_is_int(value) and value >= minimum, f"'{key}' must be an integer >= {minimum}, got {value!r}.")


def _check_bw(section: Dict[str, Any]) -> None:
    _check_int(section, "max_iters", 1, default=100)
    tol = section.get("tol", 1e-6)
    _require(_is_number(tol) and tol > 0, f"'bw.tol' must be positive, got {tol!r}.")
    stay = section.get("stay", 0.5)
    _require(_is_number(stay) and 0 < stay < 1, f"'bw.stay' must lie in (0, 1), got {stay!r}.")
    _check_int(section, "restarts", 1, default=1)
    start = section.get("start", "uniform")
    _require(start in BW_STARTS, f"'bw.start' must be one of {list(BW_STARTS)}, got {start!r}.")


def _check_families(families: Any) -> None:
    _require(isinstance(families, list) and len(families) >= 1, "'families' must be a non-empty list.")
    unknown = [f for f in families if str(f).lower() not in FAMILIES]
    _require(not unknown, f"Unknown families {unknown}, expected some of {sorted(FAMILIES)}.")


def _check_trace(section: Dict[str, Any]) -> None:
    spacing = section.get("spacing_m", 1.0)
    _require(_is_number(spacing) and spacing > 0, f"'trace.spacing_m' must be positive, got {spacing!r}.")
    path = section.get("path")
    _require(path is None or isinstance(path, str), f"'trace.path' must be a string or null, got {path!r}.")
    unit = section.get("amplitude_unit", "auto")
    _require(unit in AMPLITUDE_UNITS, f"'trace.amplitude_unit' must be one of {list(AMPLITUDE_UNITS)}, got {unit!r}.")
    if path is None:
        synthetic = section.get("synthetic") or {}
        _check_int(synthetic, "n", 2, default=2)
        raw = synthetic.get("sample_spacing_m", 0.25)
        _require(_is_number(raw) and raw > 0, f"'trace.synthetic.sample_spacing_m' must be positive, got {raw!r}.")
        rho = synthetic.get("correlation", 0.0)
        _require(_is_number(rho) and -1 < rho < 1, f"'trace.synthetic.correlation' must lie in (-1, 1), got {rho!r}.")


def _check_fit_inputs(config: ExperimentConfig) -> None:
    observations = config.get("observations")
    _require(
        observations is None or isinstance(observations, str),
        f"'observations' must be a file path or null, got {observations!r}.",
    )
    model = config.section("model")
    _require("emissions" in model, "'model.emissions' is required.")
    emissions_from_spec(model["emissions"])
    if observations is None:
        _check_int(config.settings, "n", 2)
        chain_from_spec(model)


def validate_config(config: ExperimentConfig) -> None:
    """
    Checks the mode-specific keys and their documented ranges.

    Model specs are parsed once here so that bad matrices or densities are
    reported as config errors before any work starts.

    Raises:
        ConfigError: On the first invalid setting.
    """
    settings = config.settings
    _require(settings.get("schema") == SCHEMA_VERSION, f"Unsupported config schema {settings.get('schema')!r}, expected {SCHEMA_VERSION}.")
    _require(config.mode in MODES, f"Unknown mode '{config.mode}', expected one of {list(MODES)}.")
    _require(
        settings.get("mode") == config.mode,
        f"Config is for mode '{settings.get('mode')}' but '{config.mode}' was requested.",
    )
    _require(_is_int(settings.get("seed")) and settings["seed"] >= 0, f"'seed' must be a non-negative integer, got {settings.get('seed')!r}.")
    _check_int(settings, "workers", 1, default=1)

    if config.mode == "simulate":
        _check_int(settings, "n", 1)
        model = config.section("model")
        chain = chain_from_spec(model)
        _require(len(emissions_from_spec(model.get("emissions"))) == chain.m, "'model' needs one emission per state.")

    elif config.mode == "fit-bw":
        _check_fit_inputs(config)
        _check_bw(config.section("bw"))
        init = config.section("init")
        if "transition_matrix" in init:
            chain_from_spec(init)

    elif config.mode == "baseline":
        _check_fit_inputs(config)
        spans = settings.get("spans", [1, 10, 20])
        _require(
            isinstance(spans, list) and spans and all(_is_int(s) and s >= 1 for s in spans),
            f"'spans' must be a non-empty list of integers >= 1, got {spans!r}.",
        )
        thresholds = settings.get("thresholds")
        _require(
            thresholds is None or (isinstance(thresholds, list) and all(_is_number(t) for t in thresholds)),
            f"'thresholds' must be a list of numbers or null, got {thresholds!r}.",
        )

    elif config.mode == "sweep":
        _check_int(settings, "n", 2)
        grid = settings.get("mu1_grid")
        mu2, sigma = settings.get("mu2", 1.0), settings.get("sigma", 0.2)
        _require(_is_number(mu2), f"'mu2' must be a number, got {mu2!r}.")
        _require(_is_number(sigma) and sigma > 0, f"'sigma' must be positive, got {sigma!r}.")
        _require(
            isinstance(grid, list) and grid and all(_is_number(v) and v < mu2 for v in grid),
            f"'mu1_grid' must be a non-empty list of numbers below mu2={mu2}, got {grid!r}.",
        )
        methods = settings.get("methods", ["BW", "T1", "T10", "T20"])
        _require(
            isinstance(methods, list) and methods and all(isinstance(m, str) and METHOD_PATTERN.match(m) for m in methods),
            f"'methods' must list 'BW' and/or 'T<span>' entries, got {methods!r}.",
        )
        _require(chain_from_spec(config.section("chain")).m == 2, "'chain' must have two states.")
        _check_bw(config.section("bw"))

    elif config.mode in ("curve-fit", "pipeline"):
        _check_families(settings.get("families"))
        _check_trace(config.section("trace"))
        _check_int(settings, "bins", 1, default=100)
        _check_int(settings, "restarts", 1, default=1)
        ceiling = settings.get("objective_ceiling")
        _require(ceiling is None or (_is_number(ceiling) and ceiling > 0), f"'objective_ceiling' must be positive or null, got {ceiling!r}.")
        annealing = config.section("annealing")
        _require("seed" not in annealing, "'annealing.seed' is derived from 'seed' and cannot be set.")
        try:
            SaConfig.from_dict(annealing)
        except (InvalidInputError, TypeError) as e:
            raise ConfigError(f"Invalid annealing settings: {e}") from e
        if config.mode == "pipeline":
            _check_bw(config.section("bw"))
            spans = settings.get("baseline_spans", [1, 10])
            _require(
                isinstance(spans, list) and all(_is_int(s) and s >= 1 for s in spans),
                f"'baseline_spans' must be a list of integers >= 1, got {spans!r}.",
            )
            minimum = settings.get("min_state_duration_m")
            _require(minimum is None or (_is_number(minimum) and minimum > 0), f"'min_state_duration_m' must be positive or null, got {minimum!r}.")


def chain_from_spec(spec: Dict[str, Any]) -> MarkovChain:
    """
    Builds a chain from `transition_matrix` and optional `initial_probabilities`.

    Without initial probabilities the chain starts from its stationary distribution.

    Raises:
        ConfigError: If the matrix or probabilities are invalid.
    """
    try:
        p_matrix = np.asarray(spec["transition_matrix"], dtype=float)
        initial = spec.get("initial_probabilities")
        if initial is None:
            m = p_matrix.shape[0] if p_matrix.ndim == 2 else 0
            provisional = MarkovChain(p_matrix, np.full(m, 1.0 / max(m, 1)))
            initial = stationary_distribution(provisional)
        return MarkovChain(p_matrix, initial)
    except KeyError as e:
        raise ConfigError(f"Markov chain spec is missing {e}.") from e
    except (InvalidInputError, TypeError, ValueError, ArithmeticError) as e:
        raise ConfigError(f"Invalid Markov chain spec: {e}") from e


def emissions_from_spec(items: Optional[Sequence[Dict[str, Any]]]) -> Tuple[EmissionDistribution, ...]:
    """
    Parses a list of `{"type": ..., <params>}` emission densities.

    Raises:
        ConfigError: If the list is empty or an entry is invalid.
    """
    if not isinstance(items, list) or not items:
        raise ConfigError("'emissions' must be a non-empty list.")
    try:
        return tuple(distribution_from_dict(item) for item in items)
    except (ValueError, TypeError, AttributeError) as e:
        raise ConfigError(f"Invalid emission spec: {e}") from e


def sweep_methods(config: ExperimentConfig) -> List[str]:
    return list(config.get("methods", ["BW", "T1", "T10", "T20"]))


def method_span(method: str) -> int:
    """
    Filter span of a threshold method name, e.g. 'T10' -> 10.
    """
    return int(method[1:])
