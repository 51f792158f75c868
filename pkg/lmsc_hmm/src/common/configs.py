import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, Union

from lmsc_hmm import CONFIG_PATH
from lmsc_hmm.src.common.exceptions import ConfigError

log = logging.getLogger(__name__)


def load_json_config(config_file: Union[str, Path]) -> Dict[str, Any]:
    """
    Loads a JSON configuration file.

    Args:
        config_file (Union[str, Path]): Path to the JSON file.

    Returns:
        dict: Configuration as a dictionary.

    Raises:
        ConfigError: If the file is missing or is not valid JSON.
    """
    config_file = Path(config_file)

    try:
        with config_file.open("r", encoding="utf-8") as file:
            config = json.load(file)
    except FileNotFoundError as e:
        log.error(f"Configuration file not found: {config_file}")
        raise ConfigError(f"Configuration file not found: {config_file}") from e
    except json.JSONDecodeError as e:
        log.error(f"Error parsing configuration file '{config_file}': {e}")
        raise ConfigError(f"Invalid JSON in '{config_file}': {e}") from e

    if not isinstance(config, dict):
        raise ConfigError(f"Configuration '{config_file}' must hold a JSON object.")

    return config


def default_config_path(mode: str) -> Path:
    """
    Returns the path of the bundled default config for an experiment mode.
    """
    return Path(CONFIG_PATH) / f"{mode.replace('-', '_')}.json"


def config_hash(config: Dict[str, Any]) -> str:
    """
    Hashes the canonical JSON form of a configuration.

    Keys are sorted and separators compacted so semantically equal configs
    hash equally regardless of how the file was formatted.
    """
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]
