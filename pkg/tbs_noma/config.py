"""
Configuration management for tbs-noma experiments.

Handles loading and saving YAML experiment files and turning them, together
with command line overrides, into a validated ExperimentSpec.
"""

import copy
import logging
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import yaml

from .analytic import NetworkConfig
from .errors import ConfigurationError
from .simulator import MIN_TARGET_ERRORS, RelayPolicy

logger = logging.getLogger(__name__)


class Config:
    """Manages an experiment configuration file."""

    DEFAULT_CONFIG: Dict[str, Dict[str, Any]] = {
        'network': {
            'mode': 1,
            'a1': 0.1,
            'sigma_s1_db': 0.0,
            'sigma_s2_db': 0.0,
            'sigma_r_db': 0.0,
            'relay_power_ratio': 0.5,  # Pr = Ps / 2
        },
        'sweep': {
            'snr_start': 0.0,
            'snr_stop': 30.0,
            'snr_step': 5.0,
        },
        'simulation': {
            'policy': 'fixed:2',
            'seed': 2019,
            'target_errors': 2000,
            'max_bits': 100_000_000,
            'workers': 1,
            'grid_steps': 200,  # brute-force threshold grid
        },
        'output': {
            'path': 'results.csv',
        },
    }

    def __init__(self, config_path: Optional[str] = None):
        """Initialize from a YAML file, or from the defaults when no path is given."""
        self.config_path = Path(config_path) if config_path else None
        self.config = self.load()

    def load(self) -> Dict[str, Dict[str, Any]]:
        """Load configuration from file, merged over the defaults."""
        config = copy.deepcopy(self.DEFAULT_CONFIG)
        if self.config_path is None:
            return config
        if not self.config_path.exists():
            raise ConfigurationError(f"config file not found: {self.config_path}")
        try:
            with open(self.config_path, 'r') as f:
                loaded_config = yaml.safe_load(f) or {}
        except (OSError, yaml.YAMLError) as e:
            raise ConfigurationError(f"failed to load config {self.config_path}: {e}") from e
        if not isinstance(loaded_config, dict):
            raise ConfigurationError(f"{self.config_path}: top level must be a mapping")

        for section, values in loaded_config.items():
            if section not in config:
                logger.warning(f"{self.config_path}: ignoring unknown section '{section}'")
                continue
            if not isinstance(values, dict):
                raise ConfigurationError(
                    f"{self.config_path}: section '{section}' must be a mapping"
                )
            for key, value in values.items():
                if key not in config[section]:
                    logger.warning(f"{self.config_path}: ignoring unknown key '{section}.{key}'")
                    continue
                config[section][key] = value
        return config

    def save(self, path: Optional[str] = None) -> Path:
        """Save configuration to file (block-style YAML)."""
        target = Path(path) if path else self.config_path
        if target is None:
            raise ConfigurationError("no path to save the configuration to")
        try:
            target.parent.mkdir(parents=True, exist_ok=True)
            with open(target, 'w') as f:
                yaml.safe_dump(self.config, f, default_flow_style=False, sort_keys=False)
        except OSError as e:
            raise ConfigurationError(f"failed to save config to {target}: {e}") from e
        logger.info(f"Configuration saved to {target}")
        return target

    def get(self, section: str, key: str, default: Any = None) -> Any:
        """Get configuration value."""
        return self.config.get(section, {}).get(key, default)

    def set(self, section: str, key: str, value: Any) -> None:
        """Set configuration value."""
        if section not in self.config or key not in self.config[section]:
            raise ConfigurationError(f"unknown configuration key '{section}.{key}'")
        self.config[section][key] = value

    def update(self, updates: Dict[str, Dict[str, Any]]) -> None:
        """Update multiple configuration values, section by section."""
        for section, values in updates.items():
            for key, value in values.items():
                self.set(section, key, value)


# ExperimentSpec field -> (config section, config key)
_FIELD_KEYS = {
    'mode_id': ('network', 'mode'),
    'a1': ('network', 'a1'),
    'sigma2_s1_db': ('network', 'sigma_s1_db'),
    'sigma2_s2_db': ('network', 'sigma_s2_db'),
    'sigma2_r_db': ('network', 'sigma_r_db'),
    'relay_power_ratio': ('network', 'relay_power_ratio'),
    'snr_start': ('sweep', 'snr_start'),
    'snr_stop': ('sweep', 'snr_stop'),
    'snr_step': ('sweep', 'snr_step'),
    'policy': ('simulation', 'policy'),
    'seed': ('simulation', 'seed'),
    'target_errors': ('simulation', 'target_errors'),
    'max_bits': ('simulation', 'max_bits'),
    'workers': ('simulation', 'workers'),
    'grid_steps': ('simulation', 'grid_steps'),
    'output': ('output', 'path'),
}


@dataclass(frozen=True)
class ExperimentSpec:
    """One fully resolved experiment: network, SNR sweep, policy, stop rule and output."""

    mode_id: int = 1
    a1: float = 0.1
    sigma2_s1_db: float = 0.0
    sigma2_s2_db: float = 0.0
    sigma2_r_db: float = 0.0
    relay_power_ratio: float = 0.5
    snr_start: float = 0.0
    snr_stop: float = 30.0
    snr_step: float = 5.0
    policy: str = 'fixed:2'
    seed: int = 2019
    target_errors: int = 2000
    max_bits: int = 100_000_000
    workers: int = 1
    grid_steps: int = 200
    output: Path = field(default=Path('results.csv'))

    def __post_init__(self) -> None:
        if self.mode_id not in range(1, 7):
            raise ConfigurationError(f"mode must be 1..6, got {self.mode_id}")
        if not 0.0 < self.a1 < 0.5:
            raise ConfigurationError(f"a1 must lie in (0, 0.5), got {self.a1}")
        if not self.snr_step > 0.0:
            raise ConfigurationError(f"SNR step must be positive, got {self.snr_step}")
        if self.snr_stop < self.snr_start:
            raise ConfigurationError(
                f"SNR stop {self.snr_stop} dB is below start {self.snr_start} dB"
            )
        if not self.relay_power_ratio > 0.0:
            raise ConfigurationError(
                f"relay power ratio must be positive, got {self.relay_power_ratio}"
            )
        for name in ('sigma2_s1_db', 'sigma2_s2_db', 'sigma2_r_db', 'snr_start', 'snr_stop'):
            if not math.isfinite(getattr(self, name)):
                raise ConfigurationError(f"{name} must be finite")
        if self.seed < 0:
            raise ConfigurationError(f"seed must be non-negative, got {self.seed}")
        if self.target_errors < MIN_TARGET_ERRORS:
            raise ConfigurationError(
                f"target_errors must be >= {MIN_TARGET_ERRORS}, got {self.target_errors}"
            )
        if self.max_bits <= 0:
            raise ConfigurationError(f"max_bits must be positive, got {self.max_bits}")
        if self.workers < 1:
            raise ConfigurationError(f"workers must be >= 1, got {self.workers}")
        if self.grid_steps < 3:
            raise ConfigurationError(f"grid_steps must be >= 3, got {self.grid_steps}")
        # parse once so a bad descriptor fails here, not mid-campaign
        self.relay_policy()

    @classmethod
    def from_config(cls, config: Config,
                    overrides: Optional[Dict[str, Any]] = None) -> "ExperimentSpec":
        """Build a spec from a Config; non-None overrides win over file values."""
        values: Dict[str, Any] = {
            name: config.get(section, key) for name, (section, key) in _FIELD_KEYS.items()
        }
        for name, value in (overrides or {}).items():
            if name not in _FIELD_KEYS:
                raise ConfigurationError(f"unknown experiment setting '{name}'")
            if value is not None:
                values[name] = value
        try:
            return cls(
                mode_id=int(values['mode_id']),
                a1=float(values['a1']),
                sigma2_s1_db=float(values['sigma2_s1_db']),
                sigma2_s2_db=float(values['sigma2_s2_db']),
                sigma2_r_db=float(values['sigma2_r_db']),
                relay_power_ratio=float(values['relay_power_ratio']),
                snr_start=float(values['snr_start']),
                snr_stop=float(values['snr_stop']),
                snr_step=float(values['snr_step']),
                policy=str(values['policy']),
                seed=int(values['seed']),
                target_errors=int(values['target_errors']),
                max_bits=int(values['max_bits']),
                workers=int(values['workers']),
                grid_steps=int(values['grid_steps']),
                output=Path(values['output']),
            )
        except ConfigurationError:
            raise
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f"bad experiment setting: {e}") from e

    def to_config(self) -> Config:
        """Configuration holding exactly this spec (for --save-config)."""
        updates: Dict[str, Dict[str, Any]] = {}
        for f in fields(self):
            section, key = _FIELD_KEYS[f.name]
            value = getattr(self, f.name)
            updates.setdefault(section, {})[key] = str(value) if isinstance(value, Path) else value
        config = Config()
        config.update(updates)
        return config

    def relay_policy(self) -> RelayPolicy:
        return RelayPolicy.parse(self.policy)

    @property
    def a2(self) -> float:
        return 1.0 - self.a1

    def snr_points(self) -> List[float]:
        """SNR grid in dB, both ends included; start == stop gives a single point."""
        count = int(math.floor((self.snr_stop - self.snr_start) / self.snr_step + 1e-9)) + 1
        return [float(x) for x in np.round(self.snr_start + self.snr_step * np.arange(count), 10)]

    def network_config(self, snr_db: float) -> NetworkConfig:
        return NetworkConfig.from_db(
            self.a1, snr_db,
            sigma2_s1_db=self.sigma2_s1_db,
            sigma2_s2_db=self.sigma2_s2_db,
            sigma2_r_db=self.sigma2_r_db,
            relay_power_ratio=self.relay_power_ratio,
        )

    def describe(self) -> List[str]:
        """'key: value' lines describing the experiment, seed included."""
        lines = []
        for f in fields(self):
            if f.name == "workers":
                continue
            value = getattr(self, f.name)
            lines.append(f"{f.name}: {value!r}" if isinstance(value, float) else f"{f.name}: {value}")
        lines.append(f"a2: {self.a2!r}")
        return lines
