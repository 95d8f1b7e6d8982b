"""Application settings management"""

import os
from pathlib import Path
from dataclasses import dataclass, field
from typing import Dict, Any
import json
import logging

from .constants import (
    DEFAULT_PATHS,
    DEFAULT_BP,
    DEFAULT_STRATEGY,
    ENV_HOME,
    ENV_THREADS,
    ENV_LOG_LEVEL,
)
from core.domain.exceptions import ConfigurationError

logger = logging.getLogger(__name__)

_PATH_KEYS = ('base_dir', 'cache_dir', 'reports_dir', 'logs_dir')
_LOG_LEVELS = ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL')


def _default_threads() -> int:
    value = os.getenv(ENV_THREADS)
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            logger.warning(f"Ignoring non-integer {ENV_THREADS}={value!r}")
    return max(1, os.cpu_count() or 1)


@dataclass
class AppSettings:
    """Application settings with environment variable support"""

    # Directory paths with environment variable fallbacks
    base_dir: Path = field(default_factory=lambda: Path(
        os.getenv(ENV_HOME, os.path.expanduser('~/.cross_kernels'))
    ))

    # Subdirectories - all relative to base_dir
    cache_dir: Path = field(default_factory=lambda: Path(DEFAULT_PATHS['cache']))
    reports_dir: Path = field(default_factory=lambda: Path(DEFAULT_PATHS['reports']))
    logs_dir: Path = field(default_factory=lambda: Path(DEFAULT_PATHS['logs']))

    # Execution settings
    threads: int = field(default_factory=_default_threads)
    default_bp: int = DEFAULT_BP
    default_strategy: str = DEFAULT_STRATEGY

    # Cache settings
    plan_cache_enabled: bool = True
    max_cache_size_mb: int = 256

    log_level: str = field(default_factory=lambda: os.getenv(ENV_LOG_LEVEL, 'INFO').upper())

    def __post_init__(self):
        """Ensure all paths are relative to base_dir and values are sane"""
        self.base_dir = Path(self.base_dir)
        for path_attr in _PATH_KEYS[1:]:
            path = Path(getattr(self, path_attr))
            if not path.is_absolute():
                setattr(self, path_attr, self.base_dir / path)
            else:
                setattr(self, path_attr, path)
        # The environment caps whatever a saved settings file asks for
        self.threads = max(1, min(int(self.threads), _default_threads()))
        if not 1 <= self.default_bp <= 16:
            raise ConfigurationError(f"default_bp={self.default_bp} outside [1, 16]")
        self.log_level = str(self.log_level).upper()
        if self.log_level not in _LOG_LEVELS:
            raise ConfigurationError(f"Unknown log level {self.log_level!r}")

    @classmethod
    def load_from_file(cls, config_path: Path) -> 'AppSettings':
        """Load settings from a JSON configuration file"""
        try:
            if config_path.exists():
                with open(config_path) as f:
                    data = json.load(f)

                known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
                for key in _PATH_KEYS:
                    if isinstance(known.get(key), str):
                        known[key] = Path(known[key])
                return cls(**known)

        except Exception as e:
            logger.error(f"Error loading settings from {config_path}: {e}")

        # Return default settings if loading fails
        return cls()

    def save_to_file(self, config_path: Path) -> None:
        """Save settings to a JSON configuration file"""
        try:
            config_path.parent.mkdir(parents=True, exist_ok=True)
            with open(config_path, 'w') as f:
                json.dump(self.to_dict(), f, indent=4)
        except Exception as e:
            logger.error(f"Error saving settings to {config_path}: {e}")

    def to_dict(self) -> Dict[str, Any]:
        """Convert settings to a JSON-ready dictionary"""
        return {
            'base_dir': str(self.base_dir),
            'cache_dir': str(self.cache_dir),
            'reports_dir': str(self.reports_dir),
            'logs_dir': str(self.logs_dir),
            'threads': self.threads,
            'default_bp': self.default_bp,
            'default_strategy': self.default_strategy,
            'plan_cache_enabled': self.plan_cache_enabled,
            'max_cache_size_mb': self.max_cache_size_mb,
            'log_level': self.log_level,
        }

    def ensure_directories(self) -> None:
        """Ensure all required directories exist"""
        for path in [self.base_dir, self.cache_dir, self.reports_dir, self.logs_dir]:
            path.mkdir(parents=True, exist_ok=True)

    def validate_paths(self) -> Dict[str, bool]:
        """Validate existence of configured paths"""
        return {key: getattr(self, key).exists() for key in _PATH_KEYS}
