"""Application configuration management"""

from pathlib import Path
from dataclasses import dataclass
from typing import Optional, Dict
import logging

from .settings import AppSettings

logger = logging.getLogger(__name__)


@dataclass
class AppConfig:
    """Application configuration settings"""

    # Core settings
    settings: AppSettings
    base_dir: Path

    # Directory paths derived from settings
    config_dir: Path
    cache_dir: Path
    plans_dir: Path
    reports_dir: Path
    logs_dir: Path

    @classmethod
    def create_default(cls, base_dir: Optional[Path] = None) -> 'AppConfig':
        """Create default configuration"""
        if base_dir is None:
            base_dir = AppSettings().base_dir
        base_dir = Path(base_dir)

        config_dir = base_dir / "config"
        settings_path = config_dir / "settings.json"
        settings = AppSettings.load_from_file(settings_path)
        if not settings_path.exists():
            settings = AppSettings(base_dir=base_dir)

        config = cls(
            settings=settings,
            base_dir=base_dir,
            config_dir=config_dir,
            cache_dir=settings.cache_dir,
            plans_dir=settings.cache_dir / "plans",
            reports_dir=settings.reports_dir,
            logs_dir=settings.logs_dir,
        )

        config.ensure_directories()

        # Save settings if they were created from defaults
        if not settings_path.exists():
            settings.save_to_file(settings_path)

        return config

    @property
    def settings_path(self) -> Path:
        return self.config_dir / "settings.json"

    def ensure_directories(self) -> None:
        """Ensure all required directories exist"""
        try:
            for dir_path in [self.config_dir, self.plans_dir]:
                dir_path.mkdir(parents=True, exist_ok=True)
            self.settings.ensure_directories()
        except Exception as e:
            logger.error(f"Error ensuring directories: {e}")
            raise

    def validate_paths(self) -> Dict[str, bool]:
        """Validate existence of all configured paths"""
        try:
            core_paths = {
                'config_dir': self.config_dir.exists(),
                'plans_dir': self.plans_dir.exists(),
            }
            return {**core_paths, **self.settings.validate_paths()}
        except Exception as e:
            logger.error(f"Error validating paths: {e}")
            return {}
