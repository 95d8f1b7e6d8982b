import logging
from pathlib import Path
from typing import List, Optional

from core.domain.repositories.plan_repository import PlanRepository
from core.domain.entities.bat_matrices import BatMatPlan
from core.domain.exceptions import SerializationError
from ...infrastructure.config.app_config import AppConfig

logger = logging.getLogger(__name__)

PLAN_SUFFIX = '.batp'


class LocalPlanRepository(PlanRepository):
    """Local filesystem implementation of the plan repository (BATP files)"""

    def __init__(self, config: AppConfig):
        self.config = config
        self.plans_dir = Path(config.plans_dir)
        self.plans_dir.mkdir(parents=True, exist_ok=True)

    def _path(self, key: str) -> Path:
        return self.plans_dir / f"{key}{PLAN_SUFFIX}"

    def save(self, key: str, plan: BatMatPlan) -> bool:
        """Write a plan as a BATP container"""
        try:
            path = self._path(key)
            tmp = path.with_suffix('.tmp')
            tmp.write_bytes(plan.to_bytes())
            tmp.replace(path)
            logger.debug(f"Stored plan {key} ({plan.nbytes} bytes)")
            return True
        except Exception as e:
            logger.error(f"Error saving plan {key}: {e}")
            return False

    def load(self, key: str) -> Optional[BatMatPlan]:
        """Read a BATP container; malformed files are dropped"""
        path = self._path(key)
        if not path.exists():
            return None
        try:
            return BatMatPlan.from_bytes(path.read_bytes())
        except SerializationError as e:
            logger.error(f"Discarding malformed plan file {path}: {e}")
            self.delete(key)
        except Exception as e:
            logger.error(f"Error loading plan {key}: {e}")
        return None

    def exists(self, key: str) -> bool:
        return self._path(key).exists()

    def delete(self, key: str) -> bool:
        try:
            path = self._path(key)
            if path.exists():
                path.unlink()
                return True
        except Exception as e:
            logger.error(f"Error deleting plan {key}: {e}")
        return False

    def list_keys(self) -> List[str]:
        return sorted(p.stem for p in self.plans_dir.glob(f"*{PLAN_SUFFIX}"))

    def total_bytes(self) -> int:
        """Disk usage of all stored plans"""
        return sum(p.stat().st_size for p in self.plans_dir.glob(f"*{PLAN_SUFFIX}"))
