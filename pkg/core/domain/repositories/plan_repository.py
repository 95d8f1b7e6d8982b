"""Repository interface for compiled BAT plans"""

from abc import ABC, abstractmethod
from typing import List, Optional

from ..entities.bat_matrices import BatMatPlan


class PlanRepository(ABC):
    """Repository interface for storing and loading compiled plans"""

    @abstractmethod
    def save(self, key: str, plan: BatMatPlan) -> bool:
        """Persist a plan under a key"""
        pass

    @abstractmethod
    def load(self, key: str) -> Optional[BatMatPlan]:
        """Load a plan by key"""
        pass

    @abstractmethod
    def exists(self, key: str) -> bool:
        """Check if a plan is stored"""
        pass

    @abstractmethod
    def delete(self, key: str) -> bool:
        """Remove a stored plan"""
        pass

    @abstractmethod
    def list_keys(self) -> List[str]:
        """Keys of all stored plans"""
        pass
