"""Compiled plan cache"""

import logging
from collections import OrderedDict
from threading import Lock
from typing import Any, Callable, Dict, Optional

from core.domain.entities.bat_matrices import BatMatPlan
from core.domain.repositories.plan_repository import PlanRepository

logger = logging.getLogger(__name__)


def _plan_bytes(plan: Any) -> int:
    if isinstance(plan, BatMatPlan):
        return plan.nbytes
    parts = [getattr(plan, name, None) for name in ('left', 'right', 'left_inv', 'right_inv')]
    return sum(p.nbytes for p in parts if isinstance(p, BatMatPlan))


class PlanCache:
    """LRU cache of compiled plans with an optional on-disk backing store

    BAT plans are written through to the repository; other plan types stay
    in memory only.
    """

    def __init__(self, repository: Optional[PlanRepository] = None,
                 max_size_mb: int = 256, enabled: bool = True):
        """Initialize plan cache

        Args:
            repository: Disk store for BAT plans
            max_size_mb: Memory budget for cached plans
            enabled: When False every lookup compiles
        """
        self.repository = repository
        self.max_size = max_size_mb * 1024 * 1024
        self.enabled = enabled
        self.cache_lock = Lock()
        self._entries: 'OrderedDict[str, Any]' = OrderedDict()
        self._size = 0
        self.hits = 0
        self.misses = 0

    def get(self, key: str) -> Optional[Any]:
        """Get a plan from memory, then from disk"""
        if not self.enabled:
            return None
        with self.cache_lock:
            if key in self._entries:
                self._entries.move_to_end(key)
                self.hits += 1
                return self._entries[key]
        if self.repository is not None:
            plan = self.repository.load(key)
            if plan is not None:
                logger.debug(f"Plan {key} loaded from disk")
                self.put(key, plan, persist=False)
                with self.cache_lock:
                    self.hits += 1
                return plan
        return None

    def put(self, key: str, plan: Any, persist: bool = True) -> None:
        """Put a plan into the cache, evicting least recently used entries"""
        if not self.enabled:
            return
        size = _plan_bytes(plan)
        with self.cache_lock:
            if key in self._entries:
                self._size -= _plan_bytes(self._entries.pop(key))
            self._entries[key] = plan
            self._size += size
            while self._size > self.max_size and len(self._entries) > 1:
                old_key, old = self._entries.popitem(last=False)
                self._size -= _plan_bytes(old)
                logger.debug(f"Evicted plan {old_key}")
        if persist and self.repository is not None and isinstance(plan, BatMatPlan):
            self.repository.save(key, plan)

    def get_or_compile(self, key: str, compile_fn: Callable[[], Any]) -> Any:
        """Cached plan for key, compiling and storing it on a miss"""
        plan = self.get(key)
        if plan is not None:
            logger.debug(f"Plan cache hit {key}")
            return plan
        with self.cache_lock:
            self.misses += 1
        plan = compile_fn()
        self.put(key, plan)
        return plan

    def invalidate(self, key: str) -> None:
        """Remove item from cache and disk"""
        with self.cache_lock:
            if key in self._entries:
                self._size -= _plan_bytes(self._entries.pop(key))
        if self.repository is not None:
            self.repository.delete(key)

    def clear(self) -> None:
        """Clear all in-memory plans"""
        with self.cache_lock:
            self._entries.clear()
            self._size = 0

    def stats(self) -> Dict[str, int]:
        with self.cache_lock:
            return {
                'entries': len(self._entries),
                'bytes': self._size,
                'hits': self.hits,
                'misses': self.misses,
            }

    def __len__(self) -> int:
        return len(self._entries)

    def cleanup(self) -> None:
        """Clean up resources"""
        try:
            self.clear()
        except Exception as e:
            logger.error(f"Error during cleanup: {e}")
