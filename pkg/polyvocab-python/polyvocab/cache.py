# polyvocab/cache.py
"""
Memoization of analysis results.

Dependence analysis is the expensive front half of every pipeline step, and
``analyze``, ``schedule``, ``verify`` and ``pipeline`` all need it for the same
SCoP. Results are keyed by the SCoP digest plus the analysis options.
"""

from collections import OrderedDict
from typing import Any, Hashable, Optional


class AnalysisCache:
    """
    Size-bounded least-recently-used cache.

    Values are treated as immutable; callers must not mutate what they get back.
    """

    def __init__(self, max_size: int = 128):
        """
        Initialize cache.

        Args:
            max_size: Maximum number of entries kept
        """
        self._entries: "OrderedDict[Hashable, Any]" = OrderedDict()
        self._max_size = max_size
        self.hits = 0
        self.misses = 0

    def get(self, key: Hashable) -> Optional[Any]:
        """
        Get item from cache.

        Returns:
            Optional[Any]: Cached value or None if absent
        """
        if key not in self._entries:
            self.misses += 1
            return None
        self._entries.move_to_end(key)
        self.hits += 1
        return self._entries[key]

    def set(self, key: Hashable, value: Any) -> None:
        if key in self._entries:
            self._entries.move_to_end(key)
        elif len(self._entries) >= self._max_size:
            self._entries.popitem(last=False)
        self._entries[key] = value

    def delete(self, key: Hashable) -> None:
        self._entries.pop(key, None)

    def clear(self) -> None:
        self._entries.clear()
        self.hits = 0
        self.misses = 0

    def size(self) -> int:
        return len(self._entries)


# Global cache instance
_default_cache: Optional[AnalysisCache] = None


def get_default_cache() -> AnalysisCache:
    """
    Get the process-wide analysis cache.

    Returns:
        AnalysisCache: Default cache instance
    """
    global _default_cache
    if _default_cache is None:
        _default_cache = AnalysisCache()
    return _default_cache
