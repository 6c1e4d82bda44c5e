"""
Per-object push budget: caps how many times any single object may be
pushed within one plan.
"""
import logging
from collections import Counter


class PushBudget:
    """
    Tracks pushes per object across the sub-goals of one plan and enforces
    the per-object limit k.
    """

    def __init__(self, max_pushes_per_object):
        """
        Args:
            max_pushes_per_object: Limit k, at least 1
        """
        if max_pushes_per_object < 1:
            raise ValueError(f"push budget must be at least 1, got {max_pushes_per_object}")
        self.max_pushes_per_object = int(max_pushes_per_object)
        self.committed = Counter()

    def allows(self, object_ids):
        """
        Check whether pushing object_ids (in addition to committed pushes)
        stays within budget.

        Args:
            object_ids: Iterable of pushed object ids, repeats counted

        Returns:
            bool
        """
        pending = Counter(object_ids)
        for object_id, count in pending.items():
            if self.committed[object_id] + count > self.max_pushes_per_object:
                return False
        return True

    def commit(self, object_ids):
        """Record executed pushes."""
        object_ids = list(object_ids)
        if not self.allows(object_ids):
            logging.warning(f"Push budget exceeded committing {object_ids}: "
                            f"limit {self.max_pushes_per_object}, used {dict(self.committed)}")
            raise ValueError("push budget exceeded")
        self.committed.update(object_ids)

    def remaining(self, object_id):
        return self.max_pushes_per_object - self.committed[object_id]

    def get_status(self):
        return {
            'max_pushes_per_object': self.max_pushes_per_object,
            'pushes_used': dict(self.committed),
            'total_pushes': sum(self.committed.values()),
        }
