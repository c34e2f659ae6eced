"""Reference sorted set with the same batched API as the tree.

Deliberately plain: a sorted numpy array rebuilt wholesale on every update.
It is the ground truth the tree is tested against, so it has to be obviously
right rather than fast.
"""

import numpy as np

__all__ = [
    "OracleSet",
    "oracle_contains_batched",
    "oracle_insert_batched",
    "oracle_remove_batched",
]


class OracleSet:
    """A set of ``int64`` keys stored as one strictly increasing array."""

    def __init__(self, keys=()):
        self.keys = np.unique(np.asarray(keys, dtype=np.int64))

    def __len__(self):
        return len(self.keys)

    def __contains__(self, key):
        i = np.searchsorted(self.keys, key)
        return bool(i < len(self.keys) and self.keys[i] == key)

    def __repr__(self):
        return f"OracleSet({self.keys.tolist()!r})"


def oracle_contains_batched(s, batch):
    batch = np.asarray(batch, dtype=np.int64)
    i = np.searchsorted(s.keys, batch)
    hit = i < len(s.keys)
    hit[hit] = s.keys[i[hit]] == batch[hit]
    return hit


def oracle_insert_batched(s, batch):
    """Union ``batch`` into ``s``; returns the number of keys added."""
    before = len(s.keys)
    s.keys = np.union1d(s.keys, np.asarray(batch, dtype=np.int64))
    return len(s.keys) - before


def oracle_remove_batched(s, batch):
    """Remove every key of ``batch`` from ``s``; returns the number removed."""
    before = len(s.keys)
    s.keys = np.setdiff1d(s.keys, np.asarray(batch, dtype=np.int64), assume_unique=True)
    return before - len(s.keys)
