"""Append-only key/value store for one attention head's decode sequence."""

import numpy as np

from .errors import InvalidInput, ShapeError


class KvCache:
    """Growing (S x D) key and value matrices with geometric capacity growth.

    Single writer per cache; reads between appends see a consistent snapshot
    (append never rewrites previously readable rows).
    """

    def __init__(self, head_dim, initial_capacity=16):
        if head_dim < 1:
            raise InvalidInput(f"head_dim must be >= 1, got {head_dim}")
        self.head_dim = head_dim
        self._keys = np.empty((initial_capacity, head_dim), dtype=np.float64)
        self._values = np.empty((initial_capacity, head_dim), dtype=np.float64)
        self._len = 0

    def __len__(self):
        return self._len

    @property
    def keys(self):
        return self._keys[: self._len]

    @property
    def values(self):
        return self._values[: self._len]

    def _grow(self):
        cap = max(1, self._keys.shape[0]) * 2
        for name in ("_keys", "_values"):
            new = np.empty((cap, self.head_dim), dtype=np.float64)
            new[: self._len] = getattr(self, name)[: self._len]
            setattr(self, name, new)

    def append(self, k, v):
        k = np.asarray(k, dtype=np.float64)
        v = np.asarray(v, dtype=np.float64)
        if k.shape != (self.head_dim,) or v.shape != (self.head_dim,):
            raise ShapeError(
                f"k/v must have shape ({self.head_dim},), got {k.shape} and {v.shape}"
            )
        if self._len == self._keys.shape[0]:
            self._grow()
        self._keys[self._len] = k
        self._values[self._len] = v
        self._len += 1

    def gather_values(self, indices):
        """Rows of the value matrix at strictly increasing indices."""
        idx = np.asarray(indices, dtype=np.int64)
        if idx.size == 0:
            return np.empty((0, self.head_dim), dtype=np.float64)
        if np.any(np.diff(idx) <= 0):
            raise InvalidInput("indices must be strictly increasing")
        if idx[0] < 0 or idx[-1] >= self._len:
            raise IndexError(
                f"index out of range: {idx[idx >= self._len] if idx[-1] >= self._len else idx[0]}"
                f" for cache of length {self._len}"
            )
        return self._values[idx].copy()
