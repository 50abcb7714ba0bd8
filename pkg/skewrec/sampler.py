"""Skewrec Sampler Module

Draws training triples (u, i, j): a user with at least one positive and one
negative item, one of its positive items and one of its unobserved items.
"""
import logging
from typing import Tuple

import numpy as np

from skewrec.corpus import Interactions

logger = logging.getLogger(__name__)


class SamplerError(ValueError):
    """Raised when no triple can be drawn from the training data."""


def epoch_size(train: Interactions) -> int:
    """Number of triples in one epoch: the total positive pair count."""
    size = train.n_pairs
    if size == 0:
        raise SamplerError("training set holds no positive pairs")
    return size


class TripleSampler:
    """Uniform-user triple sampler with rejection sampling of negatives.

    Each worker thread owns its own sampler; `thread` offsets the seed so the
    streams of different workers are independent.
    """

    def __init__(self, train: Interactions, seed: int = 0, thread: int = 0):
        self.train = train
        self.seed = seed
        self.thread = thread
        self.rng = np.random.default_rng(seed + thread)

        counts = train.counts()
        # users with every item positive have nothing to rank against
        eligible = (counts > 0) & (counts < train.n_items)
        self.users = np.flatnonzero(eligible).astype(np.int64)
        if self.users.size == 0:
            raise SamplerError("no user has both positive and unobserved items")
        skipped = int(((counts > 0) & ~eligible).sum())
        if skipped:
            logger.debug("Skipping %d users whose every item is positive", skipped)
        self._keys = train.pair_keys()

    def sample(self) -> Tuple[int, int, int]:
        u = int(self.users[self.rng.integers(self.users.size)])
        positives = self.train.pos(u)
        i = int(positives[self.rng.integers(positives.size)])
        while True:
            j = int(self.rng.integers(self.train.n_items))
            k = np.searchsorted(positives, j)
            if k == positives.size or positives[k] != j:
                return u, i, j

    def draw(self, n: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Vectorised draw of `n` triples as aligned (users, pos, neg) arrays."""
        train = self.train
        users = self.users[self.rng.integers(self.users.size, size=n)]
        starts = train.indptr[users]
        counts = train.indptr[users + 1] - starts
        pos = train.indices[starts + self.rng.integers(counts)]

        neg = self.rng.integers(train.n_items, size=n)
        pending = np.flatnonzero(self._is_positive(users, neg))
        while pending.size:
            neg[pending] = self.rng.integers(train.n_items, size=pending.size)
            pending = pending[self._is_positive(users[pending], neg[pending])]
        return users, pos, neg

    def _is_positive(self, users, items) -> np.ndarray:
        query = users * self.train.n_items + items
        where = np.minimum(np.searchsorted(self._keys, query), self._keys.size - 1)
        return self._keys[where] == query
