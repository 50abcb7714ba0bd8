"""Skewrec Embedding Module

This module owns the parameter matrix: one d-dimensional vector per user and
per item, dot-product scoring and top-N ranking, plus the binary model file.
"""
import logging
import math
import struct
from typing import Iterable, Optional, Sequence

import numpy as np

from skewrec.artifacts import atomic_open

logger = logging.getLogger(__name__)

MAGIC = b"SKEWREC1"
_HEADER = struct.Struct("<QQQ")
_LENGTH = struct.Struct("<Q")
_FLOAT = np.dtype("<f8")


class ModelFormatError(ValueError):
    """Raised when a model file cannot be decoded."""


class EmbeddingModel:
    """User and item embedding matrices with dot-product scoring.

    Rows are float64.  During Hogwild training the arrays are mutated in place
    by several threads; scoring is only meaningful on a quiesced model.
    """

    def __init__(self, user_vecs: np.ndarray, item_vecs: np.ndarray,
                 user_keys: Optional[Sequence[str]] = None,
                 item_keys: Optional[Sequence[str]] = None):
        user_vecs = np.ascontiguousarray(user_vecs, dtype=np.float64)
        item_vecs = np.ascontiguousarray(item_vecs, dtype=np.float64)
        if user_vecs.ndim != 2 or item_vecs.ndim != 2:
            raise ValueError("embedding matrices must be two-dimensional")
        if user_vecs.shape[1] != item_vecs.shape[1] or user_vecs.shape[1] < 1:
            raise ValueError(f"inconsistent embedding dimension {user_vecs.shape[1]} vs {item_vecs.shape[1]}")
        if user_keys is None:
            user_keys = [str(u) for u in range(user_vecs.shape[0])]
        if item_keys is None:
            item_keys = [str(i) for i in range(item_vecs.shape[0])]
        if len(user_keys) != user_vecs.shape[0] or len(item_keys) != item_vecs.shape[0]:
            raise ValueError("ID maps do not match the number of embedding rows")

        self.user_vecs = user_vecs
        self.item_vecs = item_vecs
        self.user_keys = tuple(user_keys)
        self.item_keys = tuple(item_keys)

    @property
    def d(self) -> int:
        return self.user_vecs.shape[1]

    @property
    def n_users(self) -> int:
        return self.user_vecs.shape[0]

    @property
    def n_items(self) -> int:
        return self.item_vecs.shape[0]

    def copy(self) -> "EmbeddingModel":
        return EmbeddingModel(self.user_vecs.copy(), self.item_vecs.copy(),
                              self.user_keys, self.item_keys)

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.user_vecs).all() and np.isfinite(self.item_vecs).all())

    def squared_norm(self) -> float:
        return float(np.sum(self.user_vecs ** 2) + np.sum(self.item_vecs ** 2))

    def _check_user(self, u):
        if not 0 <= u < self.n_users:
            raise IndexError(f"user ID {u} out of range [0, {self.n_users})")

    def _check_item(self, i):
        if not 0 <= i < self.n_items:
            raise IndexError(f"item ID {i} out of range [0, {self.n_items})")

    def score(self, u: int, i: int) -> float:
        self._check_user(u)
        self._check_item(i)
        return float(np.dot(self.user_vecs[u], self.item_vecs[i]))

    def score_pair(self, u: int, i: int, j: int) -> float:
        """Preference of user `u` for item `i` over item `j`."""
        return self.score(u, i) - self.score(u, j)

    def scores(self, u: int) -> np.ndarray:
        """Scores of every item for user `u`."""
        self._check_user(u)
        return self.item_vecs @ self.user_vecs[u]

    def pair_scores(self, users, pos, neg) -> np.ndarray:
        """Vectorised `score_pair` over aligned ID arrays."""
        user_rows = self.user_vecs[users]
        return (np.einsum("nk,nk->n", user_rows, self.item_vecs[pos])
                - np.einsum("nk,nk->n", user_rows, self.item_vecs[neg]))

    def top_n(self, u: int, n: int, exclude: Iterable[int] = ()) -> np.ndarray:
        """Highest scoring items for `u` outside `exclude`.

        Ties are broken by ascending item ID.  Fewer than `n` items come back
        when the candidates run out.
        """
        if n < 1:
            raise ValueError(f"n must be at least 1, got {n}")
        mask = np.ones(self.n_items, dtype=bool)
        exclude = np.fromiter(exclude, dtype=np.int64) if not isinstance(exclude, np.ndarray) else exclude
        if exclude.size and (exclude.min() < 0 or exclude.max() >= self.n_items):
            raise IndexError(f"excluded item IDs must lie in [0, {self.n_items})")
        mask[exclude] = False
        candidates = np.flatnonzero(mask)
        if candidates.size == 0:
            return candidates
        scores = self.scores(u)[candidates]
        order = np.argsort(-scores, kind="stable")
        return candidates[order[:n]]


def init_model(n_users: int, n_items: int, d: int, seed: int = 0,
               user_keys: Optional[Sequence[str]] = None,
               item_keys: Optional[Sequence[str]] = None) -> EmbeddingModel:
    """Draw every entry i.i.d. uniform on [-0.5/sqrt(d), 0.5/sqrt(d)]."""
    if d < 1:
        raise ValueError(f"embedding dimension must be at least 1, got {d}")
    if n_users < 1 or n_items < 1:
        raise ValueError(f"need at least one user and one item, got {n_users} users and {n_items} items")

    rng = np.random.default_rng(seed)
    bound = 0.5 / math.sqrt(d)
    user_vecs = rng.uniform(-bound, bound, size=(n_users, d))
    item_vecs = rng.uniform(-bound, bound, size=(n_items, d))
    return EmbeddingModel(user_vecs, item_vecs, user_keys, item_keys)


def _pack_keys(keys: Sequence[str]) -> bytes:
    chunks = []
    for key in keys:
        raw = key.encode("utf-8")
        chunks.append(_LENGTH.pack(len(raw)))
        chunks.append(raw)
    return b"".join(chunks)


def save(model: EmbeddingModel, path: str) -> None:
    """Write the model file (magic, header, ID maps, user rows, item rows)."""
    with atomic_open(path, "wb") as f:
        f.write(MAGIC)
        f.write(_HEADER.pack(model.d, model.n_users, model.n_items))
        f.write(_pack_keys(model.user_keys))
        f.write(_pack_keys(model.item_keys))
        f.write(model.user_vecs.astype(_FLOAT, copy=False).tobytes(order="C"))
        f.write(model.item_vecs.astype(_FLOAT, copy=False).tobytes(order="C"))
    logger.info("Saved %dx%d + %dx%d model to %s", model.n_users, model.d, model.n_items, model.d, path)


class _Reader:
    def __init__(self, blob: bytes, path: str):
        self.blob = blob
        self.offset = 0
        self.path = path

    def take(self, size: int) -> bytes:
        if self.offset + size > len(self.blob):
            raise ModelFormatError(f"{self.path}: truncated model file")
        chunk = self.blob[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def keys(self, count: int):
        keys = []
        for _ in range(count):
            (length,) = _LENGTH.unpack(self.take(_LENGTH.size))
            try:
                keys.append(self.take(length).decode("utf-8"))
            except UnicodeDecodeError:
                raise ModelFormatError(f"{self.path}: ID map is not valid UTF-8")
        return keys


def load(path: str) -> EmbeddingModel:
    with open(path, "rb") as f:
        blob = f.read()

    reader = _Reader(blob, path)
    magic = reader.take(len(MAGIC)) if len(blob) >= len(MAGIC) else blob
    if magic != MAGIC:
        raise ModelFormatError(f"{path}: not a skewrec model file (bad magic {magic[:8]!r})")
    d, n_users, n_items = _HEADER.unpack(reader.take(_HEADER.size))
    if d < 1 or n_users < 1 or n_items < 1:
        raise ModelFormatError(f"{path}: invalid header d={d}, users={n_users}, items={n_items}")

    user_keys = reader.keys(n_users)
    item_keys = reader.keys(n_items)
    payload = len(blob) - reader.offset
    expected = (n_users + n_items) * d * _FLOAT.itemsize
    if payload != expected:
        raise ModelFormatError(f"{path}: payload holds {payload} bytes, header implies {expected}")

    user_vecs = np.frombuffer(reader.take(n_users * d * _FLOAT.itemsize), dtype=_FLOAT).reshape(n_users, d)
    item_vecs = np.frombuffer(reader.take(n_items * d * _FLOAT.itemsize), dtype=_FLOAT).reshape(n_items, d)
    # frombuffer views are read-only; training needs writable rows
    return EmbeddingModel(user_vecs.astype(np.float64), item_vecs.astype(np.float64),
                          user_keys, item_keys)
