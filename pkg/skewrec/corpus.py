"""Skewrec Corpus Module

This module turns raw interaction files into implicit feedback: parsing,
binarization, contiguous ID maps and seeded train/test splits.
"""
import csv
import logging
import math
import os
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from skewrec.artifacts import atomic_path

logger = logging.getLogger(__name__)

TRAIN_FILE = "train.tsv"
TEST_FILE = "test.tsv"
USERS_FILE = "users.tsv"
ITEMS_FILE = "items.tsv"


class CorpusError(ValueError):
    """Raised for unreadable or unusable interaction data."""


class BinarizeMode(Enum):
    """Binarize Mode Enumeration.

    Describes how raw interaction values become positive feedback.
    """
    RATING = "rating"   # Keep value >= threshold
    COUNT  = "count"    # Keep value > threshold
    BINARY = "binary"   # Keep everything

    def __str__(self):
        return self.value


DEFAULT_THRESHOLDS = {
    BinarizeMode.RATING: 3.5,
    BinarizeMode.COUNT: 3.0,
    BinarizeMode.BINARY: 0.0,
}


@dataclass(frozen=True)
class RawInteraction:
    user_key: str
    item_key: str
    value: float


@dataclass(frozen=True, eq=False)
class Interactions:
    """Per-user positive item sets stored in compressed sparse row form.

    `indices[indptr[u]:indptr[u + 1]]` is the strictly increasing list of
    positive item IDs of user `u`.  `user_keys[u]` and `item_keys[i]` give the
    original keys of the dense IDs.
    """
    n_users: int
    n_items: int
    indptr: np.ndarray
    indices: np.ndarray
    user_keys: Tuple[str, ...]
    item_keys: Tuple[str, ...]

    @classmethod
    def from_id_pairs(cls, users, items, user_keys: Sequence[str],
                      item_keys: Sequence[str]) -> "Interactions":
        """Build from parallel arrays of user and item IDs, collapsing duplicates."""
        n_users = len(user_keys)
        n_items = len(item_keys)
        users = np.asarray(users, dtype=np.int64)
        items = np.asarray(items, dtype=np.int64)
        if users.shape != items.shape:
            raise CorpusError("user and item ID arrays differ in length")
        if users.size and (users.min() < 0 or users.max() >= n_users
                           or items.min() < 0 or items.max() >= n_items):
            raise CorpusError("interaction IDs fall outside the ID maps")

        keys = np.unique(users * n_items + items)
        pair_users = keys // n_items if n_items else keys
        indices = keys - pair_users * n_items
        counts = np.bincount(pair_users, minlength=n_users)
        indptr = np.zeros(n_users + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        return cls(n_users, n_items, indptr, indices.astype(np.int64),
                   tuple(user_keys), tuple(item_keys))

    def pos(self, u: int) -> np.ndarray:
        if not 0 <= u < self.n_users:
            raise IndexError(f"user ID {u} out of range [0, {self.n_users})")
        return self.indices[self.indptr[u]:self.indptr[u + 1]]

    @property
    def n_pairs(self) -> int:
        return int(self.indices.size)

    def counts(self) -> np.ndarray:
        return np.diff(self.indptr)

    def pair_users(self) -> np.ndarray:
        """User ID of every stored pair, aligned with `indices`."""
        return np.repeat(np.arange(self.n_users, dtype=np.int64), self.counts())

    def pair_keys(self) -> np.ndarray:
        """Sorted `u * n_items + i` codes of every positive pair."""
        return self.pair_users() * self.n_items + self.indices

    def contains(self, users, items) -> np.ndarray:
        """Vectorised membership test of (u, i) pairs."""
        keys = self.pair_keys()
        query = np.asarray(users, dtype=np.int64) * self.n_items + np.asarray(items, dtype=np.int64)
        if keys.size == 0:
            return np.zeros(query.shape, dtype=bool)
        where = np.searchsorted(keys, query)
        where = np.minimum(where, keys.size - 1)
        return keys[where] == query

    def same_maps(self, other: "Interactions") -> bool:
        return self.user_keys == other.user_keys and self.item_keys == other.item_keys

    def __str__(self):
        return f"{self.n_users} users, {self.n_items} items, {self.n_pairs} positives"


@dataclass(frozen=True, eq=False)
class SplitPair:
    train: Interactions
    test: Interactions
    seed: int


def load_tsv(path: str, delimiter: str = "\t", has_header: bool = False) -> List[RawInteraction]:
    """Parse a delimited interaction file.

    Keyword Arguments:
    path                   -- Path of the file; one interaction per line with
                              at least user, item and value fields.  Extra
                              fields (timestamps) are ignored.
    delimiter              -- Field separator.  Default is tab.
    has_header             -- Boolean indicating whether the first line is a
                              header to be skipped.

    Return Value:
    List of RawInteraction objects in file order.
    """
    if not os.path.isfile(path):
        raise CorpusError(f"interaction file not found: {path}")

    rows = []
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f, delimiter=delimiter)
        for fields in reader:
            line_no = reader.line_num
            if has_header and line_no == 1:
                continue
            if not fields or all(not field.strip() for field in fields):
                continue
            if len(fields) < 3:
                raise CorpusError(f"{path}:{line_no}: expected user, item and value fields, got {len(fields)}")
            user_key, item_key = fields[0].strip(), fields[1].strip()
            if not user_key or not item_key:
                raise CorpusError(f"{path}:{line_no}: empty user or item key")
            try:
                value = float(fields[2])
            except ValueError:
                raise CorpusError(f"{path}:{line_no}: value '{fields[2]}' is not a number")
            if not math.isfinite(value):
                raise CorpusError(f"{path}:{line_no}: value '{fields[2]}' is not finite")
            rows.append(RawInteraction(user_key, item_key, value))

    if not rows:
        raise CorpusError(f"{path}: no interactions found")
    logger.info("Loaded %d interactions from %s", len(rows), path)
    return rows


def binarize(raw: Iterable[RawInteraction], mode: BinarizeMode = BinarizeMode.RATING,
             threshold: Optional[float] = None) -> List[Tuple[str, str]]:
    """Keep the interactions that count as positive feedback.

    Ratings are kept with value >= threshold, counts with value > threshold.
    """
    mode = BinarizeMode(mode)
    if threshold is None:
        threshold = DEFAULT_THRESHOLDS[mode]
    if not math.isfinite(threshold):
        raise CorpusError(f"threshold must be finite, got {threshold}")

    if mode is BinarizeMode.RATING:
        kept = [(r.user_key, r.item_key) for r in raw if r.value >= threshold]
    elif mode is BinarizeMode.COUNT:
        kept = [(r.user_key, r.item_key) for r in raw if r.value > threshold]
    else:
        kept = [(r.user_key, r.item_key) for r in raw]
    return kept


def build_interactions(pairs: Sequence[Tuple[str, str]]) -> Interactions:
    """Map keys to dense IDs in first-appearance order and collapse duplicates."""
    if not pairs:
        raise CorpusError("cannot build interactions from an empty pair list")

    user_index: Dict[str, int] = {}
    item_index: Dict[str, int] = {}
    users = np.empty(len(pairs), dtype=np.int64)
    items = np.empty(len(pairs), dtype=np.int64)
    for n, (user_key, item_key) in enumerate(pairs):
        users[n] = user_index.setdefault(user_key, len(user_index))
        items[n] = item_index.setdefault(item_key, len(item_index))

    data = Interactions.from_id_pairs(users, items, list(user_index), list(item_index))
    logger.debug("Built interactions: %s", data)
    return data


def split(data: Interactions, test_fraction: float = 0.2, seed: int = 0) -> SplitPair:
    """Assign each positive pair to the test set with probability `test_fraction`.

    A user whose every pair was drawn for the test set keeps all of them in
    the training set instead.
    """
    if not 0.0 < test_fraction < 1.0:
        raise CorpusError(f"test fraction must lie strictly between 0 and 1, got {test_fraction}")

    rng = np.random.default_rng(seed)
    to_test = rng.random(data.n_pairs) < test_fraction
    pair_users = data.pair_users()

    train_counts = np.bincount(pair_users[~to_test], minlength=data.n_users)
    starved = (train_counts == 0) & (data.counts() > 0)
    if starved.any():
        to_test &= ~starved[pair_users]
        logger.debug("Kept %d users entirely in train", int(starved.sum()))

    train = Interactions.from_id_pairs(pair_users[~to_test], data.indices[~to_test],
                                       data.user_keys, data.item_keys)
    test = Interactions.from_id_pairs(pair_users[to_test], data.indices[to_test],
                                      data.user_keys, data.item_keys)
    logger.info("Split %d pairs into %d train / %d test (seed %d)",
                data.n_pairs, train.n_pairs, test.n_pairs, seed)
    return SplitPair(train=train, test=test, seed=seed)


def _write_pairs(path: str, data: Interactions) -> None:
    frame = pd.DataFrame({
        "user": [data.user_keys[u] for u in data.pair_users().tolist()],
        "item": [data.item_keys[i] for i in data.indices.tolist()],
        "value": 1,
    })
    with atomic_path(path) as tmp:
        frame.to_csv(tmp, sep="\t", header=False, index=False)


def _write_keys(path: str, keys: Sequence[str]) -> None:
    frame = pd.DataFrame({"id": range(len(keys)), "key": list(keys)})
    with atomic_path(path) as tmp:
        frame.to_csv(tmp, sep="\t", header=False, index=False)


def _read_keys(path: str) -> List[str]:
    frame = pd.read_csv(path, sep="\t", header=None, names=["id", "key"],
                        dtype={"id": np.int64, "key": str}, keep_default_na=False)
    if not np.array_equal(frame["id"].to_numpy(), np.arange(len(frame))):
        raise CorpusError(f"{path}: IDs are not dense and ordered")
    return frame["key"].tolist()


def write_split(split_pair: SplitPair, out_dir: str) -> List[str]:
    """Persist a split as train/test TSVs (value=1) plus the shared ID maps.

    Return Value:
    List of the written file paths.
    """
    os.makedirs(out_dir, exist_ok=True)
    paths = [os.path.join(out_dir, name) for name in (TRAIN_FILE, TEST_FILE, USERS_FILE, ITEMS_FILE)]
    _write_pairs(paths[0], split_pair.train)
    _write_pairs(paths[1], split_pair.test)
    _write_keys(paths[2], split_pair.train.user_keys)
    _write_keys(paths[3], split_pair.train.item_keys)
    return paths


def read_interactions(path: str, user_keys: Optional[Sequence[str]] = None,
                      item_keys: Optional[Sequence[str]] = None,
                      delimiter: str = "\t") -> Interactions:
    """Load a binary interaction file, optionally against existing ID maps."""
    raw = load_tsv(path, delimiter=delimiter)
    pairs = [(r.user_key, r.item_key) for r in raw]
    if user_keys is None or item_keys is None:
        return build_interactions(pairs)

    user_index = {key: n for n, key in enumerate(user_keys)}
    item_index = {key: n for n, key in enumerate(item_keys)}
    try:
        users = [user_index[u] for u, _ in pairs]
        items = [item_index[i] for _, i in pairs]
    except KeyError as error:
        raise CorpusError(f"{path}: key {error} missing from the ID maps")
    return Interactions.from_id_pairs(users, items, user_keys, item_keys)


def _read_split_file(path: str, user_keys, item_keys) -> Interactions:
    # test.tsv may legitimately be empty for tiny corpora
    if os.path.isfile(path) and os.path.getsize(path) == 0:
        return Interactions.from_id_pairs([], [], user_keys, item_keys)
    return read_interactions(path, user_keys, item_keys)


def read_split(split_dir: str, seed: int = 0) -> SplitPair:
    """Load a split written by `write_split`."""
    for name in (TRAIN_FILE, TEST_FILE, USERS_FILE, ITEMS_FILE):
        if not os.path.isfile(os.path.join(split_dir, name)):
            raise CorpusError(f"split directory {split_dir} lacks {name}")
    user_keys = _read_keys(os.path.join(split_dir, USERS_FILE))
    item_keys = _read_keys(os.path.join(split_dir, ITEMS_FILE))
    train = _read_split_file(os.path.join(split_dir, TRAIN_FILE), user_keys, item_keys)
    test = _read_split_file(os.path.join(split_dir, TEST_FILE), user_keys, item_keys)
    return SplitPair(train=train, test=test, seed=seed)


def load_train(path: str) -> Interactions:
    """Training positives from either a split directory or a single TSV file."""
    if os.path.isdir(path):
        return read_split(path).train
    return read_interactions(path)
