import os
import numpy as np
import pytest
from skewrec import corpus
from skewrec.corpus import Interactions, SplitPair
from skewrec.embed import init_model
from skewrec.skewopt import SkewOptConfig


def block_pairs(n_users: int = 40, n_items: int = 60, blocks: int = 2,
                density: float = 0.4, seed: int = 7) -> list:
    """Users of block b mostly like items of block b; a few cross-block positives."""
    rng = np.random.default_rng(seed)
    pairs = []
    for u in range(n_users):
        block = u * blocks // n_users
        for i in range(n_items):
            inside = i * blocks // n_items == block
            if rng.random() < (density if inside else 0.02):
                pairs.append((f"u{u}", f"i{i}"))
    return pairs


@pytest.fixture(scope="session")
def block_data() -> Interactions:
    yield corpus.build_interactions(block_pairs())


@pytest.fixture(scope="session")
def block_split(block_data) -> SplitPair:
    yield corpus.split(block_data, test_fraction=0.2, seed=3)


@pytest.fixture()
def tiny_data() -> Interactions:
    # u0: {i0, i1}   u1: {i1, i2}   u2: {i0}
    yield corpus.build_interactions([
        ("u0", "i0"), ("u0", "i1"), ("u1", "i1"), ("u1", "i2"), ("u2", "i0"),
    ])


@pytest.fixture()
def fast_cfg() -> SkewOptConfig:
    yield SkewOptConfig(epochs=5, dim=8, seed=11)


@pytest.fixture()
def random_model():
    yield init_model(n_users=6, n_items=9, d=4, seed=5)


@pytest.fixture()
def ratings_file(tmp_path) -> str:
    """MovieLens-style `user item rating timestamp` file over the block corpus."""
    rng = np.random.default_rng(1)
    path = os.path.join(tmp_path, "ratings.data")
    with open(path, "w", encoding="utf-8") as f:
        for user, item in block_pairs():
            rating = int(rng.integers(1, 6))
            f.write(f"{user}\t{item}\t{rating}\t{881250949 + rating}\n")
    yield path


@pytest.fixture()
def split_dir(tmp_path, block_split) -> str:
    path = os.path.join(tmp_path, "split")
    corpus.write_split(block_split, path)
    yield path
