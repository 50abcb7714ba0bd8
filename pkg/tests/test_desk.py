"""Desk-scale end-to-end checks on MovieLens-100K.

These download the ratings and train dozens of models; run them with
`pytest -m slow`.
"""
import os
import pytest
from skewrec import cli
from skewrec.skewopt import SkewOptConfig

SEEDS = 5


@pytest.fixture(scope="module")
def desk_split(tmp_path_factory):
    root = str(tmp_path_factory.mktemp("desk"))
    ratings = cli.cmd_fetch(os.path.join(root, "data"))
    split = os.path.join(root, "split")
    cli.cmd_prep(ratings, split, threshold=3.5, test_fraction=0.2, seed=0)
    yield split


@pytest.mark.online
@pytest.mark.slow
def test_skewopt_beats_bpr_on_movielens(tmp_path, desk_split):
    base = SkewOptConfig(dim=32, epochs=200, seed=0)
    bpr = cli.cmd_sweep(desk_split, base, [0.0], [1.0], [1], os.path.join(tmp_path, "bpr"),
                        n=10, repeats=SEEDS)
    grid = cli.cmd_sweep(desk_split, base, [0.0, 4.0, 8.0, 12.0], [1.0, 2.0, 3.0], [3],
                         os.path.join(tmp_path, "grid"), n=10, repeats=SEEDS, jobs=4)
    best = grid.loc[grid["map"].idxmax()]
    assert best["map"] > bpr.loc[0, "map"]
    assert best["xi"] > 0


@pytest.mark.online
@pytest.mark.slow
def test_location_shapes_learned_distribution(tmp_path, desk_split):
    means = {}
    for xi in (2.0, 11.0):
        cfg = SkewOptConfig(xi=xi, omega=3.0, eta=5, dim=32, epochs=200, seed=0)
        model = os.path.join(tmp_path, f"xi{xi:g}.bin")
        cli.cmd_train(desk_split, cfg, model)
        sample = cli.cmd_analyze(model, desk_split, os.path.join(tmp_path, f"analyze{xi:g}"),
                                 n_triples=100_000, seed=0)
        means[xi] = sample.mean
        if xi == 11.0:
            assert sample.sample_skewness > 0
    assert means[2.0] < means[11.0]
