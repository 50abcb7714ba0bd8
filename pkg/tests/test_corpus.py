import os
import numpy as np
import pytest
from skewrec import corpus
from skewrec.corpus import BinarizeMode, CorpusError, RawInteraction


def write_lines(tmp_path, name: str, lines: list) -> str:
    path = os.path.join(tmp_path, name)
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
    return path


def test_load_tsv_reads_extra_fields_and_skips_blanks(tmp_path):
    path = write_lines(tmp_path, "r.tsv", ["1\t10\t5\t881250949", "", "2\t20\t3.5\t881250950"])
    rows = corpus.load_tsv(path)
    assert rows == [RawInteraction("1", "10", 5.0), RawInteraction("2", "20", 3.5)]


def test_load_tsv_header_and_delimiter(tmp_path):
    path = write_lines(tmp_path, "r.csv", ["user,item,rating", "a,b,1"])
    assert corpus.load_tsv(path, delimiter=",", has_header=True) == [RawInteraction("a", "b", 1.0)]


@pytest.mark.parametrize('lines,line_no', [
    (["1\t10\t5", "2\t20"], 2),
    (["1\t10\tfive"], 1),
    (["1\t10\t5", "1\t11\t4", "\t12\t3"], 3),
    (["1\t10\tnan"], 1),
])
def test_load_tsv_malformed_rows_name_the_line(tmp_path, lines, line_no):
    path = write_lines(tmp_path, "bad.tsv", lines)
    with pytest.raises(CorpusError, match=rf"bad.tsv:{line_no}:"):
        corpus.load_tsv(path)


def test_load_tsv_empty_file(tmp_path):
    path = os.path.join(tmp_path, "empty.tsv")
    open(path, "w").close()
    with pytest.raises(CorpusError, match="no interactions"):
        corpus.load_tsv(path)


def test_load_tsv_missing_file(tmp_path):
    with pytest.raises(CorpusError, match="not found"):
        corpus.load_tsv(os.path.join(tmp_path, "nope.tsv"))


def test_binarize_rating_keeps_threshold_inclusive():
    raw = [RawInteraction("u", "a", 3.5), RawInteraction("u", "b", 3.4), RawInteraction("u", "c", 5)]
    assert corpus.binarize(raw, BinarizeMode.RATING) == [("u", "a"), ("u", "c")]


def test_binarize_count_is_strict():
    raw = [RawInteraction("u", "a", 3), RawInteraction("u", "b", 4)]
    assert corpus.binarize(raw, BinarizeMode.COUNT, 3) == [("u", "b")]


def test_binarize_binary_keeps_everything():
    raw = [RawInteraction("u", "a", 0), RawInteraction("u", "b", -1)]
    assert corpus.binarize(raw, "binary") == [("u", "a"), ("u", "b")]


def test_build_interactions_first_appearance_ids_and_duplicates():
    data = corpus.build_interactions([("b", "y"), ("a", "x"), ("b", "y"), ("b", "x")])
    assert data.user_keys == ("b", "a")
    assert data.item_keys == ("y", "x")
    assert data.n_pairs == 3
    assert data.pos(0).tolist() == [0, 1]
    assert data.pos(1).tolist() == [1]


def test_build_interactions_rejects_empty():
    with pytest.raises(CorpusError):
        corpus.build_interactions([])


def test_interactions_lookup(tiny_data):
    assert tiny_data.counts().tolist() == [2, 2, 1]
    assert tiny_data.contains([0, 0, 2], [1, 2, 0]).tolist() == [True, False, True]
    assert tiny_data.user_keys.index("u1") == 1
    assert [tiny_data.pos(u).tolist() for u in range(3)] == [[0, 1], [1, 2], [0]]
    with pytest.raises(IndexError):
        tiny_data.pos(3)


def test_split_is_a_partition_with_shared_maps(block_data):
    pair = corpus.split(block_data, 0.2, seed=4)
    assert pair.train.same_maps(block_data) and pair.test.same_maps(block_data)
    train_keys = set(pair.train.pair_keys().tolist())
    test_keys = set(pair.test.pair_keys().tolist())
    assert not train_keys & test_keys
    assert train_keys | test_keys == set(block_data.pair_keys().tolist())


def test_split_is_deterministic(block_data):
    first = corpus.split(block_data, 0.3, seed=9)
    second = corpus.split(block_data, 0.3, seed=9)
    assert np.array_equal(first.test.pair_keys(), second.test.pair_keys())


def test_split_fraction_is_respected(block_data):
    pair = corpus.split(block_data, 0.2, seed=0)
    assert abs(pair.test.n_pairs / block_data.n_pairs - 0.2) < 0.05


def test_split_fraction_on_a_full_corpus():
    data = corpus.build_interactions([(f"u{u}", f"i{i}") for u in range(100) for i in range(100)])
    pair = corpus.split(data, 0.2, seed=5)
    assert 1800 <= pair.test.n_pairs <= 2200
    assert pair.train.n_pairs + pair.test.n_pairs == 10_000


def test_split_keeps_users_with_one_positive_in_train():
    data = corpus.build_interactions([(f"u{n}", "i0") for n in range(50)])
    pair = corpus.split(data, 0.9, seed=1)
    assert pair.test.n_pairs == 0
    assert pair.train.n_pairs == 50


@pytest.mark.parametrize('fraction', [0.0, 1.0, -0.2, 1.5])
def test_split_rejects_degenerate_fraction(block_data, fraction):
    with pytest.raises(CorpusError):
        corpus.split(block_data, fraction)


def test_write_and_read_split(tmp_path, block_split):
    out = os.path.join(tmp_path, "split")
    paths = corpus.write_split(block_split, out)
    assert [os.path.basename(p) for p in paths] == ["train.tsv", "test.tsv", "users.tsv", "items.tsv"]

    with open(paths[0], encoding="utf-8") as f:
        assert all(line.rstrip("\n").split("\t")[2] == "1" for line in f)

    loaded = corpus.read_split(out)
    assert loaded.train.same_maps(block_split.train)
    assert np.array_equal(loaded.train.pair_keys(), block_split.train.pair_keys())
    assert np.array_equal(loaded.test.pair_keys(), block_split.test.pair_keys())


def test_write_split_is_byte_identical_across_runs(tmp_path, block_data):
    for name in ("a", "b"):
        corpus.write_split(corpus.split(block_data, 0.2, seed=2), os.path.join(tmp_path, name))
    for file in ("train.tsv", "test.tsv", "users.tsv", "items.tsv"):
        with open(os.path.join(tmp_path, "a", file), "rb") as a, open(os.path.join(tmp_path, "b", file), "rb") as b:
            assert a.read() == b.read()


def test_read_split_requires_all_files(tmp_path, split_dir):
    os.remove(os.path.join(split_dir, "items.tsv"))
    with pytest.raises(CorpusError, match="items.tsv"):
        corpus.read_split(split_dir)


def test_read_interactions_against_unknown_key(tmp_path):
    path = write_lines(tmp_path, "t.tsv", ["a\tx\t1", "b\ty\t1"])
    with pytest.raises(CorpusError, match="missing"):
        corpus.read_interactions(path, user_keys=["a"], item_keys=["x", "y"])


def test_load_train_from_directory_or_file(split_dir):
    from_dir = corpus.load_train(split_dir)
    from_file = corpus.load_train(os.path.join(split_dir, "train.tsv"))
    assert from_dir.n_pairs == from_file.n_pairs
