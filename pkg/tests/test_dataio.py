import os
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from annealmf.dataio import (
    BENCH_HEADER,
    BenchRow,
    IdMap,
    ParseError,
    dataset_checksum,
    format_params,
    make_synthetic,
    parse_movielens_100k,
    parse_movielens_1m,
    read_bench_csv,
    read_manifest,
    write_bench_csv,
    write_manifest,
    write_split,
)
from annealmf.evaluation import split_holdout


def _write(tmp_path, text, name="ratings.dat"):
    path = tmp_path / name
    path.write_text(text, encoding="latin-1")
    return path


class TestParse:
    def test_single_1m_line(self, tmp_path):
        data, users, items = parse_movielens_1m(_write(tmp_path, "1::1193::5::978300760\n"))
        assert len(data) == 1 and data.shape == (1, 1)
        assert list(data) == [(0, 0, 5.0)]
        assert users.reverse.tolist() == [1] and items.reverse.tolist() == [1193]

    def test_single_100k_line(self, tmp_path):
        data, users, items = parse_movielens_100k(_write(tmp_path, "196\t242\t3\t881250949\n", "u.data"))
        assert list(data) == [(0, 0, 3.0)]
        assert users[196] == 0 and items[242] == 0

    def test_indices_follow_sorted_raw_ids(self, tmp_path):
        text = "7::30::4::1\n2::30::1::2\n7::10::3::3\n"
        data, users, items = parse_movielens_1m(_write(tmp_path, text))
        assert users.reverse.tolist() == [2, 7] and items.reverse.tolist() == [10, 30]
        assert data.users.tolist() == [1, 0, 1]
        assert data.items.tolist() == [1, 1, 0]

    def test_blank_lines_and_crlf(self, tmp_path):
        data, _, _ = parse_movielens_1m(_write(tmp_path, "1::2::3::4\r\n\n5::6::2::8\r\n"))
        assert len(data) == 2

    def test_empty_file(self, tmp_path):
        with pytest.raises(ValueError, match="no ratings"):
            parse_movielens_1m(_write(tmp_path, ""))

    @pytest.mark.parametrize("bad", ["1::2::3", "1::x::3::4", "1::2::3::4::5"])
    def test_malformed_line_reports_line_number(self, tmp_path, bad):
        path = _write(tmp_path, f"1::2::3::4\n2::3::4::5\n{bad}\n")
        with pytest.raises(ParseError) as info:
            parse_movielens_1m(path)
        assert info.value.lineno == 3
        assert ":3:" in str(info.value)

    def test_duplicate_pair_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            parse_movielens_1m(_write(tmp_path, "1::2::3::4\n1::2::5::6\n"))

    def test_round_trip_multiset(self, tmp_path):
        rng = np.random.default_rng(0)
        pairs = {(int(u), int(i)) for u, i in rng.integers(1, 500, size=(300, 2))}
        triples = [(u, i, int(rng.integers(1, 6))) for u, i in sorted(pairs)]
        rng.shuffle(triples)
        text = "".join(f"{u}::{i}::{r}::{k}\n" for k, (u, i, r) in enumerate(triples))
        data, users, items = parse_movielens_1m(_write(tmp_path, text))
        back = Counter(
            (int(users.reverse[u]), int(items.reverse[i]), int(r)) for u, i, r in data
        )
        assert back == Counter(triples)

    @pytest.mark.skipif("ANNEALMF_ML1M" not in os.environ, reason="set ANNEALMF_ML1M to ratings.dat")
    def test_movielens_1m_counts(self):
        data, users, items = parse_movielens_1m(os.environ["ANNEALMF_ML1M"])
        assert (len(data), len(users), len(items)) == (1_000_209, 6040, 3706)

    @pytest.mark.skipif("ANNEALMF_ML100K" not in os.environ, reason="set ANNEALMF_ML100K to u.data")
    def test_movielens_100k_counts(self):
        data, users, items = parse_movielens_100k(os.environ["ANNEALMF_ML100K"])
        assert (len(data), len(users), len(items)) == (100_000, 943, 1682)


class TestIdMap:
    @given(st.lists(st.integers(-10**9, 10**9), min_size=1, max_size=200))
    @settings(max_examples=100, deadline=None)
    def test_bijective(self, raw):
        mapping, dense = IdMap.from_raw(raw)
        assert len(mapping) == len(set(raw))
        assert sorted(set(dense.tolist())) == list(range(len(mapping)))
        assert mapping.reverse[dense].tolist() == raw
        assert all(mapping[x] == d for x, d in zip(raw, dense))

    def test_duplicates_rejected(self):
        with pytest.raises(ValueError):
            IdMap([1, 1])


class TestSynthetic:
    def test_covers_every_row_and_column(self):
        data = make_synthetic(30, 40, 3, 0.2, density=0.01, seed=0)
        assert set(data.users.tolist()) == set(range(30))
        assert set(data.items.tolist()) == set(range(40))

    def test_mean_and_nonnegative(self):
        data = make_synthetic(200, 150, 5, 0.3, seed=0)
        assert data.mean() == pytest.approx(3.0, rel=0.05)
        assert data.ratings.min() >= 0

    def test_deterministic(self):
        assert dataset_checksum(make_synthetic(20, 10, 2, 0.1, seed=4)) == dataset_checksum(
            make_synthetic(20, 10, 2, 0.1, seed=4)
        )
        assert dataset_checksum(make_synthetic(20, 10, 2, 0.1, seed=4)) != dataset_checksum(
            make_synthetic(20, 10, 2, 0.1, seed=5)
        )

    @pytest.mark.parametrize("args", [(0, 5, 2, 0.1), (5, 5, 2, -1.0)])
    def test_bad_arguments(self, args):
        with pytest.raises(ValueError):
            make_synthetic(*args)


def test_write_split(tmp_path):
    split = split_holdout(make_synthetic(10, 8, 2, 0.1, seed=0), 0.2, seed=0)
    train, test = write_split(split, tmp_path / "out")
    lines = test.read_text().splitlines()
    assert len(lines) == len(split.test)
    u, i, r = lines[0].split("\t")
    assert (int(u), int(i), float(r)) == next(iter(split.test))
    assert len(train.read_text().splitlines()) == len(split.train)


class TestBenchCsv:
    def test_two_line_file(self, tmp_path):
        path = tmp_path / "r.csv"
        write_bench_csv([BenchRow("sa-levy", format_params({"K": 20, "alpha": 0.01}), 1.1, 0.0, (1, 2, 3))], path)
        assert path.read_text() == (
            ",".join(BENCH_HEADER) + "\n" + "sa-levy,K=20;alpha=0.01,1.1,0.0,1;2;3,\n"
        )

    def test_round_trip(self, tmp_path):
        rows = [
            BenchRow("sgd", "lr=0.005", 0.1 + 0.2, 0.012345678901234567, (7,), 12.5),
            BenchRow("als", "reg=5", 1 / 3, 0.0, (1, 2)),
        ]
        path = tmp_path / "r.csv"
        write_bench_csv(rows, path)
        assert read_bench_csv(path) == rows

    def test_bad_rows(self, tmp_path):
        with pytest.raises(ValueError):
            write_bench_csv([], tmp_path / "x.csv")
        with pytest.raises(ValueError):
            BenchRow("x", "", 1.0, -0.1, (1,))
        with pytest.raises(ValueError):
            BenchRow("x", "", 1.0, 0.1, ())

    def test_bad_header(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("a,b\n")
        with pytest.raises(ValueError, match="header"):
            read_bench_csv(path)


def test_manifest_round_trip(tmp_path):
    path = tmp_path / "m.json"
    manifest = {"seeds": [1, 2], "flags": {"rank": 20}, "checksum": "sha256:ab"}
    write_manifest(path, manifest)
    assert read_manifest(path) == manifest
    assert not (tmp_path / "m.json.tmp").exists()
