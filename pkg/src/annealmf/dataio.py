"""MovieLens parsing, synthetic data, bench CSV and run manifests."""

from __future__ import annotations

import csv
import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import RatingDataset

BENCH_HEADER = ["system", "params", "rmse_mean", "rmse_spread", "seeds", "wall_ms"]


class ParseError(ValueError):
    def __init__(self, path, lineno, line, reason):
        super().__init__(f"{path}:{lineno}: {reason}: {line!r}")
        self.lineno = lineno


class IdMap:
    """Bijection between raw ids and dense 0-based indices (sorted by raw id)."""

    def __init__(self, reverse):
        self.reverse = np.asarray(reverse)
        self.forward = {x: i for i, x in enumerate(self.reverse.tolist())}
        if len(self.forward) != len(self.reverse):
            raise ValueError("raw ids must be unique")

    @classmethod
    def from_raw(cls, raw) -> tuple[IdMap, np.ndarray]:
        """Build the map and return it with the dense index of every raw id."""
        uniq, inverse = np.unique(np.asarray(raw), return_inverse=True)
        return cls(uniq), inverse.astype(np.int64)

    def __len__(self) -> int:
        return len(self.reverse)

    def __getitem__(self, raw) -> int:
        return self.forward[raw]


def _parse_ratings(path, delimiter: str):
    users, items, ratings = [], [], []
    with open(path, encoding="latin-1") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            fields = line.split(delimiter)
            if len(fields) != 4:
                raise ParseError(path, lineno, line, f"expected 4 fields, got {len(fields)}")
            try:
                users.append(int(fields[0]))
                items.append(int(fields[1]))
                ratings.append(float(fields[2]))
                int(fields[3])
            except ValueError as exc:
                raise ParseError(path, lineno, line, str(exc)) from None
    if not ratings:
        raise ValueError(f"{path}: no ratings found")
    user_map, u_idx = IdMap.from_raw(users)
    item_map, i_idx = IdMap.from_raw(items)
    data = RatingDataset(u_idx, i_idx, ratings, len(user_map), len(item_map))
    return data, user_map, item_map


def parse_movielens_1m(path) -> tuple[RatingDataset, IdMap, IdMap]:
    """Read ``UserID::MovieID::Rating::Timestamp`` lines (``ratings.dat``)."""
    return _parse_ratings(path, "::")


def parse_movielens_100k(path) -> tuple[RatingDataset, IdMap, IdMap]:
    """Read tab-separated ``user item rating timestamp`` lines (``u.data``)."""
    return _parse_ratings(path, "\t")


def make_synthetic(num_users: int, num_items: int, rank: int, noise: float,
                   density: float = 0.3, seed: int = 0, mean: float = 3.0) -> RatingDataset:
    """Low-rank-plus-noise ratings on a random subset of the grid.

    True factors are ``Uniform[0, c)`` with ``c`` chosen so the expected rating
    is ``mean``; Gaussian noise is added and the result floored at 0 so the
    data stay valid for WNMF. Every user and item gets at least one rating.
    """
    if min(num_users, num_items, rank) < 1:
        raise ValueError("dimensions must be positive")
    if not 0 < density <= 1:
        raise ValueError("density must be in (0, 1]")
    if noise < 0:
        raise ValueError("noise must be >= 0")
    rng = np.random.default_rng(seed)
    c = np.sqrt(4.0 * mean / rank)
    U = rng.uniform(0, c, size=(num_users, rank))
    V = rng.uniform(0, c, size=(num_items, rank))
    mask = rng.random((num_users, num_items)) < density
    # guarantee coverage of every row and column
    mask[np.arange(num_users), rng.integers(num_items, size=num_users)] = True
    mask[rng.integers(num_users, size=num_items), np.arange(num_items)] = True
    users, items = np.nonzero(mask)
    clean = np.einsum("ij,ij->i", U[users], V[items])
    ratings = np.maximum(clean + noise * rng.normal(size=clean.shape), 0.0)
    return RatingDataset(users, items, ratings, num_users, num_items)


def write_split(split, directory) -> tuple[Path, Path]:
    """Write ``train.tsv`` and ``test.tsv`` as ``user<TAB>item<TAB>rating`` lines."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, part in (("train", split.train), ("test", split.test)):
        path = directory / f"{name}.tsv"
        with open(path, "w", encoding="utf-8", newline="") as f:
            for u, i, r in part:
                f.write(f"{u}\t{i}\t{r!r}\n")
        paths.append(path)
    return paths[0], paths[1]


def dataset_checksum(data: RatingDataset) -> str:
    h = hashlib.sha256()
    h.update(f"{data.num_users}x{data.num_items}:".encode())
    for a in (data.users, data.items, data.ratings):
        h.update(np.ascontiguousarray(a).tobytes())
    return "sha256:" + h.hexdigest()


@dataclass(frozen=True)
class BenchRow:
    """One line of a results table. ``wall_ms`` is None when timing is off."""

    system: str
    params: str
    rmse_mean: float
    rmse_spread: float
    seeds: tuple[int, ...]
    wall_ms: float | None = None

    def __post_init__(self):
        if not self.rmse_spread >= 0:
            raise ValueError("rmse_spread must be >= 0")
        if len(self.seeds) < 1:
            raise ValueError("a bench row needs at least one seed")


def format_params(params: dict) -> str:
    return ";".join(f"{k}={v}" for k, v in params.items())


def write_bench_csv(rows, path) -> None:
    rows = list(rows)
    if not rows:
        raise ValueError("no rows to write")
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(BENCH_HEADER)
        for row in rows:
            w.writerow([
                row.system,
                row.params,
                repr(float(row.rmse_mean)),
                repr(float(row.rmse_spread)),
                ";".join(str(s) for s in row.seeds),
                "" if row.wall_ms is None else f"{row.wall_ms:.3f}",
            ])


def read_bench_csv(path) -> list[BenchRow]:
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        if header != BENCH_HEADER:
            raise ValueError(f"unexpected header {header}")
        return [
            BenchRow(
                system, params, float(mean), float(spread),
                tuple(int(s) for s in seeds.split(";")),
                float(wall) if wall else None,
            )
            for system, params, mean, spread, seeds, wall in reader
        ]


def write_manifest(path, manifest: dict) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    os.replace(tmp, path)


def read_manifest(path) -> dict:
    with open(path, encoding="utf-8") as f:
        return json.load(f)
