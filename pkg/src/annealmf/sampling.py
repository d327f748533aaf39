"""Seeded random streams, Gaussian steps and Mantegna Levy-flight steps."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

#: Identifier of the bit generator and seeding scheme, recorded in run reports.
RNG_ALGORITHM = f"numpy-{np.__version__}/PCG64/SeedSequence(seed,spawn_key=(stream,))"

# Fixed stream ids so independent consumers never share draws.
STREAM_SPLIT = 0
STREAM_INIT = 1
STREAM_WALK = 2
STREAM_ACCEPT = 3
STREAM_SHUFFLE = 4


def make_rng(seed: int | None, stream: int = 0) -> np.random.Generator:
    """Independent generator for the ``(seed, stream)`` pair."""
    ss = np.random.SeedSequence(seed, spawn_key=(stream,))
    return np.random.Generator(np.random.PCG64(ss))


def sigma_u(levy_index: float) -> float:
    """Scale of the numerator Gaussian in Mantegna's construction.

    ``sigma = [G(1+b) sin(pi b / 2) / (b G((1+b)/2) 2^((b-1)/2))]^(1/b)``
    where ``b`` is the Levy index and ``G`` the gamma function.
    """
    b = float(levy_index)
    if not (0.0 < b <= 2.0) or math.isnan(b):
        raise ValueError(f"levy_index must lie in (0, 2], got {levy_index}")
    num = math.gamma(1 + b) * math.sin(math.pi * b / 2)
    den = b * math.gamma((1 + b) / 2) * 2 ** ((b - 1) / 2)
    return (num / den) ** (1 / b)


@dataclass(frozen=True)
class LevyParams:
    levy_index: float = 1.5
    sigma_u: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "sigma_u", sigma_u(self.levy_index))


def levy_step(params: LevyParams, rng: np.random.Generator) -> float:
    """One Mantegna draw ``u / |v|^(1/levy_index)``."""
    u = rng.normal(0.0, params.sigma_u)
    v = rng.normal()
    while v == 0.0:
        v = rng.normal()
    return u / abs(v) ** (1.0 / params.levy_index)


def levy_steps(params: LevyParams, rng: np.random.Generator, size) -> np.ndarray:
    """Vectorised :func:`levy_step`: all ``u`` draws first, then all ``v`` draws."""
    u = rng.normal(0.0, params.sigma_u, size=size)
    v = rng.normal(size=size)
    zero = v == 0.0
    while np.any(zero):
        v[zero] = rng.normal(size=int(zero.sum()))
        zero = v == 0.0
    return u / np.abs(v) ** (1.0 / params.levy_index)


def gaussian_step(stddev: float, rng: np.random.Generator) -> float:
    if not stddev > 0:
        raise ValueError(f"stddev must be positive, got {stddev}")
    return float(rng.normal(0.0, stddev))


@dataclass(frozen=True)
class LevyWalk:
    """Heavy-tailed random walk with Mantegna steps."""

    params: LevyParams = field(default_factory=LevyParams)

    name = "levy"

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        return levy_steps(self.params, rng, size)

    def describe(self) -> dict:
        return {"walk": self.name, "levy_index": self.params.levy_index}


@dataclass(frozen=True)
class GaussianWalk:
    stddev: float = 1.0

    name = "gaussian"

    def __post_init__(self):
        if not self.stddev > 0:
            raise ValueError(f"stddev must be positive, got {self.stddev}")

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        return rng.normal(0.0, self.stddev, size=size)

    def describe(self) -> dict:
        return {"walk": self.name, "stddev": self.stddev}


WalkKind = LevyWalk | GaussianWalk


def make_walk(kind: str = "levy", levy_index: float = 1.5, stddev: float = 1.0) -> WalkKind:
    if kind == "levy":
        return LevyWalk(LevyParams(levy_index))
    if kind == "gaussian":
        return GaussianWalk(stddev)
    raise ValueError(f"unknown walk kind {kind!r}; expected 'levy' or 'gaussian'")
