"""Network configuration, seeded random streams and pruned network construction.

Layers are indexed from 1 as in the usual fully-connected recursion: layer ``h``
maps ``g^(h-1)`` (width ``d_{h-1}``) to ``f^(h)`` (width ``d_h``), with
``d_0`` the input dimension and ``d_{L+1} = 1`` the scalar output.  Python
containers are 0-based, so ``state.weights[h - 1]`` holds ``W^(h)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import ConfigError, ShapeError

# ReLU normalizer (E[relu(z)^2])^-1 for z ~ N(0, 1).
C_SIGMA = 2.0

# Rows per block are chosen so a block holds at most this many entries.
BLOCK_ENTRIES = 1 << 22

UINT64_MAX = (1 << 64) - 1


class Role(enum.IntEnum):
    """Purpose tag mixed into the stream key so draws never overlap."""

    WEIGHT = 0
    MASK = 1
    RESAMPLE_WEIGHT = 2
    RESAMPLE_MASK = 3
    INPUT = 4
    PROBE = 5


@dataclass(frozen=True)
class RandomStream:
    """Keyed source of reproducible generators.

    ``generator(*key)`` hashes ``(seed, stream_id, *key)`` through
    :class:`numpy.random.SeedSequence`, so any (sample, layer, role) draw can be
    rebuilt without replaying the ones before it.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or not 0 <= value <= UINT64_MAX:
                raise ConfigError(f"{name} must be an unsigned 64-bit integer, got {value!r}")

    def generator(self, *key: int) -> np.random.Generator:
        seq = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream_id), *map(int, key)))
        return np.random.Generator(np.random.SFC64(seq))


@dataclass(frozen=True)
class NetworkConfig:
    """Architecture and pruning setup of a scalar-output ReLU network.

    ``alpha`` is the keep-probability.  With ``rescale`` on, surviving mask
    entries equal ``1/sqrt(alpha)`` instead of 1.  The input layer is never
    pruned; the output layer is pruned unless ``prune_output`` is off.
    """

    input_dim: int
    widths: tuple[int, ...]
    alpha: float = 1.0
    rescale: bool = False
    seed: int = 0
    prune_output: bool = True

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        self.validate()

    @classmethod
    def uniform(cls, depth: int, width: int, input_dim: int, **kwargs) -> "NetworkConfig":
        if depth < 1:
            raise ConfigError(f"depth must be >= 1, got {depth}")
        return cls(input_dim=input_dim, widths=(width,) * depth, **kwargs)

    def validate(self):
        if len(self.widths) < 1:
            raise ConfigError("need at least one hidden layer")
        if self.input_dim < 1 or any(w < 1 for w in self.widths):
            raise ConfigError(f"widths must be positive: d0={self.input_dim}, hidden={self.widths}")
        if not (0.0 < self.alpha <= 1.0) or not math.isfinite(self.alpha):
            raise ConfigError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not 0 <= self.seed <= UINT64_MAX:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    @property
    def depth(self) -> int:
        return len(self.widths)

    @property
    def dims(self) -> tuple[int, ...]:
        """``(d_0, d_1, ..., d_L, 1)``."""
        return (self.input_dim, *self.widths, 1)

    @property
    def mask_value(self) -> float:
        return 1.0 / math.sqrt(self.alpha) if self.rescale else 1.0

    def is_pruned(self, h: int) -> bool:
        if h == 1:
            return False
        if h == self.depth + 1:
            return self.prune_output
        return True

    def with_(self, **changes) -> "NetworkConfig":
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class NetworkState:
    """One realization of weights and masks.

    ``support[h-1]`` is a boolean array marking surviving weights, or ``None``
    when every entry of that layer survives (input layer, ``alpha == 1``).
    ``scales[h-1]`` is the value a surviving mask entry takes.  Dense masks are
    available through :attr:`masks` but the numerical code works on the
    boolean supports to keep width-8192 networks inside a few GB.
    """

    config: NetworkConfig
    weights: tuple[np.ndarray, ...]
    support: tuple[np.ndarray | None, ...]
    scales: tuple[float, ...]
    stream: RandomStream | None = field(default=None)

    def __post_init__(self):
        dims = self.config.dims
        if not (len(self.weights) == len(self.support) == len(self.scales) == len(dims) - 1):
            raise ConfigError("weights, supports and scales must cover every layer")
        for h, (w, s) in enumerate(zip(self.weights, self.support), start=1):
            shape = (dims[h], dims[h - 1])
            if w.shape != shape or (s is not None and s.shape != shape):
                raise ConfigError(f"layer {h}: expected shape {shape}, got {w.shape}")
        if self.support[0] is not None or self.scales[0] != 1.0:
            raise ConfigError("input layer must be unpruned with unit mask")

    @property
    def depth(self) -> int:
        return self.config.depth

    @property
    def n_params(self) -> int:
        return sum(w.size for w in self.weights)

    def mask(self, h: int) -> np.ndarray:
        """Dense mask ``m^(h)`` with entries in ``{0, scale}``."""
        sup = self.support[h - 1]
        s = self.scales[h - 1]
        if sup is None:
            return np.full(self.weights[h - 1].shape, s)
        return np.where(sup, s, 0.0)

    @property
    def masks(self) -> tuple[np.ndarray, ...]:
        return tuple(self.mask(h) for h in range(1, self.depth + 2))

    def masked_weight(self, h: int) -> np.ndarray:
        """Dense ``W^(h) * m^(h)``; materializes a full matrix."""
        return self.weights[h - 1] * self.mask(h)


def _draw_support(rng: np.random.Generator, shape, alpha: float) -> np.ndarray:
    rows, cols = shape
    out = np.empty(shape, dtype=bool)
    step = max(1, BLOCK_ENTRIES // cols)
    for r0 in range(0, rows, step):
        r1 = min(rows, r0 + step)
        out[r0:r1] = rng.random((r1 - r0, cols)) < alpha
    return out


def draw_supports(config: NetworkConfig, stream: RandomStream | None = None) -> tuple[np.ndarray | None, ...]:
    """Mask supports alone; identical to those :func:`build_network` draws for ``stream``."""
    config.validate()
    if stream is None:
        stream = RandomStream(config.seed, 0)
    dims = config.dims
    out = []
    for h in range(1, len(dims)):
        if config.is_pruned(h) and config.alpha < 1.0:
            out.append(_draw_support(stream.generator(h, Role.MASK), (dims[h], dims[h - 1]), config.alpha))
        else:
            out.append(None)
    return tuple(out)


def build_network(config: NetworkConfig, stream: RandomStream | None = None) -> NetworkState:
    """Draw i.i.d. N(0, 1) weights and Bernoulli(alpha) masks.

    The result is a pure function of ``(config, stream)``; ``stream`` defaults
    to ``RandomStream(config.seed, 0)``.  Each layer's weights and mask come
    from their own keyed generator.
    """
    if stream is None:
        stream = RandomStream(config.seed, 0)
    support = draw_supports(config, stream)
    dims = config.dims
    weights = tuple(stream.generator(h, Role.WEIGHT).standard_normal((dims[h], dims[h - 1])) for h in range(1, len(dims)))
    scales = tuple(config.mask_value if config.is_pruned(h) else 1.0 for h in range(1, len(dims)))
    return NetworkState(config, weights, support, scales, stream)


@dataclass(frozen=True)
class MaskStats:
    """Per-row survival counts of one pruned layer."""

    layer: int
    counts: np.ndarray
    expected: float
    rel_deviation: np.ndarray

    @property
    def max_abs_deviation(self) -> float:
        return float(np.max(np.abs(self.rel_deviation)))


def mask_survival_stats(state: NetworkState | NetworkConfig, stream: RandomStream | None = None) -> list[MaskStats]:
    """Survival count of every row of every pruned layer, relative to ``alpha * d_{h-1}``.

    Given a config instead of a state, only the masks are drawn (from
    ``stream``), which is much cheaper than building the weights too.
    """
    if isinstance(state, NetworkConfig):
        cfg, supports = state, draw_supports(state, stream)
    else:
        cfg, supports = state.config, state.support
    dims = cfg.dims
    out = []
    for h in range(2, cfg.depth + 2):
        if not cfg.is_pruned(h):
            continue
        rows, cols = dims[h], dims[h - 1]
        sup = supports[h - 1]
        counts = np.full(rows, cols, dtype=np.int64) if sup is None else np.count_nonzero(sup, axis=1)
        expected = cfg.alpha * cols
        out.append(MaskStats(h, counts, expected, (counts - expected) / expected))
    return out


def unit_input_pair(seed: int, dim: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Two seed-derived points on the unit sphere of ``R^dim``."""
    if dim < 1:
        raise ConfigError(f"input dimension must be positive, got {dim}")
    z = RandomStream(seed, 0).generator(0, Role.INPUT).standard_normal((2, dim))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return z[0], z[1]


def as_input(x: Sequence[float] | np.ndarray, dim: int | None = None) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ConfigError(f"input point must be a vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError("input point has non-finite entries")
    if dim is not None and arr.shape[0] != dim:
        raise ShapeError(f"input has length {arr.shape[0]}, network expects {dim}")
    return arr


def in_unit_ball(x, tol: float = 1e-12) -> bool:
    """True when ``||x||_2 <= 1`` (the regime the width bounds are stated for)."""
    return float(np.linalg.norm(np.asarray(x, dtype=np.float64))) <= 1.0 + tol
