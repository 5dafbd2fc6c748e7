"""Mask-induced pseudo-networks and Monte-Carlo checks of their distributional facts.

The pseudo-network seeded by column ``j`` of the layer-``h`` mask starts from

    g^(h,j,h) = sqrt(c/d_h) D^(h) diag_i(m_ij sqrt(alpha) / ||g^(h-1) * m_i||^2) f^(h)

and is then pushed through the host's masked weights while reusing the host's
ReLU gates ``D^(h')``.  Masks are assumed rescaled, so ``m_ij sqrt(alpha)`` is
0 or 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.stats

from .errors import ConfigError, DegenerateMaskError, DomainError, ShapeError
from .model import C_SIGMA, NetworkState, RandomStream, Role, _draw_support
from .propagation import ForwardTrace, forward_pass, mask_sq_matmul, masked_matmul


@dataclass(frozen=True)
class PseudoTrace:
    source_layer: int
    column: int
    g_seq: tuple[np.ndarray, ...]  # g^(h,j,h') for h' = h .. L
    output: float


def _check_pseudo_args(state: NetworkState, host: ForwardTrace, h: int, j: int):
    cfg = state.config
    if not (cfg.rescale or cfg.alpha == 1.0):
        raise ConfigError("pseudo-networks are defined for rescaled masks")
    if host.batched or host.depth != cfg.depth:
        raise ShapeError("host trace must come from a single input on this network")
    if not 2 <= h <= cfg.depth:
        raise ShapeError(f"source layer {h} outside 2..{cfg.depth}")
    if not 0 <= j < cfg.dims[h - 1]:
        raise ShapeError(f"column {j} outside 0..{cfg.dims[h - 1] - 1}")


def seed_activation(state: NetworkState, host: ForwardTrace, h: int, j: int, row_norms=None) -> np.ndarray:
    """``g^(h,j,h)``; ``row_norms`` may carry precomputed ``||g^(h-1) * m_i||^2``."""
    _check_pseudo_args(state, host, h, j)
    sup = state.support[h - 1]
    indicator = np.ones(state.config.dims[h]) if sup is None else sup[:, j].astype(np.float64)
    col = state.scales[h - 1] * math.sqrt(state.config.alpha) * indicator
    if row_norms is None:
        g_prev = host.g(h - 1)
        row_norms = mask_sq_matmul(state, h, g_prev * g_prev)
    live = col != 0
    bad = np.flatnonzero(live & (row_norms == 0))
    if bad.size:
        raise DegenerateMaskError(h, int(bad[0]))
    ratio = np.zeros_like(col)
    ratio[live] = col[live] / row_norms[live]
    return math.sqrt(C_SIGMA / state.config.dims[h]) * host.D(h) * ratio * host.f(h)


def pseudo_forward(state: NetworkState, host: ForwardTrace, h: int, j: int, row_norms=None) -> PseudoTrace:
    """Trace the pseudo-network of layer ``h`` (1-based), mask column ``j`` (0-based)."""
    g = seed_activation(state, host, h, j, row_norms)
    dims = state.config.dims
    seq = [g]
    for hp in range(h + 1, state.depth + 1):
        g = math.sqrt(C_SIGMA / dims[hp]) * host.D(hp) * masked_matmul(state, hp, g)
        seq.append(g)
    out = float(masked_matmul(state, state.depth + 1, g)[0])
    return PseudoTrace(h, j, tuple(seq), out)


def sampled_pseudo_outputs(state: NetworkState, x, n_pairs: int = 32, stream: RandomStream | None = None) -> np.ndarray:
    """Outputs of ``n_pairs`` pseudo-networks at uniformly drawn (layer, column) seeds."""
    if state.depth < 2:
        raise ConfigError("pseudo-networks need at least two hidden layers")
    stream = stream or state.stream or RandomStream(state.config.seed)
    rng = stream.generator(0, Role.PROBE)
    host = forward_pass(state, x)
    layers = rng.integers(2, state.depth + 1, size=n_pairs)
    outs = np.empty(n_pairs)
    norms = {}
    for k, h in enumerate(layers):
        h = int(h)
        if h not in norms:
            g_prev = host.g(h - 1)
            norms[h] = mask_sq_matmul(state, h, g_prev * g_prev)
        j = int(rng.integers(0, state.config.dims[h - 1]))
        outs[k] = pseudo_forward(state, host, h, j, norms[h]).output
    return outs


@dataclass(frozen=True)
class IndicatorReport:
    mean_lhs: float
    mean_rhs: float
    ks_distance: float


def check_indicator_identity(x, y, n_samples: int, stream: RandomStream) -> IndicatorReport:
    """Compare ``(w.x)^2 [w.y > 0]`` with ``(w.x)^2 [w.x > 0]`` over shared draws ``w ~ N(0, I)``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ShapeError(f"vectors must share one length, got {x.shape} and {y.shape}")
    if not np.any(x) or not np.any(y):
        raise DomainError("indicator identity needs nonzero vectors")
    w = stream.generator(0, Role.PROBE).standard_normal((n_samples, x.size))
    wx = w @ x
    wy = w @ y
    lhs = wx * wx * (wy > 0)
    rhs = wx * wx * (wx > 0)
    ks = 0.0 if np.array_equal(lhs, rhs) else float(scipy.stats.ks_2samp(lhs, rhs).statistic)
    return IndicatorReport(float(lhs.mean()), float(rhs.mean()), ks)


@dataclass(frozen=True)
class NormReport:
    lhs: float
    rhs: float
    samples: np.ndarray

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs


def check_norm_preservation(
    state: NetworkState,
    host: ForwardTrace,
    h: int,
    j: int,
    n_resample: int,
    stream: RandomStream | None = None,
    resample_masks: bool = True,
) -> NormReport:
    """Mean of ``||g^(h,j,L)||^2`` over fresh layers ``h+1..L`` against ``||g^(h,j,h)||^2``.

    The host activations are recomputed for every draw so the gates follow the
    resampled weights, exactly as the conditional expectation requires.
    """
    seed = seed_activation(state, host, h, j)
    rhs = float(seed @ seed)
    L = state.depth
    if h == L:
        return NormReport(rhs, rhs, np.array([rhs]))
    if n_resample < 1:
        raise ConfigError(f"n_resample must be >= 1, got {n_resample}")
    stream = stream or state.stream or RandomStream(state.config.seed)
    dims = state.config.dims
    alpha = state.config.alpha
    samples = np.empty(n_resample)
    for k in range(n_resample):
        pair = np.stack([host.g(h), seed], axis=1)
        for hp in range(h + 1, L + 1):
            shape = (dims[hp], dims[hp - 1])
            w = stream.generator(k, hp, Role.RESAMPLE_WEIGHT).standard_normal(shape)
            if resample_masks and alpha < 1.0:
                w *= _draw_support(stream.generator(k, hp, Role.RESAMPLE_MASK), shape, alpha)
            elif state.support[hp - 1] is not None:
                w *= state.support[hp - 1]
            f = state.scales[hp - 1] * (w @ pair)
            gate = (f[:, 0] > 0).astype(np.float64)
            pair = math.sqrt(C_SIGMA / dims[hp]) * np.stack([np.maximum(f[:, 0], 0.0), gate * f[:, 1]], axis=1)
        samples[k] = pair[:, 1] @ pair[:, 1]
    return NormReport(float(samples.mean()), rhs, samples)
