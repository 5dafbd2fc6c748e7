"""Empirical NTK of realized pruned networks and its Monte-Carlo summaries."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .analytic import kernel_recursion, limit_matrix, pruned_limit
from .errors import ConfigError, ShapeError
from .model import NetworkConfig, NetworkState, RandomStream, as_input, build_network
from .propagation import backward_pass, forward_pass, mask_sq_matmul


@dataclass(frozen=True)
class NtkEstimate:
    total: float
    per_layer: tuple[float, ...]
    sample_id: int = 0
    width_used: int = 0
    alpha: float = 1.0


@dataclass(frozen=True)
class NtkAggregate:
    mean: float
    sample_std: float
    mad_vs_limit: float
    n_samples: int
    per_layer_mean: tuple[float, ...] = ()
    estimates: tuple[NtkEstimate, ...] = field(default=(), repr=False)


def _pair_contributions(state: NetworkState, X: np.ndarray, pairs) -> np.ndarray:
    """Per-layer NTK terms for column pairs of the batch ``X`` (rows are inputs).

    Layer h contributes ``sum_i b_i(x) b_i(x') <g(x) * m_i, g(x') * m_i>``, so
    only one pass over each mask is needed per batch.
    """
    ft = forward_pass(state, X)
    bt = backward_pass(state, ft)
    a_idx = np.array([p[0] for p in pairs])
    b_idx = np.array([p[1] for p in pairs])
    out = np.empty((state.depth + 1, len(pairs)))
    for h in range(1, state.depth + 2):
        g = ft.g(h - 1)
        b = bt.b(h)
        overlap = mask_sq_matmul(state, h, g[:, a_idx] * g[:, b_idx])
        out[h - 1] = np.einsum("ip,ip,ip->p", b[:, a_idx], b[:, b_idx], overlap)
    return out


def ntk_pair(state: NetworkState, x, x2, sample_id: int = 0) -> NtkEstimate:
    """NTK value of one realization at ``(x, x2)``, split by weight matrix."""
    d0 = state.config.input_dim
    x = as_input(x, d0)
    x2 = as_input(x2, d0)
    # canonical order keeps the result bitwise symmetric in its arguments
    if tuple(x2) < tuple(x):
        x, x2 = x2, x
    per_layer = _pair_contributions(state, np.stack([x, x2]), [(0, 1)])[:, 0]
    width = max(state.config.widths)
    return NtkEstimate(float(per_layer.sum()), tuple(float(v) for v in per_layer), sample_id, width, state.config.alpha)


def realization_gram(state: NetworkState, X) -> np.ndarray:
    """Gram matrix of one realization's gradients over the rows of ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != state.config.input_dim:
        raise ShapeError(f"inputs have dimension {X.shape[1]}, network expects {state.config.input_dim}")
    n = X.shape[0]
    pairs = [(a, b) for a in range(n) for b in range(a, n)]
    terms = _pair_contributions(state, X, pairs).sum(axis=0)
    gram = np.empty((n, n))
    for (a, b), v in zip(pairs, terms):
        gram[a, b] = gram[b, a] = v
    return gram


def ntk_gram(source, X, mode: str = "realization") -> np.ndarray:
    """Kernel matrix over the rows of ``X``.

    ``mode="realization"`` uses a single network for every pair (a
    :class:`NetworkState`, or one built from a :class:`NetworkConfig`), which
    makes the result a true Gram matrix.  ``mode="analytic"`` evaluates the
    width limit for the config's depth, keep-probability and rescale flag.
    """
    if mode == "realization":
        state = source if isinstance(source, NetworkState) else build_network(source)
        return realization_gram(state, X)
    if mode == "analytic":
        cfg = source.config if isinstance(source, NetworkState) else source
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        gram = limit_matrix(X, X, cfg.depth)
        gram = 0.5 * (gram + gram.T)
        return gram if cfg.rescale else cfg.alpha**cfg.depth * gram
    raise ConfigError(f"unknown gram mode {mode!r}")


def summarize(estimates, reference: float = math.nan) -> NtkAggregate:
    """Mean, sample std (0 for a single sample) and MAD against ``reference``."""
    estimates = tuple(estimates)
    if not estimates:
        raise ConfigError("need at least one estimate")
    totals = np.array([e.total for e in estimates])
    n = totals.size
    mean = float(totals.mean())
    std = float(totals.std(ddof=1)) if n > 1 else 0.0
    mad = math.nan if math.isnan(reference) else float(np.abs(totals - reference).mean())
    per_layer = tuple(float(v) for v in np.mean([e.per_layer for e in estimates], axis=0))
    return NtkAggregate(mean, std, mad, n, per_layer, estimates)


def sample_state(config: NetworkConfig, index: int) -> NetworkState:
    """Network of Monte-Carlo sample ``index``; rebuildable on its own."""
    return build_network(config, RandomStream(config.seed, index))


def ntk_samples(config: NetworkConfig, x, x2, n_samples: int, threads: int = 1) -> list[NtkEstimate]:
    if n_samples < 1:
        raise ConfigError(f"n_samples must be >= 1, got {n_samples}")

    def one(i):
        return ntk_pair(sample_state(config, i), x, x2, sample_id=i)

    if threads <= 1:
        return [one(i) for i in range(n_samples)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, range(n_samples)))


def ntk_monte_carlo(config: NetworkConfig, x, x2, n_samples: int, reference: float = math.nan, threads: int = 1) -> NtkAggregate:
    """Summary of ``n_samples`` independent realizations; sample ``i`` uses stream id ``i``."""
    return summarize(ntk_samples(config, x, x2, n_samples, threads), reference)


def limit_for(config: NetworkConfig, x, x2) -> float:
    """Width limit the empirical NTK of ``config`` should approach."""
    return pruned_limit(kernel_recursion(x, x2, config.depth), config.alpha, config.rescale)
