"""Hand-coded forward and backward passes of a masked ReLU network.

Inputs may be a single point of shape ``(d0,)`` or a batch of rows
``(n, d0)``.  Batches are carried as columns, so every per-layer array in a
trace has shape ``(d_h,)`` or ``(d_h, n)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, ShapeError
from .model import BLOCK_ENTRIES, C_SIGMA, NetworkState


def _row_step(cols: int) -> int:
    return max(1, BLOCK_ENTRIES // max(cols, 1))


def masked_matmul(state: NetworkState, h: int, v: np.ndarray) -> np.ndarray:
    """``(W^(h) * m^(h)) @ v`` without forming the masked matrix."""
    w = state.weights[h - 1]
    sup = state.support[h - 1]
    s = state.scales[h - 1]
    if sup is None:
        return s * (w @ v)
    rows, cols = w.shape
    out = np.empty((rows,) + v.shape[1:])
    step = _row_step(cols)
    for r0 in range(0, rows, step):
        r1 = min(rows, r0 + step)
        out[r0:r1] = (w[r0:r1] * sup[r0:r1]) @ v
    return s * out


def masked_rmatmul(state: NetworkState, h: int, u: np.ndarray) -> np.ndarray:
    """``(W^(h) * m^(h)).T @ u``."""
    w = state.weights[h - 1]
    sup = state.support[h - 1]
    s = state.scales[h - 1]
    if sup is None:
        return s * (w.T @ u)
    rows, cols = w.shape
    out = np.zeros((cols,) + u.shape[1:])
    step = _row_step(cols)
    for r0 in range(0, rows, step):
        r1 = min(rows, r0 + step)
        out += (w[r0:r1] * sup[r0:r1]).T @ u[r0:r1]
    return s * out


def mask_sq_matmul(state: NetworkState, h: int, p: np.ndarray) -> np.ndarray:
    """``(m^(h) * m^(h)) @ p``; row ``i`` gives ``sum_j m_ij^2 p_j``."""
    sup = state.support[h - 1]
    s2 = state.scales[h - 1] ** 2
    rows, cols = state.weights[h - 1].shape
    if sup is None:
        return s2 * np.broadcast_to(p.sum(axis=0), (rows,) + p.shape[1:]).copy()
    out = np.empty((rows,) + p.shape[1:])
    step = _row_step(cols)
    for r0 in range(0, rows, step):
        r1 = min(rows, r0 + step)
        out[r0:r1] = sup[r0:r1].astype(np.float64) @ p
    return s2 * out


@dataclass(frozen=True)
class ForwardTrace:
    preacts: tuple[np.ndarray, ...]  # f^(1) .. f^(L+1)
    acts: tuple[np.ndarray, ...]  # g^(0) = x .. g^(L)
    relu_diag: tuple[np.ndarray, ...]  # D^(1) .. D^(L), 0/1 floats

    def f(self, h: int) -> np.ndarray:
        return self.preacts[h - 1]

    def g(self, h: int) -> np.ndarray:
        return self.acts[h]

    def D(self, h: int) -> np.ndarray:
        return self.relu_diag[h - 1]

    @property
    def depth(self) -> int:
        return len(self.relu_diag)

    @property
    def batched(self) -> bool:
        return self.acts[0].ndim == 2

    @property
    def output(self):
        out = self.preacts[-1][0]
        return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class BackwardTrace:
    back: tuple[np.ndarray, ...]  # b^(1) .. b^(L+1)

    def b(self, h: int) -> np.ndarray:
        return self.back[h - 1]


def _columns(state: NetworkState, x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    d0 = state.config.input_dim
    if arr.ndim == 1 and arr.shape[0] == d0:
        return arr
    if arr.ndim == 2 and arr.shape[1] == d0:
        return arr.T.copy()
    raise ShapeError(f"expected input of length {d0}, got shape {arr.shape}")


def forward_pass(state: NetworkState, x) -> ForwardTrace:
    """Run ``f^(h) = (W^(h) * m^(h)) g^(h-1)``, ``g^(h) = sqrt(c/d_h) relu(f^(h))``."""
    g = _columns(state, x)
    dims = state.config.dims
    L = state.depth
    preacts, acts, diags = [], [g], []
    for h in range(1, L + 2):
        f = masked_matmul(state, h, g)
        preacts.append(f)
        if h <= L:
            diags.append((f > 0).astype(np.float64))
            g = math.sqrt(C_SIGMA / dims[h]) * np.maximum(f, 0.0)
            acts.append(g)
    return ForwardTrace(tuple(preacts), tuple(acts), tuple(diags))


def backward_pass(state: NetworkState, trace: ForwardTrace) -> BackwardTrace:
    """``b^(L+1) = 1``, ``b^(h) = sqrt(c/d_h) D^(h) (W^(h+1) * m^(h+1))^T b^(h+1)``."""
    L = state.depth
    dims = state.config.dims
    if trace.depth != L or any(trace.f(h).shape[0] != dims[h] for h in range(1, L + 2)):
        raise ShapeError("forward trace does not belong to this network")
    b = np.ones_like(trace.f(L + 1))
    back = [b]
    for h in range(L, 0, -1):
        b = math.sqrt(C_SIGMA / dims[h]) * trace.D(h) * masked_rmatmul(state, h + 1, b)
        back.append(b)
    return BackwardTrace(tuple(reversed(back)))


def layer_gradient(state: NetworkState, ftrace: ForwardTrace, btrace: BackwardTrace, h: int) -> np.ndarray:
    """``df/dW^(h) = (b^(h) g^(h-1)^T) * m^(h)`` for a single input."""
    L = state.depth
    if not 1 <= h <= L + 1:
        raise ShapeError(f"layer index {h} outside 1..{L + 1}")
    if ftrace.batched:
        raise ShapeError("layer_gradient takes the trace of a single input")
    return np.outer(btrace.b(h), ftrace.g(h - 1)) * state.mask(h)


def toggle_rescale(state: NetworkState, on: bool) -> NetworkState:
    """Same weights and mask support, surviving entries set to ``1/sqrt(alpha)`` or 1."""
    cfg = state.config.with_(rescale=bool(on))
    scales = tuple(cfg.mask_value if cfg.is_pruned(h) else 1.0 for h in range(1, cfg.depth + 2))
    return replace(state, config=cfg, scales=scales)


def scale_masks(state: NetworkState, c: float) -> NetworkState:
    """Multiply every pruned layer's mask by ``c > 0`` (input layer untouched)."""
    if not c > 0:
        raise ConfigError(f"mask scale must be positive, got {c}")
    cfg = state.config
    scales = tuple(s * c if cfg.is_pruned(h) else s for h, s in enumerate(state.scales, start=1))
    return replace(state, scales=scales)
