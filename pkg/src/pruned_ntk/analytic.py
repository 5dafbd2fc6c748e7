"""Infinite-width kernels of ReLU networks and the kernel regression predictor.

The bivariate-Gaussian ReLU moments use the arc-cosine closed forms (with
``c_sigma = 2``)::

    rho = S12 / sqrt(S11 S22),  theta = arccos(rho)
    c E[relu(u) relu(v)] = sqrt(S11 S22) / pi * (sin(theta) + (pi - theta) rho)
    c E[step(u) step(v)] = (pi - theta) / pi
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.linalg import LinAlgError, LinAlgWarning

from .errors import ConfigError, DomainError, ShapeError, SingularKernelError

RHO_CLAMP_TOL = 1e-9

# Step-moment convention when a variance vanishes (only reachable with a zero input).
DEGENERATE_DOT = 0.5


def _dual_arrays(s11, s22, s12):
    s11, s22, s12 = np.broadcast_arrays(*(np.asarray(a, dtype=np.float64) for a in (s11, s22, s12)))
    if np.any(s11 < 0) or np.any(s22 < 0):
        raise DomainError("negative variance in covariance matrix")
    norm = np.sqrt(s11 * s22)
    degenerate = norm == 0.0
    safe = np.where(degenerate, 1.0, norm)
    rho = np.where(degenerate, 0.0, s12 / safe)
    if np.any(np.abs(rho) > 1.0 + RHO_CLAMP_TOL):
        raise DomainError(f"covariance is not PSD: |rho| = {np.max(np.abs(rho)):.12g}")
    rho = np.clip(rho, -1.0, 1.0)
    theta = np.arccos(rho)
    pair = norm / math.pi * (np.sin(theta) + (math.pi - theta) * rho)
    dot = (math.pi - theta) / math.pi
    pair = np.where(degenerate, 0.0, pair)
    dot = np.where(degenerate, DEGENERATE_DOT, dot)
    return pair, dot


def _dual_scalar(s11: float, s22: float, s12: float) -> tuple[float, float]:
    """Scalar twin of :func:`_dual_arrays`; numpy dispatch dominates at this size."""
    if s11 < 0 or s22 < 0:
        raise DomainError("negative variance in covariance matrix")
    norm = math.sqrt(s11 * s22)
    if norm == 0.0:
        return 0.0, DEGENERATE_DOT
    rho = s12 / norm
    if abs(rho) > 1.0 + RHO_CLAMP_TOL:
        raise DomainError(f"covariance is not PSD: |rho| = {abs(rho):.12g}")
    rho = min(1.0, max(-1.0, rho))
    theta = math.acos(rho)
    return norm / math.pi * (math.sin(theta) + (math.pi - theta) * rho), (math.pi - theta) / math.pi


def relu_dual(cov) -> tuple[float, float]:
    """``(2 E[relu(u) relu(v)], 2 E[step(u) step(v)])`` for ``(u, v) ~ N(0, cov)``."""
    cov = np.asarray(cov, dtype=np.float64)
    if cov.shape != (2, 2):
        raise ShapeError(f"expected a 2x2 covariance, got {cov.shape}")
    if not math.isclose(cov[0, 1], cov[1, 0], rel_tol=1e-12, abs_tol=1e-15):
        raise DomainError("covariance is not symmetric")
    return _dual_scalar(float(cov[0, 0]), float(cov[1, 1]), float(cov[0, 1]))


@dataclass(frozen=True)
class AnalyticKernel:
    """Layerwise limits for one input pair.

    ``sigma[h]`` is Sigma^(h)(x, x') for h = 0..L, ``sigma_dot[h-1]`` is
    Sigma-dot^(h) for h = 1..L, ``lambdas[h-1]`` the 2x2 covariance feeding
    layer h.  The output layer is linear, so its step factor is 1.
    """

    sigma: tuple[float, ...]
    sigma_dot: tuple[float, ...]
    lambdas: tuple[np.ndarray, ...]
    theta_inf: float

    @property
    def depth(self) -> int:
        return len(self.sigma_dot)

    def dot_product(self, h: int) -> float:
        """``prod_{h'=h}^{L} sigma_dot^(h')`` (empty product is 1)."""
        return float(np.prod(self.sigma_dot[h - 1 :]))

    def layer_terms(self) -> tuple[float, ...]:
        """Contribution of each weight matrix W^(1) .. W^(L+1) to ``theta_inf``."""
        return tuple(self.sigma[h - 1] * self.dot_product(h) for h in range(1, self.depth + 2))


def _theta_from(sigma, sigma_dot):
    L = len(sigma_dot)
    total = 0.0
    for h in range(1, L + 2):
        total = total + sigma[h - 1] * np.prod(sigma_dot[h - 1 :], axis=0)
    return total


def kernel_recursion(x, x2, depth: int) -> AnalyticKernel:
    """Iterate the covariance recursion ``depth`` hidden layers deep."""
    x = np.asarray(x, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    if x.shape != x2.shape or x.ndim != 1:
        raise ShapeError(f"inputs must be vectors of equal length, got {x.shape} and {x2.shape}")
    if depth < 1:
        raise ConfigError(f"depth must be >= 1, got {depth}")
    sxx, syy, sxy = float(x @ x), float(x2 @ x2), float(x @ x2)
    sigma, dots, lambdas = [sxy], [], []
    for _ in range(depth):
        lam = np.array([[sxx, sxy], [sxy, syy]])
        lambdas.append(lam)
        pair, dot = _dual_scalar(sxx, syy, sxy)
        sxx, _ = _dual_scalar(sxx, sxx, sxx)
        syy, _ = _dual_scalar(syy, syy, syy)
        sxy = pair
        sigma.append(sxy)
        dots.append(dot)
    theta = math.fsum(sigma[h - 1] * math.prod(dots[h - 1 :]) for h in range(1, depth + 2))
    return AnalyticKernel(tuple(sigma), tuple(dots), tuple(lambdas), theta)


def limit_matrix(X1, X2, depth: int) -> np.ndarray:
    """``Theta_inf(X1[a], X2[b])`` for all row pairs, vectorized over pairs."""
    X1 = np.atleast_2d(np.asarray(X1, dtype=np.float64))
    X2 = np.atleast_2d(np.asarray(X2, dtype=np.float64))
    if X1.shape[1] != X2.shape[1]:
        raise ShapeError(f"input dimensions differ: {X1.shape[1]} vs {X2.shape[1]}")
    if depth < 1:
        raise ConfigError(f"depth must be >= 1, got {depth}")
    n1 = np.einsum("ij,ij->i", X1, X1)[:, None]
    n2 = np.einsum("ij,ij->i", X2, X2)[None, :]
    sxx, syy = np.broadcast_to(n1, (X1.shape[0], X2.shape[0])), np.broadcast_to(n2, (X1.shape[0], X2.shape[0]))
    sxy = X1 @ X2.T
    sigma, dots = [sxy], []
    for _ in range(depth):
        pair, dot = _dual_arrays(sxx, syy, sxy)
        sxx, _ = _dual_arrays(sxx, sxx, sxx)
        syy, _ = _dual_arrays(syy, syy, syy)
        sxy = pair
        sigma.append(sxy)
        dots.append(dot)
    return _theta_from(sigma, np.stack(dots)) if depth else sigma[0]


def pruned_limit(kernel: AnalyticKernel, alpha: float, rescaled: bool) -> float:
    """Width limit of the pruned NTK: ``alpha^L theta_inf``, or ``theta_inf`` when rescaled."""
    if not 0.0 < alpha <= 1.0:
        raise ConfigError(f"alpha must lie in (0, 1], got {alpha}")
    if rescaled:
        return kernel.theta_inf
    return alpha**kernel.depth * kernel.theta_inf


def _solve_sym(a, y):
    with warnings.catch_warnings():
        warnings.simplefilter("error", LinAlgWarning)
        return scipy.linalg.solve(a, y, assume_a="sym")


def ntk_regress(gram, kvec, y, jitter: float = 0.0):
    """Kernel predictor ``kvec^T gram^{-1} y``.

    ``kvec`` is one row of test-vs-train kernel values, or a matrix with one
    row per test point.  The plain system is tried first; ``jitter`` is added to
    the diagonal only when it is singular or numerically so.
    """
    gram = np.asarray(gram, dtype=np.float64)
    kvec = np.asarray(kvec, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = gram.shape[0]
    if gram.shape != (n, n) or y.shape != (n,) or kvec.shape[-1] != n:
        raise ShapeError(f"incompatible shapes gram={gram.shape}, kvec={kvec.shape}, y={y.shape}")
    if not np.all(np.isfinite(y)):
        raise DomainError("targets must be finite")
    if jitter < 0:
        raise ConfigError(f"jitter must be >= 0, got {jitter}")
    try:
        coef = _solve_sym(gram, y)
    except (LinAlgError, LinAlgWarning) as exc:
        if jitter == 0.0:
            rcond = 1.0 / np.linalg.cond(gram)
            raise SingularKernelError(f"kernel matrix is singular (rcond ~ {rcond:.3g}); set a jitter", rcond) from exc
        try:
            coef = _solve_sym(gram + jitter * np.eye(n), y)
        except (LinAlgError, LinAlgWarning) as exc2:
            rcond = 1.0 / np.linalg.cond(gram + jitter * np.eye(n))
            raise SingularKernelError(f"kernel matrix singular even with jitter {jitter} (rcond ~ {rcond:.3g})", rcond) from exc2
    pred = kvec @ coef
    return float(pred) if pred.ndim == 0 else pred
