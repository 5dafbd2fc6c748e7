"""Width and keep-probability sweeps of the pruned-network NTK."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .analytic import kernel_recursion, pruned_limit
from .empirical import ntk_monte_carlo
from .errors import ConfigError, ResourceError
from .model import NetworkConfig, unit_input_pair

CSV_COLUMNS = ("sweep_var", "width", "mean", "std", "mad", "limit", "n_samples")

DEFAULT_WIDTHS = tuple(32 * 2**k for k in range(9))  # 32 .. 8192
DEFAULT_ALPHAS = (1.0, 0.9, 0.8, 0.7, 0.6, 0.5)


@dataclass(frozen=True)
class WidthSweepSpec:
    widths: tuple[int, ...] = DEFAULT_WIDTHS
    depth: int = 3
    alpha: float = 0.5
    rescale: bool = True
    n_samples: int = 64
    seed: int = 0
    input_dim: int = 16
    x: tuple[float, ...] | None = None
    x2: tuple[float, ...] | None = None
    include_control: bool = True
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        if not self.widths or any(w < 1 for w in self.widths):
            raise ConfigError(f"widths must be positive, got {self.widths}")
        if any(b <= a for a, b in zip(self.widths, self.widths[1:])):
            raise ConfigError(f"widths must be strictly increasing, got {self.widths}")
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in (0, 1], got {self.alpha}")
        _check_common(self)


@dataclass(frozen=True)
class AlphaSweepSpec:
    alphas: tuple[float, ...] = DEFAULT_ALPHAS
    d_ref: int = 1024
    scaling: str = "linear"
    n_samples: int = 100
    depth: int = 3
    rescale: bool = True
    seed: int = 0
    input_dim: int = 16
    x: tuple[float, ...] | None = None
    x2: tuple[float, ...] | None = None
    max_width: int = 20000
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        if not self.alphas or any(not 0.0 < a <= 1.0 for a in self.alphas):
            raise ConfigError(f"alphas must lie in (0, 1], got {self.alphas}")
        if self.scaling not in ("linear", "quadratic"):
            raise ConfigError(f"scaling must be 'linear' or 'quadratic', got {self.scaling!r}")
        if self.d_ref < 1:
            raise ConfigError(f"d_ref must be positive, got {self.d_ref}")
        _check_common(self)

    def width_for(self, alpha: float) -> int:
        power = 1 if self.scaling == "linear" else 2
        return max(1, int(round(self.d_ref / alpha**power)))


def _check_common(spec):
    if spec.depth < 1 or spec.n_samples < 1 or spec.input_dim < 1:
        raise ConfigError("depth, n_samples and input_dim must be positive")
    if (spec.x is None) != (spec.x2 is None):
        raise ConfigError("give both explicit inputs or neither")
    if spec.x is not None:
        object.__setattr__(spec, "x", tuple(float(v) for v in spec.x))
        object.__setattr__(spec, "x2", tuple(float(v) for v in spec.x2))
        if len(spec.x) != len(spec.x2):
            raise ConfigError("explicit inputs differ in length")
        object.__setattr__(spec, "input_dim", len(spec.x))


@dataclass(frozen=True)
class SweepRow:
    sweep_var: float
    width: int
    mean: float
    std: float
    mad: float
    limit: float
    n_samples: int


@dataclass
class SweepResult:
    rows: list[SweepRow]
    metadata: dict = field(default_factory=dict)

    def to_csv(self, fh=None) -> str:
        """Write the table (header included); floats use shortest round-trip repr."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in self.rows:
            writer.writerow([repr(float(r.sweep_var)), r.width, repr(r.mean), repr(r.std), repr(r.mad), repr(r.limit), r.n_samples])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text

    @classmethod
    def from_csv(cls, text: str) -> "SweepResult":
        reader = csv.DictReader(io.StringIO(text))
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ConfigError(f"unexpected CSV header {reader.fieldnames}")
        rows = [
            SweepRow(float(d["sweep_var"]), int(d["width"]), float(d["mean"]), float(d["std"]), float(d["mad"]), float(d["limit"]), int(d["n_samples"]))
            for d in reader
        ]
        return cls(rows)

    def series(self, sweep_var: float) -> list[SweepRow]:
        return [r for r in self.rows if r.sweep_var == sweep_var]


def spec_digest(spec) -> str:
    payload = json.dumps(asdict(spec), sort_keys=True, default=list)
    return hashlib.sha256(payload.encode()).hexdigest()


def _input_pair(spec):
    if spec.x is not None:
        return np.array(spec.x), np.array(spec.x2)
    return unit_input_pair(spec.seed, spec.input_dim)


def _row(cfg: NetworkConfig, sweep_var, x, x2, n_samples, kernel, threads) -> SweepRow:
    limit = pruned_limit(kernel, cfg.alpha, cfg.rescale)
    agg = ntk_monte_carlo(cfg, x, x2, n_samples, limit, threads)
    return SweepRow(sweep_var, max(cfg.widths), agg.mean, agg.sample_std, agg.mad_vs_limit, limit, n_samples)


def _metadata(kind, spec, x, x2, **extra):
    return {
        "kind": kind,
        "seed": spec.seed,
        "x": [float(v) for v in x],
        "x2": [float(v) for v in x2],
        "config_digest": spec_digest(spec),
        **extra,
    }


def run_width_sweep(spec: WidthSweepSpec) -> SweepResult:
    """Pruned network at ``spec.alpha`` and an unpruned control at every width.

    Rows carry the keep-probability as ``sweep_var`` (``spec.alpha`` for the
    pruned series, 1.0 for the control) and are ordered width by width.
    """
    x, x2 = _input_pair(spec)
    kernel = kernel_recursion(x, x2, spec.depth)
    rows = []
    for width in spec.widths:
        cfg = NetworkConfig.uniform(spec.depth, width, len(x), alpha=spec.alpha, rescale=spec.rescale, seed=spec.seed)
        rows.append(_row(cfg, spec.alpha, x, x2, spec.n_samples, kernel, spec.threads))
        if spec.include_control and spec.alpha != 1.0:
            rows.append(_row(cfg.with_(alpha=1.0), 1.0, x, x2, spec.n_samples, kernel, spec.threads))
    return SweepResult(rows, _metadata("width", spec, x, x2, theta_inf=kernel.theta_inf))


def run_alpha_sweep(spec: AlphaSweepSpec) -> SweepResult:
    """One row per keep-probability, width ``d_ref / alpha`` or ``d_ref / alpha^2``."""
    widths = [spec.width_for(a) for a in spec.alphas]
    for a, w in zip(spec.alphas, widths):
        if w > spec.max_width:
            raise ResourceError(f"alpha={a} needs width {w} > max_width {spec.max_width}")
    x, x2 = _input_pair(spec)
    kernel = kernel_recursion(x, x2, spec.depth)
    rows = []
    for a, w in zip(spec.alphas, widths):
        cfg = NetworkConfig.uniform(spec.depth, w, len(x), alpha=a, rescale=spec.rescale, seed=spec.seed)
        rows.append(_row(cfg, a, x, x2, spec.n_samples, kernel, spec.threads))
    return SweepResult(rows, _metadata("alpha", spec, x, x2, theta_inf=kernel.theta_inf, alpha_grid=list(spec.alphas), scaling=spec.scaling))


def noise_band(row_a: SweepRow, row_b: SweepRow, k: float = 2.0) -> float:
    """``k * pooled_std / sqrt(n)`` for comparing two sweep points."""
    pooled = math.sqrt(0.5 * (row_a.std**2 + row_b.std**2))
    return k * pooled / math.sqrt(min(row_a.n_samples, row_b.n_samples))
