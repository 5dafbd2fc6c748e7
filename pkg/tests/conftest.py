import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pruned_ntk.model import NetworkConfig, RandomStream, build_network  # noqa: E402

_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_report():
    """Collects one line per acceptance criterion; printed in the terminal summary."""
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def tiny_state():
    """d0=3, L=2, d=4, alpha=0.5, unrescaled."""
    return build_network(NetworkConfig.uniform(2, 4, 3, alpha=0.5, seed=11))


def unit(v):
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v)


def random_unit(rng, dim):
    return unit(rng.standard_normal(dim))


def make_state(depth, width, input_dim=3, alpha=1.0, rescale=False, seed=0, stream_id=0, **kw):
    cfg = NetworkConfig.uniform(depth, width, input_dim, alpha=alpha, rescale=rescale, seed=seed, **kw)
    return build_network(cfg, RandomStream(seed, stream_id))


@pytest.fixture(scope="session")
def alpha_sweeps():
    """Linear and quadratic alpha sweeps at d_ref=1024, 100 samples; computed once per session."""
    import time

    from pruned_ntk.experiments import AlphaSweepSpec, run_alpha_sweep

    t0 = time.perf_counter()
    lin = run_alpha_sweep(AlphaSweepSpec(d_ref=1024, scaling="linear", n_samples=100))
    quad = run_alpha_sweep(AlphaSweepSpec(d_ref=1024, scaling="quadratic", n_samples=100))
    return {"linear": lin, "quadratic": quad, "seconds": time.perf_counter() - t0}
