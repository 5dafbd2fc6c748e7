import numpy as np
import pytest

from pruned_ntk.errors import ConfigError, DegenerateMaskError, DomainError, ShapeError
from pruned_ntk.model import NetworkConfig, RandomStream, build_network
from pruned_ntk.propagation import forward_pass
from pruned_ntk.pseudo import (
    check_indicator_identity,
    check_norm_preservation,
    pseudo_forward,
    sampled_pseudo_outputs,
    seed_activation,
)

from conftest import make_state, random_unit, unit
from oracles import naive_pseudo


def _compare_with_oracle(state, x, alpha, h, j):
    """True when a value was compared; degenerate rows must be flagged by both sides."""
    host = forward_pass(state, x)
    try:
        seq, out = naive_pseudo(state.weights, state.masks, alpha, x, h, j)
    except ZeroDivisionError:
        with pytest.raises(DegenerateMaskError):
            pseudo_forward(state, host, h, j)
        return False
    trace = pseudo_forward(state, host, h, j)
    assert len(trace.g_seq) == len(seq) == state.depth + 1 - h
    for a, b in zip(trace.g_seq, seq):
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-15)
    assert trace.output == pytest.approx(out, rel=1e-12, abs=1e-15)
    return True


def test_pseudo_network_matches_loop_oracle():
    compared = 0
    for seed in range(6):
        state = make_state(2, 4, input_dim=3, alpha=0.5, rescale=True, seed=seed)
        x = random_unit(np.random.default_rng(seed), 3)
        compared += sum(_compare_with_oracle(state, x, 0.5, 2, j) for j in range(4))
    assert compared >= 8


def test_pseudo_network_deeper_matches_oracle():
    compared = 0
    for seed in range(4):
        state = make_state(3, 8, input_dim=3, alpha=0.7, rescale=True, seed=seed)
        x = unit([0.3, 0.9, -0.2])
        compared += sum(_compare_with_oracle(state, x, 0.7, h, j) for h in (2, 3) for j in (0, 5))
    assert compared >= 4


def test_pruned_column_gives_zero_pseudo_network():
    state = make_state(2, 16, input_dim=3, alpha=0.3, rescale=True, seed=1)
    sup = state.support[1]
    row_all_pruned = np.flatnonzero(~sup.any(axis=0))
    if row_all_pruned.size == 0:
        # force the case on a copy of the support
        sup = sup.copy()
        sup[:, 0] = False
        state = type(state)(state.config, state.weights, (state.support[0], sup, *state.support[2:]), state.scales, state.stream)
        j = 0
    else:
        j = int(row_all_pruned[0])
    trace = pseudo_forward(state, forward_pass(state, unit([1, 1, 1])), 2, j)
    assert trace.output == 0.0
    assert not np.any(trace.g_seq[0])


def test_zero_input_is_degenerate():
    state = make_state(2, 8, input_dim=3, alpha=0.5, rescale=True, seed=0)
    host = forward_pass(state, np.zeros(3))
    with pytest.raises(DegenerateMaskError) as info:
        seed_activation(state, host, 2, 0)
    assert info.value.layer == 2


def test_pseudo_requires_rescaled_masks_and_valid_indices():
    off = make_state(2, 8, input_dim=3, alpha=0.5, rescale=False)
    with pytest.raises(ConfigError):
        seed_activation(off, forward_pass(off, np.ones(3)), 2, 0)
    on = make_state(2, 8, input_dim=3, alpha=0.5, rescale=True)
    host = forward_pass(on, np.ones(3))
    with pytest.raises(ShapeError):
        seed_activation(on, host, 1, 0)
    with pytest.raises(ShapeError):
        seed_activation(on, host, 2, 8)
    full = make_state(2, 8, input_dim=3, alpha=1.0, rescale=False)
    seed_activation(full, forward_pass(full, np.ones(3)), 2, 0)


def test_indicator_identity_exact_when_vectors_coincide():
    x = unit([1.0, 2.0, -1.0])
    rep = check_indicator_identity(x, x, 1000, RandomStream(0))
    assert rep.ks_distance == 0.0
    assert rep.mean_lhs == rep.mean_rhs


def test_indicator_identity_means_and_ks():
    rng = np.random.default_rng(8)
    for k in range(3):
        x, y = random_unit(rng, 5), random_unit(rng, 5)
        rep = check_indicator_identity(x, y, 100_000, RandomStream(k))
        # both means estimate ||x||^2 / 2
        assert abs(rep.mean_lhs - 0.5) < 0.02
        assert abs(rep.mean_rhs - 0.5) < 0.02
        assert rep.ks_distance < 0.01


def test_indicator_identity_rejects_zero_and_mismatch():
    with pytest.raises(DomainError):
        check_indicator_identity(np.zeros(3), np.ones(3), 10, RandomStream(0))
    with pytest.raises(ShapeError):
        check_indicator_identity(np.ones(3), np.ones(2), 10, RandomStream(0))


def test_norm_preservation_last_layer_is_exact():
    state = make_state(3, 16, input_dim=3, alpha=0.5, rescale=True, seed=2)
    rep = check_norm_preservation(state, forward_pass(state, unit([1, 0, 1])), 3, 2, 5)
    assert rep.lhs == rep.rhs


@pytest.mark.slow
@pytest.mark.parametrize("alpha", [0.5, 1.0])
def test_norm_preservation_at_width_1024(alpha):
    state = build_network(NetworkConfig.uniform(3, 1024, 8, alpha=alpha, rescale=True, seed=3))
    x = random_unit(np.random.default_rng(3), 8)
    rep = check_norm_preservation(state, forward_pass(state, x), 2, 5, 200)
    assert abs(rep.ratio - 1.0) < 0.1


def test_sampled_outputs_reproducible():
    state = make_state(3, 32, input_dim=4, alpha=0.5, rescale=True, seed=5)
    x = unit([1, 2, 3, 4])
    a = sampled_pseudo_outputs(state, x, 8, RandomStream(5))
    b = sampled_pseudo_outputs(state, x, 8, RandomStream(5))
    assert np.array_equal(a, b)
    assert np.all(np.isfinite(a))
    with pytest.raises(ConfigError):
        sampled_pseudo_outputs(make_state(1, 8, alpha=0.5, rescale=True), np.ones(3))
