"""Empirical and infinite-width neural tangent kernels of randomly pruned ReLU networks."""

__version__ = "0.1.0"

from .analytic import AnalyticKernel, kernel_recursion, limit_matrix, ntk_regress, pruned_limit, relu_dual
from .empirical import NtkAggregate, NtkEstimate, ntk_gram, ntk_monte_carlo, ntk_pair, summarize
from .errors import (
    ConfigError,
    DegenerateMaskError,
    DomainError,
    ResourceError,
    ShapeError,
    SingularKernelError,
)
from .model import NetworkConfig, NetworkState, RandomStream, build_network, mask_survival_stats, unit_input_pair
from .propagation import backward_pass, forward_pass, layer_gradient, toggle_rescale
from .pseudo import check_indicator_identity, check_norm_preservation, pseudo_forward
