"""Covert communication over binary-input channels.

Divergence calculus for low-weight input processes, channel-resolvability
and spread-spectrum codes with threshold decoders, warden detection
curves and a reproducible experiment harness.
"""
from .channels import (
    ChannelPair,
    FiniteDistribution,
    GaussianPair,
    MultiSymbolChannel,
    bsc_pair,
    capacity_binary_input,
    gaussian_closed_forms,
    load_channel_pair,
)
from .divergence import (
    chi_k,
    eta_k,
    jensen_shannon_binary,
    kl,
    mixture_divergence_bounds,
    mixture_divergence_exact,
    mutual_info_binary,
    tv,
)
from .errors import AssumptionError, ChannelSpecError, ConfigError, InfeasibleError
from .process import (
    CovertParameters,
    support_revealing_constant,
    asymptotic_constants,
    covertness_budget,
    multi_symbol_constants,
    omega_schedule,
    scaling_class,
    solve_alpha_for_budget,
)

__all__ = [
    "ChannelPair",
    "FiniteDistribution",
    "GaussianPair",
    "MultiSymbolChannel",
    "bsc_pair",
    "capacity_binary_input",
    "gaussian_closed_forms",
    "load_channel_pair",
    "chi_k",
    "eta_k",
    "jensen_shannon_binary",
    "kl",
    "mixture_divergence_bounds",
    "mixture_divergence_exact",
    "mutual_info_binary",
    "tv",
    "AssumptionError",
    "ChannelSpecError",
    "ConfigError",
    "InfeasibleError",
    "CovertParameters",
    "support_revealing_constant",
    "asymptotic_constants",
    "covertness_budget",
    "multi_symbol_constants",
    "omega_schedule",
    "scaling_class",
    "solve_alpha_for_budget",
]

__version__ = "0.1.0"
