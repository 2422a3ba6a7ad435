"""Lattice coding for the unconstrained AWGN channel.

Exact sphere decoding and bias-controlled stack sequential decoding over
integer lattices, closed-form error-exponent and complexity formulas, and
a seeded Monte-Carlo harness for performance/complexity tradeoff sweeps.
"""

__version__ = "0.1.0"

from .lattice import (
    LatticeBasis,
    ModPCodeSpec,
    SingularBasisError,
    InvalidSpecError,
    build_basis,
    construct_mod_p,
    effective_radius_sq,
    lll_reduce,
    load_basis,
    mod_p_kappa,
    random_parity,
    save_basis,
    vnr,
)
from .channel import (
    ChannelInstance,
    DimensionMismatchError,
    GAUSSIAN_ALGORITHM,
    TransmissionRecord,
    draw_message,
    noise_vector,
    stream_rng,
    transmit,
)
from .decoders import (
    DecodeOutcome,
    DecodeStatus,
    PathNode,
    StackConfig,
    first_child,
    next_sibling,
    path_metric,
    root_node,
    se_first,
    se_next,
    sphere_decode,
    stack_decode,
)
from .analysis import (
    ComplexityEstimate,
    DomainError,
    ExponentQuery,
    FIXED_BIAS,
    SCALED_BIAS,
    complexity_estimate,
    cutoff_vnr,
    effective_vnr,
    high_vnr_shift,
    poltyrev_exponent,
    sequential_exponent,
    sk_estimate,
)
from .harness import (
    InvalidConfigError,
    RowStats,
    SweepResult,
    SweepSpec,
    binomial_interval,
    load_sweep_spec,
    resolve_basis,
    resolve_bias,
    run_sweep,
    tail_distribution,
)

__all__ = [
    "LatticeBasis", "ModPCodeSpec", "SingularBasisError", "InvalidSpecError",
    "build_basis", "construct_mod_p", "effective_radius_sq", "lll_reduce",
    "load_basis", "mod_p_kappa", "random_parity", "save_basis", "vnr",
    "ChannelInstance", "DimensionMismatchError", "GAUSSIAN_ALGORITHM",
    "TransmissionRecord", "draw_message", "noise_vector", "stream_rng", "transmit",
    "DecodeOutcome", "DecodeStatus", "PathNode", "StackConfig", "first_child",
    "next_sibling", "path_metric", "root_node", "se_first", "se_next",
    "sphere_decode", "stack_decode",
    "ComplexityEstimate", "DomainError", "ExponentQuery", "FIXED_BIAS",
    "SCALED_BIAS", "complexity_estimate", "cutoff_vnr", "effective_vnr",
    "high_vnr_shift", "poltyrev_exponent", "sequential_exponent", "sk_estimate",
    "InvalidConfigError", "RowStats", "SweepResult", "SweepSpec",
    "binomial_interval", "load_sweep_spec", "resolve_basis", "resolve_bias",
    "run_sweep", "tail_distribution",
]
