"""Planted graphical channels: exact and Monte Carlo conditional entropies,
replica functionals and the numerical experiments built on them."""
from .engine import (
    EntropyEstimate,
    PlantedInstance,
    count_solutions,
    edge_derivative_check,
    ensemble_entropy,
    entropy_given_y,
    exact_conditional_entropy,
    mc_conditional_entropy,
    mutual_information,
    posterior,
    sample_instance,
)
from .gamma import (
    ConvexityReport,
    check_convexity,
    gamma_bruteforce,
    gamma_encoded_closed,
    gamma_ksat_closed,
    gamma_nae_closed,
    gamma_parity_closed,
    kernel_gamma,
    walsh_transform,
)
from .hypergraphs import CanonicalPath, EnsembleParams, Hypergraph, IntensityMap, sample_poisson
from .kernels import (
    BisoChannel,
    Kernel,
    SbmParams,
    bec,
    bsc,
    make_encoded_kernel,
    make_ksat_kernel,
    make_nae_kernel,
    make_sbm_kernel,
    make_xor_kernel,
    parse_kernel_spec,
)

__version__ = "0.1.0"
