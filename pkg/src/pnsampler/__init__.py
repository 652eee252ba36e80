"""Rejection-Free and Partial Neighbor Search MCMC samplers."""
from .kernels import BACKEND

__version__ = "0.1.0"

from .continuous import ContinuousChain, DonutsModel, run_mh_continuous, run_unbiased_pns_continuous
from .metrics import WeightedEmpirical, donuts_bias_suite, estimate, starting_distribution, tvd
from .models import (
    QuboModel,
    TabularModel,
    exact_distribution,
    hypercube16,
    make_qubo_random,
    qubo_flip_delta,
    triangle,
)
from .optimize import CoolingSchedule, OptimizationResult, hybrid_burn_in, run_opt_pns, run_opt_rf, run_sa
from .samplers import (
    BurnIn,
    JumpChain,
    Method,
    SamplerConfig,
    run,
    run_basic_pns,
    run_mh,
    run_mh_alternating,
    run_rf,
    run_rf_alternating,
    run_unbiased_pns,
    run_unbiased_pns_naive,
)
from .schemes import PartialNeighborScheme, SchemeKind, random_index_set, symmetric_pair_offsets, systematic_index_set
from .select import sample_multiplicity, select_proportional, transition_weights

__all__ = [name for name in dir() if not name.startswith("_")]
