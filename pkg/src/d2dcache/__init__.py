"""Incentive-aware device caching with pairwise contact mobility.

The operator pays users for cache space (closed-form follower best response), then picks
which user caches which file by local search on a submodular objective over the
per-user cache-quota partition matroid.
"""
from .baselines import exhaustive_oracle, line_search_uniform, popular_placement, random_placement
from .game import best_response, payment, required_price, user_utility
from .kernels import BACKEND
from .model import (
    CostModel,
    DemandModel,
    Linear,
    MobilityModel,
    PiecewiseConvex,
    Scenario,
    ScenarioError,
    UserProfile,
    default_scenario,
    sample_gamma_mobility,
    scenario_from_dict,
    validate,
    zipf_demand,
)
from .objective import (
    ObjectiveContext,
    PartitionMatroid,
    Placement,
    cache_quota,
    cellular_fraction,
    extended_payment,
    g_value,
    is_independent,
    total_cost,
)
from .sim import ContactTrace, estimate_rates, sample_delay, simulate_offload
from .solver import SolverReport, local_search, local_search_procedure

__version__ = "0.1.0"
