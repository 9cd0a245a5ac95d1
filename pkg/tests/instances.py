"""Scenario factories shared by the test modules."""
import math

import numpy as np

from d2dcache.model import (
    DEFAULT_A,
    CostModel,
    DemandModel,
    Linear,
    MobilityModel,
    PiecewiseConvex,
    Scenario,
    UserProfile,
    default_scenario,
    validate,
    zipf_demand,
)


def worked_example() -> Scenario:
    """Two users, two files, uniform demand, lambda_12 = 1/300 per second, T^d = 300 s."""
    return validate(
        Scenario(
            n_users=2,
            n_files=2,
            file_size_s=0.2,
            delay_budget_td=300.0,
            profiles=(UserProfile(a=DEFAULT_A),) * 2,
            mobility=MobilityModel(2, {(0, 1): 1 / 300}),
            demand=DemandModel(np.full((2, 2), 0.5)),
        )
    )


def random_scenario(rng: np.random.Generator, n_users: int, n_files: int, *, piecewise: bool = False) -> Scenario:
    """Heterogeneous users whose payments are comparable to the service cost."""
    s = 0.2
    profiles = tuple(
        UserProfile(
            a=float(math.exp(rng.uniform(math.log(1e-3), math.log(3.0)))),
            b=100.0,
            rho=float(rng.uniform(0, 0.05)),
            c=float(rng.choice([0.0, 0.2, 0.3, 0.5, 0.6, 0.75, 1.0, 1.2])),
        )
        for _ in range(n_users)
    )
    rates = {
        (i, j): float(rng.gamma(4.43, 1 / 1088)) if rng.random() > 0.15 else 0.0
        for i in range(n_users)
        for j in range(i + 1, n_users)
    }
    if rng.random() < 0.5:
        demand = zipf_demand(n_files, float(rng.uniform(0, 2)), n_users)
    else:
        demand = DemandModel(rng.dirichlet(np.ones(n_files), size=n_users))
    if piecewise:
        top = 2.0 * n_users
        mid = float(rng.uniform(0.1, 0.5)) * top
        cost = CostModel(PiecewiseConvex(((0.0, 0.0), (0.5, mid), (1.0, mid + (top - mid)))), 200.0, 1.0)
    else:
        cost = CostModel(Linear(0.01), 200.0, 1.0)
    return validate(
        Scenario(
            n_users=n_users,
            n_files=n_files,
            file_size_s=s,
            delay_budget_td=float(rng.uniform(0, 600)),
            profiles=profiles,
            mobility=MobilityModel(n_users, rates),
            demand=demand,
            cost=cost,
        )
    )


def reference_scenario(seed: int, n_users: int = 10, n_files: int = 20, gamma_r: float = 0.8) -> Scenario:
    return default_scenario(n_users, n_files, gamma_r=gamma_r, seed=seed)
