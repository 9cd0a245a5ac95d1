"""Reference strategies: popular and random caching with a shared per-user file count,
and an exhaustive optimum for small ground sets."""
from __future__ import annotations

import itertools
import math
from typing import NamedTuple

import numpy as np

from .model import Scenario
from .objective import (
    InfeasiblePlacementError,
    ObjectiveContext,
    PartitionMatroid,
    Placement,
    total_cost,
)
from .solver import SolverReport, threshold_factor


class OracleTooLargeError(ValueError):
    pass


def _check_uniform_m(scenario: Scenario, m: int) -> None:
    if not 0 <= m <= scenario.n_files:
        raise ValueError(f"m={m} outside [0, {scenario.n_files}]")
    quotas = PartitionMatroid.for_scenario(scenario).quotas
    bad = [i for i, q in enumerate(quotas) if m > q]
    if bad:
        raise InfeasiblePlacementError(
            f"{m} files of {scenario.file_size_s} GB do not fit strictly inside the storage of user(s) {bad}"
        )


def popularity_rank(scenario: Scenario) -> list[int]:
    """Files by aggregate request probability, most popular first, ties to the lower index."""
    agg = scenario.demand.p.sum(axis=0)
    return sorted(range(scenario.n_files), key=lambda f: (-agg[f], f))


def popular_placement(scenario: Scenario, m: int) -> Placement:
    _check_uniform_m(scenario, m)
    top = popularity_rank(scenario)[:m]
    return Placement(tuple(tuple(top) for _ in range(scenario.n_users)), scenario.n_files)


def random_placement(scenario: Scenario, m: int, seed) -> Placement:
    """Each user draws ``m`` distinct files, one at a time, proportionally to its request probabilities."""
    _check_uniform_m(scenario, m)
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(scenario.n_users):
        rows.append(tuple(_sequential_draw(rng, scenario.demand.p[i], m)))
    return Placement(tuple(rows), scenario.n_files)


def _sequential_draw(rng: np.random.Generator, p: np.ndarray, m: int) -> list[int]:
    remaining = list(range(p.size))
    weights = [float(p[f]) for f in remaining]
    chosen = []
    for _ in range(m):
        total = sum(weights)
        if total > 0:
            k = int(rng.choice(len(remaining), p=np.asarray(weights) / total))
        else:
            k = int(rng.integers(len(remaining)))
        chosen.append(remaining.pop(k))
        weights.pop(k)
    return chosen


class LineSearchResult(NamedTuple):
    best_m: int
    expected_cost: float
    costs: dict[int, float]


def max_uniform_m(scenario: Scenario) -> int:
    return min(min(PartitionMatroid.for_scenario(scenario).quotas), scenario.n_files)


def line_search_uniform(scenario: Scenario, strategy: str, replications: int = 20, seed: int = 0) -> LineSearchResult:
    """Best shared file count ``m``; the random strategy is scored by its mean over seeded draws.

    Replication ``r`` uses the same seed for every ``m``.
    """
    if replications < 1:
        raise ValueError("replications must be >= 1")
    if strategy not in ("popular", "random"):
        raise ValueError(f"unknown strategy {strategy!r}")
    seeds = np.random.SeedSequence(seed).spawn(replications)
    costs: dict[int, float] = {}
    for m in range(max_uniform_m(scenario) + 1):
        if strategy == "popular":
            costs[m] = total_cost(popular_placement(scenario, m), scenario)
        else:
            costs[m] = float(np.mean([total_cost(random_placement(scenario, m, ss), scenario) for ss in seeds]))
    best_m = min(costs, key=lambda m: (costs[m], m))
    return LineSearchResult(best_m, costs[best_m], costs)


def oracle_size(scenario: Scenario) -> int:
    """Number of independent sets the oracle enumerates."""
    quotas = PartitionMatroid.for_scenario(scenario).quotas
    return math.prod(sum(math.comb(scenario.n_files, k) for k in range(q + 1)) for q in quotas)


def exhaustive_oracle(scenario: Scenario, max_ground: int = 20) -> SolverReport:
    """Exact minimizer of total cost over all quota-feasible placements.

    Depth-first over users, each choosing one of its quota-bounded file subsets;
    ties keep the first placement in enumeration order.
    """
    ground = scenario.n_users * scenario.n_files
    if ground > max_ground:
        raise OracleTooLargeError(
            f"ground set has {ground} elements (> {max_ground}); {oracle_size(scenario)} independent sets"
        )
    ctx = ObjectiveContext(scenario)
    options = [
        [c for k in range(q + 1) for c in itertools.combinations(range(scenario.n_files), k)]
        for q in ctx.matroid.quotas
    ]
    best_g, best_x = -math.inf, None
    visited = 0

    def descend(i: int):
        nonlocal best_g, best_x, visited
        if i == scenario.n_users:
            visited += 1
            g = ctx.g()
            if g > best_g:
                best_g, best_x = g, ctx.x.copy()
            return
        for subset in options[i]:
            for f in subset:
                ctx.apply_delta(add=(i, f))
            descend(i + 1)
            for f in subset:
                ctx.apply_delta(remove=(i, f))

    descend(0)
    solution = Placement.from_matrix(best_x)
    g = ctx.theta - total_cost(solution, scenario)
    return SolverReport(
        solution=solution,
        g=g,
        total_cost=total_cost(solution, scenario),
        pass_values=(g, g),
        iterations={"enumerated": visited},
        threshold_factor=threshold_factor(scenario.n_users, scenario.n_files, scenario.epsilon),
        q_one=scenario.q(1.0),
        theta=ctx.theta,
        backend="exhaustive",
    )
