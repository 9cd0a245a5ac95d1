"""Add/delete/swap local search for non-negative submodular maximization over a partition matroid.

The procedure accepts a move only when it raises g by a factor of at least
``1 + epsilon / (n_users**4 * n_files**4)``; the outer algorithm runs it twice, the second
time on the ground set minus the first solution, and keeps the better result.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .objective import (
    ObjectiveContext,
    PartitionMatroid,
    Placement,
    g_value,
    is_independent,
    total_cost,
)
from .model import Scenario

log = logging.getLogger(__name__)

REBUILD_EVERY = 10_000


@dataclass
class SolverReport:
    solution: Placement
    g: float
    total_cost: float
    pass_values: tuple[float, float]
    iterations: dict[str, int]
    threshold_factor: float
    q_one: float = float("nan")
    theta: float = float("nan")
    initial_values: tuple[float, ...] = ()
    backend: str = ""

    @property
    def normalized_cost(self) -> float:
        return self.total_cost / self.q_one

    def to_dict(self) -> dict:
        return {
            "solution": self.solution.to_json(),
            "g": self.g,
            "total_cost": self.total_cost,
            "normalized_cost": self.normalized_cost,
            "pass_values": list(self.pass_values),
            "iterations": dict(self.iterations),
            "threshold_factor": self.threshold_factor,
            "theta": self.theta,
            "backend": self.backend,
        }


def threshold_factor(n_users: int, n_files: int, epsilon: float) -> float:
    return 1.0 + epsilon / (float(n_users) ** 4 * float(n_files) ** 4)


@dataclass
class _Stats:
    add: int = 0
    delete: int = 0
    swap: int = 0
    g_init: list = field(default_factory=list)

    def as_dict(self) -> dict[str, int]:
        return {"add": self.add, "delete": self.delete, "swap": self.swap}


def local_search_procedure(
    ground,
    matroid: PartitionMatroid,
    context: ObjectiveContext,
    epsilon: float,
    *,
    best: bool = False,
    backend: str | None = None,
    debug: bool = False,
    stats: _Stats | None = None,
) -> Placement:
    """Local search restricted to the element pool ``ground`` (bool matrix users x files).

    Starts from the feasible singleton of largest g, then repeatedly applies the first
    improving add, delete and swap move found in lexicographic ``(user, file)`` order
    (``best=True`` takes the largest-gain move instead).  ``context`` is reset and left
    holding the returned placement.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    kern = kernels.get_backend(backend)
    stats = stats if stats is not None else _Stats()
    ctx = context
    ctx.reset(Placement.empty(ctx.n_users, ctx.n_files))
    quotas = np.array(matroid.quotas, dtype=np.int64)
    pool = np.ascontiguousarray(ground, dtype=np.uint8)
    slack = threshold_factor(ctx.n_users, ctx.n_files, epsilon) - 1.0

    def state():
        return ctx.p, ctx.lam, ctx.E, ctx.x

    j, f, _ = kern.find_add(*state(), pool, ctx.counts, quotas, ctx.pay, ctx.col,
                            ctx.qx, ctx.qy, -np.inf, True)
    if j < 0:
        return Placement.empty(ctx.n_users, ctx.n_files)
    g = ctx.apply_delta(add=(j, f))
    stats.g_init.append(g)
    if g <= 0:
        ctx.reset(Placement.empty(ctx.n_users, ctx.n_files))
        return ctx.placement

    def check():
        nonlocal g
        if ctx.moves_since_rebuild >= REBUILD_EVERY:
            ctx.rebuild()
            g = ctx.g()
        if debug:
            y = ctx.placement
            assert is_independent(matroid, y), y
            assert abs(g - g_value(y, ctx)) < 1e-9, (g, g_value(y, ctx))

    while True:
        improved = False

        j, f, _ = kern.find_add(*state(), pool, ctx.counts, quotas, ctx.pay, ctx.col,
                                ctx.qx, ctx.qy, slack * g, best)
        if j >= 0:
            g = ctx.apply_delta(add=(j, f))
            stats.add += 1
            improved = True
            check()

        j, f, _ = kern.find_delete(*state(), ctx.counts, ctx.pay, ctx.col,
                                   ctx.qx, ctx.qy, slack * g, best)
        if j >= 0:
            g = ctx.apply_delta(remove=(j, f))
            stats.delete += 1
            improved = True
            check()

        jo, fo, j, f, _ = kern.find_swap(*state(), pool, ctx.counts, quotas, ctx.pay, ctx.col,
                                         ctx.qx, ctx.qy, slack * g, best)
        if j >= 0:
            g = ctx.apply_delta(add=(j, f), remove=(jo, fo))
            stats.swap += 1
            improved = True
            check()

        if not improved:
            return ctx.placement


def local_search(
    scenario: Scenario,
    *,
    epsilon: float | None = None,
    best: bool = False,
    backend: str | None = None,
    debug: bool = False,
) -> SolverReport:
    """Two-pass local search; returns the better of the two local optima."""
    eps = scenario.epsilon if epsilon is None else epsilon
    ctx = ObjectiveContext(scenario)
    matroid = ctx.matroid
    stats = _Stats()

    ground = np.ones((ctx.n_users, ctx.n_files), dtype=bool)
    y1 = local_search_procedure(ground, matroid, ctx, eps, best=best, backend=backend, debug=debug, stats=stats)
    g1 = g_value(y1, ctx)

    ground2 = ground & ~y1.matrix()
    if ground2.any():
        y2 = local_search_procedure(ground2, matroid, ctx, eps, best=best, backend=backend, debug=debug, stats=stats)
    else:
        y2 = Placement.empty(ctx.n_users, ctx.n_files)
    g2 = g_value(y2, ctx)

    solution, g = (y1, g1) if g1 >= g2 else (y2, g2)
    log.debug("local search: g1=%.9g g2=%.9g moves=%s", g1, g2, stats.as_dict())
    report = SolverReport(
        solution=solution,
        g=g,
        total_cost=total_cost(solution, scenario),
        pass_values=(g1, g2),
        iterations=stats.as_dict(),
        threshold_factor=threshold_factor(ctx.n_users, ctx.n_files, eps),
        q_one=scenario.q(1.0),
        theta=ctx.theta,
        initial_values=tuple(stats.g_init),
        backend=backend or kernels.BACKEND,
    )
    return report
