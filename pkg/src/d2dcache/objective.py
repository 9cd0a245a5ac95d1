"""Operator-side cost, the cache-quota partition matroid and the submodular objective g.

Ground elements are ``(user, file)`` pairs.  g(Y) = theta - Q(P^c(Y)) - sum_i C^A_i(|Y & S_i|)
where theta = Q(1) + sum_i C^A_i(n_files) keeps g non-negative on every subset.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np

from .game import payment
from .model import DemandModel, MobilityModel, Scenario, UserProfile

Element = tuple[int, int]


class InfeasiblePlacementError(ValueError):
    """Placement exceeds some user's cache quota."""


@dataclass(frozen=True)
class Placement:
    """Caching assignment: for each user, a sorted tuple of cached file indices."""

    files: tuple[tuple[int, ...], ...]
    n_files: int

    def __post_init__(self):
        canon = []
        for i, row in enumerate(self.files):
            row = tuple(sorted(int(f) for f in row))
            if len(set(row)) != len(row):
                raise ValueError(f"duplicate file in user {i}'s cache")
            if row and (row[0] < 0 or row[-1] >= self.n_files):
                raise ValueError(f"file index out of range for user {i}")
            canon.append(row)
        object.__setattr__(self, "files", tuple(canon))

    @classmethod
    def empty(cls, n_users: int, n_files: int) -> Placement:
        return cls(((),) * n_users, n_files)

    @classmethod
    def from_pairs(cls, pairs: Iterable[Element], n_users: int, n_files: int) -> Placement:
        rows: list[list[int]] = [[] for _ in range(n_users)]
        for i, f in pairs:
            if not 0 <= i < n_users:
                raise ValueError(f"user index {i} out of range")
            rows[i].append(f)
        return cls(tuple(tuple(r) for r in rows), n_files)

    @classmethod
    def from_matrix(cls, x) -> Placement:
        x = np.asarray(x, dtype=bool)
        return cls(tuple(tuple(np.flatnonzero(row).tolist()) for row in x), x.shape[1])

    @property
    def n_users(self) -> int:
        return len(self.files)

    def count(self, i: int) -> int:
        return len(self.files[i])

    def counts(self) -> list[int]:
        return [len(r) for r in self.files]

    def pairs(self) -> list[Element]:
        return [(i, f) for i, row in enumerate(self.files) for f in row]

    def __contains__(self, element) -> bool:
        i, f = element
        return f in self.files[i]

    def __len__(self) -> int:
        return sum(len(r) for r in self.files)

    def matrix(self) -> np.ndarray:
        x = np.zeros((self.n_users, self.n_files), dtype=bool)
        for i, row in enumerate(self.files):
            x[i, list(row)] = True
        return x

    def to_json(self) -> list[list[int]]:
        return [[i, f] for i, f in self.pairs()]


def _exact(value: float) -> Fraction:
    # Shortest decimal repr, so 1.0/0.2 and 0.6/0.2 divide exactly.
    return Fraction(repr(float(value)))


def cache_quota(profile: UserProfile, s: float) -> int:
    """Whole files that fit strictly inside the user's storage: max(0, ceil(c/s - 1))."""
    if s <= 0:
        raise ValueError("file size must be positive")
    return max(0, math.ceil(_exact(profile.c) / _exact(s) - 1))


@dataclass(frozen=True)
class PartitionMatroid:
    quotas: tuple[int, ...]

    @classmethod
    def for_scenario(cls, scenario: Scenario) -> PartitionMatroid:
        return cls(tuple(min(cache_quota(p, scenario.file_size_s), scenario.n_files) for p in scenario.profiles))

    def can_add(self, counts, i: int) -> bool:
        return counts[i] < self.quotas[i]


def is_independent(matroid: PartitionMatroid, y: Placement) -> bool:
    return all(y.count(i) <= q for i, q in enumerate(matroid.quotas))


def contact_exposure(mobility: MobilityModel, td: float) -> np.ndarray:
    """T^d * lambda as a matrix with zero diagonal; self-contact is handled separately."""
    return td * mobility.matrix()


def _cellular_terms(x: np.ndarray, p: np.ndarray, lam: np.ndarray) -> np.ndarray:
    exposure = lam @ x.astype(float)
    return np.where(x, 0.0, p * np.exp(-exposure))


def cellular_fraction(y: Placement, mobility: MobilityModel, demand: DemandModel, td: float) -> float:
    """Expected share of requests not served over D2D within ``td`` seconds."""
    x = y.matrix()
    terms = _cellular_terms(x, demand.p, contact_exposure(mobility, td))
    return float(terms.sum() / x.shape[0])


def extended_payment(profile: UserProfile, k: int, quota: int, s: float) -> float:
    """Payment for ``k`` cached files, continued linearly past the quota."""
    if k < 0:
        raise ValueError("file count must be non-negative")
    if k <= quota:
        return payment(profile, s * k)
    top = payment(profile, s * quota)
    slope = top - payment(profile, s * max(0, quota - 1))
    return top + slope * (k - quota)


def payment_table(scenario: Scenario, matroid: PartitionMatroid | None = None) -> np.ndarray:
    """``table[i, k]`` = C^A_i(k) for k = 0..n_files+1."""
    matroid = matroid or PartitionMatroid.for_scenario(scenario)
    s, nf = scenario.file_size_s, scenario.n_files
    table = np.empty((scenario.n_users, nf + 2))
    for i, prof in enumerate(scenario.profiles):
        for k in range(nf + 2):
            table[i, k] = extended_payment(prof, k, matroid.quotas[i], s)
    return table


def theta(scenario: Scenario, matroid: PartitionMatroid | None = None) -> float:
    matroid = matroid or PartitionMatroid.for_scenario(scenario)
    return scenario.q(1.0) + sum(
        extended_payment(p, scenario.n_files, q, scenario.file_size_s)
        for p, q in zip(scenario.profiles, matroid.quotas)
    )


def total_cost(y: Placement, scenario: Scenario) -> float:
    """Daily service cost plus payments to the users."""
    matroid = PartitionMatroid.for_scenario(scenario)
    if not is_independent(matroid, y):
        raise InfeasiblePlacementError(
            f"cache counts {y.counts()} exceed quotas {list(matroid.quotas)}"
        )
    pc = cellular_fraction(y, scenario.mobility, scenario.demand, scenario.delay_budget_td)
    s = scenario.file_size_s
    return scenario.q(pc) + sum(payment(p, s * y.count(i)) for i, p in enumerate(scenario.profiles))


def normalized_cost(y: Placement, scenario: Scenario) -> float:
    return total_cost(y, scenario) / scenario.q(1.0)


class ObjectiveContext:
    """Incremental evaluator of g for one placement.

    Holds the exposure sums ``E[i, f] = sum_{j caches f} T^d * lambda_ij`` and the per-file
    column sums of cellular terms, so a single add or remove touches one column only.
    Not safe for concurrent mutation; use :meth:`copy` per worker.
    """

    def __init__(self, scenario: Scenario, placement: Placement | None = None):
        self.scenario = scenario
        self.matroid = PartitionMatroid.for_scenario(scenario)
        self.n_users, self.n_files = scenario.n_users, scenario.n_files
        self.p = np.ascontiguousarray(scenario.demand.p, dtype=float)
        self.lam = np.ascontiguousarray(contact_exposure(scenario.mobility, scenario.delay_budget_td))
        self.pay = np.ascontiguousarray(payment_table(scenario, self.matroid))
        self.quotas = np.array(self.matroid.quotas, dtype=np.int64)
        qx, qy = scenario.cost.breakpoints(self.n_users)
        self.qx, self.qy = np.ascontiguousarray(qx), np.ascontiguousarray(qy)
        self.theta = self.q(1.0) + float(self.pay[np.arange(self.n_users), self.n_files].sum())
        self.reset(placement or Placement.empty(self.n_users, self.n_files))

    def q(self, pc: float) -> float:
        return float(np.interp(pc, self.qx, self.qy))

    def reset(self, placement: Placement) -> None:
        if placement.n_users != self.n_users or placement.n_files != self.n_files:
            raise ValueError("placement dimensions do not match the scenario")
        self.x = placement.matrix().astype(np.uint8)
        self.rebuild()

    def rebuild(self) -> None:
        """Recompute all accumulators from the current membership matrix."""
        xf = self.x.astype(float)
        self.E = np.ascontiguousarray(self.lam @ xf)
        self.counts = self.x.sum(axis=1).astype(np.int64)
        self.col = np.ascontiguousarray(np.where(self.x, 0.0, self.p * np.exp(-self.E)).sum(axis=0))
        self.moves_since_rebuild = 0

    def copy(self) -> ObjectiveContext:
        new = object.__new__(ObjectiveContext)
        new.__dict__.update(self.__dict__)
        for name in ("x", "E", "counts", "col"):
            setattr(new, name, getattr(self, name).copy())
        return new

    @property
    def placement(self) -> Placement:
        return Placement.from_matrix(self.x)

    def cellular_fraction(self) -> float:
        return float(self.col.sum() / self.n_users)

    def payment_sum(self) -> float:
        return float(self.pay[np.arange(self.n_users), self.counts].sum())

    def g(self) -> float:
        return self.theta - self.q(self.cellular_fraction()) - self.payment_sum()

    def _refresh_column(self, f: int) -> None:
        x = self.x[:, f]
        self.col[f] = float(np.where(x, 0.0, self.p[:, f] * np.exp(-self.E[:, f])).sum())

    def apply_delta(self, add: Element | None = None, remove: Element | None = None) -> float:
        """Remove then add one element each (either optional); return the new g."""
        if remove is not None:
            j, f = remove
            if not self.x[j, f]:
                raise KeyError(f"element {remove} is not in the placement")
        if add is not None:
            j, f = add
            if self.x[j, f] and add != remove:
                raise KeyError(f"element {add} is already in the placement")
        if remove is not None:
            j, f = remove
            self.x[j, f] = 0
            self.E[:, f] -= self.lam[:, j]
            self.counts[j] -= 1
            self._refresh_column(f)
        if add is not None:
            j, f = add
            self.x[j, f] = 1
            self.E[:, f] += self.lam[:, j]
            self.counts[j] += 1
            self._refresh_column(f)
        self.moves_since_rebuild += 1
        return self.g()


def g_value(y: Placement, context: ObjectiveContext) -> float:
    """From-scratch g for any subset of the ground set, independent or not."""
    x = y.matrix()
    pc = float(_cellular_terms(x, context.p, context.lam).sum() / context.n_users)
    counts = x.sum(axis=1)
    return context.theta - context.q(pc) - float(context.pay[np.arange(context.n_users), counts].sum())
