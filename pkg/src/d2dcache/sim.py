"""Monte Carlo check of the analytic cellular fraction, and contact-rate estimation from traces."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .model import MobilityModel, Scenario
from .objective import Placement

# Requests per independently seeded block; block b uses SeedSequence(seed).spawn(...)[b].
BLOCK_SIZE = 1 << 15


class TraceError(ValueError):
    pass


@dataclass(frozen=True)
class ContactTrace:
    """Instantaneous contacts ``(i, j, t)`` inside the half-open window ``[start, end)``."""

    events: tuple[tuple[int, int, float], ...]
    window: tuple[float, float]
    n_users: int | None = None

    def __post_init__(self):
        start, end = map(float, self.window)
        canon = []
        for i, j, t in self.events:
            i, j, t = int(i), int(j), float(t)
            if i == j:
                raise TraceError(f"self-contact event for user {i} at t={t}")
            if i < 0 or j < 0:
                raise TraceError(f"negative user index in event ({i}, {j}, {t})")
            if not start <= t < end:
                raise TraceError(f"event ({i}, {j}, {t}) outside window [{start}, {end})")
            canon.append((i, j, t))
        canon.sort(key=lambda e: (e[2], min(e[0], e[1]), max(e[0], e[1])))
        object.__setattr__(self, "events", tuple(canon))
        object.__setattr__(self, "window", (start, end))

    @property
    def users(self) -> int:
        seen = max((max(i, j) for i, j, _ in self.events), default=-1) + 1
        return max(seen, self.n_users or 0)


def estimate_rates(trace: ContactTrace) -> MobilityModel:
    """Contacts per second for every pair: event count over window length."""
    start, end = trace.window
    length = end - start
    if not length > 0:
        raise TraceError(f"window [{start}, {end}) is empty")
    n = trace.users
    counts: dict[tuple[int, int], int] = {(i, j): 0 for i in range(n) for j in range(i + 1, n)}
    for i, j, _ in trace.events:
        counts[(min(i, j), max(i, j))] += 1
    return MobilityModel(n, {pair: c / length for pair, c in counts.items()})


def read_trace_csv(path, window: tuple[float, float], n_users: int | None = None) -> ContactTrace:
    """Parse an ``i,j,t`` CSV; events outside ``window`` are dropped before canonicalization."""
    start, end = window
    events = []
    seen_users = -1
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is not None and [h.strip() for h in header] != ["i", "j", "t"]:
            raise TraceError(f"line 1: expected header 'i,j,t', got {','.join(header)!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise TraceError(f"line {lineno}: expected 3 fields, got {len(row)}")
            try:
                i, j, t = int(row[0]), int(row[1]), float(row[2])
            except ValueError:
                raise TraceError(f"line {lineno}: cannot parse {','.join(row)!r}") from None
            if i < 0 or j < 0 or i == j or not math.isfinite(t):
                raise TraceError(f"line {lineno}: invalid event {','.join(row)!r}")
            seen_users = max(seen_users, i, j)
            if start <= t < end:
                events.append((i, j, t))
    users = max(seen_users + 1, n_users or 0)
    return ContactTrace(tuple(events), (start, end), users)


def sample_delay(i: int, f: int, y: Placement, mobility: MobilityModel, seed) -> float | None:
    """Time until user ``i`` meets a holder of file ``f``; ``None`` means never."""
    if f in y.files[i]:
        return 0.0
    rng = np.random.default_rng(seed)
    best = None
    for j, row in enumerate(y.files):
        if j == i or f not in row:
            continue
        rate = mobility.rate(i, j)
        if rate > 0:
            t = rng.exponential(1.0 / rate)
            best = t if best is None else min(best, t)
    return best


@dataclass(frozen=True)
class OffloadEstimate:
    fraction: float
    replications: int
    standard_error: float
    cellular: int = field(default=0)

    def within(self, analytic: float, k: float = 3.0) -> bool:
        return abs(self.fraction - analytic) <= k * self.standard_error + 1e-12


def _simulate_block(rng, n, x, p_cdf, rates, td):
    n_users = x.shape[0]
    users = rng.integers(n_users, size=n)
    u = rng.random(n)
    files = np.minimum((p_cdf[users] < u[:, None]).sum(axis=1), x.shape[1] - 1)
    self_served = x[users, files]
    # Exponential contact delay per (request, other user); rate 0 or non-holder -> never.
    holders = x[:, files].T & (rates[users] > 0)
    draws = rng.standard_exponential((n, n_users))
    with np.errstate(divide="ignore"):
        delay = np.where(holders, draws / np.where(holders, rates[users], 1.0), np.inf)
    first = delay.min(axis=1)
    return int(np.count_nonzero(~self_served & ~(first <= td)))


def simulate_offload(y: Placement, scenario: Scenario, n_requests: int, seed) -> OffloadEstimate:
    """Realized share of simulated requests that fall back to the cellular link."""
    if n_requests < 1:
        raise ValueError("n_requests must be >= 1")
    x = y.matrix()
    rates = scenario.mobility.matrix()
    p_cdf = np.cumsum(scenario.demand.p, axis=1)
    n_blocks = -(-n_requests // BLOCK_SIZE)
    streams = np.random.SeedSequence(seed).spawn(n_blocks)
    cellular = 0
    for b, ss in enumerate(streams):
        n = min(BLOCK_SIZE, n_requests - b * BLOCK_SIZE)
        cellular += _simulate_block(np.random.default_rng(ss), n, x, p_cdf, rates, scenario.delay_budget_td)
    frac = cellular / n_requests
    return OffloadEstimate(frac, n_requests, math.sqrt(frac * (1 - frac) / n_requests), cellular)
