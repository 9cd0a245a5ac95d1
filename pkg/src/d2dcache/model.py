"""Scenario data: user economics, pairwise contact rates, demand and service cost.

Canonical units throughout the package: storage in GB, time in seconds,
money in dollars per day.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

# Constants of the reference evaluation setup.
DEFAULT_FILE_SIZE_GB = 0.2
DEFAULT_STORAGE_GB = 1.0
DEFAULT_RHO = 0.0
DEFAULT_B = 100.0
DEFAULT_A = 0.015 / math.log(100.0)
DEFAULT_SLOPE_PER_MB = 0.01
DEFAULT_TD_SECONDS = 300.0
DEFAULT_EPSILON = 0.01
DEFAULT_GAMMA_SHAPE = 4.43
DEFAULT_GAMMA_SCALE = 1.0 / 1088.0

MB_PER_GB = 1000.0


class ScenarioError(ValueError):
    """A scenario field violates an invariant.  ``path`` names the field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class UserProfile:
    a: float
    b: float = DEFAULT_B
    rho: float = DEFAULT_RHO
    c: float = DEFAULT_STORAGE_GB


@dataclass(frozen=True, eq=False)
class MobilityModel:
    """Contact intensities keyed by unordered user pair ``(i, j)`` with ``i < j``.

    The self-contact intensity is never stored; a user always reaches its own
    cache, and callers handle that case explicitly.
    """

    n_users: int
    rates: Mapping[tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        canon: dict[tuple[int, int], float] = {}
        for (i, j), rate in self.rates.items():
            i, j = int(i), int(j)
            if i == j:
                raise ScenarioError(f"mobility.rates[{i},{j}]", "self-contact rate cannot be stored")
            key = (i, j) if i < j else (j, i)
            rate = float(rate)
            if key in canon and canon[key] != rate:
                raise ScenarioError(f"mobility.rates[{key[0]},{key[1]}]", "conflicting duplicate pair")
            canon[key] = rate
        object.__setattr__(self, "rates", dict(sorted(canon.items())))

    def rate(self, i: int, j: int) -> float:
        if i == j:
            raise ValueError("self-contact intensity is symbolic (infinite); handle i == j explicitly")
        return self.rates.get((i, j) if i < j else (j, i), 0.0)

    def matrix(self) -> np.ndarray:
        """Dense symmetric rate matrix with a zero diagonal."""
        m = np.zeros((self.n_users, self.n_users))
        for (i, j), rate in self.rates.items():
            m[i, j] = m[j, i] = rate
        return m

    def __eq__(self, other):
        if not isinstance(other, MobilityModel):
            return NotImplemented
        return self.n_users == other.n_users and self.rates == other.rates


@dataclass(frozen=True, eq=False)
class DemandModel:
    """Request probabilities, one row per user, one column per file."""

    p: np.ndarray

    def __post_init__(self):
        arr = np.array(self.p, dtype=float, copy=True)
        if arr.ndim != 2:
            raise ScenarioError("demand.p", "expected a 2-D (users x files) matrix")
        arr.setflags(write=False)
        object.__setattr__(self, "p", arr)

    @property
    def n_users(self) -> int:
        return self.p.shape[0]

    @property
    def n_files(self) -> int:
        return self.p.shape[1]

    def __eq__(self, other):
        if not isinstance(other, DemandModel):
            return NotImplemented
        return self.p.shape == other.p.shape and bool(np.array_equal(self.p, other.p))


@dataclass(frozen=True)
class Linear:
    slope_per_mb: float = DEFAULT_SLOPE_PER_MB


@dataclass(frozen=True)
class PiecewiseConvex:
    """Q given by linear interpolation through ``(fraction, dollars_per_day)`` points."""

    breakpoints: tuple[tuple[float, float], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "breakpoints", tuple((float(x), float(y)) for x, y in self.breakpoints)
        )


@dataclass(frozen=True)
class CostModel:
    """Service cost Q of the cellular fraction, in dollars per day."""

    kind: Linear | PiecewiseConvex = field(default_factory=Linear)
    file_size_mb: float = DEFAULT_FILE_SIZE_GB * MB_PER_GB
    requests_per_user_per_day: float = 1.0

    def breakpoints(self, n_users: int) -> tuple[np.ndarray, np.ndarray]:
        if isinstance(self.kind, Linear):
            top = self.kind.slope_per_mb * self.file_size_mb * n_users * self.requests_per_user_per_day
            return np.array([0.0, 1.0]), np.array([0.0, top])
        pts = np.array(self.kind.breakpoints, dtype=float)
        return pts[:, 0].copy(), pts[:, 1].copy()

    def q(self, pc: float, n_users: int) -> float:
        xs, ys = self.breakpoints(n_users)
        return float(np.interp(pc, xs, ys))


@dataclass(frozen=True, eq=False)
class Scenario:
    n_users: int
    n_files: int
    file_size_s: float
    delay_budget_td: float
    profiles: tuple[UserProfile, ...]
    mobility: MobilityModel
    demand: DemandModel
    cost: CostModel = field(default_factory=CostModel)
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        object.__setattr__(self, "profiles", tuple(self.profiles))

    def q(self, pc: float) -> float:
        return self.cost.q(pc, self.n_users)

    def with_(self, **changes) -> Scenario:
        return replace(self, **changes)

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        return (
            self.n_users == other.n_users
            and self.n_files == other.n_files
            and self.file_size_s == other.file_size_s
            and self.delay_budget_td == other.delay_budget_td
            and self.profiles == other.profiles
            and self.mobility == other.mobility
            and self.demand == other.demand
            and self.cost == other.cost
            and self.epsilon == other.epsilon
        )


def _finite(x) -> bool:
    return isinstance(x, (int, float, np.floating, np.integer)) and math.isfinite(x)


def _validate_cost(cost: CostModel) -> None:
    if not (_finite(cost.file_size_mb) and cost.file_size_mb > 0):
        raise ScenarioError("cost.file_size_mb", "must be positive")
    if not (_finite(cost.requests_per_user_per_day) and cost.requests_per_user_per_day >= 0):
        raise ScenarioError("cost.requests_per_user_per_day", "must be non-negative")
    kind = cost.kind
    if isinstance(kind, Linear):
        if not (_finite(kind.slope_per_mb) and kind.slope_per_mb >= 0):
            raise ScenarioError("cost.linear.slope_per_mb", "must be non-negative (Q increasing)")
        return
    if not isinstance(kind, PiecewiseConvex):
        raise ScenarioError("cost.kind", f"unknown cost kind {type(kind).__name__}")
    pts = kind.breakpoints
    if len(pts) < 2:
        raise ScenarioError("cost.piecewise.breakpoints", "need at least two points")
    if pts[0][0] != 0.0 or pts[-1][0] != 1.0:
        raise ScenarioError("cost.piecewise.breakpoints", "must span fractions 0 to 1")
    if pts[0][1] < 0:
        raise ScenarioError("cost.piecewise.breakpoints[0]", "Q(0) must be non-negative")
    prev_slope = 0.0
    for k in range(1, len(pts)):
        (x0, y0), (x1, y1) = pts[k - 1], pts[k]
        if not (_finite(x1) and _finite(y1)) or x1 <= x0:
            raise ScenarioError(f"cost.piecewise.breakpoints[{k}]", "fractions must strictly increase")
        slope = (y1 - y0) / (x1 - x0)
        if slope < 0:
            raise ScenarioError(f"cost.piecewise.breakpoints[{k}]", "Q must be non-decreasing")
        if slope < prev_slope - 1e-12:
            raise ScenarioError(f"cost.piecewise.breakpoints[{k}]", "Q must be convex")
        prev_slope = slope


def validate(scenario: Scenario) -> Scenario:
    """Return ``scenario`` unchanged if every invariant holds, else raise ScenarioError."""
    s = scenario
    if not isinstance(s.n_users, (int, np.integer)) or s.n_users < 1:
        raise ScenarioError("n_users", "must be an integer >= 1")
    if not isinstance(s.n_files, (int, np.integer)) or s.n_files < 1:
        raise ScenarioError("n_files", "must be an integer >= 1")
    if not (_finite(s.file_size_s) and s.file_size_s > 0):
        raise ScenarioError("file_size_s", "must be positive (GB)")
    if not (_finite(s.delay_budget_td) and s.delay_budget_td >= 0):
        raise ScenarioError("delay_budget_td", "must be non-negative (seconds)")
    if not (_finite(s.epsilon) and s.epsilon > 0):
        raise ScenarioError("epsilon", "must be positive")

    if len(s.profiles) != s.n_users:
        raise ScenarioError("profiles", f"expected {s.n_users} profiles, got {len(s.profiles)}")
    for i, prof in enumerate(s.profiles):
        for name, ok in (
            ("a", _finite(prof.a) and prof.a > 0),
            ("b", _finite(prof.b) and prof.b > 0),
            ("rho", _finite(prof.rho) and prof.rho >= 0),
            ("c", _finite(prof.c) and prof.c >= 0),
        ):
            if not ok:
                raise ScenarioError(f"profiles[{i}].{name}", f"invalid value {getattr(prof, name)!r}")

    mob = s.mobility
    if mob.n_users != s.n_users:
        raise ScenarioError("mobility.n_users", f"expected {s.n_users}, got {mob.n_users}")
    for (i, j), rate in mob.rates.items():
        path = f"mobility.rates[{i},{j}]"
        if not (0 <= i < s.n_users and 0 <= j < s.n_users):
            raise ScenarioError(path, "user index out of range")
        if not (_finite(rate) and rate >= 0):
            raise ScenarioError(path, f"rate must be finite and >= 0, got {rate!r}")

    p = s.demand.p
    if p.shape != (s.n_users, s.n_files):
        raise ScenarioError("demand.p", f"shape {p.shape} != ({s.n_users}, {s.n_files})")
    for i in range(s.n_users):
        row = p[i]
        if not np.all(np.isfinite(row)) or np.any(row < 0) or np.any(row > 1):
            raise ScenarioError(f"demand.p[{i}]", "entries must lie in [0, 1]")
        total = float(row.sum())
        if abs(total - 1.0) > 1e-9:
            raise ScenarioError(f"demand.p[{i}]", f"row sums to {total:.12g}, not 1")

    _validate_cost(s.cost)
    return s


def zipf_demand(n_files: int, gamma_r: float, n_users: int) -> DemandModel:
    if n_files < 1:
        raise ValueError("n_files must be >= 1")
    if gamma_r < 0:
        raise ValueError("gamma_r must be >= 0")
    weights = np.arange(1, n_files + 1, dtype=float) ** (-float(gamma_r))
    row = weights / weights.sum()
    return DemandModel(np.tile(row, (n_users, 1)))


def sample_gamma_mobility(
    n_users: int,
    shape: float = DEFAULT_GAMMA_SHAPE,
    scale: float = DEFAULT_GAMMA_SCALE,
    seed: int | None = 0,
) -> MobilityModel:
    """Draw one Gamma(shape, scale) intensity per unordered pair, pairs in lexicographic order."""
    if shape <= 0 or scale <= 0:
        raise ValueError("shape and scale must be positive")
    pairs = [(i, j) for i in range(n_users) for j in range(i + 1, n_users)]
    rng = np.random.default_rng(seed)
    draws = rng.gamma(shape, scale, size=len(pairs))
    return MobilityModel(n_users, {pair: float(r) for pair, r in zip(pairs, draws)})


def default_scenario(
    n_users: int,
    n_files: int,
    *,
    gamma_r: float = 0.8,
    seed: int | None = 0,
    td: float = DEFAULT_TD_SECONDS,
    profile: UserProfile | None = None,
    epsilon: float = DEFAULT_EPSILON,
) -> Scenario:
    """Homogeneous users with the reference economics, Zipf demand and Gamma rates."""
    profile = profile or UserProfile(a=DEFAULT_A)
    return validate(
        Scenario(
            n_users=n_users,
            n_files=n_files,
            file_size_s=DEFAULT_FILE_SIZE_GB,
            delay_budget_td=td,
            profiles=(profile,) * n_users,
            mobility=sample_gamma_mobility(n_users, seed=seed),
            demand=zipf_demand(n_files, gamma_r, n_users),
            cost=CostModel(Linear(DEFAULT_SLOPE_PER_MB), DEFAULT_FILE_SIZE_GB * MB_PER_GB, 1.0),
            epsilon=epsilon,
        )
    )


# --- JSON scenario documents -------------------------------------------------

_TOP_KEYS = {"users", "mobility", "demand", "cost", "sim", "solver"}


def _check_keys(obj, allowed: set[str], path: str, required: Sequence[str] = ()) -> None:
    if not isinstance(obj, dict):
        raise ScenarioError(path or "<root>", "expected a JSON object")
    for key in obj:
        if key not in allowed:
            raise ScenarioError(f"{path}.{key}" if path else key, "unknown key")
    for key in required:
        if key not in obj:
            raise ScenarioError(f"{path}.{key}" if path else key, "missing required key")


def _num(obj: dict, key: str, path: str, default=None) -> float:
    if key not in obj:
        if default is None:
            raise ScenarioError(f"{path}.{key}", "missing required key")
        return default
    val = obj[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ScenarioError(f"{path}.{key}", f"expected a number, got {val!r}")
    return float(val)


def _profile(obj, path: str) -> UserProfile:
    _check_keys(obj, {"a", "b", "rho", "c"}, path)
    return UserProfile(
        a=_num(obj, "a", path, DEFAULT_A),
        b=_num(obj, "b", path, DEFAULT_B),
        rho=_num(obj, "rho", path, DEFAULT_RHO),
        c=_num(obj, "c", path, DEFAULT_STORAGE_GB),
    )


def scenario_from_dict(doc: dict) -> Scenario:
    """Build and validate a Scenario from a parsed JSON document.

    ``users`` is either an explicit array of profiles or ``{"count", "profile"}``;
    ``mobility`` is either ``{"pairs": [[i, j, rate], ...]}`` or
    ``{"gamma": {"shape", "scale", "seed"}}``; ``demand`` is either
    ``{"zipf": {"gamma", "n_files"}}`` or ``{"matrix": [[...], ...]}``.
    """
    _check_keys(doc, _TOP_KEYS, "", required=("users", "mobility", "demand"))

    users = doc["users"]
    if isinstance(users, list):
        profiles = tuple(_profile(u, f"users[{k}]") for k, u in enumerate(users))
    else:
        _check_keys(users, {"count", "profile"}, "users", required=("count",))
        count = users["count"]
        if isinstance(count, bool) or not isinstance(count, int) or count < 1:
            raise ScenarioError("users.count", "must be a positive integer")
        profiles = (_profile(users.get("profile", {}), "users.profile"),) * count
    n_users = len(profiles)
    if n_users < 1:
        raise ScenarioError("users", "need at least one user")

    mob = doc["mobility"]
    _check_keys(mob, {"pairs", "n_users", "gamma"}, "mobility")
    if "gamma" in mob:
        if "pairs" in mob:
            raise ScenarioError("mobility", "give either pairs or gamma, not both")
        g = mob["gamma"]
        _check_keys(g, {"shape", "scale", "seed"}, "mobility.gamma")
        seed = g.get("seed", 0)
        if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
            raise ScenarioError("mobility.gamma.seed", "must be an integer")
        mobility = sample_gamma_mobility(
            n_users,
            _num(g, "shape", "mobility.gamma", DEFAULT_GAMMA_SHAPE),
            _num(g, "scale", "mobility.gamma", DEFAULT_GAMMA_SCALE),
            seed,
        )
    else:
        if "n_users" in mob and mob["n_users"] != n_users:
            raise ScenarioError("mobility.n_users", f"expected {n_users}, got {mob['n_users']!r}")
        rates = {}
        for k, entry in enumerate(mob.get("pairs", [])):
            path = f"mobility.pairs[{k}]"
            if not isinstance(entry, list) or len(entry) != 3:
                raise ScenarioError(path, "expected [i, j, rate]")
            i, j, rate = entry
            if not all(isinstance(v, int) and not isinstance(v, bool) for v in (i, j)):
                raise ScenarioError(path, "user indices must be integers")
            if not (0 <= i < n_users and 0 <= j < n_users):
                raise ScenarioError(path, "user index out of range")
            if isinstance(rate, bool) or not isinstance(rate, (int, float)):
                raise ScenarioError(path, "rate must be a number")
            rates[(i, j)] = rate
        mobility = MobilityModel(n_users, rates)

    dem = doc["demand"]
    _check_keys(dem, {"zipf", "matrix"}, "demand")
    if ("zipf" in dem) == ("matrix" in dem):
        raise ScenarioError("demand", "give exactly one of zipf or matrix")
    if "zipf" in dem:
        z = dem["zipf"]
        _check_keys(z, {"gamma", "n_files"}, "demand.zipf", required=("gamma", "n_files"))
        n_files = z["n_files"]
        if isinstance(n_files, bool) or not isinstance(n_files, int) or n_files < 1:
            raise ScenarioError("demand.zipf.n_files", "must be a positive integer")
        gamma = _num(z, "gamma", "demand.zipf")
        if gamma < 0:
            raise ScenarioError("demand.zipf.gamma", "must be >= 0")
        demand = zipf_demand(n_files, gamma, n_users)
    else:
        try:
            demand = DemandModel(np.array(dem["matrix"], dtype=float))
        except (TypeError, ValueError) as exc:
            raise ScenarioError("demand.matrix", f"not a numeric matrix ({exc})") from None
        n_files = demand.n_files

    sim = doc.get("sim", {})
    _check_keys(sim, {"td_seconds", "file_size_gb"}, "sim")
    td = _num(sim, "td_seconds", "sim", DEFAULT_TD_SECONDS)
    size_gb = _num(sim, "file_size_gb", "sim", DEFAULT_FILE_SIZE_GB)

    cost_doc = doc.get("cost", {})
    _check_keys(cost_doc, {"linear", "piecewise", "requests_per_user_per_day"}, "cost")
    if "linear" in cost_doc and "piecewise" in cost_doc:
        raise ScenarioError("cost", "give at most one of linear or piecewise")
    if "piecewise" in cost_doc:
        pw = cost_doc["piecewise"]
        _check_keys(pw, {"breakpoints"}, "cost.piecewise", required=("breakpoints",))
        try:
            kind = PiecewiseConvex(tuple((x, y) for x, y in pw["breakpoints"]))
        except (TypeError, ValueError):
            raise ScenarioError("cost.piecewise.breakpoints", "expected [[fraction, dollars], ...]") from None
    else:
        lin = cost_doc.get("linear", {})
        _check_keys(lin, {"slope_per_mb"}, "cost.linear")
        kind = Linear(_num(lin, "slope_per_mb", "cost.linear", DEFAULT_SLOPE_PER_MB))
    cost = CostModel(
        kind,
        file_size_mb=size_gb * MB_PER_GB,
        requests_per_user_per_day=_num(cost_doc, "requests_per_user_per_day", "cost", 1.0),
    )

    solver = doc.get("solver", {})
    _check_keys(solver, {"epsilon"}, "solver")
    eps = _num(solver, "epsilon", "solver", DEFAULT_EPSILON)

    return validate(
        Scenario(
            n_users=n_users,
            n_files=n_files,
            file_size_s=size_gb,
            delay_budget_td=td,
            profiles=profiles,
            mobility=mobility,
            demand=demand,
            cost=cost,
            epsilon=eps,
        )
    )


def mobility_to_dict(mobility: MobilityModel, include_zero: bool = False) -> dict:
    pairs = []
    for i in range(mobility.n_users):
        for j in range(i + 1, mobility.n_users):
            rate = mobility.rates.get((i, j))
            if rate is None and not include_zero:
                continue
            pairs.append([i, j, rate or 0.0])
    return {"n_users": mobility.n_users, "pairs": pairs}


def scenario_to_dict(s: Scenario) -> dict:
    """Explicit JSON form; ``scenario_from_dict`` inverts it exactly."""
    if isinstance(s.cost.kind, Linear):
        cost = {"linear": {"slope_per_mb": s.cost.kind.slope_per_mb}}
    else:
        cost = {"piecewise": {"breakpoints": [list(bp) for bp in s.cost.kind.breakpoints]}}
    cost["requests_per_user_per_day"] = s.cost.requests_per_user_per_day
    return {
        "users": [{"a": u.a, "b": u.b, "rho": u.rho, "c": u.c} for u in s.profiles],
        "mobility": mobility_to_dict(s.mobility),
        "demand": {"matrix": s.demand.p.tolist()},
        "cost": cost,
        "sim": {"td_seconds": s.delay_budget_td, "file_size_gb": s.file_size_s},
        "solver": {"epsilon": s.epsilon},
    }
