import math

import numpy as np
import pytest

from d2dcache.baselines import exhaustive_oracle
from d2dcache.model import CostModel, DemandModel, Linear, MobilityModel, UserProfile
from d2dcache.objective import ObjectiveContext, Placement, g_value, is_independent, total_cost
from d2dcache.solver import local_search, local_search_procedure, threshold_factor

from instances import reference_scenario, random_scenario, worked_example


def improving_moves(y, ground, ctx, factor):
    """Every single add/delete/swap within ``ground`` whose g is at least factor * g(y)."""
    pairs = set(y.pairs())
    pool = {(i, f) for i, f in zip(*np.nonzero(ground))} - pairs
    target = factor * g_value(y, ctx)
    val = lambda s: g_value(Placement.from_pairs(s, ctx.n_users, ctx.n_files), ctx)
    feasible = lambda s: is_independent(ctx.matroid, Placement.from_pairs(s, ctx.n_users, ctx.n_files))
    found = []
    for e in pool:
        if feasible(pairs | {e}) and val(pairs | {e}) >= target:
            found.append(("add", e))
    for e in pairs:
        if val(pairs - {e}) >= target:
            found.append(("delete", e))
    for out in pairs:
        for e in pool:
            s = (pairs - {out}) | {e}
            if feasible(s) and val(s) >= target:
                found.append(("swap", out, e))
    return found


def test_all_quotas_zero_gives_empty(backend):
    s = worked_example()
    s = s.with_(profiles=(UserProfile(a=1.0, c=0.2),) * 2)
    ctx = ObjectiveContext(s)
    ground = np.ones((2, 2), dtype=bool)
    assert len(local_search_procedure(ground, ctx.matroid, ctx, 0.01, backend=backend)) == 0
    rep = local_search(s, backend=backend)
    assert len(rep.solution) == 0
    assert rep.total_cost == pytest.approx(s.q(1.0))


def test_local_optimality_post_hoc(backend):
    rng = np.random.default_rng(10)
    for k in range(15):
        s = random_scenario(rng, 2, 3)
        s = s.with_(profiles=tuple(UserProfile(a=p.a, rho=p.rho, c=0.3) for p in s.profiles))
        ctx = ObjectiveContext(s)
        assert ctx.matroid.quotas == (1, 1)
        factor = threshold_factor(2, 3, s.epsilon)
        for ground in (np.ones((2, 3), bool), rng.random((2, 3)) < 0.7):
            if not ground.any():
                continue
            y = local_search_procedure(ground, ctx.matroid, ctx, s.epsilon, backend=backend, debug=True)
            assert is_independent(ctx.matroid, y)
            assert set(y.pairs()) <= {(i, f) for i, f in zip(*np.nonzero(ground))}
            assert improving_moves(y, ground, ctx, factor) == []


def test_local_optimality_larger_instances(backend):
    rng = np.random.default_rng(11)
    for k in range(4):
        s = random_scenario(rng, 3, 4, piecewise=bool(k % 2))
        ctx = ObjectiveContext(s)
        ground = np.ones((3, 4), bool)
        for best in (False, True):
            y = local_search_procedure(ground, ctx.matroid, ctx, s.epsilon, best=best, backend=backend, debug=True)
            assert improving_moves(y, ground, ctx, threshold_factor(3, 4, s.epsilon)) == []


def test_single_user_prefers_popular_file(backend):
    s = worked_example().with_(
        n_users=1,
        profiles=(UserProfile(a=0.0032572, c=0.3),),
        mobility=MobilityModel(1, {}),
        demand=DemandModel(np.array([[0.9, 0.1]])),
    )
    rep = local_search(s, backend=backend)
    oracle = exhaustive_oracle(s)
    assert rep.solution.pairs() == [(0, 0)] == oracle.solution.pairs()
    assert oracle.iterations["enumerated"] == 3


def test_zero_service_cost_caches_nothing(backend):
    rng = np.random.default_rng(12)
    for _ in range(5):
        s = random_scenario(rng, 3, 3)
        s = s.with_(cost=CostModel(Linear(0.0), 200.0, 1.0))
        rep = local_search(s, backend=backend)
        assert len(rep.solution) == 0
        assert rep.total_cost == 0.0


def test_report_invariants_and_determinism(backend):
    s = reference_scenario(seed=3, n_users=6, n_files=8)
    a = local_search(s, backend=backend, debug=True)
    b = local_search(s, backend=backend)
    assert a.solution == b.solution and a.g == b.g
    assert a.g == max(a.pass_values)
    assert a.g == pytest.approx(a.theta - a.total_cost, abs=1e-9)
    assert a.threshold_factor == 1 + 0.01 / (6**4 * 8**4)
    assert is_independent(ObjectiveContext(s).matroid, a.solution)
    # termination bound: every accepted move multiplies g by at least the factor
    moves = sum(a.iterations.values())
    bound = sum(
        math.ceil(math.log(a.theta / g0) / math.log(a.threshold_factor)) for g0 in a.initial_values
    ) + 2 * s.n_users * s.n_files
    assert moves <= bound


def test_backends_agree():
    from d2dcache import kernels

    if len(kernels.available_backends()) < 2:
        pytest.skip("compiled kernels not built")
    rng = np.random.default_rng(13)
    cases = [random_scenario(rng, int(rng.integers(2, 6)), int(rng.integers(2, 8)), piecewise=bool(k % 3 == 0)) for k in range(20)]
    cases += [reference_scenario(seed=k, n_users=8, n_files=12) for k in range(3)]
    for s in cases:
        for best in (False, True):
            a = local_search(s, backend="cython", best=best)
            b = local_search(s, backend="python", best=best)
            assert a.solution == b.solution
            assert a.g == pytest.approx(b.g, abs=1e-9)


def test_kernel_scans_agree_mid_search():
    from d2dcache import kernels

    if len(kernels.available_backends()) < 2:
        pytest.skip("compiled kernels not built")
    c, py = kernels.get_backend("cython"), kernels.get_backend("python")
    rng = np.random.default_rng(14)
    for _ in range(30):
        s = random_scenario(rng, 4, 5, piecewise=True)
        ctx = ObjectiveContext(s, Placement.from_matrix((rng.random((4, 5)) < 0.3) & (np.arange(4) < 3)[:, None]))
        ground = (rng.random((4, 5)) < 0.8).astype(np.uint8)
        q = ctx.quotas
        common = (ctx.p, ctx.lam, ctx.E, ctx.x)
        for best in (False, True):
            for thresh in (-np.inf, 0.0, 1e-3):
                ra = c.find_add(*common, ground, ctx.counts, q, ctx.pay, ctx.col, ctx.qx, ctx.qy, thresh, best)
                rb = py.find_add(*common, ground, ctx.counts, q, ctx.pay, ctx.col, ctx.qx, ctx.qy, thresh, best)
                assert ra[:2] == rb[:2] and ra[2] == pytest.approx(rb[2], abs=1e-12)
                ra = c.find_delete(*common, ctx.counts, ctx.pay, ctx.col, ctx.qx, ctx.qy, thresh, best)
                rb = py.find_delete(*common, ctx.counts, ctx.pay, ctx.col, ctx.qx, ctx.qy, thresh, best)
                assert ra[:2] == rb[:2] and ra[2] == pytest.approx(rb[2], abs=1e-12)
                ra = c.find_swap(*common, ground, ctx.counts, q, ctx.pay, ctx.col, ctx.qx, ctx.qy, thresh, best)
                rb = py.find_swap(*common, ground, ctx.counts, q, ctx.pay, ctx.col, ctx.qx, ctx.qy, thresh, best)
                assert ra[:4] == rb[:4] and ra[4] == pytest.approx(rb[4], abs=1e-12)


def test_scan_gains_match_recomputation(backend):
    from d2dcache import kernels

    k = kernels.get_backend(backend)
    rng = np.random.default_rng(15)
    for _ in range(20):
        s = random_scenario(rng, 4, 4, piecewise=True)
        ctx = ObjectiveContext(s, Placement.from_matrix(rng.random((4, 4)) < 0.25))
        ground = np.ones((4, 4), np.uint8)
        quotas = np.full(4, 4, dtype=np.int64)  # allow any add for the check
        g0 = ctx.g()
        j, f, gain = k.find_add(ctx.p, ctx.lam, ctx.E, ctx.x, ground, ctx.counts, quotas, ctx.pay, ctx.col,
                                ctx.qx, ctx.qy, -np.inf, True)
        if j >= 0:
            assert g_value(Placement.from_pairs(ctx.placement.pairs() + [(j, f)], 4, 4), ctx) - g0 == pytest.approx(gain, abs=1e-12)
        jo, fo, j, f, gain = k.find_swap(ctx.p, ctx.lam, ctx.E, ctx.x, ground, ctx.counts, quotas, ctx.pay,
                                         ctx.col, ctx.qx, ctx.qy, -np.inf, True)
        if j >= 0:
            pairs = [e for e in ctx.placement.pairs() if e != (jo, fo)] + [(j, f)]
            assert g_value(Placement.from_pairs(pairs, 4, 4), ctx) - g0 == pytest.approx(gain, abs=1e-12)


def test_approximation_bound_small(backend):
    rng = np.random.default_rng(16)
    for k in range(25):
        s = random_scenario(rng, int(rng.integers(2, 4)), int(rng.integers(2, 5)), piecewise=bool(k % 2))
        rep = local_search(s, backend=backend)
        opt = exhaustive_oracle(s)
        assert rep.g >= opt.g / (4 + s.epsilon)
        assert opt.total_cost <= rep.total_cost + 1e-12


def test_second_pass_avoids_first_solution(backend):
    s = reference_scenario(seed=1, n_users=5, n_files=6)
    ctx = ObjectiveContext(s)
    ground = np.ones((5, 6), bool)
    y1 = local_search_procedure(ground, ctx.matroid, ctx, s.epsilon, backend=backend)
    y2 = local_search_procedure(ground & ~y1.matrix(), ctx.matroid, ctx, s.epsilon, backend=backend)
    assert not set(y1.pairs()) & set(y2.pairs())
    rep = local_search(s, backend=backend)
    assert rep.pass_values == pytest.approx((g_value(y1, ctx), g_value(y2, ctx)))
