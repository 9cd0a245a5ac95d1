import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from d2dcache.model import (
    CostModel,
    DemandModel,
    Linear,
    MobilityModel,
    PiecewiseConvex,
    ScenarioError,
    default_scenario,
    sample_gamma_mobility,
    scenario_from_dict,
    scenario_to_dict,
    validate,
    zipf_demand,
)

from instances import worked_example


def test_validate_returns_well_formed_scenario_unchanged():
    s = worked_example()
    assert validate(s) is s


def test_validate_names_bad_demand_row():
    s = worked_example()
    bad = s.with_(demand=DemandModel(np.array([[0.5, 0.5], [0.45, 0.45]])))
    with pytest.raises(ScenarioError) as exc:
        validate(bad)
    assert exc.value.path == "demand.p[1]"
    assert "0.9" in str(exc.value)


def test_validate_rejects_negative_rate():
    s = worked_example().with_(mobility=MobilityModel(2, {(0, 1): -0.1}))
    with pytest.raises(ScenarioError, match=r"mobility.rates\[0,1\]"):
        validate(s)


@pytest.mark.parametrize(
    "changes, path",
    [
        ({"file_size_s": 0.0}, "file_size_s"),
        ({"delay_budget_td": -1.0}, "delay_budget_td"),
        ({"epsilon": 0.0}, "epsilon"),
        ({"n_files": 3}, "demand.p"),
    ],
)
def test_validate_scalar_invariants(changes, path):
    with pytest.raises(ScenarioError) as exc:
        validate(worked_example().with_(**changes))
    assert exc.value.path == path


def test_validate_profile_fields():
    s = worked_example()
    prof = s.profiles[0]
    for field, value in (("a", 0.0), ("b", -1.0), ("rho", -0.1), ("c", -1.0)):
        bad = s.with_(profiles=(prof, prof.__class__(**{**prof.__dict__, field: value})))
        with pytest.raises(ScenarioError) as exc:
            validate(bad)
        assert exc.value.path == f"profiles[1].{field}"


def test_self_contact_is_never_stored():
    with pytest.raises(ScenarioError):
        MobilityModel(2, {(1, 1): 1.0})
    m = MobilityModel(3, {(2, 0): 0.5})
    assert m.rates == {(0, 2): 0.5}
    assert m.rate(2, 0) == m.rate(0, 2) == 0.5
    assert m.rate(1, 2) == 0.0
    with pytest.raises(ValueError):
        m.rate(1, 1)
    mat = m.matrix()
    assert np.all(np.diag(mat) == 0) and np.array_equal(mat, mat.T)


def test_cost_model_rejects_non_convex_q():
    s = worked_example()
    concave = CostModel(PiecewiseConvex(((0, 0), (0.5, 3), (1, 4))))
    with pytest.raises(ScenarioError, match="convex"):
        validate(s.with_(cost=concave))
    decreasing = CostModel(PiecewiseConvex(((0, 2), (1, 1))))
    with pytest.raises(ScenarioError, match="non-decreasing"):
        validate(s.with_(cost=decreasing))


def test_linear_q_formula():
    cost = CostModel(Linear(0.01), file_size_mb=200.0, requests_per_user_per_day=1.0)
    assert cost.q(1.0, 2) == pytest.approx(4.0)
    assert cost.q(0.25, 10) == pytest.approx(0.01 * 200 * 10 * 0.25)
    assert cost.q(0.0, 10) == 0.0


def test_zipf_examples():
    assert zipf_demand(4, 1.0, 3).p[:, 0] == pytest.approx([0.48] * 3)
    assert zipf_demand(3, 0.0, 1).p[0] == pytest.approx([1 / 3] * 3)
    assert zipf_demand(1, 2.0, 2).p.tolist() == [[1.0], [1.0]]


@given(
    n_files=st.integers(1, 60),
    gamma=st.floats(0, 4, allow_nan=False),
    n_users=st.integers(1, 5),
)
@settings(max_examples=100, deadline=None)
def test_zipf_rows_valid_and_non_increasing(n_files, gamma, n_users):
    d = zipf_demand(n_files, gamma, n_users)
    assert d.p.shape == (n_users, n_files)
    assert np.allclose(d.p.sum(axis=1), 1.0, atol=1e-9)
    if gamma > 0:
        assert np.all(np.diff(d.p, axis=1) <= 0)
    # generated demand passes validation
    validate(default_scenario(n_users, n_files, gamma_r=gamma).with_(demand=d))


def test_gamma_mobility_mean_and_determinism():
    m = sample_gamma_mobility(2, 4.43, 1 / 1088, seed=3)
    assert list(m.rates) == [(0, 1)]
    assert sample_gamma_mobility(1, 4.43, 1 / 1088, seed=3).rates == {}
    a = sample_gamma_mobility(30, 4.43, 1 / 1088, seed=7)
    b = sample_gamma_mobility(30, 4.43, 1 / 1088, seed=7)
    assert a == b and a.rates == b.rates
    assert sample_gamma_mobility(30, 4.43, 1 / 1088, seed=8) != a
    # Gamma mean = shape * scale; 1e5 draws in 448 pairs.
    big = sample_gamma_mobility(448, 4.43, 1 / 1088, seed=11)
    rates = np.array(list(big.rates.values()))
    assert rates.size >= 100_000
    assert abs(rates.mean() - 4.43 / 1088) <= 0.01 * 4.43 / 1088


def test_json_round_trip_and_strict_keys():
    s = worked_example()
    doc = json.loads(json.dumps(scenario_to_dict(s)))
    assert scenario_from_dict(doc) == s
    with pytest.raises(ScenarioError, match="bogus"):
        scenario_from_dict({**doc, "bogus": 1})
    with pytest.raises(ScenarioError, match=r"sim\.extra"):
        scenario_from_dict({**doc, "sim": {"td_seconds": 1, "extra": 2}})


def test_json_family_forms():
    doc = {
        "users": {"count": 4, "profile": {"c": 1.0}},
        "mobility": {"gamma": {"shape": 4.43, "scale": 1 / 1088, "seed": 5}},
        "demand": {"zipf": {"gamma": 0.8, "n_files": 6}},
        "cost": {"linear": {"slope_per_mb": 0.01}},
        "sim": {"td_seconds": 300, "file_size_gb": 0.2},
        "solver": {"epsilon": 0.01},
    }
    s = scenario_from_dict(doc)
    assert (s.n_users, s.n_files) == (4, 6)
    assert s.mobility == sample_gamma_mobility(4, 4.43, 1 / 1088, seed=5)
    assert s.q(1.0) == pytest.approx(0.01 * 200 * 4)
    assert s == default_scenario(4, 6, gamma_r=0.8, seed=5)
