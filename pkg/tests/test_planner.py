import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gwlab import planner as P
from gwlab.errors import ClassViolation, DensityError

GRID = P.log_grid(1.0, P.X_MAX, 10_000)


def fn(f, name="f"):
    return P.TargetFunction(fn=f, name=name)


def test_constant_is_case_two_terminal():
    q = P.approximate(fn(lambda x: 1.0), 2.0)
    assert q.ks[1] == math.inf and q.cases == ["II-terminal"]
    assert all(P.f_tilde(q, x) == 1.0 for x in GRID[::97])


def test_sqrt_ratio():
    q = P.approximate(fn(math.sqrt), 2.0)
    assert P.max_grid_ratio(q, fn(math.sqrt), GRID) <= 2.0


def test_linear_is_case_one_terminal():
    m0 = 2.0
    q = P.approximate(fn(lambda x: x), m0)
    assert q.ls[-1] == math.inf and q.cases[-1] == "I-terminal"
    last = q.ks[-1] * q.ls[-2]
    for x in GRID[GRID > last]:
        assert P.f_tilde(q, x) == pytest.approx(x / m0)
    r = np.array([P.f_tilde(q, x) / x for x in GRID])
    assert np.all((r >= 1 / m0 - 1e-12) & (r <= 1 + 1e-12))


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(1.2, 4.0))
def test_power_growth_and_ratio(a, m0):
    f = fn(lambda x: x**a)
    q = P.approximate(f, m0)
    q.validate()
    xs = P.log_grid(1.0, P.X_MAX, 1500)
    assert P.max_grid_ratio(q, f, xs) <= m0 * (1 + 1e-6)
    assert P.max_grid_ratio(q, f, xs, "bar") <= 2 * m0 * (1 + 1e-6)


def test_knots_and_bar_sandwich():
    q = P.approximate(fn(lambda x: x**0.6), 2.0)
    for s in range(len(q.ks)):
        if math.isfinite(q.ks[s] * q.ls[s]):
            assert P.f_tilde(q, q.ks[s] * q.ls[s]) == pytest.approx(q.ls[s], rel=1e-12)
    for x in GRID[::13]:
        t, b = P.f_tilde(q, x), P.f_bar(q, x)
        assert t <= b * (1 + 1e-12) and b <= 2 * t * (1 + 1e-12)


def test_rho_bar_single_segment():
    q = P.PiecewiseParams([1.0, 50.0], [3.0, 7.0], 2.0)
    for x in (1.0, 4.0, 30.0, 100.0):
        assert P.rho_bar(q, x, 0.5, 1.0) == pytest.approx(math.sqrt(x) * 3 + x / 50)


def test_membership_rejects():
    with pytest.raises(ClassViolation):
        P.approximate(fn(lambda x: x**1.2), 2.0)
    with pytest.raises(ClassViolation):
        P.approximate(fn(lambda x: 1 / x), 2.0)
    with pytest.raises(ClassViolation):
        P.approximate(fn(lambda x: 2 * x**0.5), 2.0)   # f(1) != 1


def test_grid_target_matches_closed_form():
    xs = P.log_grid(1.0, 1e13, 400)
    g = P.TargetFunction(grid_x=xs, grid_y=xs**0.6)
    a = P.approximate(g, 2.0)
    b = P.approximate(fn(lambda x: x**0.6), 2.0)
    assert np.allclose(a.ks, b.ks, rtol=1e-6) and np.allclose(a.ls, b.ls, rtol=1e-6)


def test_log_constraint():
    f = fn(lambda x: math.log(math.e + x - 1) ** 2 / 1.0, "log^2")
    q = P.approximate(f, 2.0, check=False, log_alpha=(2.0, 1.0))
    assert q.log_violations is not None
    for s in range(len(q.ks)):
        if s not in q.log_violations and math.isfinite(q.ks[s]) and math.isfinite(q.ls[s]):
            assert math.log(q.ks[s]) <= q.ls[s]


# quantization

def test_quantize_integers():
    f = fn(lambda x: x**0.7)
    m0, C1 = 2.0, 2.0
    raw, q = P.quantize(f, m0, P.AdmissibleSet("integers"), P.AdmissibleSet("integers"), C1)
    assert all(float(v).is_integer() for v in q.ks + q.ls if math.isfinite(v))
    assert P.max_grid_ratio(q, f, GRID) <= m0 * C1**5


def test_quantize_pow2_and_even():
    f = fn(lambda x: x**0.5)
    m0, C1 = 2.0, 2.0
    raw, q = P.quantize(f, m0, P.AdmissibleSet("pow2"), P.AdmissibleSet("even"), C1)
    for a, b in zip(raw.ks, q.ks):
        if math.isfinite(a):
            assert a / 2 <= b <= 2 * a and math.log2(b).is_integer()
    assert all(v % 2 == 0 for v in q.ls if math.isfinite(v))
    q.validate()
    for s in range(len(q.ks) - 1):
        if all(math.isfinite(v) for v in (q.ks[s + 1], q.ls[s + 1])) and s > 0:
            assert q.ks[s + 1] >= m0 * q.ks[s] and q.ls[s + 1] >= m0 * q.ls[s]


def test_quantize_density_error():
    K = P.AdmissibleSet(values=[1, 10**6])
    with pytest.raises(DensityError, match="k_"):
        P.quantize(fn(lambda x: x**0.5), 2.0, K, P.AdmissibleSet("integers"), 2.0)


def test_params_json_inf():
    q = P.approximate(fn(lambda x: x), 2.0)
    text = json.dumps(q.to_json())
    assert '"inf"' in text
    back = P.PiecewiseParams.from_json(json.loads(text))
    assert back.ks == q.ks and back.ls == q.ls


# change of exponents

def test_transform_examples():
    rho = P.transform(fn(lambda x: 1.0), 0.5, 1.0)
    for x in (1.0, 4.0, 1e6):
        assert rho(x) == pytest.approx(math.sqrt(x))
    f = P.inverse_transform(fn(lambda x: x**0.75), 0.5, 1.0)
    for y in (1.0, 9.0, 1e5):
        assert f(y) == pytest.approx(math.sqrt(y))


def test_transform_roundtrip():
    f = fn(lambda x: math.sqrt(x) * math.log(math.e + x) / 1.0)
    back = P.inverse_transform(P.transform(f, 0.5, 0.75), 0.5, 0.75)
    xs = P.log_grid(1.0, 1e8, 1000)
    assert np.allclose(back.values(xs), f.values(xs), rtol=1e-9)


# plans

def test_theta_inversions():
    assert P.theta_for_speed_linear(0.75) == pytest.approx(2.0)
    assert P.theta_for_speed_dihedral(2 / 3) == pytest.approx(1.0)
    assert P.theta_for_speed_dihedral(0.75) is None


def test_plan_three_quarters():
    lin = P.plan("speed", P.TargetFunction.expr("x**0.75"), family="linear")
    assert lin["theta"] == pytest.approx(2.0, abs=0.15)
    dih = P.plan("speed", P.TargetFunction.expr("x**0.75"))
    assert dih["theta"] == math.inf and dih["flags"]


@pytest.mark.parametrize("a", [0.6, 0.65, 0.7])
def test_plan_speed_dihedral(a):
    out = P.plan("speed", P.TargetFunction.expr(f"x**{a}"))
    spec = out["spec"]
    assert spec["family"] == "dihedral" and len(spec["k"]) >= 2
    assert out["exponent"] == pytest.approx(a, abs=0.03)
    assert all(k % 2 == 0 and l % 2 == 0 for k, l in zip(spec["k"], spec["l"]))


def test_plan_return_boundary():
    out = P.plan("return", P.TargetFunction.expr("x**(1/3)"))
    assert any("1/3" in fl for fl in out["flags"])
    with pytest.raises(ClassViolation):
        P.plan("return", P.TargetFunction.expr("x**0.2"))


def test_plan_profile_sqrt_shape():
    out = P.plan("profile", P.TargetFunction.expr("x"))
    q = P.PiecewiseParams.from_json(out["params"])
    sq = fn(math.sqrt)
    xs = P.log_grid(1.0, 1e8, 2000)
    assert P.max_grid_ratio(q, sq, xs) <= out["m0"] * out["C1"] ** 5
