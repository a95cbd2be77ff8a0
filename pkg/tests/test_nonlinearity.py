import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gnls.errors import InvalidNonlinearity
from gnls.nonlinearity import (
    Nonlinearity,
    check_hypotheses,
    eval_F,
    eval_f,
    preset,
    remark18_bound,
    structural_constants,
)

from conftest import DATA

coeff_lists = st.lists(
    st.floats(-5.0, 5.0, allow_nan=False, allow_infinity=False), min_size=0, max_size=6
).map(lambda rest: [1.0 + abs(rest[0]) if rest else 1.0] + rest[1:])


def test_gp_constants_exact(gp):
    sc = structural_constants(gp)
    assert sc.c_s == math.sqrt(2.0)
    assert sc.k == -6.0
    assert sc.Gamma == 6.0
    assert sc.lam == 0.5


def test_fig4_constants():
    sc = structural_constants(preset("fig4"))
    assert sc.c_s == math.sqrt(8.0)
    assert sc.k == -24.0
    assert sc.Gamma == 6.0


def test_presets_match_data_files():
    for name in ("gp", "fig2", "fig3", "fig4"):
        assert Nonlinearity.load(DATA / f"{name}.json") == preset(name)


@pytest.mark.parametrize(
    "text",
    ['{"coeffs": [1,', "[1, 2]", '{"coeffs": []}', '{"coeffs": [0, 1]}', '{"coeffs": [-1]}', '{"coeffs": ["a"]}', '{"coeffs": [true]}', '{"c": [1]}'],
)
def test_malformed_input_rejected(text):
    with pytest.raises(InvalidNonlinearity):
        Nonlinearity.from_json(text)


def test_nonfinite_rejected():
    with pytest.raises(InvalidNonlinearity):
        Nonlinearity((1.0, math.inf))


def test_f_vanishes_at_one_and_slope():
    nl = Nonlinearity((2.0, 3.0, -1.0))
    assert eval_f(nl, 1.0) == 0.0
    h = 1e-6
    slope = (eval_f(nl, 1.0 + h) - eval_f(nl, 1.0 - h)) / (2 * h)
    assert slope == pytest.approx(-2.0, rel=1e-8)


def test_gp_F_closed_form(gp):
    rho = np.linspace(0.0, 3.0, 31)
    np.testing.assert_allclose(eval_F(gp, rho), 0.5 * (1.0 - rho) ** 2, atol=1e-15)


def test_hypotheses_gp_hold(gp):
    rep = check_hypotheses(gp)
    assert rep.h1_holds and rep.h2_holds and rep.h3_holds
    assert rep.h3_value == -3.0


def test_k0_fails_h3():
    rep = check_hypotheses(Nonlinearity.load(DATA / "k0.json"))
    assert not rep.h3_holds
    assert structural_constants(Nonlinearity((2.0, 3.0))).k == 0.0


def test_odd_top_power_fails_h1_tail():
    # F ~ u^3 / 3 is unbounded below as rho -> infinity
    rep = check_hypotheses(Nonlinearity((1.0, 1.0)))
    assert not rep.h1_tail_ok and not rep.h1_holds


def test_remark18_bound_values():
    assert remark18_bound(10) == pytest.approx(10 * (19 / 17) ** 17)
    assert remark18_bound(10) == pytest.approx(66.249, abs=1e-3)
    rep = check_hypotheses(preset("fig3"))
    assert rep.remark18_holds is False
    assert check_hypotheses(preset("fig2")).remark18_holds is True


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 12), st.floats(0.0, 0.999))
def test_remark18_family_satisfies_h1(p, frac):
    a = frac * remark18_bound(p)
    nl = Nonlinearity((1.0,) + (0.0,) * (2 * p - 3) + (a,))
    assert check_hypotheses(nl).h1_holds


@settings(max_examples=60, deadline=None)
@given(coeff_lists)
def test_json_roundtrip(coeffs):
    nl = Nonlinearity(tuple(coeffs))
    assert Nonlinearity.from_json(nl.to_json()) == nl
    assert json.loads(nl.to_json())["coeffs"] == list(nl.coeffs)


@settings(max_examples=60, deadline=None)
@given(coeff_lists, st.floats(0.0, 2.0))
def test_F_is_antiderivative_of_minus_f(coeffs, rho):
    nl = Nonlinearity(tuple(coeffs))
    h = 1e-5
    dF = (eval_F(nl, rho + h) - eval_F(nl, rho - h)) / (2 * h)
    scale = 1.0 + sum(abs(a) for a in coeffs) * 3.0 ** len(coeffs)
    assert abs(dF + eval_f(nl, rho)) <= 1e-6 * scale


@settings(max_examples=60, deadline=None)
@given(coeff_lists, st.floats(0.01, 0.99), st.floats(0.0, 3.0))
def test_P_matches_N_over_xi_squared(coeffs, xi, c):
    nl = Nonlinearity(tuple(coeffs))
    P = np.polynomial.polynomial.polyval(xi, nl.P_xi(c))
    N = c * c * xi * xi - 4.0 * (1.0 - xi) * eval_F(nl, 1.0 - xi)
    assert P * xi * xi == pytest.approx(N, rel=1e-9, abs=1e-12)
