import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gnls.branch import reconstruct_profile, scan_branch
from gnls.envelope import (
    Q_STAR_LOWER,
    black_soliton_energy,
    build_min_curve,
    certify_curve_properties,
    fit_asymptote,
    h_bound,
    lemma21_sequence,
    prop33_sequence,
    q_grid_for,
    tangent_q_star,
)
from gnls.errors import InsufficientData, InvalidN, NoGap
from gnls.nonlinearity import Nonlinearity, preset

from oracles import gp_energy, gp_momentum

SQ2 = math.sqrt(2.0)


def _gp_speed(q: float) -> float:
    # p is decreasing in c; plain bisection on the closed form
    lo, hi = 0.0, SQ2
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if gp_momentum(mid) > q else (lo, mid)
    return 0.5 * (lo + hi)


def test_h_bound_exact():
    assert float(h_bound(Q_STAR_LOWER)) == 1.0
    assert float(h_bound(0.0)) == 0.0


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 10.0), st.floats(1e-6, 1.0))
def test_h_bound_increasing(q, dq):
    assert h_bound(q + dq) > h_bound(q)


def test_black_soliton_energy_values():
    assert black_soliton_energy(preset("gp")) == pytest.approx(2 * SQ2 / 3, abs=1e-12)
    assert black_soliton_energy(preset("fig4")) == pytest.approx(3.751163983291581, rel=1e-11)
    assert black_soliton_energy(preset("fig3")) == pytest.approx(1.8016059835875464, rel=1e-11)


def test_tangent_q_star():
    assert tangent_q_star(2.0, 1.0, 5.0) == 2.0
    with pytest.raises(ValueError):
        tangent_q_star(0.0, 1.0, 2.0)


def test_gp_curve_matches_closed_form(diagrams):
    dg = diagrams("gp")
    curve = dg.curve
    assert curve.q_star_method == "monotone-limit"
    assert curve.q_star == pytest.approx(math.pi / 2, abs=1e-12)
    # closed-form E_min below pi/2 at grid momenta
    for q in (0.05, 0.3, 0.8, 1.2, 1.5):
        i = int(np.argmin(np.abs(curve.qs - q)))
        assert curve.Emin[i] == pytest.approx(gp_energy(_gp_speed(curve.qs[i])), rel=1e-6)
    above = curve.qs >= math.pi / 2
    assert np.all(curve.Emin[above] == curve.E0)
    assert set(curve.source) <= {"origin", "branch", "plateau"}


def test_gp_certificate(diagrams):
    cert = diagrams("gp").certificate
    assert cert.lipschitz and cert.concave and cert.monotone and cert.subadditive
    assert cert.n_subadditive_pairs > 1000
    assert cert.alpha == pytest.approx(5.0 / 3.0, abs=0.05)
    assert cert.q_star_ok
    assert cert.bounds_margin >= 0.0


def test_fig2_monotone(diagrams):
    dg = diagrams("fig2")
    assert not dg.branch.gaps
    assert dg.branch.dp_sign_changes() == []
    assert dg.curve.q_star_method == "monotone-limit"


def test_fig3_cusp_and_envelope_hit(diagrams):
    dg = diagrams("fig3")
    assert dg.curve.q_star_method == "envelope-hit"
    assert dg.curve.q_star == pytest.approx(2.3042841989, rel=1e-8)
    cusps = dg.branch.dp_sign_changes()
    assert len(cusps) >= 1 and abs(cusps[0] - 0.69381) < 1e-4
    cert = dg.certificate
    assert cert.lipschitz and cert.concave and cert.monotone and cert.subadditive


def test_fig4_asymptote_frozen(diagrams):
    dg = diagrams("fig4")
    a = dg.asymptote
    assert a.c0 == pytest.approx(2.7362017032229793, rel=1e-12)
    assert a.intercept == pytest.approx(0.0012106016058, rel=1e-8)
    assert a.spread < 1e-10
    assert dg.curve.q_star_method == "tangent-extrapolation"
    assert dg.curve.q_star == pytest.approx(1.37049596, rel=1e-7)
    # the small-speed sub-branch undercuts the plateau (recorded, not hidden)
    assert dg.curve.diagnostics["branch_below_plateau"] > 0


def test_fit_asymptote_needs_gap(gp):
    br = scan_branch(gp, np.linspace(0.0, 1.4, 20))
    with pytest.raises(NoGap):
        fit_asymptote(br)


def test_min_curve_empty_branch(gp):
    br = scan_branch(gp, np.linspace(0.0, 1.4, 5))
    br.points.clear()
    with pytest.raises(InsufficientData):
        build_min_curve(br, 1.0, [0.1])


def test_q_grid_contains_sums():
    g = q_grid_for(2.0, 401)
    assert g[0] == 0.0 and g[-1] == 2.0
    assert np.all(np.diff(g) > 0)
    assert np.any(np.isclose(g, 0.005 + 0.01))


def test_certificate_detects_convex_curve(diagrams):
    # a strictly convex stand-in must fail concavity and subadditivity
    curve = diagrams("gp").curve
    fake = type(curve)(curve.qs, 0.1 * curve.qs**2, list(curve.source), curve.E0, curve.q_star, "test", curve.c_s)
    cert = certify_curve_properties(fake, preset("gp"))
    assert not cert.concave
    assert not cert.subadditive


def test_lemma21_energy_tends_to_cs_q(gp):
    q = 0.5
    gaps = []
    for n in (5, 20, 80):
        p, E = lemma21_sequence(gp, q, n)
        assert p == pytest.approx(q, rel=1e-12)
        gaps.append(E - SQ2 * q)
    assert gaps[0] > gaps[1] > gaps[2] > 0
    assert gaps[2] < 0.01


def test_lemma21_invalid(gp):
    with pytest.raises(InvalidN):
        lemma21_sequence(gp, 0.5, 0)
    assert lemma21_sequence(gp, 0.0, 3) == (0.0, 0.0)


def test_prop33_sequence(gp):
    pr = reconstruct_profile(gp, 0.0, 1.0)
    E0 = black_soliton_energy(gp)
    diffs = []
    for n in (10, 50, 200):
        p, E = prop33_sequence(pr, 0.3, n)
        assert p == pytest.approx(0.3, rel=1e-12)
        diffs.append(abs(E - E0))
    assert diffs[0] > diffs[1] > diffs[2]
    assert diffs[2] < 5e-3


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 1.5), st.integers(10, 60))
def test_lemma21_above_cs_q(q, n):
    # the test maps are admissible competitors, so they sit above E_min >= 0
    # and their excess over c_s q decays
    gp = Nonlinearity((1.0,))
    try:
        p, E = lemma21_sequence(gp, q, n)
    except InvalidN:
        return
    assert p == pytest.approx(q, rel=1e-10)
    assert E > 0.0
