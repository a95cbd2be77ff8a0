"""The minimization curve E_min(q) and the critical momentum q_*.

E_min is read off travelling-wave data (minimizers are travelling waves),
capped by the black-soliton energy E(v_0), which bounds E_min everywhere and
equals it beyond q_*.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline, CubicSpline
from scipy.optimize import brentq

from .branch import (
    Branch,
    SolitonProfile,
    critical_speeds,
    energy_momentum,
    find_xi_c,
    scan_branch,
    speed_grid,
    wave_point,
)
from .errors import GnlsError, InsufficientData, InvalidN, NoGap
from .nonlinearity import Nonlinearity, eval_F, structural_constants

__all__ = [
    "MinCurve",
    "Asymptote",
    "CurveCertificate",
    "black_soliton_energy",
    "build_min_curve",
    "fit_asymptote",
    "tangent_q_star",
    "h_bound",
    "certify_curve_properties",
    "lemma21_sequence",
    "prop33_sequence",
    "Diagram",
    "compute_diagram",
    "q_grid_for",
    "Q_STAR_LOWER",
]

Q_STAR_LOWER = 1.0 / 32.0


def h_bound(q):
    """h(q) = 8q + 4 sqrt(4q^2 + q); h(1/32) = 1."""
    q = np.asarray(q, dtype=float)
    return 8.0 * q + 4.0 * np.sqrt(4.0 * q * q + q)


def black_soliton_energy(nl: Nonlinearity) -> float:
    """E(v_0) from the c = 0 integral (xi_0 = 1)."""
    E, _ = energy_momentum(nl, 0.0, find_xi_c(nl, 0.0))
    return E


@dataclass(frozen=True)
class Asymptote:
    c0: float
    intercept: float
    spread: float
    c0_width: float
    samples: tuple[tuple[float, float, float], ...] = ()  # (c, E, p)

    def __iter__(self):
        return iter((self.c0, self.intercept))

    def to_dict(self) -> dict:
        return {
            "c0": self.c0,
            "intercept": self.intercept,
            "spread": self.spread,
            "c0_width": self.c0_width,
            "samples": [list(s) for s in self.samples],
        }


def tangent_q_star(c0: float, E0_intercept: float, E0_black: float) -> float:
    """Momentum where E = c0 p + E0_intercept meets E = E(v_0)."""
    if c0 <= 0:
        raise ValueError("c0 must be positive")
    return (E0_black - E0_intercept) / c0


# ---------------------------------------------------------------- curve


@dataclass
class _Run:
    c: np.ndarray
    p: np.ndarray
    E: np.ndarray
    spline: CubicHermiteSpline | None

    @property
    def lo(self) -> float:
        return float(self.p[0])

    @property
    def hi(self) -> float:
        return float(self.p[-1])

    def __call__(self, q):
        q = np.asarray(q, dtype=float)
        if self.spline is None:
            return np.full(q.shape, float(self.E[0]))
        return self.spline(q)


def _monotone_runs(branch: Branch) -> list[_Run]:
    """Split each continuous segment into runs where p is strictly monotone."""
    runs = []
    for seg in branch.segments:
        c = branch.c[seg]
        p = branch.p[seg]
        E = branch.E[seg]
        start = 0
        dp = np.sign(np.diff(p))
        for i in range(1, len(seg)):
            if i == len(seg) - 1 or dp[i] != dp[i - 1]:
                sl = slice(start, i + 1)
                runs.append(_make_run(c[sl], p[sl], E[sl]))
                start = i
    return runs


def _make_run(c, p, E) -> _Run:
    order = np.argsort(p)
    c, p, E = c[order], p[order], E[order]
    if p.size < 2:
        return _Run(c, p, E, None)
    # dE/dp = c along the branch
    return _Run(c, p, E, CubicHermiteSpline(p, E, c))


@dataclass
class MinCurve:
    qs: np.ndarray
    Emin: np.ndarray
    source: list[str]
    E0: float
    q_star: float
    q_star_method: str
    c_s: float
    asymptote: Asymptote | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def delta_p(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            d = 1.0 - self.Emin / (self.c_s * self.qs)
        return np.where(self.qs > 0, d, np.nan)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["q", "Emin", "source", "delta_p"])
        for q, e, s, d in zip(self.qs, self.Emin, self.source, self.delta_p):
            w.writerow([repr(float(q)), repr(float(e)), s, repr(float(d))])
        return buf.getvalue()

    def q_star_report(self) -> dict:
        return {
            "q_star": self.q_star,
            "method": self.q_star_method,
            "E0": self.E0,
            "c_s": self.c_s,
            "h_q_star": float(h_bound(self.q_star)) if math.isfinite(self.q_star) else None,
            "above_1_32": bool(self.q_star >= Q_STAR_LOWER) if math.isfinite(self.q_star) else None,
            "asymptote": self.asymptote.to_dict() if self.asymptote else None,
            "diagnostics": self.diagnostics,
        }

    def to_json(self) -> str:
        return json.dumps(self.q_star_report(), indent=2)


def _origin_run(runs: list[_Run], branch: Branch) -> _Run | None:
    # the run holding the fastest wave, i.e. the one leaving q = 0
    c_top = branch.c.max()
    for r in runs:
        if np.any(r.c == c_top):
            return r
    return None


def build_min_curve(
    branch: Branch,
    E0: float,
    q_grid: Sequence[float],
    asymptote: Asymptote | None = None,
    tol: float = 1e-10,
) -> MinCurve:
    """Estimate E_min on q_grid and the critical momentum q_*."""
    if not branch.points:
        raise InsufficientData("empty branch")
    qs = np.asarray(q_grid, dtype=float)
    c_s = math.sqrt(2.0 * branch.nl.coeffs[0])
    runs = [r for r in _monotone_runs(branch) if r.spline is not None]
    origin = _origin_run(runs, branch)
    diag: dict = {"n_runs": len(runs), "gaps": [list(g) for g in branch.gaps]}

    dp = branch.dp_dc[np.isfinite(branch.dp_dc)]
    twisted = np.array([not pt.untwisted for pt in branch.points])
    dp_tw = branch.dp_dc[twisted & np.isfinite(branch.dp_dc)]
    monotone = not branch.gaps and dp.size > 0 and np.all(dp_tw < 0)

    q_star = math.nan
    method = "none"
    if monotone:
        method = "monotone-limit"
        q_star = _limit_p_at_zero(branch)
    elif origin is not None and origin.E.max() >= E0 - tol:
        method = "envelope-hit"
        if abs(origin.E.max() - E0) <= tol:
            q_star = float(origin.p[np.argmax(origin.E)])
        else:
            q_star = brentq(lambda q: float(origin(q)) - E0, origin.lo, origin.hi, xtol=1e-14)
    elif asymptote is not None:
        method = "tangent-extrapolation"
        q_star = tangent_q_star(asymptote.c0, asymptote.intercept, E0)
    else:
        hi = origin.hi if origin is not None else 0.0
        diag["q_star_bracket"] = [hi, math.inf]

    Emin = np.empty_like(qs)
    source = []
    origin_hi = origin.hi if origin is not None else 0.0
    for i, q in enumerate(qs):
        if q <= 0.0:
            Emin[i], s = 0.0, "origin"
        elif math.isfinite(q_star) and q >= q_star:
            Emin[i], s = E0, "plateau"
        else:
            vals = [float(r(q)) for r in runs if r.lo <= q <= r.hi]
            if asymptote is not None and q > origin_hi:
                vals.append(asymptote.c0 * q + asymptote.intercept)
                s = "asymptote"
            else:
                s = "branch"
            if vals:
                v = min(vals)
                if asymptote is not None and q > origin_hi and v < asymptote.c0 * q + asymptote.intercept:
                    s = "branch"
                if v >= E0:
                    v, s = E0, "plateau"
                Emin[i] = v
            else:
                Emin[i], s = math.nan, "none"
        source.append(s)
    diag["dp_sign_changes"] = branch.dp_sign_changes()
    if math.isfinite(q_star):
        # travelling waves beyond q_star that undercut the plateau
        below = [
            (float(r.p[j]), float(r.E[j]))
            for r in runs
            for j in range(r.p.size)
            if r.p[j] > q_star and r.E[j] < E0 - tol
        ]
        diag["branch_below_plateau"] = len(below)
        if below:
            diag["branch_below_plateau_example"] = min(below, key=lambda t: t[1])
    return MinCurve(qs, Emin, source, E0, float(q_star), method, c_s, asymptote, diag)


def _limit_p_at_zero(branch: Branch) -> float:
    pts = branch.points
    if pts[0].c == 0.0:
        return pts[0].p
    if len(pts) < 2:
        return pts[0].p
    c1, c2 = pts[0].c, pts[1].c
    p1, p2 = pts[0].p, pts[1].p
    return p1 - c1 * (p2 - p1) / (c2 - c1)


# ---------------------------------------------------------------- asymptote


def _root_side(nl: Nonlinearity, c: float, split: float) -> bool:
    return find_xi_c(nl, c) > split


def fit_asymptote(
    branch: Branch,
    c0_bracket: tuple[float, float] | None = None,
    refine: bool = True,
    n_last: int = 5,
) -> Asymptote:
    """Fit E = c0 p + E_0 to the lower sub-branch approaching a gap.

    c0 is the gap edge located by bisection on which root branch find_xi_c
    lands on; E_0 is the median of E - c0 p over the n_last points closest to
    the gap (optionally densified toward c0).
    """
    if not branch.gaps:
        raise NoGap("branch has no speed gap")
    nl = branch.nl
    if c0_bracket is None:
        gap = branch.gaps[0]
        jumps = critical_speeds(nl)
        for g in branch.gaps:
            if any(g[0] < cj <= g[1] for cj in jumps):
                gap = g
                break
    else:
        gap = tuple(c0_bracket)
    lo, hi = float(gap[0]), float(gap[1])

    if hi - lo < 1e-14:
        c0, width = 0.5 * (lo + hi), hi - lo
    else:
        try:
            xa, xb = find_xi_c(nl, lo), find_xi_c(nl, hi)
            split = 0.5 * (xa + xb)
            side_lo = xa > split
            a, b = lo, hi
            while b - a > 4e-16 * b:
                m = 0.5 * (a + b)
                if m in (a, b):
                    break
                try:
                    s = _root_side(nl, m, split)
                except GnlsError:
                    s = side_lo  # degenerate point sits at the jump; keep shrinking from the left
                if s == side_lo:
                    a = m
                else:
                    b = m
            c0, width = 0.5 * (a + b), b - a
        except GnlsError:
            c0, width = 0.5 * (lo + hi), hi - lo

    cs = branch.c
    above = cs > c0
    below = cs < c0
    E_above = branch.E[above][:1]
    E_below = branch.E[below][-1:]
    lower_is_above = not (E_above.size and E_below.size) or E_above[0] <= E_below[0]
    samples: list[tuple[float, float, float]] = []
    if lower_is_above:
        idx = np.flatnonzero(above)[:n_last]
    else:
        idx = np.flatnonzero(below)[-n_last:]
    samples = [(float(cs[i]), float(branch.E[i]), float(branch.p[i])) for i in idx]
    if refine:
        sgn = 1.0 if lower_is_above else -1.0
        for k in range(3, 13):
            c = c0 + sgn * 10.0 ** (-k) * max(1.0, c0)
            try:
                pt = wave_point(nl, c)
            except GnlsError:
                continue
            samples.append((c, pt.E, pt.p))
        samples.sort(key=lambda s: abs(s[0] - c0))
        samples = samples[:n_last]
    if not samples:
        raise InsufficientData("no branch points next to the gap")
    vals = np.array([E - c0 * p for _, E, p in samples])
    return Asymptote(
        c0=float(c0),
        intercept=float(np.median(vals)),
        spread=float(vals.max() - vals.min()),
        c0_width=float(width),
        samples=tuple(samples),
    )


# ---------------------------------------------------------------- certificates


@dataclass(frozen=True)
class CurveCertificate:
    lipschitz_margin: float
    concavity_margin: float
    monotone_margin: float
    subadditivity_margin: float
    n_subadditive_pairs: int
    alpha: float
    alpha_range: tuple[float, float]
    alpha_points: int
    q_star: float
    q_star_ok: bool
    h_at_q_star: float
    h_at_lower: float
    delta_p_min: float
    bounds_margin: float

    @property
    def lipschitz(self) -> bool:
        return self.lipschitz_margin >= 0.0

    @property
    def concave(self) -> bool:
        return self.concavity_margin >= 0.0

    @property
    def monotone(self) -> bool:
        return self.monotone_margin >= 0.0

    @property
    def subadditive(self) -> bool:
        return self.subadditivity_margin > 0.0

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d.update(
            lipschitz=self.lipschitz,
            concave=self.concave,
            monotone=self.monotone,
            subadditive=self.subadditive,
        )
        return d


def certify_curve_properties(
    curve: MinCurve,
    nl: Nonlinearity,
    tol: float = 1e-8,
    alpha_range: tuple[float, float] = (1e-3, 5e-2),
) -> CurveCertificate:
    """Sampled checks of the proven properties of E_min.

    Margins are signed so that >= 0 means the property holds (strictly
    positive for subadditivity). ``tol`` absorbs interpolation noise in the
    slope-based checks.
    """
    c_s = structural_constants(nl).c_s
    ok = np.isfinite(curve.Emin)
    q = curve.qs[ok]
    E = curve.Emin[ok]

    # c_s-Lipschitz over all pairs
    dq = np.abs(q[:, None] - q[None, :])
    dE = np.abs(E[:, None] - E[None, :])
    off = ~np.eye(q.size, dtype=bool)
    lip = float(np.min((c_s * dq - dE)[off])) + tol if q.size > 1 else tol

    slopes = np.diff(E) / np.diff(q)
    conc = float(np.min(slopes[:-1] - slopes[1:])) + tol if slopes.size > 1 else 0.0
    mono = float(np.min(np.diff(E))) + tol if E.size > 1 else 0.0

    # pairs whose sum lands on the grid
    pos = q > 0
    qp, Ep = q[pos], E[pos]
    s = qp[:, None] + qp[None, :]
    k = np.searchsorted(qp, s)
    k = np.clip(k, 0, qp.size - 1)
    hit = np.isclose(qp[k], s, rtol=1e-12, atol=0.0) & (s <= qp[-1])
    iu = np.triu(np.ones_like(hit, dtype=bool))
    hit &= iu
    if hit.any():
        ii, jj = np.nonzero(hit)
        sub = Ep[ii] + Ep[jj] - Ep[k[ii, jj]]
        sub_margin = float(np.min(sub))
    else:
        sub_margin = math.nan
    n_pairs = int(hit.sum())

    sel = (q >= alpha_range[0]) & (q <= alpha_range[1])
    defect = c_s * q[sel] - E[sel]
    if sel.sum() >= 2 and np.all(defect > 0):
        alpha = float(np.polyfit(np.log(q[sel]), np.log(defect), 1)[0])
    else:
        alpha = math.nan

    bounds = float(np.min(np.minimum(c_s * q - E, curve.E0 - E))) + tol
    with np.errstate(divide="ignore", invalid="ignore"):
        dp = 1.0 - E[pos] / (c_s * qp)
    qs_ = curve.q_star
    return CurveCertificate(
        lipschitz_margin=lip,
        concavity_margin=conc,
        monotone_margin=mono,
        subadditivity_margin=sub_margin,
        n_subadditive_pairs=n_pairs,
        alpha=alpha,
        alpha_range=tuple(alpha_range),
        alpha_points=int(sel.sum()),
        q_star=qs_,
        q_star_ok=bool(math.isfinite(qs_) and qs_ >= Q_STAR_LOWER),
        h_at_q_star=float(h_bound(qs_)) if math.isfinite(qs_) else math.nan,
        h_at_lower=float(h_bound(Q_STAR_LOWER)),
        delta_p_min=float(np.min(dp)) if dp.size else math.nan,
        bounds_margin=bounds,
    )


# ---------------------------------------------------------------- test sequences


def _bump(y: np.ndarray):
    """psi(y) = exp(y - 1/(1-y^2)) on (-1, 1) with first two derivatives.

    The e^y factor breaks the symmetry so that int (chi')^3 != 0.
    """
    inside = np.abs(y) < 1.0
    yy = np.where(inside, y, 0.0)
    w = 1.0 - yy * yy
    g = yy - 1.0 / w
    g1 = 1.0 - 2.0 * yy / w**2
    g2 = -2.0 / w**2 - 8.0 * yy * yy / w**3
    psi = np.where(inside, np.exp(g), 0.0)
    return psi, psi * g1, psi * (g2 + g1 * g1)


def lemma21_sequence(
    nl: Nonlinearity, q: float, n: int, n_quad: int = 20001
) -> tuple[float, float]:
    """(p(v_n), E(v_n)) for the small-amplitude long-wave test maps.

    v_n = rho_n e^{i phi_n}, rho_n = 1 - alpha chi'(beta x),
    phi_n = c_s (alpha / beta) chi(beta x), alpha = 1/n,
    beta = n^-2 (1 - c_s a / (2 |q| n)), a = int chi'^3, int chi'^2 = |q| / c_s.
    """
    if n < 1:
        raise InvalidN("n must be >= 1")
    if q == 0.0:
        return 0.0, 0.0
    c_s = math.sqrt(2.0 * nl.coeffs[0])
    y = np.linspace(-1.0, 1.0, n_quad)
    _, d1, d2 = _bump(y)
    scale = math.sqrt(abs(q) / c_s / np.trapezoid(d1 * d1, y))
    chi1, chi2 = scale * d1, scale * d2
    a = float(np.trapezoid(chi1**3, y))
    alpha = 1.0 / n
    beta = (1.0 - c_s * a / (2.0 * abs(q) * n)) / n**2
    if beta <= 0.0:
        raise InvalidN(f"beta_n <= 0 at n={n}")
    rho = 1.0 - alpha * chi1
    if rho.min() <= 0.0:
        raise InvalidN(f"rho_n vanishes at n={n}")
    # x = y / beta, so dx = dy / beta and d/dx = beta d/dy
    drho = -alpha * beta * chi2
    dphi = c_s * alpha * chi1
    sgn = 1.0 if q > 0 else -1.0
    p = sgn * 0.5 * np.trapezoid((1.0 - rho * rho) * dphi, y) / beta
    ek = 0.5 * (drho**2 + rho * rho * dphi**2)
    ep = 0.5 * eval_F(nl, rho * rho)
    E = np.trapezoid(ek + ep, y) / beta
    return float(p), float(E)


def prop33_sequence(
    profile_v0: SolitonProfile, q: float, n: int, nl: Nonlinearity | None = None
) -> tuple[float, float]:
    """(p(w_n), E(w_n)) for the black soliton spliced with a phase ramp.

    On |x| <= 1/n the modulus is frozen at m = |v_0(1/n)| and the phase
    ramps linearly with total jump 2 q_n, q_n = q / (1 - m^2); outside,
    w_n = |v_0| with constant phase.
    """
    nl = nl or profile_v0.nl
    xs = profile_v0.xs
    mod = np.abs(profile_v0.v)
    dmod = np.sign(profile_v0.v.real) * profile_v0.dv.real
    h = 1.0 / n
    m = float(CubicSpline(xs, mod)(h))
    q_n = q / (1.0 - m * m)
    # inner part: constant modulus, phase slope q_n * n
    E_in = 2.0 * h * 0.5 * ((q_n * n) ** 2 * m * m + eval_F(nl, m * m))
    p_in = 0.5 * (1.0 - m * m) * (q_n * n) * 2.0 * h
    # outer part (even integrand, doubled)
    right = xs > h
    xo = np.concatenate([[h], xs[right]])
    eo = 0.5 * np.concatenate(
        [[float(CubicSpline(xs, dmod)(h)) ** 2], dmod[right] ** 2]
    ) + 0.5 * eval_F(nl, np.concatenate([[m], mod[right]]) ** 2)
    E_out = 2.0 * CubicSpline(xo, eo).integrate(h, xo[-1])
    return float(p_in), float(E_in + E_out)


# ---------------------------------------------------------------- pipeline


@dataclass
class Diagram:
    branch: Branch
    curve: MinCurve
    certificate: CurveCertificate
    asymptote: Asymptote | None


def q_grid_for(q_max: float, n_q: int = 401, alpha_range=(1e-3, 5e-2), n_small: int = 30) -> np.ndarray:
    """Uniform grid on [0, q_max] (so that q_i + q_j lands on it) plus a
    geometric block inside alpha_range for the small-q defect fit."""
    g = np.concatenate(
        [np.linspace(0.0, q_max, n_q), np.geomspace(alpha_range[0], alpha_range[1], n_small)]
    )
    return np.unique(g)


def compute_diagram(
    nl: Nonlinearity,
    n_speeds: int = 200,
    c_grid=None,
    n_q: int = 401,
    tol: float = 1e-10,
    workers: int | None = None,
) -> Diagram:
    grid = speed_grid(nl, n_speeds) if c_grid is None else np.asarray(c_grid, dtype=float)
    branch = scan_branch(nl, grid, workers=workers)
    E0 = black_soliton_energy(nl)
    probe = build_min_curve(branch, E0, [0.0], tol=tol)
    asym = None
    if probe.q_star_method == "none" and branch.gaps:
        # origin run never reaches the plateau: extrapolate along the gap asymptote
        try:
            asym = fit_asymptote(branch)
        except (NoGap, InsufficientData):
            asym = None
    q_star = build_min_curve(branch, E0, [0.0], asym, tol=tol).q_star
    q_max = 1.25 * max(float(np.nanmax(branch.p)), q_star if math.isfinite(q_star) else 0.0)
    curve = build_min_curve(branch, E0, q_grid_for(q_max, n_q), asym, tol=tol)
    cert = certify_curve_properties(curve, nl)
    return Diagram(branch, curve, cert, asym)
