"""Travelling-wave branches: roots xi_c, energy/momentum, profiles, scans.

A wave of speed c has eta = 1 - |v|^2 solving (eta')^2 + N_c(eta) = 0 with
N_c(xi) = c^2 xi^2 - 4 (1 - xi) F(1 - xi) = xi^2 P(xi). Its amplitude xi_c is
the first upward zero of P on (0, 1].
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import (
    DecayError,
    Degenerate,
    DomainError,
    GnlsError,
    NotFound,
    PhaseSingularity,
)
from .nonlinearity import Nonlinearity, eval_F, structural_constants
from .quadrature import adaptive_gauss_legendre

__all__ = [
    "WavePoint",
    "SolitonProfile",
    "Branch",
    "AuditReport",
    "eval_Nc",
    "find_xi_c",
    "upward_roots",
    "critical_speeds",
    "energy_momentum",
    "wave_point",
    "reconstruct_profile",
    "default_x_max",
    "speed_grid",
    "scan_branch",
    "appendix_a_audit",
]

DEGENERACY_FLOOR = 1e-8
DECAY_THRESHOLD = 1e-8


@dataclass(frozen=True)
class WavePoint:
    c: float
    xi_c: float
    E: float
    p: float
    dNdxi_at_root: float
    roots: tuple[float, ...] = ()
    untwisted: bool = False  # p holds [p] = pi/2 (black soliton)


def _c_s(nl: Nonlinearity) -> float:
    return math.sqrt(2.0 * nl.coeffs[0])


def eval_Nc(nl: Nonlinearity, c: float, xi):
    """N_c(xi) = c^2 xi^2 - 4 (1 - xi) F(1 - xi)."""
    xi = np.asarray(xi, dtype=float)
    return xi * xi * npoly.polyval(xi, nl.P_xi(c))


@lru_cache(maxsize=64)
def _critical_points(coeffs: tuple[float, ...]) -> tuple[float, ...]:
    # P' does not depend on c
    nl = Nonlinearity(coeffs)
    dP = npoly.polyder(nl.P_xi(0.0))
    if dP.size == 0 or not np.any(dP):
        return ()
    r = npoly.polyroots(dP)
    r = r[np.abs(r.imag) < 1e-9].real
    return tuple(sorted(float(x) for x in r if 0.0 < x < 1.0))


def _refine(P: np.ndarray, lo: float, hi: float) -> float:
    f = lambda x: float(npoly.polyval(x, P))  # noqa: E731
    if f(hi) == 0.0:
        return hi
    return brentq(f, lo, hi, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=500)


def upward_roots(nl: Nonlinearity, c: float, n_mesh: int = 2048) -> list[float]:
    """All zeros of P on (0, 1] where P goes from negative to nonnegative.

    The mesh is the union of a uniform grid and the critical points of P, so
    P is monotone between consecutive mesh points up to the accuracy of the
    computed critical points.
    """
    P = nl.P_xi(c)
    mesh = np.union1d(np.linspace(0.0, 1.0, n_mesh + 1), _critical_points(nl.coeffs))
    vals = npoly.polyval(mesh, P)
    if c == 0.0:
        vals[-1] = 0.0  # P(1) = c^2 exactly; kill rounding in the coefficient sum
    roots = []
    for i in np.flatnonzero((vals[:-1] < 0.0) & (vals[1:] >= 0.0)):
        roots.append(_refine(P, float(mesh[i]), float(mesh[i + 1])))
    return roots


def find_xi_c(nl: Nonlinearity, c: float) -> float:
    """Smallest admissible simple root of N_c on (0, 1]."""
    c_s = _c_s(nl)
    if not 0.0 <= c < c_s:
        raise NotFound(f"speed {c} outside [0, c_s={c_s})")
    roots = upward_roots(nl, c)
    if not roots:
        raise NotFound(f"no sign change of N_c on (0,1] at c={c}")
    xi = roots[0]
    P = nl.P_xi(c)
    resid = abs(float(npoly.polyval(xi, P))) if not (c == 0.0 and xi == 1.0) else 0.0
    if resid > 1e-13 * max(1.0, c * c) * max(1.0, float(np.sum(np.abs(P)))):
        raise Degenerate(f"root at c={c} not resolved (|P|={resid:.3e})")
    dN = xi * xi * float(npoly.polyval(xi, npoly.polyder(P)))
    if dN <= DEGENERACY_FLOOR * c_s * c_s:
        raise Degenerate(f"N_c'(xi_c)={dN:.3e} below floor at c={c}")
    return xi


def critical_speeds(nl: Nonlinearity) -> list[float]:
    """Speeds at which the minimal root jumps (a local max of P touches 0).

    P = c^2 + Q(xi) with Q independent of c, so a new pair of roots appears
    left of the current one exactly when c^2 = -Q(xi_m) at a local maximum
    xi_m that dominates Q on (0, xi_m).
    """
    Q = nl.P_xi(0.0)
    c_s2 = 2.0 * nl.coeffs[0]
    out = []
    d2 = npoly.polyder(Q, 2)
    for xm in _critical_points(nl.coeffs):
        if npoly.polyval(xm, d2) >= 0.0:
            continue
        qm = float(npoly.polyval(xm, Q))
        if not 0.0 < -qm < c_s2:
            continue
        left = npoly.polyval(np.linspace(0.0, xm, 4097)[:-1], Q)
        if np.all(left < qm):
            out.append(math.sqrt(-qm))
    return sorted(out)


def _deflate(P: np.ndarray, root: float) -> np.ndarray:
    """Quotient R of P(xi) = (xi - root) R(xi), by synthetic division."""
    n = P.size - 1
    r = np.empty(n)
    r[n - 1] = P[n]
    for k in range(n - 1, 0, -1):
        r[k - 1] = P[k] + root * r[k]
    return r


def energy_momentum(
    nl: Nonlinearity, c: float, xi_c: float, rtol: float = 1e-10
) -> tuple[float, float]:
    """(E, p) of the wave from the xi-integrals with xi = xi_c sin^2(theta).

    With -N_c = xi^2 (xi_c - xi) R(xi) the integrands become
        E: 4 xi_c^{3/2} sin^3 G(xi) / sqrt(R)
        p: c xi_c^{3/2} sin^3 / ((1 - xi) sqrt(R))
    on [0, pi/2]. At c = 0 the untwisted momentum pi/2 is returned.
    """
    P = nl.P_xi(c)
    R = _deflate(P, xi_c)
    G = nl.G_xi
    sq = math.sqrt(xi_c)
    pref = xi_c * sq

    # Near a root jump P has an almost-double zero at an interior critical
    # point xm, where R is a tiny difference of O(1) monomial sums. There P is
    # evaluated in its Taylor basis about xm, so the small constant term is
    # fixed once and the integrand stays smooth at the 1e-16 level.
    # xi - xm is formed as xi_c sin(th - th_m) sin(th + th_m) to avoid cancellation.
    cuts = [math.asin(math.sqrt(x / xi_c)) for x in _critical_points(nl.coeffs) if 0.0 < x < xi_c]
    shifted = []
    for tm in cuts:
        x = xi_c * math.sin(tm) ** 2
        shifted.append((tm, x, npoly.Polynomial(P)(npoly.Polynomial([x, 1.0])).coef))

    def rvals(th):
        s = np.sin(th)
        xi = xi_c * s * s
        r = npoly.polyval(xi, R)
        for tm, x, Ps in shifted:
            near = np.abs(xi - x) < 0.5 * (xi_c - x)
            if np.any(near):
                t = xi_c * np.sin(th[near] - tm) * np.sin(th[near] + tm)
                r[near] = npoly.polyval(t, Ps) / (xi[near] - xi_c)
        if np.any(r <= 0.0):
            raise DomainError(f"N_c >= 0 inside (0, xi_c) at c={c}")
        return s, xi, r

    def e_int(th):
        s, xi, r = rvals(th)
        return 4.0 * pref * s**3 * npoly.polyval(xi, G) / np.sqrt(r)

    # near a root jump R has an almost-double zero at a critical point of P;
    # splitting there keeps the adaptive rule from chasing the peak blindly
    edges = [0.0] + cuts + [0.5 * math.pi]

    def integrate(fn):
        return sum(adaptive_gauss_legendre(fn, a, b, rtol=rtol)[0] for a, b in zip(edges[:-1], edges[1:]))

    E = integrate(e_int)
    if c == 0.0:
        return E, 0.5 * math.pi

    one_m = 1.0 - xi_c

    def p_int(th):
        s, xi, r = rvals(th)
        co = np.cos(th)
        return c * pref * s**3 / ((one_m + xi_c * co * co) * np.sqrt(r))

    return E, integrate(p_int)


def wave_point(nl: Nonlinearity, c: float, rtol: float = 1e-10) -> WavePoint:
    roots = upward_roots(nl, c)
    xi = find_xi_c(nl, c)
    E, p = energy_momentum(nl, c, xi, rtol=rtol)
    P = nl.P_xi(c)
    dN = xi * xi * float(npoly.polyval(xi, npoly.polyder(P)))
    return WavePoint(c, xi, E, p, dN, tuple(roots), untwisted=(c == 0.0))


# ---------------------------------------------------------------- profiles


@dataclass(frozen=True)
class SolitonProfile:
    xs: np.ndarray
    eta: np.ndarray
    phi: np.ndarray
    v: np.ndarray
    c: float
    xi_c: float
    dv: np.ndarray
    nl: Nonlinearity
    dense: object = field(default=None, repr=False, compare=False)

    def evaluate(self, x) -> tuple[np.ndarray, np.ndarray]:
        """(v, v') at arbitrary points from the dense ODE solution.

        Beyond the integrated range theta continues with its exponential
        tail, which is accurate far below the decay threshold.
        """
        if self.dense is None:
            raise ValueError("profile has no dense solution")
        sol, rhs, x_end = self.dense
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        inside = np.minimum(ax, x_end)
        y = sol(inside.ravel()).reshape((2,) + x.shape)
        logth, ph = y[0], y[1]
        far = ax > x_end
        if np.any(far):
            d_end = rhs(x_end, sol(x_end))
            logth = np.where(far, logth + d_end[0] * (ax - x_end), logth)
            ph = np.where(far, ph + d_end[1] * (1.0 - np.exp(2.0 * d_end[0] * (ax - x_end))) / (-2.0 * d_end[0]), ph)
        v, dv, _, _ = _assemble(self.nl, self.c, self.xi_c, np.exp(logth), ph, x)
        return v, dv

    @property
    def rho(self) -> np.ndarray:
        return np.sqrt(1.0 - self.eta)

    @property
    def dphi(self) -> np.ndarray:
        return 0.5 * self.c * self.eta / (1.0 - self.eta) if self.c > 0 else np.zeros_like(self.eta)

    def _half_line(self, density) -> float:
        # integrands are even; the dense solution resolves the narrow core of
        # near-black waves that the sampling grid may not
        if self.dense is None:
            return float(np.trapezoid(density(self.xs, self.eta, self.dv), self.xs))
        sol, _, x_end = self.dense

        def f(x):
            y = sol(x)
            _, dv, eta, _ = _assemble(self.nl, self.c, self.xi_c, np.exp(y[0]), y[1], x)
            return density(x, eta, dv)

        # one panel set per ODE step: the interpolant is smooth inside a step
        # but only C^0-accurate across steps, which stalls global refinement
        edges = np.unique(np.clip(np.asarray(sol.ts), 0.0, x_end))
        # tail panels are tiny and noisy relative to themselves; judge them
        # against the size of the whole integral
        rough = abs(float(np.trapezoid(density(self.xs, self.eta, self.dv), self.xs)))
        atol = 1e-14 * rough / edges.size
        total = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            val, _ = adaptive_gauss_legendre(f, float(a), float(b), rtol=1e-13, atol=atol)
            total += val
        return 2.0 * total

    def energy(self) -> float:
        nl = self.nl
        return self._half_line(lambda x, eta, dv: 0.5 * np.abs(dv) ** 2 + 0.5 * eval_F(nl, 1.0 - eta))

    def momentum(self) -> float:
        c = self.c
        return self._half_line(lambda x, eta, dv: 0.25 * c * eta * eta / (1.0 - eta))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "eta", "phi", "re_v", "im_v"])
        for row in zip(self.xs, self.eta, self.phi, self.v.real, self.v.imag):
            w.writerow([repr(float(a)) for a in row])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "c": self.c,
            "xi_c": self.xi_c,
            "nl": self.nl.to_dict(),
            "x_max": float(self.xs[-1]),
            "n": int(self.xs.size),
            "E": self.energy(),
            "p": self.momentum() if self.c > 0 else 0.5 * math.pi,
        }


def default_x_max(nl: Nonlinearity, c: float, xi_c: float) -> float:
    kappa = math.sqrt(_c_s(nl) ** 2 - c * c)
    core = 8.0 / _c_s(nl)
    return core + math.log(xi_c * 1e12) / kappa


def _theta_rhs(nl: Nonlinearity, c: float, xi_c: float):
    R = _deflate(nl.P_xi(c), xi_c)
    sq = math.sqrt(xi_c)
    one_m = 1.0 - xi_c

    def rhs(_x, y):
        th = math.exp(y[0])
        s = math.sin(th)
        xi = xi_c * s * s
        r = max(float(npoly.polyval(xi, R)), 0.0)
        sinc = s / th
        dlog = -0.5 * sq * sinc * math.sqrt(r)
        co = math.cos(th)
        dphi = 0.5 * c * xi / (one_m + xi_c * co * co)
        return [dlog, dphi]

    return rhs, R


def reconstruct_profile(
    nl: Nonlinearity,
    c: float,
    xi_c: float,
    x_max: float | None = None,
    n: int = 4001,
) -> SolitonProfile:
    """Sample v_c on a symmetric uniform grid of [-x_max, x_max].

    eta is obtained through theta with eta = xi_c sin^2(theta), which turns
    (eta')^2 = -N_c(eta) into the regular first-order equation
        theta' = -sqrt(xi_c) sin(theta) sqrt(R(xi_c sin^2 theta)) / 2,
    integrated in log(theta) from theta = pi/2 at x = 0 together with the
    phase equation phi' = c eta / (2 (1 - eta)).
    """
    if c > 0.0 and (1.0 - xi_c) <= 1e-13:
        raise PhaseSingularity(f"1 - xi_c = {1.0 - xi_c:.3e} underflows at c={c}")
    auto = x_max is None
    if auto:
        x_max = default_x_max(nl, c, xi_c)
    xs = np.linspace(-x_max, x_max, n)
    xpos = np.unique(np.abs(xs))
    rhs, R = _theta_rhs(nl, c, xi_c)
    sol = solve_ivp(
        rhs,
        (0.0, float(xpos[-1])),
        [math.log(0.5 * math.pi), 0.0],
        method="DOP853",
        t_eval=xpos,
        dense_output=True,
        rtol=1e-12,
        atol=1e-14,
    )
    if not sol.success:
        raise GnlsError(f"profile integration failed: {sol.message}")
    th = np.exp(sol.y[0])
    if xi_c * math.sin(th[-1]) ** 2 >= DECAY_THRESHOLD:
        if auto:
            return reconstruct_profile(nl, c, xi_c, 2.0 * x_max, 2 * n - 1)
        raise DecayError(f"eta(x_max)={xi_c * math.sin(th[-1]) ** 2:.3e} >= {DECAY_THRESHOLD}")
    idx = np.searchsorted(xpos, np.abs(xs))
    v, dv, eta, phi = _assemble(nl, c, xi_c, th[idx], sol.y[1][idx], xs)
    dense = (sol.sol, rhs, float(xpos[-1]))
    return SolitonProfile(xs, eta, phi, v, c, xi_c, dv, nl, dense)


def _assemble(nl, c, xi_c, th, ph, xs):
    """Build v, v', eta, phi from theta(|x|) and phi(|x|) sampled at xs."""
    R = _deflate(nl.P_xi(c), xi_c)
    s, co = np.sin(th), np.cos(th)
    eta = xi_c * s * s
    r = np.clip(npoly.polyval(eta, R), 0.0, None)
    dth = -0.5 * math.sqrt(xi_c) * s * np.sqrt(r)
    neg = xs < 0
    if c == 0.0:
        v = (np.sign(xs) * co).astype(complex)
        dv = (-s * dth).astype(complex)
        phi = np.zeros_like(eta)
    else:
        one_m = (1.0 - xi_c) + xi_c * co * co
        rho = np.sqrt(one_m)
        deta = 2.0 * xi_c * s * co * dth
        drho = -deta / (2.0 * rho)
        dphi = 0.5 * c * eta / one_m
        e = np.exp(1j * ph)
        v = rho * e
        dv = (drho + 1j * rho * dphi) * e
        v = np.where(neg, np.conj(v), v)
        dv = np.where(neg, -np.conj(dv), dv)
        phi = np.where(neg, -ph, ph)
    return v, dv, eta, phi



# ---------------------------------------------------------------- branches


@dataclass
class Branch:
    nl: Nonlinearity
    points: list[WavePoint]
    dp_dc: np.ndarray
    dE_dc: np.ndarray
    gaps: list[tuple[float, float]]
    failures: list[tuple[float, str]] = field(default_factory=list)
    segments: list[list[int]] = field(default_factory=list)
    critical: list[float] = field(default_factory=list)

    @property
    def c(self) -> np.ndarray:
        return np.array([pt.c for pt in self.points])

    @property
    def E(self) -> np.ndarray:
        return np.array([pt.E for pt in self.points])

    @property
    def p(self) -> np.ndarray:
        return np.array([pt.p for pt in self.points])

    @property
    def xi(self) -> np.ndarray:
        return np.array([pt.xi_c for pt in self.points])

    def hamilton_residual(self) -> np.ndarray:
        return np.abs(self.dE_dc - self.c * self.dp_dc) / (1.0 + np.abs(self.dp_dc))

    def interior(self) -> np.ndarray:
        """Indices with a centered stencil (not a segment end)."""
        out = []
        for seg in self.segments:
            out.extend(seg[1:-1])
        return np.array(out, dtype=int)

    def dp_sign_changes(self, across_gaps: bool = True) -> list[float]:
        """Speeds where dp/dc changes sign (cusps).

        Inside a segment the zero is located by linear interpolation; a sign
        change between the last point before a gap and the first after it is
        placed at the gap midpoint.
        """
        out = []
        prev = None
        for seg in self.segments:
            d = self.dp_dc[seg]
            ok = np.isfinite(d)
            if prev is not None and across_gaps and ok.any():
                first = d[ok][0]
                if np.sign(prev[1]) * np.sign(first) < 0:
                    out.append(0.5 * (prev[0] + self.points[seg[int(np.argmax(ok))]].c))
            for i in range(len(seg) - 1):
                if d[i] * d[i + 1] < 0:
                    c0, c1 = self.points[seg[i]].c, self.points[seg[i + 1]].c
                    out.append(c0 - d[i] * (c1 - c0) / (d[i + 1] - d[i]))
            if ok.any():
                j = seg[int(np.flatnonzero(ok)[-1])]
                prev = (self.points[j].c, self.dp_dc[j])
        return out

    def flags(self, i: int) -> list[str]:
        pt = self.points[i]
        fl = []
        if pt.untwisted:
            fl.append("untwisted")
        if not pt.untwisted and self.dp_dc[i] >= 0.0:
            fl.append("gss_violation")
        if len(pt.roots) > 1:
            fl.append("multiroot")
        for seg in self.segments:
            if len(seg) > 1 and i in (seg[0], seg[-1]):
                fl.append("edge")
        return fl

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["c", "xi_c", "E", "p", "dE_dc", "dp_dc", "flags"])
        for i, pt in enumerate(self.points):
            w.writerow(
                [repr(float(v)) for v in (pt.c, pt.xi_c, pt.E, pt.p, self.dE_dc[i], self.dp_dc[i])]
                + [";".join(self.flags(i))]
            )
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "nl": self.nl.to_dict(),
            "n_points": len(self.points),
            "gaps": [list(g) for g in self.gaps],
            "failures": [[c, why] for c, why in self.failures],
            "critical_speeds": self.critical,
            "dp_sign_changes": self.dp_sign_changes(),
            "points": [
                {
                    "c": pt.c,
                    "xi_c": pt.xi_c,
                    "E": pt.E,
                    "p": pt.p,
                    "dNdxi_at_root": pt.dNdxi_at_root,
                    "roots": list(pt.roots),
                    "dE_dc": float(self.dE_dc[i]),
                    "dp_dc": float(self.dp_dc[i]),
                    "flags": self.flags(i),
                }
                for i, pt in enumerate(self.points)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def speed_grid(
    nl: Nonlinearity,
    n: int = 200,
    c_min: float = 0.0,
    c_max: float | None = None,
    n_transonic: int = 60,
    refine_jumps: bool = True,
) -> np.ndarray:
    """Uniform speeds plus refinement toward c_s and toward root jumps.

    Near c_s the extra speeds are c = sqrt(c_s^2 - eps^2) with eps geometric,
    which resolves small momenta; near a jump speed c_j they are c_j +- 10^-k.
    """
    c_s = _c_s(nl)
    if c_max is None:
        c_max = c_s * (1.0 - 1e-3)
    parts = [np.linspace(c_min, c_max, n)]
    if n_transonic:
        eps = c_s * np.geomspace(0.02, 0.5, n_transonic)
        parts.append(np.sqrt(c_s * c_s - eps * eps))
    if refine_jumps:
        offs = 10.0 ** -np.arange(2.0, 12.5, 0.5)
        for cj in critical_speeds(nl):
            parts.append(cj + offs)
            parts.append(cj - offs)
    g = np.unique(np.concatenate(parts))
    g = g[(g >= c_min) & (g <= c_max)]
    keep = np.concatenate([[True], np.diff(g) > 1e-14])
    return g[keep]


def _threads() -> int:
    env = os.environ.get("GNLS_THREADS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def _safe_point(nl: Nonlinearity, c: float, rtol: float):
    try:
        return wave_point(nl, c, rtol=rtol)
    except GnlsError as exc:
        return f"{type(exc).__name__}: {exc}"


def _fd(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    if y.size == 1:
        return np.array([np.nan])
    return np.gradient(y, x, edge_order=2 if y.size >= 3 else 1)


def scan_branch(
    nl: Nonlinearity,
    c_grid,
    rtol: float = 1e-10,
    workers: int | None = None,
) -> Branch:
    """Compute WavePoints over a strictly increasing grid of [0, c_s)."""
    grid = np.asarray(c_grid, dtype=float)
    c_s = _c_s(nl)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("c_grid must be a nonempty 1-D sequence")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("c_grid must be strictly increasing")
    if grid[0] < 0 or grid[-1] >= c_s:
        raise ValueError(f"c_grid must lie in [0, c_s={c_s})")

    n_workers = workers or _threads()
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as ex:
            results = list(ex.map(lambda c: _safe_point(nl, float(c), rtol), grid))
    else:
        results = [_safe_point(nl, float(c), rtol) for c in grid]

    crit = critical_speeds(nl)
    points: list[WavePoint] = []
    failures: list[tuple[float, str]] = []
    segments: list[list[int]] = []
    gaps: list[tuple[float, float]] = []
    current: list[int] = []
    last_ok: float | None = None
    pending_fail = False
    for c, res in zip(grid, results):
        c = float(c)
        if isinstance(res, str):
            failures.append((c, res))
            pending_fail = True
            continue
        jump = last_ok is not None and any(last_ok < cc <= c for cc in crit)
        if pending_fail or jump:
            if current:
                segments.append(current)
            current = []
            lo = last_ok if last_ok is not None else float(grid[0])
            gaps.append((lo, c))
        pending_fail = False
        current.append(len(points))
        points.append(res)
        last_ok = c
    if current:
        segments.append(current)
    if pending_fail and last_ok is not None:
        gaps.append((last_ok, float(grid[-1])))

    dp = np.full(len(points), np.nan)
    dE = np.full(len(points), np.nan)
    cs = np.array([pt.c for pt in points])
    ps = np.array([pt.p for pt in points])
    Es = np.array([pt.E for pt in points])
    for seg in segments:
        dp[seg] = _fd(ps[seg], cs[seg])
        dE[seg] = _fd(Es[seg], cs[seg])
    return Branch(nl, points, dp, dE, gaps, failures, segments, crit)


# ---------------------------------------------------------------- audit


@dataclass(frozen=True)
class AuditReport:
    c: float
    pointwise_margin: float | None
    momentum_margin: float
    eta_margin: float
    E: float
    p: float
    eps: float
    lam: float

    @property
    def ok(self) -> bool:
        pm = self.pointwise_margin
        return (pm is None or pm >= 0.0) and self.momentum_margin >= 0.0 and self.eta_margin >= 0.0

    def to_dict(self) -> dict:
        return {
            "c": self.c,
            "pointwise_margin": self.pointwise_margin,
            "momentum_margin": self.momentum_margin,
            "eta_margin": self.eta_margin,
            "E": self.E,
            "p": self.p,
            "eps": self.eps,
            "lambda": self.lam,
            "ok": self.ok,
        }


def appendix_a_audit(profile: SolitonProfile, nl: Nonlinearity, tol: float = 1e-12) -> AuditReport:
    """Check the a-priori bounds on a sampled profile.

    (a) sqrt(F(rho^2)) |phi'| <= e(v) / rho pointwise (c > 0 only),
    (b) |p| <= E / sqrt(4 lambda (1 - eps)), eps = max eta,
    (c) ||eta||_inf^2 <= E (64 / lambda + 16 E / sqrt(lambda)).
    Margins are RHS - LHS (+ tol); nonnegative means the bound holds.
    """
    lam = structural_constants(nl).lam
    eta = profile.eta
    rho2 = 1.0 - eta
    Fv = np.clip(eval_F(nl, rho2), 0.0, None)
    e = 0.5 * np.abs(profile.dv) ** 2 + 0.5 * Fv
    E = float(np.trapezoid(e, profile.xs))
    eps = float(np.max(eta))
    if profile.c > 0.0:
        rho = np.sqrt(rho2)
        dphi = profile.dphi
        pw = float(np.min(e / rho - np.sqrt(Fv) * np.abs(dphi))) + tol
        p = profile.momentum()
        bound_b = E / math.sqrt(4.0 * lam * (1.0 - eps)) if eps < 1.0 else math.inf
        mom = bound_b - abs(p) + tol
    else:
        pw = None
        p = 0.5 * math.pi
        mom = math.inf  # eps = 1: the bound is void
    eta_m = E * (64.0 / lam + 16.0 * E / math.sqrt(lam)) - eps * eps + tol
    return AuditReport(profile.c, pw, mom, eta_m, E, p, eps, lam)
