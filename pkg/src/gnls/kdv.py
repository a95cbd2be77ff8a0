"""Transonic (KdV) ansatz v_eps = (1 + eps^2 A(eps x)) exp(i eps phi(eps x)).

A(y) = 3/(2k) sech^2(y/2) is the KdV soliton and phi(y) = -(3 c_s / k)
tanh(y/2); the resulting energy and momentum have explicit expansions in eps.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import KdvDegenerate
from .nonlinearity import Nonlinearity, structural_constants

__all__ = [
    "KdvAnsatz",
    "KdvField",
    "KdvReport",
    "build_v_eps",
    "verify_expansions",
    "momentum_parameterization",
    "predicted_energy",
    "predicted_momentum",
    "k1_constant",
]


@dataclass(frozen=True)
class KdvAnsatz:
    k: float
    c_s: float
    fpp: float  # f''(1)
    fp: float  # f'(1)

    @classmethod
    def from_nl(cls, nl: Nonlinearity) -> "KdvAnsatz":
        sc = structural_constants(nl)
        if sc.k == 0.0:
            raise KdvDegenerate("k = 0: transonic limit is degenerate")
        a2 = nl.coeffs[1] if nl.degree >= 2 else 0.0
        return cls(sc.k, sc.c_s, 2.0 * a2, -nl.coeffs[0])

    def A(self, y):
        return 1.5 / self.k / np.cosh(0.5 * y) ** 2

    def dA(self, y):
        return -self.A(y) * np.tanh(0.5 * y)

    def phi(self, y):
        return -3.0 * self.c_s / self.k * np.tanh(0.5 * y)

    def dphi(self, y):
        return -1.5 * self.c_s / self.k / np.cosh(0.5 * y) ** 2


@dataclass(frozen=True)
class KdvField:
    x: np.ndarray
    v: np.ndarray
    eta: np.ndarray  # 1 - |v|^2, computed without cancellation
    drho: np.ndarray
    dtheta: np.ndarray  # derivative of the phase
    eps: float


def build_v_eps(
    nl: Nonlinearity, eps: float, x_max: float | None = None, n: int | None = None
) -> KdvField:
    ans = KdvAnsatz.from_nl(nl)
    eps_max = min(0.5, math.sqrt(abs(ans.k)))
    if not 0.0 < eps <= eps_max:
        raise ValueError(f"eps must lie in (0, {eps_max}]")
    if x_max is None:
        x_max = 40.0 / eps
    if eps * x_max < 30.0:
        raise ValueError("grid too short: need eps * x_max >= 30")
    if n is None:
        n = 2 * int(math.ceil(eps * x_max / 0.005)) + 1
    x = np.linspace(-x_max, x_max, n)
    y = eps * x
    A = ans.A(y)
    rho = 1.0 + eps**2 * A
    theta = eps * ans.phi(y)
    eta = -(2.0 * eps**2 * A + eps**4 * A * A)
    return KdvField(
        x=x,
        v=rho * np.exp(1j * theta),
        eta=eta,
        drho=eps**3 * ans.dA(y),
        dtheta=eps**2 * ans.dphi(y),
        eps=eps,
    )


def predicted_energy(nl: Nonlinearity, eps):
    a = KdvAnsatz.from_nl(nl)
    eps = np.asarray(eps, dtype=float)
    return (
        6.0 * a.c_s**2 / a.k**2 * eps**3
        - 18.0 / (5.0 * a.k**3) * (a.fpp + 5.0 * a.fp) * eps**5
    )


def predicted_momentum(nl: Nonlinearity, eps):
    return momentum_parameterization(nl, eps)[0]


def momentum_parameterization(nl: Nonlinearity, eps):
    """(q_eps, s_eps) with q = 6 c_s / k^2 (eps^3 + 3 eps^5 / (5k)) and s = k^2 q / (6 c_s)."""
    a = KdvAnsatz.from_nl(nl)
    eps = np.asarray(eps, dtype=float)
    s = eps**3 + 3.0 * eps**5 / (5.0 * a.k)
    q = 6.0 * a.c_s / a.k**2 * s
    if q.ndim == 0:
        return float(q), float(s)
    return q, s


def k1_constant(nl: Nonlinearity) -> float:
    a = KdvAnsatz.from_nl(nl)
    return 9.0 * (a.k**2) ** (2.0 / 3.0) / (5.0 * (6.0 * a.c_s) ** (5.0 / 3.0))


def _integrals(nl: Nonlinearity, fld: KdvField) -> tuple[float, float]:
    rho2 = 1.0 - fld.eta
    e = 0.5 * (fld.drho**2 + rho2 * fld.dtheta**2) + 0.5 * npoly.polyval(fld.eta, nl.F_u)
    E = np.trapezoid(e, fld.x)
    p = 0.5 * np.trapezoid(fld.eta * fld.dtheta, fld.x)
    return float(E), float(p)


@dataclass(frozen=True)
class KdvReport:
    eps: list[float]
    E_computed: list[float]
    E_predicted: list[float]
    E_residual: list[float]
    p_computed: list[float]
    p_predicted: list[float]
    p_residual: list[float]
    energy_slope: float
    q_eps: list[float]
    upper_bound_ratio: list[float]  # (E - c_s q + K1 q^{5/3}) / q^{7/3}
    K1: float
    p_tol: float = 1e-9
    slope_min: float = 6.5

    @property
    def momentum_ok(self) -> bool:
        return max(abs(r) for r in self.p_residual) < self.p_tol

    @property
    def slope_ok(self) -> bool:
        return self.energy_slope >= self.slope_min

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(momentum_ok=self.momentum_ok, slope_ok=self.slope_ok)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def verify_expansions(nl: Nonlinearity, eps_list) -> KdvReport:
    eps_list = [float(e) for e in eps_list]
    if len(eps_list) < 4:
        raise ValueError("need at least 4 eps values")
    if any(not 0.0 < e <= 0.3 for e in eps_list):
        raise ValueError("eps values must lie in (0, 0.3]")
    c_s = structural_constants(nl).c_s
    K1 = k1_constant(nl)
    Ec, pc = [], []
    for e in eps_list:
        E, p = _integrals(nl, build_v_eps(nl, e))
        Ec.append(E)
        pc.append(p)
    Ep = [float(v) for v in predicted_energy(nl, eps_list)]
    pp = [float(v) for v in predicted_momentum(nl, eps_list)]
    Er = [a - b for a, b in zip(Ec, Ep)]
    pr = [a - b for a, b in zip(pc, pp)]
    slope = float(np.polyfit(np.log(eps_list), np.log(np.abs(Er)), 1)[0])
    ratio = [
        (E - c_s * q + K1 * q ** (5.0 / 3.0)) / q ** (7.0 / 3.0) for E, q in zip(Ec, pp)
    ]
    return KdvReport(eps_list, Ec, Ep, Er, pc, pp, pr, slope, pp, ratio, K1)
