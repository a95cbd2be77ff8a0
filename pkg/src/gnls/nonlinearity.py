"""Polynomial nonlinearities f(rho) = sum_j a_j (1 - rho)^j.

Everything is expressed in the variable u = 1 - rho, in which f, its
primitive F(rho) = int_rho^1 f and the speed polynomial N_c all have exact
coefficient representations.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import InvalidNonlinearity

__all__ = [
    "Nonlinearity",
    "StructuralConstants",
    "HypothesisReport",
    "eval_f",
    "eval_F",
    "structural_constants",
    "check_hypotheses",
    "remark18_bound",
    "PRESETS",
    "preset",
]


@dataclass(frozen=True)
class Nonlinearity:
    """f(rho) = sum_{j>=1} coeffs[j-1] * (1 - rho)**j, so f(1) = 0 always."""

    coeffs: tuple[float, ...]

    def __post_init__(self) -> None:
        cs = tuple(float(a) for a in self.coeffs)
        if not cs:
            raise InvalidNonlinearity("coeffs must be nonempty")
        if not all(math.isfinite(a) for a in cs):
            raise InvalidNonlinearity("coeffs must be finite")
        if cs[0] <= 0.0:
            raise InvalidNonlinearity(f"a_1 must be positive (f'(1) < 0), got {cs[0]}")
        object.__setattr__(self, "coeffs", cs)

    @property
    def degree(self) -> int:
        return len(self.coeffs)

    @property
    def f_u(self) -> np.ndarray:
        """Coefficients of f as a polynomial in u, lowest degree first."""
        return np.concatenate([[0.0], self.coeffs])

    @property
    def F_u(self) -> np.ndarray:
        """Coefficients of F as a polynomial in u (lowest term is u^2)."""
        j = np.arange(1, self.degree + 1)
        return np.concatenate([[0.0, 0.0], np.asarray(self.coeffs) / (j + 1)])

    @property
    def G_xi(self) -> np.ndarray:
        """G(xi) = F(1 - xi) / xi^2 as coefficients in xi."""
        j = np.arange(1, self.degree + 1)
        return np.asarray(self.coeffs) / (j + 1)

    def P_xi(self, c: float) -> np.ndarray:
        """P(xi) = N_c(xi) / xi^2 = c^2 - 4 (1 - xi) G(xi)."""
        q = npoly.polymul([1.0, -1.0], self.G_xi) * -4.0
        q[0] += c * c
        return q

    def to_dict(self) -> dict:
        return {"coeffs": list(self.coeffs)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Nonlinearity":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidNonlinearity(f"malformed JSON: {exc}") from exc
        if not isinstance(obj, dict) or "coeffs" not in obj:
            raise InvalidNonlinearity('expected an object {"coeffs": [...]}')
        coeffs = obj["coeffs"]
        if not isinstance(coeffs, list) or not all(
            isinstance(a, (int, float)) and not isinstance(a, bool) for a in coeffs
        ):
            raise InvalidNonlinearity("coeffs must be a list of numbers")
        return cls(tuple(coeffs))

    @classmethod
    def load(cls, path: str | Path) -> "Nonlinearity":
        return cls.from_json(Path(path).read_text())


PRESETS: dict[str, tuple[float, ...]] = {
    "gp": (1.0,),
    "fig2": (1.0,) + (0.0,) * 57 + (10.0,),
    "fig3": (1.0,) + (0.0,) * 17 + (120.0,),
    "fig4": (4.0, 0.0, 36.0),
}


def preset(name: str) -> Nonlinearity:
    return Nonlinearity(PRESETS[name])


def eval_f(nl: Nonlinearity, rho):
    """f(rho), Horner in u = 1 - rho."""
    return npoly.polyval(1.0 - np.asarray(rho, dtype=float), nl.f_u)


def eval_F(nl: Nonlinearity, rho):
    """F(rho) = int_rho^1 f(r) dr, exact antiderivative."""
    return npoly.polyval(1.0 - np.asarray(rho, dtype=float), nl.F_u)


class StructuralConstants(NamedTuple):
    c_s: float
    lam: float
    k: float
    Gamma: float


def _h1_defect_u(nl: Nonlinearity) -> np.ndarray:
    # F - (c_s^2/4) u^2 with the u^2 term cancelled symbolically
    d = nl.F_u.copy()
    d[2] = 0.0
    return d


def structural_constants(nl: Nonlinearity, report: "HypothesisReport | None" = None) -> StructuralConstants:
    """(c_s, lambda, k, Gamma) from the coefficients.

    lambda is c_s^2/4 when (H1) is certified and the largest sampled
    constant with lambda u^2 <= F otherwise.
    """
    a1 = nl.coeffs[0]
    if a1 <= 0:
        raise InvalidNonlinearity("a_1 must be positive")
    a2 = nl.coeffs[1] if nl.degree >= 2 else 0.0
    c_s = math.sqrt(2.0 * a1)
    k = 4.0 * a2 - 6.0 * a1
    # c_s^2 = 2 a_1 used directly to avoid a sqrt round trip
    Gamma = -k / a1
    if report is None:
        report = check_hypotheses(nl)
    lam = 0.5 * a1 if report.h1_holds else report.lambda_sampled
    return StructuralConstants(c_s, lam, k, Gamma)


def remark18_bound(p: int) -> float:
    """Upper bound on a for f = 1 - rho + a (1 - rho)^(2p-1) to satisfy (H1)."""
    return p * ((2 * p - 1) / (2 * p - 3)) ** (2 * p - 3)


def _remark18(nl: Nonlinearity) -> bool | None:
    cs = nl.coeffs
    d = len(cs)
    if d < 3 or d % 2 == 0 or cs[0] != 1.0 or any(a != 0.0 for a in cs[1:-1]):
        return None
    p = (d + 1) // 2
    return cs[-1] < remark18_bound(p)


@dataclass(frozen=True)
class HypothesisReport:
    h1_holds: bool
    h1_margin: float
    h1_argmin_rho: float
    h1_tail_ok: bool
    h2_holds: bool
    h2_exponent: int
    h2_constant: float
    h3_holds: bool
    h3_value: float
    remark18_holds: bool | None
    lambda_sampled: float
    grid: dict = field(default_factory=dict)

    @property
    def all_hold(self) -> bool:
        return self.h1_holds and self.h2_holds and self.h3_holds

    def to_dict(self) -> dict:
        return asdict(self)


def check_hypotheses(nl: Nonlinearity, rho_max: float = 4.0, n_samples: int = 4001) -> HypothesisReport:
    """Certify (H1), (H2), (H3) on a sampling grid plus tail analysis."""
    if rho_max < 2.0:
        raise ValueError("rho_max must be >= 2")
    if n_samples < 100:
        raise ValueError("n_samples must be >= 100")

    defect = _h1_defect_u(nl)
    nz = np.flatnonzero(defect)
    if nz.size == 0:
        tail_ok, rho_ext = True, rho_max
    else:
        top = nz[-1]
        # top power of u is odd -> degree of a_j is even -> u -> -inf sign is -a_top
        tail_ok = top % 2 == 0 and defect[top] > 0
        # Cauchy bound on the nonzero roots of the defect polynomial
        low = defect[3:top]
        cauchy = 1.0 + (np.max(np.abs(low)) / abs(defect[top]) if low.size else 0.0)
        rho_ext = max(rho_max, 1.0 + cauchy)

    h = rho_max / (n_samples - 1)
    rho = np.linspace(0.0, rho_max, n_samples)
    if rho_ext > rho_max:
        extra = int(min(np.ceil((rho_ext - rho_max) / h), 100 * n_samples))
        rho = np.concatenate([rho, np.linspace(rho_max, rho_ext, extra + 1)[1:]])
    u = 1.0 - rho
    dvals = npoly.polyval(u, defect)
    i = int(np.argmin(dvals))
    margin = float(dvals[i])
    scale = max(1.0, float(np.sum(np.abs(nl.coeffs))))
    h1 = tail_ok and margin >= -1e-12 * scale

    Fv = npoly.polyval(u, nl.F_u)
    mask = np.abs(u) > 1e-6
    lam_sampled = float(np.min(Fv[mask] / u[mask] ** 2))

    j = np.arange(1, nl.degree + 1)
    h2_M = float(np.sum(np.abs(nl.coeffs) / (j + 1)))

    a1 = nl.coeffs[0]
    a2 = nl.coeffs[1] if nl.degree >= 2 else 0.0
    h3_value = 2.0 * a2 - 3.0 * a1

    return HypothesisReport(
        h1_holds=bool(h1),
        h1_margin=margin,
        h1_argmin_rho=float(rho[i]),
        h1_tail_ok=bool(tail_ok),
        h2_holds=True,
        h2_exponent=nl.degree + 1,
        h2_constant=h2_M,
        h3_holds=h3_value != 0.0,
        h3_value=h3_value,
        remark18_holds=_remark18(nl),
        lambda_sampled=lam_sampled,
        grid={
            "rho_max": rho_max,
            "n_samples": n_samples,
            "rho_extended_to": float(rho_ext),
            "n_total": int(rho.size),
        },
    )
