"""Hypothesis checkers for variable coefficients.

With ``c_j = a_j + i b_j`` and ``p_j = alpha_j + i beta_j`` the imaginary part
of ``M_j = c_j p_j`` is ``a_j beta_j + b_j alpha_j``.  Every asymptotic
statement here is a window trend read off the last dyadic shells.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InsufficientData
from .fourier import t_grid
from .model import FreqWindow, SymbolSpec, SystemSpec, coeff_primitive, symbol_values, window_points

BOUNDED = "BOUNDED_TREND"
UNBOUNDED = "UNBOUNDED_TREND"
LOG = "LOG_TREND"
SUPERLOG = "SUPERLOG_TREND"
POLY_BOUNDED = "POLY_BOUNDED_TREND"

CHANGES_SIGN = "CHANGES_SIGN"
NONNEGATIVE = "NONNEGATIVE"
NONPOSITIVE = "NONPOSITIVE"

LOWER = "LOWER"  # inf_t Im M >= -Theta
UPPER = "UPPER"  # Im M <= Theta


def _shell_of_norm(norms):
    return np.floor(np.log2(np.maximum(norms, 1))).astype(int)


def _shell_max(values, norms, xi_max, min_norm=1):
    """``{k: max over shell k}`` over complete dyadic shells with ``||xi|| >= min_norm``.

    A shell ``[2^k, 2^(k+1))`` counts only when the window covers all of it;
    a partial outer shell would compare a handful of points with a full shell.
    """
    keep = norms >= min_norm
    ks = _shell_of_norm(norms[keep])
    out = {}
    for k, v in zip(ks.tolist(), values[keep].tolist()):
        if 2 ** (k + 1) - 1 > xi_max:
            continue
        if k not in out or v > out[k]:
            out[k] = v
    return dict(sorted(out.items()))


def _nonincreasing_last_two(env, slack=0.0):
    ks = list(env)
    if len(ks) < 2:
        return False
    a, b = env[ks[-2]], env[ks[-1]]
    return b <= a + slack + 1e-12 * max(1.0, abs(a))


@dataclass(frozen=True)
class ImMField:
    """``Im M_j(t, xi) = a_j(t) beta_j(xi) + b_j(t) alpha_j(xi)`` on the t-grid."""

    j: int
    sys: SystemSpec
    grid_points: Optional[int] = None

    @property
    def t(self):
        return t_grid(self.grid_points or self.sys.tolerances.grid_points)

    def values(self, xis) -> np.ndarray:
        c = self.sys.coeffs[self.j]
        p = symbol_values(self.sys.symbols[self.j], xis)
        t = self.t
        return np.outer(p.imag, c.real_values(t)) + np.outer(p.real, c.imag_values(t))


@dataclass(frozen=True)
class HormanderReport:
    theta_hat: float
    trend: str
    variant: str
    lower: tuple  # (theta, trend)
    upper: tuple

    def to_dict(self):
        return {
            "thetaHat": self.theta_hat,
            "trend": self.trend,
            "variant": self.variant,
            "lower": {"theta": self.lower[0], "trend": self.lower[1]},
            "upper": {"theta": self.upper[0], "trend": self.upper[1]},
        }


def hormander_check(field: ImMField, window: Optional[FreqWindow] = None) -> HormanderReport:
    """Both one-sided bounds on ``Im M_j``; the lower one is preferred when both hold."""
    window = window or field.sys.window
    pts = window_points(field.sys.N, window.xi_max)
    vals = field.values(pts)
    norms = np.abs(pts).max(axis=1)
    lower = np.maximum(-vals.min(axis=1), 0.0)
    upper = np.maximum(vals.max(axis=1), 0.0)
    tol = field.sys.tolerances.quad_tol
    res = {}
    for name, theta in ((LOWER, lower), (UPPER, upper)):
        env = _shell_max(theta, norms, window.xi_max)
        trend = BOUNDED if _nonincreasing_last_two(env, tol) else UNBOUNDED
        res[name] = (float(theta.max()), trend)
    if res[LOWER][1] == BOUNDED or res[UPPER][1] != BOUNDED:
        variant = LOWER
    else:
        variant = UPPER
    return HormanderReport(res[variant][0], res[variant][1], variant, res[LOWER], res[UPPER])


@dataclass(frozen=True)
class GrowthClass:
    target: str
    kappa_hat: float
    classification: str
    residual: float
    shell_ratios: tuple = ()

    def to_dict(self):
        return {"target": self.target, "kappaHat": self.kappa_hat, "classification": self.classification,
                "residual": self.residual}


def growth_classify(s: SymbolSpec, target: str, window: FreqWindow, N: int = 1) -> GrowthClass:
    """Compare ``|phi(xi)|`` with ``log ||xi||`` shell by shell (``phi`` = real/imag part or modulus)."""
    if window.dyadic_levels < 3:
        raise InsufficientData("growth classification needs dyadicLevels >= 3")
    pts = window_points(N, window.xi_max)
    norms = np.abs(pts).max(axis=1)
    keep = norms >= 2
    p = symbol_values(s, pts[keep])
    phi = {"real": p.real, "imag": p.imag, "modulus": np.abs(p)}[target]
    ratio = np.abs(phi) / np.log(norms[keep])
    env = _shell_max(ratio, norms[keep], window.xi_max, 2)
    if len(env) < 2:
        raise InsufficientData(f"{len(env)} dyadic shell(s) with ||xi|| >= 2")
    ks = list(env)
    last, prev = env[ks[-1]], env[ks[-2]]
    cls = LOG if _nonincreasing_last_two(env) else SUPERLOG
    return GrowthClass(target, float(last), cls, float(abs(last - prev)), tuple(env.items()))


def sign_class(values, tol) -> str:
    if values.min() >= -tol:
        return NONNEGATIVE
    if values.max() <= tol:
        return NONPOSITIVE
    return CHANGES_SIGN


@dataclass(frozen=True)
class HLMembership:
    in_h: bool
    theta_hat: float
    in_l: bool
    clause: Optional[str]
    sign_changes: dict
    hormander: HormanderReport
    growth: dict

    def to_dict(self):
        return {
            "inH": self.in_h,
            "inL": self.in_l,
            "clause": self.clause,
            "ThetaHat": self.theta_hat,
            "kappaHat": self.growth["modulus"].kappa_hat,
            "hormanderVariant": self.hormander.variant,
            "signChanges": dict(self.sign_changes),
            "growth": {k: v.classification for k, v in self.growth.items()},
        }


def l_clause(growth: dict, signs: dict) -> Optional[str]:
    """Which logarithmic clause (i)/(ii)/(iii) holds, from growth classes and sign classes."""
    re, im, mod = growth["real"].classification, growth["imag"].classification, growth["modulus"].classification
    if mod == LOG:
        return "i"
    if re == LOG and im == SUPERLOG and signs["a"] != CHANGES_SIGN:
        return "ii"
    if re == SUPERLOG and im == LOG and signs["b"] != CHANGES_SIGN:
        return "iii"
    return None


def hl_membership(j: int, sys: SystemSpec, window: Optional[FreqWindow] = None) -> HLMembership:
    """Membership of operator ``j`` in the Hormander set and the logarithmic set."""
    window = window or sys.window
    if window.dyadic_levels < 3:
        window = FreqWindow(window.xi_max, window.tau_margin, 3)
    horm = hormander_check(ImMField(j, sys), window)
    growth = {tg: growth_classify(sys.symbols[j], tg, window, sys.N) for tg in ("real", "imag", "modulus")}
    fine = t_grid(4 * sys.tolerances.grid_points)
    c = sys.coeffs[j]
    tol = sys.tolerances.quad_tol
    signs = {"a": sign_class(c.real_values(fine), tol), "b": sign_class(c.imag_values(fine), tol)}
    clause = l_clause(growth, signs)
    return HLMembership(horm.trend == BOUNDED, horm.theta_hat, clause is not None, clause, signs, horm, growth)


@dataclass(frozen=True)
class ReductionBound:
    trend: str
    fitted_kappa: float
    two_sided_trend: str
    two_sided_kappa: float
    shell_exponents: tuple = ()

    def __iter__(self):
        return iter((self.trend, self.fitted_kappa))

    def to_dict(self):
        return {"trend": self.trend, "fittedKappa": self.fitted_kappa,
                "twoSidedTrend": self.two_sided_trend, "twoSidedKappa": self.two_sided_kappa}


def reduction_exponents(j: int, sys: SystemSpec, pts) -> tuple:
    """Per frequency, ``max_t (beta A + alpha B)`` and ``max_t |beta A + alpha B|``."""
    A, B = coeff_primitive(sys.coeffs[j])
    t = t_grid(sys.tolerances.grid_points)
    p = symbol_values(sys.symbols[j], pts)
    phase = np.outer(p.imag, A(t)) + np.outer(p.real, B(t))
    return phase.max(axis=1), np.abs(phase).max(axis=1)


def reduction_bound_check(j: int, sys: SystemSpec, window: Optional[FreqWindow] = None) -> ReductionBound:
    """Polynomial bound on ``sup_t exp(beta_j A_j + alpha_j B_j)``, read as a pointwise exponent."""
    window = window or sys.window
    pts = window_points(sys.N, window.xi_max)
    norms = np.abs(pts).max(axis=1)
    keep = norms >= 2
    one, two = reduction_exponents(j, sys, pts[keep])
    logs = np.log(norms[keep])
    tol = sys.tolerances.fit_tol
    out = []
    for vals in (one, two):
        env = _shell_max(np.maximum(vals, 0.0) / logs, norms[keep], window.xi_max, 2)
        ks = list(env)
        kappa = float(env[ks[-1]]) if ks else math.nan
        trend = POLY_BOUNDED if _nonincreasing_last_two(env, tol) else UNBOUNDED
        out.append((trend, kappa, tuple(env.items())))
    return ReductionBound(out[0][0], out[0][1], out[1][0], out[1][1], out[0][2])
