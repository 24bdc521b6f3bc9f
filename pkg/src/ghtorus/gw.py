"""Constant-coefficient diagnostics: lattice scans, resonance sets, homogeneous symbols.

For constant coefficients the symbol of ``L_j`` at ``(tau_j, xi)`` is
``tau_j + M_j(xi)`` with ``M_j = c_j p_j``.  Its modulus is minimised over
``tau_j`` by the nearest integer to ``-Re M_j``, so

    min_tau max_j |tau_j + M_j(xi)| = max_j sqrt(dist(Re M_j, Z)^2 + (Im M_j)^2)

and no lattice search is needed.  Rationals are handled with ``Fraction``
whenever every symbol and average is exact.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import mpmath
import numpy as np

from .diophantine import convergents_up_to, sda_witness_search, log_abs, SDA_SATISFIED, SDA_FAILED
from .errors import MixedOrders, NonConstantCoefficients, ValidationError
from .expr import Real
from .fourier import shell_exponents, super_polynomial_probe
from .model import (
    FreqWindow,
    Homogeneous,
    LogGrowth,
    ParityPiecewise,
    Polynomial,
    SystemSpec,
    symbol_values,
    window_points,
)

GW_HOLDS = "GW_HOLDS_TREND"
GW_FAILS = "GW_FAILS_TREND"
INCONCLUSIVE = "INCONCLUSIVE"

FINITE = "FINITE_TREND"
INFINITE = "INFINITE_TREND"

NONZERO_IMAG = "NONZERO_IMAG"
RATIONAL_REAL = "RATIONAL_REAL"
SDA_ANALYSIS = "SDA_ANALYSIS"

EXACT_POINT_LIMIT = 50_000
AUGMENT_Q_MAX = 10**150
NORM_NOTE = "sup-norm over (tau, xi); (C, M) depend on the norm, the trend does not"


@dataclass(frozen=True)
class GwRow:
    xi: tuple
    min_over_tau: float
    tau: tuple
    log_value: float  # log(min_over_tau); stays finite when the float underflows
    exact: bool = False

    @property
    def norm(self) -> int:
        return max(max((abs(v) for v in self.tau), default=0), max((abs(v) for v in self.xi), default=0))


@dataclass(frozen=True)
class GwScanReport:
    per_xi: tuple
    fitted_c: float
    fitted_m: float
    worst_sequence: tuple  # GwRow, increasing norm = fastest decay last
    verdict_trend: str
    path: str = "float"
    augmented: tuple = ()
    shell_exponents: tuple = ()
    note: str = NORM_NOTE

    @property
    def min_value(self) -> float:
        return min((r.min_over_tau for r in self.per_xi), default=math.nan)

    def bad_sequence(self):
        """Frequencies of the worst sequence with positive norm, in order."""
        return [r.xi for r in self.worst_sequence if any(r.xi)]

    def witness_candidates(self):
        """Every scanned or augmented frequency with ``min ||L_hat|| < 1``, by increasing norm."""
        xs = {r.xi for r in self.per_xi if any(r.xi) and r.log_value < 0}
        xs.update(self.augmented)
        xs.update(self.bad_sequence())
        return sorted(xs, key=lambda x: (max(abs(v) for v in x), x))

    def to_dict(self, rows=False):
        d = {
            "verdictTrend": self.verdict_trend,
            "fittedC": _js(self.fitted_c),
            "fittedM": _js(self.fitted_m),
            "path": self.path,
            "minValue": _js(self.min_value),
            "worstSequence": [
                {"tau": list(r.tau), "xi": [str(v) if abs(v) > 2**53 else v for v in r.xi],
                 "value": _js(r.min_over_tau), "logValue": _js(r.log_value)}
                for r in self.worst_sequence
            ],
            "augmentedCandidates": len(self.augmented),
            "note": self.note,
        }
        if rows:
            d["perXi"] = [[list(r.xi), _js(r.min_over_tau), list(r.tau)] for r in self.per_xi]
        return d


def _js(x):
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


# --- per-frequency minimisation ---------------------------------------------


def _dist_to_z(x):
    return abs(x - round(x))


def _exact_row(sys, xi):
    vals = []
    taus = []
    logs = []
    for j in range(sys.n):
        m = sys.m0_exact(j, xi)
        if m is None:
            return None
        re, im = m
        tau = -round(re)
        d = abs(re + tau)
        taus.append(int(tau))
        if im == 0:
            vals.append(float(d))
            logs.append(log_abs(d))
        else:
            sq = d * d + im * im
            vals.append(math.sqrt(float(sq)) if sq.numerator.bit_length() < 1000 else float(mpmath.sqrt(mpmath.mpf(sq.numerator) / sq.denominator)))
            logs.append(0.5 * log_abs(sq))
    k = int(np.argmax(logs))
    return GwRow(tuple(xi), vals[k], tuple(taus), logs[k], True)


def _mp_row(sys, xi):
    digits = max(len(str(max(abs(v) for v in xi))), 1)
    dps = 2 * digits + 40
    taus, logs = [], []
    with mpmath.workdps(dps):
        for j in range(sys.n):
            m = sys.m0_mp(j, xi, dps)
            tau = -int(mpmath.nint(m.real))
            d = abs(m.real + tau)
            v = mpmath.sqrt(d * d + m.imag * m.imag)
            taus.append(tau)
            logs.append(float(mpmath.log(v)) if v != 0 else -math.inf)
    k = int(np.argmax(logs))
    return GwRow(tuple(xi), math.exp(logs[k]) if logs[k] > -745 else 0.0, tuple(taus), logs[k], False)


def point_row(sys, xi) -> GwRow:
    """Minimum over ``tau`` at one frequency, exact when possible."""
    xi = tuple(int(v) for v in xi)
    row = _exact_row(sys, xi)
    return row if row is not None else _mp_row(sys, xi)


def _float_rows(sys, pts):
    c0 = [complex(c.fourier.get(0, 0j)) if c.average_exact is None else complex(float(c.average_exact[0]), float(c.average_exact[1])) for c in sys.coeffs]
    M = np.stack([c0[j] * symbol_values(sys.symbols[j], pts) for j in range(sys.n)], axis=1)
    tau = -np.round(M.real)
    d = np.abs(M.real + tau)
    val = np.sqrt(d * d + M.imag**2)
    k = np.argmax(val, axis=1)
    best = val[np.arange(len(pts)), k]
    rows = []
    for i, p in enumerate(pts.tolist()):
        v = float(best[i])
        rows.append(GwRow(tuple(p), v, tuple(int(t) for t in tau[i]), math.log(v) if v > 0 else -math.inf, False))
    return rows


def _all_exact(sys):
    probe = (1,) * sys.N
    return all(sys.m0_exact(j, probe) is not None for j in range(sys.n))


def _require_constant(sys):
    if not sys.is_constant:
        raise NonConstantCoefficients("coefficients have non-zero oscillatory part; scan the normal form instead")


# --- augmentation by continued fractions ------------------------------------------------


class _RealSource:
    """Re(c0 * a) for exact-or-expression pieces, usable by the continued-fraction code."""

    def __init__(self, c0_exact, c0_mp, a):
        self.a = a
        self.c0_exact = c0_exact
        self.c0_mp = c0_mp
        ex = a.exact
        if c0_exact is not None and ex is not None:
            self.exact = c0_exact[0] * ex[0] - c0_exact[1] * ex[1]
        else:
            self.exact = None

    def mp(self, dps):
        with mpmath.workdps(dps):
            c = mpmath.mpc(*(mpmath.mpf(v.numerator) / v.denominator for v in self.c0_exact)) if self.c0_exact else self.c0_mp
            return (c * self.a.mp(dps)).real


def _slopes(sys, j):
    """Real slopes of ``M_j`` along ``+xi`` / ``-xi`` for linear or order-one homogeneous symbols (N=1)."""
    s = sys.symbols[j]
    f = s.form
    c = sys.coeffs[j]
    c0x = c.average_exact
    c0m = c.average_mp(40)
    out = []
    if isinstance(f, Polynomial):
        if all(a[0] <= 1 for a, _ in f.coeffs):
            for a, co in f.coeffs:
                if a == (1,):
                    out.append(_RealSource(c0x, c0m, co))
    elif isinstance(f, Homogeneous) and f.kappa == 1:
        out.append(_RealSource(c0x, c0m, f.p_plus))
        out.append(_RealSource(c0x, c0m, f.p_minus))
    return out


def _augment_candidates(sys, q_max=AUGMENT_Q_MAX, depth=400):
    if sys.N != 1:
        return []
    qs = set()
    for j in range(sys.n):
        for src in _slopes(sys, j):
            if src.exact is not None and src.exact.denominator == 1:
                continue
            try:
                for _, q in convergents_up_to(src, q_max, depth):
                    if q > 1:
                        qs.add(q)
            except ValidationError:
                continue
    out = []
    for q in sorted(qs):
        out.append((q,))
        out.append((-q,))
    return out


# --- scans -------------------------------------------------------------------


def _shell(norm):
    return norm.bit_length() - 1


def _worst_sequence(rows):
    rows = sorted((r for r in rows if r.norm >= 2), key=lambda r: r.norm)
    by_shell = {}
    for r in rows:
        by_shell.setdefault(_shell(r.norm), []).append(r)
    seq, best = [], math.inf
    for k in sorted(by_shell):
        group = by_shell[k]
        zeros = [r for r in group if r.log_value == -math.inf]
        if zeros:
            seq.append(zeros[0])
            best = -math.inf
            continue
        r = min(group, key=lambda r: r.log_value / math.log(r.norm))
        e = r.log_value / math.log(r.norm)
        if e < best:
            seq.append(r)
            best = e
    return seq


def _fit_shell_minima(rows):
    by_shell = {}
    for r in rows:
        if r.norm < 1:
            continue
        k = _shell(r.norm)
        if k not in by_shell or r.log_value < by_shell[k].log_value:
            by_shell[k] = r
    pts = [(math.log(r.norm), r.log_value) for r in by_shell.values() if math.isfinite(r.log_value)]
    if len(pts) < 2:
        return math.nan, math.nan
    x, y = np.array(pts).T
    if np.ptp(x) == 0:
        return math.nan, math.nan
    slope, icpt = np.polyfit(x, y, 1)
    return float(math.exp(icpt)), float(-slope)


def gw_scan(sys: SystemSpec, window: Optional[FreqWindow] = None, augment: bool = True) -> GwScanReport:
    """Scan ``min_tau ||L_hat(tau, xi)||`` over the window and classify the decay of its worst points."""
    _require_constant(sys)
    window = window or sys.window
    pts = window_points(sys.N, window.xi_max)
    exact = _all_exact(sys) and len(pts) <= EXACT_POINT_LIMIT
    if exact:
        rows = [_exact_row(sys, tuple(p)) for p in pts.tolist()]
        if any(r is None for r in rows):
            exact = False
    if not exact:
        rows = _float_rows(sys, pts)
    extra = []
    if augment:
        extra = [point_row(sys, xi) for xi in _augment_candidates(sys)]
        extra = [r for r in extra if max(abs(v) for v in r.xi) > window.xi_max]
    allrows = rows + extra
    seq = _worst_sequence(allrows)
    exps = shell_exponents(
        [math.log(r.norm) for r in seq], [r.log_value for r in seq], [_shell(r.norm) for r in seq]
    )
    fails = super_polynomial_probe(exps, window.dyadic_levels, sys.tolerances.fit_tol)
    shells = {_shell(r.norm) for r in allrows if r.norm >= 2}
    if fails:
        verdict = GW_FAILS
    elif len(shells) >= 2:
        verdict = GW_HOLDS
    else:
        verdict = INCONCLUSIVE
    C, M = _fit_shell_minima(allrows)
    return GwScanReport(
        tuple(rows), C, M, tuple(seq), verdict,
        "exact" if exact and all(r.exact for r in extra) else "float",
        tuple(r.xi for r in extra), tuple(exps),
    )


def single_operator_system(j: int, sys: SystemSpec) -> SystemSpec:
    """The one-operator constant-coefficient system ``D_t + c_{j0} P_j(D_x)``."""
    nf = sys.normal_form()
    return SystemSpec(1, sys.N, (nf.coeffs[j],), (sys.symbols[j],), sys.window, sys.tolerances)


def single_operator_gh(j: int, sys: SystemSpec, window: Optional[FreqWindow] = None) -> GwScanReport:
    """Scan of the averaged ``j``-th operator on the ``(tau_j, xi)`` sub-lattice."""
    return gw_scan(single_operator_system(j, sys), window or sys.window)


def export_scan_csv(report: GwScanReport, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["norm", "min_over_tau", "tau"])
        for r in report.per_xi:
            w.writerow([max((abs(v) for v in r.xi), default=0), repr(r.min_over_tau), " ".join(map(str, r.tau))])


# --- resonance sets ------------------------------------------------------------


@dataclass(frozen=True)
class ResonanceReport:
    per_operator: tuple  # one tuple of xi per operator
    intersection: tuple
    density_trend: str
    exact: bool
    certificate: Optional[dict] = None


def _resonant_mask(sys, j, pts):
    """Boolean mask of ``M_{j0}(xi) in Z`` and whether the test was exact."""
    if sys.m0_exact(j, (1,) * sys.N) is not None and len(pts) <= EXACT_POINT_LIMIT:
        out = []
        for p in pts.tolist():
            m = sys.m0_exact(j, tuple(p))
            if m is None:
                break
            out.append(m[1] == 0 and m[0].denominator == 1)
        else:
            return np.array(out, dtype=bool), True
    c0 = complex(sys.coeffs[j].fourier.get(0, 0j))
    M = c0 * symbol_values(sys.symbols[j], pts)
    tol = sys.tolerances.integer_tol
    return (np.abs(M.real - np.round(M.real)) <= tol) & (np.abs(M.imag) <= tol), False


def resonance_sets(sys: SystemSpec, window: Optional[FreqWindow] = None) -> ResonanceReport:
    """``Z_j`` and ``Z`` inside the window, using the averages ``c_{j0}``."""
    window = window or sys.window
    pts = window_points(sys.N, window.xi_max)
    masks, exact = [], True
    for j in range(sys.n):
        m, ex = _resonant_mask(sys, j, pts)
        masks.append(m)
        exact = exact and ex
    per = tuple(tuple(tuple(p) for p in pts[m].tolist()) for m in masks)
    inter = np.logical_and.reduce(masks)
    inter_pts = tuple(tuple(p) for p in pts[inter].tolist())
    norms = np.abs(pts).max(axis=1)
    complete = [k for k in range(0, 64) if 2 ** (k + 1) - 1 <= window.xi_max]
    trend = FINITE
    if len(complete) >= 2:
        counts = [int(np.sum(inter & (norms >= 2**k) & (norms < 2 ** (k + 1)))) for k in complete[-2:]]
        if counts[0] > 0 and counts[1] >= counts[0]:
            trend = INFINITE
    return ResonanceReport(per, inter_pts, trend, exact, exact_resonance_certificate(sys, window))


def _lcm(a, b):
    return a * b // math.gcd(a, b)


def _exact_poly(sym, xi0):
    """Exact polynomial pieces valid on an arithmetic progression through ``xi0``.

    Returns ``(coeffs, modulus, sign)``: ``coeffs`` maps multi-indices to
    ``(re, im)`` Fractions, ``modulus`` must divide the progression step and
    ``sign`` (0, +1, -1) restricts the direction.  None when no such piece exists.
    """
    f = sym.form
    if isinstance(f, Polynomial):
        co = {}
        for a, c in f.coeffs:
            ex = c.exact
            if ex is None:
                return None
            old = co.get(tuple(a), (Fraction(0), Fraction(0)))
            co[tuple(a)] = (old[0] + ex[0], old[1] + ex[1])
        return co, 1, 0
    if isinstance(f, LogGrowth):
        return ({}, 1, 0) if f.scale.exact == (0, 0) else None
    if isinstance(f, ParityPiecewise):
        sub = _exact_poly(f.even if xi0[0] % 2 == 0 else f.odd, xi0)
        if sub is None:
            return None
        return sub[0], _lcm(2, sub[1]), sub[2]
    if isinstance(f, Homogeneous):
        if f.kappa.denominator != 1 or f.kappa < 0 or xi0[0] == 0:
            return None
        sign = 1 if xi0[0] > 0 else -1
        ex = (f.p_plus if sign > 0 else f.p_minus).exact
        if ex is None:
            return None
        k = int(f.kappa)
        s = sign**k
        return {(k,): (ex[0] * s, ex[1] * s)}, 1, sign
    return None


def exact_resonance_certificate(sys: SystemSpec, window: Optional[FreqWindow] = None, search: int = 2000):
    """Exact proof that ``Z`` is infinite, or None.

    If every ``M_{j0}`` restricted to a progression ``xi0 + D k e`` is a
    polynomial with rational coefficients, real-valued, with all denominators
    dividing ``D``, then ``M_{j0}(xi0 + D k e) - M_{j0}(xi0)`` is an integer
    for every ``k``.  So one exact resonant ``xi0`` yields infinitely many.
    """
    window = window or sys.window
    c0s = [c.average_exact for c in sys.coeffs]
    if any(c is None for c in c0s):
        return None
    pts = window_points(sys.N, window.xi_max)[:search]
    for p in pts.tolist():
        xi0 = tuple(p)
        D, sign, ok = 1, 0, True
        for j in range(sys.n):
            piece = _exact_poly(sys.symbols[j], xi0)
            if piece is None:
                ok = False
                break
            co, mod, sg = piece
            if sg:
                if sign and sg != sign:
                    ok = False
                    break
                sign = sg
            cr, ci = c0s[j]
            D = _lcm(D, mod)
            for re, im in co.values():
                mre, mim = cr * re - ci * im, cr * im + ci * re
                if mim != 0:
                    ok = False
                    break
                D = _lcm(D, mre.denominator)
            if not ok:
                break
            m = sys.m0_exact(j, xi0)
            if m is None or m[1] != 0 or m[0].denominator != 1:
                ok = False
                break
        if ok:
            direction = (sign or 1,) + (0,) * (sys.N - 1)
            members = [tuple(x + D * k * e for x, e in zip(xi0, direction)) for k in range(1, 9)]
            return {"xi0": xi0, "period": D, "direction": direction, "members": members}
    return None


# --- homogeneous symbols ------------------------------------------------------------


@dataclass(frozen=True)
class HomogeneousProfile:
    kappa: Fraction
    alpha_vec: tuple
    alpha_tilde_vec: tuple
    beta_vec: tuple
    beta_tilde_vec: tuple
    branch_verdicts: dict  # "+"/"-" -> (kind, SdaWitness or None)

    @property
    def eta(self):
        return self.kappa.denominator

    @property
    def outcome(self):
        kinds = []
        for kind, wit in self.branch_verdicts.values():
            if kind == RATIONAL_REAL:
                return "NOT_GH"
            if kind == SDA_ANALYSIS:
                if wit.verdict_trend == SDA_SATISFIED:
                    return "NOT_GH"
                kinds.append(wit.verdict_trend)
        if all(k == SDA_FAILED for k in kinds):
            return "GH"
        return INCONCLUSIVE

    def to_dict(self):
        out = {}
        for b, (kind, wit) in self.branch_verdicts.items():
            entry = {"kind": kind}
            if wit is not None:
                entry["sda"] = wit.verdict_trend
                entry["records"] = [[str(q), e] for q, e in wit.records]
            out[b] = entry
        return {
            "kappa": str(self.kappa),
            "alpha": [float(a) for a in self.alpha_vec],
            "alphaTilde": [float(a) for a in self.alpha_tilde_vec],
            "beta": [float(a) for a in self.beta_vec],
            "betaTilde": [float(a) for a in self.beta_tilde_vec],
            "branches": out,
            "outcome": self.outcome,
        }


def _branch_parts(sys, j, which):
    """Re and Im of ``c_{j0} p_j(+-1)`` as :class:`Real` expressions."""
    f = sys.symbols[j].form
    p = f.p_plus if which == "+" else f.p_minus
    c = sys.coeffs[j]
    c0 = c.average_exact
    if c0 is None:
        v = complex(c.fourier.get(0, 0j))
        c0 = (Fraction(repr(v.real)), Fraction(repr(v.imag)))
    cr, ci = (f"{x.numerator}/{x.denominator}" for x in c0)
    re = Real(f"({cr})*({p.re.text}) - ({ci})*({p.im.text})")
    im = Real(f"({cr})*({p.im.text}) + ({ci})*({p.re.text})")
    return re, im


def homogeneous_classify(sys: SystemSpec, depth: int = 80, q_budget: int = 10**30, l_max: int = 5) -> HomogeneousProfile:
    """Branch-wise analysis of homogeneous symbols of common order ``kappa = rho/eta``."""
    if sys.N != 1:
        raise ValidationError("N", "homogeneous classification needs N=1")
    forms = [s.form for s in sys.symbols]
    if not all(isinstance(f, Homogeneous) for f in forms):
        raise ValidationError("symbols", "every symbol must have the homogeneous form")
    kappas = {f.kappa for f in forms}
    if len(kappas) != 1:
        raise MixedOrders(f"symbols disagree on kappa: {sorted(map(str, kappas))}")
    kappa = kappas.pop()
    eta = kappa.denominator
    parts = {b: [_branch_parts(sys, j, b) for j in range(sys.n)] for b in "+-"}
    verdicts = {}
    for b in "+-":
        re = [r for r, _ in parts[b]]
        im = [i for _, i in parts[b]]
        if any((i.exact != 0) if i.exact is not None else i.mp(50) != 0 for i in im):
            verdicts[b] = (NONZERO_IMAG, None)
        elif all(r.exact is not None for r in re):
            verdicts[b] = (RATIONAL_REAL, None)
        else:
            verdicts[b] = (SDA_ANALYSIS, sda_witness_search(re, eta, q_budget, l_max, depth))
    return HomogeneousProfile(
        kappa,
        tuple(float(r.mp(30)) for r, _ in parts["+"]),
        tuple(float(r.mp(30)) for r, _ in parts["-"]),
        tuple(float(i.mp(30)) for _, i in parts["+"]),
        tuple(float(i.mp(30)) for _, i in parts["-"]),
        verdicts,
    )
