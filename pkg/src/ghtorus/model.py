"""Declarative data model: coefficients, symbols, windows, systems.

A system is ``L_j = D_{t_j} + c_j(t_j) P_j(D_x)`` on the torus ``T^n x T^N``.
Each ``c_j`` is a :class:`CoeffSpec` and each ``P_j`` is described by a
:class:`SymbolSpec` whose ``form`` is one of a closed set of structural forms.
Exact evaluation (``Fraction`` pairs) is offered wherever the form allows it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from typing import Optional, Union

import mpmath
import numpy as np

from .errors import UnsupportedDimension, ValidationError
from .expr import Cplx, compile_array_expr

ExactC = tuple  # (Fraction, Fraction)

SAMPLED_POINTS = 2048


# --- windows and tolerances --------------------------------------------------


@dataclass(frozen=True)
class FreqWindow:
    xi_max: int = 32
    tau_margin: int = 2
    dyadic_levels: int = 3

    def __post_init__(self):
        for name in ("xi_max", "tau_margin"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ValidationError(_CAMEL[name], "positive integer required")
        if not isinstance(self.dyadic_levels, int) or self.dyadic_levels < 2:
            raise ValidationError("dyadicLevels", "integer >= 2 required")


@dataclass(frozen=True)
class ToleranceSet:
    integer_tol: float = 1e-9
    quad_tol: float = 1e-10
    fit_tol: float = 0.15
    grid_points: int = 256

    def __post_init__(self):
        for name in ("integer_tol", "quad_tol", "fit_tol", "grid_points"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
                raise ValidationError(_CAMEL[name], "strictly positive value required")
        g = self.grid_points
        if not isinstance(g, int) or g & (g - 1):
            raise ValidationError("gridPoints", "power of two required")


_CAMEL = {
    "xi_max": "xiMax",
    "tau_margin": "tauMargin",
    "dyadic_levels": "dyadicLevels",
    "integer_tol": "integerTol",
    "quad_tol": "quadTol",
    "fit_tol": "fitTol",
    "grid_points": "gridPoints",
}


# --- coefficients ------------------------------------------------------------


@dataclass(frozen=True)
class TrigPoly:
    """``sum_k coef_k e^{ikt}`` with expression-valued coefficients."""

    terms: tuple  # ((k, Cplx), ...)

    @classmethod
    def constant(cls, value):
        return cls(((0, value if isinstance(value, Cplx) else Cplx.of(value)),))


@dataclass(frozen=True)
class CoeffSpec:
    """A smooth 2pi-periodic coefficient ``c(t) = a(t) + i b(t)``.

    Either an exact trigonometric polynomial or a pair of sampled real
    expressions in ``t``; both end up as a Fourier series.
    """

    trig: Optional[TrigPoly] = None
    real_expr: Optional[str] = None
    imag_expr: Optional[str] = None

    @classmethod
    def constant(cls, value):
        return cls(trig=TrigPoly.constant(value))

    @classmethod
    def from_terms(cls, terms):
        """``terms`` maps ``k`` to a complex number, a ``(re, im)`` pair or a Cplx."""
        out = []
        for k, v in sorted(dict(terms).items()):
            if isinstance(v, Cplx):
                out.append((int(k), v))
            elif isinstance(v, tuple):
                out.append((int(k), Cplx.of(*v)))
            else:
                v = complex(v)
                out.append((int(k), Cplx.of(v.real, v.imag)))
        return cls(trig=TrigPoly(tuple(out)))

    @cached_property
    def fourier(self):
        """Numeric Fourier coefficients ``{k: complex}``."""
        if self.trig is not None:
            acc = {}
            for k, v in self.trig.terms:
                acc[k] = acc.get(k, 0j) + complex(v)
            return {k: v for k, v in acc.items() if v != 0}
        t = 2 * np.pi * np.arange(SAMPLED_POINTS) / SAMPLED_POINTS
        vals = np.zeros(SAMPLED_POINTS, dtype=complex)
        if self.real_expr:
            vals += compile_array_expr(self.real_expr, ["t"], "coeff.real")(t=t).real
        if self.imag_expr:
            vals += 1j * compile_array_expr(self.imag_expr, ["t"], "coeff.imag")(t=t).real
        hat = np.fft.fft(vals) / SAMPLED_POINTS
        ks = np.fft.fftfreq(SAMPLED_POINTS, 1.0 / SAMPLED_POINTS).astype(int)
        cut = 1e-15 * max(np.abs(hat).max(), 1e-300)  # roundoff floor of the sampling FFT
        return {int(k): complex(h) for k, h in zip(ks, hat) if abs(h) > cut}

    @property
    def average_exact(self) -> Optional[ExactC]:
        if self.trig is None:
            return None
        re, im = Fraction(0), Fraction(0)
        for k, v in self.trig.terms:
            if k == 0:
                ex = v.exact
                if ex is None:
                    return None
                re, im = re + ex[0], im + ex[1]
        return (re, im)

    def average_mp(self, dps=30):
        if self.trig is None:
            return mpmath.mpc(self.fourier.get(0, 0j))
        with mpmath.workdps(dps):
            acc = mpmath.mpc(0)
            for k, v in self.trig.terms:
                if k == 0:
                    acc += v.mp(dps)
            return acc

    @property
    def is_constant(self):
        return all(abs(v) == 0 for k, v in self.fourier.items() if k != 0)

    def _series(self, coeffs, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape, dtype=complex)
        for k, v in coeffs.items():
            out += v * np.exp(1j * k * t)
        return out

    def values(self, t):
        return self._series(self.fourier, t)

    def real_values(self, t):
        if self.trig is None and not self.real_expr:
            return np.zeros(np.shape(t))
        return self.values(t).real

    def imag_values(self, t):
        # a sampled real coefficient has an imaginary part at FFT roundoff only
        if self.trig is None and not self.imag_expr:
            return np.zeros(np.shape(t))
        return self.values(t).imag

    @cached_property
    def _primitive_coeffs(self):
        # int_0^t (c - c0) = sum_{k != 0} c_k (e^{ikt} - 1) / (ik)
        return {k: v / (1j * k) for k, v in self.fourier.items() if k != 0}

    def periodic_integral(self, t):
        """``A(t) + i B(t) = int_0^t (c(s) - c0) ds`` (2pi-periodic, zero at 0)."""
        co = self._primitive_coeffs
        return self._series(co, t) - sum(co.values(), 0j)


def coeff_average(c: CoeffSpec) -> complex:
    """Average ``c0 = (2pi)^{-1} int c``; exact for trig polynomials."""
    ex = c.average_exact
    if ex is not None:
        return complex(float(ex[0]), float(ex[1]))
    return complex(c.fourier.get(0, 0j))


def coeff_primitive(c: CoeffSpec):
    """Return evaluators ``(A, B)`` of the periodic antiderivatives of ``a - a0`` and ``b - b0``."""

    def A(t):
        return c.periodic_integral(t).real

    def B(t):
        return c.periodic_integral(t).imag

    return A, B


# --- symbols -----------------------------------------------------------------


@dataclass(frozen=True)
class Polynomial:
    coeffs: tuple  # ((multi-index tuple, Cplx), ...)


@dataclass(frozen=True)
class Homogeneous:
    kappa: Fraction
    p_plus: Cplx
    p_minus: Cplx


@dataclass(frozen=True)
class LogGrowth:
    scale: Cplx


@dataclass(frozen=True)
class ParityPiecewise:
    even: "SymbolSpec"
    odd: "SymbolSpec"


@dataclass(frozen=True)
class Tabulated:
    table: tuple  # ((xi tuple, Cplx), ...)
    tail: "SymbolSpec"


@dataclass(frozen=True)
class Expression:
    text: str


Form = Union[Polynomial, Homogeneous, LogGrowth, ParityPiecewise, Tabulated, Expression]


@dataclass(frozen=True)
class SymbolSpec:
    order: float
    form: Form
    bound_constant: Optional[float] = None

    @classmethod
    def linear(cls, slope, constant=0):
        """``p(xi) = slope*xi + constant`` on ``Z``; numbers or expression strings."""
        co = [((1,), _cplx(slope))]
        if constant != 0:
            co.insert(0, ((0,), _cplx(constant)))
        return cls(1.0, Polynomial(tuple(co)))

    @classmethod
    def constant(cls, value):
        return cls(0.0, Polynomial((((0,), _cplx(value)),)))

    @classmethod
    def log_growth(cls, scale=1):
        return cls(1.0, LogGrowth(_cplx(scale)))

    @classmethod
    def homogeneous(cls, kappa, p_plus, p_minus):
        kappa = Fraction(kappa)
        return cls(float(kappa), Homogeneous(kappa, _cplx(p_plus), _cplx(p_minus)))

    @classmethod
    def parity(cls, even, odd):
        return cls(max(even.order, odd.order), ParityPiecewise(even, odd))

    @classmethod
    def expression(cls, text, order):
        compile_array_expr(text, ["xi", "norm"], "symbol.expr")
        return cls(float(order), Expression(text))

    @property
    def needs_one_dim(self):
        f = self.form
        if isinstance(f, (Homogeneous, ParityPiecewise)):
            return True
        if isinstance(f, Tabulated):
            return f.tail.needs_one_dim
        return False


def _cplx(v):
    if isinstance(v, Cplx):
        return v
    if isinstance(v, str):
        return Cplx.of(v, 0)
    if isinstance(v, tuple):
        return Cplx.of(*v)
    v = complex(v)
    if v.imag == 0:
        return Cplx.of(v.real if v.real != int(v.real) else int(v.real), 0)
    return Cplx.of(v.real, v.imag)


def _as_xi(xi):
    if isinstance(xi, (int, np.integer)):
        return (int(xi),)
    return tuple(int(v) for v in xi)


def _sup(xi):
    return max((abs(v) for v in xi), default=0)


def _check_dim(s, xi):
    if s.needs_one_dim and len(xi) != 1:
        raise UnsupportedDimension(f"{type(s.form).__name__} symbols need N=1, got xi of length {len(xi)}")


def _homog_abs_power(absxi, kappa: Fraction):
    """Exact ``|xi|^kappa`` as Fraction when it is rational, else None."""
    from .expr import _iroot

    if absxi == 0:
        return Fraction(0)
    num = kappa.numerator
    base = Fraction(absxi) ** num if num >= 0 else Fraction(1, absxi ** (-num))
    a = _iroot(base.numerator, kappa.denominator)
    b = _iroot(base.denominator, kappa.denominator)
    if a is None or b is None:
        return None
    return Fraction(a, b)


def evaluate_symbol_exact(s: SymbolSpec, xi) -> Optional[ExactC]:
    """``p(xi)`` as a pair of Fractions, or None when the value is not rational/known exactly."""
    xi = _as_xi(xi)
    _check_dim(s, xi)
    f = s.form
    if isinstance(f, Polynomial):
        re, im = Fraction(0), Fraction(0)
        for alpha, c in f.coeffs:
            ex = c.exact
            if ex is None:
                return None
            mono = 1
            for x, a in zip(xi, alpha):
                mono *= x**a
            re += ex[0] * mono
            im += ex[1] * mono
        return (re, im)
    if isinstance(f, Homogeneous):
        x = xi[0]
        if x == 0:
            return (Fraction(0), Fraction(0))
        ex = (f.p_plus if x > 0 else f.p_minus).exact
        mag = _homog_abs_power(abs(x), f.kappa)
        if ex is None or mag is None:
            return None
        return (ex[0] * mag, ex[1] * mag)
    if isinstance(f, LogGrowth):
        ex = f.scale.exact
        if _sup(xi) == 0 or (ex is not None and ex == (0, 0)):
            return (Fraction(0), Fraction(0))
        return None
    if isinstance(f, ParityPiecewise):
        return evaluate_symbol_exact(f.even if xi[0] % 2 == 0 else f.odd, xi)
    if isinstance(f, Tabulated):
        for key, v in f.table:
            if tuple(key) == xi:
                return v.exact
        return evaluate_symbol_exact(f.tail, xi)
    return None


def evaluate_symbol_mp(s: SymbolSpec, xi, dps=30):
    """High-precision ``p(xi)`` as an mpmath complex."""
    xi = _as_xi(xi)
    _check_dim(s, xi)
    ex = evaluate_symbol_exact(s, xi)
    with mpmath.workdps(dps):
        if ex is not None:
            return mpmath.mpc(mpmath.mpf(ex[0].numerator) / ex[0].denominator, mpmath.mpf(ex[1].numerator) / ex[1].denominator)
        f = s.form
        if isinstance(f, Polynomial):
            acc = mpmath.mpc(0)
            for alpha, c in f.coeffs:
                mono = 1
                for x, a in zip(xi, alpha):
                    mono *= x**a
                acc += c.mp(dps) * mono
            return acc
        if isinstance(f, Homogeneous):
            x = xi[0]
            mag = mpmath.root(mpmath.mpf(abs(x)) ** f.kappa.numerator, f.kappa.denominator)
            return mag * (f.p_plus if x > 0 else f.p_minus).mp(dps)
        if isinstance(f, LogGrowth):
            return f.scale.mp(dps) * mpmath.log(1 + _sup(xi))
        if isinstance(f, ParityPiecewise):
            return evaluate_symbol_mp(f.even if xi[0] % 2 == 0 else f.odd, xi, dps)
        if isinstance(f, Tabulated):
            for key, v in f.table:
                if tuple(key) == xi:
                    return v.mp(dps)
            return evaluate_symbol_mp(f.tail, xi, dps)
        return mpmath.mpc(complex(symbol_values(s, np.array([xi]))[0]))


def evaluate_symbol(s: SymbolSpec, xi) -> complex:
    """``p(xi)`` as a Python complex."""
    xi = _as_xi(xi)
    _check_dim(s, xi)
    ex = evaluate_symbol_exact(s, xi)
    if ex is not None:
        return complex(_fl(ex[0]), _fl(ex[1]))
    if _sup(xi) < 2**52:
        return complex(symbol_values(s, np.array([xi], dtype=np.int64))[0])
    return complex(evaluate_symbol_mp(s, xi, 30))


def _fl(q: Fraction) -> float:
    try:
        return float(q)
    except OverflowError:
        return math.inf if q > 0 else -math.inf


def symbol_values(s: SymbolSpec, xis) -> np.ndarray:
    """Vectorised float evaluation on an ``(K, N)`` integer array of frequencies."""
    xis = np.asarray(xis, dtype=np.int64)
    if xis.ndim == 1:
        xis = xis[:, None]
    if s.needs_one_dim and xis.shape[1] != 1:
        raise UnsupportedDimension("structural form requires N=1")
    f = s.form
    x = xis.astype(float)
    sup = np.abs(x).max(axis=1) if x.shape[1] else np.zeros(len(x))
    if isinstance(f, Polynomial):
        out = np.zeros(len(x), dtype=complex)
        for alpha, c in f.coeffs:
            out += complex(c) * np.prod(x ** np.array(alpha, dtype=float), axis=1)
        return out
    if isinstance(f, Homogeneous):
        xv = x[:, 0]
        mag = np.abs(xv) ** float(f.kappa)
        out = np.where(xv > 0, mag * complex(f.p_plus), mag * complex(f.p_minus))
        return np.where(xv == 0, 0j, out)
    if isinstance(f, LogGrowth):
        return complex(f.scale) * np.log1p(sup)
    if isinstance(f, ParityPiecewise):
        ev = symbol_values(f.even, xis)
        od = symbol_values(f.odd, xis)
        return np.where(xis[:, 0] % 2 == 0, ev, od)
    if isinstance(f, Tabulated):
        out = symbol_values(f.tail, xis).astype(complex)
        lookup = {tuple(k): complex(v) for k, v in f.table}
        for i, row in enumerate(xis):
            key = tuple(int(v) for v in row)
            if key in lookup:
                out[i] = lookup[key]
        return out
    if isinstance(f, Expression):
        names = ["xi"] if xis.shape[1] == 1 else [f"xi{i + 1}" for i in range(xis.shape[1])]
        fn = compile_array_expr(f.text, names + ["norm"], "symbol.expr")
        arrays = {nm: x[:, i] for i, nm in enumerate(names)}
        arrays["norm"] = sup
        return np.asarray(fn(**arrays), dtype=complex)
    raise TypeError(f)


def window_points(N: int, xi_max: int) -> np.ndarray:
    """All ``xi`` in ``Z^N`` with sup-norm ``<= xi_max``, ordered by norm then lexicographically."""
    axis = np.arange(-xi_max, xi_max + 1)
    grids = np.meshgrid(*([axis] * N), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    norms = np.abs(pts).max(axis=1)
    order = np.lexsort(tuple(pts[:, i] for i in reversed(range(N))) + (norms,))
    return pts[order]


# --- system ------------------------------------------------------------------


@dataclass(frozen=True)
class SystemSpec:
    n: int
    N: int
    coeffs: tuple
    symbols: tuple
    window: FreqWindow = field(default_factory=FreqWindow)
    tolerances: ToleranceSet = field(default_factory=ToleranceSet)

    def __post_init__(self):
        if len(self.coeffs) != self.n:
            raise ValidationError("coeffs", f"expected {self.n}")
        if len(self.symbols) != self.n:
            raise ValidationError("symbols", f"expected {self.n}")
        for j, s in enumerate(self.symbols):
            if s.needs_one_dim and self.N != 1:
                raise ValidationError(f"symbols[{j}]", f"{type(s.form).__name__} form requires N=1")

    @property
    def is_constant(self):
        return all(c.is_constant for c in self.coeffs)

    def normal_form(self) -> "SystemSpec":
        """The constant-coefficient system with every ``c_j`` replaced by its average."""
        out = []
        for c in self.coeffs:
            if c.trig is not None:
                zero = [v for k, v in c.trig.terms if k == 0]
                if len(zero) == 1:
                    out.append(CoeffSpec.constant(zero[0]))
                    continue
                ex = c.average_exact
                if ex is not None:
                    out.append(CoeffSpec.constant(Cplx.of(ex[0], ex[1])))
                    continue
            c0 = coeff_average(c)
            out.append(CoeffSpec.constant(Cplx.of(c0.real, c0.imag)))
        return replace(self, coeffs=tuple(out))

    def replace(self, **kw) -> "SystemSpec":
        return replace(self, **kw)

    def with_window(self, **kw) -> "SystemSpec":
        return replace(self, window=replace(self.window, **kw))

    def with_tolerances(self, **kw) -> "SystemSpec":
        return replace(self, tolerances=replace(self.tolerances, **kw))

    def average_exact(self, j) -> Optional[ExactC]:
        return self.coeffs[j].average_exact

    def m0_exact(self, j, xi) -> Optional[ExactC]:
        """Exact ``M_{j0}(xi) = c_{j0} p_j(xi)`` when available."""
        c0 = self.coeffs[j].average_exact
        p = evaluate_symbol_exact(self.symbols[j], xi)
        if c0 is None or p is None:
            return None
        return (c0[0] * p[0] - c0[1] * p[1], c0[0] * p[1] + c0[1] * p[0])

    def m0_mp(self, j, xi, dps=30):
        with mpmath.workdps(dps):
            return self.coeffs[j].average_mp(dps) * evaluate_symbol_mp(self.symbols[j], xi, dps)

    def m0(self, j, xi) -> complex:
        return coeff_average(self.coeffs[j]) * evaluate_symbol(self.symbols[j], xi)


# --- config ingestion ----------------------------------------------------------


def _num(raw, where):
    if isinstance(raw, dict):
        return Cplx.of(raw.get("re", 0), raw.get("im", 0), where)
    return Cplx.of(raw, 0, where)


def _parse_coeff(raw, where):
    if not isinstance(raw, dict):
        raise ValidationError(where, "object expected")
    if "trig" in raw:
        terms = raw["trig"]
        if not isinstance(terms, list) or not terms:
            raise ValidationError(where + ".trig", "non-empty list expected")
        out = []
        for i, t in enumerate(terms):
            w = f"{where}.trig[{i}]"
            if not isinstance(t, dict) or "k" not in t:
                raise ValidationError(w, "object with k expected")
            k = t["k"]
            if not isinstance(k, int) or isinstance(k, bool):
                raise ValidationError(w + ".k", "integer expected")
            out.append((k, Cplx.of(t.get("re", 0), t.get("im", 0), w)))
        return CoeffSpec(trig=TrigPoly(tuple(out)))
    if "real" in raw or "imag" in raw:
        for key in ("real", "imag"):
            if key in raw:
                compile_array_expr(raw[key], ["t"], f"{where}.{key}")
        return CoeffSpec(real_expr=raw.get("real"), imag_expr=raw.get("imag"))
    if "const" in raw:
        return CoeffSpec.constant(_num(raw["const"], where + ".const"))
    raise ValidationError(where, "expected one of trig, real/imag, const")


def _parse_symbol(raw, where, N):
    if not isinstance(raw, dict) or "form" not in raw:
        raise ValidationError(where, "object with form expected")
    form = raw["form"]
    bound = raw.get("boundConstant")
    if bound is not None and not (isinstance(bound, (int, float)) and bound > 0):
        raise ValidationError(where + ".boundConstant", "positive number expected")
    order = raw.get("order")
    if form == "polynomial":
        co = []
        for i, t in enumerate(raw.get("coeffs", [])):
            w = f"{where}.coeffs[{i}]"
            power = t.get("power", 0)
            power = (power,) if isinstance(power, int) else tuple(power)
            if len(power) != N or any((not isinstance(a, int)) or a < 0 for a in power):
                raise ValidationError(w + ".power", f"{N} non-negative integers expected")
            co.append((power, Cplx.of(t.get("re", 0), t.get("im", 0), w)))
        if not co:
            raise ValidationError(where + ".coeffs", "non-empty list expected")
        deg = max(sum(a) for a, _ in co)
        s = SymbolSpec(float(deg if order is None else order), Polynomial(tuple(co)), bound)
    elif form == "homogeneous":
        if N != 1:
            raise ValidationError(where, "homogeneous form requires N=1")
        try:
            kappa = Fraction(str(raw["kappa"]))
        except (KeyError, ValueError):
            raise ValidationError(where + ".kappa", "rational rho/eta expected") from None
        s = SymbolSpec(
            float(kappa if order is None else order),
            Homogeneous(kappa, _num(raw.get("pPlus", 0), where + ".pPlus"), _num(raw.get("pMinus", 0), where + ".pMinus")),
            bound,
        )
    elif form == "log":
        s = SymbolSpec(float(1 if order is None else order), LogGrowth(_num(raw.get("scale", 1), where + ".scale")), bound)
    elif form == "parity":
        if N != 1:
            raise ValidationError(where, "parity form requires N=1")
        ev = _parse_symbol(raw.get("even"), where + ".even", N)
        od = _parse_symbol(raw.get("odd"), where + ".odd", N)
        s = SymbolSpec(float(max(ev.order, od.order) if order is None else order), ParityPiecewise(ev, od), bound)
    elif form == "tabulated":
        tail = _parse_symbol(raw.get("tail"), where + ".tail", N)
        table = []
        for i, t in enumerate(raw.get("table", [])):
            xi = t.get("xi")
            xi = (xi,) if isinstance(xi, int) else tuple(xi)
            if len(xi) != N:
                raise ValidationError(f"{where}.table[{i}].xi", f"{N} integers expected")
            table.append((xi, Cplx.of(t.get("re", 0), t.get("im", 0), f"{where}.table[{i}]")))
        s = SymbolSpec(float(tail.order if order is None else order), Tabulated(tuple(table), tail), bound)
    elif form == "expression":
        if order is None:
            raise ValidationError(where + ".order", "required for expression symbols")
        names = ["xi"] if N == 1 else [f"xi{i + 1}" for i in range(N)]
        compile_array_expr(raw.get("expr", ""), names + ["norm"], where + ".expr")
        s = SymbolSpec(float(order), Expression(raw["expr"]), bound)
    else:
        raise ValidationError(where + ".form", f"unknown form {form!r}")
    return s


def _check_bound(s: SymbolSpec, N, xi_max, where):
    if N > 3 or (2 * xi_max + 1) ** N > 2_000_000:
        return s
    pts = window_points(N, xi_max)
    norms = np.abs(pts).max(axis=1)
    keep = norms >= 1
    vals = np.abs(symbol_values(s, pts[keep]))
    ratio = vals / norms[keep].astype(float) ** s.order
    worst = float(ratio.max()) if ratio.size else 0.0
    if s.bound_constant is None:
        return replace(s, bound_constant=max(worst, 1e-300))
    if worst > s.bound_constant * (1 + 1e-12):
        raise ValidationError(where + ".boundConstant", f"|p(xi)| exceeds {s.bound_constant}*|xi|^{s.order} in the window")
    return s


def validate_system(raw) -> SystemSpec:
    """Check a parsed config document and build an immutable :class:`SystemSpec`."""
    if not isinstance(raw, dict):
        raise ValidationError("", "top-level object expected")
    n, N = raw.get("n"), raw.get("N")
    for key, v in (("n", n), ("N", N)):
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            raise ValidationError(key, "positive integer required")
    coeffs_raw = raw.get("coeffs")
    symbols_raw = raw.get("symbols")
    if not isinstance(coeffs_raw, list) or len(coeffs_raw) != n:
        raise ValidationError("coeffs", f"expected {n}")
    if not isinstance(symbols_raw, list) or len(symbols_raw) != n:
        raise ValidationError("symbols", f"expected {n}")
    w = raw.get("window", {}) or {}
    tol = raw.get("tolerances", {}) or {}
    window = FreqWindow(
        xi_max=w.get("xiMax", FreqWindow.xi_max),
        tau_margin=w.get("tauMargin", FreqWindow.tau_margin),
        dyadic_levels=w.get("dyadicLevels", FreqWindow.dyadic_levels),
    )
    tolerances = ToleranceSet(
        integer_tol=tol.get("integerTol", ToleranceSet.integer_tol),
        quad_tol=tol.get("quadTol", ToleranceSet.quad_tol),
        fit_tol=tol.get("fitTol", ToleranceSet.fit_tol),
        grid_points=tol.get("gridPoints", ToleranceSet.grid_points),
    )
    coeffs = tuple(_parse_coeff(c, f"coeffs[{j}]") for j, c in enumerate(coeffs_raw))
    symbols = []
    for j, s in enumerate(symbols_raw):
        where = f"symbols[{j}]"
        sym = _parse_symbol(s, where, N)
        symbols.append(_check_bound(sym, N, window.xi_max, where))
    return SystemSpec(n, N, coeffs, tuple(symbols), window, tolerances)


def load_system(path) -> SystemSpec:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError("", f"invalid JSON: {exc}") from None
    return validate_system(raw)
