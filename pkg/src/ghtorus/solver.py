"""Per-frequency solution formulas, normal-form maps and singular-solution witnesses.

In partial Fourier form ``i L_j u`` acts on each slice as
``d/dt_j u_hat + i M_j(t_j, xi) u_hat`` with ``M_j = c_j(t_j) p_j(xi)``.
Every integral of ``M_j`` in ``t`` is ``p_j(xi) (c_j0 t + PI_j(t))`` where
``PI_j`` is the periodic antiderivative of ``c_j - c_j0``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import mpmath
import numpy as np

from .conditions import POLY_BOUNDED, LOG, growth_classify, reduction_bound_check
from .errors import (
    GridMismatch,
    InsufficientData,
    NotResonant,
    NyquistViolation,
    PreconditionFailed,
    ResonantFrequency,
    SequenceTooShort,
    ValidationError,
)
from .fourier import (
    DISTRIBUTION,
    SMOOTH,
    DecayReport,
    SpectralField,
    _as_freq,
    decay_fit,
    log_norm,
    sup_norm,
    t_derivative,
    t_grid,
)
from .model import CoeffSpec, FreqWindow, SystemSpec, coeff_average, coeff_primitive, evaluate_symbol

BACKWARD = "BACKWARD"
FORWARD = "FORWARD"

NF_FORWARD = "FORWARD"
NF_INVERSE = "INVERSE"
PARTIAL_A = "PARTIAL_A"
PARTIAL_A_INV = "PARTIAL_A_INV"
PARTIAL_B = "PARTIAL_B"
PARTIAL_B_INV = "PARTIAL_B_INV"
DIRECTIONS = (NF_FORWARD, NF_INVERSE, PARTIAL_A, PARTIAL_A_INV, PARTIAL_B, PARTIAL_B_INV)

KERNEL_WITNESS = "KERNEL_WITNESS"
MIXED_WITNESS = "MIXED_WITNESS"

ILL_CONDITIONED = "ILL_CONDITIONED"
UNDER_RESOLVED = "UNDER_RESOLVED"
UNCERTIFIED = "UNCERTIFIED"
CERTIFIED = "CERTIFIED"

# Gauss-Legendre panel used by solve_mode
_PANEL_NODES = 24


def _along(values, axis, n):
    """Reshape a 1-D profile so it broadcasts along ``axis`` of an n-dim grid."""
    shape = [1] * n
    shape[axis] = -1
    return np.asarray(values).reshape(shape)


def _check_field(sys: SystemSpec, u: SpectralField):
    if u.n != sys.n or u.N != sys.N:
        raise GridMismatch(f"field on T^{u.n} x Z^{u.N}, system on T^{sys.n} x Z^{sys.N}")


def _symbol(sys, j, xi) -> complex:
    with np.errstate(over="ignore", invalid="ignore"):
        return evaluate_symbol(sys.symbols[j], xi)


# --- mode offsets -------------------------------------------------------------


@dataclass(frozen=True)
class ModeOffset:
    """``M_j0(xi) = nearest + delta`` with ``nearest = round(Re M_j0)``.

    ``gap`` is ``|1 - exp(-2 pi i M_j0)|`` in mpmath precision, so it stays
    meaningful far below float range.  ``exact_zero`` is None when ``M_j0``
    is not known exactly.
    """

    nearest: int
    delta: complex
    delta_mp: object
    gap: object
    exact_zero: Optional[bool]

    @property
    def log_gap(self) -> float:
        return float(mpmath.log(self.gap)) if self.gap else -math.inf

    @property
    def one_minus_w(self) -> complex:
        with mpmath.workdps(30):
            return complex(-mpmath.expm1(-2j * mpmath.pi * self.delta_mp))

    def resonant(self, tol) -> bool:
        if self.exact_zero is not None:
            return self.exact_zero
        return self.gap <= tol


def mode_offset(sys: SystemSpec, j: int, xi) -> ModeOffset:
    xi = _as_freq(xi)
    ex = sys.m0_exact(j, xi)
    with mpmath.workdps(30):
        if ex is not None:
            re, im = ex
            m = round(re)
            d = (re - m, im)
            delta_mp = mpmath.mpc(mpmath.mpf(d[0].numerator) / d[0].denominator,
                                  mpmath.mpf(d[1].numerator) / d[1].denominator)
            exact_zero = d[0] == 0 and d[1] == 0
        else:
            digits = len(str(sup_norm(xi))) + 30
            v = sys.m0_mp(j, xi, dps=digits)
            with mpmath.workdps(digits):
                m = int(mpmath.nint(v.real))
                delta_mp = v - m
            delta_mp = mpmath.mpc(delta_mp)
            exact_zero = None
        gap = abs(mpmath.expm1(-2j * mpmath.pi * delta_mp))
    return ModeOffset(m, complex(delta_mp), delta_mp, gap, exact_zero)


def _shifted_m0(sys, j, xi, k) -> complex:
    """``k + M_j0(xi)`` without cancellation when both are huge."""
    off = mode_offset(sys, j, xi)
    return complex(off.nearest + k) + off.delta


# --- reduction data -------------------------------------------------------------


@dataclass(frozen=True)
class ReductionData:
    """Phases ``calA = sum_j p_j A_j(t_j)`` and ``calB = sum_j p_j B_j(t_j)`` on the t-grid."""

    sys: SystemSpec
    grid_points: int

    @property
    def per_operator(self):
        return tuple(coeff_primitive(c) for c in self.sys.coeffs)

    def _combine(self, xi, part):
        n, G = self.sys.n, self.grid_points
        t = t_grid(G)
        out = np.zeros((G,) * n, dtype=complex)
        for j, c in enumerate(self.sys.coeffs):
            if c.is_constant:
                continue
            prim = c.periodic_integral(t)
            prof = {"A": prim.real, "B": prim.imag, "AB": prim}[part]
            out = out + _symbol(self.sys, j, xi) * _along(prof, j, n)
        return out

    def cal_a(self, xi):
        return self._combine(xi, "A")

    def cal_b(self, xi):
        return self._combine(xi, "B")

    def phase(self, xi):
        """``calA + i calB = sum_j p_j(xi) PI_j(t_j)``."""
        return self._combine(xi, "AB")


# --- operator application ----------------------------------------------------


def apply_operator(j: int, sys: SystemSpec, u: SpectralField) -> SpectralField:
    """Slices of ``i L_j u``: spectral ``t_j``-derivative plus ``i M_j`` times the slice."""
    _check_field(sys, u)
    n, G = u.n, u.grid_points
    c = sys.coeffs[j]
    t = t_grid(G)
    osc = None if c.is_constant else _along(c.values(t) - coeff_average(c), j, n)
    alpha = tuple(1 if a == j else 0 for a in range(n))
    out = []
    for xi, s, k in zip(u.frequencies, u.slices, u.carriers):
        d = t_derivative(s, alpha)
        mult = 1j * _shifted_m0(sys, j, xi, k[j])
        if osc is not None:
            mult = mult + 1j * _symbol(sys, j, xi) * osc
        out.append(d + mult * s)
    return SpectralField(n, u.N, G, u.frequencies, tuple(out), u.carriers, {"operator": j})


# --- per-mode solve ---------------------------------------------------------------


def _shifted_primitive(c: CoeffSpec, G: int, taus):
    """Rows ``PI(t_m + tau)`` on the grid for each ``tau``; modes fold mod ``G``, which is exact on grid points."""
    co = c._primitive_coeffs
    taus = np.asarray(taus, dtype=float)
    if not co:
        return np.zeros((len(taus), G), dtype=complex)
    ks = np.array(list(co), dtype=np.int64)
    vals = np.array(list(co.values()), dtype=complex)
    hat = np.zeros((len(taus), G), dtype=complex)
    np.add.at(hat, (slice(None), ks % G), vals * np.exp(1j * np.outer(taus, ks)))
    return np.fft.ifft(hat, axis=-1) * G - vals.sum()


_NODE_BLOCK = 128


def _gauss_nodes(bandwidth):
    """Composite Gauss-Legendre nodes and weights on ``[0, 2pi]``."""
    panels = max(4, int(math.ceil(2 * math.pi * bandwidth / 28.0)))
    x, w = np.polynomial.legendre.leggauss(_PANEL_NODES)
    h = 2 * math.pi / panels
    starts = h * np.arange(panels)
    nodes = (starts[:, None] + h * (x[None, :] + 1) / 2).ravel()
    weights = np.tile(w * h / 2, panels)
    return nodes, weights


def _phase_band(c: CoeffSpec, p) -> float:
    """Highest primitive mode that moves the phase ``p PI`` above roundoff."""
    modes = [abs(k) for k, v in c._primitive_coeffs.items() if abs(p * v) > 1e-16]
    return float(max(modes, default=0))


_ROUNDOFF_FLOOR = 64 * np.finfo(float).eps


def _drop_roundoff_modes(u, keep):
    """Zero ``t``-modes (last axis) beyond ``keep`` that sit below the roundoff floor.

    The spectral derivative amplifies such noise by ``|k|``; modes inside the
    expected bandwidth are never touched.
    """
    U = np.fft.fft(u, axis=-1)
    size = np.abs(U).max(axis=tuple(range(U.ndim - 1))) if U.ndim > 1 else np.abs(U)
    top = size.max()
    if top == 0:
        return u
    k = np.abs(np.fft.fftfreq(U.shape[-1], 1.0 / U.shape[-1]))
    U[..., (k > keep) & (size < _ROUNDOFF_FLOOR * top)] = 0
    return np.fft.ifft(U, axis=-1)


def solve_mode(j: int, sys: SystemSpec, f_hat, xi, variant: str = BACKWARD, return_info: bool = False):
    """The unique periodic solution of ``d/dt_j u + i M_j u = f`` at a non-resonant ``xi``.

    BACKWARD integrates ``f(t - tau)`` against ``exp(-i int_{t-tau}^t M_j)``,
    FORWARD integrates ``f(t + tau)`` against ``exp(i int_t^{t+tau} M_j)``.
    Both use the trigonometric interpolant of ``f`` between grid points.
    """
    if variant not in (BACKWARD, FORWARD):
        raise ValidationError("variant", f"unknown variant {variant!r}")
    f = np.asarray(f_hat, dtype=complex)
    n = sys.n
    if n == 1 and f.ndim == 1:
        pass
    elif f.ndim != n or len(set(f.shape)) != 1:
        raise GridMismatch(f"slice of shape {f.shape} for n={n}")
    G = f.shape[0]
    xi = _as_freq(xi)
    off = mode_offset(sys, j, xi)
    tol = sys.tolerances.integer_tol
    if off.resonant(tol) or off.gap <= tol:
        raise ResonantFrequency(f"xi={xi} lies in the resonance set of operator {j}")
    gap = float(off.gap)

    c = sys.coeffs[j]
    p = _symbol(sys, j, xi)
    m0 = sys.m0(j, xi)
    c0 = coeff_average(c)
    t = t_grid(G)
    fj = np.moveaxis(f, j, -1) if f.ndim > 1 else f
    F = np.fft.fft(fj, axis=-1)
    kk = np.fft.fftfreq(G, 1.0 / G)
    live = np.abs(F).max(axis=tuple(range(F.ndim - 1))) if F.ndim > 1 else np.abs(F)
    top = live.max()
    band = float(np.abs(kk[live > _ROUNDOFF_FLOOR * top]).max()) if top > 0 else 0.0
    vary = 0.0 if c.is_constant else abs(p) * float(np.abs(c.values(t) - c0).max())
    bandwidth = band + abs(m0) + vary + _phase_band(c, p) + 8
    nodes, weights = _gauss_nodes(bandwidth)

    sign = -1 if variant == BACKWARD else 1
    pi_t = c.periodic_integral(t)
    # acc(t) = sum_tau w E(t, tau) f(t + sign tau), f(t + s) = G^-1 sum_k F_k e^{ik(t + s)}
    kernel = np.zeros((G, G), dtype=complex) if fj.ndim > 1 else None
    acc = np.zeros(G, dtype=complex) if kernel is None else None
    for start in range(0, len(nodes), _NODE_BLOCK):
        tau = nodes[start:start + _NODE_BLOCK]
        w = weights[start:start + _NODE_BLOCK]
        pi_shift = _shifted_primitive(c, G, sign * tau)
        if variant == BACKWARD:
            # int_{t-tau}^t M = p (c0 tau + PI(t) - PI(t - tau))
            expo = -1j * p * (c0 * tau[:, None] + pi_t[None, :] - pi_shift)
        else:
            # int_t^{t+tau} M = p (c0 tau + PI(t + tau) - PI(t))
            expo = 1j * p * (c0 * tau[:, None] + pi_shift - pi_t[None, :])
        weighted = w[:, None] * np.exp(expo)
        shift = np.exp(1j * sign * np.outer(tau, kk))
        if kernel is None:
            acc += (weighted * np.fft.ifft(F[None, :] * shift, axis=-1)).sum(axis=0)
        else:
            kernel += weighted.T @ shift
    if kernel is not None:
        kernel *= np.exp(1j * np.outer(t, kk)) / G
        acc = F @ kernel.T
    one_minus_w = off.one_minus_w
    if variant == BACKWARD:
        pref = 1.0 / one_minus_w
    else:
        pref = 1.0 / (np.exp(2j * np.pi * off.delta) - 1.0)
    u = _drop_roundoff_modes(pref * acc, bandwidth)
    if f.ndim > 1:
        u = np.moveaxis(u, -1, j)
    tags = [ILL_CONDITIONED] if gap <= 1e3 * tol else []
    scale = max(abs(p), 1.0)
    if any(abs(k) >= G // 2 and abs(v) * scale > sys.tolerances.quad_tol for k, v in c.fourier.items()):
        tags.append(UNDER_RESOLVED)
    info = {"prefactor": gap, "tags": tags}
    return (u, info) if return_info else u


# --- normal forms -----------------------------------------------------------------


def partially_normalized(sys: SystemSpec, keep: str) -> SystemSpec:
    """Average one part of every coefficient: ``keep="b"`` gives ``a_j0 + i b_j``, ``keep="a"`` gives ``a_j + i b_j0``."""
    out = []
    for c in sys.coeffs:
        co = c.fourier
        terms = {0: co.get(0, 0j)}
        for k, v in co.items():
            if k == 0:
                continue
            conj = complex(co.get(-k, 0j)).conjugate()
            terms[k] = (v - conj) / 2 if keep == "b" else (v + conj) / 2
        out.append(CoeffSpec.from_terms(terms))
    return sys.replace(coeffs=tuple(out))


def map_certified(sys: SystemSpec, direction: str) -> bool:
    window = sys.window
    if direction in (NF_FORWARD, NF_INVERSE):
        return all(reduction_bound_check(j, sys, window).trend == POLY_BOUNDED for j in range(sys.n))
    if window.dyadic_levels < 3:
        window = FreqWindow(window.xi_max, window.tau_margin, 3)
    target = "imag" if direction in (PARTIAL_A, PARTIAL_A_INV) else "real"
    try:
        return all(growth_classify(s, target, window, sys.N).classification == LOG for s in sys.symbols)
    except InsufficientData:
        return False


def normal_form_map(sys: SystemSpec, u: SpectralField, direction: str, certify: bool = True) -> SpectralField:
    """Multiply each slice by ``exp(calB - i calA)`` (FORWARD), ``exp(-i calA)`` or ``exp(calB)``, or their inverses."""
    if direction not in DIRECTIONS:
        raise ValidationError("direction", f"unknown direction {direction!r}")
    _check_field(sys, u)
    red = ReductionData(sys, u.grid_points)
    inverse = direction.endswith("INV") or direction == NF_INVERSE
    out = []
    for xi, s in zip(u.frequencies, u.slices):
        if direction in (NF_FORWARD, NF_INVERSE):
            expo = -1j * red.phase(xi)
        elif direction in (PARTIAL_A, PARTIAL_A_INV):
            expo = -1j * red.cal_a(xi)
        else:
            expo = red.cal_b(xi)
        factor = np.exp(-expo if inverse else expo)
        tail = _spectral_tail(np.broadcast_to(factor, s.shape))
        if tail > sys.tolerances.quad_tol:
            raise NyquistViolation(f"xi={sup_norm(xi)}: {direction} factor has spectrum tail {tail:.2g} "
                                   f"near Nyquist on a {u.grid_points}-point grid")
        out.append(s * factor)
    tags = {"normalForm": direction}
    if certify:
        tags["status"] = CERTIFIED if map_certified(sys, direction) else UNCERTIFIED
    return SpectralField(u.n, u.N, u.grid_points, u.frequencies, tuple(out), u.carriers, tags)


# --- witnesses ----------------------------------------------------------------------


@dataclass
class WitnessBundle:
    field: SpectralField
    residuals: tuple
    decay: Optional[DecayReport]
    residual_decay: tuple
    construction: str
    metadata: dict = field(default_factory=dict)

    def invariant_failures(self, quad_tol: float) -> list:
        bad = []
        if self.decay is None or self.decay.classification != DISTRIBUTION:
            bad.append("field is not DISTRIBUTION_TREND")
        if self.construction == KERNEL_WITNESS:
            for j, r in enumerate(self.residuals):
                if len(r) and r.sup_abs().max() > quad_tol:
                    bad.append(f"residual {j} exceeds quadTol")
        else:
            for j, d in enumerate(self.residual_decay):
                if d is None or d.classification != SMOOTH:
                    bad.append(f"residual {j} is not SMOOTH_TREND")
        return bad

    def invariants_hold(self, quad_tol: float) -> bool:
        return not self.invariant_failures(quad_tol)

    def to_dict(self):
        return {
            "construction": self.construction,
            "frequencies": [list(f) for f in self.field.frequencies],
            "decay": self.decay.to_dict() if self.decay else None,
            "residualDecay": [d.to_dict() if d else None for d in self.residual_decay],
            "metadata": self.metadata,
        }

    def export_csv(self, path):
        """Per frequency: sup norm of the field and of each residual."""
        amps = self.field.sup_abs()
        res = [r.sup_abs() for r in self.residuals]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["xi", "norm", "field_sup"] + [f"residual_{j}_sup" for j in range(len(res))])
            for i, f in enumerate(self.field.frequencies):
                w.writerow([" ".join(map(str, f)), sup_norm(f), repr(float(amps[i]))] + [repr(float(r[i])) for r in res])

    def export_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True, default=str)


def _check_increasing(seq):
    norms = [sup_norm(f) for f in seq]
    if any(b <= a for a, b in zip(norms, norms[1:])):
        raise ValidationError("frequencies", "norms must be strictly increasing")


def _decay_or_none(f, window, fit_tol):
    try:
        return decay_fit(f, window, fit_tol)
    except InsufficientData:
        return None


def _spectral_tail(values) -> float:
    """Largest relative Fourier coefficient with some ``|k_a| >= 3G/8``, over every grid axis."""
    spec = np.abs(np.fft.fftn(values))
    top = spec.max()
    if top == 0:
        return 0.0
    G = values.shape[0]
    high = np.abs(np.fft.fftfreq(G, 1.0 / G)) >= 3 * G // 8
    worst = 0.0
    for axis in range(values.ndim):
        worst = max(worst, float(np.compress(high, spec, axis=axis).max()))
    return worst / top


def _check_resolved(sys, j, xi, G):
    """The phase factor ``exp(-i p_j PI_j(t))`` must be resolved by the ``G``-point grid.

    Resolved means its spectrum is below ``quadTol`` (relative) on the top
    quarter of the representable band, so aliasing cannot reach that level.
    """
    c = sys.coeffs[j]
    if c.is_constant:
        return
    p = _symbol(sys, j, xi)
    swing = abs(p) * float(np.abs(c.values(t_grid(4 * G)) - coeff_average(c)).max())
    if not swing < G / 2:
        raise NyquistViolation(f"xi={sup_norm(xi)}: phase frequency {swing:.3g} exceeds {G // 2} on a {G}-point grid")
    tail = _spectral_tail(np.exp(-1j * p * c.periodic_integral(t_grid(G))))
    if tail > sys.tolerances.quad_tol:
        raise NyquistViolation(f"xi={sup_norm(xi)}: phase spectrum tail {tail:.2g} near Nyquist on a {G}-point grid")


def resolvable(sys: SystemSpec, xi) -> bool:
    """Whether every phase factor at ``xi`` is resolved on the configured grid."""
    try:
        for j in range(sys.n):
            _check_resolved(sys, j, _as_freq(xi), sys.tolerances.grid_points)
    except NyquistViolation:
        return False
    return True


def _kernel_profile(sys, j, xi, t):
    """``exp(-i p_j PI_j(t))``: the kernel slice with the integer carrier removed."""
    c = sys.coeffs[j]
    if c.is_constant:
        return np.ones(len(t), dtype=complex)
    _check_resolved(sys, j, xi, len(t))
    return np.exp(-1j * _symbol(sys, j, xi) * c.periodic_integral(t))


def _secular_imag(sys, j, xi, t, off):
    """``int_0^t Im M_j`` on the grid (its argmax is where the kernel slice peaks)."""
    c = sys.coeffs[j]
    out = off.delta.imag * t
    if not c.is_constant:
        out = out + (_symbol(sys, j, xi) * c.periodic_integral(t)).imag
    return out


def _outer(profiles):
    out = profiles[0]
    for p in profiles[1:]:
        out = np.multiply.outer(out, p)
    return out


def _finish(sys, construction, freqs, slices, carriers, residual_slices, metadata):
    n, G = sys.n, sys.tolerances.grid_points
    fld = SpectralField(n, sys.N, G, tuple(freqs), tuple(slices), tuple(carriers), {"construction": construction})
    if residual_slices is None:
        residuals = tuple(apply_operator(j, sys, fld) for j in range(n))
    else:
        residuals = tuple(
            SpectralField(n, sys.N, G, fld.frequencies, tuple(rs), fld.carriers, {"operator": j})
            for j, rs in enumerate(residual_slices)
        )
    fit_tol = sys.tolerances.fit_tol
    decay = _decay_or_none(fld, sys.window, fit_tol)
    res_decay = tuple(_decay_or_none(r, sys.window, fit_tol) for r in residuals)
    return WitnessBundle(fld, residuals, decay, res_decay, construction, metadata)


def kernel_witness(sys: SystemSpec, resonant) -> WitnessBundle:
    """Superpose normalized kernel slices ``K prod_j exp(-i int_0^{t_j} M_j)`` over resonant frequencies."""
    seq = [_as_freq(x) for x in resonant]
    if not seq:
        raise ValidationError("resonant", "at least one frequency required")
    _check_increasing(seq)
    G = sys.tolerances.grid_points
    t = t_grid(G)
    slices, carriers, meta_k, meta_tau = [], [], [], []
    for xi in seq:
        profs, car, taus = [], [], []
        for j in range(sys.n):
            off = mode_offset(sys, j, xi)
            if not off.resonant(sys.tolerances.integer_tol):
                raise NotResonant(f"xi={xi} is not in the resonance set of operator {j}")
            prof = _kernel_profile(sys, j, xi, t)
            peak = int(np.argmax(np.abs(prof)))
            profs.append(prof / np.abs(prof[peak]))
            car.append(-off.nearest)
            taus.append(float(t[peak]))
        s = _outer(profs)
        slices.append(s)
        carriers.append(tuple(car))
        meta_k.append(float(1.0 / np.prod([np.abs(_kernel_profile(sys, j, xi, t)).max() for j in range(sys.n)])))
        meta_tau.append(taus)
    # residuals come from the operator itself: kernel slices must annihilate them
    metadata = {
        "xi": [list(map(str, f)) for f in seq],
        "K": meta_k,
        "tau": meta_tau,
    }
    return _finish(sys, KERNEL_WITNESS, seq, slices, carriers, None, metadata)


BUMP_HALF_WIDTH = math.pi / 3


def _bump_raw(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
    return out


def _bump_mass():
    with mpmath.workdps(30):
        return float(mpmath.quad(lambda s: mpmath.exp(1 - 1 / (1 - s * s)), [-1, 0, 1]))


_BUMP_MASS = _bump_mass()
_GL_X, _GL_W = np.polynomial.legendre.leggauss(120)


def bump_function(center: float, half_width: float = BUMP_HALF_WIDTH):
    """Unit-mass ``C^inf`` bump ``exp(1 - 1/(1 - s^2))`` rescaled to ``[center - w, center + w]``."""
    scale = 1.0 / (half_width * _BUMP_MASS)

    def phi(t):
        return scale * _bump_raw((np.asarray(t, dtype=float) - center) / half_width)

    return phi


def bump_primitive(center: float, half_width: float = BUMP_HALF_WIDTH):
    """``t -> int_0^t phi`` for the bump of :func:`bump_function` (support inside ``(0, 2pi)``)."""

    def Phi(t):
        x = np.clip((np.asarray(t, dtype=float) - center) / half_width, -1.0, 1.0)
        # Gauss-Legendre on [-1, x] for each point
        mid = (x + 1) / 2
        nodes = -1 + mid[..., None] * (_GL_X + 1)
        return (mid[..., None] * _GL_W * _bump_raw(nodes)).sum(axis=-1) / _BUMP_MASS

    return Phi


def _third_farthest(t0):
    """Center of the third of ``(0, 2pi)`` farthest (circularly) from ``t0``."""
    centers = [math.pi / 3, math.pi, 5 * math.pi / 3]

    def dist(a):
        d = abs(a - t0) % (2 * math.pi)
        return min(d, 2 * math.pi - d)

    return max(centers, key=dist)


def _precondition_ok(sys, xi, ell):
    probe = min(ell, int(math.floor(math.log2(sup_norm(xi)))))
    worst = max(mode_offset(sys, j, xi).log_gap for j in range(sys.n))
    return worst < -probe * log_norm(xi), worst, -probe * log_norm(xi)


def precondition_subsequence(sys: SystemSpec, sequence) -> list:
    """Greedy subsequence whose ``l``-th element meets the ``l``-th precondition of :func:`mixed_witness`.

    Frequencies whose phase the grid cannot resolve are skipped.
    """
    out, last = [], 0
    for xi in sequence:
        xi = _as_freq(xi)
        norm = sup_norm(xi)
        if norm <= max(last, 1) or not resolvable(sys, xi):
            continue
        if _precondition_ok(sys, xi, len(out) + 1)[0]:
            out.append(xi)
            last = norm
    return out


def mixed_witness(sys: SystemSpec, bad_sequence) -> WitnessBundle:
    """Singular solution with smooth images from a sequence violating the GW estimate for the normal form.

    Per frequency and operator: a normalized kernel slice when ``M_j0`` is an
    integer, otherwise ``E (w + (1 - w) Phi)`` with
    ``E = exp(-i int_{t_l}^t M_j)``, ``w = exp(-2 pi i M_j0)`` and ``Phi`` the
    primitive of a bump supported away from the accumulation point of ``t_l``.
    Then ``i L_j`` of that slice is ``E (1 - w) phi``.
    """
    seq = [_as_freq(x) for x in bad_sequence]
    if len(seq) < 4:
        raise SequenceTooShort(f"{len(seq)} frequencies; at least 4 required")
    _check_increasing(seq)
    n, G = sys.n, sys.tolerances.grid_points
    t = t_grid(G)
    tol = sys.tolerances.integer_tol

    offsets, peaks = [], []
    for ell, xi in enumerate(seq, start=1):
        for j in range(n):
            _check_resolved(sys, j, xi, G)
        offs = [mode_offset(sys, j, xi) for j in range(n)]
        ok, worst, bound = _precondition_ok(sys, xi, ell)
        if not ok:
            raise PreconditionFailed(
                f"xi={sup_norm(xi)}: max_j log|1 - exp(-2 pi i M_j0)| = {worst:.3g} is not below {bound:.3g}")
        offsets.append(offs)
        peaks.append([int(np.argmax(_secular_imag(sys, j, xi, t, o))) for j, o in enumerate(offs)])

    # accumulation point per operator and the bump third avoiding it
    t0 = [float(t[peaks[-1][j]]) for j in range(n)]
    centers = [_third_farthest(a) for a in t0]
    keep = []
    for i in range(len(seq)):
        inside = any(abs(float(t[peaks[i][j]]) - centers[j]) < BUMP_HALF_WIDTH for j in range(n))
        if not inside:
            keep.append(i)
    if len(keep) < 4:
        raise SequenceTooShort(f"{len(keep)} frequencies left after discarding maxima inside the bump support")

    phis = [bump_function(cj) for cj in centers]
    prims = [bump_primitive(cj) for cj in centers]
    phi_grid = [ph(t) for ph in phis]
    Phi_grid = [pr(t) for pr in prims]

    slices, carriers, residual_slices = [], [], [[] for _ in range(n)]
    meta_cases, meta_t, meta_k = [], [], []
    for i in keep:
        xi = seq[i]
        profs, gs, cases, tls, ks = [], [], [], [], []
        for j in range(n):
            off = offsets[i][j]
            g = peaks[i][j]
            tl = float(t[g])
            if off.resonant(tol):
                prof = _kernel_profile(sys, j, xi, t)
                K = 1.0 / np.abs(prof).max()
                profs.append(K * prof)
                gs.append(np.zeros(G, dtype=complex))
                cases.append(1)
                ks.append(float(K))
            else:
                c = sys.coeffs[j]
                expo = -1j * off.delta * (t - tl)
                if not c.is_constant:
                    pi_t = c.periodic_integral(t)
                    expo = expo - 1j * _symbol(sys, j, xi) * (pi_t - pi_t[g])
                # exp(i m t_l) with t_l = 2 pi g / G, exact for huge m
                phase0 = np.exp(2j * np.pi * ((off.nearest * g) % G) / G)
                E = phase0 * np.exp(expo)
                omw = off.one_minus_w
                w = 1.0 - omw
                profs.append(E * (w + omw * Phi_grid[j]))
                gs.append(E * omw * phi_grid[j])
                cases.append(2)
                ks.append(1.0)
            tls.append(tl)
        slices.append(_outer(profs))
        carriers.append(tuple(-offsets[i][j].nearest for j in range(n)))
        for j in range(n):
            residual_slices[j].append(_outer([gs[k] if k == j else profs[k] for k in range(n)]))
        meta_cases.append(cases)
        meta_t.append(tls)
        meta_k.append(ks)

    chosen = [seq[i] for i in keep]
    metadata = {
        "xi": [list(map(str, f)) for f in chosen],
        "dropped": [list(map(str, seq[i])) for i in range(len(seq)) if i not in keep],
        "cases": meta_cases,
        "t": meta_t,
        "K": meta_k,
        "accumulation": t0,
        "bumpSupports": [[c - BUMP_HALF_WIDTH, c + BUMP_HALF_WIDTH] for c in centers],
        "logGap": [[offsets[i][j].log_gap for j in range(n)] for i in keep],
    }
    return _finish(sys, MIXED_WITNESS, chosen, slices, carriers, residual_slices, metadata)


def operator_residual_gap(sys: SystemSpec, bundle: WitnessBundle) -> list:
    """Max difference between the closed-form residuals and ``apply_operator`` on the field, per operator."""
    out = []
    for j in range(sys.n):
        numeric = apply_operator(j, sys, bundle.field)
        diffs = [float(np.abs(a - b).max()) for a, b in zip(numeric.slices, bundle.residuals[j].slices)]
        out.append(max(diffs) if diffs else 0.0)
    return out
