"""Partial Fourier fields on ``T^n x Z^N`` and the dyadic decay probe.

A :class:`SpectralField` holds, for each active frequency ``xi``, the slice
``u_hat(t, xi)`` sampled on the uniform ``t``-grid.  Each slice may carry an
integer *carrier* ``k`` in ``Z^n``: the represented function is then
``slice(t) * exp(i k.t)``.  Carriers let slices that oscillate far beyond the
grid's Nyquist limit (huge ``xi``) be stored and differentiated exactly.

Frequencies are tuples of Python ints, so norms as large as ``10**720`` are
fine.  Every "faster than any polynomial" decision in the package goes
through :func:`super_polynomial_probe`.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientData, LengthMismatch, NyquistViolation, ValidationError
from .model import FreqWindow

SMOOTH = "SMOOTH_TREND"
DISTRIBUTION = "DISTRIBUTION_TREND"
GROWTH_VIOLATION = "GROWTH_VIOLATION"

DERIVATIVE_NOTE = "t-derivatives checked up to total order {order} only"


def t_grid(grid_points: int) -> np.ndarray:
    return 2 * np.pi * np.arange(grid_points) / grid_points


def sup_norm(xi) -> int:
    return max((abs(int(v)) for v in xi), default=0)


def log_norm(xi) -> float:
    """``log ||xi||`` for arbitrarily large integer vectors (``-inf`` at 0)."""
    m = sup_norm(xi)
    return math.log(m) if m else -math.inf


def shell_index(xi) -> int:
    """Dyadic shell ``k`` with ``2^k <= ||xi|| < 2^(k+1)`` (``-1`` for ``xi = 0``)."""
    return sup_norm(xi).bit_length() - 1


def _as_freq(xi):
    if isinstance(xi, (int, np.integer)):
        return (int(xi),)
    return tuple(int(v) for v in xi)


@dataclass(frozen=True, eq=False)
class SpectralField:
    n: int
    N: int
    grid_points: int
    frequencies: tuple
    slices: tuple
    carriers: tuple = ()
    tags: dict = field(default_factory=dict)

    def __post_init__(self):
        freqs = tuple(_as_freq(f) for f in self.frequencies)
        object.__setattr__(self, "frequencies", freqs)
        if len(set(freqs)) != len(freqs):
            raise ValidationError("activeFrequencies", "duplicates")
        if len(self.slices) != len(freqs):
            raise LengthMismatch(f"{len(self.slices)} slices for {len(freqs)} frequencies")
        shape = (self.grid_points,) * self.n
        sl = []
        for s in self.slices:
            a = np.array(s, dtype=complex)
            if a.shape != shape:
                raise ValidationError("slices", f"shape {a.shape}, expected {shape}")
            a.setflags(write=False)
            sl.append(a)
        object.__setattr__(self, "slices", tuple(sl))
        car = self.carriers or tuple((0,) * self.n for _ in freqs)
        car = tuple(tuple(int(v) for v in c) for c in car)
        if len(car) != len(freqs) or any(len(c) != self.n for c in car):
            raise LengthMismatch("carriers do not match frequencies")
        object.__setattr__(self, "carriers", car)
        for f in freqs:
            if len(f) != self.N:
                raise ValidationError("activeFrequencies", f"expected {self.N} components")

    def __len__(self):
        return len(self.frequencies)

    @property
    def index(self):
        return {f: i for i, f in enumerate(self.frequencies)}

    def slice(self, xi):
        return self.slices[self.index[_as_freq(xi)]]

    def full_slice(self, i):
        """Slice ``i`` with its carrier multiplied in (only safe for small carriers)."""
        s = self.slices[i]
        k = self.carriers[i]
        if not any(k):
            return s
        return s * _carrier_wave(k, self.grid_points)

    def sup_abs(self) -> np.ndarray:
        return np.array([float(np.abs(s).max()) if s.size else 0.0 for s in self.slices])

    def map_slices(self, fn, **tags):
        out = [fn(i, s) for i, s in enumerate(self.slices)]
        return SpectralField(self.n, self.N, self.grid_points, self.frequencies, tuple(out), self.carriers, {**self.tags, **tags})

    def compatible(self, other) -> bool:
        return (self.n, self.N, self.grid_points, self.frequencies, self.carriers) == (
            other.n, other.N, other.grid_points, other.frequencies, other.carriers)

    def __add__(self, other):
        if not self.compatible(other):
            raise ValidationError("field", "incompatible fields")
        return self.map_slices(lambda i, s: s + other.slices[i])

    def scaled(self, factor):
        return self.map_slices(lambda i, s: factor * s)


def _carrier_wave(k, G):
    """``exp(i k.t)`` on the grid, exact for huge ``k`` (only ``k mod G`` matters)."""
    axes = [np.exp(2j * np.pi * ((int(kj) % G) * np.arange(G) % G) / G) for kj in k]
    out = axes[0]
    for a in axes[1:]:
        out = np.multiply.outer(out, a)
    return out


def _wavenumbers(G):
    return np.fft.fftfreq(G, 1.0 / G)


def t_derivative(slice_, alpha, carrier=None):
    """Spectral ``d^alpha/dt^alpha`` of ``slice * exp(i carrier.t)``, returned without the carrier.

    The carrier contributes ``(i k_j)`` factors applied in float; for huge
    ``k_j`` the result may overflow to ``inf`` as a genuine magnitude.
    """
    s = np.asarray(slice_, dtype=complex)
    carrier = carrier or (0,) * s.ndim
    for axis, order in enumerate(alpha):
        if not order:
            continue
        G = s.shape[axis]
        kk = _wavenumbers(G)
        if G % 2 == 0:
            kk = kk.copy()
            kk[G // 2] = 0.0  # odd derivatives of the Nyquist mode are ambiguous
        shape = [1] * s.ndim
        shape[axis] = G
        shift = float(carrier[axis])
        hat = np.fft.fft(s, axis=axis)
        with np.errstate(over="ignore", invalid="ignore"):
            hat = hat * ((1j * (kk + shift)) ** order).reshape(shape)
        s = np.fft.ifft(hat, axis=axis)
    return s


_HUGE_CARRIER = 2**60


def derivative_log_amplitude(slice_, alpha, carrier=None) -> float:
    """``log max_t |d^alpha (slice * e^{ik.t})|``, computed in log space when carriers are huge.

    Along an axis with ``|k_j|`` far beyond the grid bandwidth the carrier
    factor ``(i k_j)^alpha_j`` dominates every other term of the Leibniz sum.
    """
    carrier = carrier or (0,) * np.ndim(slice_)
    huge = [j for j, a in enumerate(alpha) if a and abs(int(carrier[j])) > _HUGE_CARRIER]
    if not huge:
        return _log_amp(np.abs(t_derivative(slice_, alpha, carrier)).max())
    rest = tuple(0 if j in huge else a for j, a in enumerate(alpha))
    small = tuple(0 if j in huge else int(c) for j, c in enumerate(carrier))
    base = _log_amp(np.abs(t_derivative(slice_, rest, small)).max())
    if base == -math.inf:
        return base
    return base + sum(alpha[j] * math.log(abs(int(carrier[j]))) for j in huge)


def derivative_multi_indices(n, order):
    return [a for a in itertools.product(range(order + 1), repeat=n) if sum(a) <= order]


# --- partial Fourier transform ---------------------------------------------


def partial_fourier(samples, window: FreqWindow, n: int) -> SpectralField:
    """x-Fourier coefficients ``u_hat(t, xi) = (2pi)^-N int e^{-ix.xi} u(t, x) dx``.

    ``samples`` has shape ``(G,)*n + (Gx,)*N``; every axis a power of two.
    """
    u = np.asarray(samples, dtype=complex)
    N = u.ndim - n
    if N < 1 or n < 1:
        raise ValidationError("samples", "need at least one t and one x axis")
    for size in u.shape:
        if size & (size - 1):
            raise ValidationError("gridPoints", "power of two required")
    G = u.shape[0]
    if any(s != G for s in u.shape[:n]):
        raise ValidationError("samples", "t axes must share one grid size")
    Gx = u.shape[n]
    if window.xi_max >= Gx // 2:
        raise NyquistViolation(f"xiMax={window.xi_max} needs an x-grid larger than {Gx}")
    x_axes = tuple(range(n, n + N))
    hat = np.fft.fftn(u, axes=x_axes) / Gx**N
    from .model import window_points

    pts = window_points(N, window.xi_max)
    slices = [hat[(Ellipsis,) + tuple(int(v) % Gx for v in p)] for p in pts]
    return SpectralField(n, N, G, tuple(map(tuple, pts.tolist())), tuple(slices))


def inverse_partial_fourier(field: SpectralField, x_points: int) -> np.ndarray:
    """Grid values ``sum_xi u_hat(t, xi) e^{ix.xi}`` on a ``(G,)*n + (x_points,)*N`` grid."""
    if any(2 * sup_norm(f) >= x_points for f in field.frequencies):
        raise NyquistViolation(f"x-grid of {x_points} points cannot hold the field's frequencies")
    shape = (field.grid_points,) * field.n + (x_points,) * field.N
    hat = np.zeros(shape, dtype=complex)
    for i, f in enumerate(field.frequencies):
        hat[(Ellipsis,) + tuple(v % x_points for v in f)] += field.full_slice(i)
    return np.fft.ifftn(hat, axes=tuple(range(field.n, field.n + field.N))) * x_points**field.N


def synthesize_lacunary(frequencies, amplitudes, n=1, grid_points=256, carriers=None, N=None) -> SpectralField:
    """Field supported exactly on ``frequencies`` (strictly increasing norms)."""
    frequencies = [_as_freq(f) for f in frequencies]
    if len(frequencies) != len(amplitudes):
        raise LengthMismatch(f"{len(frequencies)} frequencies, {len(amplitudes)} amplitudes")
    norms = [sup_norm(f) for f in frequencies]
    if any(b <= a for a, b in zip(norms, norms[1:])):
        raise ValidationError("frequencies", "norms must be strictly increasing")
    if N is None:
        N = len(frequencies[0]) if frequencies else 1
    shape = (grid_points,) * n
    slices = [np.broadcast_to(np.asarray(a, dtype=complex), shape) for a in amplitudes]
    return SpectralField(n, N, grid_points, tuple(frequencies), tuple(slices), tuple(carriers or ()))


# --- dyadic probe -------------------------------------------------------------


def shell_exponents(norm_logs, amp_logs, shells):
    """Pointwise-exponent envelope ``M_k = max_shell log(amp)/log||xi||`` for shells ``k >= 1``.

    Returns a list of ``(k, M_k)`` sorted by ``k``; zero amplitudes give ``-inf``.
    """
    env = {}
    for ln, la, k in zip(norm_logs, amp_logs, shells):
        if k < 1:
            continue
        e = la / ln if la != -math.inf else -math.inf
        if math.isnan(e):
            continue
        if k not in env or e > env[k]:
            env[k] = e
    return sorted(env.items())


def super_polynomial_probe(shell_exps, levels, fit_tol) -> bool:
    """True when the last shells' exponents drop by at least ``1 - fit_tol`` per shell and end negative."""
    last = shell_exps[-max(levels, 3):]
    if len(last) < 3:
        return False
    for (_, a), (_, b) in zip(last, last[1:]):
        if b == -math.inf:
            continue
        if a - b < 1 - fit_tol:
            return False
    return last[-1][1] < 0


def _shell_weighted_fit(norm_logs, amp_logs, shells):
    """Least squares of ``log amp`` on ``log||xi||``, each shell carrying equal total weight."""
    pts = [(x, y, k) for x, y, k in zip(norm_logs, amp_logs, shells) if k >= 0 and math.isfinite(y)]
    if not pts:
        return -math.inf, 0.0
    counts = {}
    for _, _, k in pts:
        counts[k] = counts.get(k, 0) + 1
    if len(counts) < 2:
        return math.nan, 0.0
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    w = np.array([1.0 / counts[p[2]] for p in pts])
    xm = np.sum(w * x) / w.sum()
    ym = np.sum(w * y) / w.sum()
    sxx = np.sum(w * (x - xm) ** 2)
    slope = float(np.sum(w * (x - xm) * (y - ym)) / sxx) if sxx > 0 else math.nan
    res = y - (ym + slope * (x - xm))
    rms = float(np.sqrt(np.sum(w * res**2) / w.sum()))
    return slope, rms


@dataclass(frozen=True)
class DecayReport:
    fitted_exponent: float
    per_derivative_exponents: dict
    classification: str
    residual: float
    shell_exponents: tuple = ()
    derivative_probes: dict = field(default_factory=dict)
    derivative_order: int = 2
    note: str = ""

    def to_dict(self):
        return {
            "fittedExponent": _jsonable(self.fitted_exponent),
            "perDerivativeExponents": {",".join(map(str, k)): _jsonable(v) for k, v in self.per_derivative_exponents.items()},
            "classification": self.classification,
            "residual": _jsonable(self.residual),
            "shellExponents": [[k, _jsonable(m)] for k, m in self.shell_exponents],
            "note": self.note,
        }


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def _log_amp(a):
    a = float(a)
    if not a > 0:
        return -math.inf
    if math.isinf(a):
        return math.inf
    return math.log(a)


def decay_profile(norm_logs, amp_logs, shells, window: FreqWindow, fit_tol):
    """Shared core: (fitted exponent, residual, shell exponents, probe verdict)."""
    exps = shell_exponents(norm_logs, amp_logs, shells)
    slope, rms = _shell_weighted_fit(norm_logs, amp_logs, shells)
    return slope, rms, exps, super_polynomial_probe(exps, window.dyadic_levels, fit_tol)


def decay_fit(field: SpectralField, window: FreqWindow, fit_tol: float = 0.15, derivative_order: int = 2) -> DecayReport:
    """Classify the decay of ``max_t |d^alpha u_hat(., xi)|`` across dyadic shells.

    SMOOTH_TREND needs the probe to hold for the slices and for every
    t-derivative up to ``derivative_order``.  Otherwise the data are
    DISTRIBUTION_TREND, unless the power-law fit leaves an RMS residual above
    ``fit_tol`` (GROWTH_VIOLATION).
    """
    nz = [i for i, f in enumerate(field.frequencies) if sup_norm(f) >= 1]
    populated = {shell_index(field.frequencies[i]) for i in nz}
    if len(populated) < 2:
        raise InsufficientData(f"{len(populated)} populated dyadic shell(s); need at least 2")
    norm_logs = [log_norm(field.frequencies[i]) for i in nz]
    shells = [shell_index(field.frequencies[i]) for i in nz]

    per_alpha, probes, main = {}, {}, None
    for alpha in derivative_multi_indices(field.n, derivative_order):
        amps = [derivative_log_amplitude(field.slices[i], alpha, field.carriers[i]) for i in nz]
        slope, rms, exps, ok = decay_profile(norm_logs, amps, shells, window, fit_tol)
        per_alpha[alpha] = slope
        probes[alpha] = ok
        if not any(alpha):
            main = (slope, rms, exps, ok)
    slope, rms, exps, ok = main
    if ok and all(probes.values()):
        cls = SMOOTH
    elif rms > fit_tol:
        cls = GROWTH_VIOLATION
    else:
        cls = DISTRIBUTION
    return DecayReport(slope, per_alpha, cls, rms, tuple(exps), probes, derivative_order,
                       DERIVATIVE_NOTE.format(order=derivative_order))


def export_decay_csv(field: SpectralField, report: DecayReport, path):
    """Rows of ``(||xi||, max_t|u_hat|, shell exponent)``."""
    env = dict(report.shell_exponents)
    amps = field.sup_abs()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["norm", "max_abs", "shell_exponent"])
        for f, a in zip(field.frequencies, amps):
            m = env.get(shell_index(f), "")
            w.writerow([sup_norm(f), repr(float(a)), repr(m) if m != "" else ""])
