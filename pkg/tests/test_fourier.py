import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ghtorus.errors import InsufficientData, LengthMismatch, NyquistViolation, ValidationError
from ghtorus.fourier import (
    DISTRIBUTION,
    SMOOTH,
    SpectralField,
    decay_fit,
    derivative_log_amplitude,
    inverse_partial_fourier,
    partial_fourier,
    synthesize_lacunary,
    t_derivative,
    t_grid,
)
from ghtorus.model import FreqWindow

G = 32
WINDOW = FreqWindow(xi_max=8)


def _grid(Gx=32):
    t = t_grid(G)
    x = 2 * np.pi * np.arange(Gx) / Gx
    return np.meshgrid(t, x, indexing="ij")


def test_single_mode():
    T, X = _grid()
    f = partial_fourier(np.exp(3j * X), WINDOW, 1)
    for xi, s in zip(f.frequencies, f.slices):
        if xi == (3,):
            assert np.max(np.abs(s - 1)) < 1e-12
        else:
            assert np.max(np.abs(s)) <= 1e-12


def test_separable_mode():
    T, X = _grid()
    f = partial_fourier(np.sin(T) * np.exp(2j * X), WINDOW, 1)
    assert np.max(np.abs(f.slice((2,)) - np.sin(t_grid(G)))) < 1e-12


def _band_limited(rng, Gx=32):
    hat = np.zeros((G, Gx), dtype=complex)
    for k in range(-5, 6):
        for xi in range(-WINDOW.xi_max, WINDOW.xi_max + 1):
            hat[k % G, xi % Gx] = rng.normal() + 1j * rng.normal()
    return np.fft.ifft2(hat) * G * Gx


def test_round_trip(rng):
    u = _band_limited(rng)
    back = inverse_partial_fourier(partial_fourier(u, WINDOW, 1), 32)
    assert np.max(np.abs(back - u)) <= 1e-10 * np.max(np.abs(u))


def test_parseval(rng):
    u = _band_limited(rng)
    f = partial_fourier(u, WINDOW, 1)
    grid_l2 = np.mean(np.abs(u) ** 2)
    mode_l2 = sum(np.mean(np.abs(s) ** 2) for s in f.slices)
    assert abs(grid_l2 - mode_l2) <= 1e-10 * grid_l2


def test_linearity_on_random_pairs(rng):
    for _ in range(10):
        u, v = _band_limited(rng), _band_limited(rng)
        a = complex(rng.normal(), rng.normal())
        lhs = partial_fourier(u + a * v, WINDOW, 1)
        fu, fv = partial_fourier(u, WINDOW, 1), partial_fourier(v, WINDOW, 1)
        for s, su, sv in zip(lhs.slices, fu.slices, fv.slices):
            assert np.max(np.abs(s - su - a * sv)) < 1e-10


def test_nyquist():
    T, X = _grid(16)
    with pytest.raises(NyquistViolation):
        partial_fourier(np.exp(1j * X), WINDOW, 1)


def test_non_power_of_two_rejected():
    with pytest.raises(ValidationError):
        partial_fourier(np.zeros((G, 24)), FreqWindow(xi_max=4), 1)


def test_spectral_derivative():
    t = t_grid(64)
    s = np.exp(np.sin(t))
    d = t_derivative(s, (1,))
    assert np.max(np.abs(d - np.cos(t) * s)) < 1e-12
    # carrier k contributes through (d/dt + ik)
    d2 = t_derivative(s, (1,), (5,))
    assert np.max(np.abs(d2 - (np.cos(t) + 5j) * s)) < 1e-11


def test_huge_carrier_log_amplitude():
    s = np.ones(16, dtype=complex)
    k = 10**100
    got = derivative_log_amplitude(s, (2,), (k,))
    assert got == pytest.approx(2 * 100 * math.log(10), rel=1e-14)


def test_plane_wave_field():
    f = synthesize_lacunary([(2,)], [1.0], grid_points=8, carriers=[(3,)])
    full = f.full_slice(0)
    assert np.max(np.abs(full - np.exp(3j * t_grid(8)))) < 1e-14


def test_lacunary_requires_increasing_norms():
    with pytest.raises(ValidationError):
        synthesize_lacunary([(4,), (2,)], [1, 1])
    with pytest.raises(LengthMismatch):
        synthesize_lacunary([(1,), (2,)], [1])


def test_empty_field_has_no_decay():
    f = SpectralField(1, 1, 8, (), ())
    assert len(f) == 0
    with pytest.raises(InsufficientData):
        decay_fit(f, WINDOW)


def _power_field(exponent, top=2**12):
    xs = [2**k + j for k in range(1, 12) for j in (0, 1)]
    xs = [x for x in xs if x <= top]
    return synthesize_lacunary([(x,) for x in xs], [float(x) ** exponent for x in xs], grid_points=8)


def test_exponential_decay_is_smooth():
    xs = [2**k for k in range(1, 7)]
    f = synthesize_lacunary([(x,) for x in xs], [math.exp(-x) for x in xs], grid_points=8)
    assert decay_fit(f, FreqWindow(xi_max=64)).classification == SMOOTH


def test_unit_slices_are_distributions():
    xs = [2**k for k in range(1, 12)]
    f = synthesize_lacunary([(x,) for x in xs], [1.0] * len(xs), grid_points=8)
    rep = decay_fit(f, FreqWindow(xi_max=2048))
    assert rep.classification == DISTRIBUTION
    assert abs(rep.fitted_exponent) <= 0.15


def test_quadratic_growth_exponent():
    rep = decay_fit(_power_field(2.0), FreqWindow(xi_max=4096))
    assert rep.classification == DISTRIBUTION
    assert rep.fitted_exponent == pytest.approx(2.0, abs=0.15)


@settings(max_examples=25, deadline=None)
@given(st.floats(min_value=-3, max_value=3), st.floats(min_value=-2, max_value=2))
def test_scaling_shifts_fitted_exponent(base, shift):
    window = FreqWindow(xi_max=4096)
    a = decay_fit(_power_field(base), window).fitted_exponent
    b = decay_fit(_power_field(base + shift), window).fitted_exponent
    assert b - a == pytest.approx(shift, abs=0.15)
