import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from scipy import integrate, special

from ghtorus.errors import ValidationError
from ghtorus.fourier import t_grid
from ghtorus.model import (
    CoeffSpec,
    coeff_average,
    coeff_primitive,
    evaluate_symbol,
    evaluate_symbol_exact,
    symbol_values,
    validate_system,
    window_points,
)

from conftest import CONFIGS, config, poly, raw_config, system


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.json")), ids=lambda p: p.stem)
def test_shipped_configs_validate(path):
    sys = config(path.stem)
    assert sys.n >= 1 and sys.N >= 1


def test_parity_symbol_values():
    sys = config("parity_pair")
    assert evaluate_symbol(sys.symbols[0], 3) == 3
    assert evaluate_symbol(sys.symbols[1], 3) == 1j
    assert evaluate_symbol(sys.symbols[0], 4) == 1j
    assert evaluate_symbol(sys.symbols[1], 4) == 4


def test_homogeneous_identity():
    sys = system([{"const": 1}], [{"form": "homogeneous", "kappa": "1", "pPlus": "sqrt(2)", "pMinus": "sqrt(2)"}])
    assert evaluate_symbol(sys.symbols[0], -4) == pytest.approx(4 * math.sqrt(2), rel=1e-15)


def test_log_symbol_against_mpmath():
    sys = system([{"const": 1}], [{"form": "log", "scale": 1}])
    expected = float(mpmath.log(mpmath.mpf(10)))
    assert evaluate_symbol(sys.symbols[0], 9) == pytest.approx(expected, rel=1e-15)


def test_homogeneous_exact_rational_power():
    sys = system([{"const": 1}], [{"form": "homogeneous", "kappa": "1/2", "pPlus": 2, "pMinus": 3}])
    assert evaluate_symbol_exact(sys.symbols[0], 9) == (Fraction(6), Fraction(0))
    assert evaluate_symbol_exact(sys.symbols[0], -4) == (Fraction(6), Fraction(0))
    assert evaluate_symbol_exact(sys.symbols[0], 2) is None


def test_homogeneity_ratio_over_window():
    sys = system([{"const": 1}], [{"form": "homogeneous", "kappa": "3/2", "pPlus": "sqrt(3)", "pMinus": 1}],
                 window={"xiMax": 64})
    s = sys.symbols[0]
    xs = np.arange(1, 65)
    vals = symbol_values(s, xs[:, None])
    ratio = vals / xs**1.5
    assert np.max(np.abs(ratio - math.sqrt(3))) <= 1e-12 * math.sqrt(3)


@pytest.mark.parametrize("name", ["parity_pair", "log_sign_changing", "log_nonnegative", "three_operators", "half_slope"])
def test_symbol_bound_holds_on_window(name):
    sys = config(name)
    pts = window_points(sys.N, sys.window.xi_max)
    norms = np.abs(pts).max(axis=1).astype(float)
    keep = norms >= 1
    for s in sys.symbols:
        vals = np.abs(symbol_values(s, pts[keep]))
        assert np.all(vals <= s.bound_constant * norms[keep] ** s.order * (1 + 1e-12))


def test_declared_bound_violation_rejected():
    with pytest.raises(ValidationError, match="boundConstant"):
        system([{"const": 1}], [dict(poly((2, 1, 0)), order=1, boundConstant=1)])


@pytest.mark.parametrize("coeff,expected", [
    ({"real": "2 + sin(t)"}, 2),
    ({"real": "1 + cos(t)", "imag": "3*sin(t)"}, 1),
    ({"trig": [{"k": 0, "re": 2}, {"k": 1, "im": -0.5}, {"k": -1, "im": 0.5}]}, 2),
])
def test_averages_of_zero_mean_oscillations(coeff, expected):
    sys = system([coeff], [poly((1, 1, 0))])
    assert coeff_average(sys.coeffs[0]) == pytest.approx(expected, abs=1e-14)


def test_sampled_average_matches_bessel():
    sys = system([{"real": "exp(cos(t))"}], [poly((1, 1, 0))])
    oracle, _ = integrate.quad(lambda s: math.exp(math.cos(s)), 0, 2 * math.pi, epsabs=1e-14)
    assert coeff_average(sys.coeffs[0]).real == pytest.approx(oracle / (2 * math.pi), abs=1e-12)
    assert coeff_average(sys.coeffs[0]).real == pytest.approx(special.i0(1.0), abs=1e-12)


def test_average_equals_grid_mean():
    sys = config("three_operators")
    t = t_grid(sys.tolerances.grid_points)
    for c in sys.coeffs:
        assert abs(coeff_average(c) - c.values(t).mean()) <= sys.tolerances.quad_tol


def test_primitives_textbook():
    A, B = coeff_primitive(CoeffSpec.from_terms({0: 1, 1: 0.5, -1: 0.5}))
    t = t_grid(64)
    assert np.max(np.abs(A(t) - np.sin(t))) < 1e-14
    A5, B5 = coeff_primitive(CoeffSpec.constant(5))
    assert np.all(A5(t) == 0) and np.all(B5(t) == 0)


def test_sampled_primitive_against_adaptive_quadrature():
    sys = system([{"real": "exp(cos(t))"}], [poly((1, 1, 0))])
    c = sys.coeffs[0]
    a0 = special.i0(1.0)
    oracle, _ = integrate.quad(lambda s: math.exp(math.cos(s)) - a0, 0, math.pi / 2, epsabs=1e-14)
    A, _ = coeff_primitive(c)
    assert abs(A(np.array([math.pi / 2]))[0] - oracle) <= sys.tolerances.quad_tol


@pytest.mark.parametrize("name", ["bump_hormander", "log_nonnegative", "three_operators"])
def test_primitive_periodicity(name):
    sys = config(name)
    t = t_grid(sys.tolerances.grid_points)
    for c in sys.coeffs:
        A, B = coeff_primitive(c)
        assert np.max(np.abs(A(t + 2 * np.pi) - A(t))) <= sys.tolerances.quad_tol
        assert np.max(np.abs(B(t + 2 * np.pi) - B(t))) <= sys.tolerances.quad_tol


def test_normal_form_replaces_coefficients_by_averages():
    sys = config("three_operators")
    nf = sys.normal_form()
    assert nf.is_constant
    for c, c0 in zip(sys.coeffs, nf.coeffs):
        assert coeff_average(c0) == pytest.approx(coeff_average(c), abs=1e-14)


def test_window_points_count_and_order():
    pts = window_points(2, 3)
    assert len(pts) == 49
    norms = np.abs(pts).max(axis=1)
    assert list(norms) == sorted(norms)


def test_parity_pair_shape():
    sys = config("parity_pair")
    assert (sys.n, sys.N) == (2, 1)


@pytest.mark.parametrize("mutate,match", [
    (lambda r: r.update(symbols=r["symbols"][:1]), "symbols"),
    (lambda r: r.update(tolerances={"gridPoints": 100}), "gridPoints"),
    (lambda r: r.update(n=0), "n"),
    (lambda r: r["symbols"][0].update(form="spline"), "form"),
    (lambda r: r.update(window={"dyadicLevels": 1}), "dyadicLevels"),
])
def test_validation_errors(mutate, match):
    raw = raw_config("parity_pair")
    mutate(raw)
    with pytest.raises(ValidationError, match=match):
        validate_system(raw)


def test_symbol_count_message():
    raw = raw_config("parity_pair")
    raw["symbols"] = raw["symbols"][:1]
    with pytest.raises(ValidationError) as exc:
        validate_system(raw)
    assert str(exc.value) == "symbols: expected 2"


def test_expression_sandbox_rejects_attributes():
    with pytest.raises(ValidationError):
        system([{"real": "t.__class__"}], [poly((1, 1, 0))])
