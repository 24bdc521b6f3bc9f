import numpy as np
import pytest

from ghtorus.conditions import (
    BOUNDED,
    LOG,
    POLY_BOUNDED,
    SUPERLOG,
    UNBOUNDED,
    ImMField,
    growth_classify,
    hl_membership,
    hormander_check,
    reduction_bound_check,
)
from ghtorus.errors import InsufficientData
from ghtorus.fourier import t_grid
from ghtorus.model import FreqWindow

from conftest import config, poly, system

SHIPPED = ["bump_hormander", "log_sign_changing", "log_nonnegative", "three_operators", "variable_parity_pair"]
WINDOW = FreqWindow(xi_max=64)


def test_bump_hormander_hormander_not_log():
    sys = config("bump_hormander")
    m = hl_membership(0, sys)
    assert m.in_h and not m.in_l
    b_max = sys.coeffs[0].imag_values(t_grid(4 * sys.tolerances.grid_points)).max()
    assert b_max == pytest.approx(1.5, abs=1e-9)
    assert m.theta_hat == pytest.approx(b_max, abs=1e-9)


def test_linear_imaginary_part_unbounded():
    sys = system([{"imag": "sin(t)"}], [poly((1, 1, 0))], window={"xiMax": 64})
    rep = hormander_check(ImMField(0, sys))
    assert rep.trend == UNBOUNDED


def test_real_data_has_zero_imaginary_part():
    sys = system([{"real": "2 + cos(t)"}], [poly((1, 1, 0), (2, 0.5, 0))], window={"xiMax": 64})
    rep = hormander_check(ImMField(0, sys))
    assert rep.theta_hat == 0
    assert rep.trend == BOUNDED


def test_imm_field_scales_with_real_coefficients():
    base = system([{"real": "1 + cos(t)", "imag": "sin(2*t)"}], [poly((1, 0.3, 1))])
    scaled = system([{"real": "3*(1 + cos(t))", "imag": "3*sin(2*t)"}], [poly((1, 0.3, 1))])
    xis = np.arange(-8, 9)[:, None]
    assert np.max(np.abs(ImMField(0, scaled).values(xis) - 3 * ImMField(0, base).values(xis))) < 1e-12


def test_log_symbol_growth():
    sys = system([{"const": 1}], [{"form": "log", "scale": 1}])
    g = growth_classify(sys.symbols[0], "modulus", WINDOW)
    assert g.classification == LOG
    assert g.kappa_hat == pytest.approx(1.0, abs=0.15)


@pytest.mark.parametrize("symbol", [
    poly((1, 1, 0)),
    {"form": "expression", "order": 1, "expr": "log(1 + abs(xi))**2"},
])
def test_superlog_growth(symbol):
    sys = system([{"const": 1}], [symbol])
    assert growth_classify(sys.symbols[0], "modulus", WINDOW).classification == SUPERLOG


def test_growth_needs_three_levels():
    sys = system([{"const": 1}], [{"form": "log", "scale": 1}])
    with pytest.raises(InsufficientData):
        growth_classify(sys.symbols[0], "modulus", FreqWindow(xi_max=64, dyadic_levels=2))


def test_log_sign_changing_clause_i():
    m = hl_membership(0, config("log_sign_changing"))
    assert m.in_l and m.clause == "i"
    assert m.sign_changes["b"] == "CHANGES_SIGN" or m.sign_changes["a"] == "CHANGES_SIGN"


def test_log_nonnegative_clause_ii():
    m = hl_membership(0, config("log_nonnegative"))
    assert m.in_l and m.clause == "ii"
    assert m.sign_changes["a"] == "NONNEGATIVE"


def test_three_operators_all_in_h_or_l():
    sys = config("three_operators")
    members = [hl_membership(j, sys) for j in range(3)]
    assert all(m.in_h or m.in_l for m in members)


@pytest.mark.parametrize("name", SHIPPED)
def test_membership_stable_under_grid_refinement(name):
    sys = config(name)
    fine = sys.with_tolerances(grid_points=2 * sys.tolerances.grid_points)
    for j in range(sys.n):
        a, b = hl_membership(j, sys), hl_membership(j, fine)
        assert (a.in_h, a.in_l) == (b.in_h, b.in_l)


def test_constant_coefficients_poly_bounded():
    sys = system([{"const": {"re": 1, "im": 0.5}}], [poly((1, 1, 0), (2, 0, 1))], window={"xiMax": 64})
    rb = reduction_bound_check(0, sys)
    assert rb.trend == POLY_BOUNDED
    assert rb.fitted_kappa == pytest.approx(0.0, abs=1e-12)


def test_log_symbol_reduction_bounded():
    rb = reduction_bound_check(0, config("log_sign_changing"))
    assert rb.trend == POLY_BOUNDED


def test_exponential_reduction_unbounded():
    sys = system([{"imag": "1 + cos(t)"}], [poly((1, 1, 0))], window={"xiMax": 64})
    assert reduction_bound_check(0, sys).trend == UNBOUNDED


@pytest.mark.parametrize("name", SHIPPED)
def test_hormander_forces_bounded_reduction(name):
    sys = config(name)
    for j in range(sys.n):
        if hl_membership(j, sys).in_h:
            rb = reduction_bound_check(j, sys)
            assert rb.trend == POLY_BOUNDED
            assert rb.fitted_kappa <= sys.tolerances.fit_tol
