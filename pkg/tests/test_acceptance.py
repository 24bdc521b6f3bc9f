"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

Every check inside a criterion runs even after an earlier one fails, so the
printed line lists all misses.  Runtime limits are measured with
``time.perf_counter`` around the whole criterion.
"""

import math
import time
from contextlib import contextmanager
from fractions import Fraction

import numpy as np
import pytest

from ghtorus.conditions import POLY_BOUNDED, hl_membership, reduction_bound_check
from ghtorus.diophantine import SDA_FAILED, SDA_SATISFIED, irrationality_profile, liouville_constant
from ghtorus.errors import NyquistViolation
from ghtorus.fourier import DISTRIBUTION, SMOOTH, SpectralField, decay_fit, synthesize_lacunary, t_grid
from ghtorus.gw import GW_FAILS, gw_scan, homogeneous_classify, point_row, resonance_sets, single_operator_gh
from ghtorus.model import FreqWindow, evaluate_symbol_exact
from ghtorus.solver import (
    BACKWARD,
    FORWARD,
    NF_FORWARD,
    NF_INVERSE,
    apply_operator,
    kernel_witness,
    mixed_witness,
    mode_offset,
    normal_form_map,
    solve_mode,
)
from ghtorus.verdict import EXACT, GH, NOT_GH, classify, rule_full_reduction

from conftest import config, hermitian_trig, poly, system

# pinned limits
LIMIT_S = {1: 10, 2: 5, 3: 60, 4: 30, 5: 60, 6: 60, 7: 20, 8: 5}
QUAD_TOL = 1e-10
FIT_TOL = 0.15
FACTORIAL_FLOOR = tuple(math.factorial(k) * (1 - 1e-6) for k in range(1, 7))  # (1, 2, 6, 24, 120, 720)(1 - 1e-6)
QUADRATIC_RANGE = (1.9, 2.1)
PEAK_RANGE = (0.99, 1.01)


class Criterion:
    def __init__(self, number, title):
        self.number, self.title = number, title
        self.misses = []

    def check(self, ok, what):
        if not ok:
            self.misses.append(what)
        return ok


@contextmanager
def criterion(number, title, capsys):
    c = Criterion(number, title)
    start = time.perf_counter()
    try:
        yield c
    except Exception as exc:  # report the crash on the criterion line, then re-raise
        c.misses.append(f"raised {type(exc).__name__}: {exc}")
        _emit(c, time.perf_counter() - start, capsys)
        raise
    elapsed = time.perf_counter() - start
    c.check(elapsed < LIMIT_S[number], f"runtime {elapsed:.1f}s >= {LIMIT_S[number]}s")
    _emit(c, elapsed, capsys)
    assert not c.misses, "; ".join(c.misses)


def _emit(c, elapsed, capsys):
    status = "PASS" if not c.misses else "FAIL"
    detail = "" if not c.misses else " -- " + "; ".join(c.misses)
    with capsys.disabled():
        print(f"\n[{status}] criterion {c.number}: {c.title} ({elapsed:.2f}s){detail}")


def _brute_force_min(sys, xi, box=200):
    """max_j min_tau |tau + M_j0(xi)| by exhaustive search in exact arithmetic."""
    worst = Fraction(0)
    for j in range(sys.n):
        re, im = evaluate_symbol_exact(sys.symbols[j], (xi,))
        worst = max(worst, min((tau + re) ** 2 + im**2 for tau in range(-box, box + 1)))
    return math.sqrt(worst)


def test_criterion_1_parity_pair(capsys):
    with criterion(1, "parity-piecewise pair is GH although each operator fails", capsys) as c:
        sys = config("parity_pair").with_window(xi_max=2048)
        rep = gw_scan(sys)
        c.check(rep.min_value == 1.0, f"min ||L_hat|| = {rep.min_value} != 1")
        bad = [x for x in range(-64, 65) if point_row(sys, (x,)).min_over_tau != _brute_force_min(sys, x)]
        c.check(not bad, f"brute force disagrees at xi={bad[:5]}")
        c.check(resonance_sets(sys).intersection == (), "Z_1 and Z_2 intersect")
        v = classify(sys)
        c.check((v.outcome, v.certainty) == (GH, EXACT), f"verdict {v.outcome}/{v.certainty}")
        for j in range(2):
            trend = single_operator_gh(j, sys).verdict_trend
            c.check(trend == GW_FAILS, f"operator {j} alone: {trend}")


def _achieved_exponent(alpha, q):
    """Exponent e with |alpha - p/q| = q^-e for the nearest p, exact rational distance."""
    p = round(alpha * q)
    dist = abs(alpha - Fraction(p, q))
    if dist == 0:
        return math.inf
    log_dist = math.log10(dist.numerator) - math.log10(dist.denominator)
    return -log_dist / math.log10(q)


def test_criterion_2_liouville_machinery(capsys):
    with criterion(2, "Liouville profile at factorial convergents; quadratic irrationals", capsys) as c:
        L6 = liouville_constant(6)
        prof = irrationality_profile(L6, 40)
        c.check(prof.liouville_trend, "liouvilleTrend is false for L_6")
        samples = dict(prof.exponent_samples)
        for k, floor in zip(range(1, 7), FACTORIAL_FLOOR):
            q = 10 ** math.factorial(k)
            e = samples.get(q, _achieved_exponent(L6, q))
            c.check(e >= floor, f"q=10^{math.factorial(k)}: exponent {e:.4g} < {floor:.6g}")
        for name in ("phi", "sqrt(2)"):
            best = irrationality_profile(name, 40).best_exponent
            c.check(QUADRATIC_RANGE[0] <= best <= QUADRATIC_RANGE[1], f"{name} bestExponent {best}")


def test_criterion_3_homogeneous_pair(capsys):
    with criterion(3, "homogeneous pair separated by simultaneous approximation", capsys) as c:
        first = homogeneous_classify(config("homogeneous_badly_approximable"), q_budget=10**30)
        c.check(first.eta == 1, f"first eta={first.eta}")
        kinds = {k: v[1].verdict_trend if v[1] else v[0] for k, v in first.branch_verdicts.items()}
        c.check(all(x == SDA_FAILED for x in kinds.values()), f"first branches {kinds}")
        c.check(first.outcome == GH, f"first outcome {first.outcome}")
        second = homogeneous_classify(config("homogeneous_liouville_quartic"), q_budget=10**30)
        c.check(second.eta == 4, f"second eta={second.eta}")
        kinds = {k: v[1].verdict_trend if v[1] else v[0] for k, v in second.branch_verdicts.items()}
        c.check(any(x == SDA_SATISFIED for x in kinds.values()), f"second branches {kinds}")
        c.check(second.outcome == NOT_GH, f"second outcome {second.outcome}")


def _random_system(rng, n, grid, xi_max, imag_scale=0.05):
    coeffs = [hermitian_trig(rng, 2, mean=float(rng.uniform(0.6, 1.6)), scale=0.2, imag_scale=imag_scale)
              for _ in range(n)]
    slopes = ["sqrt(2)/4", "sqrt(3)/5", "sqrt(5)/7"]
    symbols = [poly((1, slopes[j], 0), (0, round(float(rng.uniform(-0.4, 0.4)), 3), 0)) for j in range(n)]
    return system(coeffs, symbols, window={"xiMax": xi_max}, tolerances={"gridPoints": grid})


def _random_rhs(rng, n, G):
    t = t_grid(G)
    out = np.ones((G,) * n, dtype=complex)
    for axis in range(n):
        prof = sum((rng.normal() + 1j * rng.normal()) * np.exp(1j * k * t) for k in range(-5, 6)) / 4
        shape = [1] * n
        shape[axis] = G
        out = out * prof.reshape(shape)
    return out


def test_criterion_4_solver_correctness(capsys, rng):
    with criterion(4, "100 random per-mode solves substitute back and variants agree", capsys) as c:
        G, worst_sub, worst_var, done = 256, 0.0, 0.0, 0
        while done < 100:
            n = 1 + done % 2
            sys = _random_system(rng, n, G, 32)
            j = int(rng.integers(n))
            xi = (int(rng.integers(-32, 33)),)
            if mode_offset(sys, j, xi).resonant(1e-6):
                continue
            f = _random_rhs(rng, n, G)
            u = solve_mode(j, sys, f, xi, variant=BACKWARD)
            w = solve_mode(j, sys, f, xi, variant=FORWARD)
            lu = apply_operator(j, sys, SpectralField(n, 1, G, (xi,), (u,))).slices[0]
            worst_sub = max(worst_sub, float(np.abs(lu - f).max()))
            worst_var = max(worst_var, float(np.abs(u - w).max()))
            done += 1
        c.check(worst_sub <= 10 * QUAD_TOL, f"substitution error {worst_sub:.3g}")
        c.check(worst_var <= 10 * QUAD_TOL, f"BACKWARD/FORWARD gap {worst_var:.3g}")


def _random_field(rng, sys, xi_max):
    t = t_grid(sys.tolerances.grid_points)
    freqs = tuple((x,) for x in range(-xi_max, xi_max + 1))
    slices = []
    for _ in freqs:
        s = np.ones((len(t),) * sys.n, dtype=complex)
        for axis in range(sys.n):
            prof = sum((rng.normal() + 1j * rng.normal()) * np.exp(1j * k * t) for k in range(-3, 4)) / 4
            shape = [1] * sys.n
            shape[axis] = len(t)
            s = s * prof.reshape(shape)
        slices.append(s)
    return SpectralField(sys.n, 1, len(t), freqs, tuple(slices))


def _log_system(rng, n, xi_max):
    coeffs = [hermitian_trig(rng, 2, mean=float(rng.uniform(0.6, 1.6)), scale=0.2, imag_scale=0.1) for _ in range(n)]
    symbols = [{"form": "log", "scale": round(float(rng.uniform(0.5, 1.5)), 3)} for _ in range(n)]
    return system(coeffs, symbols, window={"xiMax": xi_max})


def _resolved_forward(rng, sys, xi_max):
    """Random field and its forward image on the coarsest grid (from 256 up) that resolves the map."""
    for G in (256, 512, 1024, 2048, 4096):
        fine = sys.with_tolerances(grid_points=G)
        u = _random_field(rng, fine, xi_max)
        try:
            return fine, u, normal_form_map(fine, u, NF_FORWARD)
        except NyquistViolation:
            continue
    raise NyquistViolation("no grid up to 4096 points resolves the normal-form factor")


def test_criterion_5_conjugation_identity(capsys, rng):
    with criterion(5, "Psi conjugates each operator to its average on 20 random systems", capsys) as c:
        worst_conj, worst_trip, accepted, tried, grids = 0.0, 0.0, 0, 0, set()
        while accepted < 20 and tried < 200:
            tried += 1
            n = 1 + tried % 2
            sys = _log_system(rng, n, 256) if tried % 3 else _random_system(rng, n, 256, 256, imag_scale=0.0)
            if not all(reduction_bound_check(j, sys).trend == POLY_BOUNDED for j in range(n)):
                continue
            accepted += 1
            sys, u, fwd = _resolved_forward(rng, sys, 256 if n == 1 else 16)
            grids.add(sys.tolerances.grid_points)
            nf = sys.normal_form()
            back = normal_form_map(sys, fwd, NF_INVERSE)
            worst_trip = max(worst_trip, max(float(np.abs(a - b).max()) for a, b in zip(u.slices, back.slices)))
            for j in range(n):
                lhs = apply_operator(j, sys, fwd)
                rhs = normal_form_map(sys, apply_operator(j, nf, u), NF_FORWARD)
                err = max(float(np.abs(a - b).max()) for a, b in zip(lhs.slices, rhs.slices))
                worst_conj = max(worst_conj, err)
        c.check(accepted == 20, f"only {accepted} systems passed reduction_bound_check")
        c.check(worst_conj <= 10 * QUAD_TOL, f"conjugation error {worst_conj:.3g} (grids {sorted(grids)})")
        c.check(worst_trip <= 10 * QUAD_TOL, f"round-trip error {worst_trip:.3g} (grids {sorted(grids)})")


def test_criterion_6_witness_soundness(capsys):
    with criterion(6, "kernel and mixed witnesses are singular with smooth images", capsys) as c:
        sys = system([{"const": 1}], [poly((1, 1, 0))])
        k = kernel_witness(sys, [(2**m,) for m in range(1, 12)])
        res = max(float(r.sup_abs().max()) for r in k.residuals)
        c.check(res <= QUAD_TOL, f"kernel residual {res:.3g}")
        c.check(k.decay.classification == DISTRIBUTION, f"kernel field {k.decay.classification}")

        sys = system([{"const": 1}], [poly((1, "liouville(6)", 0))])
        seq = [(10 ** math.factorial(m),) for m in range(2, 6)]
        w = mixed_witness(sys, seq)
        kinds = [d.classification if d else None for d in w.residual_decay]
        c.check(all(x == SMOOTH for x in kinds), f"mixed residuals {kinds}")
        G = sys.tolerances.grid_points
        peaks = []
        for i in range(len(w.field)):
            g = int(round(w.metadata["t"][i][0] / (2 * math.pi) * G)) % G
            peaks.append(abs(complex(w.field.slices[i][g])))
        c.check(all(PEAK_RANGE[0] <= a <= PEAK_RANGE[1] for a in peaks), f"|u_hat(t_l, xi_l)| = {peaks}")


def test_criterion_7_hypothesis_checkers(capsys):
    with criterion(7, "H and L membership on the shipped configs; transfer to the averaged system", capsys) as c:
        sys = config("bump_hormander")
        m = hl_membership(0, sys)
        c.check(m.in_h and not m.in_l, f"bump_hormander inH={m.in_h} inL={m.in_l}")
        b_max = float(sys.coeffs[0].imag_values(t_grid(4 * sys.tolerances.grid_points)).max())
        c.check(m.theta_hat == pytest.approx(b_max, abs=1e-9), f"bump_hormander ThetaHat {m.theta_hat} != max b {b_max}")
        m = hl_membership(0, config("log_sign_changing"))
        c.check(m.in_l and m.clause == "i", f"log_sign_changing inL={m.in_l} clause={m.clause}")
        m = hl_membership(0, config("log_nonnegative"))
        c.check(m.in_l and m.clause == "ii", f"log_nonnegative inL={m.in_l} clause={m.clause}")
        sys = config("three_operators")
        members = [hl_membership(j, sys) for j in range(sys.n)]
        inside = [j + 1 for j, mm in enumerate(members) if mm.in_h or mm.in_l]
        c.check(inside == [1, 2, 3], f"three_operators H-or-L operators {inside}")
        v0 = classify(sys.normal_form())
        v = rule_full_reduction(sys, v0, [], members)
        c.check(v is not None and (v.outcome, v.rule) == (GH, "R5"), "three_operators full-reduction rule does not transfer")
        c.check(classify(sys).outcome == v0.outcome == GH, "three_operators verdict differs from its averaged system")


def _power_field(exponent):
    xs = [2**k + d for k in range(1, 12) for d in (0, 1)]
    return synthesize_lacunary([(x,) for x in xs], [float(x) ** exponent for x in xs], grid_points=8)


def test_criterion_8_decay_calibration(capsys):
    with criterion(8, "decay fit recovers known exponents and separates smooth from singular", capsys) as c:
        window = FreqWindow(xi_max=4096)
        for exponent in (-3.0, 0.0, 2.0):
            fitted = decay_fit(_power_field(exponent), window, fit_tol=FIT_TOL).fitted_exponent
            c.check(abs(fitted - exponent) <= FIT_TOL, f"exponent {exponent}: fitted {fitted}")
        xs = [2**k for k in range(1, 7)]
        smooth = synthesize_lacunary([(x,) for x in xs], [math.exp(-x) for x in xs], grid_points=8)
        kind = decay_fit(smooth, FreqWindow(xi_max=64), fit_tol=FIT_TOL).classification
        c.check(kind == SMOOTH, f"exp(-|xi|) classified {kind}")
        xs = [2**k for k in range(1, 12)]
        flat = synthesize_lacunary([(x,) for x in xs], [1.0] * len(xs), grid_points=8)
        kind = decay_fit(flat, FreqWindow(xi_max=2048), fit_tol=FIT_TOL).classification
        c.check(kind == DISTRIBUTION, f"unit lacunary series classified {kind}")
