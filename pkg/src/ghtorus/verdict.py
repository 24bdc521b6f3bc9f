"""Rule engine deciding global hypoellipticity, and report serialization.

Rules run in a fixed order; the first one that applies decides.  Exact
obstructions come first, then the necessity of the averaged system, then the
trend-based sufficient conditions.

======  ===============================================================
R1      exact resonance: infinitely many common resonant frequencies
R2      constant coefficients: lattice lower bound of the symbol
R3      necessity: the averaged system must itself be hypoelliptic
R4      one averaged operator satisfies GW and lies in H or L
R5      all operators in H or L (or all symbols logarithmic): transfer
R6      homogeneous symbols: simultaneous Diophantine approximation
R7      differential case ``p_j(xi) = xi``: sign and Liouville criterion
======  ===============================================================
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction

from .conditions import LOG, NONNEGATIVE, NONPOSITIVE, growth_classify, hl_membership, sign_class
from .diophantine import SDA_FAILED, SDA_SATISFIED, sda_witness_search
from .errors import GhError, InsufficientData, ValidationError
from .fourier import t_grid
from .gw import (
    GW_FAILS,
    GW_HOLDS,
    GwScanReport,
    exact_resonance_certificate,
    gw_scan,
    homogeneous_classify,
    single_operator_gh,
)
from .model import FreqWindow, Homogeneous, LogGrowth, ParityPiecewise, Polynomial, SystemSpec, Tabulated
from .solver import WitnessBundle, kernel_witness, mixed_witness, precondition_subsequence, resolvable

GH = "GH"
NOT_GH = "NOT_GH"
INCONCLUSIVE = "INCONCLUSIVE"
EXACT = "EXACT"
TREND = "TREND"

CITATIONS = {
    "R1": "common resonance set is infinite; kernel elements at resonant frequencies give a singular solution",
    "R2": "constant coefficients: hypoelliptic iff the symbol obeys a polynomial lower bound on the lattice",
    "R3": "hypoellipticity of the system forces hypoellipticity of its averaged (normal) form",
    "R4": "one averaged operator is hypoelliptic and that operator lies in the Hormander or logarithmic class",
    "R5": "every operator lies in the Hormander or logarithmic class, so the system is conjugate to its averaged form",
    "R6": "homogeneous symbols: hypoelliptic iff real branches are neither rational nor simultaneously well approximable",
    "R7": "differential system: a sign-definite nonzero imaginary part, or a non-rational non-Liouville vector of real averages",
    "NONE": "no rule applies; the nearest failed hypothesis is named in the evidence",
}


@dataclass
class Verdict:
    outcome: str
    rule: str
    citation: str
    evidence: dict
    certainty: str
    window: FreqWindow
    chain: list = field(default_factory=list)

    def to_dict(self):
        return {
            "outcome": self.outcome,
            "rule": self.rule,
            "citation": self.citation,
            "certainty": self.certainty,
            "window": {"xiMax": self.window.xi_max, "tauMargin": self.window.tau_margin,
                       "dyadicLevels": self.window.dyadic_levels},
            "evidence": {k: _evidence_dict(v) for k, v in self.evidence.items()},
            "chain": list(self.chain),
        }


def _evidence_dict(v):
    if hasattr(v, "to_dict"):
        return v.to_dict()
    if isinstance(v, dict):
        return {str(k): _evidence_dict(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_evidence_dict(x) for x in v]
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if isinstance(v, (str, int, float, bool)) or v is None:
        return v
    return str(v)


def short_int(n: int) -> str:
    """Readable form of huge integers in chain messages (``10^720``, or leading digits and length)."""
    text = str(n)
    if len(text) <= 24:
        return text
    if text.strip("0") == "1":
        return f"10^{len(text) - 1}"
    return f"{text[:8]}...({len(text)} digits)"


def _verdict(sys, outcome, rule, evidence, certainty, chain):
    return Verdict(outcome, rule, CITATIONS[rule], evidence, certainty, sys.window, chain)


def _witness_checked(sys, bundle: WitnessBundle, rule, evidence, certainty, chain):
    """NOT_GH only if the witness passes its own invariants; otherwise INCONCLUSIVE."""
    evidence = dict(evidence, witness=bundle)
    bad = bundle.invariant_failures(sys.tolerances.quad_tol)
    if bad:
        evidence["witnessFailures"] = bad
        chain.append(f"{rule}: NOT_GH indicated but witness failed: {'; '.join(bad)}")
        return _verdict(sys, INCONCLUSIVE, rule, evidence, TREND, chain)
    return _verdict(sys, NOT_GH, rule, evidence, certainty, chain)


# --- R1 -------------------------------------------------------------------------


def resonant_members(cert, count=10, sys=None):
    """Dyadically spaced progression members, stopping before the grid of ``sys`` cannot resolve them."""
    xi0, D, e = cert["xi0"], cert["period"], cert["direction"]
    out, last = [], -1
    for i in range(count):
        xi = tuple(x + D * 2**i * d for x, d in zip(xi0, e))
        norm = max(abs(v) for v in xi)
        if sys is not None and not resolvable(sys, xi):
            break
        if norm > last:
            out.append(xi)
            last = norm
    return out


def rule_exact_resonance(sys: SystemSpec, chain):
    cert = exact_resonance_certificate(sys)
    if cert is None:
        chain.append("R1: no exact resonance progression found")
        return None
    chain.append(f"R1: resonance progression xi0={cert['xi0']} period={short_int(cert['period'])}")
    # the progression is itself an exact proof; a witness is attached only when it checks out
    evidence = {"certificate": cert}
    try:
        bundle = kernel_witness(sys, resonant_members(cert, sys=sys))
    except GhError as exc:
        chain.append(f"R1: no kernel witness attached ({type(exc).__name__}: {exc})")
        return _verdict(sys, NOT_GH, "R1", dict(evidence, witnessError=str(exc)), EXACT, chain)
    bad = bundle.invariant_failures(sys.tolerances.quad_tol)
    if bad:
        chain.append(f"R1: kernel witness failed its invariants ({'; '.join(bad)}); not attached")
        return _verdict(sys, NOT_GH, "R1", dict(evidence, witnessFailures=bad), EXACT, chain)
    return _verdict(sys, NOT_GH, "R1", dict(evidence, witness=bundle), EXACT, chain)


# --- R2 -------------------------------------------------------------------------


def _piece(sym, sign, parity):
    f = sym.form
    if isinstance(f, ParityPiecewise):
        return _piece(f.even if parity == 0 else f.odd, sign, parity)
    if isinstance(f, Tabulated):
        return _piece(f.tail, sign, parity)
    return sym


def _imag_floor(sys, j, sign, parity) -> bool:
    """Exact proof that ``|Im M_j0|`` stays away from 0 on a (sign, parity) class, up to finitely many points."""
    c0 = sys.coeffs[j].average_exact
    if c0 is None:
        return False
    cr, ci = c0
    f = _piece(sys.symbols[j], sign, parity).form
    if isinstance(f, Polynomial):
        total = {}
        for a, c in f.coeffs:
            ex = c.exact
            if ex is None:
                return False
            total[tuple(a)] = total.get(tuple(a), 0) + cr * ex[1] + ci * ex[0]
        # a nonzero rational polynomial in one variable has finitely many integer roots
        return any(v != 0 for v in total.values())
    if isinstance(f, Homogeneous):
        ex = (f.p_plus if sign > 0 else f.p_minus).exact
        return ex is not None and f.kappa >= 0 and cr * ex[1] + ci * ex[0] != 0
    if isinstance(f, LogGrowth):
        ex = f.scale.exact
        return ex is not None and cr * ex[1] + ci * ex[0] != 0
    return False


def imaginary_floor_certificate(sys: SystemSpec):
    """Per (sign, parity) class, an operator whose averaged symbol has an exact nonvanishing imaginary part."""
    if sys.N != 1 or not sys.is_constant:
        return None
    out = {}
    for sign in (1, -1):
        for parity in (0, 1):
            js = [j for j in range(sys.n) if _imag_floor(sys, j, sign, parity)]
            if not js:
                return None
            out[f"{'+' if sign > 0 else '-'}{'even' if parity == 0 else 'odd'}"] = js[0]
    return out


def _is_homogeneous(sys):
    return sys.N == 1 and all(isinstance(s.form, Homogeneous) for s in sys.symbols)


def _mixed_from_scan(sys, scan: GwScanReport, rule, evidence, chain):
    seq = precondition_subsequence(sys, scan.witness_candidates())
    try:
        bundle = mixed_witness(sys, seq)
    except GhError as exc:
        chain.append(f"{rule}: GW fails but no mixed witness ({type(exc).__name__}: {exc})")
        return _verdict(sys, INCONCLUSIVE, rule, dict(evidence, witnessError=str(exc)), TREND, chain)
    return _witness_checked(sys, bundle, rule, evidence, TREND, chain)


def rule_constant(sys: SystemSpec, chain):
    scan = gw_scan(sys)
    evidence = {"scan": scan}
    cert = imaginary_floor_certificate(sys)
    if cert is not None:
        chain.append("R2: exact nonvanishing imaginary part on every sign/parity class")
        return _verdict(sys, GH, "R2", dict(evidence, certificate=cert), EXACT, chain)
    chain.append(f"R2: scan {scan.verdict_trend}")
    if scan.verdict_trend == GW_FAILS:
        return _mixed_from_scan(sys, scan, "R2", evidence, chain)
    if _is_homogeneous(sys):
        chain.append("R2: homogeneous symbols; a finite window cannot decide, deferring to R6")
        return None
    if scan.verdict_trend == GW_HOLDS:
        return _verdict(sys, GH, "R2", evidence, TREND, chain)
    return _verdict(sys, INCONCLUSIVE, "R2", evidence, TREND, chain)


# --- R6 -------------------------------------------------------------------------


def rule_homogeneous(sys: SystemSpec, chain):
    if not (_is_homogeneous(sys) and sys.is_constant):
        return None
    try:
        prof = homogeneous_classify(sys)
    except GhError as exc:
        chain.append(f"R6: homogeneous analysis failed ({exc})")
        return None
    chain.append(f"R6: branches {prof.to_dict()['branches']}")
    out = prof.outcome
    if out == GH:
        return _verdict(sys, GH, "R6", {"homogeneous": prof}, TREND, chain)
    if out == NOT_GH:
        seq = []
        for b, (kind, wit) in prof.branch_verdicts.items():
            # with kappa = 1/eta, alpha |q|^kappa is near an integer exactly when alpha^eta is near p^eta / q
            if wit is not None and wit.verdict_trend == SDA_SATISFIED and prof.kappa.numerator == 1:
                sign = 1 if b == "+" else -1
                seq = [(sign * s.q,) for s in wit.sequence]
                break
        try:
            bundle = mixed_witness(sys, precondition_subsequence(sys, seq))
        except GhError as exc:
            chain.append(f"R6: NOT_GH indicated but no witness ({exc})")
            return _verdict(sys, INCONCLUSIVE, "R6", {"homogeneous": prof}, TREND, chain)
        return _witness_checked(sys, bundle, "R6", {"homogeneous": prof}, TREND, chain)
    return _verdict(sys, INCONCLUSIVE, "R6", {"homogeneous": prof}, TREND, chain)


# --- R3 .. R5 -------------------------------------------------------------------


def rule_normal_form(sys: SystemSpec, v0: Verdict, chain):
    if v0.outcome != NOT_GH:
        chain.append(f"R3: averaged system {v0.outcome} via {v0.rule}")
        return None
    scan = v0.evidence.get("scan") or gw_scan(sys.normal_form())
    return _mixed_from_scan(sys, scan, "R3", {"normalForm": v0}, chain)


def rule_single_operator(sys: SystemSpec, chain, memberships):
    for j in range(sys.n):
        scan = single_operator_gh(j, sys)
        if scan.verdict_trend != GW_HOLDS:
            continue
        m = memberships[j]
        if m.in_h or m.in_l:
            chain.append(f"R4: operator {j} averaged GW holds, inH={m.in_h}, inL={m.in_l}")
            return _verdict(sys, GH, "R4", {"operator": j, "scan": scan, "membership": m}, TREND, chain)
    chain.append("R4: no operator with a hypoelliptic average inside H or L")
    return None


def all_symbols_log(sys: SystemSpec) -> bool:
    w = sys.window
    if w.dyadic_levels < 3:
        w = FreqWindow(w.xi_max, w.tau_margin, 3)
    try:
        return all(growth_classify(s, "modulus", w, sys.N).classification == LOG for s in sys.symbols)
    except InsufficientData:
        return False


def rule_full_reduction(sys: SystemSpec, v0: Verdict, chain, memberships):
    """Transfer the averaged system's verdict when every operator is in H or L, or all symbols are logarithmic."""
    in_hl = [m.in_h or m.in_l for m in memberships]
    logs = all_symbols_log(sys)
    if not (all(in_hl) or logs):
        chain.append(f"R5: operators outside H or L: {[j for j, ok in enumerate(in_hl) if not ok]}")
        return None
    chain.append(f"R5: {'all in H or L' if all(in_hl) else 'all symbols logarithmic'}; transferring {v0.outcome}")
    ev = {"normalForm": v0, "memberships": {str(j): m for j, m in enumerate(memberships)}, "allLog": logs}
    if v0.outcome == GH:
        return _verdict(sys, GH, "R5", ev, TREND, chain)
    return _verdict(sys, INCONCLUSIVE, "R5", ev, TREND, chain)


# --- R7 -------------------------------------------------------------------------


def _is_differential(sys):
    if sys.N != 1:
        return False
    for s in sys.symbols:
        f = s.form
        if not isinstance(f, Polynomial) or len(f.coeffs) != 1:
            return False
        a, c = f.coeffs[0]
        if tuple(a) != (1,) or c.exact != (1, 0):
            return False
    return True


def _real_average(c):
    """``a_j0`` as something the Diophantine search accepts, or None."""
    if c.trig is None:
        return None
    zero = [v for k, v in c.trig.terms if k == 0]
    if not zero:
        return Fraction(0)
    if len(zero) == 1:
        return zero[0].re.exact if zero[0].re.exact is not None else zero[0].re
    ex = c.average_exact
    return ex[0] if ex is not None else None


def rule_differential(sys: SystemSpec, chain):
    if not _is_differential(sys):
        return None
    fine = t_grid(4 * sys.tolerances.grid_points)
    tol = sys.tolerances.quad_tol
    signs = []
    for c in sys.coeffs:
        b = c.imag_values(fine)
        signs.append("ZERO" if abs(b).max() <= tol else sign_class(b, tol))
    ev = {"imagSigns": signs}
    if any(s in (NONNEGATIVE, NONPOSITIVE) for s in signs):
        chain.append("R7: some b_j is nonzero and does not change sign")
        return _verdict(sys, GH, "R7", ev, TREND, chain)
    J = [j for j, s in enumerate(signs) if s == "ZERO"]
    if not J:
        chain.append("R7: every b_j changes sign; the criterion says NOT_GH but no witness is built for it")
        return _verdict(sys, INCONCLUSIVE, "R7", dict(ev, indicated=NOT_GH), TREND, chain)
    avgs = [_real_average(sys.coeffs[j]) for j in J]
    if any(a is None for a in avgs):
        chain.append("R7: real averages not available symbolically")
        return _verdict(sys, INCONCLUSIVE, "R7", ev, TREND, chain)
    if all(isinstance(a, Fraction) for a in avgs):
        chain.append("R7: the vector of real averages is rational")
        return _verdict(sys, INCONCLUSIVE, "R7", dict(ev, indicated=NOT_GH, rational=True), TREND, chain)
    wit = sda_witness_search(avgs, 1, 10**30)
    ev["liouville"] = wit.verdict_trend
    if wit.verdict_trend == SDA_FAILED:
        chain.append("R7: real averages are neither rational nor Liouville at desk scale")
        return _verdict(sys, GH, "R7", ev, TREND, chain)
    chain.append(f"R7: Liouville search {wit.verdict_trend}")
    return _verdict(sys, INCONCLUSIVE, "R7", dict(ev, indicated=NOT_GH if wit.verdict_trend == SDA_SATISFIED else None),
                    TREND, chain)


# --- engine ------------------------------------------------------------------------


def classify(sys: SystemSpec) -> Verdict:
    """Apply R1..R7 in order; the first applicable rule decides."""
    chain = []
    v = rule_exact_resonance(sys, chain)
    if v is not None:
        return v
    if sys.is_constant:
        v = rule_constant(sys, chain) or rule_homogeneous(sys, chain) or rule_differential(sys, chain)
        return v or _verdict(sys, INCONCLUSIVE, "NONE", {}, TREND, chain)

    v0 = classify(sys.normal_form())
    v = rule_normal_form(sys, v0, chain)
    if v is not None:
        return v
    memberships = [hl_membership(j, sys) for j in range(sys.n)]
    v = (rule_single_operator(sys, chain, memberships)
         or rule_full_reduction(sys, v0, chain, memberships)
         or rule_differential(sys, chain))
    if v is not None:
        return v
    ev = {"normalForm": v0, "memberships": {str(j): m for j, m in enumerate(memberships)}}
    return _verdict(sys, INCONCLUSIVE, "NONE", ev, TREND, chain)


# --- reports ------------------------------------------------------------------------


def _json_text(v: Verdict) -> str:
    return json.dumps(v.to_dict(), indent=2, sort_keys=True, default=str) + "\n"


def _find(v: Verdict, kind):
    for item in v.evidence.values():
        if isinstance(item, kind):
            return item
        if isinstance(item, Verdict):
            found = _find(item, kind)
            if found is not None:
                return found
    return None


def scan_csv(scan: GwScanReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["xi", "norm", "min_over_tau", "tau"])
    for r in scan.per_xi:
        w.writerow([" ".join(map(str, r.xi)), max((abs(x) for x in r.xi), default=0), repr(r.min_over_tau),
                    " ".join(map(str, r.tau))])
    return buf.getvalue()


def witness_csv(bundle: WitnessBundle) -> str:
    """Per-frequency decay table of a witness: field and residual sup norms with shell exponents."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    nres = len(bundle.residuals)
    w.writerow(["xi", "norm", "shell", "field_sup", "field_shell_exponent"]
               + [f"residual_{j}_sup" for j in range(nres)])
    env = dict(bundle.decay.shell_exponents) if bundle.decay else {}
    amps = bundle.field.sup_abs()
    res = [r.sup_abs() for r in bundle.residuals]
    for i, f in enumerate(bundle.field.frequencies):
        norm = max(abs(x) for x in f)
        k = norm.bit_length() - 1
        m = env.get(k, "")
        w.writerow([" ".join(map(str, f)), norm, k, repr(float(amps[i])), repr(m) if m != "" else ""]
                   + [repr(float(r[i])) for r in res])
    return buf.getvalue()


def _text(v: Verdict) -> str:
    lines = [
        f"outcome:   {v.outcome}",
        f"rule:      {v.rule}",
        f"certainty: {v.certainty}",
        f"window:    xiMax={v.window.xi_max} dyadicLevels={v.window.dyadic_levels}",
        f"reason:    {v.citation}",
        "chain:",
    ]
    lines += [f"  - {c}" for c in v.chain]
    nested = v.evidence.get("normalForm")
    if isinstance(nested, Verdict):
        lines.append(f"averaged system: {nested.outcome} via {nested.rule} ({nested.citation})")
    return "\n".join(lines) + "\n"


def emit_report(v: Verdict, fmt: str = "json", out_dir=None):
    """Serialize deterministically.

    ``json`` and ``text`` return a string; ``csv-bundle`` returns a dict of
    file name to content (``verdict.json`` plus ``scan.csv``/``witness.csv``
    when the evidence has them).  With ``out_dir`` the files are written too.
    """
    if fmt == "json":
        files = {"verdict.json": _json_text(v)}
        result = files["verdict.json"]
    elif fmt == "text":
        files = {"verdict.txt": _text(v)}
        result = files["verdict.txt"]
    elif fmt in ("csv", "csv-bundle"):
        files = {"verdict.json": _json_text(v)}
        scan = _find(v, GwScanReport)
        if scan is not None:
            files["scan.csv"] = scan_csv(scan)
        bundle = _find(v, WitnessBundle)
        if bundle is not None:
            files["witness.csv"] = witness_csv(bundle)
        result = files
    else:
        raise ValidationError("format", f"unknown format {fmt!r}")
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        for name, text in files.items():
            with open(os.path.join(out_dir, name), "w") as fh:
                fh.write(text)
    return result
