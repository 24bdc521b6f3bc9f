"""Continued fractions, irrationality profiles and simultaneous approximation.

Inputs are either exact (``Fraction``/int) or expressions that can be
re-evaluated at any precision (:class:`ghtorus.expr.Real` or strings such as
``"root(3/2, 4)*liouville(4)"``).  Errors ``|alpha - p/q|`` are always
computed exactly or at a precision that scales with ``log10 q``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath

from .errors import BudgetExceeded, EmptySearch, PrecisionExhausted, ValidationError
from .expr import Real, exact_power

MAX_DPS = 60000
LIOUVILLE_DIGIT_BUDGET = 10**6


def liouville_constant(terms: int) -> Fraction:
    """Exact truncation ``sum_{k=1}^{terms} 10^{-k!}``."""
    if not isinstance(terms, int) or terms < 1:
        raise ValidationError("terms", "integer >= 1 required")
    if math.factorial(terms) > LIOUVILLE_DIGIT_BUDGET:
        raise BudgetExceeded(f"10^-{terms}! exceeds the digit budget {LIOUVILLE_DIGIT_BUDGET}")
    top = math.factorial(terms)
    return Fraction(sum(10 ** (top - math.factorial(k)) for k in range(1, terms + 1)), 10**top)


def log_abs(x) -> float:
    """Natural log of ``|x|`` for Fractions/ints/mpf of any size (``-inf`` for zero)."""
    if isinstance(x, Fraction):
        if x == 0:
            return -math.inf
        return math.log(abs(x.numerator)) - math.log(x.denominator)
    if isinstance(x, int):
        return math.log(abs(x)) if x else -math.inf
    x = mpmath.mpf(abs(x)) if not isinstance(x, mpmath.mpc) else abs(x)
    return -math.inf if x == 0 else float(mpmath.log(x))


class _Value:
    """An exact rational or a re-evaluable real."""

    def __init__(self, alpha):
        self.fixed = None
        self.real = None
        if isinstance(alpha, bool):
            raise ValidationError("alpha", "number expected")
        if isinstance(alpha, (int, Fraction)):
            self.exact = Fraction(alpha)
            return
        if isinstance(alpha, mpmath.mpf):
            self.fixed = alpha
            self.exact = None
            return
        if hasattr(alpha, "mp") and hasattr(alpha, "exact") and not isinstance(alpha, Real):
            # any re-evaluable source, e.g. a powered irrational
            self.real = alpha
            self.exact = alpha.exact
            return
        self.real = Real.of(alpha, "alpha")
        self.exact = self.real.exact

    def mp(self, dps):
        if self.exact is not None:
            with mpmath.workdps(dps):
                return mpmath.mpf(self.exact.numerator) / self.exact.denominator
        if self.real is not None:
            return self.real.mp(dps)
        return self.fixed

    @property
    def available_dps(self):
        if self.fixed is not None:
            return mpmath.mp.dps
        return MAX_DPS

    def error(self, p, q, dps):
        """``|alpha - p/q|`` exactly when possible."""
        if self.exact is not None:
            return abs(self.exact - Fraction(p, q))
        with mpmath.workdps(dps):
            return abs(self.mp(dps) - mpmath.mpf(p) / q)


# --- continued fractions -------------------------------------------------------


@dataclass(frozen=True)
class ContinuedFraction:
    partial_quotients: tuple
    convergents: tuple  # ((p_k, q_k), ...)
    terminated: bool = False

    def check(self):
        """Fundamental recurrence ``p_k q_{k-1} - p_{k-1} q_k = +-1`` and increasing ``q_k``."""
        cs = self.convergents
        for (p0, q0), (p1, q1) in zip(cs, cs[1:]):
            if abs(p1 * q0 - p0 * q1) != 1:
                return False
            if q1 < q0 or (q1 == q0 and q0 != 1):
                return False
        return True


def _convergents(quotients):
    p0, q0, p1, q1 = 1, 0, quotients[0], 1
    out = [(p1, q1)]
    for a in quotients[1:]:
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        out.append((p1, q1))
    return out


def _cf_exact(x: Fraction, depth):
    out = []
    while len(out) < depth:
        a = x.numerator // x.denominator
        out.append(a)
        if x == a:
            return out, True
        x = 1 / (x - a)
    return out, False


def _cf_interval(lo: Fraction, hi: Fraction, depth):
    """Quotients shared by every number in ``[lo, hi]``."""
    out = []
    while len(out) < depth:
        a, b = lo.numerator // lo.denominator, hi.numerator // hi.denominator
        if a != b or lo == a:
            return out
        out.append(a)
        lo, hi = 1 / (hi - a), 1 / (lo - a)
    return out


def _to_fraction(x) -> Fraction:
    m, e = mpmath.frexp(x)
    m = int(mpmath.ldexp(m, mpmath.mp.prec))
    return Fraction(m) * Fraction(2) ** (int(e) - mpmath.mp.prec)


def continued_fraction(alpha, depth: int) -> ContinuedFraction:
    """First ``depth`` partial quotients and convergents of ``alpha``.

    Exact inputs are expanded with integer arithmetic.  Other inputs are
    enclosed in an interval whose width shrinks as precision doubles; a
    quotient is emitted only once both interval ends agree on it.
    """
    if depth < 1:
        raise ValidationError("depth", "positive integer required")
    v = alpha if isinstance(alpha, _Value) else _Value(alpha)
    if v.exact is not None:
        qs, done = _cf_exact(v.exact, depth)
        return ContinuedFraction(tuple(qs), tuple(_convergents(qs)), done)
    dps = max(50, 4 * depth)
    while True:
        if dps > v.available_dps:
            raise PrecisionExhausted(f"need more than {v.available_dps} digits for {depth} quotients")
        with mpmath.workdps(dps + 10):
            x = v.mp(dps + 10)
            center = _to_fraction(x)
            delta = Fraction(1, 10 ** (dps - 2)) * max(1, abs(center))
        qs = _cf_interval(center - delta, center + delta, depth)
        if len(qs) >= depth:
            return ContinuedFraction(tuple(qs), tuple(_convergents(qs)), False)
        if dps >= MAX_DPS:
            raise PrecisionExhausted(f"{depth} quotients not certified at {MAX_DPS} digits")
        dps = min(2 * dps, MAX_DPS)


# --- irrationality profile ------------------------------------------------------


@dataclass(frozen=True)
class DiophantineProfile:
    exponent_samples: tuple  # ((q, exponent), ...)
    liouville_trend: bool
    best_exponent: float
    rational: bool = False
    convergents: tuple = ()
    record_exponents: tuple = ()


def achieved_exponent(err, q) -> float:
    """``-log|alpha - p/q| / log q`` (``inf`` for an exact hit)."""
    le = log_abs(err)
    if le == -math.inf:
        return math.inf
    return -le / math.log(q)


def _records(samples):
    best, out = -math.inf, []
    for q, e in samples:
        if math.isfinite(e) and e > best:
            best = e
            out.append((q, e))
    return out


def irrationality_profile(alpha, depth: int, threshold: float = 5.0) -> DiophantineProfile:
    """Exponent samples ``-log|alpha - p_k/q_k| / log q_k`` along the convergents.

    ``liouville_trend`` holds when the running-record exponents keep
    increasing (at least three records, one of them inside the last third of
    the samples) and the last record exceeds ``threshold``.
    """
    v = _Value(alpha)
    cf = continued_fraction(v, depth)
    samples = []
    for p, q in cf.convergents:
        if q < 2:
            continue
        dps = int(2 * math.log10(q)) + 40
        samples.append((q, achieved_exponent(v.error(p, q, dps), q)))
    finite = [(q, e) for q, e in samples if math.isfinite(e)]
    third = max(1, math.ceil(len(finite) / 3))
    tail = finite[-third:]
    best = max((e for _, e in tail), default=math.nan)
    recs = _records(finite)
    tail_qs = {q for q, _ in tail}
    trend = (
        len(recs) >= 3
        and recs[-1][1] > threshold
        and recs[-1][0] in tail_qs
    )
    return DiophantineProfile(
        tuple(samples), bool(trend), best, cf.terminated, cf.convergents, tuple(recs)
    )


# --- (SDA)_eta search ---------------------------------------------------------


SDA_SATISFIED = "SDA_SATISFIED_TREND"
SDA_FAILED = "SDA_FAILED_TREND"
SDA_INCONCLUSIVE = "INCONCLUSIVE"

SDA_SCOPE_NOTE = "finite samples cannot separate 'for all l' from 'for many l'; verdicts are trends"


@dataclass(frozen=True)
class SdaSample:
    p: tuple
    q: int
    max_error: object  # Fraction or mpf
    implied_exponent: float


@dataclass(frozen=True)
class SdaWitness:
    eta: int
    sequence: tuple
    verdict_trend: str
    records: tuple = ()
    scope_note: str = SDA_SCOPE_NOTE


class _Powered:
    """``alpha**eta`` evaluated exactly when rational, else at any precision."""

    def __init__(self, alpha, eta):
        self.base = _Value(alpha)
        self.eta = eta
        self.exact = None
        if self.base.exact is not None:
            self.exact = self.base.exact**eta
        elif self.base.real is not None:
            self.exact = exact_power(self.base.real, eta)

    def mp(self, dps):
        if self.exact is not None:
            with mpmath.workdps(dps):
                return mpmath.mpf(self.exact.numerator) / self.exact.denominator
        with mpmath.workdps(dps):
            return self.base.mp(dps) ** self.eta

    def error(self, p, q, dps):
        num = p**self.eta
        if self.exact is not None:
            return abs(self.exact - Fraction(num, q))
        with mpmath.workdps(dps):
            return abs(self.mp(dps) - mpmath.mpf(num) / q)


def _numerators(base_vals, q, eta, dps):
    with mpmath.workdps(dps):
        root = mpmath.root(mpmath.mpf(q), eta)
        return [int(mpmath.nint(b * root)) for b in base_vals]


def _best_numerator(pw, guess, q, dps):
    best = None
    for cand in (guess - 1, guess, guess + 1):
        err = pw.error(cand, q, dps)
        if best is None or err < best[1]:
            best = (cand, err)
    return best


def _sample(pws, base_vals, q, eta, dps):
    guesses = _numerators(base_vals, q, eta, dps)
    ps, errs = [], []
    for pw, g in zip(pws, guesses):
        p, e = _best_numerator(pw, g, q, dps)
        ps.append(p)
        errs.append(e)
    worst = max(errs)
    return SdaSample(tuple(ps), q, worst, achieved_exponent(worst, q))


def sda_witness_search(alpha, eta: int, q_budget: int, l_max: int = 5, depth: int = 80, small_d: int = 64) -> SdaWitness:
    """Search common denominators ``q`` with small ``max_j |alpha_j^eta - p_j^eta / q|``.

    Candidates: ``q = d^eta`` for small ``d`` and for convergent denominators
    ``d`` of each ``alpha_j``; and ``q = mu^eta r^(eta-1) s`` for convergents
    ``r/s`` of each ``alpha_j^eta`` with ``mu = 1..4``.
    """
    if eta < 1:
        raise ValidationError("eta", "positive integer required")
    alpha = list(alpha)
    if not alpha:
        raise ValidationError("alpha", "non-empty vector required")
    values = [_Value(a) for a in alpha]
    q_budget = int(q_budget)
    if all(v.exact is not None for v in values) and max(v.exact.denominator for v in values) <= q_budget:
        # a rational vector whose denominators exceed the budget looks irrational to the search
        raise ValidationError("alpha", "all components are rational with denominators inside qBudget")
    dps = int(2 * eta * math.log10(max(q_budget, 10))) + 40
    pws = [_Powered(a, eta) for a in alpha]
    base_vals = [v.mp(dps) for v in values]

    cands = set()
    d_cap = _int_root_floor(q_budget, eta)
    for d in range(1, min(small_d, d_cap) + 1):
        cands.add(d**eta)
    for v in values:
        if v.exact is not None:
            continue
        for _, d in convergents_up_to(v, d_cap, depth):
            if 1 <= d <= d_cap:
                cands.add(d**eta)
    for pw in pws:
        for r, s in convergents_up_to(_Value(pw), q_budget, depth):
            if r <= 0 or s <= 0:
                continue
            for mu in range(1, 5):
                q = mu**eta * r ** (eta - 1) * s
                if q <= q_budget:
                    cands.add(q)
    cands.discard(0)
    cands = sorted(c for c in cands if c >= 2)
    if not cands:
        raise EmptySearch(f"no candidate denominator <= {q_budget}")
    seq = [_sample(pws, base_vals, q, eta, dps) for q in cands]
    return SdaWitness(eta, tuple(seq), *_sda_verdict(seq, l_max))


def _sda_verdict(seq, l_max):
    samples = [(s.q, s.implied_exponent) for s in seq]
    recs = _records(samples)
    finite = [e for _, e in samples if math.isfinite(e)]
    if len(recs) >= 3 and recs[-1][1] > l_max and all(b[1] > a[1] for a, b in zip(recs, recs[1:])):
        return SDA_SATISFIED, tuple(recs)
    if finite and max(finite) <= l_max:
        return SDA_FAILED, tuple(recs)
    return SDA_INCONCLUSIVE, tuple(recs)


def convergents_up_to(v, q_cap, depth):
    """Convergents with denominator ``<= q_cap`` (stops early when precision runs out)."""
    v = v if isinstance(v, _Value) else _Value(v)
    step = 16
    got = []
    while True:
        try:
            cf = continued_fraction(v, step)
        except PrecisionExhausted:
            return got
        conv = list(cf.convergents)
        got = [(p, q) for p, q in conv if q <= q_cap]
        if cf.terminated or conv[-1][1] > q_cap or step >= depth:
            return got
        step = min(2 * step, depth)


def _int_root_floor(n, k):
    """``floor(n ** (1/k))`` by integer Newton iteration."""
    if n < 1:
        return 0
    if k == 1:
        return n
    r = 1 << -(-n.bit_length() // k)  # upper bound
    while True:
        nxt = ((k - 1) * r + n // r ** (k - 1)) // k
        if nxt >= r:
            break
        r = nxt
    while r**k > n:
        r -= 1
    while (r + 1) ** k <= n:
        r += 1
    return r


# --- reports ---------------------------------------------------------------------


def _num_text(x):
    """Readable value of an exact or mp error: a float when representable, else ``1e-NNN`` form."""
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    lg = log_abs(x)
    if lg == -math.inf:
        return "0"
    if lg > -700:
        return repr(float(x))
    exp10 = lg / math.log(10)
    e = math.floor(exp10)
    return f"{10 ** (exp10 - e):.6f}e{e}"


def profile_csv(profile: DiophantineProfile) -> str:
    """One row per convergent: ``q``, ``maxError`` and ``impliedExponent``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["q", "maxError", "impliedExponent"])
    for q, e in profile.exponent_samples:
        w.writerow([q, _profile_error_text(q, e), repr(e)])
    return buf.getvalue()


def _profile_error_text(q, e):
    if e == math.inf:
        return "0"
    lg10 = -e * math.log10(q)
    k = math.floor(lg10)
    return f"{10 ** (lg10 - k):.6f}e{k}"


def sda_csv(witness: SdaWitness) -> str:
    """One row per candidate denominator: ``q``, ``maxError`` and ``impliedExponent``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["q", "maxError", "impliedExponent"])
    for s in witness.sequence:
        w.writerow([s.q, _num_text(s.max_error), repr(s.implied_exponent)])
    return buf.getvalue()


def profile_dict(profile: DiophantineProfile) -> dict:
    def fin(x):
        return x if math.isfinite(x) else str(x)

    return {
        "liouvilleTrend": profile.liouville_trend,
        "bestExponent": fin(profile.best_exponent),
        "rational": profile.rational,
        "samples": [{"q": str(q), "exponent": fin(e)} for q, e in profile.exponent_samples],
        "records": [{"q": str(q), "exponent": fin(e)} for q, e in profile.record_exponents],
    }


def sda_dict(witness: SdaWitness) -> dict:
    return {
        "eta": witness.eta,
        "verdictTrend": witness.verdict_trend,
        "records": [{"q": str(q), "exponent": e} for q, e in witness.records],
        "samples": len(witness.sequence),
        "scopeNote": witness.scope_note,
    }
