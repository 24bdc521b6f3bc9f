"""Small expression languages used by config files and the CLI.

Two flavours share one safe ``ast`` walker:

* number expressions (``"3/7"``, ``"sqrt(2)"``, ``"root(3/2, 4)*liouville(4)"``)
  evaluate to an exact :class:`~fractions.Fraction` whenever every step is
  rational, and to an ``mpmath`` value at any requested precision otherwise;
* array expressions in ``t`` or ``xi`` (``"1 + 0.5*cos(t)"``,
  ``"where(xi > 0, I*xi, 1)"``) compile to numpy callables.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath
import numpy as np

from .errors import ValidationError


class NotExact(Exception):
    """Raised internally when an exact evaluation path hits an irrational step."""


_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.Mod, ast.BitAnd, ast.BitOr)
_NUMBER_FUNCS = {"sqrt", "root", "log", "exp", "liouville", "abs"}
_NUMBER_CONSTS = {"pi", "e", "phi"}


def _parse(text, where):
    if not isinstance(text, str) or not text.strip():
        raise ValidationError(where, "empty expression")
    try:
        return ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ValidationError(where, f"cannot parse {text!r}: {exc.msg}") from None


def _as_fraction(value):
    if isinstance(value, bool):
        raise ValidationError("", "booleans are not numbers")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValidationError("", f"non-finite number {value}")
        # decimal literal, not the binary double: 0.1 means 1/10
        return Fraction(repr(value))
    if isinstance(value, Fraction):
        return value
    raise TypeError(value)


def _iroot(n, k):
    """Exact integer k-th root of n >= 0, or None."""
    if n < 0:
        return None
    if n < 2:
        return n
    r = int(round(n ** (1.0 / k))) if n.bit_length() < 1000 else None
    if r is None:
        r = int(mpmath.nthroot(mpmath.mpf(n), k, prec=n.bit_length() + 64))
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand**k == n:
            return cand
    return None


def _exact_power(base: Fraction, expo: Fraction) -> Fraction:
    if expo.denominator == 1:
        if base == 0 and expo < 0:
            raise ValidationError("", "zero to a negative power")
        return base ** int(expo)
    k = expo.denominator
    if base < 0:
        if k % 2 == 0:
            raise NotExact
        return -_exact_power(-base, expo)
    num = _iroot(base.numerator, k)
    den = _iroot(base.denominator, k)
    if num is None or den is None:
        raise NotExact
    return Fraction(num, den) ** expo.numerator


def _exact(node):
    if isinstance(node, ast.Expression):
        return _exact(node.body)
    if isinstance(node, ast.Constant):
        return _as_fraction(node.value)
    if isinstance(node, ast.UnaryOp):
        v = _exact(node.operand)
        if isinstance(node.op, ast.USub):
            return -v
        if isinstance(node.op, ast.UAdd):
            return v
    if isinstance(node, ast.BinOp) and isinstance(node.op, _BINOPS[:5]):
        a, b = _exact(node.left), _exact(node.right)
        if isinstance(node.op, ast.Add):
            return a + b
        if isinstance(node.op, ast.Sub):
            return a - b
        if isinstance(node.op, ast.Mult):
            return a * b
        if isinstance(node.op, ast.Div):
            if b == 0:
                raise ValidationError("", "division by zero")
            return a / b
        return _exact_power(a, b)
    if isinstance(node, ast.Name) and node.id in _NUMBER_CONSTS:
        raise NotExact
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
        name = node.func.id
        args = [_exact(a) for a in node.args]
        if name == "sqrt" and len(args) == 1:
            return _exact_power(args[0], Fraction(1, 2))
        if name == "root" and len(args) == 2 and args[1].denominator == 1 and args[1] > 0:
            return _exact_power(args[0], 1 / args[1])
        if name == "abs" and len(args) == 1:
            return abs(args[0])
        if name == "liouville" and len(args) == 1 and args[0].denominator == 1:
            from .diophantine import liouville_constant

            return liouville_constant(int(args[0]))
        if name in ("log", "exp"):
            raise NotExact
    raise ValidationError("", f"unsupported construct {ast.dump(node)[:60]}")


def _mp(node):
    if isinstance(node, ast.Expression):
        return _mp(node.body)
    if isinstance(node, ast.Constant):
        v = _as_fraction(node.value)
        return mpmath.mpf(v.numerator) / v.denominator
    if isinstance(node, ast.UnaryOp):
        v = _mp(node.operand)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp):
        a, b = _mp(node.left), _mp(node.right)
        if isinstance(node.op, ast.Add):
            return a + b
        if isinstance(node.op, ast.Sub):
            return a - b
        if isinstance(node.op, ast.Mult):
            return a * b
        if isinstance(node.op, ast.Div):
            return a / b
        if isinstance(node.op, ast.Pow):
            return mpmath.power(a, b)
    if isinstance(node, ast.Name):
        if node.id == "pi":
            return +mpmath.pi
        if node.id == "e":
            return mpmath.e()
        if node.id == "phi":
            return (1 + mpmath.sqrt(5)) / 2
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
        name = node.func.id
        if name == "liouville":
            q = _exact(node.args[0])
            from .diophantine import liouville_constant

            f = liouville_constant(int(q))
            return mpmath.mpf(f.numerator) / f.denominator
        args = [_mp(a) for a in node.args]
        if name == "sqrt":
            return mpmath.sqrt(args[0])
        if name == "root":
            return mpmath.root(args[0], int(args[1]))
        if name == "log":
            return mpmath.log(args[0])
        if name == "exp":
            return mpmath.exp(args[0])
        if name == "abs":
            return abs(args[0])
    raise ValidationError("", f"unsupported construct {ast.dump(node)[:60]}")


@lru_cache(maxsize=4096)
def _exact_cached(text):
    try:
        return _exact(_parse(text, "expr"))
    except NotExact:
        return None


@lru_cache(maxsize=4096)
def _mp_cached(text, dps):
    with mpmath.workdps(dps):
        return +_mp(_parse(text, "expr"))


@dataclass(frozen=True)
class Real:
    """A real number given by an expression string."""

    text: str

    @classmethod
    def of(cls, value, where="value"):
        if isinstance(value, Real):
            return value
        if isinstance(value, Fraction):
            return cls(f"{value.numerator}/{value.denominator}")
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            _as_fraction(value)
            return cls(repr(value))
        if isinstance(value, str):
            try:
                r = cls(value.strip())
                r.mp(20)
            except ValidationError as exc:
                raise ValidationError(where, exc.message) from None
            except (ValueError, ZeroDivisionError) as exc:
                raise ValidationError(where, str(exc)) from None
            return r
        raise ValidationError(where, f"expected a number, got {type(value).__name__}")

    @property
    def exact(self) -> Fraction | None:
        return _exact_cached(self.text)

    def mp(self, dps=30):
        ex = self.exact
        if ex is not None:
            with mpmath.workdps(dps):
                return mpmath.mpf(ex.numerator) / ex.denominator
        return _mp_cached(self.text, dps)

    def __float__(self):
        ex = self.exact
        if ex is not None:
            return float(ex) if abs(ex.numerator).bit_length() < 1000 else float(self.mp(30))
        return float(self.mp(30))


ZERO = Real("0")


@dataclass(frozen=True)
class Cplx:
    re: Real = ZERO
    im: Real = ZERO

    @classmethod
    def of(cls, re=0, im=0, where="value"):
        return cls(Real.of(re, where + ".re"), Real.of(im, where + ".im"))

    @property
    def exact(self):
        a, b = self.re.exact, self.im.exact
        if a is None or b is None:
            return None
        return (a, b)

    def mp(self, dps=30):
        with mpmath.workdps(dps):
            return mpmath.mpc(self.re.mp(dps), self.im.mp(dps))

    def __complex__(self):
        return complex(float(self.re), float(self.im))


def parse_real(text, where="value") -> Real:
    return Real.of(text, where)


# --- array expressions ------------------------------------------------------


def _bump(t, center=np.pi, halfwidth=1.0):
    """Periodic C-infinity bump exp(1 - 1/(1-s^2)) with s the wrapped offset / halfwidth."""
    d = np.mod(np.asarray(t, dtype=float) - center + np.pi, 2 * np.pi) - np.pi
    s = d / halfwidth
    out = np.zeros_like(s)
    inside = np.abs(s) < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
    return out


_ARRAY_NS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "sign": np.sign,
    "where": np.where,
    "minimum": np.minimum,
    "maximum": np.maximum,
    "floor": np.floor,
    "even": lambda x: np.mod(x, 2) == 0,
    "odd": lambda x: np.mod(x, 2) == 1,
    "bump": _bump,
    "pi": np.pi,
    "e": np.e,
    "I": 1j,
}

_ARRAY_NODES = (
    ast.Expression,
    ast.BinOp,
    ast.UnaryOp,
    ast.Call,
    ast.Name,
    ast.Load,
    ast.Constant,
    ast.Compare,
    ast.USub,
    ast.UAdd,
    ast.Invert,
    ast.Lt,
    ast.LtE,
    ast.Gt,
    ast.GtE,
    ast.Eq,
    ast.NotEq,
) + _BINOPS


def compile_array_expr(text, variables, where="expr"):
    """Compile ``text`` into ``f(**arrays)`` using numpy semantics.

    Only arithmetic, comparisons and the whitelisted functions are allowed.
    """
    tree = _parse(text, where)
    allowed = set(_ARRAY_NS) | set(variables)
    for node in ast.walk(tree):
        if not isinstance(node, _ARRAY_NODES):
            raise ValidationError(where, f"construct {type(node).__name__} not allowed")
        if isinstance(node, ast.Name) and node.id not in allowed:
            raise ValidationError(where, f"unknown name {node.id!r}")
        if isinstance(node, ast.Call) and not (
            isinstance(node.func, ast.Name) and node.func.id in _ARRAY_NS
        ):
            raise ValidationError(where, "only whitelisted functions may be called")
    code = compile(tree, f"<{where}>", "eval")

    def evaluate(**arrays):
        ns = dict(_ARRAY_NS)
        ns.update(arrays)
        with np.errstate(all="ignore"):
            out = eval(code, {"__builtins__": {}}, ns)  # noqa: S307 - whitelisted AST
        return np.broadcast_to(np.asarray(out), np.broadcast(*arrays.values()).shape)

    return evaluate


def _power_exact(node, eta):
    """Exact ``value(node)**eta`` using (ab)^k = a^k b^k and root(x, m)^eta = x^(eta/m)."""
    if isinstance(node, ast.Expression):
        return _power_exact(node.body, eta)
    if isinstance(node, ast.BinOp) and isinstance(node.op, (ast.Mult, ast.Div)):
        a, b = _power_exact(node.left, eta), _power_exact(node.right, eta)
        if isinstance(node.op, ast.Mult):
            return a * b
        if b == 0:
            raise ValidationError("", "division by zero")
        return a / b
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _power_exact(node.operand, eta)
        return -v if isinstance(node.op, ast.USub) and eta % 2 else v
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in ("root", "sqrt"):
        m = 2 if node.func.id == "sqrt" else _exact(node.args[1])
        if isinstance(m, Fraction) and m.denominator != 1:
            raise NotExact
        m = int(m)
        if eta % m == 0:
            return _exact(node.args[0]) ** (eta // m)
    return _exact(node) ** eta


def exact_power(value, eta) -> Fraction | None:
    """``value**eta`` as a Fraction when that power is rational (even if ``value`` is not)."""
    real = Real.of(value)
    try:
        return _power_exact(_parse(real.text, "expr"), int(eta))
    except NotExact:
        return None
