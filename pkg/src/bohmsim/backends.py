"""Scalar arithmetic backends.

Everything numerically delicate in this package is written against a small
backend object so the same code runs on hardware doubles and on mpmath
arbitrary-precision floats.  A backend bundles the elementary functions,
constants and conversion helpers; `real()` is the constructor for the
backend's scalar type.

`parse_scalar` evaluates the small arithmetic expressions that appear in
configuration files ("1/2", "629/676", "sqrt(2)/2", "2*pi") directly in the
backend's arithmetic, so extended-precision runs do not inherit a double
-precision constant.
"""

import ast
import cmath
import math

import mpmath

from .errors import ConfigError


class FloatBackend:
    """Hardware double precision via math/cmath."""

    name = "hardware"
    digits = 16

    def __init__(self):
        self.pi = math.pi
        self.sin = math.sin
        self.cos = math.cos
        self.exp = math.exp
        self.log = math.log
        self.sqrt = math.sqrt
        self.atan2 = math.atan2
        self.cexp = cmath.exp
        # |Psi|^2 below this is treated as "at a node"
        self.density_floor = 1e-30

    def real(self, x):
        return float(x)

    def to_float(self, x):
        return float(x)

    def complex(self, re, im=0.0):
        return complex(re, im)

    def is_finite(self, x):
        return math.isfinite(x)

    def hypot(self, *parts):
        return math.hypot(*parts)


class MPBackend:
    """mpmath arbitrary precision.

    Constructing the backend sets the global mpmath working precision; runs
    that mix precisions should construct the backend they need immediately
    before integrating (worker processes each get their own interpreter, so
    this is only a concern for deliberate in-process mixing).
    """

    name = "extended"

    def __init__(self, digits=50):
        if digits < 15:
            raise ConfigError(f"extended precision needs >= 15 digits, got {digits}")
        self.digits = int(digits)
        mpmath.mp.dps = self.digits
        self.pi = mpmath.pi
        self.sin = mpmath.sin
        self.cos = mpmath.cos
        self.exp = mpmath.exp
        self.log = mpmath.log
        self.sqrt = mpmath.sqrt
        self.atan2 = mpmath.atan2
        self.cexp = mpmath.exp
        self.density_floor = mpmath.mpf(10) ** (-2 * self.digits + 10)

    def real(self, x):
        if isinstance(x, str):
            return mpmath.mpf(x)
        if isinstance(x, float):
            # floats pass through exactly; use parse_scalar for "sqrt(2)" etc.
            return mpmath.mpf(x)
        return mpmath.mpf(x)

    def to_float(self, x):
        return float(x)

    def complex(self, re, im=0):
        return mpmath.mpc(re, im)

    def is_finite(self, x):
        return mpmath.isfinite(x)

    def hypot(self, *parts):
        s = mpmath.mpf(0)
        for p in parts:
            s += p * p
        return mpmath.sqrt(s)


_ALLOWED_CALLS = ("sqrt", "sin", "cos", "exp", "log")


def _eval_node(node, bk):
    if isinstance(node, ast.Expression):
        return _eval_node(node.body, bk)
    if isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise ConfigError(f"non-numeric literal {node.value!r}")
        if isinstance(node.value, int):
            return bk.real(node.value)
        # float literals like 0.5 or 1e-4: exact in binary, safe to widen
        return bk.real(node.value)
    if isinstance(node, ast.Name):
        if node.id == "pi":
            return bk.pi if not isinstance(bk.pi, float) else bk.real(bk.pi)
        raise ConfigError(f"unknown symbol {node.id!r} in numeric expression")
    if isinstance(node, ast.UnaryOp):
        v = _eval_node(node.operand, bk)
        if isinstance(node.op, ast.USub):
            return -v
        if isinstance(node.op, ast.UAdd):
            return v
        raise ConfigError("unsupported unary operator")
    if isinstance(node, ast.BinOp):
        a = _eval_node(node.left, bk)
        b = _eval_node(node.right, bk)
        if isinstance(node.op, ast.Add):
            return a + b
        if isinstance(node.op, ast.Sub):
            return a - b
        if isinstance(node.op, ast.Mult):
            return a * b
        if isinstance(node.op, ast.Div):
            return a / b
        if isinstance(node.op, ast.Pow):
            return a ** b
        raise ConfigError("unsupported binary operator")
    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _ALLOWED_CALLS:
            raise ConfigError("only sqrt/sin/cos/exp/log calls are allowed")
        if len(node.args) != 1 or node.keywords:
            raise ConfigError(f"{node.func.id} takes exactly one argument")
        return getattr(bk, node.func.id)(_eval_node(node.args[0], bk))
    raise ConfigError(f"unsupported syntax in numeric expression: {ast.dump(node)}")


def parse_scalar(value, backend=None):
    """Turn a config value (number or small arithmetic string) into a backend scalar.

    Strings are restricted to literals, + - * / **, pi, and sqrt/sin/cos/exp/log.
    """
    bk = backend or FloatBackend()
    if isinstance(value, bool):
        raise ConfigError(f"expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return bk.real(value)
    if isinstance(value, str):
        try:
            tree = ast.parse(value, mode="eval")
        except SyntaxError as exc:
            raise ConfigError(f"cannot parse numeric expression {value!r}") from exc
        return _eval_node(tree, bk)
    raise ConfigError(f"expected a number or string, got {type(value).__name__}")


def get_backend(digits=None):
    """hardware backend for digits in (None, 0, <=16), else mpmath."""
    if digits is None or digits == 0 or digits <= 16:
        return FloatBackend()
    return MPBackend(digits)
