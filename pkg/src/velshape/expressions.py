"""Parsing of the small symbolic expression grammar used in model and scenario files.

Expressions are ordinary arithmetic strings such as ``"0.03 + 0.02*cos(q2)"``
or ``"4*sin(10*x1 + 5) - 2*sin(18*x1**3) + 10"``.  Parsing is delegated to
sympy with a closed namespace, so only whitelisted functions and the declared
variables may appear.  Each parsed expression is compiled twice: once against
:mod:`math` for fast scalar calls and once against numpy for arrays.
"""

from __future__ import annotations

import math

import numpy as np
import sympy as sp
from sympy.parsing.sympy_parser import parse_expr, standard_transformations

from .exceptions import ConfigurationError

_FUNCTIONS = {
    "sin": sp.sin,
    "cos": sp.cos,
    "tan": sp.tan,
    "asin": sp.asin,
    "acos": sp.acos,
    "atan": sp.atan,
    "atan2": sp.atan2,
    "arcsin": sp.asin,
    "arccos": sp.acos,
    "arctan": sp.atan,
    "arctan2": sp.atan2,
    "sqrt": sp.sqrt,
    "exp": sp.exp,
    "log": sp.log,
    "abs": sp.Abs,
    "pi": sp.pi,
}


def parse(text, variables):
    """Parse ``text`` into a sympy expression over the named ``variables``.

    Raises
    ------
    ConfigurationError
        If the string does not parse or mentions an unknown name.
    """
    if isinstance(text, (int, float)):
        return sp.Float(text) if isinstance(text, float) else sp.Integer(text)
    if not isinstance(text, str):
        raise ConfigurationError(f"expression must be a string or number, got {type(text).__name__}")
    symbols = {name: sp.Symbol(name, real=True) for name in variables}
    local = dict(_FUNCTIONS)
    local.update(symbols)
    try:
        expr = parse_expr(
            text.replace("^", "**"),
            local_dict=local,
            global_dict={"__builtins__": {}, "Integer": sp.Integer, "Float": sp.Float,
                         "Rational": sp.Rational, "Symbol": sp.Symbol},
            transformations=standard_transformations,
            evaluate=True,
        )
    except Exception as exc:  # sympy raises a zoo of exception types here
        raise ConfigurationError(f"cannot parse expression {text!r}: {exc}") from exc
    if not isinstance(expr, sp.Expr):
        raise ConfigurationError(f"expression {text!r} is not arithmetic")
    unknown = {s.name for s in expr.free_symbols} - set(variables)
    if unknown:
        raise ConfigurationError(
            f"expression {text!r} uses unknown names {sorted(unknown)}; allowed: {list(variables)}"
        )
    return expr


class Expression:
    """A compiled scalar expression of a fixed, ordered list of variables.

    ``expr(a, b)`` evaluates with :mod:`math` on floats, ``expr.vec(a, b)``
    broadcasts over numpy arrays.
    """

    def __init__(self, source, variables):
        self.variables = tuple(variables)
        if isinstance(source, sp.Expr):
            self.sym = source
        else:
            self.sym = parse(source, self.variables)
        self.source = source if isinstance(source, str) else str(self.sym)
        args = [sp.Symbol(v, real=True) for v in self.variables]
        self._scalar = sp.lambdify(args, self.sym, modules=[{"atan2": math.atan2}, "math"])
        self._vector = sp.lambdify(args, self.sym, modules="numpy")

    def __call__(self, *args):
        return float(self._scalar(*args))

    def vec(self, *args):
        out = self._vector(*args)
        shape = np.broadcast(*[np.asarray(a) for a in args]).shape if args else ()
        return np.broadcast_to(np.asarray(out, dtype=float), shape).copy()

    def diff(self, variable):
        """Symbolic derivative with respect to ``variable``."""
        return Expression(sp.diff(self.sym, sp.Symbol(variable, real=True)), self.variables)

    @property
    def is_constant(self):
        return not self.sym.free_symbols

    def __repr__(self):
        return f"Expression({self.source!r}, {self.variables})"
