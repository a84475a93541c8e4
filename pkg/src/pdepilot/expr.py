"""Symbolic expressions used in problem documents.

The grammar is deliberately small: +, -, *, /, ^ (or **), sin, cos, exp,
tanh, the constant pi (also accepted as the unicode letter), axis variables
x/y/z/w/v, time t, field names, and named numeric parameters.  Expressions
are parsed once with sympy and compiled to numpy callables.
"""

from __future__ import annotations

import math

import numpy as np
import sympy as sp
from sympy.parsing.sympy_parser import (
    convert_xor,
    parse_expr,
    standard_transformations,
)

from .errors import EvalError, ExpressionError

AXIS_NAMES = ("x", "y", "z", "w", "v")

_ALLOWED_FUNCS = {"sin", "cos", "exp", "tanh"}
_TRANSFORMS = standard_transformations + (convert_xor,)


class Expression:
    """A parsed scalar expression, evaluable on numpy arrays.

    ``variables`` lists the free symbols that must be bound at evaluation
    time; ``constants`` supplies fixed numeric bindings for named
    parameters without changing the stored text.
    """

    __slots__ = ("text", "_sym", "variables", "_fn", "_names", "_constants")

    def __init__(self, text: str, extra_names: tuple[str, ...] = (), constants: dict | None = None):
        if not isinstance(text, str) or not text.strip():
            raise ExpressionError("empty expression")
        cleaned = text.replace("π", "pi")
        try:
            sym = parse_expr(cleaned, transformations=_TRANSFORMS, local_dict={"pi": sp.pi})
        except Exception as exc:
            raise ExpressionError(f"cannot parse {text!r}: {exc}") from None
        for fn in sym.atoms(sp.Function):
            name = type(fn).__name__
            if name not in _ALLOWED_FUNCS:
                raise ExpressionError(f"function {name!r} not allowed in {text!r}")
        constants = dict(constants or {})
        allowed = set(AXIS_NAMES) | {"t"} | set(extra_names) | set(constants)
        names = tuple(sorted(str(s) for s in sym.free_symbols))
        for name in names:
            if name not in allowed:
                raise ExpressionError(f"unknown symbol {name!r} in {text!r}")
        self.text = text
        self._sym = sym
        self._names = names
        self._constants = {k: float(v) for k, v in constants.items() if k in names}
        self.variables = tuple(n for n in names if n not in self._constants)
        if names:
            self._fn = sp.lambdify([sp.Symbol(n) for n in names], sym, modules="numpy")
        else:
            self._fn = None

    def __call__(self, **env):
        """Evaluate with keyword bindings; missing variables raise."""
        if self._fn is None:
            return float(self._sym)
        args = []
        for name in self._names:
            if name in env:
                val = env[name]
            elif name in self._constants:
                val = self._constants[name]
            else:
                raise EvalError(f"no value bound for {name!r} in {self.text!r}")
            # numpy scalars give inf/nan instead of raising on 1/0 etc.
            args.append(np.float64(val) if np.ndim(val) == 0 else np.asarray(val, dtype=float))
        try:
            with np.errstate(all="ignore"):
                out = self._fn(*args)
        except ArithmeticError as exc:
            raise EvalError(f"{self.text!r} failed to evaluate: {exc}") from None
        out = np.asarray(out, dtype=float)
        if not np.all(np.isfinite(out)):
            raise EvalError(f"{self.text!r} evaluated to non-finite values")
        if out.shape == ():
            return float(out)
        return out

    def eval_on(self, coords: dict, broadcast_shape=None):
        """Evaluate over coordinate arrays, expanded to the grid shape.

        Expressions that omit an axis (or everything) come back smaller than
        the grid; ``broadcast_shape`` stretches them so callers can rely on
        the full shape.
        """
        out = self(**{k: coords[k] for k in self.variables if k in coords})
        if np.ndim(out) == 0:
            if broadcast_shape is not None:
                return np.full(broadcast_shape, float(out))
            return np.asarray(out, dtype=float)
        out = np.asarray(out, dtype=float)
        if broadcast_shape is not None and out.shape != tuple(broadcast_shape):
            out = np.ascontiguousarray(np.broadcast_to(out, broadcast_shape))
        return out

    @property
    def is_constant(self) -> bool:
        return not self.variables

    @property
    def constant_value(self) -> float:
        if not self.is_constant:
            raise ExpressionError(f"{self.text!r} is not constant")
        return float(self(**{}))

    def depends_on(self, name: str) -> bool:
        return name in self.variables

    @property
    def sympy_expr(self) -> sp.Expr:
        """Underlying sympy expression with constants substituted."""
        return self._sym.subs({sp.Symbol(k): v for k, v in self._constants.items()})

    def __repr__(self):
        return f"Expression({self.text!r})"

    def __eq__(self, other):
        return isinstance(other, Expression) and other.text == self.text

    def __hash__(self):
        return hash(self.text)


def as_expression(value, extra_names: tuple[str, ...] = (), constants: dict | None = None) -> Expression:
    """Coerce a string or number into an :class:`Expression`."""
    if isinstance(value, Expression):
        return value
    if isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value):
        return Expression(repr(float(value)), extra_names, constants)
    if isinstance(value, str):
        return Expression(value, extra_names, constants)
    raise ExpressionError(f"not an expression: {value!r}")
