"""Arithmetic expressions for chart component functions.

Grammar (a strict subset of Python expression syntax)::

    expr   := expr ('+' | '-') term | term
    term   := term ('*' | '/') factor | factor
    factor := ('+' | '-') factor | power
    power  := atom ('**' | '^') factor
    atom   := NUMBER | NAME | FUNC '(' expr [',' expr] ')' | '(' expr ')'
    FUNC   := sin | cos | exp | pow

``NAME`` is a coordinate name, a user parameter, or one of the constants
``pi`` and ``e``. Anything else (attribute access, subscripts, comparisons,
other calls) is rejected at parse time. Parsed expressions evaluate on
floats and on :class:`~sverify.jet.Jet` values alike.
"""

from __future__ import annotations

import ast
import math
import operator

from . import jet
from .errors import ExpressionError

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: jet.power,
}
_FUNCS = {"sin": (jet.sin, 1), "cos": (jet.cos, 1), "exp": (jet.exp, 1), "pow": (jet.power, 2)}
_CONSTANTS = {"pi": math.pi, "e": math.e}


def _compile(node, names):
    if isinstance(node, ast.Expression):
        return _compile(node.body, names)
    if isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise ExpressionError(f"unsupported literal {node.value!r}")
        value = float(node.value)
        return lambda env: value
    if isinstance(node, ast.Name):
        if node.id in names:
            key = node.id
            return lambda env: env[key]
        if node.id in _CONSTANTS:
            value = _CONSTANTS[node.id]
            return lambda env: value
        raise ExpressionError(f"unknown name {node.id!r}")
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        inner = _compile(node.operand, names)
        if isinstance(node.op, ast.USub):
            return lambda env: -inner(env)
        return inner
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        fn = _BINOPS[type(node.op)]
        left, right = _compile(node.left, names), _compile(node.right, names)
        return lambda env: fn(left(env), right(env))
    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS:
            raise ExpressionError(f"unsupported function in {ast.dump(node.func)}")
        if node.keywords:
            raise ExpressionError("keyword arguments are not allowed")
        fn, arity = _FUNCS[node.func.id]
        if len(node.args) != arity:
            raise ExpressionError(f"{node.func.id} takes {arity} argument(s)")
        args = [_compile(a, names) for a in node.args]
        return lambda env: fn(*(a(env) for a in args))
    raise ExpressionError(f"unsupported syntax: {type(node).__name__}")


class Expression:
    """A parsed component expression over a fixed list of coordinate names."""

    def __init__(self, source, coordinates, parameters=None):
        if isinstance(source, (int, float)) and not isinstance(source, bool):
            source = repr(float(source))
        if not isinstance(source, str):
            raise ExpressionError(f"expression must be a string or number, got {source!r}")
        self.source = source
        self.coordinates = tuple(coordinates)
        self.parameters = dict(parameters or {})
        clash = set(self.coordinates) & set(self.parameters)
        if clash:
            raise ExpressionError(f"names used both as coordinates and parameters: {clash}")
        try:
            tree = ast.parse(source.replace("^", "**"), mode="eval")
        except SyntaxError as exc:
            raise ExpressionError(f"cannot parse {source!r}: {exc.msg}") from None
        self._fn = _compile(tree, set(self.coordinates) | set(self.parameters))

    def __call__(self, coords):
        env = dict(self.parameters)
        env.update(zip(self.coordinates, coords))
        return self._fn(env)

    def __repr__(self):
        return f"Expression({self.source!r})"


def parse(source, coordinates, parameters=None) -> Expression:
    return Expression(source, coordinates, parameters)
