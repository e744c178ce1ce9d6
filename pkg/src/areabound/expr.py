"""Tiny arithmetic expression language for boundary data, weights and test fields.

Expressions such as ``"1 + x^2/4"`` or ``"log(cos(x)/cos(y))"`` are parsed
with :mod:`ast` against a whitelist and evaluated on numpy arrays.  Partial
derivatives come from forward-mode propagation through the same tree, so a
parsed expression yields exact first derivatives without finite differences.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass, field

import numpy as np

_FUNCS = {
    "exp": (np.exp, np.exp),
    "sin": (np.sin, np.cos),
    "cos": (np.cos, lambda a: -np.sin(a)),
    "sqrt": (np.sqrt, lambda a: 0.5 / np.sqrt(a)),
    "log": (np.log, lambda a: 1.0 / a),
    "tan": (np.tan, lambda a: 1.0 / np.cos(a) ** 2),
    "sinh": (np.sinh, np.cosh),
    "cosh": (np.cosh, np.sinh),
    "tanh": (np.tanh, lambda a: 1.0 / np.cosh(a) ** 2),
}
_CONSTANTS = {"pi": math.pi, "e": math.e}


class ExpressionError(ValueError):
    pass


def _check(node: ast.AST, variables: tuple[str, ...]) -> None:
    if isinstance(node, ast.Expression):
        _check(node.body, variables)
    elif isinstance(node, ast.BinOp):
        if not isinstance(node.op, (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)):
            raise ExpressionError(f"operator {type(node.op).__name__} not allowed")
        _check(node.left, variables)
        _check(node.right, variables)
    elif isinstance(node, ast.UnaryOp):
        if not isinstance(node.op, (ast.UAdd, ast.USub)):
            raise ExpressionError(f"unary {type(node.op).__name__} not allowed")
        _check(node.operand, variables)
    elif isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS:
            raise ExpressionError("unknown function in expression")
        if len(node.args) != 1 or node.keywords:
            raise ExpressionError(f"{node.func.id} takes exactly one argument")
        _check(node.args[0], variables)
    elif isinstance(node, ast.Name):
        if node.id not in variables and node.id not in _CONSTANTS:
            raise ExpressionError(
                f"unknown identifier {node.id!r}; allowed: {', '.join(variables)}"
            )
    elif isinstance(node, ast.Constant):
        if not isinstance(node.value, (int, float)) or isinstance(node.value, bool):
            raise ExpressionError(f"literal {node.value!r} not allowed")
    else:
        raise ExpressionError(f"syntax {type(node).__name__} not allowed")


@dataclass(frozen=True)
class Expression:
    """A parsed scalar expression in a fixed set of variables."""

    source: str
    variables: tuple[str, ...] = ("x", "y")
    _tree: ast.Expression = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        text = self.source.strip().replace("^", "**")
        if not text:
            raise ExpressionError("empty expression")
        try:
            tree = ast.parse(text, mode="eval")
        except SyntaxError as exc:
            raise ExpressionError(f"cannot parse {self.source!r}: {exc.msg}") from None
        _check(tree, self.variables)
        object.__setattr__(self, "_tree", tree)

    def __call__(self, *args):
        env = self._env(args)
        return self._value(self._tree.body, env)

    def with_gradient(self, *args):
        """Return ``(value, [d/dvar for var in variables])``."""
        env = self._env(args)
        return self._dual(self._tree.body, env)

    def gradient(self, *args):
        return self.with_gradient(*args)[1]

    def _env(self, args):
        if len(args) != len(self.variables):
            raise TypeError(f"expected {len(self.variables)} arguments, got {len(args)}")
        arrays = np.broadcast_arrays(*[np.asarray(a, dtype=float) for a in args])
        return dict(zip(self.variables, arrays))

    def _value(self, node, env):
        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.Name):
            return env[node.id] if node.id in env else _CONSTANTS[node.id]
        if isinstance(node, ast.UnaryOp):
            v = self._value(node.operand, env)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Call):
            return _FUNCS[node.func.id][0](self._value(node.args[0], env))
        a = self._value(node.left, env)
        b = self._value(node.right, env)
        op = node.op
        if isinstance(op, ast.Add):
            return a + b
        if isinstance(op, ast.Sub):
            return a - b
        if isinstance(op, ast.Mult):
            return a * b
        if isinstance(op, ast.Div):
            return a / b
        return np.power(a, b)

    def _dual(self, node, env):
        n = len(self.variables)
        shape = next(iter(env.values())).shape if env else ()
        if isinstance(node, ast.Constant):
            return np.full(shape, float(node.value)), [np.zeros(shape)] * n
        if isinstance(node, ast.Name):
            if node.id in env:
                d = [np.ones(shape) if v == node.id else np.zeros(shape) for v in self.variables]
                return env[node.id], d
            return np.full(shape, _CONSTANTS[node.id]), [np.zeros(shape)] * n
        if isinstance(node, ast.UnaryOp):
            v, d = self._dual(node.operand, env)
            if isinstance(node.op, ast.USub):
                return -v, [-di for di in d]
            return v, d
        if isinstance(node, ast.Call):
            f, df = _FUNCS[node.func.id]
            v, d = self._dual(node.args[0], env)
            s = df(v)
            return f(v), [s * di for di in d]
        a, da = self._dual(node.left, env)
        b, db = self._dual(node.right, env)
        op = node.op
        if isinstance(op, ast.Add):
            return a + b, [x + y for x, y in zip(da, db)]
        if isinstance(op, ast.Sub):
            return a - b, [x - y for x, y in zip(da, db)]
        if isinstance(op, ast.Mult):
            return a * b, [x * b + a * y for x, y in zip(da, db)]
        if isinstance(op, ast.Div):
            return a / b, [(x * b - a * y) / b**2 for x, y in zip(da, db)]
        v = np.power(a, b)
        # d(a^b) = b a^(b-1) da + a^b log(a) db; skip the log term where db vanishes
        out = []
        for x, y in zip(da, db):
            term = b * np.power(a, b - 1.0) * x
            if np.any(y != 0.0):
                with np.errstate(divide="ignore", invalid="ignore"):
                    term = term + np.where(y != 0.0, v * np.log(a) * y, 0.0)
            out.append(term)
        return v, out


def parse(source: str, variables: tuple[str, ...] = ("x", "y")) -> Expression:
    return Expression(source, tuple(variables))


def parse_list(text: str | list[str], variables: tuple[str, ...] = ("x", "y")) -> list[Expression]:
    """Parse a comma separated list (or a list of strings) of expressions."""
    items = text if isinstance(text, (list, tuple)) else text.split(",")
    exprs = [parse(s, variables) for s in items if s.strip()]
    if not exprs:
        raise ExpressionError("empty expression list")
    return exprs
