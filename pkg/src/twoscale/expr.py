"""Minimal arithmetic expressions in ``x`` and ``y`` for problem data.

Supported: numbers, ``+ - * / ^`` (``^`` is power, ``**`` also accepted),
unary minus, parentheses, and the functions ``sin cos exp sqrt abs``.
Anything else is rejected before evaluation.
"""

import ast
import operator

import numpy as np

from .errors import InvalidParameterError

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}
_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "sqrt": np.sqrt, "abs": np.abs}
_VARS = ("x", "y")


def _check(node):
    if isinstance(node, ast.Expression):
        return _check(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return
    if isinstance(node, ast.Name) and node.id in _VARS:
        return
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        _check(node.left)
        _check(node.right)
        return
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
        _check(node.operand)
        return
    if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
            and node.func.id in _FUNCS and len(node.args) == 1 and not node.keywords):
        _check(node.args[0])
        return
    raise InvalidParameterError(f"unsupported expression element: {ast.dump(node)[:60]}")


def _eval(node, env):
    if isinstance(node, ast.Expression):
        return _eval(node.body, env)
    if isinstance(node, ast.Constant):
        return np.float64(node.value)
    if isinstance(node, ast.Name):
        return env[node.id]
    if isinstance(node, ast.BinOp):
        return _BINOPS[type(node.op)](_eval(node.left, env), _eval(node.right, env))
    if isinstance(node, ast.UnaryOp):
        return _UNARY[type(node.op)](_eval(node.operand, env))
    return _FUNCS[node.func.id](_eval(node.args[0], env))


class Expression:
    """Compiled expression; call with an ``(n, d)`` point array."""

    def __init__(self, text):
        self.text = text
        try:
            tree = ast.parse(text.strip().replace("^", "**"), mode="eval")
        except SyntaxError as exc:
            raise InvalidParameterError(f"cannot parse expression {text!r}: {exc.msg}") from None
        _check(tree)
        self._tree = tree

    def __call__(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        env = {"x": pts[:, 0], "y": pts[:, 1] if pts.shape[1] > 1 else np.zeros(pts.shape[0])}
        with np.errstate(all="ignore"):
            out = _eval(self._tree, env)
        return np.broadcast_to(np.asarray(out, dtype=float), (pts.shape[0],)).copy()

    def __repr__(self):
        return f"Expression({self.text!r})"


def parse_number(text):
    """Number with optional power notation such as ``2^-5``."""
    val = Expression(text)(np.zeros((1, 2)))[0]
    if not np.isfinite(val):
        raise InvalidParameterError(f"{text!r} is not a finite number")
    return float(val)
