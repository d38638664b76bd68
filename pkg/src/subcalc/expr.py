"""Arithmetic expressions in the node variable ``t`` for declarative scenarios.

Only numbers, the names in ``_NAMES`` plus caller-supplied variables,
``+ - * / **``, unary minus and calls to whitelisted math functions are
accepted; anything else raises ``ValueError``.
"""
from __future__ import annotations

import ast
import math
import operator
from functools import lru_cache

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_FUNCS = {
    "sqrt": math.sqrt, "exp": math.exp, "log": math.log, "abs": abs,
    "min": min, "max": max, "sin": math.sin, "cos": math.cos,
}
_NAMES = {"pi": math.pi, "inf": math.inf}


@lru_cache(maxsize=1024)
def _parse(src: str) -> ast.Expression:
    tree = ast.parse(src, mode="eval")
    for node in ast.walk(tree):
        if isinstance(node, (ast.Expression, ast.Load, ast.operator, ast.unaryop)):
            continue
        if isinstance(node, (ast.BinOp, ast.UnaryOp, ast.Name)):
            continue
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            continue
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS:
            continue
        raise ValueError(f"disallowed syntax in expression {src!r}: {type(node).__name__}")
    return tree


def _eval(node, env):
    if isinstance(node, ast.Expression):
        return _eval(node.body, env)
    if isinstance(node, ast.Constant):
        return float(node.value)
    if isinstance(node, ast.Name):
        if node.id in env:
            return float(env[node.id])
        if node.id in _NAMES:
            return _NAMES[node.id]
        raise ValueError(f"unknown name {node.id!r}")
    if isinstance(node, ast.BinOp):
        op = _BINOPS.get(type(node.op))
        if op is None:
            raise ValueError(f"operator {type(node.op).__name__} not allowed")
        return op(_eval(node.left, env), _eval(node.right, env))
    if isinstance(node, ast.UnaryOp):
        if isinstance(node.op, ast.USub):
            return -_eval(node.operand, env)
        if isinstance(node.op, ast.UAdd):
            return _eval(node.operand, env)
        raise ValueError("unary operator not allowed")
    if isinstance(node, ast.Call):
        return _FUNCS[node.func.id](*(_eval(a, env) for a in node.args))
    raise ValueError(f"cannot evaluate {type(node).__name__}")


def evaluate(value, env: dict | None = None) -> float:
    """Numbers pass through; strings are parsed and evaluated in ``env``."""
    if value is None:
        raise ValueError("missing value")
    if isinstance(value, (int, float)):
        return float(value)
    return float(_eval(_parse(str(value)), env or {}))


def evaluate_tree(value, env: dict | None = None):
    """Evaluate nested lists of numbers/expressions, keeping ``None`` as is."""
    if isinstance(value, list):
        return [evaluate_tree(v, env) for v in value]
    if value is None:
        return None
    return evaluate(value, env)
