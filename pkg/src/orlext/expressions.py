"""Small arithmetic expression grammar for spatially varying coefficients.

Grammar: ``+ - * / ^`` (also ``**``), ``min``, ``max``, ``abs``, ``log``,
``exp``, ``sqrt``, numeric literals, the constants ``e`` and ``pi``, and a
declared set of variables (``x1 .. xn`` for spatial fields, ``t`` for
Orlicz profiles).  Expressions evaluate vectorized over numpy arrays.
"""

from __future__ import annotations

import ast
import math

import numpy as np

from .errors import InputError

_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}
_UNARYOPS = {ast.USub: np.negative, ast.UAdd: np.positive}
_FUNCTIONS = {
    "min": np.minimum,
    "max": np.maximum,
    "abs": np.abs,
    "log": np.log,
    "exp": np.exp,
    "sqrt": np.sqrt,
}
_CONSTANTS = {"e": math.e, "pi": math.pi}


class Expression:
    """A compiled expression; call with keyword arrays for its variables."""

    def __init__(self, text: str, variables: tuple[str, ...]):
        self.text = text
        self.variables = tuple(variables)
        self.used: set[str] = set()
        source = text.replace("^", "**")
        try:
            tree = ast.parse(source, mode="eval")
        except SyntaxError as exc:
            raise InputError(f"cannot parse expression {text!r}: {exc}") from exc
        self._validate(tree.body)
        self._tree = tree.body

    def _validate(self, node: ast.AST) -> None:
        if isinstance(node, ast.Constant):
            if not isinstance(node.value, (int, float)):
                raise InputError(f"non-numeric literal in {self.text!r}")
        elif isinstance(node, ast.BinOp):
            if type(node.op) not in _BINOPS:
                raise InputError(f"operator {type(node.op).__name__} not allowed")
            self._validate(node.left)
            self._validate(node.right)
        elif isinstance(node, ast.UnaryOp):
            if type(node.op) not in _UNARYOPS:
                raise InputError(f"operator {type(node.op).__name__} not allowed")
            self._validate(node.operand)
        elif isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCTIONS:
                raise InputError(f"call not allowed in {self.text!r}")
            if node.keywords:
                raise InputError("keyword arguments not allowed")
            if node.func.id in ("min", "max") and len(node.args) < 2:
                raise InputError(f"{node.func.id} needs at least two arguments")
            if node.func.id not in ("min", "max") and len(node.args) != 1:
                raise InputError(f"{node.func.id} takes exactly one argument")
            for arg in node.args:
                self._validate(arg)
        elif isinstance(node, ast.Name):
            if node.id in self.variables:
                self.used.add(node.id)
            elif node.id not in _CONSTANTS:
                raise InputError(
                    f"unknown name {node.id!r}; allowed: {self.variables} and e, pi"
                )
        else:
            raise InputError(
                f"construct {type(node).__name__} not allowed in {self.text!r}"
            )

    def _eval(self, node: ast.AST, env: dict) -> np.ndarray | float:
        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](
                self._eval(node.left, env), self._eval(node.right, env)
            )
        if isinstance(node, ast.UnaryOp):
            return _UNARYOPS[type(node.op)](self._eval(node.operand, env))
        if isinstance(node, ast.Call):
            fn = _FUNCTIONS[node.func.id]
            args = [self._eval(a, env) for a in node.args]
            if node.func.id in ("min", "max"):
                out = args[0]
                for a in args[1:]:
                    out = fn(out, a)
                return out
            return fn(*args)
        if isinstance(node, ast.Name):
            if node.id in env:
                return env[node.id]
            return _CONSTANTS[node.id]
        raise AssertionError("validated tree contains unexpected node")

    def __call__(self, **values) -> np.ndarray | float:
        missing = self.used - set(values)
        if missing:
            raise InputError(f"missing variables {sorted(missing)} for {self.text!r}")
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return self._eval(self._tree, values)

    def __repr__(self) -> str:
        return f"Expression({self.text!r}, variables={self.variables})"


def compile_expression(text: str, variables=("x1", "x2")) -> Expression:
    return Expression(text, tuple(variables))
