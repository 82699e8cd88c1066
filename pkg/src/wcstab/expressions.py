"""Minimal arithmetic expression grammar.

Grammar accepted by :func:`parse_expression`::

    expr     := term (('+' | '-') term)*
    term     := factor (('*' | '/') factor)*
    factor   := ('+' | '-') factor | power
    power    := atom ('^' factor)?
    atom     := NUMBER | NAME | FUNC '(' expr ')' | '(' expr ')'
    FUNC     := exp | log | abs | sqrt | sin | cos
    NAME     := x | x1 | x2 | x3 | pi | e | I

``I`` is the imaginary unit; expressions using it are complex valued and are
reduced to their real part by the problem model.  Parsing and differentiation
are delegated to sympy after the token stream has been checked against the
whitelist above, so no arbitrary Python is ever evaluated.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import sympy as sp

__all__ = ["Expression", "ExpressionError", "parse_expression"]

_FUNCS = {"exp": sp.exp, "log": sp.log, "abs": sp.Abs, "sqrt": sp.sqrt,
          "sin": sp.sin, "cos": sp.cos}
_CONSTS = {"pi": sp.pi, "e": sp.E, "I": sp.I}
_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|([A-Za-z_]\w*)|(\*\*|[-+*/^()]))")


class ExpressionError(ValueError):
    pass


def _tokenize(text: str) -> list[str]:
    pos, out = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExpressionError(f"unexpected character {text[pos]!r} at column {pos + 1}")
        out.append(m.group(1) or m.group(2) or m.group(3))
        pos = m.end()
    if not out:
        raise ExpressionError("empty expression")
    return out


@dataclass(frozen=True)
class Expression:
    """A parsed scalar expression in the variables ``variables``."""

    text: str
    sym: sp.Expr = field(compare=False, repr=False)
    variables: tuple[str, ...] = ("x",)

    @property
    def is_complex(self) -> bool:
        return self.sym.has(sp.I)

    @property
    def is_constant(self) -> bool:
        return not (self.sym.free_symbols & set(self._symbols))

    @property
    def _symbols(self) -> list[sp.Symbol]:
        return [sp.Symbol(v, real=True) for v in self.variables]

    def real_part(self) -> "Expression":
        return Expression(f"re({self.text})", sp.re(self.sym), self.variables)

    def diff(self, var: str | None = None) -> "Expression":
        var = var or self.variables[0]
        d = sp.diff(self.sym, sp.Symbol(var, real=True))
        return Expression(f"d/d{var}({self.text})", d, self.variables)

    def log(self) -> "Expression":
        """``log`` of a positive expression, expanded so ``log(exp(x^2))`` stays ``x^2``."""
        return Expression(f"log({self.text})", sp.expand_log(sp.log(self.sym), force=True), self.variables)

    def constant_value(self) -> float:
        return complex(self.sym.evalf()).real

    def compile(self) -> Callable[..., np.ndarray]:
        """Vectorised numpy evaluator taking one array per variable."""
        fn = sp.lambdify(self._symbols, self.sym, modules="numpy")

        def evaluate(*args):
            args = [np.asarray(a, dtype=float) for a in args]
            out = np.asarray(fn(*args))
            return np.broadcast_to(out, np.broadcast_shapes(*(a.shape for a in args))).copy()

        return evaluate


def parse_expression(text: str, variables: Sequence[str] = ("x",)) -> Expression:
    """Parse ``text`` against the whitelist grammar and return an :class:`Expression`."""
    if not isinstance(text, str):
        raise ExpressionError("expression must be a string")
    tokens = _tokenize(text)
    allowed = set(variables) | set(_FUNCS) | set(_CONSTS)
    for i, tok in enumerate(tokens):
        if tok[0].isalpha() or tok[0] == "_":
            if tok not in allowed:
                raise ExpressionError(f"unknown name {tok!r} in {text!r}")
            if tok in _FUNCS and (i + 1 >= len(tokens) or tokens[i + 1] != "("):
                raise ExpressionError(f"function {tok!r} must be followed by '('")
    depth = 0
    for tok in tokens:
        depth += tok == "("
        depth -= tok == ")"
        if depth < 0:
            raise ExpressionError(f"unbalanced parentheses in {text!r}")
    if depth:
        raise ExpressionError(f"unbalanced parentheses in {text!r}")
    src = " ".join("**" if t == "^" else t for t in tokens)
    namespace = {v: sp.Symbol(v, real=True) for v in variables}
    namespace.update(_FUNCS)
    namespace.update(_CONSTS)
    try:
        sym = sp.sympify(src, locals=namespace, rational=False)
    except (sp.SympifyError, SyntaxError, TypeError) as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc}") from None
    if not isinstance(sym, sp.Expr):
        raise ExpressionError(f"{text!r} is not a scalar expression")
    return Expression(text.strip(), sym, tuple(variables))
