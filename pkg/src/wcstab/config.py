"""Flat ``key = value`` problem documents.

Example::

    # von Foerster-Lasota, constant multiplier
    family = lasota
    h_const = -0.5
    p = 2
    space = Lp

Recognised keys
---------------
domain
    ``(a,b)``, ``(-inf,inf)``, ``(0,1)x(0,1)``; unions joined with ``|``.
    Defaults to the family's domain.
family, F_expr
    Exactly one. ``family`` is one of ``translation``, ``affine``, ``lasota``,
    ``lasota_r`` with parameters ``speed``, ``slope``/``offset``, ``r``.
    ``F_expr`` components are separated by ``;`` and use ``x`` (1D) or
    ``x1, x2, x3``.
dim
    Dimension for family fields (default 1, or the domain's dimension).
h_const, h_expr, h
    Multiplier. ``h`` accepts ``const:<number>`` or ``expr:<expression>``.
    Expressions containing ``I`` are complex and are reduced to their real part.
h_dF
    Optional coefficient ``k`` adding ``k * div F`` to the multiplier.
rho_expr
    Weight, default ``1``.
p, space
    Exponent ``>= 1`` and one of ``Lp``, ``W1p``, ``W1p_star``.
numeric
    ``true`` forces Runge-Kutta integration even for registered families.
Tolerances
    Any field of :class:`~wcstab.model.Tolerances`, e.g. ``tol_ode = 1e-10``.

Comments start with ``#`` or ``;``.
"""

from __future__ import annotations

import configparser
import re
import math
from dataclasses import dataclass, fields, replace
from typing import Optional

import numpy as np
import sympy as sp

from .expressions import Expression, ExpressionError, parse_expression
from .families import FAMILIES, family_domain, family_expression, family_field
from .model import SPACES, Domain, Multiplier, ProblemError, ProblemSpec, Tolerances, VectorField

__all__ = ["ConfigError", "parse_problem", "serialize_problem", "load_problem", "structured_multiplier"]

_FAMILY_PARAMS = {"speed", "slope", "offset", "r"}
_TOL_KEYS = {f.name for f in fields(Tolerances)}
_KEYS = ({"domain", "family", "f_expr", "dim", "h_const", "h_expr", "h", "h_df", "rho_expr", "p", "space",
          "numeric"} | _FAMILY_PARAMS | _TOL_KEYS)


class ConfigError(ProblemError):
    def __init__(self, message: str, line: Optional[int] = None, key: Optional[str] = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"field {key!r}")
        self.line, self.key = line, key
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


@dataclass(frozen=True)
class _Source:
    """Extra provenance kept on the problem so it can be serialised back."""

    family: Optional[str]
    params: tuple
    f_texts: Optional[tuple]
    h_text: Optional[str]
    h_dF: float


def _read(text: str) -> tuple[dict, dict]:
    parser = configparser.ConfigParser(comment_prefixes=("#", ";"), inline_comment_prefixes=("#",),
                                       interpolation=None, delimiters=("=",))
    parser.optionxform = str.lower
    # the [problem] header is optional
    shift = 0 if re.search(r"^\s*\[", text, re.M) else 1
    try:
        parser.read_string("[problem]\n" * shift + text)
    except configparser.MissingSectionHeaderError:
        raise ConfigError("keys must follow the [problem] header", line=1) from None
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] - shift if exc.errors else None
        raise ConfigError("expected 'key = value'", line=lineno) from None
    except configparser.DuplicateOptionError as exc:
        raise ConfigError("duplicate key", line=exc.lineno - shift, key=exc.option) from None
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    if parser.sections() != ["problem"]:
        raise ConfigError(f"expected a single [problem] section, found {parser.sections()}")
    lines = {}
    for i, raw in enumerate(text.splitlines(), start=1):
        key = raw.split("=", 1)[0].strip().lower()
        if "=" in raw and key and not key.startswith(("#", ";")):
            lines.setdefault(key, i)
    values = dict(parser["problem"])
    for key in values:
        if key not in _KEYS:
            raise ConfigError("unknown key", line=lines.get(key), key=key)
    return values, lines


def _float(values, lines, key, default=None):
    if key not in values:
        return default
    try:
        return float(values[key])
    except ValueError:
        raise ConfigError(f"expected a number, got {values[key]!r}", lines.get(key), key) from None


def structured_multiplier(h: Expression, f_text: Optional[str], h_dF: float = 0.0) -> Multiplier:
    """Split ``h`` as ``const + k * F'`` when possible (1D), keeping the rest as quadrature."""
    if h.is_complex:
        h = h.real_part()
    if h.is_constant:
        return Multiplier(const=h.constant_value(), div_coef=h_dF, text=h.text)
    if f_text is not None:
        x = sp.Symbol("x", real=True)
        dF = sp.nsimplify(sp.diff(parse_expression(f_text).sym, x), rational=True)
        hs = sp.nsimplify(h.sym, rational=True)
        if dF.free_symbols:
            k = sp.simplify(sp.diff(hs, x) / sp.diff(dF, x))
            if not k.free_symbols:
                c = sp.simplify(hs - k * dF)
                if not c.free_symbols:
                    return Multiplier(const=float(c), div_coef=float(k) + h_dF, text=h.text)
    m = Multiplier.from_expression(h)
    return replace(m, div_coef=h_dF)


def parse_problem(text: str) -> ProblemSpec:
    """Parse a problem document into a fully resolved :class:`ProblemSpec`."""
    values, lines = _read(text)

    def line(k):
        return lines.get(k)

    tol = Tolerances(**{k: (int if k == "grid_points" else float)(_float(values, lines, k))
                        for k in _TOL_KEYS if k in values})

    p = _float(values, lines, "p", 2.0)
    if not p >= 1:
        raise ConfigError("p must be >= 1", line("p"), "p")
    space = values.get("space", "Lp")
    if space not in SPACES:
        raise ConfigError(f"space must be one of {', '.join(SPACES)}", line("space"), "space")

    if ("family" in values) == ("f_expr" in values):
        raise ConfigError("give exactly one of 'family' and 'F_expr'")
    domain = None
    if "domain" in values:
        try:
            domain = Domain.parse(values["domain"])
        except ProblemError as exc:
            raise ConfigError(str(exc), line("domain"), "domain") from None

    family, params, f_texts = None, {}, None
    if "family" in values:
        family = values["family"].strip()
        if family not in FAMILIES:
            raise ConfigError(f"unknown family tag {family!r}", line("family"), "family")
        for k in _FAMILY_PARAMS & set(values):
            if k not in FAMILIES[family]:
                raise ConfigError(f"family {family!r} has no parameter {k!r}", line(k), k)
            params[k] = _float(values, lines, k)
        dim = int(_float(values, lines, "dim", domain.dim if domain else 1))
        try:
            field = family_field(family, params, dim)
        except ProblemError as exc:
            raise ConfigError(str(exc), line("family"), "family") from None
        domain = domain or family_domain(family, params, dim)
        params = dict(field.params)
        f_text = family_expression(family, params) if dim == 1 else None
    else:
        f_texts = tuple(t.strip() for t in values["f_expr"].split(";"))
        try:
            field = VectorField.from_expressions(f_texts)
        except (ExpressionError, ProblemError) as exc:
            raise ConfigError(str(exc), line("f_expr"), "F_expr") from None
        if domain is None:
            raise ConfigError("'domain' is required with F_expr", line("f_expr"), "domain")
        f_text = f_texts[0] if len(f_texts) == 1 else None

    names = ("x",) if field.dim == 1 else tuple(f"x{k + 1}" for k in range(field.dim))
    h_keys = [k for k in ("h_const", "h_expr", "h") if k in values]
    if len(h_keys) > 1:
        raise ConfigError("give at most one of h_const, h_expr, h", line(h_keys[1]), h_keys[1])
    h_dF = _float(values, lines, "h_df", 0.0)
    h_text = None
    scalar_mode = "real"
    if not h_keys:
        multiplier = Multiplier(div_coef=h_dF)
    else:
        key = h_keys[0]
        raw = values[key].strip()
        if key == "h_const" or raw.startswith("const:"):
            c = raw.split(":", 1)[1] if raw.startswith("const:") else raw
            try:
                h_expr = parse_expression(c, names)
            except ExpressionError as exc:
                raise ConfigError(str(exc), line(key), key) from None
            if not h_expr.is_constant:
                raise ConfigError("h_const must be a constant", line(key), key)
        else:
            if key == "h":
                if not raw.startswith("expr:"):
                    raise ConfigError("h must be 'const:<number>' or 'expr:<expression>'", line(key), key)
                raw = raw.split(":", 1)[1]
            try:
                h_expr = parse_expression(raw, names)
            except ExpressionError as exc:
                raise ConfigError(str(exc), line(key), key) from None
        h_text = h_expr.text
        if h_expr.is_complex:
            scalar_mode = "complex-reduced"
        if field.dim == 1:
            multiplier = structured_multiplier(h_expr, f_text, h_dF)
        else:
            multiplier = replace(Multiplier.from_expression(h_expr), div_coef=h_dF)

    rho, rho_text, log_rho = None, None, None
    if "rho_expr" in values and values["rho_expr"].strip() != "1":
        rho_text = values["rho_expr"].strip()
        try:
            r_expr = parse_expression(rho_text, names)
        except ExpressionError as exc:
            raise ConfigError(str(exc), line("rho_expr"), "rho_expr") from None
        if r_expr.is_complex:
            raise ConfigError("weight must be real", line("rho_expr"), "rho_expr")
        rho = r_expr.compile()
        log_rho = r_expr.log().compile()

    numeric = values.get("numeric", "false").strip().lower() in ("1", "true", "yes", "on")
    try:
        spec = ProblemSpec(domain, field, multiplier, p=p, space=space, rho=rho, rho_text=rho_text,
                           scalar_mode=scalar_mode, tol=tol, numeric=numeric, log_rho=log_rho,
                           source=_Source(family, tuple(sorted(params.items())), f_texts, h_text, h_dF))
    except ProblemError as exc:
        key = "space" if "Sobolev" in str(exc) else None
        raise ConfigError(str(exc), line(key) if key else None, key) from None
    grid = spec.grid(64)
    with np.errstate(all="ignore"):
        w = spec.weight(grid)
    # exact zeros far out are underflow of a positive expression (exp(-x^2) at x = 50)
    far = np.abs(grid.reshape(len(grid), -1)).max(axis=-1) > 10
    if not ((w > 0) | ((w == 0) & far)).all():
        raise ConfigError("weight must be positive on the domain", line("rho_expr"), "rho_expr")
    return spec


def load_problem(path) -> ProblemSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_problem(fh.read())


def _num(v: float) -> str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(float(v))


def serialize_problem(spec: ProblemSpec) -> str:
    """Inverse of :func:`parse_problem` for problems built from documents or families."""
    src: Optional[_Source] = spec.source if isinstance(spec.source, _Source) else None
    out = [f"domain = {spec.domain}"]
    if spec.field.family is not None:
        out.append(f"family = {spec.field.family}")
        if spec.dim > 1:
            out.append(f"dim = {spec.dim}")
        out.extend(f"{k} = {_num(v)}" for k, v in sorted(spec.field.params.items()))
    elif spec.field.text is not None:
        out.append(f"F_expr = {spec.field.text}")
    else:
        raise ProblemError("vector field has no textual form")
    m = spec.multiplier
    h_dF = src.h_dF if src else 0.0
    if m.extra is None and (m.div_coef == h_dF or src is None or src.h_text is None):
        out.append(f"h_const = {_num(m.const)}")
        if m.div_coef:
            out.append(f"h_dF = {_num(m.div_coef)}")
    elif src is not None and src.h_text is not None:
        out.append(f"h = expr:{src.h_text}")
        if h_dF:
            out.append(f"h_dF = {_num(h_dF)}")
    elif m.text is not None:
        out.append(f"h = expr:{m.text}")
        if m.div_coef:
            out.append(f"h_dF = {_num(m.div_coef)}")
    else:
        raise ProblemError("multiplier has no textual form")
    if spec.rho_text is not None:
        out.append(f"rho_expr = {spec.rho_text}")
    elif spec.rho is not None:
        raise ProblemError("weight has no textual form")
    out.append(f"p = {_num(spec.p)}")
    out.append(f"space = {spec.space}")
    if spec.numeric:
        out.append("numeric = true")
    default = Tolerances()
    for f in fields(Tolerances):
        v = getattr(spec.tol, f.name)
        if v != getattr(default, f.name):
            out.append(f"{f.name} = {v!r}")
    return "\n".join(out) + "\n"
