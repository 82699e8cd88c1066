"""Registered closed-form families and semiflow construction.

=============  ==========================  ===================  =============
tag            field                       parameters           default domain
=============  ==========================  ===================  =============
translation    F = v                       speed (1)            (-inf, inf)
affine         F = a x + b                 slope (-1), offset   (-inf, inf)
lasota         F = -x                      --                   (0, 1)
lasota_r       F = -x**r                   r (2)                (0, 1)
=============  ==========================  ===================  =============

In dimension ``N > 1`` a family acts coordinatewise and its semiflow is the
product of the 1D flows.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .model import Domain, ProblemError, Tolerances, VectorField
from .semiflow import (
    AffineFlow,
    ClosedFormFlow1D,
    NumericSemiflow,
    PowerDecayFlow,
    ProductSemiflow,
    Semiflow,
    TranslationFlow,
)

__all__ = ["FAMILIES", "family_field", "family_domain", "family_expression", "make_semiflow"]

FAMILIES = {
    "translation": {"speed": 1.0},
    "affine": {"slope": -1.0, "offset": 0.0},
    "lasota": {},
    "lasota_r": {"r": 2.0},
}


def _params(tag: str, params: Optional[dict]) -> dict:
    if tag not in FAMILIES:
        raise ProblemError(f"unknown family tag {tag!r}; known: {', '.join(FAMILIES)}")
    out = dict(FAMILIES[tag])
    for k, v in (params or {}).items():
        if k not in out:
            raise ProblemError(f"family {tag!r} has no parameter {k!r}")
        out[k] = float(v)
    if tag == "lasota_r" and out["r"] < 1:
        raise ProblemError("lasota_r needs r >= 1")
    return out


def _coefficients(tag: str, prm: dict) -> tuple[float, float, float]:
    """``F(x) = alpha * x**power + beta`` as (alpha, power, beta)."""
    if tag == "translation":
        return 0.0, 1.0, prm["speed"]
    if tag == "affine":
        return prm["slope"], 1.0, prm["offset"]
    if tag == "lasota":
        return -1.0, 1.0, 0.0
    return -1.0, prm["r"], 0.0


def family_expression(tag: str, params: Optional[dict] = None) -> str:
    """The 1D field as text in the expression grammar."""
    prm = _params(tag, params)
    a, r, b = _coefficients(tag, prm)

    def fmt(v):
        return str(int(v)) if float(v).is_integer() else repr(v)

    if r == 1.0:
        return f"{fmt(a)}*x + {fmt(b)}"
    return f"{fmt(a)}*x^{fmt(r)} + {fmt(b)}"


def family_domain(tag: str, params: Optional[dict] = None, dim: int = 1) -> Domain:
    _params(tag, params)
    lo, hi = (0.0, 1.0) if tag in ("lasota", "lasota_r") else (-np.inf, np.inf)
    return Domain.box([lo] * dim, [hi] * dim)


def family_field(tag: str, params: Optional[dict] = None, dim: int = 1) -> VectorField:
    """Vector field of a registered family, acting coordinatewise when ``dim > 1``."""
    prm = _params(tag, params)
    a, r, b = _coefficients(tag, prm)

    def f1(x):
        return a * np.power(x, r) + b if r != 1.0 else a * x + b

    def d1(x):
        return a * r * np.power(x, r - 1.0) if r != 1.0 else np.full(np.shape(x), a)

    def d2(x):
        return a * r * (r - 1.0) * np.power(x, r - 2.0) if r != 1.0 else np.zeros(np.shape(x))

    text = family_expression(tag, prm)
    if dim == 1:
        return VectorField(1, f1, d1, d2, family=tag, params=prm, text=text)

    def func(x):
        return f1(np.asarray(x, dtype=float))

    def jacobian(x):
        d = d1(np.asarray(x, dtype=float))
        return d[..., :, None] * np.eye(dim)

    return VectorField(dim, func, jacobian, family=tag, params=prm, text="; ".join([text] * dim))


def _closed_form_1d(tag: str, prm: dict, domain: Domain, tol: Tolerances) -> ClosedFormFlow1D:
    if tag == "translation":
        return TranslationFlow(domain, prm["speed"], tol)
    if tag == "affine":
        return AffineFlow(domain, prm["slope"], prm["offset"], tol)
    if tag == "lasota" or prm.get("r") == 1.0:
        return AffineFlow(domain, -1.0, 0.0, tol)
    return PowerDecayFlow(domain, prm["r"], tol)


def make_semiflow(field: VectorField, domain: Domain, tol: Tolerances = Tolerances(),
                  numeric: bool = False) -> Semiflow:
    """Closed-form semiflow for registered families, DOP853 integration otherwise."""
    if field.family is None or numeric:
        return NumericSemiflow(field, domain, tol)
    if domain.dim == 1:
        return _closed_form_1d(field.family, field.params, domain, tol)
    if len(domain.boxes) != 1:
        return NumericSemiflow(field, domain, tol)
    lo, hi = domain.boxes[0]
    factors = [_closed_form_1d(field.family, field.params, Domain.interval(a, b), tol) for a, b in zip(lo, hi)]
    return ProductSemiflow(factors, tol)
