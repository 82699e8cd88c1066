"""Sampled functions with endpoint singularity annotations, and weighted norms."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from .expressions import parse_expression
from .model import Domain

__all__ = [
    "DivergentIntegralError",
    "QuadratureError",
    "SampledFunction",
    "SobolevFunction",
    "weighted_integral",
    "lp_norm",
    "sobolev_norm",
]


class QuadratureError(RuntimeError):
    pass


class DivergentIntegralError(QuadratureError):
    """The integral is infinite (for instance a function outside ``L^p``)."""


@dataclass(frozen=True)
class SampledFunction:
    """A vectorised evaluator with optional endpoint singularities.

    ``singular`` maps a finite endpoint ``e`` to ``alpha`` meaning
    ``|f(x)| ~ |x - e|**(-alpha)`` as ``x -> e``.
    """

    func: Callable[[np.ndarray], np.ndarray]
    singular: tuple = ()
    text: Optional[str] = None

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.func(np.asarray(x, dtype=float)), dtype=float)

    def exponent_at(self, e: float) -> float:
        for pt, a in self.singular:
            if pt == e:
                return a
        return 0.0

    @classmethod
    def constant(cls, c: float = 1.0) -> "SampledFunction":
        return cls(lambda x: np.full(np.shape(x), float(c)), text=repr(float(c)))

    @classmethod
    def power(cls, alpha: float, at: float = 0.0) -> "SampledFunction":
        """``|x - at|**(-alpha)``, annotated as singular at ``at`` when ``alpha > 0``."""
        sing = ((float(at), float(alpha)),) if alpha > 0 else ()
        return cls(lambda x: np.abs(x - at) ** (-alpha), sing, f"|x-{at!r}|^(-{alpha!r})")

    @classmethod
    def from_expression(cls, text: str, domain: Optional[Domain] = None) -> "SampledFunction":
        expr = parse_expression(text)
        if expr.is_complex:
            raise ValueError("functions must be real valued")
        func = expr.compile()
        sing = estimate_singularities(func, domain) if domain is not None else ()
        return cls(func, sing, text)

    def with_text(self, text: str) -> "SampledFunction":
        return SampledFunction(self.func, self.singular, text)


def estimate_singularities(func, domain: Domain, threshold: float = 1e-6) -> tuple:
    """Local power-law exponents ``alpha > threshold`` at finite 1D endpoints."""
    out = []
    for lo, hi in domain.boxes:
        for e, inward in ((lo[0], 1.0), (hi[0], -1.0)):
            if not math.isfinite(e):
                continue
            d = np.array([1e-6, 1e-8]) * max(1.0, abs(e))
            with np.errstate(all="ignore"):
                v = np.abs(np.asarray(func(e + inward * d), dtype=float))
            if not (np.all(np.isfinite(v)) and np.all(v > 0)):
                continue
            alpha = -(math.log(v[1]) - math.log(v[0])) / (math.log(d[1]) - math.log(d[0]))
            if alpha > threshold:
                out.append((float(e), round(alpha, 9)))
    return tuple(out)


def _quad(fn, a, b, weight_exps=None, points=None, rel=1e-10, limit=500):
    kw = dict(epsabs=0.0, epsrel=rel, limit=limit, full_output=1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        if weight_exps is not None:
            res = integrate.quad(fn, a, b, weight="alg", wvar=weight_exps, **kw)
        elif points is not None and len(points) and math.isfinite(a) and math.isfinite(b):
            res = integrate.quad(fn, a, b, points=points, **kw)
        else:
            res = integrate.quad(fn, a, b, **kw)
    val, err = res[0], res[1]
    if not math.isfinite(val):
        raise DivergentIntegralError(f"integral over ({a}, {b}) is not finite")
    if err > max(1e-6 * abs(val), 1e-300) and err > 1e-14:
        raise QuadratureError(f"quadrature did not converge on ({a}, {b}): value {val:.6g}, error {err:.2e}")
    return val


def weighted_integral(g: Callable, domain: Domain, singular: Sequence = (), points: Sequence = (),
                      rel: float = 1e-10) -> float:
    """``int_Omega g`` for a nonnegative 1D integrand, honouring endpoint power laws.

    ``singular`` holds ``(endpoint, beta)`` meaning ``g ~ |x - e|**(-beta)``;
    ``beta >= 1`` raises :class:`DivergentIntegralError`.  ``points`` are interior
    breakpoints (discontinuities).
    """
    if domain.dim != 1:
        raise ValueError("weighted_integral is 1D; use box_integral for N > 1")
    betas = dict(singular)
    total = 0.0
    for lo, hi in domain.boxes:
        a, b = lo[0], hi[0]
        ba, bb = betas.get(a, 0.0), betas.get(b, 0.0)
        for e, beta in ((a, ba), (b, bb)):
            if beta >= 1.0:
                raise DivergentIntegralError(f"integrand ~ |x-{e}|^(-{beta:g}) is not integrable")
        cuts = sorted({float(c) for c in points if a < c < b})
        if not math.isfinite(a) or not math.isfinite(b):
            mid = 0.0 if not math.isfinite(a) and not math.isfinite(b) else (a + 1.0 if math.isfinite(a) else b - 1.0)
            cuts = sorted(set(cuts) | {mid})
        knots = [a] + cuts + [b]
        for k, (u, v) in enumerate(zip(knots[:-1], knots[1:])):
            left = ba if (k == 0 and ba > 0) else 0.0
            right = bb if (k == len(knots) - 2 and bb > 0) else 0.0
            if (left or right) and math.isfinite(u) and math.isfinite(v):
                def fn(x, u=u, v=v, left=left, right=right):
                    eps = 1e-15 * max(1.0, abs(u), abs(v))
                    x = min(max(x, u + eps), v - eps)
                    with np.errstate(all="ignore"):
                        return float(g(np.array(x))) * (x - u) ** left * (v - x) ** right
                total += _quad(fn, u, v, weight_exps=(-left, -right), rel=rel)
            else:
                total += _quad(lambda x: float(g(np.array(x))), u, v, rel=rel)
    return total


def lp_norm(f: SampledFunction, domain: Domain, p: float, rho: Optional[Callable] = None,
            points: Sequence = (), rel: float = 1e-10) -> float:
    """``(int |f|^p rho)^{1/p}`` over a 1D domain; raises on ``alpha * p >= 1``."""
    if domain.dim != 1:
        return box_lp_norm(f, domain, p, rho)
    sing = [(e, a * p) for e, a in f.singular]
    for e, beta in sing:
        if beta >= 1.0:
            raise DivergentIntegralError(
                f"function ~ |x-{e}|^(-{beta / p:g}) is not in L^{p:g} (alpha*p = {beta:g} >= 1)")

    def g(x):
        with np.errstate(all="ignore"):
            val = np.abs(f(x)) ** p
            if rho is None:
                return val
            return np.where(val == 0, 0.0, val * rho(x))   # far tails: 0 * inf

    return weighted_integral(g, domain, sing, points, rel) ** (1.0 / p)


def box_lp_norm(f, domain: Domain, p: float, rho=None) -> float:
    total = 0.0
    for lo, hi in domain.boxes:
        if not (np.isfinite(lo).all() and np.isfinite(hi).all()):
            raise ValueError("N-D norms need bounded boxes")

        def g(*xs):
            x = np.array(xs)
            return float(np.abs(f(x)) ** p * (rho(*xs) if rho is not None else 1.0))

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            total += integrate.nquad(g, list(zip(lo, hi)), opts={"epsrel": 1e-8, "epsabs": 0.0})[0]
    return total ** (1.0 / p)


@dataclass(frozen=True)
class SobolevFunction:
    """A value/derivative evaluator pair on an interval ``(a, b)``."""

    value: SampledFunction
    deriv: SampledFunction
    text: Optional[str] = None

    def __call__(self, x):
        return self.value(x)

    def boundary_value(self, a: float) -> float:
        with np.errstate(all="ignore"):
            v = float(self.value(np.array(a)))
        if not math.isfinite(v):
            d = 1e-12 * max(1.0, abs(a))
            v = float(self.value(np.array(a + d)))
        return v

    def in_star(self, a: float, tol: float = 1e-10) -> bool:
        return abs(self.boundary_value(a)) <= tol

    def fd_residual(self, a: float, b: float, n: int = 25) -> float:
        """Max ``|(f(x+d) - f(x-d))/(2d) - f'(x)|`` at interior points, ``d = 1e-5 (b - a)``."""
        d = 1e-5 * (b - a)
        x = np.linspace(a, b, n + 2)[1:-1]
        fd = (self.value(x + d) - self.value(x - d)) / (2 * d)
        return float(np.max(np.abs(fd - self.deriv(x)) / np.maximum(1.0, np.abs(self.deriv(x)))))

    @classmethod
    def from_expression(cls, text: str, domain: Domain) -> "SobolevFunction":
        expr = parse_expression(text)
        d = expr.diff()
        val = SampledFunction(expr.compile(), estimate_singularities(expr.compile(), domain), text)
        der = SampledFunction(d.compile(), estimate_singularities(d.compile(), domain), f"({text})'")
        return cls(val, der, text)


def sobolev_norm(f: SobolevFunction, domain: Domain, p: float) -> float:
    """``||f||_p + ||f'||_p`` with unit weight."""
    return lp_norm(f.value, domain, p) + lp_norm(f.deriv, domain, p)
