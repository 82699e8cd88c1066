"""Stability on ``W^{1,p}(a, b)`` and on the subspace ``W^{1,p}_*`` of functions vanishing at ``a``.

Differentiation intertwines the semigroup on ``W^{1,p}_*`` with the ``L^p``
semigroup of the same field and multiplier ``F' + h(a)``; the constants add the
scalar factor ``exp(h(a) t)``.  Verdicts therefore reduce to the ``L^p``
classifiers plus the sign of ``h(a)``.
"""

from __future__ import annotations

import math
from dataclasses import replace
from typing import Optional

import numpy as np

from .evidence import FAIL, INCONCLUSIVE, PASS, STABLE, UNSTABLE, CriterionResult, Verdict
from .functions import SampledFunction, SobolevFunction, sobolev_norm
from .model import Multiplier, ProblemError, ProblemSpec
from .stability import classify_stability_rho1, stability_integral
from .weights import WeightEvolution

__all__ = [
    "HypothesisError",
    "conjugate_problem",
    "probe_conjugacy",
    "apply_semigroup_sobolev",
    "sobolev_stability_integral",
    "classify_stability_sobolev",
    "sobolev_norm",
]


class HypothesisError(ProblemError):
    def __init__(self, message: str, sample=None):
        self.sample = sample
        super().__init__(message)


def probe_conjugacy(problem: ProblemSpec, n: int = 80, limit: float = 1e6) -> dict:
    """Sup of ``|(h(y) - h(a)) / F(y)|`` on a geometric grid accumulating at ``a``."""
    a, b = problem.domain.lo[0], problem.domain.hi[0]
    y = a + (b - a) * np.geomspace(1e-12, 1.0, n)[:-1]
    ha = _h_at(problem, a)
    with np.errstate(all="ignore"):
        q = np.abs((problem.h(y) - ha) / problem.F(y))
    near, far = q[: n // 2], q[n // 2:]
    bound = float(np.nanmax(q)) if np.isfinite(q).any() else math.inf
    # a bounded quotient levels off as y -> a; a 1/(y-a)^s blow-up keeps growing
    ok = bool(np.isfinite(q).all() and bound <= limit
              and np.max(near) <= 10.0 * (1.0 + np.max(far)))
    j = int(np.nanargmax(q)) if np.isfinite(q).any() else 0
    return {"passed": ok, "bound": bound, "h_a": ha, "worst_y": float(y[j]), "grid": [float(y[0]), float(y[-1]), n]}


def _h_at(problem: ProblemSpec, a: float) -> float:
    with np.errstate(all="ignore"):
        v = float(problem.h(np.array(a)))
    if not math.isfinite(v):
        v = float(problem.h(np.array(a + 1e-12 * max(1.0, abs(a)))))
    return v


def conjugate_problem(problem: ProblemSpec, check: bool = True) -> ProblemSpec:
    """The ``L^p`` problem with multiplier ``F' + h(a)`` and unit weight."""
    if problem.dim != 1 or not problem.domain.bounded:
        raise ProblemError("Sobolev conjugacy needs a bounded interval")
    a = problem.domain.lo[0]
    if check:
        pr = probe_conjugacy(problem)
        if not pr["passed"]:
            raise HypothesisError(f"(h(y) - h(a)) / F(y) is not bounded near a (sup ~ {pr['bound']:.3g})",
                                  pr["worst_y"])
    ha = _h_at(problem, a)
    m = Multiplier(const=ha, div_coef=1.0, text=f"F' + {ha!r}")
    return replace(problem, multiplier=m, rho=None, rho_text=None, log_rho=None, space="Lp", source=None)


def sobolev_stability_integral(problem: ProblemSpec, y, t: float):
    """``int_y^{phi(t,y)} (h(a) - (1/p - 1) F') / F``: the transport integral of the conjugated problem."""
    return stability_integral(WeightEvolution(conjugate_problem(problem)), y, t)


def apply_semigroup_sobolev(we: WeightEvolution, t: float, f: SobolevFunction, panels: Optional[int] = None,
                            order: int = 16) -> SobolevFunction:
    """``g = h_t f(phi(t,.))`` with ``g' = h_t (J f(phi) + f'(phi) d_x phi)``, ``J = int_0^t h'(phi) d_x phi``."""
    pr = we.problem
    t = float(t)
    if t == 0:
        return f
    panels = panels or max(8, int(math.ceil(t)))
    xg, wg = np.polynomial.legendre.leggauss(order)
    knots = np.linspace(0.0, t, panels + 1)
    s = (0.5 * (knots[1:, None] - knots[:-1, None]) * xg + 0.5 * (knots[1:, None] + knots[:-1, None])).ravel()
    ws = np.repeat(0.5 * np.diff(knots), order) * np.tile(wg, panels)
    times = np.concatenate([s, [t]])
    order_idx = np.argsort(times)
    sorted_times = times[order_idx]

    def parts(x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1)
        tr = we.sf.trajectory(flat, sorted_times, 1, we._g)
        inv = np.empty_like(order_idx)
        inv[order_idx] = np.arange(len(order_idx))
        pts = tr.points[inv]
        lj = tr.log_jac[inv]
        with np.errstate(all="ignore"):
            J = np.sum(ws[:, None] * pr.h_prime(pts[:-1]) * np.exp(lj[:-1]), axis=0)
            log_ht = we._log_h(tr, 1)[inv][-1]
        return x.shape, np.exp(log_ht), J, pts[-1], np.exp(lj[-1])

    def value(x):
        shape, ht, _, y, _ = parts(x)
        return (ht * f.value(y)).reshape(shape)

    def deriv(x):
        shape, ht, J, y, d = parts(x)
        return (ht * (J * f.value(y) + f.deriv(y) * d)).reshape(shape)

    zt = pr.zero_threshold()

    def keep(sf: SampledFunction):
        return tuple((e, al) for e, al in sf.singular if abs(float(pr.F(np.array(e)))) <= zt)

    tag = f"T({t:g}){f.text or 'f'}"
    return SobolevFunction(SampledFunction(value, keep(f.value), tag), SampledFunction(deriv, keep(f.deriv), tag + "'"),
                           tag)


def classify_stability_sobolev(problem: ProblemSpec, horizon=None, grid=None) -> tuple[Verdict, Verdict]:
    """Verdicts on ``W^{1,p}_*`` (the conjugated ``L^p`` problem) and on ``W^{1,p}`` (additionally ``h(a) < 0``)."""
    probe = probe_conjugacy(problem)
    if not probe["passed"]:
        raise HypothesisError(f"(h(y) - h(a)) / F(y) is not bounded near a (sup ~ {probe['bound']:.3g})",
                              probe["worst_y"])
    conj = conjugate_problem(problem, check=False)
    star = classify_stability_rho1(conj, horizon, grid)
    star = Verdict(star.status, star.criteria, star.witness,
                   {**star.metadata, "space": "W1p_star", "conjugate_multiplier": conj.multiplier.text,
                    "hypothesis_probe": probe})
    ha = probe["h_a"]
    sign = CriterionResult("h_a_negative", PASS if ha < 0 else FAIL, {"h_a": ha},
                           None if ha < 0 else {"h_a": ha})
    crit = star.criteria + (sign,)
    if star.status == UNSTABLE:
        full = Verdict(UNSTABLE, crit, star.witness, {**star.metadata, "space": "W1p"})
    elif ha >= 0:
        full = Verdict(UNSTABLE, crit, {"criterion": "h_a_negative", "witness": {"h_a": ha}},
                       {**star.metadata, "space": "W1p"})
    else:
        full = Verdict(star.status, crit, None, {**star.metadata, "space": "W1p"})
    return star, full
