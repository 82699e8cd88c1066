"""Multiplier cocycle, transported weights, operator norms and admissibility.

All quantities are computed in log space along trajectories.  With the
multiplier split as ``h = c + k div F + g`` the cocycle along the forward path
from ``y`` is

    log h_t(y) = c t + k log|det D phi(t, y)| + int_0^t g(phi(s, y)) ds,

so only ``g`` ever needs quadrature.  The transported weight is evaluated from
its definition through the backward path from ``x`` and the sup of
``rho_{t,p} / rho`` through the push-forward

    sup_x rho_{t,p}(x) / rho(x) = sup_y h_t(y)^p rho(y) / (rho(phi(t, y)) |det D phi(t, y)|).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import integrate

from .families import make_semiflow
from .functions import SampledFunction, lp_norm, weighted_integral
from .model import Domain, ProblemSpec
from .semiflow import DomainExitError, Semiflow, Trajectory

__all__ = [
    "WeightEvolution",
    "SupCurve",
    "NormEstimate",
    "AdmissibilityFit",
    "time_grid",
    "fit_admissibility",
]


def time_grid(horizon: float, n_lin: int = 101, n_log: int = 60) -> np.ndarray:
    """Union of a uniform and a log-spaced grid on ``[0, horizon]``."""
    if horizon <= 0:
        return np.array([0.0])
    lin = np.linspace(0.0, horizon, n_lin)
    log = np.geomspace(min(1e-2, horizon), horizon, n_log)
    return np.unique(np.concatenate([lin, log]))


@dataclass(frozen=True)
class SupCurve:
    """``log sup_x rho_{t,p}(x) / rho(x)`` sampled at ``times``."""

    times: np.ndarray
    log_sup: np.ndarray
    argmax: np.ndarray
    grid_size: int
    refine_rounds: int

    @property
    def sup(self) -> np.ndarray:
        return np.exp(self.log_sup)


@dataclass(frozen=True)
class NormEstimate:
    """Operator norm at one time: ``raw = ||rho_{t,p}/rho||_inf`` and ``norm = raw**(1/p)``."""

    t: float
    raw: float
    norm: float
    log_raw: float
    argmax: object
    grid_size: int


@dataclass(frozen=True)
class AdmissibilityFit:
    """``rho_{t,p} <= M exp(omega t) rho`` fitted on a time grid."""

    M: float
    omega: float
    refuted: bool
    max_violation: float
    curvature: float = 0.0
    times: Optional[np.ndarray] = field(default=None, repr=False, compare=False)
    log_sup: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def violation(self, M: float, omega: float) -> float:
        """``max_t log sup - log M - omega t``; nonpositive when ``(M, omega)`` is a valid bound."""
        return float(np.max(self.log_sup - math.log(M) - omega * self.times))

    def to_dict(self) -> dict:
        return {"M": self.M, "omega": self.omega, "refuted": self.refuted,
                "max_violation": self.max_violation, "curvature": self.curvature}


def fit_admissibility(times, log_sup, convexity_limit: float = 1.0) -> AdmissibilityFit:
    """Least-squares ``omega``, smallest ``M >= 1`` on the samples, convexity refutation."""
    t = np.asarray(times, dtype=float)
    L = np.asarray(log_sup, dtype=float)
    ok = np.isfinite(L)
    t, L = t[ok], L[ok]
    if t.size == 0 or (t.size == 1 and t[0] == 0.0) or np.ptp(t) == 0:
        return AdmissibilityFit(1.0, 0.0, False, 0.0, 0.0, t, L)
    omega = float(np.polyfit(t, L, 1)[0])
    logM = max(0.0, float(np.max(L - omega * t)))
    curv = 0.0
    if t.size >= 3:
        a = float(np.polyfit(t, L, 2)[0])
        curv = a * float(t.max()) ** 2
    viol = float(np.max(L - logM - omega * t))
    M = math.exp(logM) if logM < 709.0 else math.inf
    return AdmissibilityFit(M, omega, curv > convexity_limit, viol, curv, t, L)


class WeightEvolution:
    """Evaluators for ``h_t``, ``rho_{t,p}``, ``rho_{-t,p}`` and derived norms."""

    def __init__(self, problem: ProblemSpec, semiflow: Optional[Semiflow] = None,
                 refine_rounds: int = 3, refine_points: int = 10):
        self.problem = problem
        self.sf = semiflow or make_semiflow(problem.field, problem.domain, problem.tol, problem.numeric)
        self.p = float(problem.p)
        self.refine_rounds = refine_rounds
        self.refine_points = refine_points
        m = problem.multiplier
        self._c, self._k = m.const, m.div_coef
        if m.extra is None:
            self._g = None
        elif problem.dim == 1:
            self._g = lambda y: np.real(m.extra(y))
        else:
            self._g = lambda y: np.real(m.extra(*np.moveaxis(y, -1, 0)))

    # --- trajectories ------------------------------------------------------
    def _traj(self, x, times, direction) -> Trajectory:
        return self.sf.trajectory(x, times, direction, self._g)

    def _log_h(self, tr: Trajectory, direction: int) -> np.ndarray:
        """``log h_t`` at the forward start (``direction=1``) or end (``-1``) of each path."""
        t = tr.times[:, None]
        q = tr.integral if tr.integral is not None else 0.0
        return self._c * t + direction * self._k * tr.log_jac + q

    def _points(self, x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1) if self.problem.dim == 1 else x.reshape(-1, self.problem.dim)
        shape = x.shape if self.problem.dim == 1 else x.shape[:-1]
        return flat, shape

    # --- cocycle -----------------------------------------------------------
    def log_cocycle_curve(self, times, x) -> np.ndarray:
        pts, _ = self._points(x)
        tr = self._traj(pts, np.asarray(times, dtype=float), 1)
        return self._log_h(tr, 1)

    def log_cocycle(self, t: float, x) -> np.ndarray:
        pts, shape = self._points(x)
        tr = self._traj(pts, np.array([float(t)]), 1)
        if np.any(tr.exit_time <= t):
            raise DomainExitError(tr.exit_time[tr.exit_time <= t])
        return self._log_h(tr, 1)[0].reshape(shape)

    def cocycle(self, t: float, x) -> np.ndarray:
        """``h_t(x) = exp int_0^t h(phi(s, x)) ds``."""
        return np.exp(self.log_cocycle(t, x))

    # --- transported weights -----------------------------------------------
    def log_rho_tp_curve(self, times, x) -> np.ndarray:
        """``log rho_{t,p}(x)`` for ``t`` in ``times`` (``-inf`` outside ``phi(t, Omega)``)."""
        pts, _ = self._points(x)
        times = np.asarray(times, dtype=float)
        tr = self._traj(pts, times, -1)
        y = tr.points
        lj = tr.log_jac                                      # log|det D phi(-t, x)|
        with np.errstate(all="ignore"):
            out = self.p * self._log_h(tr, -1) + self.problem.log_weight(y) + lj
        return np.where(tr.alive, out, -np.inf)

    def log_rho_tp(self, t: float, x) -> np.ndarray:
        _, shape = self._points(x)
        return self.log_rho_tp_curve([float(t)], x)[0].reshape(shape)

    def rho_tp(self, t: float, x) -> np.ndarray:
        """``chi_{phi(t,Omega)} h_t(phi(-t,.))^p rho(phi(-t,.)) |det D phi(-t,.)|``."""
        return np.exp(self.log_rho_tp(t, x))

    def log_rho_minus_curve(self, times, x) -> np.ndarray:
        pts, _ = self._points(x)
        tr = self._traj(pts, np.asarray(times, dtype=float), 1)
        with np.errstate(all="ignore"):
            out = -self.p * self._log_h(tr, 1) + self.problem.log_weight(tr.points) + tr.log_jac
        return np.where(tr.alive, out, np.nan)

    def log_rho_minus_tp(self, t: float, x) -> np.ndarray:
        _, shape = self._points(x)
        return self.log_rho_minus_curve([float(t)], x)[0].reshape(shape)

    def rho_minus_tp(self, t: float, x) -> np.ndarray:
        """``h_t(x)^{-p} rho(phi(t, x)) |det D phi(t, x)|``."""
        return np.exp(self.log_rho_minus_tp(t, x))

    def rho_tp_line_integral(self, t: float, x: float) -> float:
        """1D transported weight through the line integral of ``(h - F'/p) / F``.

        Independent of the trajectory bookkeeping; used as a cross-check.
        """
        pr = self.problem
        if pr.dim != 1:
            raise ValueError("line-integral form is 1D")
        x = float(x)
        if abs(float(pr.F(x))) <= pr.zero_threshold():
            return math.exp(self.p * t * (float(pr.h(x)) - float(pr.dF(x)) / self.p)) * float(pr.weight(x))
        y, inside = self.sf.inverse(t, np.array([x]))
        if not inside[0]:
            return 0.0
        y = float(y[0])

        def g(s):
            s = np.array(s)
            return float((pr.h(s) - pr.dF(s) / self.p) / pr.F(s))

        val = integrate.quad(g, y, x, epsabs=0.0, epsrel=pr.tol.tol_quad, limit=500)[0] if y != x else 0.0
        return math.exp(self.p * val) * float(pr.weight(y))

    # --- sup of rho_{t,p} / rho ---------------------------------------------
    def log_ratio_curve(self, times, y) -> np.ndarray:
        """``log[h_t(y)^p rho(y) / (rho(phi(t,y)) |det D phi(t,y)|)]``; ``-inf`` where the path dies."""
        pts, _ = self._points(y)
        tr = self._traj(pts, np.asarray(times, dtype=float), 1)
        with np.errstate(all="ignore"):
            out = (self.p * self._log_h(tr, 1) + self.problem.log_weight(pts)[None]
                   - tr.log_jac - self.problem.log_weight(tr.points))
        return np.where(tr.alive & np.isfinite(out), out, -np.inf)

    def sup_curve(self, times, grid=None, refine: bool = True) -> SupCurve:
        """Grid sup with ``refine_rounds`` rounds of 10x local refinement around the argmax (1D)."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        grid = self.problem.grid() if grid is None else np.asarray(grid, dtype=float)
        L = self.log_ratio_curve(times, grid)
        pts = grid
        rounds = 0
        if refine and self.problem.dim == 1 and grid.size > 2 and self.refine_rounds:
            order = np.argsort(pts)
            pts, L = pts[order], L[:, order]
            for rounds in range(1, self.refine_rounds + 1):
                new = self._refinement(pts, L)
                if new.size == 0:
                    break
                Ln = self.log_ratio_curve(times, new)
                pts = np.concatenate([pts, new])
                L = np.concatenate([L, Ln], axis=1)
                order = np.argsort(pts)
                pts, L = pts[order], L[:, order]
        idx = np.argmax(np.where(np.isnan(L), -np.inf, L), axis=1)
        log_sup = L[np.arange(len(times)), idx]
        return SupCurve(times, log_sup, pts[idx], int(pts.shape[0]), rounds)

    def _refinement(self, pts: np.ndarray, L: np.ndarray, max_centres: int = 12) -> np.ndarray:
        idx = np.argmax(np.where(np.isnan(L), -np.inf, L), axis=1)
        centres = np.unique(idx)
        if centres.size > max_centres:
            centres = np.unique(idx[np.linspace(0, len(idx) - 1, max_centres).astype(int)])
        new = []
        for j in centres:
            a = pts[j - 1] if j > 0 else None
            b = pts[j + 1] if j + 1 < len(pts) else None
            lo = a if a is not None else pts[j] - 0.5 * (b - pts[j])
            hi = b if b is not None else pts[j] + 0.5 * (pts[j] - a)
            cand = np.linspace(lo, hi, 2 * self.refine_points + 1)[1:-1]
            new.append(cand[self.problem.domain.contains(cand) & (cand != pts[j])])
        new = np.unique(np.concatenate(new)) if new else np.empty(0)
        return np.setdiff1d(new, pts)

    def operator_norm(self, t: float, grid=None) -> NormEstimate:
        """``||T(t)||``: the p-th root of ``ess sup rho_{t,p}/rho``, with the raw sup alongside."""
        c = self.sup_curve([float(t)], grid)
        lr = float(c.log_sup[0])
        return NormEstimate(float(t), math.exp(lr), math.exp(lr / self.p), lr, c.argmax[0], c.grid_size)

    def admissibility_fit(self, horizon: Optional[float] = None, times=None, grid=None) -> AdmissibilityFit:
        if times is None:
            times = time_grid(self.problem.tol.horizon if horizon is None else horizon, 41, 20)
        c = self.sup_curve(times, grid)
        return fit_admissibility(c.times, c.log_sup)

    # --- semigroup action --------------------------------------------------
    def apply(self, t: float, f: SampledFunction) -> SampledFunction:
        """``T(t) f = h_t * f o phi(t, .)`` as a new sampled function."""
        t = float(t)
        if t == 0:
            return f
        pr = self.problem

        def g(x):
            x = np.asarray(x, dtype=float)
            pts, shape = self._points(x)
            tr = self._traj(pts, np.array([t]), 1)
            with np.errstate(all="ignore"):
                val = np.exp(self._log_h(tr, 1)[0]) * f(tr.points[0])
            return np.where(tr.alive[0], val, np.nan).reshape(shape)

        sing = ()
        if pr.dim == 1 and f.singular:
            zt = pr.zero_threshold()
            sing = tuple((e, a) for e, a in f.singular if abs(float(pr.F(np.array(e)))) <= zt)
        return SampledFunction(g, sing, f"T({t:g}){f.text or 'f'}")

    def lp_norm(self, f: SampledFunction, points: Sequence = ()) -> float:
        return lp_norm(f, self.problem.domain, self.p, None if self.problem.rho_is_one else self.problem.weight,
                       points, rel=self.problem.tol.tol_quad)

    def transported_integral(self, t: float, f: SampledFunction) -> float:
        """``int |f|^p rho_{t,p}`` (the right-hand side of the change-of-variables identity)."""
        pr = self.problem
        if pr.dim != 1:
            raise ValueError("1D only")
        pts = [v for lo, hi in self.sf.image_interval(t) for v in (lo, hi) if math.isfinite(v)]

        def g(x):
            with np.errstate(all="ignore"):
                w = np.exp(self.log_rho_tp(t, np.atleast_1d(x)))
                v = np.abs(f(np.atleast_1d(x))) ** self.p
                return np.where(w == 0, 0.0, v * w).reshape(np.shape(x))

        sing = [(e, a * self.p) for e, a in f.singular]
        return weighted_integral(g, pr.domain, sing, pts, rel=pr.tol.tol_quad)

    def box_integral(self, times, lo, hi, order: int = 12, panels: int = 8) -> np.ndarray:
        """``int_Q rho_{t,p}`` over the box ``Q = [lo, hi]`` for each ``t`` (tensor Gauss-Legendre).

        In 1D the panels break at the image edges of ``phi(t, Omega)`` so the
        indicator jump is integrated exactly.
        """
        times = np.asarray(times, dtype=float)
        lo, hi = np.atleast_1d(np.asarray(lo, dtype=float)), np.atleast_1d(np.asarray(hi, dtype=float))
        N = lo.size
        if N > 3:
            raise ValueError("box integrals support N <= 3")
        xg, wg = np.polynomial.legendre.leggauss(order)
        out = np.zeros(len(times))
        if N == 1:
            for i, t in enumerate(times):
                edges = [v for a, b in self.sf.image_interval(t) for v in (a, b) if lo[0] < v < hi[0]]
                knots = np.unique(np.concatenate([np.linspace(lo[0], hi[0], panels + 1), edges]))
                a, b = knots[:-1, None], knots[1:, None]
                nodes = (0.5 * (b - a) * xg + 0.5 * (a + b)).ravel()
                w = (0.5 * (b - a) * wg).ravel()
                out[i] = float(np.sum(w * np.exp(self.log_rho_tp(t, nodes))))
            return out
        for i, t in enumerate(times):
            edges = self.sf.image_box(t) if hasattr(self.sf, "image_box") else (lo, hi)
            axes, weights = [], []
            for k in range(N):
                cuts = [v for v in (edges[0][k], edges[1][k]) if lo[k] < v < hi[k]]
                knots = np.unique(np.concatenate([np.linspace(lo[k], hi[k], max(panels // 2, 2) + 1), cuts]))
                a, b = knots[:-1, None], knots[1:, None]
                axes.append((0.5 * (b - a) * xg + 0.5 * (a + b)).ravel())
                weights.append((0.5 * (b - a) * wg).ravel())
            mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, N)
            W = np.prod(np.stack(np.meshgrid(*weights, indexing="ij"), axis=-1).reshape(-1, N), axis=-1)
            out[i] = float(np.sum(W * np.exp(self.log_rho_tp(t, mesh))))
        return out
