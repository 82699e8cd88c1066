"""Semiflows phi(t, x): closed-form families, products, and adaptive Runge-Kutta.

Every semiflow exposes the same vectorised surface:

* ``flow(t, x)`` -- ``phi(t, x)`` for ``t >= 0``
* ``inverse(t, x)`` -- ``(phi(-t, x), inside)`` where ``inside`` marks ``x in phi(t, Omega)``
* ``log_jacobian(t, x)`` -- ``log|det D phi(t, x)|`` for signed ``t``
* ``trajectory(x, times, direction)`` -- the path together with the log-Jacobian and
  an optional running integral of a scalar function along the path
* ``exit_time(x, direction)`` -- first time the path leaves the domain (``inf`` if never)

Points are arrays of shape ``(...)`` in 1D and ``(..., N)`` otherwise.
"""

from __future__ import annotations

import math
import threading
from collections import OrderedDict
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import quad_vec, solve_ivp

from .model import Domain, Tolerances, VectorField

__all__ = [
    "DomainExitError",
    "FlowJacobian",
    "Trajectory",
    "Semiflow",
    "TranslationFlow",
    "AffineFlow",
    "PowerDecayFlow",
    "ProductSemiflow",
    "ClosureSemiflow",
    "NumericSemiflow",
    "flow",
    "inverse_flow",
    "flow_jacobian",
    "image_indicator",
    "escape_time",
]

_BIG = 1e12


class DomainExitError(RuntimeError):
    """The trajectory left the domain (or blew up) before the requested time."""

    def __init__(self, exit_time, message: str = ""):
        self.exit_time = exit_time
        super().__init__(message or f"trajectory leaves the domain at t = {np.min(exit_time):.6g}")


@dataclass(frozen=True)
class FlowJacobian:
    value: float

    @property
    def log(self) -> float:
        return math.log(abs(self.value)) if self.value else -math.inf


@dataclass
class Trajectory:
    """Samples of ``s -> phi(direction * s, x)`` at ``times`` (all ``>= 0``).

    ``points`` has shape ``(m, n)`` in 1D or ``(m, n, N)``; ``log_jac[i, j]`` is
    ``log|det D phi(direction * times[i], x_j)|``; ``integral[i, j]`` is
    ``int_0^{times[i]} g(phi(direction * u, x_j)) du`` when an integrand ``g`` was
    supplied.  Entries past ``exit_time`` are NaN.
    """

    times: np.ndarray
    points: np.ndarray
    log_jac: np.ndarray
    exit_time: np.ndarray
    integral: Optional[np.ndarray] = None

    @property
    def alive(self) -> np.ndarray:
        return self.times[:, None] < self.exit_time[None, :]


class Semiflow:
    """Base class; subclasses provide ``_trajectory`` and ``exit_time``."""

    dim: int
    domain: Domain
    closed_form = False
    tol: Tolerances = Tolerances()

    # --- helpers -----------------------------------------------------------
    def _flat(self, x):
        x = np.asarray(x, dtype=float)
        if self.dim == 1:
            return x.reshape(-1), x.shape
        return x.reshape(-1, self.dim), x.shape[:-1]

    def _unflat(self, arr, shape, vector=False):
        if vector and self.dim > 1:
            return arr.reshape(shape + (self.dim,))
        return arr.reshape(shape)

    # --- public surface ----------------------------------------------------
    def trajectory(self, x, times, direction: int = 1, integrand=None) -> Trajectory:
        pts, _ = self._flat(x)
        times = np.atleast_1d(np.asarray(times, dtype=float))
        if np.any(times < 0) or np.any(np.diff(times) < 0):
            raise ValueError("trajectory times must be nonnegative and sorted")
        return self._trajectory(pts, times, 1 if direction >= 0 else -1, integrand)

    def flow(self, t: float, x, strict: bool = True) -> np.ndarray:
        if t < 0:
            y, inside = self.inverse(-t, x)
            return y
        pts, shape = self._flat(x)
        tr = self._trajectory(pts, np.array([float(t)]), 1, None)
        if strict and np.any(tr.exit_time <= t):
            raise DomainExitError(tr.exit_time[tr.exit_time <= t])
        return self._unflat(tr.points[0], shape, vector=True)

    def inverse(self, t: float, x):
        pts, shape = self._flat(x)
        if t == 0:
            inside = self.domain.contains(pts)
            return self._unflat(pts.copy(), shape, True), inside.reshape(shape)
        tr = self._trajectory(pts, np.array([float(t)]), -1, None)
        inside = tr.exit_time > t
        y = tr.points[0].copy()
        y[~inside] = np.nan
        return self._unflat(y, shape, True), inside.reshape(shape)

    def log_jacobian(self, t: float, x) -> np.ndarray:
        pts, shape = self._flat(x)
        if t == 0:
            return np.zeros(shape)
        tr = self._trajectory(pts, np.array([abs(float(t))]), 1 if t > 0 else -1, None)
        return tr.log_jac[0].reshape(shape)

    def image_indicator(self, t: float, x) -> np.ndarray:
        return self.inverse(t, x)[1]

    def exit_time(self, x, direction: int = 1, horizon: float = math.inf) -> np.ndarray:
        """Generic search: coarse doubling then bisection on the in-domain predicate."""
        pts, shape = self._flat(x)
        out = np.full(len(pts), math.inf)
        horizon = min(horizon, self.tol.horizon) if not np.isfinite(horizon) else horizon

        def alive(t, idx):
            tr = self._trajectory(pts[idx], np.array([t]), direction, None)
            return tr.exit_time > t

        idx = np.arange(len(pts))
        t_lo = np.zeros(len(pts))
        t_hi = np.full(len(pts), math.inf)
        t = min(1e-3, horizon)
        while t <= horizon and idx.size:
            ok = alive(t, idx)
            t_hi[idx[~ok]] = t
            idx = idx[ok]
            t_lo[idx] = t
            if t == horizon:
                break
            t = min(2 * t, horizon)
        todo = np.flatnonzero(np.isfinite(t_hi))
        for _ in range(60):
            if not todo.size:
                break
            mid = 0.5 * (t_lo[todo] + t_hi[todo])
            for k, i in enumerate(todo):
                if alive(mid[k], np.array([i]))[0]:
                    t_lo[i] = mid[k]
                else:
                    t_hi[i] = mid[k]
        out[np.isfinite(t_hi)] = t_hi[np.isfinite(t_hi)]
        return out.reshape(shape)

    def escape_time(self, x, horizon: float = math.inf) -> np.ndarray:
        """Smallest ``t`` with ``x`` outside ``phi(t, Omega)`` (``inf`` if none found)."""
        return self.exit_time(x, -1, horizon)

    def image_interval(self, t: float) -> list[tuple[float, float]]:
        """1D only: ``phi(t, Omega)`` as a list of intervals (one per domain interval)."""
        raise NotImplementedError


# ---------------------------------------------------------------------------
# closed-form 1D families
# ---------------------------------------------------------------------------


class ClosedFormFlow1D(Semiflow):
    """1D flow with analytic ``phi``, log-Jacobian and travel times."""

    closed_form = True
    dim = 1

    def __init__(self, domain: Domain, tol: Tolerances = Tolerances()):
        if domain.dim != 1:
            raise ValueError("closed-form 1D flow on a multidimensional domain")
        self.domain = domain
        self.tol = tol

    # subclasses -------------------------------------------------------------
    def phi(self, t, x):
        raise NotImplementedError

    def log_jac(self, t, x):
        raise NotImplementedError

    def velocity(self, x):
        raise NotImplementedError

    def travel_time(self, x, b):
        """``int_x^b du / F(u)``; ``inf`` when ``b`` is not reachable."""
        raise NotImplementedError

    # ------------------------------------------------------------------------
    def exit_time(self, x, direction: int = 1, horizon: float = math.inf) -> np.ndarray:
        pts, shape = self._flat(x)
        out = np.full(len(pts), math.inf)
        box = self.domain.box_index(pts)
        out[box < 0] = 0.0
        v = direction * self.velocity(pts)
        for k, (lo, hi) in enumerate(self.domain.boxes):
            for sel, bound in ((box == k) & (v > 0), hi[0]), ((box == k) & (v < 0), lo[0]):
                if np.any(sel):
                    with np.errstate(all="ignore"):
                        tau = direction * self.travel_time(pts[sel], bound)
                    tau = np.where(np.isfinite(tau) & (tau >= 0), tau, math.inf)
                    out[sel] = tau
        return out.reshape(shape)

    def _trajectory(self, pts, times, direction, integrand):
        exit_t = self.exit_time(pts, direction)
        s = direction * times[:, None]
        with np.errstate(all="ignore"):
            y = self.phi(s, pts[None, :])
            lj = self.log_jac(s, pts[None, :]) * np.ones_like(y)
        dead = times[:, None] >= exit_t[None, :]
        y = np.where(dead, np.nan, y)
        lj = np.where(dead, np.nan, lj)
        integral = None
        if integrand is not None:
            integral = _path_integral(lambda u: self.phi(direction * u, pts), integrand, times, exit_t, self.tol)
        return Trajectory(times, y, lj, exit_t, integral)

    def image_interval(self, t: float) -> list[tuple[float, float]]:
        out = []
        with np.errstate(all="ignore"):
            for lo, hi in self.domain.boxes:
                a, b = self.phi(t, np.array([lo[0], hi[0]]))
                a = lo[0] if np.isnan(a) else a
                b = hi[0] if np.isnan(b) else b
                out.append((max(float(a), lo[0]), min(float(b), hi[0])))
        return out


def _path_integral(path, integrand, times, exit_t, tol: Tolerances) -> np.ndarray:
    """Cumulative ``int_0^t g(path(u)) du`` at ``times`` via adaptive vector quadrature."""
    n = len(exit_t)
    out = np.zeros((len(times), n))
    acc = np.zeros(n)
    prev = 0.0

    def g(u):
        vals = np.asarray(integrand(path(u)), dtype=float)
        return np.where(u < exit_t, vals, 0.0)

    for i, t in enumerate(times):
        if t > prev:
            val, _ = quad_vec(g, prev, t, epsrel=tol.tol_quad, epsabs=tol.tol_quad * 1e-2, limit=400)
            acc = acc + val
            prev = t
        out[i] = acc
    out[times[:, None] >= exit_t[None, :]] = np.nan
    return out


class TranslationFlow(ClosedFormFlow1D):
    """``F = v``: ``phi(t, x) = x + v t``."""

    def __init__(self, domain: Domain, speed: float = 1.0, tol: Tolerances = Tolerances()):
        super().__init__(domain, tol)
        self.speed = float(speed)

    def phi(self, t, x):
        return x + self.speed * t

    def log_jac(self, t, x):
        return np.zeros(np.broadcast(t, x).shape)

    def velocity(self, x):
        return np.full(np.shape(x), self.speed)

    def travel_time(self, x, b):
        if not np.isfinite(b) or self.speed == 0:
            return np.full(np.shape(x), math.inf)
        return (b - x) / self.speed


class AffineFlow(ClosedFormFlow1D):
    """``F(x) = a x + b``: ``phi(t, x) = e + (x - e) exp(a t)`` with ``e = -b/a``."""

    def __init__(self, domain: Domain, a: float, b: float, tol: Tolerances = Tolerances()):
        super().__init__(domain, tol)
        self.a, self.b = float(a), float(b)

    @property
    def equilibrium(self) -> Optional[float]:
        return -self.b / self.a if self.a else None

    def phi(self, t, x):
        if self.a == 0:
            return x + self.b * t
        e = self.equilibrium
        return e + (x - e) * np.exp(self.a * t)

    def log_jac(self, t, x):
        return self.a * np.asarray(t) * np.ones(np.broadcast(t, x).shape)

    def velocity(self, x):
        return self.a * np.asarray(x) + self.b

    def travel_time(self, x, b):
        x = np.asarray(x, dtype=float)
        if self.a == 0:
            if not np.isfinite(b) or self.b == 0:
                return np.full(x.shape, math.inf)
            return (b - x) / self.b
        e = self.equilibrium
        if not np.isfinite(b):
            return np.full(x.shape, math.inf)
        ratio = (b - e) / (x - e)
        return np.where(ratio > 0, np.log(np.where(ratio > 0, ratio, 1.0)) / self.a, math.inf)


class PowerDecayFlow(ClosedFormFlow1D):
    """``F(x) = -x**r`` on a subset of ``(0, inf)``, ``r > 1``."""

    def __init__(self, domain: Domain, r: float, tol: Tolerances = Tolerances()):
        super().__init__(domain, tol)
        if r <= 1:
            raise ValueError("PowerDecayFlow needs r > 1")
        if domain.boxes[0][0][0] < 0:
            raise ValueError("PowerDecayFlow lives on (0, inf)")
        self.r = float(r)

    def _base(self, t, x):
        return (self.r - 1.0) * t + np.power(x, 1.0 - self.r)

    def phi(self, t, x):
        base = self._base(t, x)
        return np.where(base > 0, np.power(np.where(base > 0, base, 1.0), 1.0 / (1.0 - self.r)), np.nan)

    def log_jac(self, t, x):
        r = self.r
        base = self._base(t, x)
        return np.where(base > 0, -r * np.log(x) + (r / (1.0 - r)) * np.log(np.where(base > 0, base, 1.0)), np.nan)

    def velocity(self, x):
        return -np.power(x, self.r)

    def travel_time(self, x, b):
        x = np.asarray(x, dtype=float)
        if b == 0:
            return np.full(x.shape, math.inf)
        bb = 0.0 if not np.isfinite(b) else b ** (1.0 - self.r)
        return (bb - np.power(x, 1.0 - self.r)) / (self.r - 1.0)


# ---------------------------------------------------------------------------
# products and user closures
# ---------------------------------------------------------------------------


class ProductSemiflow(Semiflow):
    """Coordinatewise product of 1D closed-form flows on a single box."""

    closed_form = True

    def __init__(self, factors: Sequence[ClosedFormFlow1D], tol: Tolerances = Tolerances()):
        self.factors = list(factors)
        self.dim = len(self.factors)
        lo = [f.domain.boxes[0][0][0] for f in self.factors]
        hi = [f.domain.boxes[0][1][0] for f in self.factors]
        self.domain = Domain.box(lo, hi)
        self.tol = tol

    def exit_time(self, x, direction: int = 1, horizon: float = math.inf) -> np.ndarray:
        pts, shape = self._flat(x)
        ts = [f.exit_time(pts[:, k], direction) for k, f in enumerate(self.factors)]
        return np.min(ts, axis=0).reshape(shape)

    def _trajectory(self, pts, times, direction, integrand):
        parts = [f._trajectory(pts[:, k], times, direction, None) for k, f in enumerate(self.factors)]
        exit_t = np.min([p.exit_time for p in parts], axis=0)
        y = np.stack([p.points for p in parts], axis=-1)
        lj = np.sum([p.log_jac for p in parts], axis=0)
        dead = times[:, None] >= exit_t[None, :]
        y[dead] = np.nan
        lj[dead] = np.nan
        integral = None
        if integrand is not None:
            path = lambda u: np.stack([f.phi(direction * u, pts[:, k]) for k, f in enumerate(self.factors)], axis=-1)
            integral = _path_integral(path, integrand, times, exit_t, self.tol)
        return Trajectory(times, y, lj, exit_t, integral)

    def image_box(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        ivs = [f.image_interval(t)[0] for f in self.factors]
        return np.array([a for a, _ in ivs]), np.array([b for _, b in ivs])


class ClosureSemiflow(Semiflow):
    """User-supplied ``phi(t, x)`` and ``log|det D phi(t, x)|`` for signed ``t``.

    ``phi`` must return NaN where the (backward) flow is undefined.  Exit and
    escape times fall back to the generic doubling/bisection search.
    """

    def __init__(self, domain: Domain, phi: Callable, log_jac: Callable, tol: Tolerances = Tolerances()):
        self.domain = domain
        self.dim = domain.dim
        self._phi = phi
        self._log_jac = log_jac
        self.tol = tol

    def _trajectory(self, pts, times, direction, integrand):
        m = len(times)
        ys, ljs = [], []
        for t in times:
            ys.append(np.asarray(self._phi(direction * t, pts), dtype=float))
            ljs.append(np.asarray(self._log_jac(direction * t, pts), dtype=float))
        y = np.stack(ys)
        lj = np.stack(ljs)
        ok = self.domain.contains(y) & np.isfinite(lj)
        exit_t = np.full(len(pts), math.inf)
        for j in range(len(pts)):
            bad = np.flatnonzero(~ok[:, j])
            if bad.size:
                exit_t[j] = times[bad[0]]
        dead = times[:, None] >= exit_t[None, :]
        y[dead] = np.nan
        lj[dead] = np.nan
        integral = None
        if integrand is not None:
            path = lambda u: np.asarray(self._phi(direction * u, pts), dtype=float)
            integral = _path_integral(path, integrand, times, exit_t, self.tol)
        return Trajectory(times, y, lj, exit_t, integral)


# ---------------------------------------------------------------------------
# numeric flows
# ---------------------------------------------------------------------------


class NumericSemiflow(Semiflow):
    """Dormand-Prince (DOP853) integration of ``x' = F(x)`` with dense output.

    The log-Jacobian is carried as ``(log det D)' = div F`` (the determinant form
    of the variational equation), which stays well scaled when ``D`` itself
    under- or overflows.  Leaving the start box (or ``|x| > 1e12``) is a terminal
    event; finite faces where ``F`` does not vanish carry the ``tol_domain`` margin.
    """

    def __init__(self, field: VectorField, domain: Domain, tol: Tolerances = Tolerances(),
                 cache: bool = True, chunk: int = 64):
        self.field = field
        self.domain = domain
        self.dim = domain.dim
        self.tol = tol
        self.chunk = chunk
        self._cache: Optional[OrderedDict] = OrderedDict() if cache else None
        self._lock = threading.Lock()
        grid = domain.grid(64)
        Fg = np.abs(field(grid))
        scale = float(np.max(Fg[np.isfinite(Fg)], initial=1.0)) or 1.0
        self._zero = tol.zero_tol * scale

    def _face_margins(self, lo, hi):
        """Margins for the faces of one box (1D: skip faces that are equilibria)."""
        mlo = np.zeros_like(lo)
        mhi = np.zeros_like(hi)
        for k in range(self.dim):
            for bound, m in ((lo[k], mlo), (hi[k], mhi)):
                if not np.isfinite(bound):
                    continue
                margin = self.tol.tol_domain * max(1.0, abs(bound))
                if self.dim == 1:
                    with np.errstate(all="ignore"):
                        fb = float(self.field(np.array(bound)))
                    if np.isfinite(fb) and abs(fb) <= self._zero:
                        margin = 0.0
                m[k] = margin
        return mlo, mhi

    def _trajectory(self, pts, times, direction, integrand):
        key = None
        if self._cache is not None:
            key = (direction, times.tobytes(), np.ascontiguousarray(pts).tobytes(), id(integrand))
            with self._lock:
                hit = self._cache.get(key)
                if hit is not None:
                    self._cache.move_to_end(key)
                    return hit
        parts = [self._chunk(pts[i:i + self.chunk], times, direction, integrand)
                 for i in range(0, max(len(pts), 1), self.chunk)]
        tr = Trajectory(
            times,
            np.concatenate([p.points for p in parts], axis=1),
            np.concatenate([p.log_jac for p in parts], axis=1),
            np.concatenate([p.exit_time for p in parts]),
            None if integrand is None else np.concatenate([p.integral for p in parts], axis=1),
        )
        if key is not None:
            with self._lock:
                self._cache[key] = tr
                while len(self._cache) > 256:
                    self._cache.popitem(last=False)
        return tr

    def _chunk(self, pts, times, direction, integrand):
        N = self.dim
        P = np.asarray(pts, dtype=float).reshape(len(pts), N)
        n = len(P)
        S = N + 1 + (integrand is not None)
        m = len(times)
        out_y = np.full((m, n, N), np.nan)
        out_l = np.full((m, n), np.nan)
        out_q = np.full((m, n), np.nan) if integrand is not None else None
        exit_t = np.full(n, math.inf)

        box = self.domain.box_index(P if N > 1 else P[:, 0])
        lo = np.full((n, N), -np.inf)
        hi = np.full((n, N), np.inf)
        mlo = np.zeros((n, N))
        mhi = np.zeros((n, N))
        for k, (blo, bhi) in enumerate(self.domain.boxes):
            sel = box == k
            lo[sel], hi[sel] = blo, bhi
            a, b = self._face_margins(np.asarray(blo), np.asarray(bhi))
            mlo[sel], mhi[sel] = a, b
        lo_c = np.where(np.isfinite(lo), lo + mlo, -_BIG)
        hi_c = np.where(np.isfinite(hi), hi - mhi, _BIG)

        def gap(y):
            return np.minimum((y - lo_c[active]).min(axis=-1), (hi_c[active] - y).min(axis=-1))

        active = box >= 0
        exit_t[~active] = 0.0
        Y0 = np.zeros((n, S))
        Y0[:, :N] = P
        if active.any():
            g0 = gap(P[active])
            idx = np.flatnonzero(active)
            exit_t[idx[g0 <= 0]] = 0.0
            active[idx[g0 <= 0]] = False

        zero_mask = times == 0
        out_y[zero_mask] = np.where(active[:, None], P, np.nan)[None]
        out_l[zero_mask] = np.where(active, 0.0, np.nan)[None]
        if out_q is not None:
            out_q[zero_mask] = np.where(active, 0.0, np.nan)[None]

        F = self.field
        t0 = 0.0
        T = float(times[-1]) if m else 0.0
        rtol, atol = self.tol.tol_ode, self.tol.atol_ode

        while active.any() and t0 < T:
            act = active.copy()

            def rhs(s, Yf):
                Y = Yf.reshape(n, S)
                dY = np.zeros_like(Y)
                y = Y[act, :N]
                yy = y[:, 0] if N == 1 else y
                with np.errstate(all="ignore"):
                    f = F(yy)
                    dY[act, :N] = direction * (f[:, None] if N == 1 else f)
                    dY[act, N] = direction * F.divergence(yy)
                    if integrand is not None:
                        dY[act, N + 1] = integrand(yy)
                return dY.ravel()

            def event(s, Yf):
                y = Yf.reshape(n, S)[act, :N]
                return float(np.min(np.minimum((y - lo_c[act]).min(axis=-1), (hi_c[act] - y).min(axis=-1))))

            event.terminal = True
            event.direction = -1
            sol = solve_ivp(rhs, (t0, T), Y0.ravel(), method="DOP853", rtol=rtol, atol=atol,
                            dense_output=True, events=event)
            t1 = float(sol.t[-1])
            sel = (times > t0) & (times <= t1)
            if sel.any():
                vals = sol.sol(times[sel]).reshape(n, S, -1)
                vals = np.moveaxis(vals, -1, 0)
                out_y[sel] = np.where(act[None, :, None], vals[:, :, :N], out_y[sel])
                out_l[sel] = np.where(act[None, :], vals[:, :, N], out_l[sel])
                if out_q is not None:
                    out_q[sel] = np.where(act[None, :], vals[:, :, N + 1], out_q[sel])
            Yend = sol.y[:, -1].reshape(n, S)
            if sol.status == 1 and sol.t_events[0].size:
                g = np.full(n, np.inf)
                y = Yend[act, :N]
                g[act] = np.minimum((y - lo_c[act]).min(axis=-1), (hi_c[act] - y).min(axis=-1))
                gone = act & (g <= g[act].min() + 1e-12 * (1.0 + np.abs(Yend[:, :N]).max(axis=-1)))
            elif sol.status == -1:
                with np.errstate(all="ignore"):
                    y = Yend[:, :N]
                    speed = np.linalg.norm(np.atleast_2d(F(y[:, 0] if N == 1 else y)).reshape(n, -1), axis=-1)
                speed = np.where(act & np.isfinite(speed), speed, -1.0)
                gone = act & ((speed >= 0.5 * speed.max()) | ~np.isfinite(Yend[:, :N]).all(axis=-1))
                if not gone.any():
                    gone = act.copy()
            else:
                break
            exit_t[gone] = t1
            active &= ~gone
            Y0 = Yend
            t0 = t1

        dead = times[:, None] >= exit_t[None, :]
        out_y[dead] = np.nan
        out_l[dead] = np.nan
        if out_q is not None:
            out_q[dead] = np.nan
        y = out_y[..., 0] if N == 1 else out_y
        return Trajectory(times, y, out_l, exit_t, out_q)

    def exit_time(self, x, direction: int = 1, horizon: float = math.inf) -> np.ndarray:
        pts, shape = self._flat(x)
        T = horizon if np.isfinite(horizon) else self.tol.horizon
        tr = self._trajectory(pts, np.array([float(T)]), direction, None)
        return tr.exit_time.reshape(shape)

    def image_interval(self, t: float) -> list[tuple[float, float]]:
        if self.dim != 1:
            raise NotImplementedError("image intervals are 1D only")
        out = []
        for lo, hi in self.domain.boxes:
            ends = []
            for bound, inward in ((lo[0], 1.0), (hi[0], -1.0)):
                if not np.isfinite(bound):
                    ends.append(bound)
                    continue
                start = bound + inward * 4 * self.tol.tol_domain * max(1.0, abs(bound))
                tr = self._trajectory(np.array([start]), np.array([float(t)]), 1, None)
                ends.append(float(tr.points[0, 0]) if tr.exit_time[0] > t else bound)
            out.append((ends[0], ends[1]))
        return out


# ---------------------------------------------------------------------------
# functional API
# ---------------------------------------------------------------------------


def flow(sf: Semiflow, t: float, x):
    """``phi(t, x)``; raises :class:`DomainExitError` if the path leaves the domain first."""
    return sf.flow(t, x)


def inverse_flow(sf: Semiflow, t: float, x):
    """``phi(-t, x)`` for a scalar point, or ``None`` when ``x`` is not in ``phi(t, Omega)``."""
    y, inside = sf.inverse(t, x)
    if np.ndim(inside) == 0:
        return float(y) if (inside and sf.dim == 1) else (np.asarray(y) if inside else None)
    return np.where(inside if sf.dim == 1 else inside[..., None], y, np.nan)


def flow_jacobian(sf: Semiflow, t: float, x) -> FlowJacobian:
    return FlowJacobian(float(np.exp(sf.log_jacobian(t, x))))


def image_indicator(sf: Semiflow, t: float, x):
    out = sf.image_indicator(t, x)
    return bool(out) if np.ndim(out) == 0 else out


def escape_time(sf: Semiflow, x, horizon: float = math.inf):
    """Escape time of a scalar point, ``None`` if it stays in the image up to ``horizon``."""
    out = sf.escape_time(x, horizon)
    if np.ndim(out) == 0:
        val = float(out)
        return None if not np.isfinite(val) or val > horizon else val
    return out
