"""Problem description: domain, vector field, multiplier, weight and exponent."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .expressions import Expression, parse_expression

__all__ = [
    "Domain",
    "VectorField",
    "Multiplier",
    "Tolerances",
    "ProblemSpec",
    "SPACES",
]

SPACES = ("Lp", "W1p", "W1p_star")

ArrayFn = Callable[[np.ndarray], np.ndarray]


class ProblemError(ValueError):
    """Invalid problem description."""


@dataclass(frozen=True)
class Tolerances:
    zero_tol: float = 1e-10      # relative to max|F| on the grid
    tol_ode: float = 1e-10
    atol_ode: float = 1e-12
    tol_quad: float = 1e-10
    tol_domain: float = 1e-9
    tol_flow: float = 1e-8
    slope_tol: float = 1e-3
    value_tol: float = 1e-6
    divergence_threshold: float = 20.0
    fd_tol: float = 1e-6
    horizon: float = 200.0
    grid_points: int = 200
    grid_extent: float = 50.0


@dataclass(frozen=True)
class Domain:
    """Finite union of open boxes ``prod_k (lo_k, hi_k)``; bounds may be infinite."""

    boxes: tuple[tuple[tuple[float, ...], tuple[float, ...]], ...]

    @classmethod
    def interval(cls, lo: float, hi: float) -> "Domain":
        return cls.box([lo], [hi])

    @classmethod
    def box(cls, lo: Sequence[float], hi: Sequence[float]) -> "Domain":
        lo_t, hi_t = tuple(float(v) for v in lo), tuple(float(v) for v in hi)
        if len(lo_t) != len(hi_t) or not lo_t:
            raise ProblemError("box bounds must have equal, nonzero length")
        if any(a >= b for a, b in zip(lo_t, hi_t)):
            raise ProblemError(f"empty box {lo_t} x {hi_t}")
        return cls(((lo_t, hi_t),))

    @classmethod
    def parse(cls, text: str) -> "Domain":
        """Parse ``"(0,1)"``, ``"(-inf,inf)"``, ``"(0,1)x(0,2)"`` or unions joined by ``|``."""
        boxes = []
        for part in text.split("|"):
            lo, hi = [], []
            for factor in part.lower().replace(" ", "").split(")x("):
                factor = factor.strip("()")
                bits = factor.split(",")
                if len(bits) != 2:
                    raise ProblemError(f"cannot parse interval {factor!r} in domain {text!r}")
                try:
                    a, b = (float(v.replace("infinity", "inf")) for v in bits)
                except ValueError:
                    raise ProblemError(f"non-numeric bound in domain {text!r}") from None
                lo.append(a)
                hi.append(b)
            boxes.extend(cls.box(lo, hi).boxes)
        dims = {len(b[0]) for b in boxes}
        if len(dims) != 1:
            raise ProblemError("all boxes must have the same dimension")
        return cls(tuple(boxes))

    def __str__(self) -> str:
        def fmt(v):
            return "inf" if v == math.inf else "-inf" if v == -math.inf else repr(v)

        return "|".join(
            "x".join(f"({fmt(a)},{fmt(b)})" for a, b in zip(lo, hi)) for lo, hi in self.boxes
        )

    @property
    def dim(self) -> int:
        return len(self.boxes[0][0])

    @property
    def bounded(self) -> bool:
        return all(np.isfinite(lo).all() and np.isfinite(hi).all() for lo, hi in self.boxes)

    @property
    def lo(self) -> np.ndarray:
        return np.asarray(self.boxes[0][0])

    @property
    def hi(self) -> np.ndarray:
        return np.asarray(self.boxes[0][1])

    def _as_points(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return x[..., None] if self.dim == 1 else x

    def contains(self, x) -> np.ndarray:
        pts = self._as_points(x)
        inside = np.zeros(pts.shape[:-1], dtype=bool)
        for lo, hi in self.boxes:
            inside |= np.all((pts > np.asarray(lo)) & (pts < np.asarray(hi)), axis=-1)
        return inside

    def box_index(self, x) -> np.ndarray:
        """Index of the box holding each point, -1 if outside."""
        pts = self._as_points(x)
        idx = np.full(pts.shape[:-1], -1, dtype=int)
        for k, (lo, hi) in enumerate(self.boxes):
            hit = np.all((pts > np.asarray(lo)) & (pts < np.asarray(hi)), axis=-1)
            idx = np.where((idx < 0) & hit, k, idx)
        return idx

    def measure(self) -> float:
        return float(sum(np.prod(np.subtract(hi, lo)) for lo, hi in self.boxes))

    def grid(self, n: int = 200, extent: float = 50.0, cluster: float = 1e-12) -> np.ndarray:
        """Sample grid: geometric clustering at finite ends, sinh spacing toward infinite ones.

        1D domains return shape ``(m,)``; N-D domains return ``(m, N)`` tensor grids.
        """
        per_box = max(n // len(self.boxes), 8)
        if self.dim == 1:
            pts = [_interval_grid(lo[0], hi[0], per_box, extent, cluster) for lo, hi in self.boxes]
            return np.unique(np.concatenate(pts))
        out = []
        n_axis = max(int(round(per_box ** (1.0 / self.dim))), 6)
        for lo, hi in self.boxes:
            axes = [_interval_grid(a, b, n_axis, extent, max(cluster, 1e-8)) for a, b in zip(lo, hi)]
            mesh = np.meshgrid(*axes, indexing="ij")
            out.append(np.stack([m.ravel() for m in mesh], axis=-1))
        return np.concatenate(out)


def _interval_grid(lo: float, hi: float, n: int, extent: float, cluster: float) -> np.ndarray:
    n_geo = max(n // 4, 4)
    if np.isfinite(lo) and np.isfinite(hi):
        L = hi - lo
        geo = np.geomspace(cluster, 0.05, n_geo)
        mid = np.linspace(0.0, 1.0, max(n - 2 * n_geo, 3) + 2)[1:-1]
        u = np.concatenate([geo, mid, 1.0 - geo])
        pts = lo + L * u
    elif np.isfinite(lo):
        geo = lo + np.geomspace(cluster, 0.05, n_geo)
        far = lo + np.sinh(np.linspace(0.0, math.asinh(extent), max(n - n_geo, 3)))[1:]
        pts = np.concatenate([geo, far])
    elif np.isfinite(hi):
        geo = hi - np.geomspace(cluster, 0.05, n_geo)
        far = hi - np.sinh(np.linspace(0.0, math.asinh(extent), max(n - n_geo, 3)))[1:]
        pts = np.concatenate([geo, far])
    else:
        s = math.asinh(extent)
        pts = np.sinh(np.linspace(-s, s, n))
    pts = pts[(pts > lo) & (pts < hi)]
    return np.unique(pts)


@dataclass(frozen=True)
class VectorField:
    """Autonomous field ``F`` with derivative information.

    For ``dim == 1`` the evaluators act elementwise on arrays of any shape.
    For ``dim >= 2`` points carry a trailing axis of length ``dim``; ``jacobian``
    returns ``(..., dim, dim)`` and ``divergence`` returns ``(...)``.
    """

    dim: int
    func: ArrayFn
    jacobian: ArrayFn
    second: Optional[ArrayFn] = None      # F'' in 1D
    family: Optional[str] = None
    params: dict = field(default_factory=dict)
    text: Optional[str] = None

    def __call__(self, x) -> np.ndarray:
        return self.func(np.asarray(x, dtype=float))

    def divergence(self, x) -> np.ndarray:
        J = self.jacobian(np.asarray(x, dtype=float))
        return J if self.dim == 1 else np.trace(J, axis1=-2, axis2=-1)

    @classmethod
    def from_expressions(cls, texts: Sequence[str]) -> "VectorField":
        dim = len(texts)
        names = ("x",) if dim == 1 else tuple(f"x{k + 1}" for k in range(dim))
        exprs = [parse_expression(t, names) for t in texts]
        if any(e.is_complex for e in exprs):
            raise ProblemError("vector field must be real valued")
        if dim == 1:
            f = exprs[0].compile()
            d1 = exprs[0].diff().compile()
            d2 = exprs[0].diff().diff().compile()
            return cls(1, f, d1, d2, text=texts[0])
        comps = [e.compile() for e in exprs]
        jac = [[e.diff(v).compile() for v in names] for e in exprs]

        def func(x):
            return np.stack([c(*np.moveaxis(x, -1, 0)) for c in comps], axis=-1)

        def jacobian(x):
            args = np.moveaxis(x, -1, 0)
            return np.stack([np.stack([d(*args) for d in row], axis=-1) for row in jac], axis=-2)

        return cls(dim, func, jacobian, text="; ".join(texts))


@dataclass(frozen=True)
class Multiplier:
    """``h = const + div_coef * div F + extra``.

    Splitting off the constant and the divergence multiple lets the cocycle and
    the transport integrals be evaluated in closed form along any flow; only
    ``extra`` ever needs quadrature.
    """

    const: float = 0.0
    div_coef: float = 0.0
    extra: Optional[ArrayFn] = None
    extra_deriv: Optional[ArrayFn] = None
    text: Optional[str] = None

    @property
    def is_structured(self) -> bool:
        return self.extra is None

    @classmethod
    def constant(cls, c: float) -> "Multiplier":
        return cls(const=float(c), text=f"const:{float(c)!r}")

    @classmethod
    def from_expression(cls, expr: Expression) -> "Multiplier":
        if expr.is_complex:
            expr = expr.real_part()
        if expr.is_constant:
            return cls(const=expr.constant_value(), text=expr.text)
        return cls(extra=expr.compile(), extra_deriv=expr.diff().compile(), text=expr.text)

    def evaluate(self, x, F: VectorField) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        shape = x.shape if F.dim == 1 else x.shape[:-1]
        out = np.full(shape, self.const, dtype=float)
        if self.div_coef:
            out = out + self.div_coef * F.divergence(x)
        if self.extra is not None:
            out = out + np.real(self.extra(x) if F.dim == 1 else self.extra(*np.moveaxis(x, -1, 0)))
        return out

    def derivative(self, x, F: VectorField) -> np.ndarray:
        """``h'`` in 1D."""
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        if self.div_coef:
            if F.second is None:
                raise ProblemError("multiplier derivative needs F''")
            out = out + self.div_coef * F.second(x)
        if self.extra is not None:
            if self.extra_deriv is None:
                raise ProblemError("multiplier derivative not available")
            out = out + np.real(self.extra_deriv(x))
        return out


@dataclass(frozen=True)
class ProblemSpec:
    """A weighted composition semigroup ``(T(t)f)(x) = h_t(x) f(phi(t,x))`` on a weighted space."""

    domain: Domain
    field: VectorField
    multiplier: Multiplier
    p: float = 2.0
    space: str = "Lp"
    rho: Optional[ArrayFn] = None          # None means rho == 1
    rho_text: Optional[str] = None
    scalar_mode: str = "real"
    tol: Tolerances = Tolerances()
    numeric: bool = False                  # force Runge-Kutta even for registered families
    source: Optional[object] = field(default=None, compare=False, repr=False)
    log_rho: Optional[ArrayFn] = field(default=None, compare=False, repr=False)   # overflow-safe log of rho

    def __post_init__(self):
        if not (self.p >= 1):
            raise ProblemError("p must be >= 1")
        if self.space not in SPACES:
            raise ProblemError(f"space must be one of {SPACES}, got {self.space!r}")
        if self.field.dim != self.domain.dim:
            raise ProblemError("field and domain dimensions differ")
        if self.scalar_mode not in ("real", "complex-reduced"):
            raise ProblemError(f"unknown scalar_mode {self.scalar_mode!r}")
        if self.space != "Lp":
            if self.dim != 1 or len(self.domain.boxes) != 1 or not self.domain.bounded:
                raise ProblemError("Sobolev spaces need a bounded interval (a, b)")
            a = self.domain.lo[0]
            scale = max(1.0, float(np.max(np.abs(self.F(self.domain.grid(64))))))
            if abs(float(self.F(a))) > self.tol.zero_tol * scale:
                raise ProblemError("Sobolev spaces need F(a) = 0 at the left endpoint")

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def family(self) -> Optional[str]:
        return self.field.family

    @property
    def rho_is_one(self) -> bool:
        return self.rho is None

    def F(self, x) -> np.ndarray:
        return self.field(x)

    def dF(self, x) -> np.ndarray:
        return self.field.divergence(x)

    def h(self, x) -> np.ndarray:
        return self.multiplier.evaluate(x, self.field)

    def h_prime(self, x) -> np.ndarray:
        return self.multiplier.derivative(x, self.field)

    def weight(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        shape = x.shape if self.dim == 1 else x.shape[:-1]
        if self.rho is None:
            return np.ones(shape)
        return np.asarray(self.rho(x) if self.dim == 1 else self.rho(*np.moveaxis(x, -1, 0)), dtype=float) * np.ones(shape)

    def log_weight(self, x) -> np.ndarray:
        if self.log_rho is not None:
            x = np.asarray(x, dtype=float)
            shape = x.shape if self.dim == 1 else x.shape[:-1]
            out = self.log_rho(x) if self.dim == 1 else self.log_rho(*np.moveaxis(x, -1, 0))
            return np.asarray(out, dtype=float) * np.ones(shape)
        with np.errstate(divide="ignore"):
            return np.log(self.weight(x))

    def grid(self, n: Optional[int] = None) -> np.ndarray:
        return self.domain.grid(n or self.tol.grid_points, extent=self.tol.grid_extent)

    def zero_threshold(self, grid=None) -> float:
        """Absolute threshold below which ``|F|`` counts as zero."""
        grid = self.grid() if grid is None else grid
        Fv = np.abs(self.F(grid))
        if self.dim > 1:
            Fv = np.linalg.norm(Fv, axis=-1)
        scale = float(np.max(Fv[np.isfinite(Fv)], initial=0.0))
        return self.tol.zero_tol * (scale if scale > 0 else 1.0)

    def with_(self, **changes) -> "ProblemSpec":
        return replace(self, **changes)
