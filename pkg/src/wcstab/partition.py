"""Equilibrium set ``{F = 0}``, its complement, and probes of the standing hypotheses."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .families import make_semiflow
from .model import ProblemSpec
from .semiflow import Semiflow

__all__ = ["DomainPartition", "partition_domain", "Finding", "ValidationReport", "validate_hypotheses"]


@dataclass(frozen=True)
class DomainPartition:
    """``omega0`` and ``omega1`` as lists of ``(lo, hi)`` boxes.

    Degenerate boxes (``lo == hi``) mark isolated equilibria.  ``exact`` is true
    when the zero set came from a registered family rather than sampling.
    """

    omega0: list
    omega1: list
    zero_tolerance: float
    exact: bool = False
    grid: Optional[np.ndarray] = field(default=None, repr=False, compare=False)
    mask0: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    @property
    def omega0_measure(self) -> float:
        return float(sum(np.prod(np.subtract(hi, lo)) for lo, hi in self.omega0))

    @property
    def omega0_null(self) -> bool:
        """Whether ``omega0`` has Lebesgue measure zero (at grid resolution)."""
        return self.omega0_measure == 0.0

    def in_omega0(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        pts = x[..., None] if np.ndim(x) == 0 or (self.omega0 and np.size(self.omega0[0][0]) == 1) else x
        out = np.zeros(pts.shape[:-1], dtype=bool)
        for lo, hi in self.omega0:
            out |= np.all((pts >= np.atleast_1d(lo)) & (pts <= np.atleast_1d(hi)), axis=-1)
        return out

    def interior0(self, n: int = 21) -> np.ndarray:
        """Sample points strictly inside the positive-measure parts of ``omega0`` (1D)."""
        out = [np.linspace(lo, hi, n + 2)[1:-1] for lo, hi in self.omega0 if hi > lo]
        return np.concatenate(out) if out else np.empty(0)


def _runs(mask: np.ndarray, grid: np.ndarray) -> list:
    runs, start = [], None
    for i, m in enumerate(mask):
        if m and start is None:
            start = i
        if start is not None and (not m or i == len(mask) - 1):
            stop = i if m else i - 1
            runs.append((float(grid[start]), float(grid[stop])))
            start = None
    return runs


def _exact_zero_set(problem: ProblemSpec) -> Optional[list]:
    fam, prm = problem.field.family, problem.field.params
    if fam is None or problem.dim != 1:
        return None
    lo, hi = problem.domain.boxes[0][0][0], problem.domain.boxes[-1][1][0]
    whole = [(a[0], b[0]) for a, b in problem.domain.boxes]
    if fam == "translation":
        return whole if prm["speed"] == 0 else []
    if fam == "affine":
        a, b = prm["slope"], prm["offset"]
        if a == 0:
            return whole if b == 0 else []
        e = -b / a
        return [(e, e)] if problem.domain.contains(np.array(e)) else []
    return []       # -x and -x**r vanish only at 0, outside (0, inf)


def partition_domain(problem: ProblemSpec, grid=None) -> DomainPartition:
    """Split the sampled domain into ``{|F| <= zero_tolerance}`` and its complement."""
    grid = problem.grid() if grid is None else np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty grid")
    zt = problem.zero_threshold(grid)
    Fv = np.abs(problem.F(grid))
    if problem.dim > 1:
        Fv = np.linalg.norm(Fv, axis=-1)
    exact = _exact_zero_set(problem)
    if exact is not None:
        omega0 = exact
        mask0 = np.zeros(len(grid), dtype=bool)
        for lo, hi in omega0:
            mask0 |= (grid >= lo) & (grid <= hi)
        omega1 = []
        for a, b in problem.domain.boxes:
            cuts = sorted([a[0], b[0]] + [v for lo, hi in omega0 for v in (lo, hi) if a[0] < v < b[0]])
            omega1 += [(u, v) for u, v in zip(cuts[:-1], cuts[1:])
                       if not any(lo <= u and v <= hi for lo, hi in omega0)]
        return DomainPartition(omega0, omega1, zt, True, grid, mask0)
    mask0 = Fv <= zt
    if problem.dim == 1:
        order = np.argsort(grid)
        g, m = grid[order], mask0[order]
        return DomainPartition(_runs(m, g), _runs(~m, g), zt, False, grid, mask0)
    omega0 = [(tuple(pt), tuple(pt)) for pt in grid[mask0]]
    omega1 = [(tuple(lo), tuple(hi)) for lo, hi in problem.domain.boxes] if (~mask0).any() else []
    return DomainPartition(omega0, omega1, zt, False, grid, mask0)


@dataclass(frozen=True)
class Finding:
    check: str
    passed: bool
    detail: str = ""
    witness: Optional[object] = None


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple
    horizon: float

    @property
    def passed(self) -> bool:
        return all(f.passed for f in self.findings)

    def failed(self) -> list:
        return [f for f in self.findings if not f.passed]

    def to_dict(self) -> dict:
        return {"horizon": self.horizon, "passed": self.passed,
                "findings": [{"check": f.check, "passed": f.passed, "detail": f.detail,
                              "witness": None if f.witness is None else np.asarray(f.witness).tolist()}
                             for f in self.findings]}


def validate_hypotheses(problem: ProblemSpec, horizon: Optional[float] = None,
                        semiflow: Optional[Semiflow] = None) -> ValidationReport:
    """Probe smoothness of ``F``, forward completeness and injectivity of the flow.

    Findings are reported, never raised.
    """
    horizon = problem.tol.horizon if horizon is None else float(horizon)
    sf = semiflow or make_semiflow(problem.field, problem.domain, problem.tol, problem.numeric)
    grid = problem.grid(min(problem.tol.grid_points, 120))
    findings = []

    with np.errstate(all="ignore"):
        Fv, dF = problem.F(grid), problem.dF(grid)
    ok = bool(np.isfinite(Fv).all() and np.isfinite(dF).all())
    findings.append(Finding("F continuous", ok, "F and div F finite on the grid" if ok else "non-finite values",
                            None if ok else grid[~np.isfinite(np.atleast_1d(Fv)).reshape(len(grid), -1).all(-1)][:1]))
    if problem.dim == 1:
        x = grid[np.abs(grid) < 1e6]
        step = 1e-6 * np.maximum(1.0, np.abs(x))
        inside = problem.domain.contains(x - step) & problem.domain.contains(x + step)
        x, step = x[inside], step[inside]
        with np.errstate(all="ignore"):
            fd = (problem.F(x + step) - problem.F(x - step)) / (2 * step)
            err = np.abs(fd - problem.dF(x)) / np.maximum(1.0, np.abs(problem.dF(x)))
        ok = bool(np.all(err[np.isfinite(err)] <= 1e-4))
        findings.append(Finding("F differentiable", ok, f"max relative FD mismatch {np.nanmax(err, initial=0.0):.2e}",
                                None if ok else x[np.nanargmax(err)]))

    exit_t = np.asarray(sf.exit_time(grid, 1, horizon))
    bad = np.isfinite(exit_t) & (exit_t <= horizon)
    findings.append(Finding(
        "forward complete", not bad.any(),
        f"all {len(grid)} probes stay in the domain up to t={horizon:g}" if not bad.any()
        else f"{int(bad.sum())} probes leave the domain or blow up; earliest at t={exit_t[bad].min():.6g}",
        None if not bad.any() else grid[bad][np.argmin(exit_t[bad])]))

    if problem.dim == 1:
        worst = 0.0
        for lo, hi in problem.domain.boxes:
            g = np.sort(grid[(grid > lo[0]) & (grid < hi[0]) & ~bad])
            for t in (min(1.0, horizon), horizon):
                y = np.asarray(sf.flow(t, g, strict=False))
                dy = np.diff(y[np.isfinite(y)])
                if dy.size:
                    worst = min(worst, float(dy.min()) / max(1.0, float(np.abs(y[np.isfinite(y)]).max())))
        ok = worst >= -problem.tol.tol_flow
        findings.append(Finding("injective", ok, "phi(t, .) nondecreasing on the grid" if ok
                                else f"order reversal of relative size {-worst:.2e}"))
    else:
        findings.append(Finding("injective", True, "not probed for N > 1 (assumed)"))
    return ValidationReport(tuple(findings), horizon)
