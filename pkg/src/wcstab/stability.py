"""Stability classifiers built on transported-weight evidence.

* :func:`classify_stability_general` -- boundedness of ``sup rho_{t,p}/rho`` plus
  decay of ``int_Q rho_{t,p}`` on bounded boxes (any dimension up to 3).
* :func:`classify_stability_1d` -- boundedness, pointwise decay of
  ``rho_{t,p}`` on ``Omega_1`` (or finite escape times) and the sign of ``h``
  on ``Omega_0``.
* :func:`classify_stability_rho1` -- unit weight and nonvanishing field: the
  transport integral of ``(h - F'/p) / F`` is bounded above, and diverges to
  ``-inf`` when the flow is onto.
"""

from __future__ import annotations

import math
import time
from typing import Optional, Sequence

import numpy as np

from .evidence import (
    BOUNDED,
    DECAYS,
    FAIL,
    GROWS,
    INCONCLUSIVE,
    PASS,
    UNKNOWN,
    CriterionResult,
    DecayEvidence,
    Verdict,
    assemble_verdict,
    detect_growth,
)
from .model import ProblemSpec
from .partition import DomainPartition, partition_domain
from .weights import WeightEvolution, time_grid

__all__ = [
    "NotASemigroupError",
    "check_boundedness",
    "check_pointwise_decay",
    "check_escape",
    "check_omega0_sign",
    "check_wstar_integral",
    "stability_integral",
    "classify_stability_1d",
    "classify_stability_rho1",
    "classify_stability_general",
    "classify",
]


class NotASemigroupError(RuntimeError):
    """The admissibility inequality is refuted: no exponential bound on ``rho_{t,p}/rho``."""


def _we(problem_or_we) -> WeightEvolution:
    return problem_or_we if isinstance(problem_or_we, WeightEvolution) else WeightEvolution(problem_or_we)


def _horizon(we: WeightEvolution, horizon) -> float:
    return we.problem.tol.horizon if horizon is None else float(horizon)


def _subsample(points: np.ndarray, n: int) -> np.ndarray:
    if len(points) <= n:
        return points
    return points[np.unique(np.linspace(0, len(points) - 1, n).astype(int))]


# --- criteria -----------------------------------------------------------------


def check_boundedness(we, horizon=None, grid=None, times=None) -> CriterionResult:
    """``sup_t ||rho_{t,p}/rho||_inf < inf`` judged from the log-sup curve."""
    we = _we(we)
    tol = we.problem.tol
    times = time_grid(_horizon(we, horizon)) if times is None else np.asarray(times, dtype=float)
    curve = we.sup_curve(times, grid)
    g = detect_growth(curve.times, curve.log_sup, tol.slope_tol)
    ev = {"growth": g.to_dict(), "grid_size": curve.grid_size, "refine_rounds": curve.refine_rounds,
          "horizon": float(times.max()), "n_times": int(times.size)}
    note = "single time sample; low confidence" if g.low_confidence else ""
    if g.bounded:
        return CriterionResult("bounded", PASS, ev, note=note)
    i = int(np.argmax(curve.log_sup))
    return CriterionResult("bounded", FAIL, ev,
                           {"growth_exponent": g.growth_exponent, "t": curve.times[i], "x": curve.argmax[i]}, note)


def check_pointwise_decay(we, horizon=None, grid=None, times=None, n_points: int = 25) -> CriterionResult:
    """``rho_{t,p}(x) -> 0`` at sampled ``x`` in ``Omega_1``."""
    we = _we(we)
    tol = we.problem.tol
    times = time_grid(_horizon(we, horizon)) if times is None else np.asarray(times, dtype=float)
    if grid is None:
        part = partition_domain(we.problem)
        grid = part.grid[~part.mask0]
    pts = _subsample(np.asarray(grid, dtype=float), n_points)
    if pts.size == 0:
        return CriterionResult("pointwise_decay", PASS, {"points": 0}, note="Omega_1 empty")
    L = we.log_rho_tp_curve(times, pts)
    per_point, worst = [], None
    for j in range(L.shape[1]):
        ev = DecayEvidence.from_log_curve(times, L[:, j], tol.slope_tol, tol.value_tol)
        per_point.append({"x": pts[j].tolist() if np.ndim(pts[j]) else float(pts[j]), **ev.to_dict()})
        if ev.classification in (BOUNDED, GROWS) and worst is None:
            worst = per_point[-1]
    classes = [d["classification"] for d in per_point]
    evidence = {"points": per_point, "counts": {c: classes.count(c) for c in set(classes)}}
    if all(c == DECAYS for c in classes):
        return CriterionResult("pointwise_decay", PASS, evidence)
    if worst is not None:
        return CriterionResult("pointwise_decay", FAIL, evidence, {"x": worst["x"], "classification": worst["classification"]})
    return CriterionResult("pointwise_decay", UNKNOWN, evidence)


def check_escape(we, horizon=None, grid=None) -> CriterionResult:
    """Every sampled ``x`` in ``Omega_1`` leaves ``phi(t, Omega)`` in finite time."""
    we = _we(we)
    if grid is None:
        part = partition_domain(we.problem)
        grid = part.grid[~part.mask0]
    grid = np.asarray(grid, dtype=float)
    T = _horizon(we, horizon)
    esc = np.asarray(we.sf.escape_time(grid, T), dtype=float)
    finite = np.isfinite(esc)
    ev = {"points": int(grid.shape[0]), "finite": int(finite.sum()),
          "max_escape_time": float(esc[finite].max()) if finite.any() else None}
    if finite.all():
        return CriterionResult("escape", PASS, ev)
    j = int(np.flatnonzero(~finite)[0])
    return CriterionResult("escape", UNKNOWN, ev, {"x": grid[j].tolist() if grid.ndim > 1 else float(grid[j])},
                           note="some points stay in the image up to the horizon")


def check_omega0_sign(problem: ProblemSpec, partition: Optional[DomainPartition] = None, grid=None) -> CriterionResult:
    """``h < 0`` on ``Omega_0`` whenever ``Omega_0`` has positive measure."""
    part = partition or partition_domain(problem)
    if part.omega0_null:
        return CriterionResult("omega0_sign", PASS, {"omega0": part.omega0, "measure": 0.0},
                               note="Omega_0 is null; vacuous")
    pts = part.interior0() if grid is None else np.asarray(grid, dtype=float)
    hv = problem.h(pts)
    ev = {"omega0": part.omega0, "measure": part.omega0_measure, "samples": int(pts.size), "max_h": float(hv.max())}
    bad = np.flatnonzero(hv >= 0)
    if bad.size:
        return CriterionResult("omega0_sign", FAIL, ev, {"x": float(pts[bad[-1]]), "h": float(hv[bad[-1]])})
    return CriterionResult("omega0_sign", PASS, ev)


def check_wstar_integral(we, lo, hi, horizon=None, times=None) -> CriterionResult:
    """``int_Q rho_{t,p} -> 0`` on the box ``Q = [lo, hi]``."""
    we = _we(we)
    tol = we.problem.tol
    lo, hi = np.atleast_1d(lo).astype(float), np.atleast_1d(hi).astype(float)
    if lo.size > 3:
        raise ValueError("unsupported dimension: box integrals need N <= 3")
    times = time_grid(_horizon(we, horizon), 51, 20) if times is None else np.asarray(times, dtype=float)
    vals = we.box_integral(times, lo, hi)
    with np.errstate(divide="ignore"):
        ev = DecayEvidence.from_log_curve(times, np.log(vals), tol.slope_tol, tol.value_tol)
    data = {"box": [lo.tolist(), hi.tolist()], **ev.to_dict(12)}
    cid = f"wstar[{','.join(f'{a:g}' for a in lo)}:{','.join(f'{b:g}' for b in hi)}]"
    if ev.classification == DECAYS:
        return CriterionResult(cid, PASS, data)
    if ev.classification in (BOUNDED, GROWS):
        return CriterionResult(cid, FAIL, data, {"box": [lo.tolist(), hi.tolist()], "final": float(vals[-1])})
    return CriterionResult(cid, UNKNOWN, data)


def stability_integral(we, y, t: float) -> np.ndarray:
    """``int_y^{phi(t,y)} (h - F'/p) / F ds``, equal to ``log h_t(y) - log d_x phi(t,y) / p``."""
    we = _we(we)
    if we.problem.dim != 1:
        raise ValueError("the transport integral is 1D")
    y = np.asarray(y, dtype=float)
    return _integral_curve(we, [float(t)], y.reshape(-1))[0].reshape(y.shape)


def _integral_curve(we: WeightEvolution, times, y) -> np.ndarray:
    tr = we.sf.trajectory(y, np.asarray(times, dtype=float), 1, we._g)
    out = we._log_h(tr, 1) - tr.log_jac / we.p
    return np.where(tr.alive, out, np.nan)


# --- classifiers --------------------------------------------------------------


def _meta(we: WeightEvolution, horizon: float, grid, t0: float, **extra) -> dict:
    return {"horizon": horizon, "grid_points": int(np.shape(grid)[0]), "p": we.p,
            "wall_time": round(time.perf_counter() - t0, 6), **extra}


def _admissibility(we: WeightEvolution, horizon: float, grid):
    fit = we.admissibility_fit(horizon, grid=grid)
    if fit.refuted:
        raise NotASemigroupError("not a C0-semigroup on this space: rho_{t,p}/rho grows faster than "
                                 f"any exponential (curvature {fit.curvature:.3g})")
    return fit


def classify_stability_general(problem_or_we, horizon=None, boxes: Optional[Sequence] = None, grid=None) -> Verdict:
    """Boundedness plus decay of ``int_Q rho_{t,p}`` over a family of bounded boxes."""
    t0 = time.perf_counter()
    we = _we(problem_or_we)
    pr = we.problem
    if pr.dim > 3:
        raise ValueError("unsupported dimension: N <= 3")
    T = _horizon(we, horizon)
    grid = pr.grid() if grid is None else np.asarray(grid, dtype=float)
    fit = _admissibility(we, T, grid)
    crit = [check_boundedness(we, T, grid)]
    for lo, hi in (boxes if boxes is not None else default_boxes(pr)):
        crit.append(check_wstar_integral(we, lo, hi, T))
    return assemble_verdict(crit, _meta(we, T, grid, t0, classifier="general", admissibility=fit.to_dict()))


def default_boxes(problem: ProblemSpec) -> list:
    out = []
    for lo, hi in problem.domain.boxes:
        lo, hi = np.asarray(lo), np.asarray(hi)
        if np.isfinite(lo).all() and np.isfinite(hi).all():
            out.append((lo, hi))
            continue
        for k in (1.0, 10.0):
            a = np.where(np.isfinite(lo), lo, -k)
            b = np.where(np.isfinite(hi), hi, k)
            a = np.where(np.isfinite(hi) & ~np.isfinite(lo), hi - k, a)
            b = np.where(np.isfinite(lo) & ~np.isfinite(hi), lo + k, b)
            out.append((a, b))
    return out


def classify_stability_1d(problem_or_we, horizon=None, grid=None) -> Verdict:
    """Boundedness, decay on ``Omega_1`` (escape times when all finite), ``h < 0`` on ``Omega_0``."""
    t0 = time.perf_counter()
    we = _we(problem_or_we)
    pr = we.problem
    if pr.dim != 1:
        raise ValueError("classify_stability_1d needs N = 1")
    T = _horizon(we, horizon)
    grid = pr.grid() if grid is None else np.asarray(grid, dtype=float)
    fit = _admissibility(we, T, grid)
    part = partition_domain(pr, grid)
    omega1 = grid[~part.mask0]
    crit = [check_boundedness(we, T, grid)]
    esc = check_escape(we, T, omega1) if omega1.size else CriterionResult("escape", PASS, {"points": 0})
    crit.append(esc if esc.passed else check_pointwise_decay(we, T, omega1))
    crit.append(check_omega0_sign(pr, part))
    return assemble_verdict(crit, _meta(we, T, grid, t0, classifier="1d", admissibility=fit.to_dict(),
                                        omega0=part.omega0))


def _surjectivity_probe(we: WeightEvolution, T: float) -> dict:
    """Escape times on the grid and image membership of points hugging the boundary."""
    pr = we.problem
    grid = pr.grid(60)
    esc = np.asarray(we.sf.escape_time(grid, T), dtype=float)
    edge = []
    for lo, hi in pr.domain.boxes:
        for b, s in ((lo[0], 1.0), (hi[0], -1.0)):
            if math.isfinite(b):
                edge += [b + s * d * max(1.0, abs(b)) for d in (1e-3, 1e-6)]
            else:
                edge += [-s * 1e3]
    edge = np.array(edge)
    inside = np.asarray(we.sf.image_indicator(T, edge), dtype=bool)
    return {"grid": grid, "escape": esc, "edge": edge, "edge_inside": inside}


def classify_stability_rho1(problem_or_we, horizon=None, grid=None) -> Verdict:
    """Unit weight, nonvanishing field: bounded transport integral (+ divergence when onto)."""
    t0 = time.perf_counter()
    we = _we(problem_or_we)
    pr = we.problem
    if pr.dim != 1:
        raise ValueError("classify_stability_rho1 needs N = 1")
    if not pr.rho_is_one:
        raise ValueError("classify_stability_rho1 needs rho = 1")
    T = _horizon(we, horizon)
    grid = pr.grid() if grid is None else np.asarray(grid, dtype=float)
    part = partition_domain(pr, grid)
    if part.omega0:
        raise ValueError(f"F vanishes in the domain at {part.omega0}; use classify_stability_1d")
    fit = _admissibility(we, T, grid)
    probe = _surjectivity_probe(we, T)
    finite = np.isfinite(probe["escape"])
    if finite.all():
        case = "escaping"
    elif not finite.any() and probe["edge_inside"].all():
        case = "onto"
    else:
        case = "ambiguous"
    case_ev = {"case": case, "finite_escape": int(finite.sum()), "probes": int(finite.size),
               "edge_points_in_image": int(probe["edge_inside"].sum())}

    times = time_grid(T)
    curve = we.sup_curve(times, grid)
    S = curve.log_sup / we.p                     # sup_y of the transport integral
    g = detect_growth(times, S, pr.tol.slope_tol)
    ev_a = {"growth": g.to_dict(), "sup_integral_final": float(S[-1]), "grid_size": curve.grid_size}
    if g.bounded:
        crit = [CriterionResult("integral_bounded", PASS, ev_a)]
    else:
        i = int(np.argmax(S))
        crit = [CriterionResult("integral_bounded", FAIL, ev_a,
                                {"growth_exponent": g.growth_exponent, "t": times[i], "y": curve.argmax[i]})]
    if case == "onto":
        ys = _subsample(grid, 15)
        I = _integral_curve(we, times, ys)
        final = I[-1]
        late = times >= T / 2
        slopes = np.array([np.polyfit(times[late], I[late, j], 1)[0] for j in range(len(ys))])
        ok = (final <= -pr.tol.divergence_threshold) & (slopes < 0)
        stalled = (final > -pr.tol.divergence_threshold) & (slopes >= -pr.tol.slope_tol)
        ev_b = {"final_values": final.tolist(), "slopes": slopes.tolist(), "y": ys.tolist(),
                "threshold": -pr.tol.divergence_threshold}
        if ok.all():
            crit.append(CriterionResult("integral_diverges", PASS, ev_b))
        elif stalled.any():
            j = int(np.flatnonzero(stalled)[0])
            crit.append(CriterionResult("integral_diverges", FAIL, ev_b, {"y": float(ys[j]), "value": float(final[j])}))
        else:
            crit.append(CriterionResult("integral_diverges", UNKNOWN, ev_b))
    crit.append(CriterionResult("case", PASS if case != "ambiguous" else UNKNOWN, case_ev,
                                note="surjective flow" if case == "onto" else
                                "escaping flow" if case == "escaping" else "neither case verified"))
    return assemble_verdict(crit, _meta(we, T, grid, t0, classifier="rho1", case=case, admissibility=fit.to_dict()))


def classify(problem_or_we, horizon=None, grid=None) -> Verdict:
    """Pick the classifier that fits the problem (1D three-condition test, else general)."""
    we = _we(problem_or_we)
    if we.problem.dim == 1:
        return classify_stability_1d(we, horizon, grid)
    return classify_stability_general(we, horizon, grid=grid)
