"""Von Foerster-Lasota equations ``u_t + x^r u_x = h(x) u`` on ``(0, 1)``.

Closed-form semigroup, analytic threshold predictions, hypercyclicity evidence
and the stability / hypercyclicity comparison for decreasing fields.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import integrate

from .config import parse_problem, structured_multiplier
from .evidence import INCONCLUSIVE, STABLE, DecayEvidence, _jsonable
from .expressions import parse_expression
from .families import family_domain, family_expression, family_field
from .functions import SampledFunction
from .model import Domain, Multiplier, ProblemError, ProblemSpec
from .partition import partition_domain
from .sobolev import HypothesisError, classify_stability_sobolev
from .stability import classify_stability_rho1
from .weights import WeightEvolution

__all__ = [
    "LasotaProblem",
    "ThresholdPrediction",
    "HypercyclicityEvidence",
    "TrichotomyReport",
    "lasota_semigroup",
    "lasota_threshold",
    "hypercyclicity_check",
    "stability_vs_hypercyclicity",
    "decay_rate_experiment",
    "probe_integrable",
    "probe_bounded",
    "lasota_case",
    "numeric_verdict",
    "bisect_threshold",
    "threshold_sweep",
]

HSpec = Union[float, str]


@dataclass(frozen=True)
class LasotaProblem:
    """``u_t + x^r u_x = h u`` with ``h`` a constant or an expression in ``x``."""

    r: float = 1.0
    h: HSpec = 0.0
    p: float = 2.0
    space: str = "Lp"

    def __post_init__(self):
        if self.r < 1:
            raise ProblemError("r must be >= 1")
        if self.p < 1:
            raise ProblemError("p must be >= 1")

    @property
    def h_text(self) -> str:
        return repr(float(self.h)) if isinstance(self.h, (int, float)) else str(self.h)

    def h_func(self) -> Callable:
        return parse_expression(self.h_text).compile()

    def to_problem(self, space: Optional[str] = None) -> ProblemSpec:
        fam = "lasota" if self.r == 1 else f"lasota_r\nr = {float(self.r)!r}"
        key = "h_const" if isinstance(self.h, (int, float)) else "h_expr"
        doc = f"family = {fam}\n{key} = {self.h_text}\np = {float(self.p)!r}\nspace = {space or self.space}\n"
        return parse_problem(doc)


def lasota_semigroup(v: Callable, t: float, x, h: Union[float, Callable] = 0.0) -> np.ndarray:
    """``exp(int_{-t}^0 h(x e^s) ds) v(x e^{-t})`` for the classical equation (``r = 1``)."""
    x = np.asarray(x, dtype=float)
    if callable(h):
        def one(xi):
            val = integrate.quad(lambda s: float(h(np.array(xi * math.exp(s)))), -t, 0.0,
                                 epsabs=0.0, epsrel=1e-12, limit=200)[0]
            return val
        I = np.vectorize(one)(x) if t > 0 else np.zeros_like(x)
    else:
        I = np.full(x.shape, float(h) * t)
    return np.exp(I) * np.asarray(v(x * math.exp(-t)), dtype=float)


# --- hypothesis probes --------------------------------------------------------


def probe_integrable(g: Callable, a: float = 0.0, b: float = 1.0, decades: int = 12) -> dict:
    """Partial integrals of ``|g|`` on ``[a + eps, b]`` as ``eps`` runs down a geometric schedule.

    Divergence is declared when the partial integrals grow beyond ``1e6`` times
    the first one, or when the per-decade increments stop shrinking (ratio
    ``>= 0.97`` over the last three decades, which is a ``1/x`` law or worse).
    """
    eps = (b - a) * np.logspace(-1, -decades, decades)
    edges = np.concatenate([[b], a + eps])
    inc = []
    for hi, lo in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(lambda s: abs(float(g(np.array(s)))), lo, hi, limit=200, epsrel=1e-8)
        inc.append(val)
    inc = np.array(inc)
    partial = np.cumsum(inc)
    ratios = inc[1:] / np.where(inc[:-1] > 0, inc[:-1], np.inf)
    stalls = bool(np.all(ratios[-3:] >= 0.97) and inc[-1] > 1e-12 * max(partial[-1], 1.0))
    blowup = bool(partial[-1] > 1e6 * max(partial[0], 1e-300) and partial[-1] > 1e-12)
    ok = bool(np.isfinite(partial).all() and not stalls and not blowup)
    return {"passed": ok, "partial": partial.tolist(), "eps": eps.tolist(), "norm_estimate": float(partial[-1])}


def probe_bounded(g: Callable, a: float = 0.0, b: float = 1.0, n: int = 60) -> dict:
    """Sup of ``|g|`` on a geometric grid accumulating at ``a``; the sup must level off."""
    y = a + (b - a) * np.geomspace(1e-12, 1.0, n)[:-1]
    with np.errstate(all="ignore"):
        q = np.abs(np.asarray(g(y), dtype=float))
    near, far = q[: n // 2], q[n // 2:]
    ok = bool(np.isfinite(q).all() and np.max(near) <= 10.0 * (1.0 + np.max(far)))
    return {"passed": ok, "bound": float(np.nanmax(q)) if np.isfinite(q).any() else math.inf,
            "grid": [float(y[0]), float(y[-1]), n]}


def _leading_coefficient(h: Callable, r: float) -> Optional[float]:
    """``lim_{x -> 0} h(x) / x^(r-1)`` when it settles, else ``None``."""
    xs = np.array([1e-6, 1e-8, 1e-10])
    with np.errstate(all="ignore"):
        v = np.asarray(h(xs), dtype=float) / xs ** (r - 1.0)
    if not np.isfinite(v).all():
        return None
    if abs(v[-1] - v[-2]) > 1e-5 * max(1.0, abs(v[-1])):
        return None
    return float(v[-1])


@dataclass(frozen=True)
class ThresholdPrediction:
    """Analytic verdicts (``Stable`` / ``Unstable`` / ``None`` when the hypothesis probe failed)."""

    r: float
    p: float
    h0: Optional[float]
    lp: Optional[str]
    w1p_star: Optional[str]
    w1p: Optional[str]
    thresholds: dict
    probes: dict

    def verdict(self, space: str) -> Optional[str]:
        return {"Lp": self.lp, "W1p_star": self.w1p_star, "W1p": self.w1p}[space]

    def to_dict(self) -> dict:
        return _jsonable(self.__dict__)


def lasota_threshold(problem: LasotaProblem, require: Optional[Sequence[str]] = None) -> ThresholdPrediction:
    """Predict stability from the sharp thresholds, after probing their hypotheses.

    ``L^p``: ``h(0) <= -r/p`` where for ``r > 1`` the role of ``h(0)`` is played by
    the leading coefficient ``c`` in ``h(x) = c x^(r-1) + o(x^(r-1))``.
    ``W^{1,p}_*``: ``h(0) <= 1 - 1/p`` (``r = 1``) or ``h(0) <= 0`` (``r > 1``).
    ``W^{1,p}``: additionally ``h(0) < 0``.  Raises :class:`HypothesisError` when a
    probe required by ``require`` (default: the problem's space) fails.
    """
    r, p = float(problem.r), float(problem.p)
    h = problem.h_func()
    with np.errstate(all="ignore"):
        h0 = float(np.asarray(h(np.array([0.0])), dtype=float)[0])
    if not math.isfinite(h0):
        h0 = float(np.asarray(h(np.array([1e-14])), dtype=float)[0])
    probes = {}
    if r == 1:
        c = h0
        probes["Lp"] = probe_integrable(lambda x: (h(x) - h0) / x)
        probes["sobolev"] = probe_bounded(lambda x: (h(x) - h0) / x)
    else:
        c = _leading_coefficient(h, r)
        if c is None:
            probes["Lp"] = {"passed": False, "reason": "h(x) / x^(r-1) has no finite limit at 0"}
        else:
            probes["Lp"] = probe_integrable(lambda x: (h(x) - c * x ** (r - 1)) / x ** r)
        probes["sobolev"] = probe_bounded(lambda x: (h(x) - h0) / x ** r)
    lp_thr = -r / p
    star_thr = 1.0 - 1.0 / p if r == 1 else 0.0
    lp = (STABLE if c <= lp_thr else "Unstable") if probes["Lp"]["passed"] else None
    star = full = None
    if probes["sobolev"]["passed"]:
        star = STABLE if h0 <= star_thr else "Unstable"
        full = STABLE if (h0 <= star_thr and h0 < 0) else "Unstable"
    pred = ThresholdPrediction(r, p, h0, lp, star, full,
                               {"Lp": lp_thr, "W1p_star": star_thr, "W1p": min(star_thr, 0.0),
                                "lp_coefficient": c}, probes)
    for space in (require if require is not None else [problem.space]):
        if pred.verdict(space) is None:
            raise HypothesisError(f"theorem hypotheses not verified for {space}")
    return pred


# --- hypercyclicity -----------------------------------------------------------


@dataclass(frozen=True)
class HypercyclicityEvidence:
    points: list
    sequence: np.ndarray
    log_rho_forward: np.ndarray     # log rho_{t_n,p}(x_j) at the final t_n
    log_rho_backward: np.ndarray    # log rho_{-t_n,p}(x_j) at the final t_n
    omega0_null: bool
    candidate: bool
    threshold: float

    def to_dict(self) -> dict:
        return _jsonable({"points": self.points, "t_final": float(self.sequence[-1]), "n_terms": len(self.sequence),
                          "log_rho_forward": self.log_rho_forward, "log_rho_backward": self.log_rho_backward,
                          "omega0_null": self.omega0_null, "candidate": self.candidate,
                          "log_threshold": self.threshold})


def hypercyclicity_check(we, grids: Optional[Sequence] = None, step: float = 0.5, n_terms: int = 200,
                         sequence=None) -> HypercyclicityEvidence:
    """Both ``rho_{t_n,p}(x)`` and ``rho_{-t_n,p}(x)`` must fall below ``value_tol * rho(x)``.

    ``grids`` holds one array of sample points per connected component; a tuple
    takes one point from each.  The default sequence is ``t_n = n * step``.
    """
    we = we if isinstance(we, WeightEvolution) else WeightEvolution(we)
    pr = we.problem
    seq = np.arange(1, n_terms + 1) * float(step) if sequence is None else np.asarray(sequence, dtype=float)
    if seq.size < 2 or np.any(np.diff(seq) <= 0) or seq[0] < 0:
        raise ValueError("the sequence t_n must be strictly increasing and tend to infinity")
    part = partition_domain(pr)
    if grids is None:
        omega1 = part.grid[~part.mask0]
        pick = omega1[np.unique(np.linspace(0, len(omega1) - 1, min(9, len(omega1))).astype(int))]
        grids = [pick]
    pts = np.concatenate([np.asarray(g, dtype=float).reshape(-1) for g in grids])
    T = np.array([seq[-1]])
    fwd = we.log_rho_tp_curve(T, pts)[0]
    bwd = we.log_rho_minus_curve(T, pts)[0]
    thr = math.log(pr.tol.value_tol) + pr.log_weight(pts)
    bwd_ok = np.where(np.isnan(bwd), False, bwd < thr)
    candidate = bool(part.omega0_null and np.all(fwd < thr) and np.all(bwd_ok))
    return HypercyclicityEvidence(pts.tolist(), seq, fwd, bwd, part.omega0_null, candidate, float(np.max(thr)))


@dataclass(frozen=True)
class TrichotomyReport:
    family: str
    lam: float
    p: float
    increasing: bool
    analytic_stable: bool
    analytic_hypercyclic_candidate: bool
    numeric_status: str
    numeric_candidate: bool
    agree: bool
    flags: list = field(default_factory=list)
    evidence: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return _jsonable(self.__dict__)


def stability_vs_hypercyclicity(family: str, lam: float, p: float, params: Optional[dict] = None,
                                domain: Optional[Domain] = None, horizon: Optional[float] = None
                                ) -> TrichotomyReport:
    """Compare ``lam <= -1/p`` (decreasing ``F``; ``>=`` for increasing) with the numeric verdicts.

    The multiplier is ``h = -lam F'``.
    """
    field_ = family_field(family, params)
    dom = domain or family_domain(family, params)
    if len(dom.boxes) != 1 or not math.isfinite(dom.lo[0]):
        raise HypothesisError("need an interval (alpha, beta) with finite alpha")
    alpha = dom.lo[0]
    m = Multiplier(div_coef=-float(lam), text=f"{-float(lam)!r} * F'")
    problem = ProblemSpec(dom, field_, m, p=float(p))
    grid = problem.grid(120)
    Fv = problem.F(grid)
    scale = max(1.0, float(np.max(np.abs(Fv))))
    if abs(float(problem.F(np.array(alpha)))) > problem.tol.zero_tol * scale:
        raise HypothesisError(f"F(alpha) != 0 at alpha = {alpha}")
    dF = np.diff(Fv)
    if np.all(dF <= 0) and np.all(Fv < 0):
        increasing = False
    elif np.all(dF >= 0) and np.all(Fv > 0):
        increasing = True
    else:
        raise HypothesisError("F must be monotone and of one sign on (alpha, beta]")
    we = WeightEvolution(problem)
    T = problem.tol.horizon if horizon is None else float(horizon)
    flags = []
    if not increasing:
        esc = np.asarray(we.sf.escape_time(grid, T))
        if not np.isfinite(esc).all():
            raise HypothesisError("escape times are not all finite")
    crit = -1.0 / p
    analytic_stable = lam <= crit if not increasing else lam >= crit
    verdict = classify_stability_rho1(we, T)
    hyp = hypercyclicity_check(we)
    numeric_stable = verdict.status == STABLE
    agree = (numeric_stable == analytic_stable) and (hyp.candidate == (not analytic_stable))
    if lam == crit:
        flags.append("boundary: lam = -1/p")
        # an inclusive analytic Stable is consistent with an Inconclusive numeric verdict at equality
        if analytic_stable and verdict.status == INCONCLUSIVE and not hyp.candidate:
            agree = True
            flags.append("numeric verdict Inconclusive at equality")
        if increasing and not numeric_stable:
            flags.append("increasing field at equality: the semigroup is an isometry here, not stable")
    return TrichotomyReport(family, float(lam), float(p), increasing, bool(analytic_stable), not analytic_stable,
                            verdict.status, hyp.candidate, bool(agree), flags,
                            {"verdict": verdict.to_dict(), "hypercyclicity": hyp.to_dict()})


# --- empirical decay ----------------------------------------------------------


def decay_rate_experiment(we, f: SampledFunction, horizon: float = 10.0, samples: int = 11) -> DecayEvidence:
    """``t -> log ||T(t) f||`` on ``samples`` equally spaced times, with its fitted slope."""
    we = we if isinstance(we, WeightEvolution) else WeightEvolution(we)
    times = np.linspace(0.0, float(horizon), int(samples))
    logs = [math.log(we.lp_norm(we.apply(t, f))) for t in times]
    logs = np.array(logs)
    slope = float(np.polyfit(times, logs, 1)[0]) if len(times) > 1 else 0.0
    base = DecayEvidence.from_log_curve(times, logs, we.problem.tol.slope_tol, we.problem.tol.value_tol)
    return DecayEvidence(times, logs, slope, base.classification)


# --- threshold sweeps ---------------------------------------------------------


def lasota_case(r: float, c: float, p: float, space: str = "Lp") -> LasotaProblem:
    """The test-lattice problem: ``h = c x^(r-1)`` for ``L^p`` (so ``c`` is the leading coefficient), else ``h = c``."""
    if space == "Lp" and r != 1:
        e = int(r - 1) if float(r - 1).is_integer() else r - 1
        return LasotaProblem(r, f"{float(c)!r}*x^({e})", p, space)
    return LasotaProblem(r, float(c), p, space)


def numeric_verdict(problem: LasotaProblem, horizon: Optional[float] = None) -> str:
    """Classifier status for ``problem`` in its own space."""
    if problem.space == "Lp":
        return classify_stability_rho1(problem.to_problem(), horizon).status
    star, full = classify_stability_sobolev(problem.to_problem(), horizon)
    return star.status if problem.space == "W1p_star" else full.status


def bisect_threshold(r: float, p: float, space: str = "Lp", lo: float = None, hi: float = None,
                     tol: float = 0.01, horizon: Optional[float] = None) -> dict:
    """Locate the Stable/Unstable flip in ``c`` by bisection; ``lo`` must be Stable and ``hi`` Unstable."""
    thr = {"Lp": -r / p, "W1p_star": (1 - 1 / p) if r == 1 else 0.0}[space]
    lo = thr - 0.25 if lo is None else lo
    hi = thr + 0.25 if hi is None else hi
    steps = []
    for c, want in ((lo, STABLE), (hi, "Unstable")):
        got = numeric_verdict(lasota_case(r, c, p, space), horizon)
        steps.append((c, got))
        if got != want:
            return {"flip": None, "threshold": thr, "steps": steps, "error": f"c = {c} gave {got}"}
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        got = numeric_verdict(lasota_case(r, mid, p, space), horizon)
        steps.append((mid, got))
        if got == STABLE:
            lo = mid
        else:
            hi = mid
    flip = 0.5 * (lo + hi)
    return {"flip": flip, "threshold": thr, "error_abs": abs(flip - thr), "steps": steps}


def threshold_sweep(rs=(1,), ps=(1, 2, 4), offsets=(-0.1, 0.0, 0.1), space: str = "Lp",
                    horizon: Optional[float] = None) -> list[dict]:
    """One row per ``(r, p, c)`` with ``c = threshold + offset``: analytic and numeric verdicts."""
    rows = []
    for r in rs:
        for p in ps:
            for off in offsets:
                probe = lasota_case(r, 0.0, p, space)
                thr = lasota_threshold(probe, require=[]).thresholds[space]
                c = round(thr + off, 12)
                lp = lasota_case(r, c, p, space)
                try:
                    analytic = lasota_threshold(lp).verdict(space)
                except HypothesisError:
                    analytic = None
                numeric = numeric_verdict(lp, horizon)
                rows.append({"r": r, "p": p, "c": c, "space": space, "threshold": thr,
                             "analytic": analytic or "probe_failed", "numeric": numeric,
                             "agree": analytic is None or analytic == numeric
                             or (off == 0 and analytic == STABLE and numeric == INCONCLUSIVE)})
    return rows
