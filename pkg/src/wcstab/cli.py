"""Command-line frontend.

Verbs::

    wcstab analyze CONFIG          validate, fit admissibility, classify
    wcstab simulate CONFIG -f EXPR t -> ||T(t) f|| as CSV
    wcstab reproduce SUITE         closed-form predictions vs engine verdicts
    wcstab admissibility CONFIG    fit ||T(t)|| <= M exp(omega t)
    wcstab hypercyclicity CONFIG   transported-weight decay along t_n = n * step

Exit codes of ``analyze``: 0 Stable, 1 Unstable, 2 Inconclusive, 3 or more on error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import fields, replace
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .config import ConfigError, load_problem, parse_problem, serialize_problem
from .evidence import INCONCLUSIVE, STABLE, UNSTABLE, _jsonable
from .functions import QuadratureError, SampledFunction, SobolevFunction, sobolev_norm
from .lasota import (HypothesisError, bisect_threshold, hypercyclicity_check, lasota_case, lasota_threshold,
                     numeric_verdict, stability_vs_hypercyclicity)
from .model import ProblemError, ProblemSpec, Tolerances
from .partition import partition_domain, validate_hypotheses
from .report import Report, format_table, write_csv
from .sobolev import apply_semigroup_sobolev, classify_stability_sobolev, conjugate_problem
from .stability import NotASemigroupError, classify, classify_stability_rho1
from .weights import WeightEvolution, time_grid

__all__ = ["main", "build_parser", "analyze_problem", "simulate_problem", "run_suite", "SUITES"]

EXIT_ERROR = 3
EXIT_NOT_SEMIGROUP = 4

_TOL_HELP = {
    "zero_tol": "equilibrium threshold relative to max|F| on the grid",
    "tol_ode": "relative ODE tolerance",
    "atol_ode": "absolute ODE tolerance",
    "tol_quad": "relative quadrature tolerance",
    "tol_domain": "distance from a finite face counted as exit",
    "tol_flow": "flow reproduction tolerance",
    "slope_tol": "log-slope below which a curve counts as flat",
    "value_tol": "relative size counted as decayed to zero",
    "divergence_threshold": "depth a transport integral must reach to count as diverging",
    "fd_tol": "finite-difference tolerance",
    "horizon": "time horizon of the classifiers",
    "grid_points": "spatial sample points",
    "grid_extent": "half-width used to sample unbounded directions",
}


class CLIError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which would read as Inconclusive
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _add_tolerances(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("tolerances (override the config file)")
    defaults = Tolerances()
    for f in fields(Tolerances):
        if f.name == "horizon":         # each verb owns its --horizon
            continue
        typ = int if f.name == "grid_points" else float
        g.add_argument("--" + f.name.replace("_", "-"), dest=f.name, type=typ, default=None,
                       help=f"{_TOL_HELP[f.name]} (default {getattr(defaults, f.name)!r})")


def _apply_tolerances(problem: ProblemSpec, args) -> ProblemSpec:
    over = {f.name: getattr(args, f.name) for f in fields(Tolerances)
            if f.name != "horizon" and getattr(args, f.name, None) is not None}
    return problem.with_(tol=replace(problem.tol, **over)) if over else problem


def _load(args) -> ProblemSpec:
    try:
        return _apply_tolerances(load_problem(args.config), args)
    except OSError as exc:
        raise CLIError(f"cannot read {args.config}: {exc.strerror or exc}") from exc


# --- analyze ------------------------------------------------------------------


def analyze_problem(problem: ProblemSpec, horizon: Optional[float] = None) -> Report:
    """Validate hypotheses, then run the classifier that fits the problem and space."""
    t0 = time.perf_counter()
    T = problem.tol.horizon if horizon is None else float(horizon)
    validation = validate_hypotheses(problem, T)
    meta = {"tolerances": problem.tol.__dict__, "horizon": T, "grid_points": problem.tol.grid_points}
    verdicts, notes, adm = {}, [], None
    if not validation.passed:
        notes.append("hypotheses not verified: " + "; ".join(f.check for f in validation.failed()))
    elif problem.space == "Lp":
        part = partition_domain(problem)
        if problem.dim == 1 and problem.rho_is_one and not part.omega0:
            v = classify_stability_rho1(problem, T)
        else:
            v = classify(problem, T)
        verdicts["Lp"] = v
        adm = v.metadata.get("admissibility")
    else:
        star, full = classify_stability_sobolev(problem, T)
        verdicts["W1p_star"], verdicts["W1p"] = star, full
        adm = star.metadata.get("admissibility")
    meta["wall_time"] = round(time.perf_counter() - t0, 3)
    return Report(serialize_problem(problem), problem.space, verdicts, adm, validation.to_dict(), meta, notes)


def cmd_analyze(args) -> int:
    problem = _load(args)
    report = analyze_problem(problem, args.horizon)
    if args.csv:
        we = WeightEvolution(problem if problem.space == "Lp" else conjugate_problem(problem))
        times = time_grid(problem.tol.horizon)
        curve = we.sup_curve(times)
        with open(args.csv, "w", newline="") as fh:
            write_csv(["t", "log_sup_ratio", "argmax"], zip(curve.times.tolist(), curve.log_sup.tolist(),
                                                            np.asarray(curve.argmax).tolist()), fh)
    sys.stdout.write(report.to_json() + "\n" if args.json else report.render_text())
    return report.exit_code


# --- simulate -----------------------------------------------------------------


def simulate_problem(problem: ProblemSpec, function: str, horizon: float, steps: int) -> list[tuple[float, float]]:
    """``(t, ||T(t) f||)`` at ``steps + 1`` equally spaced times, in the problem's own space."""
    if steps < 1:
        raise CLIError("steps must be >= 1")
    we = WeightEvolution(problem)
    times = np.linspace(0.0, float(horizon), int(steps) + 1)
    rows = []
    if problem.space == "Lp":
        f = SampledFunction.from_expression(function, problem.domain)
        for t in times:
            rows.append((float(t), we.lp_norm(we.apply(t, f))))
    else:
        f = SobolevFunction.from_expression(function, problem.domain)
        if problem.space == "W1p_star" and not f.in_star(problem.domain.lo[0], 1e-8):
            raise CLIError("f does not vanish at the left endpoint, so it is not in W1p_star")
        for t in times:
            rows.append((float(t), sobolev_norm(apply_semigroup_sobolev(we, t, f), problem.domain, problem.p)))
    return rows


def cmd_simulate(args) -> int:
    problem = _load(args)
    rows = simulate_problem(problem, args.function, args.horizon, args.steps)
    if args.json:
        sys.stdout.write(json.dumps(_jsonable({"function": args.function, "space": problem.space,
                                               "rows": rows}), indent=2) + "\n")
    else:
        write_csv(["t", "norm"], rows, sys.stdout)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            write_csv(["t", "norm"], rows, fh)
    return 0


# --- reproduce ----------------------------------------------------------------


def _lattice_rows(rs, ps, spaces, horizon=None) -> list:
    rows = []
    for space in spaces:
        for r in rs:
            for p in ps:
                base = lasota_threshold(lasota_case(r, 0.0, p, space), require=[]).thresholds[space]
                for off in (-0.1, 0.0, 0.1):
                    c = round(base + off, 12)
                    lp = lasota_case(r, c, p, space)
                    pred = lasota_threshold(lp).verdict(space)
                    got = numeric_verdict(lp, horizon)
                    ok = got == pred or (off == 0 and pred == STABLE and got == INCONCLUSIVE)
                    rows.append((f"{space} r={r:g} p={p:g} h0={c:g}", pred, got, ok))
    return rows


def _bisect_rows(cases, horizon=None) -> list:
    rows = []
    for r, p, space in cases:
        b = bisect_threshold(r, p, space, horizon=horizon)
        flip = b["flip"]
        ok = flip is not None and abs(flip - b["threshold"]) <= 0.01
        rows.append((f"{space} r={r:g} p={p:g} flip", f"{b['threshold']:g}",
                     "none" if flip is None else f"{flip:.4f}", ok))
    return rows


def _suite_lasota_lp(h):
    return _lattice_rows((1,), (1, 2, 4), ("Lp",), h) + _bisect_rows([(1, p, "Lp") for p in (1, 2, 4)], h)


def _suite_generalized(h):
    return _lattice_rows((2, 3), (1, 2), ("Lp",), h) + _bisect_rows([(r, p, "Lp") for r in (2, 3) for p in (1, 2)], h)


def _suite_lasota_sobolev(h):
    return (_lattice_rows((1, 2), (2,), ("W1p_star", "W1p"), h)
            + _bisect_rows([(1, 2, "W1p_star"), (2, 2, "W1p_star")], h))


def _suite_hypercyclicity(h):
    rows = []
    for lam in (-1.0, -0.75, -0.5, -0.25, 0.0):
        rep = stability_vs_hypercyclicity("lasota", lam, 2.0, horizon=h)
        pred = "stable, not hypercyclic" if rep.analytic_stable else "hypercyclic candidate"
        got = f"{rep.numeric_status}, candidate={str(rep.numeric_candidate).lower()}"
        rows.append((f"F=-x p=2 lambda={lam:g}", pred, got, rep.agree))
    return rows


_SEC2 = [
    ("translation rho=exp(x)", "family = translation\nrho_expr = exp(x)\n", STABLE),
    ("translation rho=1", "family = translation\n", UNSTABLE),
    ("F=1-x rho=(1+|x-1|)^-3", "family = affine\nslope = -1\noffset = 1\nrho_expr = (1+abs(x-1))^(-3)\n", STABLE),
]


def _suite_examples_sec2(h):
    rows = []
    for name, doc, pred in _SEC2:
        got = classify(parse_problem(doc), h).status
        rows.append((name, pred, got, got == pred))
    return rows


SUITES = {
    "lasota_lp": _suite_lasota_lp,
    "lasota_sobolev": _suite_lasota_sobolev,
    "generalized": _suite_generalized,
    "hypercyclicity": _suite_hypercyclicity,
    "examples_sec2": _suite_examples_sec2,
}


def run_suite(name: str, horizon: Optional[float] = None) -> list:
    if name not in SUITES:
        raise CLIError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    return SUITES[name](horizon)


def cmd_reproduce(args) -> int:
    rows = run_suite(args.suite, args.horizon)
    header = ["case", "prediction", "engine", "agree"]
    if args.json:
        sys.stdout.write(json.dumps([dict(zip(header, r)) for r in rows], indent=2) + "\n")
    else:
        sys.stdout.write(format_table(header, rows) + "\n")
        bad = sum(not r[3] for r in rows)
        sys.stdout.write(f"\n{len(rows) - bad}/{len(rows)} rows agree\n")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            write_csv(header, rows, fh)
    return 0 if all(r[3] for r in rows) else 1


# --- admissibility / hypercyclicity -------------------------------------------


def cmd_admissibility(args) -> int:
    problem = _load(args)
    we = WeightEvolution(problem)
    fit = we.admissibility_fit(args.horizon)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            write_csv(["t", "log_sup_ratio"], zip(fit.times.tolist(), fit.log_sup.tolist()), fh)
    if args.json:
        sys.stdout.write(json.dumps(fit.to_dict(), indent=2, sort_keys=True) + "\n")
    else:
        d = fit.to_dict()
        sys.stdout.write(f"M = {d['M']!r}\nomega = {d['omega']!r}\nrefuted = {str(fit.refuted).lower()}\n"
                         f"max violation = {d['max_violation']!r}\n")
    return 1 if fit.refuted else 0


def cmd_hypercyclicity(args) -> int:
    problem = _load(args)
    ev = hypercyclicity_check(WeightEvolution(problem), step=args.step, n_terms=args.terms)
    if args.json:
        sys.stdout.write(json.dumps(ev.to_dict(), indent=2, sort_keys=True) + "\n")
    else:
        sys.stdout.write(f"candidate = {str(ev.candidate).lower()}\n"
                         f"lambda(Omega0) = 0: {str(ev.omega0_null).lower()}\n"
                         f"t_final = {float(ev.sequence[-1])!r}\n")
        rows = zip(ev.points, ev.log_rho_forward.tolist(), ev.log_rho_backward.tolist())
        sys.stdout.write(format_table(["x", "log rho_t", "log rho_-t"], rows) + "\n")
    return 0 if ev.candidate else 1


# --- entry point --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="wcstab", description="Stability of weighted composition semigroups.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", help="validate, fit admissibility and classify stability")
    a.add_argument("config")
    a.add_argument("--horizon", type=float, default=None,
                   help=f"classifier time horizon (default {Tolerances().horizon!r} or the config value)")
    a.add_argument("--json", action="store_true", help="emit the structured report")
    a.add_argument("--csv", metavar="PATH", help="write the sup curve of rho_{t,p}/rho to PATH")
    _add_tolerances(a)
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("simulate", help="norm curve t -> ||T(t) f|| as CSV")
    s.add_argument("config")
    s.add_argument("-f", "--function", default="1", help="expression in x (default 1)")
    s.add_argument("--horizon", type=float, default=10.0)
    s.add_argument("--steps", type=int, default=10)
    s.add_argument("--json", action="store_true")
    s.add_argument("--csv", metavar="PATH", help="also write the curve to PATH")
    _add_tolerances(s)
    s.set_defaults(func=cmd_simulate)

    r = sub.add_parser("reproduce", help="closed-form predictions vs engine verdicts")
    r.add_argument("suite", help=f"one of: {', '.join(SUITES)}")
    r.add_argument("--horizon", type=float, default=None)
    r.add_argument("--json", action="store_true")
    r.add_argument("--csv", metavar="PATH")
    r.set_defaults(func=cmd_reproduce)

    m = sub.add_parser("admissibility", help="fit M and omega in ||T(t)|| <= M exp(omega t)")
    m.add_argument("config")
    m.add_argument("--horizon", type=float, default=None)
    m.add_argument("--json", action="store_true")
    m.add_argument("--csv", metavar="PATH")
    _add_tolerances(m)
    m.set_defaults(func=cmd_admissibility)

    h = sub.add_parser("hypercyclicity", help="decay of rho_{t_n,p} and rho_{-t_n,p} on a grid")
    h.add_argument("config")
    h.add_argument("--step", type=float, default=0.5, help="t_n = n * step (default 0.5)")
    h.add_argument("--terms", type=int, default=200, help="number of terms (default 200)")
    h.add_argument("--json", action="store_true")
    _add_tolerances(h)
    h.set_defaults(func=cmd_hypercyclicity)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return int(args.func(args))
    except NotASemigroupError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_NOT_SEMIGROUP
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_ERROR
    except (CLIError, ProblemError, HypothesisError, QuadratureError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
