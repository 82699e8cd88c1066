import math

import numpy as np
import pytest

from wcstab import (STABLE, UNSTABLE, DecayEvidence, HypothesisError, SampledFunction, SobolevFunction,
                    WeightEvolution, classify_stability_rho1, classify_stability_sobolev, parse_problem, sobolev_norm)
from wcstab.evidence import DECAYS, GROWS
from wcstab.functions import DivergentIntegralError
from wcstab.sobolev import apply_semigroup_sobolev, conjugate_problem, probe_conjugacy, sobolev_stability_integral


def sob(doc):
    return parse_problem(doc + "space = W1p_star\n")


def power(beta):
    val = SampledFunction(lambda x: x**beta, ((0.0, -beta),) if beta < 0 else ())
    der = SampledFunction(lambda x: beta * x ** (beta - 1), ((0.0, 1 - beta),) if beta < 1 else ())
    return SobolevFunction(val, der, f"x^{beta}")


# --- conjugacy ------------------------------------------------------------------

def test_conjugate_multiplier_lasota():
    conj = conjugate_problem(sob("family = lasota\nh_const = 0.3\n"))
    x = np.array([0.2, 0.7])
    np.testing.assert_allclose(conj.h(x), -1 + 0.3)
    assert conj.space == "Lp" and conj.rho_is_one


def test_conjugate_multiplier_lasota_r():
    conj = conjugate_problem(sob("family = lasota_r\nr = 3\nh_const = -0.2\n"))
    x = np.array([0.2, 0.7])
    np.testing.assert_allclose(conj.h(x), -3 * x**2 - 0.2, rtol=1e-12)


def test_conjugate_identity_at_zero():
    we = WeightEvolution(conjugate_problem(sob("family = lasota\nh_const = 0.3\n")))
    f = SampledFunction(np.cos)
    assert we.apply(0.0, f) is f


def test_probe_rejects_unbounded_quotient():
    pr = sob("family = lasota\nh_expr = sqrt(x)\n")
    assert not probe_conjugacy(pr)["passed"]
    with pytest.raises(HypothesisError) as err:
        conjugate_problem(pr)
    assert err.value.sample is not None and err.value.sample < 1e-3


def test_probe_accepts_smooth_h():
    assert probe_conjugacy(sob("family = lasota\nh_expr = 0.2 + x^2\n"))["passed"]


# --- norms --------------------------------------------------------------------

def test_sobolev_norm_examples():
    dom = parse_problem("family = lasota\n").domain
    assert sobolev_norm(power(1.0), dom, 2.0) == pytest.approx(1 / math.sqrt(3) + 1, rel=1e-10)
    one = SobolevFunction(SampledFunction.constant(), SampledFunction.constant(0.0))
    assert sobolev_norm(one, dom, 3.0) == pytest.approx(1.0)
    assert math.isfinite(sobolev_norm(power(0.6), dom, 2.0))
    with pytest.raises(DivergentIntegralError):
        sobolev_norm(power(0.5), dom, 2.0)


# --- semigroup on W^{1,p} -----------------------------------------------------

def test_apply_examples():
    c, t = 0.3, 2.0
    we = WeightEvolution(sob("family = lasota\nh_const = 0.3\n"))
    g = apply_semigroup_sobolev(we, t, power(1.0))
    x = np.array([0.1, 0.5, 0.9])
    np.testing.assert_allclose(g.value(x), math.exp((c - 1) * t) * x, rtol=1e-10)
    np.testing.assert_allclose(g.deriv(x), math.exp((c - 1) * t), rtol=1e-10)
    f = power(2.0)
    assert apply_semigroup_sobolev(we, 0.0, f) is f
    one = SobolevFunction(SampledFunction.constant(), SampledFunction.constant(0.0))
    g1 = apply_semigroup_sobolev(we, t, one)
    np.testing.assert_allclose(g1.value(x), math.exp(c * t), rtol=1e-12)
    np.testing.assert_allclose(g1.deriv(x), 0.0, atol=1e-12)


@pytest.mark.parametrize("h", ["0.2 + x^2", "sin(3*x) - 0.4", "x*exp(-x)"])
def test_derivative_matches_finite_differences(h):
    we = WeightEvolution(sob(f"family = lasota\nh_expr = {h}\n"))
    f = SobolevFunction.from_expression("x^2 + sin(x)", we.problem.domain)
    g = apply_semigroup_sobolev(we, 1.7, f)
    assert g.fd_residual(0.0, 1.0) <= 1e-6


def test_derivative_lasota_r():
    we = WeightEvolution(sob("family = lasota_r\nr = 2\nh_expr = x - 0.1\n"))
    f = SobolevFunction.from_expression("x^2", we.problem.domain)
    assert apply_semigroup_sobolev(we, 2.3, f).fd_residual(0.0, 1.0) <= 1e-6


def test_direct_sum_constant_component():
    c, lam = -0.3, 2.5
    we = WeightEvolution(parse_problem(f"family = lasota\nh_const = {c}\nspace = W1p\n"))
    dom = we.problem.domain
    g = power(1.0)
    f = SobolevFunction(SampledFunction(lambda x: x + lam), SampledFunction(lambda x: np.ones_like(x)))
    for t in (1.0, 3.0):
        full = apply_semigroup_sobolev(we, t, f)
        star = apply_semigroup_sobolev(we, t, g)
        rest = SobolevFunction(SampledFunction(lambda x, a=full, b=star: a.value(x) - b.value(x)),
                               SampledFunction(lambda x, a=full, b=star: a.deriv(x) - b.deriv(x)))
        assert sobolev_norm(rest, dom, 2.0) == pytest.approx(math.exp(c * t) * lam, rel=1e-8)


# --- stability integral and classifier --------------------------------------

@pytest.mark.parametrize("c,p", [(0.2, 2.0), (-0.4, 3.0)])
def test_sobolev_integral_lasota(c, p):
    pr = parse_problem(f"family = lasota\nh_const = {c}\np = {p}\nspace = W1p_star\n")
    got = sobolev_stability_integral(pr, np.array([0.3, 0.9]), 2.0)
    np.testing.assert_allclose(got, (c - 1 + 1 / p) * 2.0, atol=1e-12)
    assert sobolev_stability_integral(pr, np.array([0.5]), 0.0)[0] == 0.0


def test_sobolev_integral_lasota_r():
    r, p, c, t = 2.0, 2.0, 0.1, 3.0
    pr = parse_problem(f"family = lasota_r\nr = {r}\nh_const = {c}\np = {p}\nspace = W1p_star\n")
    y = np.array([0.3, 0.9])
    phi = ((r - 1) * t + y ** (1 - r)) ** (1 / (1 - r))
    want = c * t + (1 / p - 1) * r * np.log(y / phi)
    np.testing.assert_allclose(sobolev_stability_integral(pr, y, t), want, rtol=1e-10)


@pytest.mark.parametrize("doc,star,full", [
    ("family = lasota\nh_const = 0.4\n", STABLE, UNSTABLE),
    ("family = lasota_r\nr = 2\nh_const = 0\n", STABLE, UNSTABLE),
    ("family = lasota\nh_const = -0.1\n", STABLE, STABLE),
    ("family = lasota\nh_const = 0.6\n", UNSTABLE, UNSTABLE),
])
def test_classify_sobolev(doc, star, full):
    v_star, v_full = classify_stability_sobolev(sob(doc))
    assert (v_star.status, v_full.status) == (star, full)
    assert v_star.metadata["hypothesis_probe"]["passed"]


def test_classify_sobolev_rejects_probe_failure():
    with pytest.raises(HypothesisError):
        classify_stability_sobolev(sob("family = lasota\nh_expr = sqrt(x)\n"))


@pytest.mark.parametrize("c", [0.35, 0.65])
def test_conjugacy_consistency(c):
    # witness x^beta with beta just above 1 - 1/p decays at rate c - beta
    pr = sob(f"family = lasota\nh_const = {c}\n")
    we = WeightEvolution(pr)
    f = power(0.55)
    times = np.linspace(0, 10, 6)
    logs = [math.log(sobolev_norm(apply_semigroup_sobolev(we, t, f), pr.domain, 2.0)) for t in times]
    ev = DecayEvidence.from_log_curve(times, logs)
    lp = classify_stability_rho1(conjugate_problem(pr)).status
    assert ev.slope == pytest.approx(c - 0.55, abs=0.02)
    assert (ev.classification == GROWS) == (lp == UNSTABLE)
    assert (ev.slope < 0) == (lp == STABLE)
