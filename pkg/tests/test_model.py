import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wcstab import ConfigError, Domain, ProblemError, parse_problem, partition_domain, serialize_problem
from wcstab import validate_hypotheses
from wcstab.expressions import ExpressionError, parse_expression


# --- expressions --------------------------------------------------------------

def test_expression_grammar_basic():
    e = parse_expression("2*x^2 - exp(-x) + abs(x - 1)/3")
    x = np.array([0.0, 0.5, 2.0])
    want = 2 * x**2 - np.exp(-x) + np.abs(x - 1) / 3
    np.testing.assert_allclose(e.compile()(x), want, rtol=1e-14)


def test_expression_constant_broadcasts():
    f = parse_expression("-0.5").compile()
    assert f(np.zeros(4)).shape == (4,)


@pytest.mark.parametrize("bad", ["import os", "x.__class__", "foo(x)", "x +* 2", "exp"])
def test_expression_rejects(bad):
    with pytest.raises(ExpressionError):
        parse_expression(bad)


def test_complex_expression_real_part():
    e = parse_expression("-1 + 2*I*x")
    assert e.is_complex
    np.testing.assert_allclose(e.real_part().compile()(np.array([0.3])), [-1.0])


# --- parse_problem ------------------------------------------------------------

def test_parse_lasota_binds_closed_form():
    pr = parse_problem("family = lasota\nh = const:-0.5\np = 2\nspace = Lp\n")
    assert pr.family == "lasota" and pr.dim == 1 and pr.p == 2
    assert pr.domain.lo[0] == 0 and pr.domain.hi[0] == 1
    assert pr.h(np.array([0.3])) == pytest.approx(-0.5)
    np.testing.assert_allclose(pr.F(np.array([0.2, 0.7])), [-0.2, -0.7])


def test_parse_translation_with_weight():
    pr = parse_problem("family = translation\nrho_expr = exp(x)\n")
    assert pr.dim == 1 and math.isinf(pr.domain.lo[0]) and math.isinf(pr.domain.hi[0])
    assert pr.weight(np.array([1.0])) == pytest.approx(math.e)


def test_p_below_one_rejected():
    with pytest.raises(ConfigError, match="p must be >= 1") as err:
        parse_problem("family = lasota\nh_const = 0\np = 0.5\n")
    assert err.value.line == 3


def test_unknown_family_rejected():
    with pytest.raises(ProblemError, match="unknown family"):
        parse_problem("family = logistic\n")


def test_sobolev_needs_bounded_interval():
    with pytest.raises(ProblemError):
        parse_problem("family = translation\nspace = W1p\n")


def test_sobolev_needs_zero_at_left_end():
    with pytest.raises(ProblemError):
        parse_problem("F_expr = 1 - x\ndomain = (0, 1)\nspace = W1p_star\n")


def test_nonpositive_weight_rejected():
    with pytest.raises(ProblemError):
        parse_problem("family = lasota\nrho_expr = x - 0.5\n")


def test_complex_multiplier_reduced():
    pr = parse_problem("family = lasota\nh_expr = -0.7 + 3*I\n")
    assert pr.scalar_mode == "complex-reduced"
    assert pr.h(np.array([0.4])) == pytest.approx(-0.7)


def test_complex_reduction_matches_modulus(lasota):
    # |h_t(x) f(phi)| for the complex multiplier equals the real-part cocycle
    from wcstab import WeightEvolution
    pr = parse_problem("family = lasota\nh_expr = -0.7 + 3*I*x\n")
    we = WeightEvolution(pr)
    x, t = np.array([0.2, 0.6]), 1.3
    # Re h = -0.7 for all x, so |h_t| = exp(-0.7 t) regardless of the imaginary part
    np.testing.assert_allclose(we.cocycle(t, x), np.exp(-0.7 * t), rtol=1e-10)


@given(c=st.floats(-3, 3, allow_nan=False), p=st.floats(1, 6),
       fam=st.sampled_from(["lasota", "translation", "affine", "lasota_r"]),
       speed=st.floats(0.1, 5), slope=st.floats(-3, -0.1), r=st.floats(1.5, 4))
def test_serialize_round_trip(c, p, fam, speed, slope, r):
    params = {"translation": f"speed = {speed!r}\n", "affine": f"slope = {slope!r}\noffset = 0.5\n",
              "lasota_r": f"r = {r!r}\n", "lasota": ""}[fam]
    pr = parse_problem(f"family = {fam}\n{params}h_const = {c!r}\np = {p!r}\n")
    back = parse_problem(serialize_problem(pr))
    assert back.family == pr.family
    assert back.field.params == pytest.approx(pr.field.params, rel=0, abs=0)
    assert back.p == pr.p and back.space == pr.space and back.domain == pr.domain
    x = pr.grid(7)
    np.testing.assert_array_equal(back.h(x), pr.h(x))
    np.testing.assert_array_equal(back.F(x), pr.F(x))


def test_round_trip_expression_field():
    pr = parse_problem("F_expr = 1 - x^2\ndomain = (-1, 1)\nh_expr = x/2\nrho_expr = 1 + x^2\np = 3\n")
    back = parse_problem(serialize_problem(pr))
    x = pr.grid(9)
    np.testing.assert_allclose(back.F(x), pr.F(x))
    np.testing.assert_allclose(back.weight(x), pr.weight(x))


# --- domain -------------------------------------------------------------------

def test_domain_parse_union():
    d = Domain.parse("(0, 1) | (2, inf)")
    assert len(d.boxes) == 2 and not d.bounded
    assert d.contains(np.array([0.5, 1.5, 3.0])).tolist() == [True, False, True]


# --- partition ----------------------------------------------------------------

def test_partition_lasota_empty(lasota):
    part = partition_domain(lasota())
    assert part.omega0 == [] and part.omega0_null


def test_partition_affine_equilibrium():
    pr = parse_problem("family = affine\nslope = -1\noffset = 1\n")
    part = partition_domain(pr)
    assert part.omega0 == [(1.0, 1.0)]
    assert part.omega0_measure == 0 and part.omega0_null


def test_partition_zero_field():
    pr = parse_problem("F_expr = 0*x\ndomain = (0, 1)\nh_const = -1\n")
    part = partition_domain(pr)
    assert part.omega0_measure == pytest.approx(1.0, abs=0.02)
    assert part.omega1 == []


def test_partition_empty_grid_errors(lasota):
    with pytest.raises(ValueError):
        partition_domain(lasota(), np.array([]))


@given(a=st.floats(-0.9, 0.9))
def test_partition_membership_exclusive(a):
    pr = parse_problem(f"F_expr = (x - {a!r})*(x + 0.95)\ndomain = (-1, 1)\n")
    part = partition_domain(pr)
    g = part.grid
    F = np.abs(pr.F(g))
    assert np.all(F[part.mask0] <= part.zero_tolerance)
    assert np.all(F[~part.mask0] > part.zero_tolerance)


# --- hypotheses ---------------------------------------------------------------

def test_validate_lasota_passes(lasota):
    rep = validate_hypotheses(lasota(), 50)
    assert rep.passed, rep.to_dict()


def test_validate_blow_up_flagged():
    pr = parse_problem("F_expr = x^2\ndomain = (0, inf)\n")
    rep = validate_hypotheses(pr, 10)
    bad = {f.check for f in rep.failed()}
    assert "forward complete" in bad
    f = next(f for f in rep.findings if f.check == "forward complete")
    x = float(np.asarray(f.witness))
    # blow-up of x / (1 - x t) happens at t = 1 / x
    assert 1 / x <= 10


def test_validate_translation_passes():
    assert validate_hypotheses(parse_problem("family = translation\n"), 20).passed


def test_optional_section_header():
    a = parse_problem("[problem]\nfamily = lasota\nh_const = -0.5\n")
    b = parse_problem("family = lasota\nh_const = -0.5\n")
    assert serialize_problem(a) == serialize_problem(b)
    with pytest.raises(ConfigError):
        parse_problem("[problem]\nfamily = lasota\n[other]\np = 2\n")
    with pytest.raises(ConfigError) as err:
        parse_problem("[problem]\nfamily = lasota\np = 2\np = 3\n")
    assert err.value.line == 4
