import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wcstab import escape_time, family_domain, family_field, flow, flow_jacobian, image_indicator, inverse_flow
from wcstab import make_semiflow
from wcstab.model import Tolerances
from wcstab.semiflow import DomainExitError, NumericSemiflow

TOL = Tolerances()


def sf(tag, numeric=False, **params):
    return make_semiflow(family_field(tag, params), family_domain(tag, params), TOL, numeric)


# --- closed forms ---------------------------------------------------------------

def test_lasota_flow():
    x = np.array([0.1, 0.5, 0.9])
    np.testing.assert_allclose(flow(sf("lasota"), 2.0, x), x * math.exp(-2.0), rtol=1e-15)


def test_affine_flow():
    x = np.array([-3.0, 0.5, 4.0])
    got = flow(sf("affine", slope=-1, offset=1), 1.5, x)
    np.testing.assert_allclose(got, 1 + (x - 1) * math.exp(-1.5), rtol=1e-14)


@pytest.mark.parametrize("r", [1.5, 2.0, 3.0])
def test_lasota_r_flow(r):
    x, t = np.array([0.2, 0.7]), 1.7
    want = ((r - 1) * t + x ** (1 - r)) ** (1 / (1 - r))
    np.testing.assert_allclose(flow(sf("lasota_r", r=r), t, x), want, rtol=1e-13)


def test_numeric_matches_lasota():
    num = sf("lasota", numeric=True)
    xs = np.linspace(0.1, 0.9, 9)
    for t in np.linspace(0, 10, 11):
        np.testing.assert_allclose(flow(num, t, xs), xs * math.exp(-t), rtol=1e-9, atol=TOL.tol_ode)


def test_inverse_lasota_image():
    s = sf("lasota")
    assert inverse_flow(s, 1.0, 0.3) == pytest.approx(0.3 * math.e)
    assert inverse_flow(s, 1.0, 0.5) is None
    assert image_indicator(s, 1.0, 0.5) is False
    assert image_indicator(s, 1.0, 0.3) is True
    assert image_indicator(s, 0.0, 0.99) is True


def test_inverse_translation_always():
    s = sf("translation")
    assert inverse_flow(s, 3.0, 1.0) == pytest.approx(-2.0)
    assert inverse_flow(s, 0.0, 1.25) == 1.25
    assert image_indicator(s, 50.0, -7.0) is True


def test_jacobian_closed_forms():
    assert flow_jacobian(sf("affine", slope=-1, offset=1), 2.0, 0.3).value == pytest.approx(math.exp(-2))
    r, t, x = 2.5, 0.8, 0.4
    want = x ** (-r) * ((r - 1) * t + x ** (1 - r)) ** (r / (1 - r))
    assert flow_jacobian(sf("lasota_r", r=r), t, x).value == pytest.approx(want, rel=1e-12)
    for tag in ("lasota", "translation"):
        assert flow_jacobian(sf(tag), 0.0, 0.5).value == 1.0


def test_escape_times():
    assert escape_time(sf("lasota"), 0.3) == pytest.approx(-math.log(0.3))
    r, x = 3.0, 0.4
    assert escape_time(sf("lasota_r", r=r), x) == pytest.approx((x ** (1 - r) - 1) / (r - 1))
    assert escape_time(sf("translation"), 0.0, horizon=100) is None


def test_numeric_escape_time():
    num = sf("lasota", numeric=True)
    assert escape_time(num, 0.3, horizon=50) == pytest.approx(-math.log(0.3), rel=1e-6)


def test_domain_exit_raised():
    num = NumericSemiflow(family_field("translation", {}), family_domain("lasota", {}), TOL)
    with pytest.raises(DomainExitError) as err:
        num.flow(2.0, np.array([0.5]))
    assert float(np.min(err.value.exit_time)) == pytest.approx(0.5, abs=1e-6)


def test_numeric_blow_up_detected():
    from wcstab.model import VectorField
    from wcstab import Domain
    field = VectorField.from_expressions(["x^2"])
    num = NumericSemiflow(field, Domain.interval(0, math.inf), TOL)
    et = num.exit_time(np.array([0.5]), 1, 10)
    assert et[0] == pytest.approx(2.0, rel=1e-3)


# --- properties -----------------------------------------------------------------

FAMILIES = [("lasota", {}), ("lasota_r", {"r": 2.0}), ("affine", {"slope": -1.0, "offset": 1.0}),
            ("translation", {"speed": 1.0})]


@pytest.mark.parametrize("tag,params", FAMILIES)
@given(t=st.floats(0, 5), s=st.floats(0, 5), u=st.floats(0.05, 0.95))
def test_group_law(tag, params, t, s, u):
    f = sf(tag, **params)
    x = np.array([u if tag.startswith("lasota") else 8 * u - 4])
    lhs = f.flow(t, f.flow(s, x))
    rhs = f.flow(t + s, x)
    assert abs(lhs[0] - rhs[0]) <= TOL.tol_flow * max(1.0, abs(rhs[0]))


@pytest.mark.parametrize("tag,params", FAMILIES)
@given(t=st.floats(0, 4), u=st.floats(0.05, 0.95))
def test_round_trip(tag, params, t, u):
    f = sf(tag, **params)
    x = np.array([u * math.exp(-t) if tag.startswith("lasota") else 8 * u - 4])
    if tag == "lasota_r":
        x = f.flow(t, np.array([u]))
    y, inside = f.inverse(t, x)
    assert bool(np.all(inside))
    assert abs(f.flow(t, y)[0] - x[0]) <= TOL.tol_flow * max(1.0, abs(x[0]))


@pytest.mark.parametrize("tag,params", FAMILIES)
@given(t=st.floats(0, 4), u=st.floats(0.1, 0.9))
def test_jacobian_matches_finite_difference(tag, params, t, u):
    f = sf(tag, **params)
    x = u if tag.startswith("lasota") else 8 * u - 4
    h = 1e-5 * max(abs(x), 1e-3)
    fd = (f.flow(t, np.array([x + h]))[0] - f.flow(t, np.array([x - h]))[0]) / (2 * h)
    jac = flow_jacobian(f, t, x).value
    assert abs(fd - jac) <= 1e-6 * max(1.0, abs(jac))


@pytest.mark.parametrize("tag,params", FAMILIES)
def test_flow_monotone(tag, params):
    f = sf(tag, **params)
    g = np.linspace(0.01, 0.99, 50) if tag.startswith("lasota") else np.linspace(-5, 5, 50)
    for t in (0.5, 3.0):
        assert np.all(np.diff(f.flow(t, g)) > 0)


def test_trajectory_cache_thread_safe():
    from concurrent.futures import ThreadPoolExecutor
    num = sf("lasota", numeric=True)
    xs = np.linspace(0.1, 0.9, 5)
    times = np.linspace(0, 3, 7)
    with ThreadPoolExecutor(4) as ex:
        outs = list(ex.map(lambda _: num.trajectory(xs, times).points, range(8)))
    for o in outs:
        np.testing.assert_array_equal(o, outs[0])
