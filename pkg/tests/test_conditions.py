import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from inflowns.conditions import (CHECKERS, SHAPES, WORKED_EXAMPLES, CompatibilityError,
                                 IndexParams, PerturbationSpec, Shape, build_perturbation,
                                 check_bl_minus, check_bl_plus, check_r, get_shape, r_bound,
                                 verify_remark)


@pytest.mark.parametrize("key,params,expected", WORKED_EXAMPLES)
def test_worked_examples(key, params, expected):
    assert CHECKERS[key](params).passed is expected


def test_worked_example_violations_are_literal():
    assert check_bl_plus(IndexParams(0.5, 0.9, 0, 0, 2.0)).violated == ("3",)
    assert check_bl_minus(IndexParams(0.1, 0.2, 0, 0, 2.0)).violated == ("3",)
    assert check_r(IndexParams(0.02, 0, 0, 0.01, 2.0)).violated == ("2", "4")


def test_clause_boundaries():
    # clause 2 of the increasing system is non-strict; 1a is strict
    p = IndexParams(alpha=0.5, beta=0.5 - 2.5 * 0.1, l=0.1, gamma=2.0)
    assert "2" not in check_bl_plus(p).violated
    p = IndexParams(alpha=0.2, beta=0.3, l=0.1, gamma=2.0)
    assert "1a" in check_bl_plus(p).violated


def test_theta_and_validation():
    p = IndexParams(0.5, 0.2, 0.1, 0.0, 2.0)
    assert p.theta == pytest.approx(0.5 - 0.2 - 2.5 * 0.1)
    with pytest.raises(ValueError):
        IndexParams(0.1, l=-1.0)
    with pytest.raises(ValueError):
        IndexParams(0.1, gamma=0.5)


def test_r_bound_value():
    assert r_bound(2.0) == pytest.approx(min(1 / 14, 2 / 27))


def test_table_lists_every_clause():
    table = check_r(IndexParams(0.01, 0, 0, 0.1, 2.0)).table()
    assert len(table.splitlines()) == 4 and "VIOLATED" not in table


@pytest.mark.parametrize("remark", [1, 2, 4])
def test_remarks_have_no_counterexamples(remark):
    start = time.perf_counter()
    rep = verify_remark(remark, 2.0, 10_000, seed=0)
    assert rep.samples == 10_000 and rep.counterexamples == 0 and rep.passed
    assert time.perf_counter() - start < 1.0


@pytest.mark.parametrize("remark", [1, 2, 4])
@pytest.mark.parametrize("gamma", [1.2, 1.4, 3.0])
def test_remarks_other_gammas(remark, gamma):
    assert verify_remark(remark, gamma, 2000, seed=3).counterexamples == 0


def test_empty_region_and_bad_arguments():
    rep = verify_remark(1, 1.0, 100)
    assert rep.empty_region and rep.samples == 0
    with pytest.raises(ValueError):
        verify_remark(3, 2.0)
    with pytest.raises(ValueError):
        verify_remark(1, 2.0, samples=0)


def test_remark_sampling_is_seeded():
    a = verify_remark(2, 2.0, 50, seed=11)
    b = verify_remark(2, 2.0, 50, seed=11)
    assert a == b


@pytest.mark.parametrize("name", ["bump", "tanh-tail", "sine-packet"])
def test_shape_norms_against_quadrature(name):
    shape = SHAPES[name]
    assert shape.f(0.0) == pytest.approx(0.0, abs=1e-14)
    pts = [0.0, 1.0, 5.0, 20.0, 60.0]
    l2 = sum(quad(lambda x: float(shape.f(x)) ** 2, a, b, limit=200)[0] for a, b in zip(pts, pts[1:]))
    dl2 = sum(quad(lambda x: float(shape.df(x)) ** 2, a, b, limit=200)[0] for a, b in zip(pts, pts[1:]))
    assert shape.norm == pytest.approx(math.sqrt(l2), rel=1e-4)
    assert shape.dnorm == pytest.approx(math.sqrt(dl2), rel=1e-4)


@pytest.mark.parametrize("name", ["bump", "tanh-tail", "sine-packet"])
def test_shape_derivatives(name):
    shape = SHAPES[name]
    x = np.linspace(0.05, 15.0, 200)
    h = 1e-6
    fd = (shape.f(x + h) - shape.f(x - h)) / (2 * h)
    assert np.allclose(shape.df(x), fd, atol=1e-7)


def test_shape_lookup_errors():
    with pytest.raises(ValueError):
        get_shape("nope")
    bad = Shape("one", lambda x: 1.0 + 0 * np.asarray(x), lambda x: 0 * np.asarray(x), 1.0, 0.0)
    with pytest.raises(CompatibilityError):
        PerturbationSpec(bad, SHAPES["zero"], IndexParams(0.1), 0.5)
    with pytest.raises(ValueError):
        build_perturbation("bump", "bump", IndexParams(0.1), 0.0)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.05, 1.0))
def test_scaled_norms_change_of_variables(alpha, beta, eps):
    spec = build_perturbation("bump", "sine-packet", IndexParams(alpha, beta), eps)
    norms = spec.analytic_norms()
    end = spec.support_end()
    xi = np.linspace(0.0, end, 20001)
    dx = xi[1] - xi[0]
    num = math.sqrt(np.trapezoid(spec.phi0(xi) ** 2, dx=dx))
    assert num == pytest.approx(norms["phi0"], rel=1e-3)
    assert norms["phi0"] == pytest.approx(eps ** alpha * SHAPES["bump"].norm)
    assert norms["psi0_xi"] == pytest.approx(eps ** beta * SHAPES["sine-packet"].dnorm)


def test_zero_spec():
    spec = build_perturbation("zero", "zero", IndexParams(0.5), 0.5)
    assert spec.is_zero and spec.support_end() == 0.0
    assert not np.any(spec.phi0(np.linspace(0, 3, 7)))
