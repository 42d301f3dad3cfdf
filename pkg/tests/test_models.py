"""Model constructors: ball family, space forms, conformal 1-forms, examples."""

import math

import numpy as np
import pytest

from finslerlab.abmetric import F_eval
from finslerlab.errors import DomainError, RegularityError
from finslerlab.flatness import (
    hamel_residual,
    sample_ball,
    sample_sphere,
    structure_residual,
)
from finslerlab.geometry import covariant_derivative, norm_b, spray_riemann
from finslerlab.models import (
    ConformalFieldParams,
    berwald_metric,
    build_model,
    closed_conformal_form,
    conformal_field,
    example_63_metric,
    example_64_metric,
    family_sigma_metric,
    funk_metric,
    sigma_eps_range,
    space_form_metric,
)
from finslerlab.phifuncs import OdeParams

from oracles import conformality_residual


def test_funk_metric_values_and_norm():
    funk = funk_metric(3)
    assert np.isclose(F_eval(funk, np.zeros(3), np.array([0.0, 0.0, 1.5])), 1.5)
    assert np.isclose(F_eval(funk, np.array([0.5, 0, 0]), np.array([1.0, 0, 0])), 2 / 3)
    rng = np.random.default_rng(0)
    xs = rng.uniform(-0.5, 0.5, (20, 3))
    assert np.max(np.abs(norm_b(funk.alpha, funk.beta, xs) - np.linalg.norm(xs, axis=-1))) < 1e-12


def test_berwald_metric_flatness_and_structure():
    bw = berwald_metric(3)
    assert np.isclose(F_eval(bw, np.zeros(3), np.array([2.0, 0, 0])), 2.0)
    rng = np.random.default_rng(1)
    xs = sample_ball(rng, 3, 100, 0.64)
    ys = sample_sphere(rng, 3, 100)
    assert np.max(hamel_residual(bw, xs, ys)) < 1e-6
    rb, rg = structure_residual(bw.alpha, bw.beta, OdeParams(2, 0, -3), xs[:50])
    assert np.max(rb) < 1e-7 and np.max(rg) < 1e-7


def test_family_sigma_reproduces_named_models():
    rng = np.random.default_rng(2)
    xs = rng.uniform(-0.45, 0.45, (100, 3))
    ys = rng.standard_normal((100, 3))
    f0 = family_sigma_metric(0.0, 1.0, 3)
    funk = funk_metric(3)
    assert np.max(np.abs(F_eval(f0, xs, ys) - F_eval(funk, xs, ys))) < 1e-12
    f1 = family_sigma_metric(1.0, 2.0, 3)
    bw = berwald_metric(3)
    assert np.max(np.abs(F_eval(f1, xs, ys) - F_eval(bw, xs, ys))) < 1e-12


def test_family_sigma_two_flat():
    m = family_sigma_metric(2.0, 0.0, 3)
    rng = np.random.default_rng(3)
    xs = sample_ball(rng, 3, 50, 0.64)
    ys = sample_sphere(rng, 3, 50)
    assert np.max(hamel_residual(m, xs, ys)) < 1e-5


def test_family_sigma_regularity_gate():
    # far too steep a slope: phi goes negative inside the ball
    with pytest.raises(RegularityError):
        family_sigma_metric(0.0, 3.0, 3)


def test_sigma_eps_range_reports_interval():
    hi = sigma_eps_range(2.0, b0=0.9)
    assert np.isfinite(hi) and hi > 0.1


def test_space_form_metrics():
    assert np.max(np.abs(space_form_metric(0.0, 3).matrix(np.array([0.3, 0.1, 0.0]))
                         - np.eye(3))) < 1e-15
    rng = np.random.default_rng(4)
    for mu in (1.0, -1.0):
        h = space_form_metric(mu, 3)
        for _ in range(50):
            x = rng.uniform(-0.45, 0.45, 3)
            y = rng.standard_normal(3)
            g = spray_riemann(h, x, y)
            assert np.linalg.norm(np.cross(g, y)) < 1e-8


def test_space_form_domain_radius():
    h = space_form_metric(-1.0, 3)
    assert np.isclose(h.domain_radius, 1.0)
    with pytest.raises(DomainError):
        spray_riemann(h, np.array([1.0, 0.0, 0.0]), np.ones(3))


def test_conformal_field_radial_case():
    w, wflat = conformal_field(ConformalFieldParams(mu=0.0, lam=1.0), 3)
    rng = np.random.default_rng(5)
    xs = rng.uniform(-0.5, 0.5, (10, 3))
    assert np.max(np.abs(w(xs) - xs)) < 1e-14
    h = space_form_metric(0.0, 3)
    cd = covariant_derivative(wflat, h, xs)
    assert np.max(np.abs(cd.rij - np.eye(3))) < 1e-12
    assert np.max(np.abs(cd.sij)) < 1e-13


def test_conformal_field_general_is_conformal():
    q = np.zeros((3, 3))
    q[0, 1], q[1, 0] = 0.3, -0.3
    params = ConformalFieldParams(mu=1.0, lam=0.4, q=q, a=np.array([0.1, 0.0, -0.1]),
                                  b=np.array([0.0, 0.2, 0.0]))
    w, wflat = conformal_field(params, 3)
    h = space_form_metric(1.0, 3)
    rng = np.random.default_rng(6)
    xs = rng.uniform(-0.4, 0.4, (20, 3))
    cd = covariant_derivative(wflat, h, xs)
    _, conf = conformality_residual(cd)
    assert conf < 1e-10


def test_conformal_field_nonclosed_witness():
    # at mu=0, dW-flat vanishes iff a = 0 and q = 0
    q = np.zeros((3, 3))
    q[0, 1], q[1, 0] = 0.5, -0.5
    w, wflat = conformal_field(ConformalFieldParams(mu=0.0, q=q), 3)
    h = space_form_metric(0.0, 3)
    cd = covariant_derivative(wflat, h, np.array([0.2, 0.1, 0.0]))
    assert np.max(np.abs(cd.sij)) > 1e-3
    _, wflat_a = conformal_field(ConformalFieldParams(mu=0.0, a=np.array([0.4, 0.0, 0.0])), 3)
    cd_a = covariant_derivative(wflat_a, h, np.array([0.2, 0.1, 0.0]))
    assert np.max(np.abs(cd_a.sij)) > 1e-3


def test_conformal_field_zero_params():
    w, wflat = conformal_field(ConformalFieldParams(mu=0.5), 3)
    x = np.array([0.2, -0.2, 0.1])
    assert np.max(np.abs(w(x))) == 0.0
    assert np.max(np.abs(wflat.covector(x))) == 0.0


def test_conformal_field_requires_n3():
    with pytest.raises(DomainError):
        conformal_field(ConformalFieldParams(mu=0.0, lam=1.0), 2)


def test_closed_conformal_form_flat_case():
    # mu = 0: the display collapses to lam <x,y> + <a,y>
    a = np.array([0.2, -0.1, 0.3])
    form = closed_conformal_form(0.0, 0.7, a, 3)
    rng = np.random.default_rng(7)
    xs = rng.uniform(-0.5, 0.5, (10, 3))
    assert np.max(np.abs(form.covector(xs) - (0.7 * xs + a))) < 1e-14


@pytest.mark.parametrize("mu", [-0.5, 0.0, 1.0])
def test_closed_conformal_form_certification(mu):
    h = space_form_metric(mu, 3)
    form = closed_conformal_form(mu, 0.6, np.array([0.15, -0.1, 0.05]), 3, verify=True)
    rng = np.random.default_rng(8)
    xs = rng.uniform(-0.35, 0.35, (50, 3)) * h.domain_radius
    cd = covariant_derivative(form, h, xs)
    s_res, c_res = conformality_residual(cd)
    assert s_res < 1e-9
    assert c_res < 1e-8


def test_closed_conformal_form_in_dim2():
    # the unified display stays closed+conformal in dimension 2
    h = space_form_metric(1.0, 2)
    form = closed_conformal_form(1.0, 0.5, np.array([0.1, -0.2]), 2)
    rng = np.random.default_rng(9)
    xs = rng.uniform(-0.4, 0.4, (30, 2))
    cd = covariant_derivative(form, h, xs)
    s_res, c_res = conformality_residual(cd)
    assert s_res < 1e-9 and c_res < 1e-8


def test_example_63_flatness_and_display():
    for sign in (+1, -1):
        m = example_63_metric(sign, 0.4, 3, lam=0.3)
        rng = np.random.default_rng(10)
        xs = sample_ball(rng, 3, 50, 0.8)
        ys = sample_sphere(rng, 3, 50)
        assert np.max(hamel_residual(m, xs, ys)) < 1e-5
    # displayed closed forms:
    #   '+': F = e^{T} (abar + eps bbar + 2 sum (-1)^n bbar^(2n+2)/(...) abar^(2n+1))
    #   '-': F = e^{-T} (abar + eps bbar - 2 sum bbar^(2n+2)/(...) abar^(2n+1))
    abar = space_form_metric(0.0, 3)
    bbar = closed_conformal_form(0.0, 0.3, None, 3)
    rng = np.random.default_rng(11)
    for sign in (+1, -1):
        m = example_63_metric(sign, 0.4, 3, lam=0.3)
        for _ in range(10):
            x = rng.uniform(-0.5, 0.5, 3)
            y = rng.standard_normal(3)
            al = float(np.sqrt(np.einsum("ij,i,j->", abar.matrix(x), y, y)))
            be = float(bbar.covector(x) @ y)
            big_t = float(np.einsum("ij,i,j->", np.linalg.inv(abar.matrix(x)),
                                    bbar.covector(x), bbar.covector(x)))
            term = lambda n: (2 * be ** (2 * n + 2)
                              / ((2 * n + 2) * (2 * n + 1) * math.factorial(n)
                                 * al ** (2 * n + 1)))
            if sign > 0:
                series = sum((-1) ** n * term(n) for n in range(30))
            else:
                series = -sum(term(n) for n in range(30))
            display = np.exp(sign * big_t) * (al + 0.4 * be + series)
            assert abs(F_eval(m, x, y) - display) < 1e-10


def test_example_63_zero_form_is_riemannian_homothety():
    m = example_63_metric(+1, 0.4, 3, lam=0.0)
    rng = np.random.default_rng(12)
    xs = sample_ball(rng, 3, 20, 0.6)
    ys = sample_sphere(rng, 3, 20)
    assert np.max(hamel_residual(m, xs, ys)) < 1e-8


def test_example_64_flatness_and_display():
    m = example_64_metric(0.5, 3, lam=0.3)
    rng = np.random.default_rng(13)
    xs = sample_ball(rng, 3, 50, 0.8)
    ys = sample_sphere(rng, 3, 50)
    assert np.max(hamel_residual(m, xs, ys)) < 1e-5
    # displayed prefactors: alpha = (1+T^2)^(-3/4) sqrt((1+T^2) abar^2 - T bbar^2)
    abar = space_form_metric(0.0, 3)
    bbar = closed_conformal_form(0.0, 0.3, None, 3)
    x = np.array([0.4, -0.2, 0.1])
    y = np.array([0.7, 1.0, -0.5])
    al2 = float(np.einsum("ij,i,j->", abar.matrix(x), y, y))
    be = float(bbar.covector(x) @ y)
    big_t = float(np.einsum("ij,i,j->", np.linalg.inv(abar.matrix(x)),
                            bbar.covector(x), bbar.covector(x)))
    alpha2 = float(np.einsum("ij,i,j->", m.alpha.matrix(x), y, y))
    expect = (1 + big_t**2) ** -1.5 * ((1 + big_t**2) * al2 - big_t * be**2)
    assert abs(alpha2 - expect) < 1e-12
    assert abs(float(m.beta.covector(x) @ y) - (1 + big_t**2) ** -0.75 * be) < 1e-12


def test_build_model_registry():
    for name in ("funk", "berwald", "family-sigma", "space-form", "example63-plus",
                 "example63-minus", "example64"):
        m = build_model(name, 3, sigma=1.0, eps=0.4 if "example" in name else 2.0,
                        mu=0.0, lam=0.2)
        assert m.dim == 3
    with pytest.raises(ValueError):
        build_model("nope", 3)
