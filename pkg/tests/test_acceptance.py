"""Acceptance suite: one test per criterion, each at its stated tolerance.

Run with `pytest tests/test_acceptance.py -v -s` to see one PASS/FAIL line
per criterion.  Everything is seeded; the whole module stays within a desk
budget of a few minutes.
"""

import numpy as np

from finslerlab.abmetric import ABMetric
from finslerlab.classify import (
    PTag,
    QTag,
    Quadruple,
    invariants,
    reduced_quadruple,
    reversibilize,
    same_type,
    reduced_form_p,
    transform_g,
    transform_h,
)
from finslerlab.deform import (
    ONE_FACTOR,
    ZERO_FACTOR,
    berwald_chain,
    chain_pair,
    forward_chain,
    inverse_chain,
    predicted_after_conformal,
    predicted_after_rescale,
    predicted_after_stretch,
)
from finslerlab.flatness import (
    hamel_residual,
    integrate_geodesic,
    integrate_geodesics,
    rapcsak_residual,
    sample_ball,
    sample_sphere,
    straightness_deviation,
    structure_residual,
)
from finslerlab.geometry import (
    MetricField,
    christoffel,
    covariant_derivative,
    norm_b,
    spray_riemann,
)
from finslerlab.models import (
    ConformalFieldParams,
    berwald_metric,
    closed_conformal_form,
    conformal_field,
    funk_metric,
    space_form_metric,
)
from finslerlab.phifuncs import (
    OdeParams,
    QuadraturePhi,
    SigmaSeriesPhi,
    ode_residual,
    phi_berwald,
    phi_berwald_shifted,
    phi_randers,
    positivity_radius,
    regularity_check,
)

from oracles import (
    conformality_residual,
    fd_christoffel,
    fd_covariant_derivative,
    fd_spray_euler_lagrange,
    random_oneform,
    random_spd_metric,
)

# one k per eta/f case, reused by criteria 3 and 8
CASE_QUADRUPLES = (
    OdeParams(2.0, 0.0, -2.0, 0.7),
    OdeParams(2.0, 0.0, -3.0, 0.7),
    OdeParams(3.0, 1.0, 0.0, 0.7),
    OdeParams(3.0, 4.0, 1.0, 0.7),
    OdeParams(0.0, 1.0, 0.0, 0.7),
)


def _report(num: int, desc: str, ok: bool, detail: str = ""):
    status = "PASS" if ok else "FAIL"
    line = f"[{status}] criterion {num}: {desc}"
    if detail:
        line += f" ({detail})"
    print(line)
    assert ok, line


def _flatness_sweep(m, samples, seed, radius):
    rng = np.random.default_rng(seed)
    xs = sample_ball(rng, m.dim, samples, radius)
    ys = sample_sphere(rng, m.dim, samples)
    h = float(np.max(hamel_residual(m, xs, ys)))
    r = float(np.max(rapcsak_residual(m, xs, ys)))
    return h, r, xs, ys


def _random_valid_quadruple(rng, need_radius=0.8):
    while True:
        k = OdeParams(rng.uniform(-1.5, 1.5), rng.uniform(-0.8, 0.8),
                      rng.uniform(-1.5, 1.5), rng.uniform(-1.0, 1.0))
        if positivity_radius(k) > need_radius and not k.is_randers_type:
            return k


def test_criterion_1_funk_flatness():
    funk = funk_metric(3)
    h, r, xs, ys = _flatness_sweep(funk, 100, 101, 0.8)
    traces = integrate_geodesics(funk, xs, ys, 0.9, 1e-3, max_steps=400)
    dev = max(straightness_deviation(t) for t in traces)
    ok = h < 1e-6 and r < 1e-6 and dev < 1e-6
    _report(1, "Funk flatness (Hamel/Rapcsak/straightness < 1e-6, 100 samples)", ok,
            f"hamel={h:.2e} rapcsak={r:.2e} dev={dev:.2e}")


def test_criterion_2_berwald_flatness_and_structure():
    bw = berwald_metric(3)
    h, r, xs, ys = _flatness_sweep(bw, 100, 102, 0.8)
    traces = integrate_geodesics(bw, xs, ys, 0.9, 1e-3, max_steps=400)
    dev = max(straightness_deviation(t) for t in traces)
    rb, rg = structure_residual(bw.alpha, bw.beta, OdeParams(2, 0, -3), xs[:50])
    sres = max(float(np.max(rb)), float(np.max(rg)))
    ok = h < 1e-6 and r < 1e-6 and dev < 1e-6 and sres < 1e-7
    _report(2, "Berwald flatness + structure equations (k=(2,0,-3))", ok,
            f"hamel={h:.2e} dev={dev:.2e} structure={sres:.2e}")


def test_criterion_3_five_case_construction():
    worst = 0.0
    rng = np.random.default_rng(103)
    for k in CASE_QUADRUPLES:
        for n, mu in ((2, -0.5), (3, 1.0)):
            abar = space_form_metric(mu, n)
            bbar = closed_conformal_form(mu, 0.25, 0.05 * np.arange(1, n + 1), n)
            alpha, beta = inverse_chain(abar, bbar, k)
            m = ABMetric(alpha, beta, QuadraturePhi(k, tol=1e-12))
            xs = sample_ball(rng, n, 50, 0.5 * abar.domain_radius)
            ys = sample_sphere(rng, n, 50)
            h = float(np.max(hamel_residual(m, xs, ys)))
            worst = max(worst, h)
    ok = worst < 1e-5
    _report(3, "inverse-chain metrics flat for all five eta cases, dims 2+3", ok,
            f"worst hamel={worst:.2e}")


def test_criterion_4_round_trips():
    rng = np.random.default_rng(104)
    a = random_spd_metric(rng, 3)
    b = random_oneform(rng, 3)
    xs = rng.uniform(-0.4, 0.4, (50, 3))
    worst = 0.0
    for _ in range(10):
        k = _random_valid_quadruple(rng)
        ab, bb = forward_chain(a, b, k)
        a2, b2 = inverse_chain(ab, bb, k)
        worst = max(worst, float(np.max(np.abs(a2.matrix(xs) - a.matrix(xs)))),
                    float(np.max(np.abs(b2.covector(xs) - b.covector(xs)))))
        a3, b3 = forward_chain(*inverse_chain(a, b, k), k)
        worst = max(worst, float(np.max(np.abs(a3.matrix(xs) - a.matrix(xs)))),
                    float(np.max(np.abs(b3.covector(xs) - b.covector(xs)))))
    bw = berwald_metric(3)
    xs2 = rng.uniform(-0.45, 0.45, (50, 3))
    ab, bb = berwald_chain(bw.alpha, bw.beta, "forward")
    ai, bi = berwald_chain(ab, bb, "inverse")
    worst = max(worst, float(np.max(np.abs(ai.matrix(xs2) - bw.alpha.matrix(xs2)))),
                float(np.max(np.abs(bi.covector(xs2) - bw.beta.covector(xs2)))))
    b2v = norm_b(bw.alpha, bw.beta, xs2) ** 2
    bb2v = norm_b(ab, bb, xs2) ** 2
    norm_rel = float(np.max(np.abs(bb2v - b2v / (1.0 - b2v))))
    ok = worst < 1e-9 and norm_rel < 1e-12
    _report(4, "chain round trips identity to 1e-9; quadratic-chain norm relation 1e-12",
            ok, f"worst={worst:.2e} norm_rel={norm_rel:.2e}")


def test_criterion_5_stage_fidelity():
    from finslerlab.deform import ScalarFactor

    worst = 0.0
    for stage, seed in (("stretch", 105), ("conformal", 205), ("rescale", 305)):
        rng = np.random.default_rng(seed)
        for _ in range(30):
            a = random_spd_metric(rng, 3)
            b = random_oneform(rng, 3)
            kap = ScalarFactor(lambda t, c=rng.uniform(-0.5, 0.5): c + 0.2 * t)
            rho = ScalarFactor(lambda t, c=rng.uniform(-0.4, 0.4): c * t)
            nu = ScalarFactor(lambda t, c=rng.uniform(0.1, 0.3): 1.0 + c * t)
            x = rng.uniform(-0.3, 0.3, 3)
            y = rng.standard_normal(3)
            if stage == "stretch":
                ad, bd = chain_pair(a, b, kap, ZERO_FACTOR, ONE_FACTOR)
                gp, bp = predicted_after_stretch(a, b, kap, x, y)
            elif stage == "conformal":
                ad, bd = chain_pair(a, b, kap, rho, ONE_FACTOR)
                gp, bp = predicted_after_conformal(a, b, kap, rho, x, y)
            else:
                ad, bd = chain_pair(a, b, kap, rho, nu)
                gp, bp = predicted_after_rescale(a, b, kap, rho, nu, x, y)
            gd = spray_riemann(ad, x, y)
            bdij = covariant_derivative(bd, ad, x).bij
            worst = max(worst, float(np.max(np.abs(gp - gd))),
                        float(np.max(np.abs(bp - bdij))))
    ok = worst < 1e-7
    _report(5, "deformation-stage predicted (G, b_{i|j}) match direct recomputation", ok,
            f"worst={worst:.2e}")


def test_criterion_6_phi_consistency():
    grid = np.linspace(-0.9, 0.9, 37)
    worst = max(
        float(np.max(np.abs(ode_residual(phi_berwald(), OdeParams(2, 0, -3), grid)))),
        float(np.max(np.abs(ode_residual(phi_berwald_shifted(), OdeParams(3, 0, -2), grid)))),
    )
    rng = np.random.default_rng(106)
    for _ in range(10):
        k = _random_valid_quadruple(rng, need_radius=0.95)
        spec = QuadraturePhi(k, tol=1e-13)
        worst = max(worst, float(np.max(np.abs(ode_residual(spec, k, grid)))))
    for sigma in (0.0, 1.0, 2.0):
        spec = SigmaSeriesPhi(sigma, 0.5)
        worst = max(worst, float(np.max(np.abs(ode_residual(spec, spec.params, grid)))))
    ident = max(
        float(np.max(np.abs(SigmaSeriesPhi(1.0, 2.0).phi(grid) - (1 + grid) ** 2))),
        float(np.max(np.abs(SigmaSeriesPhi(0.0, 1.0).phi(grid) - (1 + grid)))),
    )
    ok = worst < 1e-8 and ident < 1e-12
    _report(6, "phi ODE residuals < 1e-8; sigma-family identities to 1e-12", ok,
            f"residual={worst:.2e} identity={ident:.2e}")


def test_criterion_7_classification_invariance():
    rng = np.random.default_rng(107)
    checked = 0
    delta_worst = 0.0
    while checked < 200:
        q = Quadruple(*rng.uniform(-2, 2, 3), rng.uniform(-1.5, 1.5))
        sig = invariants(q)
        if abs(sig.d2) < 0.1:
            continue
        checked += 1
        qq = q
        for _ in range(rng.integers(1, 4)):
            if rng.random() < 0.5:
                qq = transform_g(rng.uniform(-1.5, 1.5), qq)
            else:
                qq = transform_h(rng.uniform(0.5, 2.0) * rng.choice([-1.0, 1.0]), qq)
        s2 = invariants(qq)
        assert sig.p_tag is s2.p_tag and sig.q_tag is s2.q_tag
        assert same_type(q, qq)
        scale = max(1.0, abs(sig.d1), abs(sig.d2))
        delta_worst = max(delta_worst, abs(sig.d1 - sig.d2 - sig.d3**2) / scale)
    from finslerlab.classify import ReducedForm

    table_ok = True
    for kind, draws in (("d1-positive", rng.uniform(-2, 2, 20)),
                        ("d1-zero", [1.0, -1.0] * 10),
                        ("d1-negative", rng.uniform(-0.95, 0.95, 20))):
        for s in draws:
            if kind == "d1-positive" and (abs(s) < 0.05 or abs(s + 0.5) < 0.05):
                continue
            if kind == "d1-negative" and abs(s) < 1e-3:
                continue
            form = ReducedForm(kind, float(s))
            tag, val = reduced_form_p(form)
            sig = invariants(reduced_quadruple(form))
            table_ok &= tag is sig.p_tag
            if tag in (PTag.REAL, PTag.IMAG):
                table_ok &= abs(val - sig.p_value) < 1e-12 * (1 + abs(val))
    pair_ok = same_type(Quadruple(2, 0, -3, 2), Quadruple(3, 0, -2, 2))
    ok = delta_worst < 1e-12 and table_ok and pair_ok
    _report(7, "(p,q) invariant under 200 group elements; reduced-p rows; type pair", ok,
            f"delta identity worst={delta_worst:.2e}")


def test_criterion_8_reversibilization():
    rng = np.random.default_rng(108)
    worst_even = 0.0
    for _ in range(10):
        k = _random_valid_quadruple(rng, need_radius=0.95)
        phi = QuadraturePhi(k, tol=1e-13)
        b_work = min(0.9, 0.9 * phi.b0)
        assert regularity_check(phi, b_work, grid=10).passed
        even, coef = reversibilize(phi)
        ss = np.linspace(0.05, b_work, 8)
        worst_even = max(worst_even, float(np.max(np.abs(even.phi(ss) - even.phi(-ss)))))
        assert regularity_check(even, b_work, grid=10).passed
        ksig = Quadruple(even.params.k1, even.params.k2, even.params.k3, even.params.eps)
        assert invariants(ksig).q_tag is QTag.ZERO
    # the reversibilized metric built from inverse-chain data stays flat
    k = CASE_QUADRUPLES[1]
    abar = space_form_metric(1.0, 3)
    bbar = closed_conformal_form(1.0, 0.25, np.array([0.05, 0.1, 0.15]), 3)
    alpha, beta = inverse_chain(abar, bbar, k)
    even, _ = reversibilize(QuadraturePhi(k, tol=1e-12))
    m = ABMetric(alpha, beta, even)
    xs = sample_ball(np.random.default_rng(9), 3, 50, 0.5)
    ys = sample_sphere(np.random.default_rng(10), 3, 50)
    h = float(np.max(hamel_residual(m, xs, ys)))
    ok = worst_even < 1e-10 and h < 1e-5
    _report(8, "reversibilization: even to 1e-10, regular, q=0, flat to 1e-5", ok,
            f"evenness={worst_even:.2e} hamel={h:.2e}")


def test_criterion_9_closed_conformal_certification():
    rng = np.random.default_rng(109)
    worst_s, worst_c = 0.0, 0.0
    for mu in (-0.5, 0.0, 1.0):
        h = space_form_metric(mu, 3)
        form = closed_conformal_form(mu, 0.5, np.array([0.1, -0.05, 0.2]), 3)
        xs = sample_ball(rng, 3, 50, 0.5 * h.domain_radius)
        s_res, c_res = conformality_residual(covariant_derivative(form, h, xs))
        worst_s, worst_c = max(worst_s, s_res), max(worst_c, c_res)
    # witness: a general conformal field with a != 0 or q != 0 is not closed
    q = np.zeros((3, 3))
    q[0, 1], q[1, 0] = 0.5, -0.5
    h0 = space_form_metric(0.0, 3)
    wmax = 0.0
    for params in (ConformalFieldParams(mu=0.0, q=q),
                   ConformalFieldParams(mu=0.0, a=np.array([0.4, 0.0, 0.0]))):
        _, wflat = conformal_field(params, 3)
        cd = covariant_derivative(wflat, h0, np.array([0.2, 0.1, 0.0]))
        wmax = max(wmax, float(np.max(np.abs(cd.sij))))
    ok = worst_s < 1e-8 and worst_c < 1e-8 and wmax > 1e-3
    _report(9, "closed-conformal forms certified (mu in {-0.5,0,1}); witness not closed",
            ok, f"s={worst_s:.2e} conf={worst_c:.2e} witness={wmax:.2e}")


def test_criterion_10_engine_cross_validation():
    rng = np.random.default_rng(110)
    worst = 0.0
    for _ in range(50):
        a = random_spd_metric(rng, 3)
        b = random_oneform(rng, 3)
        x = rng.uniform(-0.5, 0.5, 3)
        y = rng.standard_normal(3)
        worst = max(worst, float(np.max(np.abs(christoffel(a, x) - fd_christoffel(a, x)))))
        worst = max(worst, float(np.max(np.abs(
            spray_riemann(a, x, y) - fd_spray_euler_lagrange(a, x, y)))))
        worst = max(worst, float(np.max(np.abs(
            covariant_derivative(b, a, x).bij - fd_covariant_derivative(b, a, x)))))
    # RK4 order: endpoint error on a curved metric drops ~16x per halving
    funk = funk_metric(3)

    def perturbed(xv):
        return funk.alpha.matrix(xv) * (1.0 + 0.1 * xv[..., 0])[..., None, None]

    m = ABMetric(MetricField(3, perturbed, domain_radius=1.0), funk.beta, phi_randers())
    x0, y0 = np.array([0.1, 0.2, 0.0]), np.array([1.0, -0.5, 0.3])

    def endpoint(step, t_final=0.4):
        tr = integrate_geodesic(m, x0, y0, 10.0, step, max_steps=int(round(t_final / step)))
        return tr.points[-1]

    ref = endpoint(2.5e-4)
    ratio = (np.linalg.norm(endpoint(4e-3) - ref)
             / np.linalg.norm(endpoint(2e-3) - ref))
    ok = worst < 1e-6 and 8.0 < ratio < 32.0
    _report(10, "analytic derivatives vs FD oracles < 1e-6 on 50 fields; RK4 order 4",
            ok, f"fd worst={worst:.2e} rk4 ratio={ratio:.1f}")
