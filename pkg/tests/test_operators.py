import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hppp import imaging
from hppp.fixedpoint import Schedule, hppp_iterate
from hppp.operators import (
    LinearOperator, PrimalDualPoint, Preconditioner, SaddleProblem, apply_M, check_mfne, cp_step,
    cp_step_anchored, estimate_norm, gradient_operator, identity_operator, inner_M, make_T, scalar_operator,
    seminorm_M,
)
from hppp.prox import deblur_resolvent, dual_ball_resolvent
from hppp.restore import tv_objective, Degraded, get_preset
from hppp.toy import as_pd, toy_preconditioner, toy_saddle_problem


def rand_pd(rng, shape=(8, 8)):
    return PrimalDualPoint(rng.standard_normal(shape), rng.standard_normal((2,) + shape))


def tv_deblur(shape=(16, 16), seed=0, tau=0.57, s=0.57, norm_K=1.75):
    rng = np.random.default_rng(seed)
    psf = imaging.make_psf("gaussian", sigma=1.6)
    y = imaging.add_wgn(imaging.convolve_psf(rng.random(shape), psf), 0.01, seed)
    K = gradient_operator()
    return SaddleProblem(deblur_resolvent(psf, y), dual_ball_resolvent(5e-4), K, lam=2.0), \
        Preconditioner(tau, s, K, norm_K), psf, y


def test_point_arithmetic():
    u = PrimalDualPoint(np.ones(3), 2 * np.ones(2))
    v = 2 * u - u
    np.testing.assert_array_equal(v.x, u.x)
    assert (-u).dot(u) == -(3 + 8)
    assert u.norm() == pytest.approx(np.sqrt(11))
    assert not PrimalDualPoint([np.nan], [0]).isfinite()


def test_preconditioner_admissibility():
    K = identity_operator()
    assert Preconditioner(1, 1, K).degenerate
    assert not Preconditioner(0.5, 1, K).degenerate
    with pytest.raises(ValueError):
        Preconditioner(1, 1.01, K)
    with pytest.raises(ValueError):
        Preconditioner(0.57, 0.57, gradient_operator())  # unknown norm
    P = Preconditioner(0.57, 0.57, gradient_operator(), 1.75)
    assert P.product == pytest.approx(0.57 ** 2 * 1.75 ** 2)


def test_apply_M_examples():
    P = Preconditioner(1, 1, identity_operator())
    x = np.arange(4.0)
    z = apply_M(P, PrimalDualPoint(x, x))
    assert np.all(z.x == 0) and np.all(z.y == 0)
    P2 = Preconditioner(0.57, 0.57, gradient_operator(), 1.75)
    z = apply_M(P2, PrimalDualPoint(np.zeros((8, 8)), np.zeros((2, 8, 8))))
    assert z.norm() == 0
    with pytest.raises(ValueError):
        apply_M(P2, PrimalDualPoint(np.zeros((8, 8)), np.zeros((8, 8))))


def test_apply_M_linear():
    rng = np.random.default_rng(1)
    P = Preconditioner(0.3, 0.4, gradient_operator(), 2.83)
    w1, w2 = rand_pd(rng), rand_pd(rng)
    lhs = apply_M(P, 2.5 * w1 + w2)
    rhs = 2.5 * apply_M(P, w1) + apply_M(P, w2)
    assert (lhs - rhs).norm() < 1e-12 * (1 + lhs.norm())


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.05, 1.0))
def test_M_positive_semidefinite(seed, frac):
    # tau s ||K||^2 = frac <= 1 with the exact gradient norm on 8x8
    from hppp.checks import grad_norm_exact
    nk = grad_norm_exact((8, 8))
    tau = 0.7 / nk
    P = Preconditioner(tau, frac / (tau * nk ** 2), LinearOperator(imaging.grad, lambda p: -imaging.div(p), "grad", nk))
    w = rand_pd(np.random.default_rng(seed))
    assert inner_M(P, w, w) >= -1e-12 * w.dot(w)


def test_seminorm_toy():
    P = toy_preconditioner()
    assert seminorm_M(P, as_pd((0, 0))) == 0
    assert seminorm_M(P, as_pd((3, 3))) == 0
    assert seminorm_M(P, as_pd((5.0, 2.0))) == pytest.approx(3.0)
    assert seminorm_M(P, as_pd((-1.0, 2.5))) == pytest.approx(3.5)


def test_cp_step_identity_resolvents_zero_K():
    zero = LinearOperator(lambda x: 0 * x, lambda y: 0 * y, "0", 1.0)
    SP = SaddleProblem(lambda v, t: v, lambda v, s: v, zero)
    u = PrimalDualPoint(np.arange(3.0), np.arange(3.0) + 1)
    out = cp_step(SP, Preconditioner(1, 1, zero), u)
    np.testing.assert_array_equal(out.x, u.x)
    np.testing.assert_array_equal(out.y, u.y)


def test_cp_step_toy():
    SP, P = toy_saddle_problem(), toy_preconditioner()
    out = cp_step(SP, P, as_pd((0, 0)))
    assert (float(out.x), float(out.y)) == (0.0, -1.0)
    for xs in (1.0, 1.7, 4.0):
        fp = cp_step(SP, P, as_pd((xs, 0.0)))
        assert abs(float(fp.x) - xs) <= 1e-10 and abs(float(fp.y)) <= 1e-10


def test_cp_step_tv_objective_decreases():
    SP, P, psf, y = tv_deblur((32, 32))
    deg = Degraded(y, psf=psf)
    pre = get_preset("gauss16-cp")
    u = PrimalDualPoint(y, np.zeros((2,) + y.shape))
    objs = [tv_objective(pre, deg, u.x)]
    for _ in range(10):
        u = cp_step(SP, P, u)
        assert u.isfinite()
        objs.append(tv_objective(pre, deg, u.x))
    assert np.all(np.diff(objs) <= 1e-12)


def test_anchored_step_zero_mu_bitwise():
    SP, P, _, y = tv_deblur()
    rng = np.random.default_rng(4)
    u = PrimalDualPoint(rng.random(y.shape), 1e-3 * rng.standard_normal((2,) + y.shape))
    a = PrimalDualPoint(y, np.zeros_like(u.y))
    out, ref = cp_step_anchored(SP, P, u, a, 0.0), cp_step(SP, P, u)
    assert np.array_equal(out.x, ref.x) and np.array_equal(out.y, ref.y)
    with pytest.raises(ValueError):
        cp_step_anchored(SP, P, u, a, 1.0)


@pytest.mark.parametrize("problem", ["toy", "tv"])
def test_anchored_step_matches_generic_halpern(problem):
    if problem == "toy":
        SP, P = toy_saddle_problem(), toy_preconditioner()
        a, u0 = as_pd((12, 10)), as_pd((-6, 6))
    else:
        SP, P, _, y = tv_deblur()
        a = PrimalDualPoint(y, np.zeros((2,) + y.shape))
        u0 = PrimalDualPoint(np.zeros_like(y), np.zeros_like(a.y))
    mu = Schedule.inverse_shift(1, 2)
    u1 = u2 = u0
    for k in range(200):
        m = mu(k + 1)
        u1 = m * a + (1.0 - m) * cp_step(SP, P, u1)
        u2 = cp_step_anchored(SP, P, u2, a, m)
        assert np.max(np.abs(u1.x - u2.x)) <= 1e-12 and np.max(np.abs(u1.y - u2.y)) <= 1e-12


def test_anchored_toy_limit():
    SP, P = toy_saddle_problem(), toy_preconditioner()
    a = as_pd((12, 10))
    u, _ = hppp_iterate(None, a, as_pd((-6, 6)), Schedule.inverse_shift(1, 2), 1000,
                        step=lambda u, m: cp_step_anchored(SP, P, u, a, m))
    assert np.hypot(float(u.x) - 2, float(u.y)) < 0.05


def test_estimate_norm_examples():
    assert estimate_norm(identity_operator(), (5, 7)) == pytest.approx(1.0, abs=1e-8)
    assert estimate_norm(scalar_operator(2.0), (5, 7)) == pytest.approx(2.0, abs=1e-8)
    zero = LinearOperator(lambda x: 0 * x, lambda y: 0 * y)
    assert estimate_norm(zero, (4, 4)) == 0.0
    g = estimate_norm(gradient_operator(), (256, 256))
    assert 2.78 <= g <= np.sqrt(8)
    assert estimate_norm(gradient_operator(), (256, 256)) == g  # seeded


@pytest.mark.parametrize("shape", [(4, 4), (8, 8), (33, 17), (1, 9)])
def test_gradient_norm_below_sqrt8(shape):
    assert estimate_norm(gradient_operator(), shape, iters=500) <= np.sqrt(8) + 1e-6


def test_check_mfne():
    P = toy_preconditioner()
    sampler = lambda r: as_pd(5 * r.standard_normal(2))  # noqa: E731
    assert check_mfne(lambda u: u, P, sampler, 50) <= 0.0
    assert check_mfne(make_T(toy_saddle_problem(), P), P, sampler, 100) <= 1e-10
    SP, P, _, _ = tv_deblur()
    tv_sampler = lambda r: PrimalDualPoint(r.random((16, 16)), 1e-3 * r.standard_normal((2, 16, 16)))  # noqa: E731
    assert check_mfne(make_T(SP, P), P, tv_sampler, 100) <= 1e-8
