import sys

import numpy as np
import pytest

from hppp import imaging
from hppp.checks import rate_problem_64
from hppp.fixedpoint import DivergenceError, Schedule, rate_fit
from hppp.grared import (
    Denoiser, DenoiserError, GraredConfig, check_denoiser_assumptions, drs_oracle, external_denoiser,
    gaussian_denoiser, grared_hp3, grared_p3, pnp_admm, shrink_denoiser,
)
from hppp.operators import PrimalDualPoint
from hppp.prox import deblur_resolvent, inpaint_resolvent


def inpaint_problem(shape=(16, 16), seed=0):
    rng = np.random.default_rng(seed)
    clean = rng.random(shape)
    mask = (rng.random(shape) >= 0.5).astype(float)
    y = mask * (clean + 0.01 * rng.standard_normal(shape))
    return clean, mask, y


# -- denoisers ---------------------------------------------------------------

def test_shrink_reports():
    ident = check_denoiser_assumptions(shrink_denoiser(1.0))
    assert ident.homogeneity_err == 0 and ident.symmetry_err == 0 and ident.residual_norm == 0
    zero = check_denoiser_assumptions(shrink_denoiser(0.0))
    assert zero.residual_norm == pytest.approx(1.0, abs=1e-12) and zero.homogeneity_err == 0
    with pytest.raises(ValueError):
        shrink_denoiser(1.5)


def test_gaussian_report():
    rep = check_denoiser_assumptions(gaussian_denoiser(1.0), (32, 32))
    assert rep.residual_norm <= 1 + 1e-6
    assert rep.symmetry_err <= 1e-10
    assert rep.homogeneity_err <= 1e-10


def test_residual_definition_exact():
    D = gaussian_denoiser(0.7)
    x = np.random.default_rng(1).random((20, 24))
    assert np.array_equal(D.residual(x) + D(x), x) or np.max(np.abs(D.residual(x) + D(x) - x)) == 0


@pytest.mark.parametrize("D", [gaussian_denoiser(1.0), gaussian_denoiser(0.7), shrink_denoiser(0.3)])
def test_residual_nonexpansive(D):
    rng = np.random.default_rng(2)
    for _ in range(100):
        a, b = rng.standard_normal((2, 16, 16))
        assert np.linalg.norm(D.residual(a) - D.residual(b)) <= np.linalg.norm(a - b) + 1e-9


def test_external_denoiser_roundtrip():
    # a child process that echoes the PGM back acts as the identity (up to 8-bit quantization)
    D = external_denoiser([sys.executable, "-c", "import sys; sys.stdout.buffer.write(sys.stdin.buffer.read())"])
    x = np.random.default_rng(3).random((8, 8))
    np.testing.assert_array_equal(D(x), np.round(255 * x) / 255)


def test_external_denoiser_failure():
    D = external_denoiser([sys.executable, "-c", "import sys; sys.exit(3)"])
    with pytest.raises(DenoiserError):
        D(np.zeros((4, 4)))


# -- configuration -----------------------------------------------------------

def test_config_validation():
    with pytest.raises(ValueError):
        GraredConfig(10, 0.2, 5, Schedule.inverse_shift(1, 2), 10)
    with pytest.raises(ValueError):
        GraredConfig(1, 1, 1, Schedule.inverse_shift(1, 2), 0)
    cfg = GraredConfig(10, 0.1, 5, Schedule.inverse_shift(0.05, 2), 10)
    assert cfg.t == 5 and GraredConfig(10, 0.1, 5, 0.0, 10, prox_step="tau_lam").t == 50


# -- algorithms --------------------------------------------------------------

def test_hp3_identity_denoiser_is_proximal_point():
    clean, mask, y = inpaint_problem()
    prox_f = inpaint_resolvent(mask, y)
    x0 = np.random.default_rng(4).random(y.shape)
    cfg = GraredConfig(1.0, 1.0, 0.8, 0.0, 20, anchor=PrimalDualPoint(x0, np.zeros_like(x0)))
    x, yN, _ = grared_hp3(prox_f, shrink_denoiser(1.0), cfg, x0)
    ref = x0
    for _ in range(20):
        ref = prox_f(ref, 0.8)
    np.testing.assert_allclose(x, ref, rtol=0, atol=1e-14)
    assert np.all(yN == 0)


def test_hp3_mu_indexing():
    # with R = 0 the y-line is mu_{k+1} y_a; with y0 = 0 and a zero data step the x-line is mu_k x_a + ...
    xa = np.full((2, 2), 3.0)
    ya = np.full((2, 2), 5.0)
    cfg = GraredConfig(1.0, 1.0, 1.0, Schedule.inverse_shift(1, 2), 1, anchor=PrimalDualPoint(xa, ya))
    x, yN, _ = grared_hp3(lambda v, t: np.zeros_like(v), shrink_denoiser(1.0), cfg, np.zeros((2, 2)))
    np.testing.assert_allclose(x, 0.5 * 3.0)   # mu_0 = 1/2
    np.testing.assert_allclose(yN, 5.0 / 3.0)  # mu_1 = 1/3


def test_p3_zero_relaxation_is_stationary():
    clean, mask, y = inpaint_problem()
    x0 = np.random.default_rng(5).random(y.shape)
    y0 = np.random.default_rng(6).random(y.shape)
    x, yN, tr = grared_p3(inpaint_resolvent(mask, y), gaussian_denoiser(1.0), GraredConfig(1, 1, 1, 0.0, 5), x0, y0)
    assert np.array_equal(x, x0) and np.array_equal(yN, y0)
    assert np.all(tr.column("gap_norm") == 0)


def test_p3_rejects_out_of_range_relaxation():
    with pytest.raises(ValueError):
        grared_p3(lambda v, t: v, shrink_denoiser(0.5), GraredConfig(1, 1, 1, 2.5, 2), np.zeros((2, 2)))


def test_hp3_requires_anchor():
    with pytest.raises(ValueError):
        grared_hp3(lambda v, t: v, shrink_denoiser(0.5), GraredConfig(1, 1, 1, Schedule.inverse_shift(1, 2), 2),
                   np.zeros((2, 2)))


def test_drs_identity_denoiser_reduces_to_prox():
    clean, mask, y = inpaint_problem()
    prox_f = inpaint_resolvent(mask, y)
    w0 = np.random.default_rng(7).random(y.shape)
    w = drs_oracle(prox_f, shrink_denoiser(1.0), w0, 1)
    np.testing.assert_allclose(w, prox_f(w0, 1.0), atol=1e-15)


@pytest.mark.parametrize("seed", range(5))
def test_p3_matches_drs_and_admm(seed):
    clean, mask, y = inpaint_problem(seed=seed)
    prox_f = inpaint_resolvent(mask, y)
    D = gaussian_denoiser(1.0)
    rng = np.random.default_rng(100 + seed)
    x0, y0 = rng.random(y.shape), 0.1 * rng.standard_normal(y.shape)
    its, ws, vs = [], [], []
    grared_p3(prox_f, D, GraredConfig(1, 1, 1, 1.0, 50), x0, y0, iterates=its)
    drs_oracle(prox_f, D, x0 - y0, 50, iterates=ws)
    pnp_admm(prox_f, D, x0 - y0, 50, iterates=vs)
    assert len(its) == len(ws) == len(vs) == 51
    for (x, yy), w, v in zip(its, ws, vs):
        assert np.max(np.abs((x - yy) - w)) <= 1e-12
        assert np.max(np.abs(v - w)) <= 1e-12


def test_divergence_guard():
    bad = Denoiser(lambda x: x * np.inf, kind="custom")
    with pytest.raises(DivergenceError), np.errstate(invalid="ignore"):
        grared_p3(lambda v, t: v, bad, GraredConfig(1, 1, 1, 1.0, 3), np.ones((2, 2)), np.ones((2, 2)))


def test_hp3_deblur_improves_psnr_128():
    clean = imaging.load_bundled("camera")[64:192, 64:192]
    psf = imaging.make_psf("gaussian", sigma=1.6)
    y = imaging.add_wgn(imaging.convolve_psf(clean, psf), 0.01, seed=1)
    cfg = GraredConfig(1, 1, 20, Schedule.inverse_shift(1, 2), 400, anchor=PrimalDualPoint(y, np.zeros_like(y)))
    x, _, _ = grared_hp3(deblur_resolvent(psf, y), gaussian_denoiser(0.7), cfg, y)
    assert imaging.psnr(x, clean) >= imaging.psnr(y, clean) + 1.0
    cfg = GraredConfig(1, 1, 20, Schedule.constant(0.2), 400)
    x, _, _ = grared_p3(deblur_resolvent(psf, y), gaussian_denoiser(0.7), cfg, y)
    assert imaging.psnr(x, clean) >= imaging.psnr(y, clean) + 1.0


def test_hp3_inpaint_fp_residual_64():
    # the residual of the anchored iteration decays like mu_k, so reaching 1e-4 takes ~10^4 steps
    tr = rate_problem_64(seed=1, n_iters=12000, mu=Schedule.inverse_shift(0.05, 2))
    fp = tr.column("fp_residual")
    assert fp[-1] < 1e-4
    assert np.all(np.diff(fp[50:]) <= 0)
    g = tr.column("gap_norm")
    assert g[-1] < g[0] * 1e-3


def test_hp3_rate_min2k_and_deblur():
    slope, _ = rate_fit(rate_problem_64(seed=0), "gap_norm", 100, 1000)
    assert slope <= -0.8
    clean = imaging.load_bundled("moon")[:64, :64]
    psf = imaging.make_psf("gaussian", sigma=1.6)
    y = imaging.add_wgn(imaging.convolve_psf(clean, psf), 0.01, seed=2)
    cfg = GraredConfig(1, 1, 20, Schedule.min_two_over_k(), 1001, anchor=PrimalDualPoint(y, np.zeros_like(y)))
    _, _, tr = grared_hp3(deblur_resolvent(psf, y), gaussian_denoiser(0.7), cfg, y)
    slope, _ = rate_fit(tr, "gap_norm", 100, 1000)
    assert slope <= -0.8
