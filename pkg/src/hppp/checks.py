"""Property suites behind ``hppp check``.

Each suite returns a list of :class:`CheckResult`; a check passes when the
measured value satisfies its bound. The suites are deterministic given a
seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import imaging
from .fixedpoint import Schedule, rate_fit
from .grared import (
    GraredConfig, check_denoiser_assumptions, drs_oracle, gaussian_denoiser, grared_hp3, grared_p3,
    pnp_admm, shrink_denoiser,
)
from .operators import (
    LinearOperator, PrimalDualPoint, Preconditioner, SaddleProblem, check_mfne, cp_step, cp_step_anchored,
    gradient_operator, make_T,
)
from .prox import (
    deblur_resolvent, dual_ball_resolvent, inpaint_resolvent, project_linf_ball, prox_deblur_fft,
    DeblurData, toy_prox_f, toy_prox_gstar,
)
from .toy import ToyConfig, as_pd, toy_T, toy_preconditioner, toy_run

__all__ = ["CheckResult", "SUITES", "run_suite", "dense_operator", "dense_deblur_prox", "grad_norm_exact"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    bound: float
    upper: bool = True  # value <= bound when True, value >= bound otherwise

    @property
    def passed(self) -> bool:
        if not np.isfinite(self.value):
            return False
        return self.value <= self.bound if self.upper else self.value >= self.bound

    def line(self) -> str:
        rel = "<=" if self.upper else ">="
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.value:.3e} {rel} {self.bound:.1e}"


# -- dense references -------------------------------------------------------

def dense_operator(apply: Callable, in_shape) -> np.ndarray:
    """Matrix of a linear map, one column per basis image."""
    n = int(np.prod(in_shape))
    cols = []
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        cols.append(np.ravel(apply(e.reshape(in_shape))))
    return np.stack(cols, axis=1)


def grad_norm_exact(shape) -> float:
    """Spectral norm of the discrete gradient on ``shape`` from its dense matrix."""
    return float(np.linalg.norm(dense_operator(imaging.grad, shape), 2))


def dense_deblur_prox(psf, observed, x_tilde, t: float):
    """Solve ``(I + t A^T A) x = x_tilde + t A^T y`` with a dense periodic-convolution matrix."""
    shape = observed.shape
    A = dense_operator(lambda v: imaging.convolve_psf(v, psf, method="direct"), shape)
    n = A.shape[1]
    rhs = np.ravel(x_tilde) + t * A.T @ np.ravel(observed)
    return np.linalg.solve(np.eye(n) + t * A.T @ A, rhs).reshape(shape)


def _random_psf(rng, size=3):
    w = rng.random((size, size))
    return imaging.Psf("random", w / w.sum())


# -- suites -----------------------------------------------------------------

def suite_adjoint(seed: int = 0) -> list:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for shape in ((1, 7), (16, 16), (23, 31)):
        for _ in range(100):
            x = rng.standard_normal(shape)
            p = rng.standard_normal((2,) + shape)
            worst = max(worst, abs(float(np.vdot(imaging.grad(x), p) + np.vdot(x, imaging.div(p)))))
    worst_conv = 0.0
    for _ in range(20):
        psf = _random_psf(rng)
        x, z = rng.standard_normal((2, 12, 12))
        kf = imaging.psf_otf(psf, x.shape)
        at_z = np.real(np.fft.ifft2(np.conj(kf) * np.fft.fft2(z)))
        worst_conv = max(worst_conv, abs(float(np.vdot(imaging.convolve_psf(x, psf), z) - np.vdot(x, at_z))))
    return [CheckResult("adjoint <grad x, p> + <x, div p> = 0", worst, 1e-10),
            CheckResult("adjoint of periodic blur", worst_conv, 1e-10)]


def _nonexpansive_gap(op, sampler, rng, n=100) -> float:
    """Largest ``||op(a) - op(b)|| - ||a - b||``."""
    worst = -np.inf
    for _ in range(n):
        a, b = sampler(rng), sampler(rng)
        worst = max(worst, float(np.linalg.norm(np.ravel(op(a) - op(b))) - np.linalg.norm(np.ravel(a - b))))
    return worst


def suite_prox(seed: int = 0) -> list:
    rng = np.random.default_rng(seed)
    out = []
    # projection idempotence
    worst = 0.0
    for _ in range(100):
        p = 3 * rng.standard_normal((2, 8, 8))
        beta = float(rng.uniform(0.01, 2))
        q = project_linf_ball(p, beta)
        worst = max(worst, float(np.max(np.abs(project_linf_ball(q, beta) - q))))
    out.append(CheckResult("dual ball projection idempotent", worst, 1e-12))
    # FFT resolvent against a dense solve
    worst = 0.0
    for _ in range(20):
        psf = _random_psf(rng)
        y, xt = rng.standard_normal((2, 8, 8))
        t = float(rng.uniform(0.1, 10))
        fast = prox_deblur_fft(DeblurData(imaging.psf_otf(psf, y.shape), np.fft.fft2(y), 1.0, t), xt)
        worst = max(worst, float(np.max(np.abs(fast - dense_deblur_prox(psf, y, xt, t)))))
    out.append(CheckResult("FFT resolvent matches dense solve", worst, 1e-8))
    # nonexpansiveness of every resolvent
    img = lambda r: r.standard_normal((16, 16))  # noqa: E731
    psf = imaging.make_psf("gaussian", sigma=1.6)
    y = rng.random((16, 16))
    mask = imaging.make_mask("bernoulli", (16, 16), p=0.5, seed=seed)
    D = gaussian_denoiser(1.0)
    cases = [
        ("deblur", lambda v: deblur_resolvent(psf, y)(v, 0.7), img),
        ("inpaint", lambda v: inpaint_resolvent(mask, mask * y)(v, 0.7), img),
        ("dual ball", dual_ball_resolvent(0.3), lambda r: r.standard_normal((2, 16, 16))),
        ("toy f", lambda v: np.array(toy_prox_f(float(v), 1.0)), lambda r: np.array(3 * r.standard_normal())),
        ("toy g*", lambda v: np.array(toy_prox_gstar(float(v), 1.0)), lambda r: np.array(3 * r.standard_normal())),
        ("gaussian residual", D.residual, img),
    ]
    for name, op, sampler in cases:
        out.append(CheckResult(f"{name} resolvent nonexpansive", _nonexpansive_gap(op, sampler, rng), 1e-10))
    return out


def suite_mfne(seed: int = 0) -> list:
    out = []
    P = toy_preconditioner()
    toy = lambda u: as_pd(toy_T((float(u.x), float(u.y))))  # noqa: E731
    v = check_mfne(toy, P, lambda r: as_pd(5 * r.standard_normal(2)), 100, seed)
    out.append(CheckResult("M-FNE toy T", v, 1e-8))
    shape = (16, 16)
    rng = np.random.default_rng(seed)
    nk = grad_norm_exact(shape)
    K = gradient_operator()
    K = LinearOperator(K.apply, K.adjoint, K.name, nk)
    P = Preconditioner(1.0 / nk, 1.0 / nk, K)
    clean = rng.random(shape)
    psf = imaging.make_psf("gaussian", sigma=1.6)
    y = imaging.add_wgn(imaging.convolve_psf(clean, psf), 0.01, seed)
    SP = SaddleProblem(deblur_resolvent(psf, y), dual_ball_resolvent(5e-4), K, lam=2.0)
    sampler = lambda r: PrimalDualPoint(r.random(shape), 1e-3 * r.standard_normal((2,) + shape))  # noqa: E731
    v = check_mfne(make_T(SP, P), P, sampler, 100, seed)
    out.append(CheckResult("M-FNE TV-deblur T (16x16, degenerate M)", v, 1e-8))
    return out


def suite_denoiser(seed: int = 0) -> list:
    out = []
    for name, D in (("gaussian(1.0)", gaussian_denoiser(1.0)), ("gaussian(0.7)", gaussian_denoiser(0.7)),
                    ("shrink(0.5)", shrink_denoiser(0.5))):
        rep = check_denoiser_assumptions(D, (32, 32), 10, seed)
        out += [CheckResult(f"{name} homogeneity", rep.homogeneity_err, 1e-10),
                CheckResult(f"{name} symmetry", rep.symmetry_err, 1e-10),
                CheckResult(f"{name} residual norm", rep.residual_norm, 1 + 1e-6)]
    return out


def suite_drs_equiv(seed: int = 0, n_seeds: int = 5, n_iters: int = 50) -> list:
    worst_drs = worst_admm = worst_eq = 0.0
    shape = (16, 16)
    D = gaussian_denoiser(1.0)
    for j in range(n_seeds):
        rng = np.random.default_rng([seed, j])
        clean = rng.random(shape)
        mask = (rng.random(shape) >= 0.5).astype(float)
        y = mask * (clean + 0.01 * rng.standard_normal(shape))
        prox_f = inpaint_resolvent(mask, y)
        x0, y0 = rng.random(shape), 0.1 * rng.standard_normal(shape)
        its = []
        grared_p3(prox_f, D, GraredConfig(1.0, 1.0, 1.0, 1.0, n_iters), x0, y0, iterates=its)
        ws = []
        drs_oracle(prox_f, D, x0 - y0, n_iters, 1.0, iterates=ws)
        worst_drs = max(worst_drs, max(float(np.max(np.abs((x - yy) - w))) for (x, yy), w in zip(its, ws)))
        vs = []
        pnp_admm(prox_f, D, x0 - y0, n_iters, 1.0, iterates=vs)
        worst_admm = max(worst_admm, max(float(np.max(np.abs(a - b))) for a, b in zip(vs, ws)))
        # componentwise anchored step against the generic Halpern driver
        psf = imaging.make_psf("gaussian", sigma=1.6)
        yb = imaging.convolve_psf(clean, psf) + 0.01 * rng.standard_normal(shape)
        K = gradient_operator()
        P = Preconditioner(0.57, 0.57, K, 1.75)
        SP = SaddleProblem(deblur_resolvent(psf, yb), dual_ball_resolvent(5e-4), K, lam=2.0)
        a = PrimalDualPoint(yb, np.zeros((2,) + shape))
        u0 = PrimalDualPoint(x0, np.zeros((2,) + shape))
        u1 = u2 = u0
        mu = Schedule.inverse_shift(1, 2)
        for k in range(n_iters):
            m = mu(k + 1)
            u1 = m * a + (1.0 - m) * cp_step(SP, P, u1)
            u2 = cp_step_anchored(SP, P, u2, a, m)
            worst_eq = max(worst_eq, float(np.max(np.abs(u1.x - u2.x))), float(np.max(np.abs(u1.y - u2.y))))
    return [CheckResult("relaxed GraRED (tau = s = l = 1) vs Douglas-Rachford", worst_drs, 1e-12),
            CheckResult("PnP-ADMM vs Douglas-Rachford", worst_admm, 1e-12),
            CheckResult("componentwise anchored CP vs Halpern(CP)", worst_eq, 1e-12)]


def rate_problem_64(seed: int = 0, n_iters: int = 1001, mu=None):
    """64x64 Bernoulli inpainting crop solved by anchored GraRED; returns the trace."""
    clean = imaging.load_bundled("camera")[64:128, 96:160]
    mask = imaging.make_mask("bernoulli", clean.shape, p=0.5, seed=seed)
    y = mask * imaging.add_wgn(clean, 0.01, seed)
    mu = Schedule.min_two_over_k() if mu is None else mu
    cfg = GraredConfig(10.0, 0.1, 5.0, mu, n_iters, anchor=PrimalDualPoint(y, np.zeros_like(y)))
    _, _, trace = grared_hp3(inpaint_resolvent(mask, y), gaussian_denoiser(0.7), cfg, y)
    return trace


def suite_rate(seed: int = 0) -> list:
    run = toy_run(ToyConfig((-6.0, 6.0), 1001, mu=Schedule.min_two_over_k(), anchor=(12.0, 10.0)))
    gaps = run.gaps()  # gaps[k] = ||u^{k+1} - u^k||
    k = np.arange(100, 1001)
    slope_toy = float(np.polyfit(np.log(k), np.log(gaps[k]), 1)[0]) if np.all(gaps[k] > 0) else np.inf
    slope_img, _ = rate_fit(rate_problem_64(seed), "gap_norm", 100, 1000)
    return [CheckResult("rate slope, toy, min(2/k, 1)", slope_toy, -0.8),
            CheckResult("rate slope, 64x64 anchored GraRED inpainting", slope_img, -0.8)]


SUITES = {
    "adjoint": suite_adjoint,
    "mfne": suite_mfne,
    "prox": suite_prox,
    "denoiser": suite_denoiser,
    "drs-equiv": suite_drs_equiv,
    "rate": suite_rate,
}


def run_suite(name: str, seed: int = 0) -> list:
    try:
        fn = SUITES[name]
    except KeyError:
        raise KeyError(f"unknown suite {name!r}; known: {', '.join(SUITES)}") from None
    return fn(seed)
