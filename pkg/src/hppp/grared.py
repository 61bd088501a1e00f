"""Denoiser-driven primal-dual algorithms (GraRED).

With ``K = I`` and a regularizer whose proximal map is a denoiser ``D``, the
dual resolvent is the denoising residual ``R = I - D`` (Moreau decomposition).
This holds when ``D`` is 1-homogeneous with a symmetric Jacobian and ``R`` is
nonexpansive; :func:`check_denoiser_assumptions` measures all three.
"""

from __future__ import annotations

import subprocess
import time
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy import fft as sfft

from .fixedpoint import ANCHOR, RELAXATION, DivergenceError, RunTrace, Schedule, TraceRow
from .imaging import decode_pgm, encode_pgm, make_psf, psf_otf
from .operators import LinearOperator, PrimalDualPoint, estimate_norm

__all__ = [
    "DenoiserError", "Denoiser", "gaussian_denoiser", "shrink_denoiser", "external_denoiser",
    "GraredConfig", "grared_hp3", "grared_p3", "drs_oracle", "pnp_admm",
    "DenoiserReport", "check_denoiser_assumptions",
]


class DenoiserError(RuntimeError):
    pass


@dataclass(frozen=True)
class Denoiser:
    """A denoiser ``D_sigma``; calling it denoises, :meth:`residual` gives ``x - D(x)``."""

    apply: Callable
    sigma: float = 0.0
    kind: str = "custom"
    params: dict = field(default_factory=dict)

    def __call__(self, x):
        return self.apply(x)

    def residual(self, x):
        return x - self.apply(x)


def _residual_norm(D: Denoiser, shape, iters: int = 200) -> float:
    R = LinearOperator(D.residual, D.residual, "residual")
    return estimate_norm(R, shape, iters=iters, tol=1e-12)


def gaussian_denoiser(sigma_psf: float = 1.0, sigma: float = 0.0, *, probe_shape=(32, 32),
                      radius: Optional[int] = None) -> Denoiser:
    """Periodic Gaussian smoothing.

    Linear, 1-homogeneous and symmetric. Its transfer function lies in
    (0, 1], so the residual is nonexpansive; this is confirmed on
    ``probe_shape`` when the denoiser is built.
    """
    psf = make_psf("gaussian", sigma=sigma_psf, radius=radius)
    cache = {}

    def apply(x):
        otf = cache.get(x.shape)
        if otf is None:
            otf = cache[x.shape] = np.real(psf_otf(psf, x.shape))
        return np.real(sfft.ifft2(sfft.fft2(x) * otf))

    D = Denoiser(apply, sigma, "gaussian", {"sigma_psf": sigma_psf})
    if probe_shape is not None:
        rn = _residual_norm(D, probe_shape)
        if rn > 1 + 1e-6:
            raise ValueError(f"residual norm {rn:.8f} exceeds 1; use a wider truncation radius")
    return D


def shrink_denoiser(alpha: float) -> Denoiser:
    """``D(x) = alpha x`` with ``alpha`` in [0, 1]."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    return Denoiser(lambda x: alpha * x, 0.0, "shrink", {"alpha": alpha})


def external_denoiser(command, sigma: float = 0.0, timeout: Optional[float] = None) -> Denoiser:
    """Denoiser run as a subprocess: PGM on stdin, PGM on stdout, one image per call.

    Images are quantized to 8 bits on the way out. No claim is made that an
    external denoiser satisfies the assumptions above.
    """
    def apply(x):
        proc = subprocess.run(command, input=encode_pgm(x), capture_output=True,
                              shell=isinstance(command, str), timeout=timeout)
        if proc.returncode != 0:
            raise DenoiserError(f"denoiser exited with status {proc.returncode}: "
                                f"{proc.stderr.decode(errors='replace').strip()}")
        try:
            out = decode_pgm(proc.stdout)
        except Exception as exc:
            raise DenoiserError(f"could not decode denoiser output: {exc}") from exc
        if out.shape != x.shape:
            raise DenoiserError(f"denoiser returned shape {out.shape}, expected {x.shape}")
        return out

    return Denoiser(apply, sigma, "external", {"command": command})


@dataclass(frozen=True)
class GraredConfig:
    """Parameters shared by both GraRED drivers.

    ``schedule`` is the anchor coefficient for :func:`grared_hp3` and the
    relaxation for :func:`grared_p3`. ``prox_step`` selects the step handed to
    the data resolvent: ``"lam"`` (default) calls ``prox_f(v, lam)``, exactly
    ``prox_{lam f}``; ``"tau_lam"`` calls ``prox_f(v, tau * lam)``. The two
    agree when ``tau = 1``.
    """

    tau: float
    s: float
    lam: float
    schedule: Schedule | float
    n_iters: int
    anchor: Optional[PrimalDualPoint] = None
    prox_step: str = "lam"

    def __post_init__(self):
        if self.tau <= 0 or self.s <= 0 or self.lam <= 0:
            raise ValueError("tau, s and lam must be positive")
        if self.tau * self.s > 1 + 1e-9:
            raise ValueError("need tau * s <= 1")
        if self.n_iters < 1:
            raise ValueError("n_iters must be >= 1")
        if self.prox_step not in ("lam", "tau_lam"):
            raise ValueError("prox_step must be 'lam' or 'tau_lam'")

    @property
    def t(self) -> float:
        return self.lam if self.prox_step == "lam" else self.tau * self.lam

    def seminorm(self, dx, dy) -> float:
        """``||(dx, dy)||_M`` for ``M = [[I/tau, -I], [-I, I/s]]``."""
        q = np.vdot(dx, dx) / self.tau - 2.0 * np.vdot(dx, dy) + np.vdot(dy, dy) / self.s
        return float(np.sqrt(max(q, 0.0)))


def _row(cfg, k, x, y, xn, yn, d, v, psnr, t0):
    dx, dy = xn - x, yn - y
    return TraceRow(
        iter=k,
        gap_norm=float(np.sqrt(np.vdot(dx, dx) + np.vdot(dy, dy))),
        gap_seminorm=cfg.seminorm(dx, dy),
        fp_residual=float(np.sqrt(np.sum((d - x) ** 2) + np.sum((v - y) ** 2))),
        psnr=None if psnr is None else float(psnr(xn)),
        elapsed_ms=(time.perf_counter() - t0) * 1e3,
    )


def grared_hp3(prox_f: Callable, D: Denoiser, cfg: GraredConfig, x0, y0=None, *,
               psnr: Optional[Callable] = None, stride: int = 1):
    """Anchored GraRED iteration. For ``k = 0, ..., N-1``::

        d = prox_{lam f}(x - tau y)
        x = mu_k x_a + (1 - mu_k) d
        v = R(s (2 d - x_old) + y)
        y = mu_{k+1} y_a + (1 - mu_{k+1}) v

    Note the x-line uses ``mu_k`` and the y-line ``mu_{k+1}``. A plain float
    schedule is used as a constant coefficient.

    Returns ``(x_N, y_N, trace)``. The trace's ``fp_residual`` is the distance
    from ``(x, y)`` to its un-anchored update ``(d, v)``.
    """
    mu = cfg.schedule
    if isinstance(mu, (int, float)):
        mu_const = float(mu)
        mu = lambda k: mu_const  # noqa: E731
    elif mu.role != ANCHOR:
        raise ValueError("grared_hp3 needs an anchor-coefficient schedule")
    if cfg.anchor is None:
        raise ValueError("grared_hp3 needs an anchor")
    x = np.asarray(x0, dtype=float)
    y = np.zeros_like(x) if y0 is None else np.asarray(y0, dtype=float)
    xa, ya = cfg.anchor.x, cfg.anchor.y
    s, t = cfg.s, cfg.t
    trace, t0 = RunTrace(), time.perf_counter()
    for k in range(cfg.n_iters):
        d = prox_f(x - cfg.tau * y, t)
        mk, mk1 = mu(k), mu(k + 1)
        xn = mk * xa + (1.0 - mk) * d
        v = D.residual(s * (2.0 * d - x) + y)
        yn = mk1 * ya + (1.0 - mk1) * v
        if not (np.all(np.isfinite(xn)) and np.all(np.isfinite(yn))):
            raise DivergenceError(k)
        if k % stride == 0 or k == cfg.n_iters - 1:
            trace.append(_row(cfg, k, x, y, xn, yn, d, v, psnr, t0))
        x, y = xn, yn
    return x, y, trace


def grared_p3(prox_f: Callable, D: Denoiser, cfg: GraredConfig, x0, y0=None, *,
              psnr: Optional[Callable] = None, stride: int = 1, iterates: Optional[list] = None):
    """Relaxed GraRED iteration. For ``k = 0, ..., N-1``::

        d = prox_{lam f}(x - tau y)
        x = l_k d + (1 - l_k) x
        y = l_k R(y + s (2 d - x_old)) + (1 - l_k) y

    ``l_k`` may be anywhere in [0, 2]; pass a plain float as the schedule for
    values a :class:`Schedule` rejects, such as 0 or 2. If ``iterates`` is a list, each
    ``(x_k, y_k)`` is appended to it (including ``k = 0``).
    """
    relax = cfg.schedule
    if isinstance(relax, (int, float)):
        lk_const = float(relax)
        relax = lambda k: lk_const  # noqa: E731
    elif relax.role != RELAXATION:
        raise ValueError("grared_p3 needs a relaxation schedule")
    x = np.asarray(x0, dtype=float)
    y = np.zeros_like(x) if y0 is None else np.asarray(y0, dtype=float)
    s, t = cfg.s, cfg.t
    trace, t0 = RunTrace(), time.perf_counter()
    if iterates is not None:
        iterates.append((x, y))
    for k in range(cfg.n_iters):
        lk = relax(k)
        if not 0.0 <= lk <= 2.0:
            raise ValueError(f"relaxation {lk} outside [0, 2]")
        d = prox_f(x - cfg.tau * y, t)
        v = D.residual(y + s * (2.0 * d - x))
        xn = lk * d + (1.0 - lk) * x
        yn = lk * v + (1.0 - lk) * y
        if not (np.all(np.isfinite(xn)) and np.all(np.isfinite(yn))):
            raise DivergenceError(k)
        if k % stride == 0 or k == cfg.n_iters - 1:
            trace.append(_row(cfg, k, x, y, xn, yn, d, v, psnr, t0))
        x, y = xn, yn
        if iterates is not None:
            iterates.append((x, y))
    return x, y, trace


def drs_oracle(prox_f: Callable, D: Denoiser, w0, n_iters: int, lam: float = 1.0, *,
               iterates: Optional[list] = None):
    """Douglas-Rachford form ``w <- w + D(2 prox_{lam f}(w) - w) - prox_{lam f}(w)``.

    Independent reference for :func:`grared_p3` with ``tau = s = l_k = 1``
    under ``w = x - y``.
    """
    w = np.asarray(w0, dtype=float)
    if iterates is not None:
        iterates.append(w)
    for k in range(n_iters):
        p = prox_f(w, lam)
        w = w + D(2.0 * p - w) - p
        if not np.all(np.isfinite(w)):
            raise DivergenceError(k)
        if iterates is not None:
            iterates.append(w)
    return w


def pnp_admm(prox_f: Callable, D: Denoiser, w0, n_iters: int, lam: float = 1.0, *,
             iterates: Optional[list] = None):
    """Plug-and-play ADMM in ``(z, v, u)`` form, started so that ``v + u = w0``.

    Appends ``v_k + u_k`` to ``iterates`` when given; returns ``(v, u)``.
    """
    w0 = np.asarray(w0, dtype=float)
    v = prox_f(w0, lam)
    u = w0 - v
    if iterates is not None:
        iterates.append(v + u)
    for k in range(n_iters):
        z = D(v - u)
        v = prox_f(z + u, lam)
        u = u + z - v
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(u))):
            raise DivergenceError(k)
        if iterates is not None:
            iterates.append(v + u)
    return v, u


class DenoiserReport(NamedTuple):
    homogeneity_err: float
    symmetry_err: float
    residual_norm: float


def check_denoiser_assumptions(D: Denoiser, shape=(32, 32), n_samples: int = 10, seed: int = 0) -> DenoiserReport:
    """Measure 1-homogeneity, Jacobian symmetry and the residual's Lipschitz constant.

    The symmetry probe ``|<R x, z> - <x, R z>|`` is a valid certificate only
    for linear denoisers.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    hom = sym = 0.0
    for _ in range(n_samples):
        x = rng.random(shape)
        z = rng.random(shape)
        Dx = D(x)
        for c in (0.5, 2.0, 10.0):
            hom = max(hom, float(np.linalg.norm(D(c * x) - c * Dx)))
        sym = max(sym, abs(float(np.vdot(D.residual(x), z) - np.vdot(x, D.residual(z)))))
    return DenoiserReport(hom, sym, _residual_norm(D, shape))
