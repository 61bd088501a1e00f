"""Closed-form resolvents used by the restoration solvers and the 1D toy problem.

Resolvent handles passed to the solvers have the signature ``prox(v, t)`` and
return ``(I + t df)^{-1}(v)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

from .imaging import Psf, psf_otf

__all__ = [
    "project_linf_ball", "DeblurData", "prox_deblur_fft", "deblur_resolvent",
    "InpaintData", "prox_inpaint", "inpaint_resolvent", "dual_ball_resolvent",
    "toy_prox_f", "toy_prox_gstar", "moreau_check",
]


def project_linf_ball(p_tilde, beta: float, variant: str = "standard"):
    """Pixelwise resolvent of the indicator of ``{p : max_ij |p_ij| <= beta}``.

    ``variant="standard"`` is the Euclidean projection ``beta p / max(beta, |p|)``.
    ``variant="unscaled"`` evaluates ``p / max(beta, |p|)``, which lacks the
    ``beta`` numerator; it agrees with the projection only for ``beta = 1``.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    p_tilde = np.asarray(p_tilde, dtype=float)
    mag = np.sqrt(p_tilde[0] ** 2 + p_tilde[1] ** 2)
    denom = np.maximum(beta, mag)
    if variant == "standard":
        return p_tilde * (beta / denom)
    if variant == "unscaled":
        return p_tilde / denom
    raise ValueError(f"unknown dual projection variant {variant!r}")


def dual_ball_resolvent(beta: float, variant: str = "standard"):
    """Resolvent handle for the TV dual indicator; the step size is irrelevant."""
    def prox(v, t=1.0):
        return project_linf_ball(v, beta, variant)
    return prox


@dataclass(frozen=True)
class DeblurData:
    kernel_fft: np.ndarray
    observed_fft: np.ndarray
    lam: float
    tau: float

    def __post_init__(self):
        if self.kernel_fft.shape != self.observed_fft.shape:
            raise ValueError("kernel and observation grids differ in shape")
        if self.lam < 0 or self.tau <= 0:
            raise ValueError("need lam >= 0 and tau > 0")


def prox_deblur_fft(D: DeblurData, x_tilde):
    """argmin_x ||x - x_tilde||^2 / (2 tau) + lam/2 ||k * x - y||^2, solved in Fourier space.

    The denominator uses ``|F(k)|^2``.
    """
    if x_tilde.shape != D.kernel_fft.shape:
        raise ValueError("shape mismatch between x_tilde and the blur kernel")
    tl = D.tau * D.lam
    num = tl * D.observed_fft * np.conj(D.kernel_fft) + sfft.fft2(x_tilde)
    den = tl * np.abs(D.kernel_fft) ** 2 + 1.0
    return np.real(sfft.ifft2(num / den))


def deblur_resolvent(psf: Psf, observed):
    """Resolvent handle ``prox(v, t)`` of ``f(x) = 1/2 ||k * x - y||^2``.

    The kernel and observation transforms are computed once.
    """
    observed = np.asarray(observed, dtype=float)
    kf = psf_otf(psf, observed.shape)
    yf = sfft.fft2(observed)

    def prox(v, t):
        return prox_deblur_fft(DeblurData(kf, yf, 1.0, t), v)

    prox.kernel_fft = kf
    return prox


@dataclass(frozen=True)
class InpaintData:
    mask: np.ndarray
    observed: np.ndarray
    weight: float
    tau: float

    def __post_init__(self):
        if self.mask.shape != self.observed.shape:
            raise ValueError("mask and observation differ in shape")
        if not np.all((self.mask == 0) | (self.mask == 1)):
            raise ValueError("mask entries must be 0 or 1")


def prox_inpaint(D: InpaintData, x_tilde):
    """Pointwise resolvent of ``w ||M . x - y||^2``: ``(2 t w M y + x_tilde) / (1 + 2 t w M)``."""
    c = 2.0 * D.tau * D.weight
    return (c * D.mask * D.observed + x_tilde) / (1.0 + c * D.mask)


def inpaint_resolvent(mask, observed):
    """Resolvent handle ``prox(v, t)`` of ``f(x) = ||M . x - y||^2``."""
    mask = np.asarray(mask, dtype=float)
    observed = np.asarray(observed, dtype=float)

    def prox(v, t):
        return prox_inpaint(InpaintData(mask, observed, 1.0, t), v)

    return prox


def toy_prox_f(x_tilde: float, tau: float) -> float:
    """Resolvent of ``f(x) = max(-x, 0)`` with step ``tau``."""
    if x_tilde >= 0:
        return x_tilde
    if x_tilde <= -tau:
        return x_tilde + tau
    return 0.0


def toy_prox_gstar(y_tilde: float, s: float) -> float:
    """Resolvent of ``g*(y) = y + indicator_[-1, 0](y)`` with step ``s``."""
    return min(max(y_tilde - s, -1.0), 0.0)


def moreau_check(prox_phi, prox_phi_star, x) -> float:
    """``||prox_phi(x) + prox_phi_star(x) - x||``; zero for a genuine conjugate pair."""
    r = np.asarray(prox_phi(x), dtype=float) + np.asarray(prox_phi_star(x), dtype=float) - np.asarray(x, dtype=float)
    return float(np.linalg.norm(np.ravel(r)))
