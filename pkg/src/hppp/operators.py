"""Primal-dual operator algebra for saddle problems ``min_x max_y <Kx, y> + lam f(x) - g*(y)``.

The preconditioner

    M = [[ I/tau, -K^*],
         [ -K,    I/s ]]

is positive semi-definite whenever ``tau * s * ||K||^2 <= 1`` and singular in
the degenerate case of equality. One Chambolle-Pock step evaluates the
preconditioned resolvent ``T = (M + A)^{-1} M``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import imaging

__all__ = [
    "PrimalDualPoint", "LinearOperator", "gradient_operator", "identity_operator",
    "scalar_operator", "Preconditioner", "SaddleProblem", "apply_M", "inner_M",
    "seminorm_M", "cp_step", "cp_step_anchored", "make_T", "estimate_norm", "check_mfne",
]

DEGENERACY_TOL = 1e-9


class PrimalDualPoint:
    """A pair ``(x, y)`` with vector-space arithmetic."""

    __slots__ = ("x", "y")

    def __init__(self, x, y):
        self.x = np.asarray(x, dtype=float)
        self.y = np.asarray(y, dtype=float)

    def __add__(self, other):
        return PrimalDualPoint(self.x + other.x, self.y + other.y)

    def __sub__(self, other):
        return PrimalDualPoint(self.x - other.x, self.y - other.y)

    def __mul__(self, c):
        return PrimalDualPoint(c * self.x, c * self.y)

    __rmul__ = __mul__

    def __neg__(self):
        return PrimalDualPoint(-self.x, -self.y)

    def dot(self, other) -> float:
        return float(np.vdot(self.x, other.x) + np.vdot(self.y, other.y))

    def norm(self) -> float:
        return float(np.sqrt(self.dot(self)))

    def isfinite(self) -> bool:
        return bool(np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.y)))

    def copy(self):
        return PrimalDualPoint(self.x.copy(), self.y.copy())

    def __repr__(self):
        return f"PrimalDualPoint(x={self.x!r}, y={self.y!r})"


@dataclass(frozen=True)
class LinearOperator:
    """A linear map with its adjoint. ``norm`` is filled in when known analytically."""

    apply: Callable
    adjoint: Callable
    name: str = "K"
    norm: Optional[float] = None

    def __call__(self, x):
        return self.apply(x)


def gradient_operator() -> LinearOperator:
    """``K = grad`` with ``K^* = -div``."""
    return LinearOperator(imaging.grad, lambda p: -imaging.div(p), "grad")


def identity_operator() -> LinearOperator:
    return LinearOperator(lambda x: x, lambda y: y, "identity", 1.0)


def scalar_operator(c: float) -> LinearOperator:
    return LinearOperator(lambda x: c * x, lambda y: c * y, f"{c}*I", abs(c))


@dataclass(frozen=True)
class Preconditioner:
    tau: float
    s: float
    K: LinearOperator
    norm_K: Optional[float] = None

    def __post_init__(self):
        if self.tau <= 0 or self.s <= 0:
            raise ValueError("tau and s must be positive")
        if self.norm_K is None:
            if self.K.norm is None:
                raise ValueError(f"norm of {self.K.name} unknown; pass norm_K (see estimate_norm)")
            object.__setattr__(self, "norm_K", float(self.K.norm))
        if self.norm_K <= 0:
            raise ValueError("norm_K must be positive")
        if self.product > 1 + DEGENERACY_TOL:
            raise ValueError(f"tau*s*||K||^2 = {self.product:.6g} > 1: M is not positive semi-definite")

    @property
    def product(self) -> float:
        return self.tau * self.s * self.norm_K ** 2

    @property
    def degenerate(self) -> bool:
        return abs(self.product - 1.0) <= DEGENERACY_TOL


@dataclass(frozen=True)
class SaddleProblem:
    """Ingredients of the saddle problem.

    ``prox_f(v, t)`` is the resolvent of ``f`` with step ``t``; it is called
    with ``t = tau * lam``. ``prox_gstar(v, s)`` is the resolvent of ``g*``.
    """

    prox_f: Callable
    prox_gstar: Callable
    K: LinearOperator
    lam: float = 1.0

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lam must be positive")


def apply_M(P: Preconditioner, w: PrimalDualPoint) -> PrimalDualPoint:
    Kx = P.K.apply(w.x)
    if np.shape(Kx) != np.shape(w.y):
        raise ValueError("point shapes are inconsistent with K")
    Kty = P.K.adjoint(w.y)
    return PrimalDualPoint(w.x / P.tau - Kty, -Kx + w.y / P.s)


def inner_M(P: Preconditioner, u: PrimalDualPoint, v: PrimalDualPoint) -> float:
    """Semi inner product ``<M u, v>``."""
    return apply_M(P, u).dot(v)


def seminorm_M(P: Preconditioner, w: PrimalDualPoint) -> float:
    """``sqrt(max(<Mw, w>, 0))``; tiny negative round-off is clamped."""
    q = inner_M(P, w, w)
    return float(np.sqrt(max(q, 0.0)))


def cp_step(SP: SaddleProblem, P: Preconditioner, u: PrimalDualPoint) -> PrimalDualPoint:
    """One Chambolle-Pock step, i.e. ``T u`` with ``T = (M + A)^{-1} M``."""
    K = P.K
    x_new = SP.prox_f(u.x - P.tau * K.adjoint(u.y), P.tau * SP.lam)
    y_new = SP.prox_gstar(u.y + P.s * K.apply(2.0 * x_new - u.x), P.s)
    return PrimalDualPoint(x_new, y_new)


def cp_step_anchored(SP: SaddleProblem, P: Preconditioner, u: PrimalDualPoint, a: PrimalDualPoint,
                     mu_next: float) -> PrimalDualPoint:
    """Anchored step written out componentwise.

    x+ = mu a_x + (1 - mu) prox_f(x - tau K^* y)
    y+ = mu a_y + (1 - mu) prox_g*(2 s K (x+ - mu a_x) / (1 - mu) - s K x + y)

    Algebraically ``mu a + (1 - mu) cp_step(u)``.
    """
    if not 0.0 <= mu_next < 1.0:
        raise ValueError("mu_next must lie in [0, 1)")
    K = P.K
    m = mu_next
    x_new = m * a.x + (1.0 - m) * SP.prox_f(u.x - P.tau * K.adjoint(u.y), P.tau * SP.lam)
    if m == 0.0:
        # keeps the zero-anchor case bit-identical to cp_step
        arg = u.y + P.s * K.apply(2.0 * x_new - u.x)
    else:
        arg = 2.0 * P.s * K.apply((x_new - m * a.x) / (1.0 - m)) - P.s * K.apply(u.x) + u.y
    y_new = m * a.y + (1.0 - m) * SP.prox_gstar(arg, P.s)
    return PrimalDualPoint(x_new, y_new)


def make_T(SP: SaddleProblem, P: Preconditioner) -> Callable:
    return lambda u: cp_step(SP, P, u)


def estimate_norm(K: LinearOperator, shape, iters: int = 200, tol: float = 1e-8, seed: int = 0) -> float:
    """Operator norm of ``K`` by power iteration on ``K^* K`` from a seeded random start."""
    if iters < 1:
        raise ValueError("iters must be >= 1")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(shape)
    nv = np.linalg.norm(v)
    v /= nv
    est = 0.0
    for _ in range(iters):
        w = K.adjoint(K.apply(v))
        rq = float(np.vdot(v, w))
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        v = w / nw
        new = np.sqrt(max(rq, 0.0))
        if abs(new - est) <= tol * max(new, 1e-300):
            est = new
            break
        est = new
    return float(est)


def check_mfne(T: Callable, P: Preconditioner, sampler: Callable, n_pairs: int = 100, seed: int = 0) -> float:
    """Largest violation of the M-firm-nonexpansiveness inequality over random pairs.

    ``sampler(rng)`` returns one random point. The returned value is
    ``max(||Tu - Tv||_M^2 + ||(u - Tu) - (v - Tv)||_M^2 - ||u - v||_M^2)``.
    """
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    rng = np.random.default_rng(seed)
    worst = -np.inf
    for _ in range(n_pairs):
        u, v = sampler(rng), sampler(rng)
        tu, tv = T(u), T(v)
        d_t = tu - tv
        d_r = (u - tu) - (v - tv)
        d = u - v
        lhs = inner_M(P, d_t, d_t) + inner_M(P, d_r, d_r)
        worst = max(worst, lhs - inner_M(P, d, d))
    return float(worst)
