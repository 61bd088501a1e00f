"""One-dimensional saddle problem with a known solution set.

Minimize ``f(x) + g(x)`` with ``f(x) = max(-x, 0)`` and ``g(x) = max(1 - x, 0)``,
so ``g*(y) = y + indicator_[-1, 0](y)`` and ``K = 1``. The saddle set is
``{(x, 0) : x >= 1}``. With ``tau = s = 1`` the preconditioner is
``[[1, -1], [-1, 1]]`` and ``||(x, y)||_M = |x - y|``, so the M-projection of an
anchor onto the saddle set has a closed form. This makes the problem a ground
truth for the limit selected by the anchored iteration.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .fixedpoint import ANCHOR, DivergenceError, Schedule
from .operators import PrimalDualPoint, Preconditioner, SaddleProblem, identity_operator
from .prox import toy_prox_f, toy_prox_gstar

__all__ = [
    "ToyPoint", "ToyConfig", "ToyRun", "toy_T", "toy_projection", "toy_run", "in_saddle_set",
    "toy_saddle_problem", "toy_preconditioner", "toy_inner_M", "as_pd", "write_trajectory",
]


class ToyPoint(NamedTuple):
    x: float
    y: float


def toy_T(u, tau: float = 1.0, s: float = 1.0) -> ToyPoint:
    """One primal-dual step on the toy problem."""
    if tau * s > 1 + 1e-9:
        raise ValueError("need tau * s <= 1")
    x, y = u
    xp = toy_prox_f(x - tau * y, tau)
    return ToyPoint(xp, toy_prox_gstar(y + s * (2.0 * xp - x), s))


def toy_projection(a) -> ToyPoint:
    """M-projection of ``a`` onto the saddle set: the point of ``{x >= 1, y = 0}`` on the line ``x - y = x_a - y_a``."""
    d = a[0] - a[1]
    return ToyPoint(1.0, 0.0) if d - 1.0 <= 0 else ToyPoint(float(d), 0.0)


def in_saddle_set(u, tol: float = 0.0) -> bool:
    return u[0] >= 1.0 - tol and abs(u[1]) <= tol


def toy_inner_M(u, v) -> float:
    """``<u, v>_M`` for ``M = [[1, -1], [-1, 1]]``."""
    return (u[0] - u[1]) * (v[0] - v[1])


@dataclass(frozen=True)
class ToyConfig:
    init: ToyPoint
    n_iters: int
    mu: Schedule | None = None
    anchor: ToyPoint | None = None
    relax: Schedule | None = None
    tau: float = 1.0
    s: float = 1.0

    def __post_init__(self):
        if self.n_iters < 1:
            raise ValueError("n_iters must be >= 1")
        for name in ("init", "anchor"):
            u = getattr(self, name)
            if u is not None and not (math.isfinite(u[0]) and math.isfinite(u[1]) and math.isfinite(u[0] - u[1])):
                raise ValueError(f"{name} must be finite, with a finite difference x - y")


@dataclass
class ToyRun:
    trajectory: np.ndarray  # (n_iters + 1, 2), row k is u^k
    limit_claim: ToyPoint
    fp_residual: np.ndarray  # ||T u^k - u^k|| for k < n_iters

    @property
    def final(self) -> ToyPoint:
        return ToyPoint(*map(float, self.trajectory[-1]))

    def gaps(self) -> np.ndarray:
        return np.linalg.norm(np.diff(self.trajectory, axis=0), axis=1)


def toy_run(cfg: ToyConfig, algo: str = "hppp") -> ToyRun:
    """Run the anchored (``"hppp"``) or relaxed (``"ppp"``) iteration.

    Plain-float loop so that long runs stay cheap; it performs the same
    arithmetic as :func:`hppp.fixedpoint.hppp_iterate` applied to :func:`toy_T`.
    For ``hppp`` the limit claim is the closed-form projection of the anchor;
    for ``ppp`` no closed form exists and the final iterate is reported.
    """
    n = cfg.n_iters
    traj = np.empty((n + 1, 2))
    res = np.empty(n)
    x, y = map(float, cfg.init)
    traj[0] = x, y
    if algo == "hppp":
        if cfg.anchor is None or cfg.mu is None:
            raise ValueError("hppp needs an anchor and an anchor schedule")
        if cfg.mu.role != ANCHOR:
            raise ValueError("mu must be an anchor-coefficient schedule")
        ax, ay = map(float, cfg.anchor)
        for k in range(n):
            tx, ty = toy_T((x, y), cfg.tau, cfg.s)
            res[k] = math.hypot(tx - x, ty - y)
            m = cfg.mu(k + 1)
            x, y = m * ax + (1.0 - m) * tx, m * ay + (1.0 - m) * ty
            if not (math.isfinite(x) and math.isfinite(y)):
                raise DivergenceError(k)
            traj[k + 1] = x, y
        claim = toy_projection(cfg.anchor)
    elif algo == "ppp":
        if cfg.relax is None:
            raise ValueError("ppp needs a relaxation schedule")
        for k in range(n):
            tx, ty = toy_T((x, y), cfg.tau, cfg.s)
            res[k] = math.hypot(tx - x, ty - y)
            lam = cfg.relax(k)
            x, y = (1.0 - lam) * x + lam * tx, (1.0 - lam) * y + lam * ty
            if not (math.isfinite(x) and math.isfinite(y)):
                raise DivergenceError(k)
            traj[k + 1] = x, y
        claim = ToyPoint(x, y)
    else:
        raise ValueError(f"unknown algorithm {algo!r}")
    return ToyRun(traj, claim, res)


def toy_saddle_problem() -> SaddleProblem:
    """The toy problem in the generic :class:`SaddleProblem` form (0-d arrays)."""
    return SaddleProblem(
        prox_f=lambda v, t: np.asarray(toy_prox_f(float(v), t)),
        prox_gstar=lambda v, s: np.asarray(toy_prox_gstar(float(v), s)),
        K=identity_operator(),
    )


def toy_preconditioner(tau: float = 1.0, s: float = 1.0) -> Preconditioner:
    return Preconditioner(tau, s, identity_operator())


def as_pd(u) -> PrimalDualPoint:
    return PrimalDualPoint(np.asarray(float(u[0])), np.asarray(float(u[1])))


def write_trajectory(path, trajectory) -> None:
    """CSV with header ``iter,x,y``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("iter", "x", "y"))
        for k, (x, y) in enumerate(trajectory):
            w.writerow((k, repr(float(x)), repr(float(y))))
