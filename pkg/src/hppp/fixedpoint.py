"""Generic fixed-point drivers: relaxed (Krasnosel'skii-Mann) and anchored (Halpern).

Both drivers are generic over the map ``T`` and the point type. A point only
needs to support ``+``, ``-`` and multiplication by a Python float; numpy
arrays and :class:`hppp.operators.PrimalDualPoint` both qualify.
"""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "DivergenceError",
    "RateFitError",
    "Schedule",
    "TraceRow",
    "RunTrace",
    "ppp_iterate",
    "hppp_iterate",
    "rate_fit",
    "point_norm",
    "is_finite_point",
]

ANCHOR = "anchor"
RELAXATION = "relaxation"

TRACE_FIELDS = ("iter", "gap_norm", "gap_seminorm", "fp_residual", "objective", "psnr", "elapsed_ms")


class DivergenceError(FloatingPointError):
    """Raised when an iterate contains a non-finite value."""

    def __init__(self, iteration: int, message: str = ""):
        self.iteration = iteration
        super().__init__(message or f"non-finite value produced at iteration {iteration}")


class RateFitError(ValueError):
    pass


@dataclass(frozen=True)
class Schedule:
    """Step-size sequence indexed by the iteration counter ``k >= 0``.

    Families
    --------
    ``inv-shift``  ``c / (k + k0)`` with ``0 < c <= k0``
    ``inv-pow``    ``1 / (k + 1)**alpha`` with ``alpha`` in (0, 1]
    ``min2k``      ``min(2/k, 1)`` and 1 at ``k = 0``
    ``const``      ``v`` in (0, 2); relaxation role only

    The anchor families are non-summable, vanish, and have
    ``|mu_{k+1} - mu_k| / mu_k -> 0``; this is a property of the closed family,
    so only the parameters are checked here.
    """

    family: str
    params: tuple = ()
    role: str = ANCHOR

    def __post_init__(self):
        if self.role not in (ANCHOR, RELAXATION):
            raise ValueError(f"unknown schedule role {self.role!r}")
        fam, p = self.family, self.params
        if fam == "inv-shift":
            c, k0 = p
            if not (k0 >= 1 and int(k0) == k0):
                raise ValueError("inv-shift needs an integer k0 >= 1")
            if not 0 < c <= k0:
                raise ValueError("inv-shift needs 0 < c <= k0 so that mu_k lies in (0, 1]")
        elif fam == "inv-pow":
            (alpha,) = p
            if not 0 < alpha <= 1:
                raise ValueError("inv-pow needs alpha in (0, 1]")
        elif fam == "min2k":
            if p:
                raise ValueError("min2k takes no parameters")
        elif fam == "const":
            (v,) = p
            if self.role != RELAXATION:
                raise ValueError("a constant schedule is only valid as a relaxation coefficient")
            if not 0 < v < 2:
                raise ValueError("relaxation coefficient must lie in (0, 2)")
        else:
            raise ValueError(f"unknown schedule family {fam!r}")

    # constructors -----------------------------------------------------
    @classmethod
    def inverse_shift(cls, c: float = 1.0, k0: int = 2) -> "Schedule":
        return cls("inv-shift", (float(c), int(k0)))

    @classmethod
    def inverse_power(cls, alpha: float = 1.0) -> "Schedule":
        return cls("inv-pow", (float(alpha),))

    @classmethod
    def min_two_over_k(cls) -> "Schedule":
        return cls("min2k")

    @classmethod
    def constant(cls, v: float) -> "Schedule":
        return cls("const", (float(v),), role=RELAXATION)

    @classmethod
    def parse(cls, text: str, role: str = ANCHOR) -> "Schedule":
        """Parse ``inv-shift:<c>:<k0>``, ``inv-pow:<alpha>``, ``min2k`` or ``const:<v>``."""
        name, *args = text.strip().split(":")
        try:
            if name == "inv-shift" and len(args) == 2:
                return cls("inv-shift", (float(args[0]), int(args[1])), role)
            if name == "inv-pow" and len(args) == 1:
                return cls("inv-pow", (float(args[0]),), role)
            if name == "min2k" and not args:
                return cls("min2k", (), role)
            if name == "const" and len(args) == 1:
                return cls("const", (float(args[0]),), role)
        except ValueError as exc:
            raise ValueError(f"bad schedule {text!r}: {exc}") from None
        raise ValueError(f"bad schedule {text!r}")

    def __str__(self) -> str:
        if not self.params:
            return self.family
        return ":".join([self.family, *(repr(v) for v in self.params)])

    def __call__(self, k: int) -> float:
        fam, p = self.family, self.params
        if fam == "inv-shift":
            return p[0] / (k + p[1])
        if fam == "inv-pow":
            return 1.0 / (k + 1) ** p[0]
        if fam == "min2k":
            return 1.0 if k == 0 else min(2.0 / k, 1.0)
        return p[0]


@dataclass
class TraceRow:
    iter: int
    gap_norm: float
    gap_seminorm: Optional[float]
    fp_residual: float
    objective: Optional[float] = None
    psnr: Optional[float] = None
    elapsed_ms: Optional[float] = None


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    # repr gives the shortest string that round-trips
    return repr(v)


@dataclass
class RunTrace:
    rows: list = field(default_factory=list)

    def append(self, row: TraceRow) -> None:
        if self.rows and row.iter <= self.rows[-1].iter:
            raise ValueError("trace iterations must be strictly increasing")
        self.rows.append(row)

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        return np.array([np.nan if getattr(r, name) is None else getattr(r, name) for r in self.rows],
                        dtype=float)

    @property
    def iters(self) -> np.ndarray:
        return np.array([r.iter for r in self.rows], dtype=int)

    def to_csv(self, path=None, timing: bool = True) -> str:
        """Serialize as CSV; write to ``path`` when given and return the text.

        With ``timing=False`` the ``elapsed_ms`` column is left empty so the
        output is byte-reproducible.
        """
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_FIELDS)
        for r in self.rows:
            vals = [getattr(r, f) for f in TRACE_FIELDS]
            if not timing:
                vals[-1] = None
            w.writerow([_fmt(v) for v in vals])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, path) -> "RunTrace":
        trace = cls()
        with open(path, newline="") as fh:
            for rec in csv.DictReader(fh):
                vals = {k: (None if rec[k] == "" else float(rec[k])) for k in TRACE_FIELDS[1:]}
                trace.append(TraceRow(iter=int(rec["iter"]), **vals))
        return trace


def point_norm(u) -> float:
    if hasattr(u, "norm"):
        return float(u.norm())
    return float(np.linalg.norm(np.ravel(u)))


def is_finite_point(u) -> bool:
    if hasattr(u, "isfinite"):
        return bool(u.isfinite())
    return bool(np.all(np.isfinite(u)))


class _Recorder:
    def __init__(self, seminorm, objective, psnr, stride):
        if stride < 1:
            raise ValueError("stride must be >= 1")
        self.seminorm = seminorm
        self.objective = objective
        self.psnr = psnr
        self.stride = stride
        self.trace = RunTrace()
        self.t0 = time.perf_counter()

    def record(self, k, u_new, u_old, tu, force=False):
        if not force and k % self.stride:
            return
        d = u_new - u_old
        self.trace.append(TraceRow(
            iter=k,
            gap_norm=point_norm(d),
            gap_seminorm=None if self.seminorm is None else float(self.seminorm(d)),
            fp_residual=point_norm(tu - u_old),
            objective=None if self.objective is None else float(self.objective(u_new)),
            psnr=None if self.psnr is None else float(self.psnr(u_new)),
            elapsed_ms=(time.perf_counter() - self.t0) * 1e3,
        ))


def ppp_iterate(T: Callable, u0, relax: Schedule, n_iters: int, seminorm: Optional[Callable] = None, *,
                objective=None, psnr=None, stride: int = 1, tol: Optional[float] = None):
    """Relaxed fixed-point iteration ``u <- (1 - lam_k) u + lam_k T(u)``.

    Parameters
    ----------
    T : callable
        The fixed-point map.
    u0 : point
        Initial point.
    relax : Schedule
        Relaxation coefficients ``lam_k``, each in (0, 2).
    n_iters : int
        Number of iterations (the primary stopping rule).
    seminorm : callable, optional
        If given, ``seminorm(u_{k+1} - u_k)`` is recorded in the trace.
    objective, psnr : callable, optional
        Evaluated on each recorded iterate.
    stride : int
        Record every ``stride``-th iteration (the last one is always kept).
    tol : float, optional
        Stop early once ``||T u_k - u_k|| < tol``. Off by default.

    Returns
    -------
    u : point
        The final iterate.
    trace : RunTrace
    """
    if n_iters < 1:
        raise ValueError("n_iters must be >= 1")
    rec = _Recorder(seminorm, objective, psnr, stride)
    u = u0
    for k in range(n_iters):
        lam = relax(k)
        if not 0 < lam < 2:
            raise ValueError(f"relaxation coefficient {lam} at iteration {k} outside (0, 2)")
        tu = T(u)
        u_new = (1.0 - lam) * u + lam * tu
        if not is_finite_point(u_new):
            raise DivergenceError(k)
        last = k == n_iters - 1
        stop = tol is not None and point_norm(tu - u) < tol
        rec.record(k, u_new, u, tu, force=last or stop)
        u = u_new
        if stop:
            break
    return u, rec.trace


def hppp_iterate(T: Optional[Callable], anchor, u0, mu: Schedule, n_iters: int,
                 seminorm: Optional[Callable] = None, *, objective=None, psnr=None, stride: int = 1,
                 tol: Optional[float] = None, step: Optional[Callable] = None):
    """Halpern iteration ``u_{k+1} = mu_{k+1} a + (1 - mu_{k+1}) T(u_k)``.

    The anchor coefficient consumed at step ``k`` is ``mu(k + 1)``. Arguments
    otherwise mirror :func:`ppp_iterate`.

    ``step(u, m)``, when given, computes the whole anchored update in one call
    (for instance a componentwise form that never materializes ``T(u)``) and
    ``T`` may be None. ``T(u_k)`` is then recovered as
    ``(u_{k+1} - m a) / (1 - m)`` for the trace, so ``m`` must stay below 1.
    """
    if T is None and step is None:
        raise ValueError("need T or step")
    if n_iters < 1:
        raise ValueError("n_iters must be >= 1")
    if mu.role != ANCHOR:
        raise ValueError("hppp_iterate needs an anchor-coefficient schedule")
    rec = _Recorder(seminorm, objective, psnr, stride)
    u = u0
    for k in range(n_iters):
        m = mu(k + 1)
        if step is None:
            tu = T(u)
            u_new = m * anchor + (1.0 - m) * tu
        else:
            if m >= 1.0:
                raise ValueError(f"anchor coefficient {m} at iteration {k} must be < 1 with an explicit step")
            u_new = step(u, m)
            tu = (u_new - m * anchor) * (1.0 / (1.0 - m))
        if not is_finite_point(u_new):
            raise DivergenceError(k)
        last = k == n_iters - 1
        stop = tol is not None and point_norm(tu - u) < tol
        rec.record(k, u_new, u, tu, force=last or stop)
        u = u_new
        if stop:
            break
    return u, rec.trace


def rate_fit(trace: RunTrace, field: str = "gap_norm", k_min: int = 1, k_max: Optional[int] = None):
    """Least-squares fit of ``log(value)`` against ``log(k)`` over ``[k_min, k_max]``.

    Returns ``(slope, intercept)``; a slope near -1 indicates an O(1/k) decay.
    """
    if field not in ("gap_norm", "gap_seminorm", "fp_residual"):
        raise ValueError(f"cannot fit field {field!r}")
    ks = trace.iters
    if k_max is None:
        k_max = int(ks.max())
    if not k_max > k_min >= 1:
        raise ValueError("need k_max > k_min >= 1")
    sel = (ks >= k_min) & (ks <= k_max)
    vals = trace.column(field)[sel]
    if vals.size < 2:
        raise RateFitError("fewer than two trace rows in the fitting window")
    if not np.all(vals > 0):
        raise RateFitError(f"non-positive or missing {field} values in window [{k_min}, {k_max}]")
    slope, intercept = np.polyfit(np.log(ks[sel]), np.log(vals), 1)
    return float(slope), float(intercept)
