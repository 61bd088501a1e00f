"""End-to-end deblurring and inpainting with named experiment presets.

A preset fixes the degradation (blur or mask plus white noise) and every
solver parameter. :func:`run_preset` degrades a clean image with seeded noise,
runs the chosen algorithm and reports PSNRs together with the full trace.

TV problems are posed as ``min_x lam f(x) + beta ||grad x||_{2,1}`` and solved
as saddle problems with ``K = grad``; the GraRED solvers use ``K = I`` and a
denoiser residual in place of the dual resolvent.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from functools import cached_property
from pathlib import Path
from typing import Optional

import numpy as np
from scipy import fft as sfft

from . import imaging
from .fixedpoint import RELAXATION, RunTrace, Schedule, hppp_iterate, ppp_iterate
from .grared import GraredConfig, gaussian_denoiser, grared_hp3, grared_p3
from .operators import (
    PrimalDualPoint, Preconditioner, SaddleProblem, cp_step_anchored, gradient_operator, make_T,
    seminorm_M,
)
from .prox import deblur_resolvent, dual_ball_resolvent, inpaint_resolvent

__all__ = [
    "TASKS", "ALGOS", "ANCHORS", "ExperimentPreset", "PRESETS", "get_preset", "Degraded", "degrade",
    "RestoreResult", "run_preset", "run_batch", "anchor_image", "inpaint_anchors", "anchor_study",
    "init_robustness", "tv_objective", "write_result",
]

TASKS = ("deblur-gaussian", "deblur-uniform", "inpaint-bernoulli", "inpaint-character")
ALGOS = ("cp", "ppp", "hppp", "grared_p3", "grared_hp3")
ANCHORS = ("adjoint", "observed", "ones", "zeros", "masked-mid")
TV_ALGOS = ("cp", "ppp", "hppp")


@dataclass(frozen=True)
class ExperimentPreset:
    """Degradation plus a complete parameter record for one solver.

    ``lam`` weighs the data term, ``beta`` the TV term (TV solvers only).
    ``mu`` and ``relax`` are schedule strings such as ``"inv-shift:1:2"`` or
    ``"const:1.2"``. ``anchor`` names the primal anchor (see
    :func:`anchor_image`); the dual anchor is always zero.
    """

    preset_id: str
    task: str
    algo: str
    tau: float
    s: float
    lam: float
    n_iters: int = 400
    beta: Optional[float] = None
    norm_K: Optional[float] = None
    relax: Optional[str] = None
    mu: Optional[str] = None
    anchor: Optional[str] = None
    denoiser_sigma: Optional[float] = None
    dual_projection: str = "standard"
    prox_step: str = "lam"
    noise: float = 0.01
    blur_sigma: float = 1.6
    blur_size: int = 9
    mask_p: float = 0.5

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")
        if self.algo not in ALGOS:
            raise ValueError(f"unknown algorithm {self.algo!r}")
        if self.n_iters < 1:
            raise ValueError("n_iters must be >= 1")
        if self.noise < 0:
            raise ValueError("noise must be nonnegative")
        need = []
        if self.algo in TV_ALGOS:
            need += ["beta", "norm_K"]
        else:
            need += ["denoiser_sigma"]
        if self.algo in ("ppp", "grared_p3"):
            need.append("relax")
        if self.algo in ("hppp", "grared_hp3"):
            need += ["mu", "anchor"]
        missing = [n for n in need if getattr(self, n) is None]
        if missing:
            raise ValueError(f"preset {self.preset_id!r} ({self.algo}) is missing {', '.join(missing)}")
        if self.anchor is not None and self.anchor not in ANCHORS:
            raise ValueError(f"unknown anchor {self.anchor!r}")
        if self.relax is not None:
            Schedule.parse(self.relax, RELAXATION)
        if self.mu is not None:
            Schedule.parse(self.mu)

    @property
    def is_deblur(self) -> bool:
        return self.task.startswith("deblur")

    def with_params(self, **kw) -> "ExperimentPreset":
        return replace(self, **kw)


def _build_presets() -> dict:
    out = {}

    def add(p):
        out[p.preset_id] = p

    # TV deblurring; the gradient norm is taken as 1.75 so that tau = s = 0.57 is admissible
    for prefix, task, noise in (("gauss16", "deblur-gaussian", 0.01),
                                ("uniform9", "deblur-uniform", np.sqrt(2.0) / 255.0)):
        tv = dict(task=task, tau=0.57, s=0.57, lam=2.0, beta=5e-4, norm_K=1.75, noise=noise)
        add(ExperimentPreset(f"{prefix}-cp", algo="cp", **tv))
        add(ExperimentPreset(f"{prefix}-ppp", algo="ppp", relax="const:1.95", **tv))
        add(ExperimentPreset(f"{prefix}-ppp12", algo="ppp", relax="const:1.2", **tv))
        add(ExperimentPreset(f"{prefix}-hppp", algo="hppp", mu="inv-shift:1:2", anchor="adjoint", **tv))
        gr = dict(task=task, tau=1.0, s=1.0, lam=20.0, denoiser_sigma=0.7, noise=noise)
        add(ExperimentPreset(f"{prefix}-grared-p3", algo="grared_p3", relax="const:0.2", **gr))
        add(ExperimentPreset(f"{prefix}-grared-hp3", algo="grared_hp3", mu="inv-shift:1:2",
                             anchor="observed", **gr))
    for prefix, task in (("bernoulli50", "inpaint-bernoulli"), ("character", "inpaint-character")):
        tv = dict(task=task, tau=0.57, s=0.57, lam=1.0, beta=0.01, norm_K=1.75)
        add(ExperimentPreset(f"{prefix}-cp", algo="cp", **tv))
        add(ExperimentPreset(f"{prefix}-ppp", algo="ppp", relax="const:1.6", **tv))
        add(ExperimentPreset(f"{prefix}-ppp12", algo="ppp", relax="const:1.2", **tv))
        add(ExperimentPreset(f"{prefix}-hppp", algo="hppp", mu="inv-shift:0.1:2", anchor="ones", **tv))
        gr = dict(task=task, tau=10.0, s=0.1, lam=5.0, denoiser_sigma=0.7)
        add(ExperimentPreset(f"{prefix}-grared-p3", algo="grared_p3", relax="const:0.2", **gr))
        add(ExperimentPreset(f"{prefix}-grared-hp3", algo="grared_hp3", mu="inv-shift:0.05:2",
                             anchor="observed", **gr))
    return out


PRESETS = _build_presets()


def get_preset(preset_id: str) -> ExperimentPreset:
    try:
        return PRESETS[preset_id]
    except KeyError:
        raise KeyError(f"unknown preset {preset_id!r}; known: {', '.join(sorted(PRESETS))}") from None


# -- degradation ------------------------------------------------------------

@dataclass
class Degraded:
    observed: np.ndarray
    psf: Optional[imaging.Psf] = None
    mask: Optional[np.ndarray] = None

    @cached_property
    def otf(self) -> np.ndarray:
        return imaging.psf_otf(self.psf, self.observed.shape)


def degrade(preset: ExperimentPreset, clean, seed: int) -> Degraded:
    """Blur or mask ``clean`` and add seeded white Gaussian noise.

    Inpainting observations are zero at missing pixels.
    """
    clean = np.asarray(clean, dtype=float)
    if preset.task == "deblur-gaussian":
        psf = imaging.make_psf("gaussian", sigma=preset.blur_sigma)
        return Degraded(imaging.add_wgn(imaging.convolve_psf(clean, psf), preset.noise, seed), psf=psf)
    if preset.task == "deblur-uniform":
        psf = imaging.make_psf("uniform", size=preset.blur_size)
        return Degraded(imaging.add_wgn(imaging.convolve_psf(clean, psf), preset.noise, seed), psf=psf)
    if preset.task == "inpaint-bernoulli":
        mask = imaging.make_mask("bernoulli", clean.shape, p=preset.mask_p, seed=seed)
    else:
        mask = imaging.make_mask("character", clean.shape)
    return Degraded(mask * imaging.add_wgn(clean, preset.noise, seed), mask=mask)


def anchor_image(kind: str, deg: Degraded) -> np.ndarray:
    """Primal anchor by name.

    ``adjoint`` is ``A^T y`` (correlation with the PSF); ``observed`` is the
    degraded image; ``masked-mid`` keeps observed pixels and fills the rest
    with 0.5.
    """
    y = deg.observed
    if kind == "adjoint":
        if deg.psf is None:
            raise ValueError("the adjoint anchor needs a blur")
        return np.real(sfft.ifft2(np.conj(deg.otf) * sfft.fft2(y)))
    if kind == "observed":
        return y.copy()
    if kind == "ones":
        return np.ones_like(y)
    if kind == "zeros":
        return np.zeros_like(y)
    if kind == "masked-mid":
        if deg.mask is None:
            raise ValueError("the masked-mid anchor needs a mask")
        return deg.mask * y + 0.5 * (1.0 - deg.mask)
    raise ValueError(f"unknown anchor {kind!r}")


def inpaint_anchors(deg: Degraded) -> dict:
    """The four inpainting anchors ``0``, ``M y + 0.5 (1 - M)``, ``1`` and ``y``."""
    return {k: anchor_image(k, deg) for k in ("zeros", "masked-mid", "ones", "observed")}


# -- solving ----------------------------------------------------------------

@dataclass
class RestoreResult:
    restored: np.ndarray
    trace: RunTrace
    psnr_in: float
    psnr_out: float
    preset_id: str
    seed: int
    iters: int
    wall_ms: float
    observed: Optional[np.ndarray] = None

    def summary(self) -> dict:
        """Flat record written to ``result.json``; infinite PSNR becomes ``"inf"``."""
        def enc(v):
            return "inf" if np.isinf(v) else float(v)
        return {"preset_id": self.preset_id, "seed": int(self.seed), "psnr_in": enc(self.psnr_in),
                "psnr_out": enc(self.psnr_out), "iters": int(self.iters), "wall_ms": float(self.wall_ms)}


def tv_objective(preset: ExperimentPreset, deg: Degraded, x) -> float:
    """``lam f(x) + beta ||grad x||_{2,1}`` for the preset's data term."""
    g = imaging.grad(x)
    tv = float(np.sum(np.sqrt(g[0] ** 2 + g[1] ** 2)))
    if deg.psf is not None:
        r = np.real(sfft.ifft2(deg.otf * sfft.fft2(x))) - deg.observed
        data = 0.5 * float(np.vdot(r, r))
    else:
        r = deg.mask * x - deg.observed
        data = float(np.vdot(r, r))
    return preset.lam * data + preset.beta * tv


def _data_resolvent(deg: Degraded):
    if deg.psf is not None:
        return deblur_resolvent(deg.psf, deg.observed)
    return inpaint_resolvent(deg.mask, deg.observed)


def _solve_tv(preset, deg, x0, xa, psnr_fn, stride):
    K = gradient_operator()
    SP = SaddleProblem(_data_resolvent(deg), dual_ball_resolvent(preset.beta, preset.dual_projection), K,
                       lam=preset.lam)
    P = Preconditioner(preset.tau, preset.s, K, preset.norm_K)
    u0 = PrimalDualPoint(x0, np.zeros((2,) + x0.shape))
    kw = dict(seminorm=lambda d: seminorm_M(P, d), objective=lambda u: tv_objective(preset, deg, u.x),
              psnr=None if psnr_fn is None else (lambda u: psnr_fn(u.x)), stride=stride)
    if preset.algo == "hppp":
        a = PrimalDualPoint(xa, np.zeros_like(u0.y))
        # componentwise anchored step; T(u) itself is never formed
        u, trace = hppp_iterate(None, a, u0, Schedule.parse(preset.mu), preset.n_iters,
                                step=lambda u, m: cp_step_anchored(SP, P, u, a, m), **kw)
    else:
        relax = Schedule.constant(1.0) if preset.algo == "cp" else Schedule.parse(preset.relax, RELAXATION)
        u, trace = ppp_iterate(make_T(SP, P), u0, relax, preset.n_iters, **kw)
    return u.x, trace


def _solve_grared(preset, deg, x0, xa, psnr_fn, stride):
    D = gaussian_denoiser(preset.denoiser_sigma)
    prox_f = _data_resolvent(deg)
    if preset.algo == "grared_hp3":
        anchor = PrimalDualPoint(xa, np.zeros_like(xa))
        cfg = GraredConfig(preset.tau, preset.s, preset.lam, Schedule.parse(preset.mu), preset.n_iters,
                           anchor=anchor, prox_step=preset.prox_step)
        x, _, trace = grared_hp3(prox_f, D, cfg, x0, psnr=psnr_fn, stride=stride)
    else:
        cfg = GraredConfig(preset.tau, preset.s, preset.lam, Schedule.parse(preset.relax, RELAXATION),
                           preset.n_iters, prox_step=preset.prox_step)
        x, _, trace = grared_p3(prox_f, D, cfg, x0, psnr=psnr_fn, stride=stride)
    return x, trace


def run_preset(preset: ExperimentPreset, clean, seed: int = 0, *, x0=None, anchor_x=None,
               record_psnr: bool = True, stride: int = 1) -> RestoreResult:
    """Degrade ``clean``, restore it with ``preset`` and score both images.

    Parameters
    ----------
    preset : ExperimentPreset
    clean : ndarray
        Ground-truth image in [0, 1].
    seed : int
        Seeds the noise (and the Bernoulli mask).
    x0 : ndarray, optional
        Primal starting point; the degraded image by default. The dual start is zero.
    anchor_x : ndarray, optional
        Overrides the preset's named primal anchor.
    record_psnr : bool
        Record PSNR against ``clean`` in the trace.
    stride : int
        Trace every ``stride``-th iteration.
    """
    clean = np.asarray(clean, dtype=float)
    if clean.ndim != 2:
        raise ValueError("expected a 2D grayscale image")
    if np.min(clean) < 0 or np.max(clean) > 1:
        raise ValueError("clean image must lie in [0, 1]")
    deg = degrade(preset, clean, seed)
    x0 = deg.observed.copy() if x0 is None else np.asarray(x0, dtype=float)
    if x0.shape != clean.shape:
        raise ValueError("x0 and image differ in shape")
    xa = None
    if preset.algo in ("hppp", "grared_hp3"):
        xa = anchor_image(preset.anchor, deg) if anchor_x is None else np.asarray(anchor_x, dtype=float)
        if xa.shape != clean.shape:
            raise ValueError("anchor and image differ in shape")
    psnr_fn = (lambda x: imaging.psnr(x, clean)) if record_psnr else None
    t0 = time.perf_counter()
    if preset.algo in TV_ALGOS:
        x, trace = _solve_tv(preset, deg, x0, xa, psnr_fn, stride)
    else:
        x, trace = _solve_grared(preset, deg, x0, xa, psnr_fn, stride)
    wall_ms = (time.perf_counter() - t0) * 1e3
    return RestoreResult(x, trace, imaging.psnr(deg.observed, clean), imaging.psnr(x, clean), preset.preset_id,
                         seed, preset.n_iters, wall_ms, deg.observed)


def _run_one(args):
    preset, clean, seed = args
    return run_preset(preset, clean, seed)


def run_batch(presets, clean, seed: int = 0, jobs: int = 1) -> list:
    """Run independent presets, in separate processes when ``jobs > 1``."""
    work = [(p, clean, seed) for p in presets]
    if jobs <= 1 or len(work) <= 1:
        return [_run_one(w) for w in work]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(_run_one, work))


def anchor_study(base: ExperimentPreset, clean, anchors, seed: int = 0) -> list:
    """One run per primal anchor, with the degradation and seed held fixed.

    ``anchors`` is a list of images or a dict of named images (results keep
    the same order).
    """
    if base.algo not in ("hppp", "grared_hp3"):
        raise ValueError("anchor studies need an anchored algorithm")
    items = list(anchors.values()) if isinstance(anchors, dict) else list(anchors)
    return [run_preset(base, clean, seed, anchor_x=a) for a in items]


def init_robustness(preset: ExperimentPreset, clean, n_inits: int, seed: int = 0) -> dict:
    """Restart ``preset`` from uniform random primal points in [0, 1].

    Returns ``psnr_mean``, ``psnr_spread`` (max minus min), the individual
    ``psnrs`` and the ``results`` themselves.
    """
    if n_inits < 1:
        raise ValueError("n_inits must be >= 1")
    clean = np.asarray(clean, dtype=float)
    results = []
    for i in range(n_inits):
        x0 = imaging.subseed_rng(seed, f"init-{i}").random(clean.shape)
        results.append(run_preset(preset, clean, seed, x0=x0, record_psnr=False))
    ps = np.array([r.psnr_out for r in results])
    return {"psnr_mean": float(ps.mean()), "psnr_spread": float(ps.max() - ps.min()), "psnrs": ps.tolist(),
            "results": results}


def write_result(result: RestoreResult, out_dir, *, timing: bool = True) -> Path:
    """Write ``<out_dir>/<preset_id>/{restored.pgm, trace.csv, result.json}``.

    ``timing=False`` leaves the trace's ``elapsed_ms`` column empty.
    """
    d = Path(out_dir) / result.preset_id
    d.mkdir(parents=True, exist_ok=True)
    imaging.write_pgm(d / "restored.pgm", result.restored)
    result.trace.to_csv(d / "trace.csv", timing=timing)
    (d / "result.json").write_text(json.dumps(result.summary(), indent=2) + "\n")
    return d


def preset_dict(preset: ExperimentPreset) -> dict:
    return asdict(preset)
