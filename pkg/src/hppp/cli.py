"""Command-line front end: ``hppp toy|deblur|inpaint|check``.

Exit status: 0 success, 1 a check failed, 2 usage error, 3 divergence,
4 input/output error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import imaging
from .fixedpoint import RELAXATION, DivergenceError, Schedule
from .restore import ALGOS, ANCHORS, PRESETS, get_preset, run_batch, write_result

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_DIVERGED, EXIT_IO = 0, 1, 2, 3, 4

# flags whose values may start with a minus sign, e.g. --init -6,6
_PAIR_FLAGS = ("--init", "--anchor")


class UsageError(Exception):
    pass


def _pair(text: str):
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected x,y but got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two numbers in {text!r}") from None


def _schedule(role):
    def parse(text: str):
        try:
            if role == RELAXATION and ":" not in text and text != "min2k":
                return Schedule.constant(float(text))
            return Schedule.parse(text, role)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    return parse


def _fmt(v: float) -> str:
    return f"{v:.12g}"


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hppp", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    t = sub.add_parser("toy", help="run the 1D saddle problem")
    t.add_argument("--algo", choices=("hppp", "ppp"), default="hppp")
    t.add_argument("--anchor", type=_pair, help="anchor x,y (hppp only)")
    t.add_argument("--init", type=_pair, required=True, help="initial point x,y")
    t.add_argument("--mu", type=_schedule("anchor"), default=Schedule.inverse_shift(1, 2),
                   help="anchor schedule (default inv-shift:1:2)")
    t.add_argument("--relax", type=_schedule(RELAXATION), help="relaxation schedule or constant (ppp only)")
    t.add_argument("--iters", type=int, default=1000)
    t.add_argument("--tau", type=float, default=1.0)
    t.add_argument("--s", type=float, default=1.0)
    t.add_argument("--out", default="toy_trajectory.csv", help="trajectory CSV (iter,x,y)")

    for name, task_help in (("deblur", "TV or denoiser-regularized deblurring"),
                            ("inpaint", "TV or denoiser-regularized inpainting")):
        p = sub.add_parser(name, help=task_help)
        p.add_argument("--input", required=True, help="clean image (PGM/PNG) or bundled:NAME")
        p.add_argument("--preset", action="append", help="preset id; repeat to run several")
        p.add_argument("--algo", choices=ALGOS, help="algorithm when no preset is given")
        if name == "deblur":
            p.add_argument("--blur", choices=("gaussian", "uniform"), default="gaussian")
            p.add_argument("--blur-sigma", type=float)
            p.add_argument("--blur-size", type=int)
        else:
            p.add_argument("--mask", choices=("bernoulli", "character"), default="bernoulli")
            p.add_argument("--mask-p", type=float)
        p.add_argument("--tau", type=float)
        p.add_argument("--s", type=float)
        p.add_argument("--lam", type=float)
        p.add_argument("--beta", type=float)
        p.add_argument("--norm-k", dest="norm_K", type=float)
        p.add_argument("--iters", dest="n_iters", type=int)
        p.add_argument("--mu")
        p.add_argument("--relax")
        p.add_argument("--anchor", choices=ANCHORS)
        p.add_argument("--denoiser-sigma", type=float)
        p.add_argument("--dual-projection", choices=("standard", "unscaled"))
        p.add_argument("--prox-step", choices=("lam", "tau_lam"))
        p.add_argument("--noise", type=float, help="noise standard deviation")
        p.add_argument("--noise-scale", choices=("unit", "255"), default="unit",
                       help="scale of --noise: [0, 1] intensities or [0, 255] grey levels")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default="runs", help="results directory")
        p.add_argument("--jobs", type=int, default=1, help="run presets in parallel")
        p.add_argument("--timing", action="store_true", help="keep wall-clock times in trace.csv")

    c = sub.add_parser("check", help="run property suites")
    c.add_argument("--suite", action="append", help="adjoint, mfne, prox, denoiser, drs-equiv, rate or all")
    c.add_argument("--seed", type=int, default=0)

    sub.add_parser("presets", help="list preset ids")
    return ap


def cmd_toy(args) -> int:
    from .toy import ToyConfig, toy_run, write_trajectory

    if args.iters < 1:
        raise UsageError("--iters must be >= 1")
    if args.tau <= 0 or args.s <= 0 or args.tau * args.s > 1 + 1e-9:
        raise UsageError("need tau, s > 0 and tau * s <= 1")
    if args.algo == "hppp" and args.anchor is None:
        raise UsageError("--anchor is required with --algo hppp")
    if args.algo == "ppp" and args.relax is None:
        raise UsageError("--relax is required with --algo ppp")
    try:
        if args.algo == "hppp":
            cfg = ToyConfig(args.init, args.iters, mu=args.mu, anchor=args.anchor, tau=args.tau, s=args.s)
        else:
            cfg = ToyConfig(args.init, args.iters, relax=args.relax, tau=args.tau, s=args.s)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    run = toy_run(cfg, args.algo)
    try:
        write_trajectory(args.out, run.trajectory)
    except OSError as exc:
        print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
        return EXIT_IO
    c, f = run.limit_claim, run.final
    err_m = abs((f.x - c.x) - (f.y - c.y))
    print(f"limit_claim=({_fmt(c.x)},{_fmt(c.y)}) final=({_fmt(f.x)},{_fmt(f.y)}) err_M={_fmt(err_m)}")
    return EXIT_OK


_TASK_PREFIX = {("deblur", "gaussian"): "gauss16", ("deblur", "uniform"): "uniform9",
                ("inpaint", "bernoulli"): "bernoulli50", ("inpaint", "character"): "character"}
_OVERRIDES = ("tau", "s", "lam", "beta", "norm_K", "n_iters", "mu", "relax", "anchor", "denoiser_sigma",
              "dual_projection", "prox_step", "noise", "blur_sigma", "blur_size", "mask_p")


def _resolve_presets(args):
    if args.preset:
        presets = [get_preset(pid) for pid in args.preset]
    else:
        if args.algo is None:
            raise UsageError("either --preset or --algo is required")
        kind = args.blur if args.command == "deblur" else args.mask
        base = f"{_TASK_PREFIX[(args.command, kind)]}-{args.algo.replace('_', '-')}"
        presets = [get_preset(base)]
    want = "deblur" if args.command == "deblur" else "inpaint"
    for p in presets:
        if not p.task.startswith(want):
            raise UsageError(f"preset {p.preset_id!r} is for {p.task}, not {want}")
    over = {k: getattr(args, k) for k in _OVERRIDES if getattr(args, k, None) is not None}
    if "noise" in over and args.noise_scale == "255":
        over["noise"] = over["noise"] / 255.0
    for k in ("mu", "relax"):
        if k in over and ":" not in over[k] and over[k] != "min2k":
            over[k] = f"const:{over[k]}"
    return [p.with_params(**over) if over else p for p in presets]


def _load_input(source: str):
    if source.startswith("bundled:"):
        name = source.split(":", 1)[1]
        if name not in imaging.bundled_images():
            raise OSError(f"no bundled image {name!r}; available: {', '.join(imaging.bundled_images())}")
        return imaging.load_bundled(name)
    img = imaging.read_image(source)
    if img.ndim != 2:
        raise OSError(f"{source} is not a grayscale image")
    return img


def cmd_restore(args) -> int:
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    try:
        presets = _resolve_presets(args)
    except (KeyError, ValueError) as exc:
        raise UsageError(str(exc).strip("'\"")) from None
    try:
        clean = _load_input(args.input)
    except Exception as exc:  # PIL raises several unrelated types for bad files
        print(f"error: cannot read {args.input}: {exc}", file=sys.stderr)
        return EXIT_IO
    if args.command == "inpaint" and any(p.task == "inpaint-character" for p in presets) \
            and clean.shape != (256, 256):
        raise UsageError("the character mask needs a 256x256 image")
    try:
        results = run_batch(presets, clean, args.seed, args.jobs)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    try:
        for r in results:
            write_result(r, args.out, timing=args.timing)
    except OSError as exc:
        print(f"error: cannot write results under {args.out}: {exc}", file=sys.stderr)
        return EXIT_IO
    for r in results:
        print(f"psnr_in={r.psnr_in:.4f} psnr_out={r.psnr_out:.4f} preset={r.preset_id} "
              f"dir={Path(args.out) / r.preset_id}")
    return EXIT_OK


def cmd_check(args) -> int:
    from .checks import SUITES, run_suite

    names = args.suite or ["all"]
    if "all" in names:
        names = list(SUITES)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise UsageError(f"unknown suite {unknown[0]!r}; choose from {', '.join(SUITES)} or all")
    ok = True
    for name in names:
        for res in run_suite(name, args.seed):
            print(f"[{name}] {res.line()}")
            ok &= res.passed
    return EXIT_OK if ok else EXIT_CHECK


def _merge_pair_flags(argv):
    """Turn ``--init -6,6`` into ``--init=-6,6`` so argparse does not read ``-6,6`` as a flag."""
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in _PAIR_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-") \
                and argv[i + 1][1:2].isdigit():
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv=None) -> int:
    argv = _merge_pair_flags(sys.argv[1:] if argv is None else list(argv))
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with status 2 on flag errors
    try:
        if args.command == "toy":
            return cmd_toy(args)
        if args.command in ("deblur", "inpaint"):
            return cmd_restore(args)
        if args.command == "check":
            return cmd_check(args)
        for pid in sorted(PRESETS):
            print(pid)
        return EXIT_OK
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"hppp {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DivergenceError as exc:
        print(f"error: diverged at iteration {exc.iteration}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
