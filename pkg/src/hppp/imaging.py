"""Imaging primitives: finite differences, blur kernels, masks, noise, PSNR and file I/O.

Images are 2D float arrays with nominal range [0, 1]. A dual field is an
array of shape ``(2, H, W)`` holding the horizontal and vertical components.
"""

from __future__ import annotations

import io
import math
import zlib
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
from scipy import fft as sfft
from scipy import ndimage

__all__ = [
    "grad", "div", "Psf", "make_psf", "psf_otf", "convolve_psf", "make_mask",
    "add_wgn", "psnr", "read_image", "write_pgm", "read_mask", "encode_pgm", "decode_pgm",
    "bundled_images", "load_bundled", "subseed_rng",
]


def grad(x):
    """Forward differences with Neumann boundary; returns a ``(2, H, W)`` field."""
    x = np.asarray(x, dtype=float)
    p = np.zeros((2,) + x.shape)
    p[0, :, :-1] = x[:, 1:] - x[:, :-1]
    p[1, :-1, :] = x[1:, :] - x[:-1, :]
    return p


def div(p):
    """Discrete divergence, defined as the negative adjoint of :func:`grad`."""
    p1 = np.array(p[0], dtype=float)
    p2 = np.array(p[1], dtype=float)
    # entries that grad never writes are outside its range
    p1[:, -1] = 0.0
    p2[-1, :] = 0.0
    d = p1 + p2
    d[:, 1:] -= p1[:, :-1]
    d[1:, :] -= p2[:-1, :]
    return d


@dataclass(frozen=True)
class Psf:
    """A normalized, centered blur kernel."""

    kind: str
    weights: np.ndarray

    @property
    def radius(self):
        return self.weights.shape[0] // 2, self.weights.shape[1] // 2


def make_psf(kind: str = "gaussian", *, sigma: float = 1.6, size: int = 9, radius: int | None = None) -> Psf:
    """Build a blur kernel.

    ``"gaussian"`` is truncated at ``ceil(3 sigma)`` unless ``radius`` is given,
    ``"uniform"`` is a ``size x size`` box (odd size only) and ``"delta"`` is the
    identity.
    """
    if kind == "gaussian":
        if sigma <= 0:
            raise ValueError("sigma must be positive")
        r = int(math.ceil(3 * sigma)) if radius is None else int(radius)
        t = np.arange(-r, r + 1, dtype=float)
        g = np.exp(-t ** 2 / (2 * sigma ** 2))
        w = np.outer(g, g)
    elif kind == "uniform":
        if size < 1 or size % 2 == 0:
            raise ValueError("uniform PSF size must be a positive odd integer")
        w = np.ones((size, size))
    elif kind == "delta":
        w = np.ones((1, 1))
    else:
        raise ValueError(f"unknown PSF kind {kind!r}")
    return Psf(kind, w / w.sum())


def psf_otf(psf: Psf, shape) -> np.ndarray:
    """Transfer function of ``psf`` on a periodic grid, kernel center at index (0, 0)."""
    w = psf.weights
    if w.shape[0] > shape[0] or w.shape[1] > shape[1]:
        raise ValueError("PSF larger than the image")
    big = np.zeros(shape)
    big[: w.shape[0], : w.shape[1]] = w
    big = np.roll(big, (-(w.shape[0] // 2), -(w.shape[1] // 2)), axis=(0, 1))
    return sfft.fft2(big)


def convolve_psf(x, psf: Psf, method: str = "fft"):
    """Periodic convolution ``k * x``."""
    x = np.asarray(x, dtype=float)
    if method == "fft":
        return np.real(sfft.ifft2(sfft.fft2(x) * psf_otf(psf, x.shape)))
    if method == "direct":
        # ndimage.convolve flips the kernel and centers it, giving a true convolution
        return ndimage.convolve(x, psf.weights, mode="wrap")
    raise ValueError(f"unknown convolution method {method!r}")


def subseed_rng(seed: int, tag: str) -> np.random.Generator:
    """Generator for one purpose, derived from ``(seed, crc32(tag))``."""
    return np.random.default_rng([int(seed), zlib.crc32(tag.encode())])


def make_mask(kind: str, shape=None, *, p: float = 0.5, seed: int = 0, path=None) -> np.ndarray:
    """Binary observation mask, 1 where a pixel is observed.

    ``"bernoulli"`` drops each pixel independently with probability ``p``.
    ``"file"`` reads a grayscale image and thresholds at 128 (values >= 128 are
    observed); ``"character"`` is the bundled text mask.
    """
    if kind == "bernoulli":
        if not 0 < p < 1:
            raise ValueError("p must lie in (0, 1)")
        rng = subseed_rng(seed, "mask")
        return (rng.random(shape) >= p).astype(float)
    if kind in ("file", "character"):
        if kind == "character":
            with resources.as_file(_data_path("character_mask.pgm")) as fp:
                m = read_mask(fp)
        else:
            m = read_mask(path)
        if shape is not None and m.shape != tuple(shape):
            raise ValueError(f"mask shape {m.shape} does not match image shape {tuple(shape)}")
        return m
    raise ValueError(f"unknown mask kind {kind!r}")


def add_wgn(x, sigma: float, seed: int = 0):
    """Add white Gaussian noise of standard deviation ``sigma``."""
    rng = subseed_rng(seed, "noise")
    return x + sigma * rng.standard_normal(np.shape(x))


def psnr(x, ref, peak: float = 1.0) -> float:
    if peak <= 0:
        raise ValueError("peak must be positive")
    mse = float(np.mean((np.asarray(x, dtype=float) - np.asarray(ref, dtype=float)) ** 2))
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(peak ** 2 / mse)


# -- file I/O ---------------------------------------------------------------

def _to_u8(img):
    return np.round(255.0 * np.clip(img, 0.0, 1.0)).astype(np.uint8)


def encode_pgm(img) -> bytes:
    """Binary PGM (P5, maxval 255) bytes of ``round(255 * clip(img, 0, 1))``."""
    from PIL import Image

    buf = io.BytesIO()
    Image.fromarray(_to_u8(img)).save(buf, format="PPM")
    return buf.getvalue()


def decode_pgm(data: bytes) -> np.ndarray:
    from PIL import Image

    with Image.open(io.BytesIO(data)) as im:
        return np.asarray(im.convert("L"), dtype=float) / 255.0


def write_pgm(path, img) -> None:
    Path(path).write_bytes(encode_pgm(img))


def read_image(path) -> np.ndarray:
    """Read a grayscale PGM or PNG into [0, 1] floats."""
    from PIL import Image

    with Image.open(path) as im:
        if im.mode not in ("L", "1", "P", "RGB", "RGBA", "I", "I;16", "LA"):
            raise OSError(f"unsupported image mode {im.mode}")
        if im.mode in ("I", "I;16"):
            arr = np.asarray(im, dtype=float)
            return arr / (arr.max() or 1.0)
        return np.asarray(im.convert("L"), dtype=float) / 255.0


def read_mask(path) -> np.ndarray:
    return (read_image(path) * 255.0 >= 128).astype(float)


def _data_path(name: str):
    return resources.files("hppp") / "data" / name


def bundled_images() -> list:
    """Names of the bundled 256x256 grayscale test images."""
    names = [p.name[:-4] for p in (resources.files("hppp") / "data").iterdir()
             if p.name.endswith(".pgm") and not p.name.endswith("_mask.pgm")]
    return sorted(names)


def load_bundled(name: str) -> np.ndarray:
    with resources.as_file(_data_path(name + ".pgm")) as p:
        return read_image(p)
