"""Regenerate the bundled 256x256 test images and the character mask.

Needs scikit-image (not a runtime dependency). The images come from
``skimage.data``, which distributes them without copyright restrictions, plus
a synthetic piecewise-constant scene.
"""

from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw, ImageFont
from skimage import color, data, transform

OUT = Path(__file__).resolve().parents[1] / "src" / "hppp" / "data"
SIZE = 256


def square(img):
    h, w = img.shape
    m = min(h, w)
    top, left = (h - m) // 2, (w - m) // 2
    return img[top:top + m, left:left + m]


def save(name, img):
    img = transform.resize(square(img), (SIZE, SIZE), anti_aliasing=True)
    u8 = np.round(255 * np.clip(img, 0, 1)).astype(np.uint8)
    Image.fromarray(u8).save(OUT / f"{name}.pgm")


def shapes():
    yy, xx = np.mgrid[0:SIZE, 0:SIZE] / SIZE
    img = np.full((SIZE, SIZE), 0.2)
    img[(xx - 0.3) ** 2 + (yy - 0.35) ** 2 < 0.04] = 0.8
    img[(np.abs(xx - 0.7) < 0.15) & (np.abs(yy - 0.65) < 0.2)] = 0.55
    img[(yy > 0.75) & (xx < 0.4) & (yy - 0.75 < 0.8 * (0.4 - xx))] = 0.95
    return img


def character_mask():
    im = Image.new("L", (SIZE, SIZE), 255)
    draw = ImageDraw.Draw(im)
    font = ImageFont.load_default(size=24)
    text = "Halpern anchors pick one solution"
    for row, y in enumerate(range(2, SIZE, 24)):
        draw.text((4 - 9 * (row % 3), y), text[row % 7:] + " " + text, fill=0, font=font)
    return im


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    save("camera", data.camera() / 255.0)
    save("astronaut", color.rgb2gray(data.astronaut()))
    save("coffee", color.rgb2gray(data.coffee()))
    save("moon", data.moon() / 255.0)
    save("shapes", shapes())
    m = character_mask()
    m.save(OUT / "character_mask.pgm")
    frac = 1 - (np.asarray(m) >= 128).mean()
    print(f"character mask: {100 * frac:.1f}% of pixels missing")
