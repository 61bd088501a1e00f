"""
Inpainting half the pixels, or a block of text
==============================================

TV inpainting keeps the observed pixels close to the data and fills the
rest by minimizing total variation; the anchored solver starts pulling
towards the constant image 1. The GraRED solver uses a Gaussian smoothing
denoiser as an implicit prior.
"""

from hppp import imaging
from hppp.restore import get_preset, run_preset

clean = imaging.load_bundled("astronaut")

for pid in ["bernoulli50-cp", "bernoulli50-hppp", "bernoulli50-grared-hp3",
            "character-hppp", "character-grared-hp3"]:
    r = run_preset(get_preset(pid), clean, seed=1)
    print(f"{pid:24s} psnr {r.psnr_in:6.2f} -> {r.psnr_out:6.2f} dB in {r.wall_ms / 1e3:.1f} s")
    imaging.write_pgm(f"{pid}.pgm", r.restored)
