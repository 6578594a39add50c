"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from stft_dereverb import _fallback, make_window
from stft_dereverb.rir import KERNEL_HALF_WIDTH, RoomSpec, image_sources

try:
    from stft_dereverb import _ext
except ImportError:
    _ext = None


def cases(rng):
    cfg = make_window("sqrt-hann", 4, 64)
    frames = rng.standard_normal((2000, cfg.frame_len))
    spec = np.ascontiguousarray(rng.standard_normal((300, 256)) + 1j * rng.standard_normal((300, 256)))
    coeffs = np.ascontiguousarray(rng.standard_normal((256, 19)) + 1j * rng.standard_normal((256, 19)))
    room = RoomSpec((6, 5, 3), (1.2, 1.5, 1.4), (4.1, 3.3, 1.6), reflection_coeff=0.85,
                    rir_len=4096, max_order=30)
    delays, amps = image_sources(room)
    return {
        "overlap_add (2000 frames x 256)": lambda m: m.overlap_add(frames, cfg.window, cfg.R),
        "frame_convolve (300 x 256, 19 taps)": lambda m: m.frame_convolve(spec, coeffs),
        f"deposit_images ({len(delays)} images, M=4096)":
            lambda m: m.deposit_images(delays, amps, 4096, KERNEL_HALF_WIDTH),
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"{'kernel':<44} {'numpy ms':>10} {'cython ms':>10} {'speedup':>8}")
    for name, fn in cases(rng).items():
        py = min(timeit.repeat(lambda: fn(_fallback), number=1, repeat=args.repeat)) * 1e3
        if _ext is None:
            print(f"{name:<44} {py:10.2f} {'n/a':>10} {'':>8}")
            continue
        np.testing.assert_allclose(fn(_ext), fn(_fallback), rtol=1e-9, atol=1e-12)
        cy = min(timeit.repeat(lambda: fn(_ext), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<44} {py:10.2f} {cy:10.2f} {py / cy:7.1f}x")


if __name__ == "__main__":
    main()
