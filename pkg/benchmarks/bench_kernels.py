"""Compare the compiled kernels against the pure-numpy reference.

Times the two hot spots (transfer-pair evaluation and normal-equation
accumulation) head to head, then one full streamed reconstruction with
whichever backend is active. Best-of-N wall times.

    python3 benchmarks/bench_kernels.py --size 256 --repeats 20
"""

import argparse
import time

import numpy as np

from idtomo import (
    FrequencyGrid,
    LedArray,
    OpticalConfig,
    PermittivityVolume,
    Pupil,
    pattern_pseudorandom,
    select_brightfield,
    simulate_intensity_born,
)
from idtomo import _kernels_np
from idtomo._backend import BACKEND, HAVE_EXT
from idtomo.recon import ReconParams, reconstruct

if HAVE_EXT:
    from idtomo import _core


def best_of(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=256, help="grid edge length")
    ap.add_argument("--repeats", type=int, default=20)
    ap.add_argument("--leds", type=int, default=32,
                    help="LED count for the end-to-end reconstruction")
    args = ap.parse_args()

    n = args.size
    cfg = OpticalConfig(wavelength_um=0.63, na=0.65, nx=n, ny=n, dx=0.24)
    grid = FrequencyGrid(cfg)
    pupil = Pupil(cfg)
    print(f"grid {n}x{n}, backend active in package: {BACKEND}")

    tf_kw = dict(ux=grid.ux, uy=grid.uy, uix=1.0035, uiy=-0.5018,
                 eta_i=9.892, z=2.3, k=cfg.k, cutoff=cfg.pupil_cutoff,
                 k0=cfg.k0, source=1.3, p0=1.0)
    t_np = best_of(lambda: _kernels_np.tf_pair(**tf_kw), args.repeats)
    print(f"tf_pair     numpy:    {t_np * 1e3:8.2f} ms")
    if HAVE_EXT:
        t_cy = best_of(lambda: _core.tf_pair(**tf_kw), args.repeats)
        print(f"tf_pair     compiled: {t_cy * 1e3:8.2f} ms   "
              f"({t_np / t_cy:4.1f}x)")

    rng = np.random.default_rng(0)
    h_re = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    h_im = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))

    def acc_args():
        return (np.zeros((n, n)), np.zeros((n, n)),
                np.zeros((n, n), dtype=np.complex128),
                np.zeros((n, n), dtype=np.complex128),
                np.zeros((n, n), dtype=np.complex128))

    a = acc_args()
    t_np = best_of(lambda: _kernels_np.acc_update(*a, h_re, h_im, g, 1.2),
                   args.repeats)
    print(f"acc_update  numpy:    {t_np * 1e3:8.2f} ms")
    if HAVE_EXT:
        b = acc_args()
        t_cy = best_of(lambda: _core.acc_update(*b, h_re, h_im, g, 1.2),
                       args.repeats)
        print(f"acc_update  compiled: {t_cy * 1e3:8.2f} ms   "
              f"({t_np / t_cy:4.1f}x)")

    M = 4
    slice_z = (np.arange(M) - (M - 1) / 2) * 1.0
    vol = PermittivityVolume(
        (1e-4 * rng.standard_normal((M, n, n))).astype(np.complex128),
        slice_z, 1.0)
    illum = pattern_pseudorandom(select_brightfield(LedArray(), cfg),
                                 args.leds, seed=3)
    ds = simulate_intensity_born(vol, illum, pupil, grid, cfg)
    params = ReconParams(slice_z=slice_z, dz=1.0, alpha=1e-4, beta=1e-4)
    run = lambda: reconstruct(ds, illum, pupil, grid, cfg, params)
    run()  # warm
    t = best_of(run, max(1, args.repeats // 4))
    print(f"reconstruct {len(illum)} LEDs x {M} slices ({BACKEND}): "
          f"{t * 1e3:8.1f} ms")


if __name__ == "__main__":
    main()
