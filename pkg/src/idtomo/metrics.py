"""Quality metrics for reconstructions.

All comparisons happen inside the lateral passband: intensity data carries
no content beyond radius 2*NA/wavelength (cycles), and the mean (DC) of the
phase channel is not observable, so every metric first band-filters and
drops the mean. Arrays follow the unshifted FFT layout used everywhere else.
"""

from __future__ import annotations

import numpy as np

from .optics import FrequencyGrid, OpticalConfig
from .phantom import MARGIN_PX, _bar_profile

__all__ = [
    "band_filter",
    "in_band_correlation",
    "band_nrmse",
    "modulation_depth",
    "bar_height_estimate",
]


def _lateral_mask(grid: FrequencyGrid) -> np.ndarray:
    # full lateral support: radius 2*NA*k0 in angular units
    r = 2.0 * grid.cfg.na * grid.cfg.k0
    return grid.ux ** 2 + grid.uy ** 2 <= r * r * (1.0 + 1e-12)


def band_filter(img: np.ndarray, grid: FrequencyGrid,
                keep_dc: bool = False) -> np.ndarray:
    spec = np.fft.fft2(img) * _lateral_mask(grid)
    if not keep_dc:
        spec[0, 0] = 0.0
    return np.fft.ifft2(spec).real


def in_band_correlation(a: np.ndarray, b: np.ndarray,
                        grid: FrequencyGrid) -> float:
    """Pearson correlation of the band-filtered, zero-mean images."""
    fa = band_filter(a, grid).ravel()
    fb = band_filter(b, grid).ravel()
    na = float(np.linalg.norm(fa))
    nb = float(np.linalg.norm(fb))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(fa, fb) / (na * nb))


def band_nrmse(recon: np.ndarray, truth: np.ndarray,
               grid: FrequencyGrid) -> float:
    fr = band_filter(recon, grid)
    ft = band_filter(truth, grid)
    denom = float(np.linalg.norm(ft))
    if denom == 0.0:
        return 0.0
    return float(np.linalg.norm(fr - ft) / denom)


def _fundamental_amplitude(img: np.ndarray, period_um: float, axis: str,
                           cfg: OpticalConfig) -> float:
    """|DFT| of the mean profile at the bin nearest 1/period."""
    if axis == "x":
        profile = img.mean(axis=0)
        extent = cfg.nx * cfg.dx
    elif axis == "y":
        profile = img.mean(axis=1)
        extent = cfg.ny * cfg.dy
    else:
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")
    spec = np.fft.rfft(profile)
    k = int(round(extent / period_um))
    if k <= 0 or k >= spec.size:
        raise ValueError(
            f"period {period_um} um has no resolvable bin on this grid"
        )
    return float(np.abs(spec[k]))


def modulation_depth(recon_img: np.ndarray, truth_img: np.ndarray,
                     period_um: float, cfg: OpticalConfig,
                     axis: str = "x") -> float:
    """Recovered-over-true amplitude of the bar fundamental.

    Fourier-amplitude ratio at the bar frequency, which is insensitive to
    the lost DC and to the window the bars sit in: 1.0 means full contrast
    transfer, 0.0 means the bars vanished.
    """
    top = _fundamental_amplitude(recon_img, period_um, axis, cfg)
    bot = _fundamental_amplitude(truth_img, period_um, axis, cfg)
    if bot == 0.0:
        return 0.0
    return top / bot


def bar_height_estimate(height_img: np.ndarray, period_um: float,
                        n_bars: int, cfg: OpticalConfig,
                        axis: str = "x") -> float:
    """Read a step height off a height map of a known bar target.

    Projects along the bars, then takes median(level on bars) minus
    median(level in the gaps), sampling only the central half of each
    region so band-limited edge ringing does not bias the estimate.
    """
    if axis == "x":
        n, d, n_perp = cfg.nx, cfg.dx, cfg.ny
    elif axis == "y":
        n, d, n_perp = cfg.ny, cfg.dy, cfg.nx
    else:
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")
    # bars span the field minus the raster margins; averaging the empty
    # margin rows into the projection would scale the step by the fill factor
    perp = slice(MARGIN_PX, n_perp - MARGIN_PX) if n_perp > 2 * MARGIN_PX \
        else slice(None)
    if axis == "x":
        profile = height_img[perp, :].mean(axis=0)
    else:
        profile = height_img[:, perp].mean(axis=1)
    xs = (np.arange(n) + 0.5) * d
    center = 0.5 * n * d
    on = _bar_profile(xs, center, period_um, n_bars) > 0.5
    # center-half masks: distance to the nearest level flip > period/8
    flip = np.flatnonzero(np.diff(on.astype(np.int8)) != 0)
    edges = 0.5 * (xs[flip] + xs[flip + 1]) if flip.size else np.array([])
    guard = period_um / 8.0
    interior = np.ones(n, dtype=bool)
    interior[:MARGIN_PX] = False
    interior[n - MARGIN_PX:] = False
    for e in edges:
        interior &= np.abs(xs - e) > guard
    bar_px = on & interior
    gap_px = ~on & interior
    # restrict gaps to the modulated span so the flat borders don't dominate
    if edges.size:
        lo, hi = edges.min() - period_um / 2, edges.max() + period_um / 2
        gap_px &= (xs > lo) & (xs < hi)
    if not bar_px.any() or not gap_px.any():
        raise ValueError("bar geometry leaves no interior pixels to sample")
    return float(np.median(profile[bar_px]) - np.median(profile[gap_px]))
