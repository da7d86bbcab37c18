"""Synthetic ground-truth volumes for round-trip and scattering tests.

All rasterizers antialias by 4x supersampling and keep features at least
8 pixels from the transverse boundary (the transforms are periodic), except
the laterally uniform slab, which has no edges by construction. Thin
structures are represented by their slab-averaged contrast: a feature of
physical thickness t < dz occupying a slice contributes delta_eps * t/dz.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .forward import PermittivityVolume
from .optics import FrequencyGrid, OpticalConfig

__all__ = [
    "PhantomSpec",
    "MARGIN_PX",
    "SUPERSAMPLE",
    "make_beads",
    "make_helix",
    "make_two_layer_target",
    "make_uniform_slab",
    "make_bar_target",
    "make_phantom",
    "helix_center",
]

MARGIN_PX = 8
SUPERSAMPLE = 4

_KINDS = ("beads", "helix", "two_layer_target", "uniform_slab", "bar_target")


@dataclass
class PhantomSpec:
    """Serializable phantom description: kind plus its geometry parameters."""

    kind: str
    params: dict

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown phantom kind {self.kind!r}; choose from {_KINDS}")

    def to_json(self) -> str:
        return json.dumps({"kind": self.kind, "params": self.params},
                          indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "PhantomSpec":
        doc = json.loads(text)
        return cls(kind=doc["kind"], params=doc["params"])


def _subpixel_axes(cfg: OpticalConfig):
    """Supersampled x and y coordinates (subpixel centers), in micrometers."""
    f = SUPERSAMPLE
    xs = cfg.dx * (np.arange(cfg.nx * f) + 0.5) / f
    ys = cfg.dy * (np.arange(cfg.ny * f) + 0.5) / f
    return xs, ys


def _downsample(fine: np.ndarray) -> np.ndarray:
    """Box-average a supersampled raster back to the pixel grid."""
    f = SUPERSAMPLE
    ny, nx = fine.shape[0] // f, fine.shape[1] // f
    return fine.reshape(ny, f, nx, f).mean(axis=(1, 3))


def _check_margin(x_um: float, y_um: float, extent_um: float, cfg: OpticalConfig,
                  what: str):
    mx = MARGIN_PX * cfg.dx
    my = MARGIN_PX * cfg.dy
    if (x_um - extent_um < mx or x_um + extent_um > cfg.nx * cfg.dx - mx
            or y_um - extent_um < my or y_um + extent_um > cfg.ny * cfg.dy - my):
        raise ValueError(
            f"{what} at ({x_um:.3g}, {y_um:.3g}) um with extent {extent_um:.3g} um "
            f"violates the {MARGIN_PX}-pixel boundary margin"
        )


def make_beads(count: int, radius_um: float, contrast: complex, slice_z,
               dz: float, grid: FrequencyGrid, cfg: OpticalConfig,
               seed: int = 0, center_slice: int | None = None) -> PermittivityVolume:
    """Spheres at random positions, slab-averaged into the slices they cross.

    Centers are drawn uniformly inside the margin box; the axial center is
    snapped to a randomly chosen slice plane, or to the ``center_slice``
    plane for every bead when that is given. Placement rejects overlaps,
    which keeps the analytic total energy |c|^2 * count * (4/3) pi R^3 valid.
    """
    slice_z = np.atleast_1d(np.asarray(slice_z, dtype=np.float64))
    if count < 0:
        raise ValueError(f"count must be >= 0, got {count}")
    if center_slice is not None and not (0 <= center_slice < len(slice_z)):
        raise ValueError(
            f"center_slice {center_slice} outside 0..{len(slice_z) - 1}"
        )
    vol = np.zeros((len(slice_z), cfg.ny, cfg.nx), dtype=np.complex128)
    if count == 0:
        return PermittivityVolume(vol, slice_z, dz)
    lo_x = MARGIN_PX * cfg.dx + radius_um
    hi_x = cfg.nx * cfg.dx - MARGIN_PX * cfg.dx - radius_um
    lo_y = MARGIN_PX * cfg.dy + radius_um
    hi_y = cfg.ny * cfg.dy - MARGIN_PX * cfg.dy - radius_um
    if lo_x >= hi_x or lo_y >= hi_y:
        raise ValueError(
            f"bead radius {radius_um} um does not fit inside the margins of a "
            f"{cfg.nx}x{cfg.ny} grid at dx={cfg.dx} um"
        )
    rng = np.random.default_rng(seed)
    centers: list[tuple[float, float, float]] = []
    attempts = 0
    while len(centers) < count:
        attempts += 1
        if attempts > 1000 * count:
            raise ValueError(
                f"could not place {count} non-overlapping beads of radius "
                f"{radius_um} um after {attempts} draws"
            )
        xc = rng.uniform(lo_x, hi_x)
        yc = rng.uniform(lo_y, hi_y)
        if center_slice is None:
            zc = slice_z[rng.integers(len(slice_z))]
        else:
            zc = slice_z[center_slice]
        ok = all(
            (xc - x) ** 2 + (yc - y) ** 2 + (zc - z) ** 2 >= (2 * radius_um) ** 2
            for x, y, z in centers
        )
        if ok:
            centers.append((xc, yc, zc))

    xs, ys = _subpixel_axes(cfg)
    for xc, yc, zc in centers:
        for m, zm in enumerate(slice_z):
            top = zm + dz / 2
            bot = zm - dz / 2
            # lateral subpixels within reach of the sphere
            ix = np.nonzero(np.abs(xs - xc) <= radius_um)[0]
            iy = np.nonzero(np.abs(ys - yc) <= radius_um)[0]
            if len(ix) == 0 or len(iy) == 0:
                continue
            rho2 = ((xs[ix][None, :] - xc) ** 2 + (ys[iy][:, None] - yc) ** 2)
            h = np.sqrt(np.maximum(radius_um**2 - rho2, 0.0))
            chord = np.maximum(
                np.minimum(top, zc + h) - np.maximum(bot, zc - h), 0.0
            )
            if not np.any(chord):
                continue
            fine = np.zeros((cfg.ny * SUPERSAMPLE, cfg.nx * SUPERSAMPLE))
            fine[np.ix_(iy, ix)] = chord / dz
            vol[m] += contrast * _downsample(fine)
    return PermittivityVolume(vol, slice_z, dz)


def helix_center(z: float, pitch_um: float, helix_radius_um: float,
                 cx: float, cy: float, z0: float = 0.0,
                 phase0: float = 0.0) -> tuple[float, float]:
    """Parametric tube center of the helix at axial position z."""
    ang = phase0 + 2.0 * np.pi * (z - z0) / pitch_um
    return cx + helix_radius_um * np.cos(ang), cy + helix_radius_um * np.sin(ang)


def make_helix(pitch_um: float, helix_radius_um: float, tube_radius_um: float,
               contrast: complex, slice_z, dz: float, grid: FrequencyGrid,
               cfg: OpticalConfig, phase0: float = 0.0) -> PermittivityVolume:
    """A tube swept along a circular helix, averaged within each slab.

    Each slab samples the swept disc at SUPERSAMPLE axial points, so slices
    one pitch apart hold identical patterns and intermediate slices are the
    same disc rotated by 2 pi (z' - z)/pitch around the helix axis.
    """
    slice_z = np.atleast_1d(np.asarray(slice_z, dtype=np.float64))
    cx = cfg.nx * cfg.dx / 2
    cy = cfg.ny * cfg.dy / 2
    _check_margin(cx, cy, helix_radius_um + tube_radius_um, cfg, "helix")
    xs, ys = _subpixel_axes(cfg)
    vol = np.zeros((len(slice_z), cfg.ny, cfg.nx), dtype=np.complex128)
    zsub = (np.arange(SUPERSAMPLE) + 0.5) / SUPERSAMPLE - 0.5
    for m, zm in enumerate(slice_z):
        fine = np.zeros((cfg.ny * SUPERSAMPLE, cfg.nx * SUPERSAMPLE))
        for dzs in zsub:
            hx, hy = helix_center(zm + dzs * dz, pitch_um, helix_radius_um,
                                  cx, cy, phase0=phase0)
            r2 = (xs[None, :] - hx) ** 2 + (ys[:, None] - hy) ** 2
            fine += (r2 <= tube_radius_um**2)
        vol[m] = contrast * _downsample(fine / SUPERSAMPLE)
    return PermittivityVolume(vol, slice_z, dz)


def _bar_profile(xs: np.ndarray, center: float, period_um: float, n_bars: int,
                 duty: float = 0.5) -> np.ndarray:
    """Indicator of n_bars bars of width duty*period at the given period."""
    prof = np.zeros_like(xs)
    start = center - (n_bars - 1) * period_um / 2
    half = duty * period_um / 2
    for j in range(n_bars):
        c = start + j * period_um
        prof = np.maximum(prof, (np.abs(xs - c) <= half).astype(np.float64))
    return prof


def _bar_slice(period_um: float, n_bars: int, axis: str,
               cfg: OpticalConfig) -> np.ndarray:
    """Supersampled three-bar-group raster, bars modulating along ``axis``."""
    if axis not in ("x", "y"):
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")
    xs, ys = _subpixel_axes(cfg)
    mod, perp, d_mod, n_mod = (xs, ys, cfg.dx, cfg.nx) if axis == "x" else \
                              (ys, xs, cfg.dy, cfg.ny)
    if period_um < 2 * d_mod:
        raise ValueError(
            f"bar period {period_um} um is below two pixels ({2 * d_mod} um)"
        )
    center = n_mod * d_mod / 2
    extent = n_bars * period_um / 2
    if center - extent < MARGIN_PX * d_mod or \
            center + extent > n_mod * d_mod - MARGIN_PX * d_mod:
        raise ValueError(
            f"{n_bars} bars at period {period_um} um exceed the grid margins"
        )
    prof = _bar_profile(mod, center, period_um, n_bars)
    # bars run the full perpendicular extent minus margins
    p_margin = MARGIN_PX * (cfg.dy if axis == "x" else cfg.dx)
    p_len = (perp >= p_margin) & (perp <= perp[-1] + perp[0] - p_margin)
    fine = (prof[None, :] * p_len[:, None].astype(np.float64)) if axis == "x" \
        else (prof[:, None] * p_len[None, :].astype(np.float64))
    return _downsample(fine)


def make_bar_target(period_um: float, contrast: complex, grid: FrequencyGrid,
                    cfg: OpticalConfig, dz: float, z: float = 0.0,
                    n_bars: int = 3, axis: str = "x") -> PermittivityVolume:
    """Single-slice three-bar resolution target."""
    slab = contrast * _bar_slice(period_um, n_bars, axis, cfg)
    return PermittivityVolume(slab[None, :, :], [z], dz)


def make_two_layer_target(height_nm: float, n_ph: float,
                          absorption_strength: float, separation_um: float,
                          grid: FrequencyGrid, cfg: OpticalConfig,
                          dz: float = 10.0, period_um: float = 15.0,
                          z_bottom: float = 0.0) -> PermittivityVolume:
    """Phase bars above absorption bars, separated by a large empty gap.

    The phase layer is a pattern of height ``height_nm`` of index n_ph in the
    surrounding medium, slab-averaged: delta_eps = (n_ph^2 - 1) * h/dz. The
    absorption layer holds bars of the given imaginary contrast. The two
    slices sit ``separation_um`` apart (a whole multiple of dz) with nothing
    stored in between; the phase layer is on the illumination side. Bars of
    the two layers run along perpendicular axes so the layers stay laterally
    distinguishable.
    """
    if height_nm < 0:
        raise ValueError(f"height must be >= 0, got {height_nm} nm")
    height_um = height_nm * 1e-3
    if height_um > dz:
        raise ValueError(
            f"pattern height {height_um} um exceeds the slice thickness {dz} um"
        )
    steps = separation_um / dz
    if abs(steps - round(steps)) > 1e-9 or steps < 1:
        raise ValueError(
            f"layer separation {separation_um} um must be a positive whole "
            f"multiple of dz = {dz} um"
        )
    if absorption_strength < 0:
        raise ValueError(f"absorption must be >= 0, got {absorption_strength}")
    phase_eps = (n_ph**2 - 1.0) * height_um / dz
    bars_abs = _bar_slice(period_um, 3, "x", cfg)
    bars_ph = _bar_slice(period_um, 3, "y", cfg)
    vol = np.zeros((2, cfg.ny, cfg.nx), dtype=np.complex128)
    vol[0] = 1j * absorption_strength * bars_abs
    vol[1] = phase_eps * bars_ph
    return PermittivityVolume(vol, [z_bottom, z_bottom + separation_um], dz)


def make_uniform_slab(contrast: complex, slice_z, dz: float,
                      grid: FrequencyGrid, cfg: OpticalConfig) -> PermittivityVolume:
    """Laterally constant slab: all energy at u = 0 (missing-cone fixture)."""
    slice_z = np.atleast_1d(np.asarray(slice_z, dtype=np.float64))
    vol = np.full((len(slice_z), cfg.ny, cfg.nx), contrast, dtype=np.complex128)
    return PermittivityVolume(vol, slice_z, dz)


def make_phantom(spec: PhantomSpec, grid: FrequencyGrid,
                 cfg: OpticalConfig) -> PermittivityVolume:
    """Build a phantom from its serializable spec."""
    p = dict(spec.params)
    if "contrast" in p and isinstance(p["contrast"], (list, tuple)):
        p["contrast"] = complex(p["contrast"][0], p["contrast"][1])
    makers = {
        "beads": make_beads,
        "helix": make_helix,
        "two_layer_target": make_two_layer_target,
        "uniform_slab": make_uniform_slab,
        "bar_target": make_bar_target,
    }
    return makers[spec.kind](grid=grid, cfg=cfg, **p)
