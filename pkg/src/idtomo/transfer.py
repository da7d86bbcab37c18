"""Slice-wise phase and absorption transfer functions.

For illumination u_i and a sample slice at defocus z, the intensity spectrum
of a weakly scattering object is linear in the slice's permittivity-contrast
spectra:

    I_hat(u) = I_i delta(u) + sum_m dz [ h_re(u, z_m) eps_re_hat(u, z_m)
                                        + h_im(u, z_m) eps_im_hat(u, z_m) ]

with the two-shifted-pupil kernels evaluated in ``tf_pair`` (see
``_kernels_np`` for the exact expressions). The depth kernel is
exp(+/- i (eta(u -/+ u_i) - eta_i) z): a pure phase whose axial frequency
spans the missing-cone band (2 - 2 sqrt(1 - NA^2)) / lambda.
"""

from __future__ import annotations

import numpy as np

from ._backend import tf_pair
from .leds import IlluminationSet
from .optics import FrequencyGrid, OpticalConfig, Pupil

__all__ = [
    "BackgroundIntensity",
    "TransferFunctionStack",
    "background_intensity",
    "compute_tf_slice",
    "compute_tf_stack",
    "normalize_tf",
    "band_support",
]


def band_support(cfg: OpticalConfig) -> tuple[float, float]:
    """(lateral, axial) extent of the measurable band in cycles/um.

    Lateral: 4*NA/lambda (full width; the support radius is half that).
    Axial: (2 - 2*sqrt(1 - NA^2))/lambda, the width swept by
    eta(u -/+ u_i) - eta_i over the pupil and brightfield illuminations.
    """
    lateral = 4.0 * cfg.na / cfg.wavelength_um
    axial = (2.0 - 2.0 * np.sqrt(1.0 - cfg.na**2)) / cfg.wavelength_um
    return lateral, axial


def background_intensity(illum: IlluminationSet, pupil: Pupil) -> "BackgroundIntensity":
    """Unscattered image intensity per LED: I_i = S(u_i) * |P(-u_i)|^2."""
    vals = np.array(
        [l.s * abs(pupil(-l.ux, -l.uy)) ** 2 for l in illum.leds], dtype=np.float64
    )
    if np.any(vals <= 0):
        bad = int(np.argmin(vals))
        led = illum.leds[bad]
        raise ValueError(
            f"background intensity vanishes for LED ({led.p},{led.q}): "
            f"|u_i| = {np.hypot(led.ux, led.uy):.6g} rad/um lies outside the pupil"
        )
    return BackgroundIntensity(vals)


class BackgroundIntensity:
    """Per-LED unscattered intensity, index-aligned with the illumination set."""

    def __init__(self, values: np.ndarray):
        self.values = np.asarray(values, dtype=np.float64)

    def __getitem__(self, i: int) -> float:
        return float(self.values[i])

    def __len__(self) -> int:
        return len(self.values)


def compute_tf_slice(u_i, eta_i: float, z: float, pupil: Pupil,
                     grid: FrequencyGrid, cfg: OpticalConfig,
                     source_intensity: float = 1.0):
    """Transfer-function pair (h_re, h_im) of one slice for one LED.

    Parameters
    ----------
    u_i : (ux, uy)
        Illumination transverse frequency in rad/um.
    eta_i : float
        Illumination axial frequency sqrt(k^2 - |u_i|^2).
    z : float
        Slice defocus in micrometers (focal plane is z = 0).
    source_intensity : float
        LED intensity S(u_i).

    Returns
    -------
    (h_re, h_im) : complex128 arrays of the grid shape, unshifted FFT order.
    """
    uix, uiy = float(u_i[0]), float(u_i[1])
    p0 = float(pupil(-uix, -uiy))
    return tf_pair(
        grid.ux, grid.uy, uix, uiy, float(eta_i), float(z),
        cfg.k, pupil.cutoff, cfg.k0, float(source_intensity), p0,
    )


class TransferFunctionStack:
    """Transfer functions for all (LED, slice) pairs, dense or lazy.

    Dense mode materializes complex arrays of shape (L, M, ny, nx); lazy mode
    recomputes slabs on demand with identical values, which keeps streamed
    reconstruction memory independent of L and M.
    """

    def __init__(self, illum: IlluminationSet, slice_z: np.ndarray, pupil: Pupil,
                 grid: FrequencyGrid, cfg: OpticalConfig, *, normalized: bool = False,
                 scale: np.ndarray | None = None, dense: tuple | None = None):
        self.illum = illum
        self.slice_z = np.asarray(slice_z, dtype=np.float64)
        self.pupil = pupil
        self.grid = grid
        self.cfg = cfg
        self.normalized = normalized
        # per-LED divisor applied to the raw kernels (1 for unnormalized)
        self._scale = scale if scale is not None else np.ones(len(illum))
        self._h_re, self._h_im = dense if dense is not None else (None, None)

    @property
    def n_leds(self) -> int:
        return len(self.illum)

    @property
    def n_slices(self) -> int:
        return len(self.slice_z)

    @property
    def is_dense(self) -> bool:
        return self._h_re is not None

    @property
    def h_re(self) -> np.ndarray:
        if not self.is_dense:
            raise ValueError("stack is lazy; use slab(l, m) or materialize()")
        return self._h_re

    @property
    def h_im(self) -> np.ndarray:
        if not self.is_dense:
            raise ValueError("stack is lazy; use slab(l, m) or materialize()")
        return self._h_im

    def slab(self, l: int, m: int):
        """(h_re, h_im) for LED index l and slice index m."""
        if self.is_dense:
            return self._h_re[l, m], self._h_im[l, m]
        led = self.illum.leds[l]
        hr, hi = compute_tf_slice(
            (led.ux, led.uy), led.eta, self.slice_z[m], self.pupil, self.grid,
            self.cfg, led.s,
        )
        s = self._scale[l]
        if s != 1.0:
            hr = hr / s
            hi = hi / s
        return hr, hi

    def materialize(self, memory_budget_bytes: int = 2**80) -> "TransferFunctionStack":
        """Dense copy of this stack (checks the memory budget)."""
        L, M = self.n_leds, self.n_slices
        ny, nx = self.grid.shape
        need = 2 * L * M * ny * nx * 16
        if need > memory_budget_bytes:
            raise MemoryError(
                f"dense stack needs {need} bytes for L={L}, M={M}, grid "
                f"{ny}x{nx}, over the budget of {memory_budget_bytes}; use "
                f"lazy=True and streamed accumulation instead"
            )
        h_re = np.empty((L, M, ny, nx), dtype=np.complex128)
        h_im = np.empty((L, M, ny, nx), dtype=np.complex128)
        for l in range(L):
            for m in range(M):
                h_re[l, m], h_im[l, m] = self.slab(l, m)
        return TransferFunctionStack(
            self.illum, self.slice_z, self.pupil, self.grid, self.cfg,
            normalized=self.normalized, scale=self._scale, dense=(h_re, h_im),
        )


def compute_tf_stack(illum: IlluminationSet, slice_z, pupil: Pupil,
                     grid: FrequencyGrid, cfg: OpticalConfig, *, lazy: bool = False,
                     memory_budget_bytes: int = 2**31) -> TransferFunctionStack:
    """Build transfer functions for every (LED, slice) pair.

    ``slice_z`` is a strictly increasing sequence of slice positions in
    micrometers. With ``lazy=True`` slabs are produced on demand; otherwise
    the dense arrays are materialized, subject to ``memory_budget_bytes``.
    """
    slice_z = np.asarray(slice_z, dtype=np.float64)
    if slice_z.ndim != 1 or len(slice_z) == 0:
        raise ValueError("slice_z must be a non-empty 1-D sequence")
    if len(slice_z) > 1 and np.any(np.diff(slice_z) <= 0):
        raise ValueError(f"slice_z must be strictly increasing, got {slice_z}")
    stack = TransferFunctionStack(illum, slice_z, pupil, grid, cfg)
    if lazy:
        return stack
    return stack.materialize(memory_budget_bytes)


def normalize_tf(stack: TransferFunctionStack,
                 background: BackgroundIntensity) -> TransferFunctionStack:
    """Divide each LED's kernels by its unscattered intensity I_i.

    The normalized kernels pair with the normalized data (I - I_i)/I_i; the
    source intensity S cancels in the ratio.
    """
    if stack.normalized:
        raise ValueError("stack is already normalized")
    if len(background) != stack.n_leds:
        raise ValueError(
            f"background has {len(background)} entries for {stack.n_leds} LEDs"
        )
    scale = stack._scale * background.values
    if stack.is_dense:
        div = background.values[:, None, None, None]
        dense = (stack._h_re / div, stack._h_im / div)
    else:
        dense = None
    return TransferFunctionStack(
        stack.illum, stack.slice_z, stack.pupil, stack.grid, stack.cfg,
        normalized=True, scale=scale, dense=dense,
    )
