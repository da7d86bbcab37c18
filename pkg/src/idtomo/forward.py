"""Forward intensity models for angled plane-wave illumination.

Three models of the camera image I(x, 0 | u_i):

* first-Born scattered field plus interference with the unscattered beam
  (``simulate_intensity_born``), linear in the field but quadratic in the
  detected intensity unless the scattered-scattered term is dropped;
* the slice-wise transfer-function model (``simulate_intensity_linear``),
  strictly linear in the permittivity contrast and algebraically identical
  to the Born model with keep_ss=False;
* a split-step multislice model (``simulate_intensity_multislice``) that
  keeps multiple forward scattering and serves as the strong-scattering
  oracle.

The scattered field is marched and filtered as a tilt envelope: the full
field is exp(-i u_i.x) * psi(x), and a plane-wave component of psi at DFT
bin w has axial frequency eta(w - u_i), evaluated analytically so off-grid
illumination frequencies lose no precision. Propagation over a signed axial
displacement D multiplies bin w by exp(-i eta(w - u_i) D); illumination
travels toward decreasing z.
"""

from __future__ import annotations

import numpy as np

from .leds import IlluminationSet
from .optics import FrequencyGrid, OpticalConfig, Pupil
from .transfer import TransferFunctionStack, background_intensity

__all__ = [
    "PermittivityVolume",
    "IntensityDataset",
    "born_scattered_field",
    "simulate_intensity_born",
    "simulate_intensity_linear",
    "simulate_intensity_multislice",
    "angular_spectrum_propagate",
    "add_noise",
]


class PermittivityVolume:
    """Complex permittivity-contrast slices on a regular transverse grid.

    Parameters
    ----------
    delta_eps : array (M, ny, nx), complex
        Per-slice contrast; real part delays phase, imaginary part absorbs.
    slice_z : array (M,)
        Slice positions in micrometers, strictly increasing; z = 0 is the
        native focal plane. Gaps must be whole multiples of dz, so sparse
        volumes (a few slabs far apart) are representable without storing
        the empty space between them.
    dz : float
        Slice thickness in micrometers; the quadrature weight of the
        z-integral in both the forward and inverse directions.
    """

    def __init__(self, delta_eps, slice_z, dz: float):
        delta_eps = np.asarray(delta_eps, dtype=np.complex128)
        slice_z = np.atleast_1d(np.asarray(slice_z, dtype=np.float64))
        if delta_eps.ndim != 3:
            raise ValueError(f"delta_eps must be (M, ny, nx), got {delta_eps.shape}")
        if len(slice_z) != delta_eps.shape[0]:
            raise ValueError(
                f"{delta_eps.shape[0]} slices but {len(slice_z)} z positions"
            )
        if dz <= 0:
            raise ValueError(f"dz must be positive, got {dz}")
        gaps = np.diff(slice_z)
        if np.any(gaps <= 0):
            raise ValueError(f"slice_z must be strictly increasing, got {slice_z}")
        steps = gaps / dz
        if np.any(np.abs(steps - np.round(steps)) > 1e-6 * np.maximum(steps, 1.0)):
            raise ValueError(
                f"slice gaps must be whole multiples of dz={dz}, got gaps {gaps}"
            )
        self.delta_eps = delta_eps
        self.slice_z = slice_z
        self.dz = float(dz)

    @property
    def n_slices(self) -> int:
        return self.delta_eps.shape[0]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.delta_eps.shape

    @property
    def eps_re(self) -> np.ndarray:
        return self.delta_eps.real

    @property
    def eps_im(self) -> np.ndarray:
        return self.delta_eps.imag

    def is_uniform(self) -> bool:
        """True when consecutive slices are exactly dz apart."""
        if self.n_slices < 2:
            return True
        gaps = np.diff(self.slice_z)
        return bool(np.all(np.abs(gaps - self.dz) <= 1e-6 * self.dz))

    def scaled(self, factor: complex) -> "PermittivityVolume":
        return PermittivityVolume(factor * self.delta_eps, self.slice_z, self.dz)


class IntensityDataset:
    """Per-LED intensity images with their unscattered backgrounds.

    ``background`` may be None for externally acquired data; consumers then
    estimate I_i from the image mean.
    """

    PROVENANCES = ("born_sim", "multislice_sim", "external")

    def __init__(self, images, illum: IlluminationSet, cfg: OpticalConfig,
                 background=None, provenance: str = "external"):
        images = np.asarray(images, dtype=np.float64)
        if images.ndim != 3 or images.shape[0] != len(illum):
            raise ValueError(
                f"images must be ({len(illum)}, ny, nx), got {images.shape}"
            )
        if provenance not in self.PROVENANCES:
            raise ValueError(f"unknown provenance {provenance!r}")
        if background is not None:
            background = np.asarray(background, dtype=np.float64)
            if background.shape != (len(illum),):
                raise ValueError(
                    f"background must have one entry per LED, got {background.shape}"
                )
            if np.any(background <= 0):
                raise ValueError("background intensities must be positive")
        self.images = images
        self.illum = illum
        self.cfg = cfg
        self.background = background
        self.provenance = provenance

    def __len__(self) -> int:
        return self.images.shape[0]


def _tilt(cfg: OpticalConfig, ux: float, uy: float) -> np.ndarray:
    """exp(-i u_i.x) sampled on the real-space grid."""
    x = cfg.dx * np.arange(cfg.nx)
    y = cfg.dy * np.arange(cfg.ny)
    return np.exp(-1j * uy * y)[:, None] * np.exp(-1j * ux * x)[None, :]


def _born_envelope_spectrum(vol: PermittivityVolume, uix: float, uiy: float,
                            eta_i: float, grid: FrequencyGrid, cfg: OpticalConfig,
                            source_intensity: float) -> np.ndarray:
    """Envelope spectrum of the first-Born scattered field at z = 0.

    q_hat(w) = (i k0^2 / 2) sqrt(S) sum_m dz FT{d_eps_m}(w)
               * exp(+i (eta(w - u_i) - eta_i) z_m) / eta(w - u_i)

    masked to zero where eta(w - u_i) is not strictly positive.
    """
    eta_s, mask = grid.shifted_eta(-uix, -uiy)
    open_bins = mask & (eta_s > 0)
    acc = np.zeros(grid.shape, dtype=np.complex128)
    for m in range(vol.n_slices):
        spec = np.fft.fft2(vol.delta_eps[m])
        acc += spec * np.exp(1j * (eta_s - eta_i) * vol.slice_z[m])
    amp = 0.5j * cfg.k0**2 * np.sqrt(source_intensity) * vol.dz
    return np.where(open_bins, amp * acc / np.where(open_bins, eta_s, 1.0), 0.0)


def born_scattered_field(vol: PermittivityVolume, u_i, eta_i: float,
                         grid: FrequencyGrid, cfg: OpticalConfig,
                         source_intensity: float = 1.0) -> np.ndarray:
    """First-Born scattered field f_s(x, 0 | u_i), unfiltered by the pupil."""
    if vol.shape[1:] != grid.shape:
        raise ValueError(
            f"volume grid {vol.shape[1:]} does not match frequency grid {grid.shape}"
        )
    uix, uiy = float(u_i[0]), float(u_i[1])
    q_hat = _born_envelope_spectrum(vol, uix, uiy, float(eta_i), grid, cfg,
                                    source_intensity)
    return _tilt(cfg, uix, uiy) * np.fft.ifft2(q_hat)


def simulate_intensity_born(vol: PermittivityVolume, illum: IlluminationSet,
                            pupil: Pupil, grid: FrequencyGrid, cfg: OpticalConfig,
                            keep_ss: bool = False) -> IntensityDataset:
    """Intensity images under the first-Born model.

    With keep_ss=False the scattered-scattered term |f_s|^2 is dropped and
    the image is exactly linear in the contrast:
    I = I_i + 2 sqrt(S) P(-u_i) Re{filtered envelope}. With keep_ss=True the
    full modulus-squared of the filtered total field is returned.
    """
    if vol.shape[1:] != grid.shape:
        raise ValueError(
            f"volume grid {vol.shape[1:]} does not match frequency grid {grid.shape}"
        )
    bg = background_intensity(illum, pupil)
    images = np.empty((len(illum),) + grid.shape, dtype=np.float64)
    for l, led in enumerate(illum.leds):
        q_hat = _born_envelope_spectrum(vol, led.ux, led.uy, led.eta, grid, cfg,
                                        led.s)
        q_hat *= pupil(grid.ux - led.ux, grid.uy - led.uy)
        q_f = np.fft.ifft2(q_hat)
        p0 = float(pupil(-led.ux, -led.uy))
        if keep_ss:
            images[l] = np.abs(np.sqrt(led.s) * p0 + q_f) ** 2
        else:
            images[l] = bg[l] + 2.0 * np.sqrt(led.s) * p0 * q_f.real
    return IntensityDataset(images, illum, cfg, background=bg.values,
                            provenance="born_sim")


def simulate_intensity_linear(vol: PermittivityVolume,
                              tf_stack: TransferFunctionStack,
                              illum: IlluminationSet) -> IntensityDataset:
    """Intensity images from the slice-wise transfer-function model.

    I_hat(u | u_i) = I_i delta(u) + sum_m dz [ h_re(u, z_m) eps_re_hat(m)
                                              + h_im(u, z_m) eps_im_hat(m) ]

    This is the model the reconstructor inverts; it agrees with
    simulate_intensity_born(keep_ss=False) identically.
    """
    if tf_stack.normalized:
        raise ValueError("simulate_intensity_linear needs an unnormalized stack")
    if vol.shape[1:] != tf_stack.grid.shape:
        raise ValueError(
            f"volume grid {vol.shape[1:]} does not match TF grid "
            f"{tf_stack.grid.shape}"
        )
    if vol.n_slices != tf_stack.n_slices or not np.allclose(
            vol.slice_z, tf_stack.slice_z, rtol=0, atol=1e-9):
        raise ValueError(
            f"volume slices {vol.slice_z} do not match TF slices "
            f"{tf_stack.slice_z}"
        )
    if len(illum) != tf_stack.n_leds or any(
            a.p != b.p or a.q != b.q
            for a, b in zip(illum.leds, tf_stack.illum.leds)):
        raise ValueError("illumination set is misaligned with the TF stack")

    spec_re = np.fft.fft2(vol.eps_re, axes=(-2, -1))
    spec_im = np.fft.fft2(vol.eps_im, axes=(-2, -1))
    bg = background_intensity(illum, tf_stack.pupil)
    images = np.empty((len(illum),) + tf_stack.grid.shape, dtype=np.float64)
    for l in range(len(illum)):
        acc = np.zeros(tf_stack.grid.shape, dtype=np.complex128)
        for m in range(vol.n_slices):
            h_re, h_im = tf_stack.slab(l, m)
            acc += h_re * spec_re[m] + h_im * spec_im[m]
        images[l] = bg[l] + np.fft.ifft2(vol.dz * acc).real
    return IntensityDataset(images, illum, cfg=tf_stack.cfg, background=bg.values,
                            provenance="born_sim")


def _raised_cosine_window(ny: int, nx: int, width: int) -> np.ndarray:
    """Separable edge window: cosine ramp of ``width`` pixels on each border."""

    def ramp(n: int) -> np.ndarray:
        w = np.ones(n)
        t = min(width, n // 2)
        if t > 0:
            edge = 0.5 * (1.0 - np.cos(np.pi * (np.arange(t) + 0.5) / t))
            w[:t] = edge
            w[n - t:] = edge[::-1]
        return w

    return ramp(ny)[:, None] * ramp(nx)[None, :]


def simulate_intensity_multislice(vol: PermittivityVolume, illum: IlluminationSet,
                                  pupil: Pupil, grid: FrequencyGrid,
                                  cfg: OpticalConfig, *,
                                  edge_taper_px: int = 0) -> IntensityDataset:
    """Split-step multislice intensity images (multiple forward scattering).

    Per LED: start from the unscattered envelope at the entrance slice
    (largest z; illumination travels toward decreasing z), alternate the
    thin-slab transmittance t_m = exp(i k0 dz d_eps_m / (2 n0)) with
    band-limited angular-spectrum steps between slice planes, then refocus
    the exit envelope to z = 0, apply the pupil, and detect |psi|^2. Gaps in
    a sparse volume are crossed in a single propagation step, which is exact
    for homogeneous background. ``edge_taper_px`` > 0 applies a raised-cosine
    window of that width to each contrast slice to soften wraparound from
    the periodic transform boundary.
    """
    if vol.shape[1:] != grid.shape:
        raise ValueError(
            f"volume grid {vol.shape[1:]} does not match frequency grid {grid.shape}"
        )
    d_eps = vol.delta_eps
    if edge_taper_px > 0:
        d_eps = d_eps * _raised_cosine_window(*grid.shape, edge_taper_px)
    # per-slice transmittance is illumination-independent
    trans = np.exp(0.5j * cfg.k0 * vol.dz * d_eps / cfg.medium_index)
    z = vol.slice_z
    M = vol.n_slices
    bg = background_intensity(illum, pupil)
    images = np.empty((len(illum),) + grid.shape, dtype=np.float64)
    for l, led in enumerate(illum.leds):
        eta_s, mask = grid.shifted_eta(-led.ux, -led.uy)
        psi = np.full(grid.shape, np.sqrt(led.s), dtype=np.complex128)
        for m in range(M - 1, -1, -1):
            psi = psi * trans[m]
            if m > 0:
                step = z[m] - z[m - 1]
                psi = np.fft.ifft2(np.fft.fft2(psi) * mask
                                   * np.exp(1j * eta_s * step))
        # exit plane z[0] to focal plane 0, fused with the pupil filter
        spec = np.fft.fft2(psi) * np.exp(1j * eta_s * z[0]) * mask
        spec *= pupil(grid.ux - led.ux, grid.uy - led.uy)
        psi = np.fft.ifft2(spec)
        images[l] = np.abs(psi) ** 2
    return IntensityDataset(images, illum, cfg, background=bg.values,
                            provenance="multislice_sim")


def angular_spectrum_propagate(field: np.ndarray, distance: float,
                               grid: FrequencyGrid,
                               cfg: OpticalConfig) -> np.ndarray:
    """Propagate a 2D field by multiplying its spectrum with exp(i eta(u) d).

    Evanescent bins are zeroed; on the propagating band the kernel is a pure
    phase, so in-band power is conserved and +d then -d is the identity.
    """
    if field.shape != grid.shape:
        raise ValueError(f"field shape {field.shape} does not match grid {grid.shape}")
    spec = np.fft.fft2(field) * grid.mask * np.exp(1j * grid.eta * distance)
    return np.fft.ifft2(spec)


def add_noise(ds: IntensityDataset, noise_std: float, seed: int) -> IntensityDataset:
    """Additive white Gaussian noise with absolute standard deviation.

    Noise is drawn per LED in index order from one seeded generator, so the
    result is deterministic regardless of how the images were produced.
    """
    if noise_std < 0:
        raise ValueError(f"noise_std must be >= 0, got {noise_std}")
    if noise_std == 0:
        return ds
    rng = np.random.default_rng(seed)
    images = ds.images.copy()
    for l in range(len(ds)):
        images[l] += rng.normal(0.0, noise_std, size=images[l].shape)
    return IntensityDataset(images, ds.illum, ds.cfg, background=ds.background,
                            provenance=ds.provenance)
