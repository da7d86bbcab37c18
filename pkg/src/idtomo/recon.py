"""Slice-wise Tikhonov reconstruction from normalized intensity spectra.

Measurements are reduced to g = (I - I_i)/I_i per LED, whose spectrum obeys

    g_hat(u) = sum_m dz [ h_re(u, z_m) eps_re_hat(m) + h_im(u, z_m) eps_im_hat(m) ]

with background-normalized kernels h = H/I_i. For every frequency bin and
slice this is a two-unknown least-squares problem over LEDs; with quadratic
penalties alpha, beta its minimizer is closed-form:

    eps_re_hat = [(a_ii + beta) b_r - conj(a_ri) b_i] / A
    eps_im_hat = [(a_rr + alpha) b_i - a_ri b_r] / A
    A = (a_rr + alpha)(a_ii + beta) - |a_ri|^2

where a_rr = sum_l |h_re|^2, a_ii = sum_l |h_im|^2, a_ri = sum_l h_re conj(h_im),
b_r = sum_l conj(h_re) g_hat, b_i = sum_l conj(h_im) g_hat (dz folded into h).
A > 0 whenever alpha, beta > 0 by Cauchy-Schwarz. Accumulation streams over
LEDs, so memory stays at the five per-slice sums plus one LED's working
arrays regardless of how many LEDs contribute.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._backend import acc_update
from .forward import IntensityDataset
from .leds import IlluminationSet
from .optics import FrequencyGrid, OpticalConfig, Pupil
from .transfer import TransferFunctionStack, compute_tf_slice

__all__ = [
    "NormalizedData",
    "ReconParams",
    "Accumulators",
    "ReconstructionVolume",
    "SlabCounter",
    "normalize_dataset",
    "accumulate",
    "solve_tikhonov",
    "reconstruct",
    "height_map",
]


class SlabCounter:
    """Counts live 2D working arrays during streamed accumulation.

    One slab is one (ny, nx) array, real or complex. The accumulation stage
    holds 5 slabs per slice plus at most 3 transient slabs for the LED being
    consumed, so ``peak`` stays bounded by the slice count alone.
    """

    def __init__(self):
        self.current = 0
        self.peak = 0

    def alloc(self, n: int = 1):
        self.current += n
        if self.current > self.peak:
            self.peak = self.current

    def free(self, n: int = 1):
        self.current -= n


class NormalizedData:
    """Per-LED spectra of g = (I - I_i)/I_i, with the I_i that was used."""

    def __init__(self, g_hat: np.ndarray, i_bg: np.ndarray, illum: IlluminationSet):
        self.g_hat = g_hat
        self.i_bg = i_bg
        self.illum = illum

    def __len__(self) -> int:
        return self.g_hat.shape[0]


@dataclass
class ReconParams:
    """Reconstruction depths, quadrature weight, and regularization.

    Absolute alpha/beta win when given. Otherwise alpha_scale/beta_scale
    set the regularizer relative to max(a_rr + a_ii) at solve time, which
    keeps it covariant with dataset scale; both None means scale 1e-2.
    """

    slice_z: np.ndarray
    dz: float
    alpha: float | None = None
    beta: float | None = None
    alpha_scale: float | None = None
    beta_scale: float | None = None

    def __post_init__(self):
        self.slice_z = np.atleast_1d(np.asarray(self.slice_z, dtype=np.float64))
        if len(self.slice_z) > 1 and np.any(np.diff(self.slice_z) <= 0):
            raise ValueError(f"slice_z must be strictly increasing, got {self.slice_z}")
        if self.dz <= 0:
            raise ValueError(f"dz must be positive, got {self.dz}")
        for name in ("alpha", "beta", "alpha_scale", "beta_scale"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ValueError(f"{name} must be positive, got {v}")
        if self.alpha is not None and self.alpha_scale is not None:
            raise ValueError("give alpha or alpha_scale, not both")
        if self.beta is not None and self.beta_scale is not None:
            raise ValueError("give beta or beta_scale, not both")

    def to_dict(self) -> dict:
        return {
            "slice_z": [float(z) for z in self.slice_z],
            "dz": self.dz,
            "alpha": self.alpha,
            "beta": self.beta,
            "alpha_scale": self.alpha_scale,
            "beta_scale": self.beta_scale,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ReconParams":
        return cls(slice_z=d["slice_z"], dz=d["dz"], alpha=d.get("alpha"),
                   beta=d.get("beta"), alpha_scale=d.get("alpha_scale"),
                   beta_scale=d.get("beta_scale"))


class Accumulators:
    """The five per-slice LED sums of the normal equations."""

    def __init__(self, a_rr, a_ii, a_ri, b_r, b_i, n_leds: int = 0):
        self.a_rr = a_rr
        self.a_ii = a_ii
        self.a_ri = a_ri
        self.b_r = b_r
        self.b_i = b_i
        self.n_leds = n_leds

    @classmethod
    def zeros(cls, n_slices: int, shape: tuple[int, int],
              counter: SlabCounter | None = None) -> "Accumulators":
        if counter is not None:
            counter.alloc(5 * n_slices)
        full = (n_slices,) + shape
        return cls(
            a_rr=np.zeros(full, dtype=np.float64),
            a_ii=np.zeros(full, dtype=np.float64),
            a_ri=np.zeros(full, dtype=np.complex128),
            b_r=np.zeros(full, dtype=np.complex128),
            b_i=np.zeros(full, dtype=np.complex128),
        )

    @property
    def n_slices(self) -> int:
        return self.a_rr.shape[0]

    def update_slab(self, m: int, h_re: np.ndarray, h_im: np.ndarray,
                    g_hat: np.ndarray, dz: float):
        """Add one (LED, slice) contribution in place; dz folds into h."""
        acc_update(self.a_rr[m], self.a_ii[m], self.a_ri[m], self.b_r[m],
                   self.b_i[m], h_re, h_im, g_hat, float(dz))


class ReconstructionVolume:
    """Reconstructed phase (real contrast) and absorption (imaginary) slices."""

    def __init__(self, phase: np.ndarray, absorption: np.ndarray,
                 slice_z: np.ndarray):
        self.phase = phase
        self.absorption = absorption
        self.slice_z = np.asarray(slice_z, dtype=np.float64)

    @property
    def n_slices(self) -> int:
        return self.phase.shape[0]

    @property
    def delta_eps(self) -> np.ndarray:
        return self.phase + 1j * self.absorption

    def refractive_index(self, cfg: OpticalConfig) -> np.ndarray:
        """Presentation view n = sqrt(eps0 + delta_eps), principal branch."""
        return np.sqrt(cfg.eps0 + self.delta_eps.astype(np.complex128))


def normalize_dataset(ds: IntensityDataset) -> NormalizedData:
    """Spectra of (I - I_i)/I_i; I_i from the recorded background or,
    for external data without one, the per-image mean."""
    if ds.background is not None:
        i_bg = ds.background
    else:
        i_bg = ds.images.mean(axis=(1, 2))
        if np.any(i_bg <= 0):
            bad = int(np.argmin(i_bg))
            raise ValueError(
                f"estimated background for LED {bad} is {i_bg[bad]:.6g}; "
                f"cannot normalize"
            )
    g = (ds.images - i_bg[:, None, None]) / i_bg[:, None, None]
    return NormalizedData(np.fft.fft2(g, axes=(-2, -1)), i_bg, ds.illum)


def _check_alignment(a: IlluminationSet, b: IlluminationSet, what: str):
    if len(a) != len(b) or any(
            x.p != y.p or x.q != y.q for x, y in zip(a.leds, b.leds)):
        raise ValueError(f"misaligned LED ordering between {what}")


def _led_order(illum: IlluminationSet) -> list[int]:
    # reduction order is keyed by the lattice index, not list position, so
    # jointly permuted (data, TF) pairs reduce to bit-identical sums
    return sorted(range(len(illum)), key=lambda l: (illum.leds[l].p,
                                                    illum.leds[l].q))


def accumulate(norm: NormalizedData, tf: TransferFunctionStack,
               dz: float) -> Accumulators:
    """Reduce all LEDs into the five per-slice sums, in LED-index order."""
    if not tf.normalized:
        raise ValueError("accumulate needs a normalized transfer-function stack")
    _check_alignment(norm.illum, tf.illum, "data and transfer functions")
    acc = Accumulators.zeros(tf.n_slices, tf.grid.shape)
    for l in _led_order(tf.illum):
        g_hat = norm.g_hat[l]
        for m in range(tf.n_slices):
            h_re, h_im = tf.slab(l, m)
            acc.update_slab(m, h_re, h_im, g_hat, dz)
    acc.n_leds = len(norm)
    return acc


def solve_tikhonov(acc: Accumulators, params: ReconParams,
                   imag_tol: float = 1e-8) -> ReconstructionVolume:
    """Closed-form per-bin solve of the regularized normal equations.

    The spatial slices come out real for Hermitian-symmetric data; the
    imaginary residue is checked against ``imag_tol`` (relative energy)
    before being discarded.
    """
    if acc.n_slices != len(params.slice_z):
        raise ValueError(
            f"accumulators hold {acc.n_slices} slices, params request "
            f"{len(params.slice_z)}"
        )
    alpha, beta = params.alpha, params.beta
    if alpha is None or beta is None:
        scale = float(np.max(acc.a_rr + acc.a_ii))
        if scale <= 0:
            scale = 1.0
        if alpha is None:
            alpha = (params.alpha_scale or 1e-2) * scale
        if beta is None:
            beta = (params.beta_scale or 1e-2) * scale

    a_rr = acc.a_rr + alpha
    a_ii = acc.a_ii + beta
    det = a_rr * a_ii - (acc.a_ri.real**2 + acc.a_ri.imag**2)
    if not np.all(det > 0):
        raise AssertionError(
            "Tikhonov denominator is not positive; accumulators are corrupt"
        )
    spec_re = (a_ii * acc.b_r - np.conj(acc.a_ri) * acc.b_i) / det
    spec_im = (a_rr * acc.b_i - acc.a_ri * acc.b_r) / det

    phase = np.empty(acc.a_rr.shape, dtype=np.float64)
    absorption = np.empty_like(phase)
    for m in range(acc.n_slices):
        x_re = np.fft.ifft2(spec_re[m])
        x_im = np.fft.ifft2(spec_im[m])
        # judge the residue against the slice as a whole: an all-but-empty
        # channel (pure-phase object, say) is numeric dust, not bad data
        total = float(np.sum(x_re.real**2 + x_re.imag**2)
                      + np.sum(x_im.real**2 + x_im.imag**2))
        residue = float(np.sum(x_re.imag**2) + np.sum(x_im.imag**2))
        if total > 0 and residue > imag_tol * total:
            raise ValueError(
                f"slice {m}: imaginary residue {residue / total:.3g} of "
                f"energy exceeds tolerance; data lacks Hermitian symmetry"
            )
        phase[m] = x_re.real
        absorption[m] = x_im.real
    return ReconstructionVolume(phase, absorption, params.slice_z)


def reconstruct(ds: IntensityDataset, illum: IlluminationSet, pupil: Pupil,
                grid: FrequencyGrid, cfg: OpticalConfig, params: ReconParams,
                counter: SlabCounter | None = None) -> ReconstructionVolume:
    """Full streamed pipeline: normalize, accumulate LED by LED, solve.

    Transfer functions are generated and consumed one (LED, slice) pair at a
    time; nothing of size L x M is ever resident. ``counter`` (if given)
    tracks live slabs for the memory contract: 5 per slice persistent plus
    at most 3 transient.
    """
    _check_alignment(ds.illum, illum, "dataset and illumination argument")
    if ds.background is not None:
        i_bg = ds.background
    else:
        i_bg = ds.images.mean(axis=(1, 2))
        if np.any(i_bg <= 0):
            raise ValueError("estimated background must be positive")
    M = len(params.slice_z)
    acc = Accumulators.zeros(M, grid.shape, counter)
    for l in _led_order(illum):
        led = illum.leds[l]
        if counter is not None:
            counter.alloc(1)
        g_hat = np.fft.fft2((ds.images[l] - i_bg[l]) / i_bg[l])
        for m in range(M):
            if counter is not None:
                counter.alloc(2)
            h_re, h_im = compute_tf_slice(
                (led.ux, led.uy), led.eta, params.slice_z[m], pupil, grid, cfg,
                led.s,
            )
            h_re /= i_bg[l]
            h_im /= i_bg[l]
            acc.update_slab(m, h_re, h_im, g_hat, params.dz)
            if counter is not None:
                counter.free(2)
        if counter is not None:
            counter.free(1)
    acc.n_leds = len(illum)
    imag_tol = 1e-2 if ds.provenance == "external" else 1e-8
    return solve_tikhonov(acc, params, imag_tol=imag_tol)


def height_map(recon: ReconstructionVolume, slice_index: int, n_ph: float,
               dz: float) -> np.ndarray:
    """Convert a reconstructed phase slice to feature height.

    h = delta_eps * dz / (n_ph^2 - 1) for a thin structure of refractive
    index n_ph averaged over a slab of thickness dz. The phase DC never
    reaches the detector, so heights are centered around zero.
    """
    if n_ph <= 1:
        raise ValueError(f"n_ph must exceed 1, got {n_ph}")
    return recon.phase[slice_index] * dz / (n_ph**2 - 1.0)
