"""Optical configuration, frequency grids, and the microscope pupil.

Conventions used throughout the package:

* lengths are in micrometers, spatial frequencies are angular (rad/um)
* the illuminating plane wave is exp(-i(u_i.x + eta_i z)) and the forward
  Fourier transform uses the matching exp(-i u.x) kernel, i.e. ``np.fft.fft2``
  with frequencies ``2*pi*np.fft.fftfreq(n, d=dx)``
* frequency arrays are kept in natural (unshifted) FFT ordering with axes
  (y, x); all modules share this layout
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["OpticalConfig", "FrequencyGrid", "Pupil"]


@dataclass(frozen=True)
class OpticalConfig:
    """Imaging-system parameters and the sampling grid they are used on.

    Parameters
    ----------
    wavelength_um : float
        Vacuum wavelength in micrometers.
    na : float
        Objective numerical aperture, 0 < na < medium_index.
    nx, ny : int
        Grid size in pixels (x = columns, y = rows).
    dx, dy : float
        Pixel pitch in micrometers.
    medium_index : float
        Background refractive index n0 (1.0 for air).
    """

    wavelength_um: float
    na: float
    nx: int
    ny: int
    dx: float
    dy: float = field(default=0.0)
    medium_index: float = 1.0

    def __post_init__(self):
        if self.dy == 0.0:
            object.__setattr__(self, "dy", self.dx)
        if self.wavelength_um <= 0:
            raise ValueError(f"wavelength must be positive, got {self.wavelength_um}")
        if self.medium_index < 1.0:
            raise ValueError(f"medium index must be >= 1, got {self.medium_index}")
        if not 0 < self.na < self.medium_index:
            raise ValueError(
                f"NA must satisfy 0 < NA < n0, got NA={self.na}, n0={self.medium_index}"
            )
        if self.nx < 1 or self.ny < 1:
            raise ValueError(f"grid must be at least 1x1, got {self.nx}x{self.ny}")
        if self.dx <= 0 or self.dy <= 0:
            raise ValueError(f"pixel pitch must be positive, got dx={self.dx}, dy={self.dy}")
        # the intensity spectrum extends to 2*NA/lambda cycles/um per axis;
        # the grid Nyquist frequency has to cover it
        band = 2.0 * self.na / self.wavelength_um
        for name, d in (("dx", self.dx), ("dy", self.dy)):
            nyq = 1.0 / (2.0 * d)
            if nyq < band * (1.0 - 1e-12):
                raise ValueError(
                    f"Nyquist violation: 1/(2*{name}) = {nyq:.6g} cycles/um < "
                    f"measurement band 2*NA/lambda = {band:.6g} cycles/um"
                )

    @property
    def k0(self) -> float:
        """Vacuum wavenumber 2*pi/lambda in rad/um."""
        return 2.0 * np.pi / self.wavelength_um

    @property
    def k(self) -> float:
        """Medium wavenumber n0*k0 in rad/um."""
        return self.medium_index * self.k0

    @property
    def eps0(self) -> float:
        """Background permittivity n0**2."""
        return self.medium_index**2

    @property
    def pupil_cutoff(self) -> float:
        """Pupil radius NA*k0 in rad/um."""
        return self.na * self.k0

    def to_dict(self) -> dict:
        return {
            "wavelength_um": self.wavelength_um,
            "na": self.na,
            "nx": self.nx,
            "ny": self.ny,
            "dx": self.dx,
            "dy": self.dy,
            "medium_index": self.medium_index,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OpticalConfig":
        return cls(**d)


class FrequencyGrid:
    """Angular spatial-frequency grid matching ``np.fft.fft2`` bin ordering.

    Attributes
    ----------
    ux, uy : ndarray, shape (ny, nx)
        Transverse frequency components in rad/um, unshifted FFT order.
    eta : ndarray, shape (ny, nx)
        Axial frequency sqrt(k^2 - |u|^2), zero outside the propagating band.
    mask : ndarray of bool
        True where |u| <= k (propagating bins).
    """

    def __init__(self, cfg: OpticalConfig):
        self.cfg = cfg
        fx = 2.0 * np.pi * np.fft.fftfreq(cfg.nx, d=cfg.dx)
        fy = 2.0 * np.pi * np.fft.fftfreq(cfg.ny, d=cfg.dy)
        self.ux, self.uy = np.meshgrid(fx, fy, indexing="xy")
        self.k = cfg.k
        r2 = self.ux**2 + self.uy**2
        self.mask = r2 <= self.k**2
        self.eta = np.where(self.mask, np.sqrt(np.maximum(self.k**2 - r2, 0.0)), 0.0)

    @property
    def shape(self) -> tuple[int, int]:
        return self.ux.shape

    def shifted_eta(self, sx: float, sy: float):
        """eta(u + (sx, sy)) evaluated analytically on the grid bins.

        Returns (eta, mask); eta is zero on evanescent bins. The shift is a
        continuous frequency, so off-grid illumination angles stay exact.
        """
        wx = self.ux + sx
        wy = self.uy + sy
        r2 = wx**2 + wy**2
        mask = r2 <= self.k**2
        eta = np.where(mask, np.sqrt(np.maximum(self.k**2 - r2, 0.0)), 0.0)
        return eta, mask


class Pupil:
    """Ideal circular pupil: indicator of |u| <= NA*k0.

    Evaluated analytically so shifted arguments u +/- u_i do not get rounded
    to grid bins.
    """

    def __init__(self, cfg: OpticalConfig):
        self.cfg = cfg
        self.cutoff = cfg.pupil_cutoff

    def __call__(self, wx, wy):
        """Pupil value at frequency (wx, wy); accepts scalars or arrays."""
        r2 = np.asarray(wx) ** 2 + np.asarray(wy) ** 2
        return (r2 <= self.cutoff**2 * (1.0 + 1e-15)).astype(np.float64)

    def sample(self, grid: FrequencyGrid) -> np.ndarray:
        """Pupil sampled on the grid bins (for filtering and display)."""
        return self(grid.ux, grid.uy)
