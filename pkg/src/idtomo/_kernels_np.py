"""Pure-numpy implementations of the inner-loop kernels.

These are the reference semantics; the compiled extension in ``_core.pyx``
implements the same functions with fused loops. Keep the two in sync.
"""

from __future__ import annotations

import numpy as np


def tf_pair(ux, uy, uix, uiy, eta_i, z, k, cutoff, k0, source, p0):
    """Phase and absorption transfer functions of one slice for one LED.

    Evaluates, on the frequency grid (ux, uy), the two shifted-pupil terms

        T1 = P(u - u_i) exp(+i (eta(u - u_i) - eta_i) z) / eta(u - u_i)
        T2 = P(-u - u_i) exp(-i (eta(u + u_i) - eta_i) z) / eta(u + u_i)

    with eta(w) = sqrt(k^2 - |w|^2) masked to zero outside the propagating
    band, and returns

        h_re = i (k0^2 / 2) S P(-u_i) (T1 - T2)      (phase contrast)
        h_im = -(k0^2 / 2) S P(-u_i) (T1 + T2)       (absorption contrast)

    Shifted arguments use the continuous illumination frequency, so off-grid
    u_i is exact. ``p0`` is the pupil value at -u_i, ``source`` the LED
    intensity S.
    """
    k2 = k * k
    c2 = cutoff * cutoff
    amp = 0.5 * k0 * k0 * source * p0

    wx = ux - uix
    wy = uy - uiy
    r2 = wx * wx + wy * wy
    in1 = r2 <= c2
    eta1 = np.sqrt(np.maximum(k2 - r2, 0.0), where=in1, out=np.ones_like(r2))
    ph1 = (eta1 - eta_i) * z
    t1 = np.where(in1, (np.cos(ph1) + 1j * np.sin(ph1)) / eta1, 0.0)

    wx = ux + uix
    wy = uy + uiy
    r2 = wx * wx + wy * wy
    in2 = r2 <= c2
    eta2 = np.sqrt(np.maximum(k2 - r2, 0.0), where=in2, out=np.ones_like(r2))
    ph2 = (eta2 - eta_i) * z
    t2 = np.where(in2, (np.cos(ph2) - 1j * np.sin(ph2)) / eta2, 0.0)

    h_re = 1j * amp * (t1 - t2)
    h_im = -amp * (t1 + t2)
    return h_re, h_im


def acc_update(a_rr, a_ii, a_ri, b_r, b_i, h_re, h_im, g_hat, dz):
    """Accumulate one (LED, slice) term into the normal-equation fields.

    The quadrature weight dz is folded into the transfer functions here so
    the forward Riemann sum and the inverse accumulators use identical
    weights. Updates are in place.
    """
    hr = dz * h_re
    hi = dz * h_im
    a_rr += hr.real * hr.real + hr.imag * hr.imag
    a_ii += hi.real * hi.real + hi.imag * hi.imag
    a_ri += hr * np.conj(hi)
    b_r += np.conj(hr) * g_hat
    b_i += np.conj(hi) * g_hat
