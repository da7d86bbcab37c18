# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: language_level=3
"""Compiled inner loops: transfer-function evaluation and accumulation.

Semantics match ``idtomo._kernels_np`` exactly; that module is the reference.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin, sqrt

cnp.import_array()


def tf_pair(double[:, ::1] ux, double[:, ::1] uy, double uix, double uiy,
            double eta_i, double z, double k, double cutoff, double k0,
            double source, double p0):
    """See ``idtomo._kernels_np.tf_pair``."""
    cdef Py_ssize_t ny = ux.shape[0], nx = ux.shape[1], i, j
    h_re = np.empty((ny, nx), dtype=np.complex128)
    h_im = np.empty((ny, nx), dtype=np.complex128)
    cdef double complex[:, ::1] hre = h_re
    cdef double complex[:, ::1] him = h_im
    cdef double k2 = k * k, c2 = cutoff * cutoff
    cdef double amp = 0.5 * k0 * k0 * source * p0
    cdef double wx, wy, r2, eta, ph
    cdef double t1re, t1im, t2re, t2im
    with nogil:
        for i in range(ny):
            for j in range(nx):
                t1re = 0.0; t1im = 0.0; t2re = 0.0; t2im = 0.0
                wx = ux[i, j] - uix
                wy = uy[i, j] - uiy
                r2 = wx * wx + wy * wy
                if r2 <= c2:
                    eta = sqrt(k2 - r2)
                    ph = (eta - eta_i) * z
                    t1re = cos(ph) / eta
                    t1im = sin(ph) / eta
                wx = ux[i, j] + uix
                wy = uy[i, j] + uiy
                r2 = wx * wx + wy * wy
                if r2 <= c2:
                    eta = sqrt(k2 - r2)
                    ph = (eta - eta_i) * z
                    t2re = cos(ph) / eta
                    t2im = -sin(ph) / eta
                # h_re = i*amp*(t1 - t2); h_im = -amp*(t1 + t2)
                hre[i, j] = -amp * (t1im - t2im) + 1j * (amp * (t1re - t2re))
                him[i, j] = -amp * (t1re + t2re) + 1j * (-amp * (t1im + t2im))
    return h_re, h_im


def acc_update(double[:, ::1] a_rr, double[:, ::1] a_ii,
               double complex[:, ::1] a_ri,
               double complex[:, ::1] b_r, double complex[:, ::1] b_i,
               double complex[:, ::1] h_re, double complex[:, ::1] h_im,
               double complex[:, ::1] g_hat, double dz):
    """See ``idtomo._kernels_np.acc_update``."""
    cdef Py_ssize_t ny = a_rr.shape[0], nx = a_rr.shape[1], i, j
    cdef double hrr, hri, hir, hii, gr, gi
    with nogil:
        for i in range(ny):
            for j in range(nx):
                hrr = dz * h_re[i, j].real
                hri = dz * h_re[i, j].imag
                hir = dz * h_im[i, j].real
                hii = dz * h_im[i, j].imag
                gr = g_hat[i, j].real
                gi = g_hat[i, j].imag
                a_rr[i, j] += hrr * hrr + hri * hri
                a_ii[i, j] += hir * hir + hii * hii
                # a_ri += h_re * conj(h_im)
                a_ri[i, j] = a_ri[i, j] + (hrr * hir + hri * hii) \
                    + 1j * (hri * hir - hrr * hii)
                # b_r += conj(h_re) * g ; b_i += conj(h_im) * g
                b_r[i, j] = b_r[i, j] + (hrr * gr + hri * gi) \
                    + 1j * (hrr * gi - hri * gr)
                b_i[i, j] = b_i[i, j] + (hir * gr + hii * gi) \
                    + 1j * (hir * gi - hii * gr)
