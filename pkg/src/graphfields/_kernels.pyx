# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
# cython: language_level=3
"""Compiled hot loops: auxiliary-field synthesis and per-copy accumulation.

Each function consumes one copy of the per-point randomness and either writes
the auxiliary field or folds one simulation copy into the running sum.  The
bridge uses the sequential conditional recurrence
b_k = (l - s_k)/(l - s_{k-1}) * b_{k-1} + sd_k * xi_k,
restarting at every edge group.  The pure-Python backend in _kernels_py
implements the algebraically identical telescoped form.
"""

from libc.math cimport cos, exp, fabs, sqrt
from scipy.special.cython_special cimport k0 as _bessel_k0

BACKEND_NAME = "compiled"


cdef inline double _f_eval(int family, double a, double tmin, double coef, double t) nogil:
    cdef double u = fabs(t)
    if family == 1:
        return coef if u <= 0.5 * a else 0.0
    elif family == 2:
        return coef * exp(-a * a * t * t)
    else:
        if u < tmin:
            u = tmin
        return coef * _bessel_k0(a * u)


def aux_field(grid, double[::1] zmu, double[::1] xi, double[::1] out):
    cdef int[::1] src = grid.src
    cdef int[::1] tgt = grid.tgt
    cdef double[::1] tfrac = grid.tfrac
    cdef double[::1] coef = grid.coef
    cdef double[::1] sd = grid.sd
    cdef unsigned char[::1] seg_start = grid.seg_start
    cdef Py_ssize_t nv = grid.n_vertex_points
    cdef Py_ssize_t P = src.shape[0]
    cdef Py_ssize_t i, j
    cdef double b = 0.0, t, z
    with nogil:
        for i in range(P):
            t = tfrac[i]
            z = (1.0 - t) * zmu[src[i]] + t * zmu[tgt[i]]
            if i >= nv:
                j = i - nv
                if seg_start[j]:
                    b = 0.0
                b = coef[j] * b + sd[j] * xi[j]
                z = z + b
            out[i] = z
    return out


def spectral_accum(double[::1] out, grid, double[::1] zmu, double[::1] xi,
                   double w, double amp, double lam):
    cdef int[::1] src = grid.src
    cdef int[::1] tgt = grid.tgt
    cdef double[::1] tfrac = grid.tfrac
    cdef double[::1] coef = grid.coef
    cdef double[::1] sd = grid.sd
    cdef unsigned char[::1] seg_start = grid.seg_start
    cdef Py_ssize_t nv = grid.n_vertex_points
    cdef Py_ssize_t P = src.shape[0]
    cdef Py_ssize_t i, j
    cdef double b = 0.0, t, z
    with nogil:
        for i in range(P):
            t = tfrac[i]
            z = (1.0 - t) * zmu[src[i]] + t * zmu[tgt[i]]
            if i >= nv:
                j = i - nv
                if seg_start[j]:
                    b = 0.0
                b = coef[j] * b + sd[j] * xi[j]
                z = z + b
            out[i] += amp * cos(w * z + lam)


def germ_accum(double[::1] out, grid, double[::1] zmu, double[::1] xi,
               double x0, double scale, fspec):
    cdef int family = fspec[0]
    cdef double a = fspec[1]
    cdef double tmin = fspec[2]
    cdef double fcoef = fspec[3]
    cdef int[::1] src = grid.src
    cdef int[::1] tgt = grid.tgt
    cdef double[::1] tfrac = grid.tfrac
    cdef double[::1] coef = grid.coef
    cdef double[::1] sd = grid.sd
    cdef unsigned char[::1] seg_start = grid.seg_start
    cdef Py_ssize_t nv = grid.n_vertex_points
    cdef Py_ssize_t P = src.shape[0]
    cdef Py_ssize_t i, j
    cdef double b = 0.0, t, z
    with nogil:
        for i in range(P):
            t = tfrac[i]
            z = (1.0 - t) * zmu[src[i]] + t * zmu[tgt[i]]
            if i >= nv:
                j = i - nv
                if seg_start[j]:
                    b = 0.0
                b = coef[j] * b + sd[j] * xi[j]
                z = z + b
            out[i] += scale * _f_eval(family, a, tmin, fcoef, z - x0)


def poisson_accum(double[::1] out, double[::1] z, double[::1] germs,
                  double[::1] signs, double scale, fspec):
    """Accumulate signed kernel translates; germs must be sorted ascending."""
    cdef int family = fspec[0]
    cdef double a = fspec[1]
    cdef double tmin = fspec[2]
    cdef double fcoef = fspec[3]
    cdef double cutoff = fspec[4]
    cdef Py_ssize_t P = z.shape[0]
    cdef Py_ssize_t N = germs.shape[0]
    cdef Py_ssize_t i, n, lo_i, hi_i, mid
    cdef double zi, lo, acc
    with nogil:
        for i in range(P):
            zi = z[i]
            lo = zi - cutoff
            # leftmost germ >= zi - cutoff
            lo_i = 0
            hi_i = N
            while lo_i < hi_i:
                mid = (lo_i + hi_i) >> 1
                if germs[mid] < lo:
                    lo_i = mid + 1
                else:
                    hi_i = mid
            acc = 0.0
            for n in range(lo_i, N):
                if germs[n] > zi + cutoff:
                    break
                acc += signs[n] * _f_eval(family, a, tmin, fcoef, zi - germs[n])
            out[i] += scale * acc
