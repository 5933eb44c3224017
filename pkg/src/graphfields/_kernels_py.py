"""Pure-numpy fallback for the compiled kernels.

Same call signatures and the same random-draw layout as the Cython module;
the bridge recurrence is evaluated in its telescoped form
b_k = (l - s_k) * sum_{j<=k} sd_j xi_j / (l - s_j), which is algebraically
identical to the sequential conditional recurrence (the coefficients
telescope), so the two backends agree to rounding error.
"""

from __future__ import annotations

import numpy as np
from scipy import special as sp

BACKEND_NAME = "python"


def _field_values(grid, zmu, xi):
    t = grid.tfrac
    z = (1.0 - t) * zmu[grid.src] + t * zmu[grid.tgt]
    if grid.n_interior:
        c = np.cumsum(grid.beta * xi)
        cpad = np.concatenate(([0.0], c))
        carry = cpad[grid.seg_first[grid.seg_id]]
        z[grid.n_vertex_points:] += grid.alpha * (c - carry)
    return z


def _f_eval(fspec, t):
    family, a, tmin, coef = fspec[0], fspec[1], fspec[2], fspec[3]
    at = np.abs(t)
    if family == 1:
        return np.where(at <= 0.5 * a, coef, 0.0)
    if family == 2:
        return coef * np.exp(-a * a * t * t)
    return coef * sp.k0(a * np.maximum(at, tmin))


def aux_field(grid, zmu, xi, out):
    out[:] = _field_values(grid, zmu, xi)
    return out


def spectral_accum(out, grid, zmu, xi, w, amp, lam):
    z = _field_values(grid, zmu, xi)
    out += amp * np.cos(w * z + lam)


def germ_accum(out, grid, zmu, xi, x0, scale, fspec):
    z = _field_values(grid, zmu, xi)
    out += scale * _f_eval(fspec, z - x0)


def poisson_accum(out, z, germs, signs, scale, fspec):
    cutoff = fspec[4]
    for gx, sg in zip(germs, signs):
        diff = z - gx
        mask = np.abs(diff) <= cutoff
        if mask.any():
            out[mask] += (scale * sg) * _f_eval(fspec, diff[mask])
