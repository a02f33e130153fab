"""Compiled inner loop for the small-system superoperator path.

The state is the row-major vectorization of rho.  The generator is
``L(t) = L0 + sum_q coefs[q](t) * mods[q]`` with the scalar coefficients
pre-evaluated on the half-step grid (index ``2*step`` is the step start,
``2*step + 1`` the midpoint, ``2*step + 2`` the end).

Status codes: 0 = ok, 1 = trace drifted beyond the abort threshold,
2 = non-finite trace.
"""
import numpy as np
from numba import njit

TRACE_RENORM_TOL = 1e-9
TRACE_ABORT_TOL = 1e-4


@njit(cache=True)
def rk4_superop_chunk(v, L0, mods, coefs, i0, dt, nsteps):
    m = mods.shape[0]
    d2 = v.shape[0]
    d = 0
    while d * d < d2:
        d += 1
    renorms = 0
    for s in range(nsteps):
        j = 2 * (i0 + s)
        k1 = np.dot(L0, v)
        for q in range(m):
            k1 += coefs[q, j] * np.dot(mods[q], v)
        u = v + (0.5 * dt) * k1
        k2 = np.dot(L0, u)
        for q in range(m):
            k2 += coefs[q, j + 1] * np.dot(mods[q], u)
        u = v + (0.5 * dt) * k2
        k3 = np.dot(L0, u)
        for q in range(m):
            k3 += coefs[q, j + 1] * np.dot(mods[q], u)
        u = v + dt * k3
        k4 = np.dot(L0, u)
        for q in range(m):
            k4 += coefs[q, j + 2] * np.dot(mods[q], u)
        v = v + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        # re-hermitize in place
        for a in range(d):
            for b in range(a, d):
                x = 0.5 * (v[a * d + b] + np.conj(v[b * d + a]))
                v[a * d + b] = x
                v[b * d + a] = np.conj(x)
        tr = 0.0
        for a in range(d):
            tr += v[a * d + a].real
        if not np.isfinite(tr):
            return v, renorms, 2, i0 + s
        if abs(tr - 1.0) > TRACE_ABORT_TOL:
            return v, renorms, 1, i0 + s
        if abs(tr - 1.0) > TRACE_RENORM_TOL:
            v = v / tr
            renorms += 1
    return v, renorms, 0, i0 + nsteps - 1
