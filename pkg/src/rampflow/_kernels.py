"""Hot inner loops of the finite-volume step, in numba and numpy variants.

Both variants implement identical arithmetic; they may differ in the last
few ulps because summation order differs (sequential loops vs numpy's
pairwise reductions).  Each variant is individually deterministic.
"""

import numpy as np

from ._accel import HAVE_NUMBA, resolve_backend

if HAVE_NUMBA:
    from numba import njit


def correlate_numpy(ext: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Sliding dot products: out[i] = sum_k weights[k] * ext[i + k]."""
    return np.correlate(ext, weights, mode="valid")


def upwind_update_numpy(rho, ghost_left, vel, r_on, chi_on, chi_off, q_on, q_off, dt, dx):
    """One explicit upwind step plus sources; returns the raw new state.

    ``vel`` holds the interface transport speeds (len(rho) + 1 values, one
    per interface); the flux at interface i is the upwind cell value times
    vel[i].  Also returns the boundary fluxes and the spatially integrated
    source rates needed for the mass ledger.
    """
    flux = np.empty(rho.size + 1)
    flux[0] = ghost_left * vel[0]
    np.multiply(rho, vel[1:], out=flux[1:])
    s_on = chi_on * (q_on * (1.0 - rho) * (1.0 - r_on))
    s_off = chi_off * (q_off * rho)
    new = rho - (dt / dx) * np.diff(flux) + dt * (s_on - s_off)
    return new, flux[0], flux[-1], dx * s_on.sum(), dx * s_off.sum()


if HAVE_NUMBA:

    @njit(cache=True)
    def correlate_numba(ext, weights):  # pragma: no cover - exercised via dispatch
        m = weights.shape[0]
        n_out = ext.shape[0] - m + 1
        out = np.zeros(n_out)
        # weight-outer loop: the inner sweep is a stride-1 axpy that SIMD
        # vectorizes, while each out[i] still accumulates in fixed k order
        for k in range(m):
            wk = weights[k]
            for i in range(n_out):
                out[i] += wk * ext[i + k]
        return out

    @njit(cache=True)
    def upwind_update_numba(rho, ghost_left, vel, r_on, chi_on, chi_off, q_on, q_off, dt, dx):  # pragma: no cover
        n = rho.shape[0]
        out = np.empty(n)
        lam = dt / dx
        flux_prev = ghost_left * vel[0]
        flux_in = flux_prev
        on_sum = 0.0
        off_sum = 0.0
        for j in range(n):
            flux_next = rho[j] * vel[j + 1]
            s_on = chi_on[j] * (q_on * (1.0 - rho[j]) * (1.0 - r_on[j]))
            s_off = chi_off[j] * (q_off * rho[j])
            out[j] = rho[j] - lam * (flux_next - flux_prev) + dt * (s_on - s_off)
            on_sum += s_on
            off_sum += s_off
            flux_prev = flux_next
        return out, flux_in, flux_prev, dx * on_sum, dx * off_sum

    _TABLE = {
        "numpy": (correlate_numpy, upwind_update_numpy),
        "numba": (correlate_numba, upwind_update_numba),
    }
else:  # pragma: no cover - numba is a declared dependency
    _TABLE = {"numpy": (correlate_numpy, upwind_update_numpy)}


def kernel_funcs(backend: str | None = None):
    """Return (correlate, upwind_update) for the requested backend."""
    return _TABLE[resolve_backend(backend)]
