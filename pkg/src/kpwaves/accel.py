"""Batch evaluation kernels for sparse multivariate polynomials.

The quadrature engine evaluates rational Fourier symbols at millions of
points, so the inner loop lives here.  Two implementations are provided:
a numba-compiled version and a pure-numpy one.  Set the environment
variable ``KPWAVES_NO_NUMBA=1`` before import to force the numpy path
(used by the benchmark and as a fallback when numba is unavailable).
"""

import os

import numpy as np

_DISABLE = os.environ.get("KPWAVES_NO_NUMBA", "").strip() in {"1", "true", "yes"}

try:  # pragma: no cover - import guard
    if _DISABLE:
        raise ImportError("numba disabled by KPWAVES_NO_NUMBA")
    from numba import njit, prange

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False


def _poly_eval_numpy(exps, coeffs, pts, out):
    # Chunk over terms to keep the (K, M) temporaries bounded.
    out[:] = 0.0
    for m in range(exps.shape[0]):
        term = np.full(pts.shape[0], coeffs[m])
        for a in range(exps.shape[1]):
            e = exps[m, a]
            if e:
                term *= pts[:, a] ** e
        out += term
    return out


def _rational_eval_numpy(exps, coeffs, den_exps, den_coeffs, qpow, pts, out):
    num = np.empty(pts.shape[0])
    den = np.empty(pts.shape[0])
    _poly_eval_numpy(exps, coeffs, pts, num)
    _poly_eval_numpy(den_exps, den_coeffs, pts, den)
    out[:] = num / den**qpow
    return out


if HAVE_NUMBA:

    @njit(cache=True, parallel=True)
    def _poly_eval_numba(exps, coeffs, pts, out):  # pragma: no cover - jit
        npts = pts.shape[0]
        nterms = exps.shape[0]
        ndim = exps.shape[1]
        for i in prange(npts):
            acc = 0.0
            for m in range(nterms):
                t = coeffs[m]
                for a in range(ndim):
                    for _ in range(exps[m, a]):
                        t *= pts[i, a]
                acc += t
            out[i] = acc
        return out

    @njit(cache=True, parallel=True)
    def _rational_eval_numba(exps, coeffs, den_exps, den_coeffs, qpow, pts, out):  # pragma: no cover - jit
        npts = pts.shape[0]
        for i in prange(npts):
            num = 0.0
            for m in range(exps.shape[0]):
                t = coeffs[m]
                for a in range(exps.shape[1]):
                    for _ in range(exps[m, a]):
                        t *= pts[i, a]
                num += t
            den = 0.0
            for m in range(den_exps.shape[0]):
                t = den_coeffs[m]
                for a in range(den_exps.shape[1]):
                    for _ in range(den_exps[m, a]):
                        t *= pts[i, a]
                den += t
            out[i] = num / den**qpow
        return out


def poly_eval(exps, coeffs, pts, out=None):
    """Evaluate sum_m coeffs[m] * prod_a pts[:,a]**exps[m,a].

    exps : (M, N) int64, coeffs : (M,) float64, pts : (K, N) float64.
    """
    pts = np.ascontiguousarray(pts, dtype=np.float64)
    if out is None:
        out = np.empty(pts.shape[0])
    if exps.shape[0] == 0:
        out[:] = 0.0
        return out
    if HAVE_NUMBA:
        return _poly_eval_numba(exps, coeffs, pts, out)
    return _poly_eval_numpy(exps, coeffs, pts, out)


def rational_eval(exps, coeffs, den_exps, den_coeffs, qpow, pts, out=None):
    """Evaluate P(pts)/D(pts)**qpow for sparse P, D."""
    pts = np.ascontiguousarray(pts, dtype=np.float64)
    if out is None:
        out = np.empty(pts.shape[0])
    if exps.shape[0] == 0:
        out[:] = 0.0
        return out
    if HAVE_NUMBA:
        return _rational_eval_numba(exps, coeffs, den_exps, den_coeffs, qpow, pts, out)
    return _rational_eval_numpy(exps, coeffs, den_exps, den_coeffs, qpow, pts, out)
