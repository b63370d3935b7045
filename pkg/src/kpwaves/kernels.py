"""Physical-space kernel values, decay/singularity fits, and the composed
Riesz identity.

The kernels are inverse Fourier transforms of rational symbols
prod_j xi_j^{d_j} / (|xi|^2 + xi_1^4).  Even total degree d gives a real
kernel; odd degree gives i times a real odd function, and the real
representative (the imaginary part) is returned.  Pointwise values come
from the split integral representation in :mod:`kpwaves.quadrature`.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import exp1, sici

from .quadrature import (
    Direction,
    HypothesisError,
    QuadratureError,
    QuadratureSpec,
    _gauss,
    split_fourier_value,
)
from .symbols import DerivativeTable, SingularPointError, monomial_symbol, riesz11_symbol

# R_{1,1} = (Gamma(N/2)/(2 pi^{N/2})) (PV part + pointwise part) + delta_0/N:
# the Dirac mass coefficient of the composed Riesz kernel.  It accompanies
# the pointwise values returned by riesz_value but is not part of them.
RIESZ_DIRAC_COEFFICIENT = "1/N"

_TABLES = {}


def _table(dim, d):
    key = (dim, tuple(int(x) for x in d))
    if key not in _TABLES:
        _TABLES[key] = DerivativeTable(monomial_symbol(dim, key[1]))
    return _TABLES[key]


def sphere_constant(dim):
    """Gamma(N/2) / (2 pi^{N/2}), the Riesz normalization constant."""
    return math.gamma(dim / 2.0) / (2.0 * math.pi ** (dim / 2.0))


def kernel_value(d, x, quad=None):
    """Pointwise kernel value at x != 0 for the base exponents d.

    Returns the real representative: the kernel itself when sum(d) is
    even, and the imaginary part (kernel = i * value) when sum(d) is odd.
    """
    x = np.asarray(x, dtype=np.float64)
    quad = quad or QuadratureSpec()
    table = _table(x.size, d)
    val = split_fourier_value(table, x, quad)
    return val.real if table.base.parity() == 0 else val.imag


def k0_limit(sigma):
    """Limit of |x|^N K_0(x) along the direction sigma."""
    if not isinstance(sigma, Direction):
        sigma = Direction.of(sigma)
    return sphere_constant(sigma.dim) * (1.0 - sigma.dim * sigma.sigma1**2)


def k0_limit_richardson(sigma, radius, quad=None):
    """Extrapolated R^N K_0(R sigma) from radii R and 2R (error ~ 1/R)."""
    if not isinstance(sigma, Direction):
        sigma = Direction.of(sigma)
    dim = sigma.dim
    s = sigma.array()
    d = (2,) + (0,) * (dim - 1)
    vals = []
    for R in (radius, 2.0 * radius):
        q = quad or QuadratureSpec(abs_tol=1e-4 / R**dim, rel_tol=3e-4)
        vals.append(R**dim * kernel_value(d, R * s, q))
    return 2.0 * vals[1] - vals[0]


def riesz_value(x, dim=None):
    """Pointwise (non-distributional) part of the composed Riesz kernel.

    R_{1,1} also carries a Dirac mass delta_0/N and a principal-value
    interpretation inside the unit ball; those are documented metadata
    (RIESZ_DIRAC_COEFFICIENT), not part of the returned value.
    """
    x = np.asarray(x, dtype=np.float64)
    dim = dim if dim is not None else x.size
    r2 = float(np.dot(x, x))
    if r2 == 0.0:
        raise SingularPointError("Riesz kernel value undefined at the origin")
    return sphere_constant(dim) * (r2 - dim * x[0] ** 2) / r2 ** (dim / 2.0 + 1.0)


def _e2(c):
    """E2(c) = Int_1^inf rho^{-2} e^{i c rho} drho (vectorized).

    For c != 0:  e^{ic} + i c E_1(-i c)  with the principal branch of the
    exponential integral; E2(0) = 1.
    """
    c = np.asarray(c, dtype=np.float64)
    out = np.empty(c.shape, dtype=complex)
    nz = c != 0.0
    cz = c[nz]
    out[nz] = np.exp(1j * cz) + 1j * cz * exp1(-1j * cz)
    out[~nz] = 1.0
    return out


def _lreg(c):
    """L(c) = Int_0^1 (e^{i c rho} - 1)/rho drho (vectorized, smooth at 0).

    Equals Ci(|c|) - gamma - ln|c| + i Si(c); the real part is the entire
    function sum_k (-c^2/ ...) with value 0 at c = 0.
    """
    c = np.asarray(c, dtype=np.float64)
    out = np.zeros(c.shape, dtype=complex)
    nz = np.abs(c) > 1e-300
    cz = c[nz]
    si, ci = sici(np.abs(cz))
    out[nz] = ci - np.euler_gamma - np.log(np.abs(cz)) + 1j * np.sign(cz) * si
    return out


def _aligned_sphere_nodes(sigma, n_w, n_az):
    """Sphere nodes graded toward the plane sigma.u = 0.

    E2(sigma.u) has |c| and c ln|c| kinks at c = 0, so the w = sigma.u
    coordinate uses Gauss panels geometrically refined toward w = 0.
    Returns (units, weights) covering S^{N-1}.
    """
    dim = sigma.size
    xg, wg = _gauss(n_w)
    # orthonormal frame with sigma first
    basis = np.eye(dim)
    basis[:, 0] = sigma
    q, _ = np.linalg.qr(basis)
    if np.dot(q[:, 0], sigma) < 0:
        q[:, 0] = -q[:, 0]
    if dim == 2:
        # angle panels geometrically graded toward theta = +-pi/2,
        # where sigma.u = cos(theta) crosses zero
        offsets = [0.0]
        h = 1e-9
        while h < 1.0:
            offsets.append(h)
            h *= 2.2
        offsets.append(1.0)
        offsets = 0.5 * np.pi * np.asarray(offsets)
        th_nodes = []
        th_weights = []
        for center in (-0.5 * np.pi, 0.5 * np.pi):
            for a, b in zip(offsets[:-1], offsets[1:]):
                for s in (1.0, -1.0):
                    th_nodes.append(center + s * (0.5 * (b - a) * xg + 0.5 * (b + a)))
                    th_weights.append(0.5 * (b - a) * wg)
        th = np.concatenate(th_nodes)
        units = np.outer(np.cos(th), q[:, 0]) + np.outer(np.sin(th), q[:, 1])
        return units, np.concatenate(th_weights)
    # w = sigma.u panels geometrically refined toward w = 0
    edges = [0.0]
    w = 1e-9
    while w < 1.0:
        edges.append(w)
        w *= 2.2
    edges.append(1.0)
    w_nodes = []
    w_weights = []
    for a, b in zip(edges[:-1], edges[1:]):
        for s in (1.0, -1.0):
            w_nodes.append(s * (0.5 * (b - a) * xg + 0.5 * (b + a)))
            w_weights.append(0.5 * (b - a) * wg)
    w_nodes = np.concatenate(w_nodes)
    w_weights = np.concatenate(w_weights)
    if dim == 3:
        # surface measure dS = dw dphi on the unit sphere
        az = 2.0 * np.pi * (np.arange(n_az) + 0.5) / n_az
        waz = 2.0 * np.pi / n_az
        root = np.sqrt(np.maximum(1.0 - w_nodes**2, 0.0))
        units = (
            np.outer(np.repeat(w_nodes, n_az), q[:, 0])
            + np.outer(np.repeat(root, n_az) * np.cos(np.tile(az, w_nodes.size)), q[:, 1])
            + np.outer(np.repeat(root, n_az) * np.sin(np.tile(az, w_nodes.size)), q[:, 2])
        )
        weights = np.repeat(w_weights, n_az) * waz
        return units, weights
    raise NotImplementedError("aligned sphere nodes implemented for N <= 3")


def verify_riesz_identity(sigma, axis, quad=None):
    """|RHS - LHS| for the composed Riesz kernel identity.

    The identity expresses Gamma(N/2)/(2 pi^{N/2}) (1 - N sigma_1^2)
    through four integrals of the derivative symbols of xi_1^2/|xi|^2
    along the axis ``axis``.  Homogeneity reduces the ball and outer
    integrals to closed radial factors E2 and L against sphere integrals.
    """
    if not isinstance(sigma, Direction):
        sigma = Direction.of(sigma)
    dim = sigma.dim
    s = sigma.array()
    sj = s[axis - 1]
    if sj == 0.0:
        raise HypothesisError("identity requires sigma_j != 0")
    quad = quad or QuadratureSpec()
    table = DerivativeTable(riesz11_symbol(dim))
    units, wts = _aligned_sphere_nodes(s, 16, 220 if dim == 3 else 0)
    c = units @ s
    uj = units[:, axis - 1]
    q_nm1 = table.derivative(axis, dim - 1).eval(units)
    q_n = table.derivative(axis, dim).eval(units)
    q_np1 = table.derivative(axis, dim + 1).eval(units)
    outer = np.sum(wts * q_np1 * _e2(c))
    sphere_osc = np.sum(wts * uj * q_n * np.exp(1j * c))
    sphere_static = np.sum(wts * uj * q_nm1)
    inner = np.sum(wts * q_n * _lreg(c))
    rhs = (1j**dim / (2.0 * np.pi * sj) ** dim) * (
        (1j / sj) * outer + (1j / sj) * sphere_osc + sphere_static + inner
    )
    lhs = sphere_constant(dim) * (1.0 - dim * s[0] ** 2)
    return abs(rhs - lhs)


@dataclass(frozen=True)
class DecayFit:
    """Least-squares slope of log|value| against log(radius)."""

    slope: float
    stderr: float
    n_used: int


def decay_fit(samples):
    """Fit |value| ~ radius^slope from (radius, value) samples.

    Zero values are excluded with a warning; at least 8 usable samples
    with strictly increasing radii are required.
    """
    samples = list(samples)
    radii = np.array([s[0] for s in samples], dtype=np.float64)
    vals = np.array([s[1] for s in samples], dtype=np.float64)
    if np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be strictly increasing")
    keep = vals != 0.0
    if not np.all(keep):
        warnings.warn(f"excluding {np.sum(~keep)} zero-valued samples from decay fit")
    radii, vals = radii[keep], vals[keep]
    if radii.size < 8:
        raise ValueError("need at least 8 usable samples")
    A = np.vstack([np.log(radii), np.ones(radii.size)]).T
    y = np.log(np.abs(vals))
    coef, res, _, _ = np.linalg.lstsq(A, y, rcond=None)
    dof = radii.size - 2
    var = float(res[0]) / dof if res.size and dof > 0 else 0.0
    cov = var * np.linalg.inv(A.T @ A)
    return DecayFit(slope=float(coef[0]), stderr=float(np.sqrt(cov[0, 0])), n_used=int(radii.size))


@dataclass(frozen=True)
class SingularityFit:
    """Near-origin exponent fit |f| ~ |x|^{-beta} with log detection."""

    beta: float
    stderr: float
    log_flag: bool
    radii: tuple
    values: tuple


def singularity_samples(d, axis, radii, dim=2, quad=None):
    """Kernel samples on the near-origin approach path for ``axis``.

    axis 1 follows the anisotropic approach x = (s, s^2, ...): the
    envelope (x_1^2 + |x_perp|)^{-beta} is attained in the parabolic
    region |x_perp| ~ x_1^2, while on the literal x_1 axis the kernels
    stay bounded.  Transverse axes are sampled literally, x = (0, .., s).
    """
    vals = []
    for s in radii:
        x = np.zeros(dim)
        if axis == 1:
            x[0] = s
            x[1] = s * s
        else:
            x[axis - 1] = s
        q = quad or QuadratureSpec(abs_tol=2e-2, rel_tol=5e-3)
        v = kernel_value(d, x, q)
        if quad is None and 1e-12 < abs(v) < 2.0:
            # refine once the magnitude is known
            q = QuadratureSpec(abs_tol=max(5e-3 * abs(v), 1e-6), rel_tol=5e-3)
            v = kernel_value(d, x, q)
        vals.append(v)
    return np.asarray(vals)


def singularity_fit(d, axis, dim=2, radii=None, quad=None):
    """Fitted blow-up exponent beta of |kernel| ~ |x|^{-beta} near 0.

    Samples |x| in [1e-3, 1e-1] on the approach path of
    :func:`singularity_samples`.  When the fitted slope is nearly flat the
    samples are tested against c (a + |ln s|): ``log_flag`` reports
    whether the logarithmic envelope fits the growth.
    """
    radii = np.geomspace(1e-3, 1e-1, 8) if radii is None else np.asarray(radii)
    vals = singularity_samples(d, axis, radii, dim=dim, quad=quad)
    if np.all(vals == 0.0):
        return SingularityFit(0.0, 0.0, False, tuple(radii), tuple(vals))
    fit = decay_fit(list(zip(radii, vals)))
    log_flag = False
    if abs(fit.slope) < 0.15:
        # linear fit |v| ~ alpha + beta_log |ln s|
        A = np.vstack([np.abs(np.log(radii)), np.ones(radii.size)]).T
        coef, _, _, _ = np.linalg.lstsq(A, np.abs(vals), rcond=None)
        growth = coef[0] * (np.abs(np.log(radii.min())) - np.abs(np.log(radii.max())))
        log_flag = growth > 0.3 * float(np.mean(np.abs(vals)))
    return SingularityFit(
        beta=-fit.slope,
        stderr=fit.stderr,
        log_flag=bool(log_flag),
        radii=tuple(float(r) for r in radii),
        values=tuple(float(v) for v in vals),
    )


def kernel_line_value(d, x, abs_tol=1e-11):
    """Kernel value for N = 2 via residue reduction to a single integral.

    Integrating the inverse transform over xi_2 by residues (the
    denominator has simple poles at xi_2 = +/- i a(t), a(t) = t sqrt(1+t^2))
    collapses the 2-d inversion to a damped oscillatory line integral.
    Returns the same real number as :func:`kernel_value` (the real part of
    the kernel for even total degree, the imaginary part for odd), at a
    tiny fraction of the cost; valid off the x_1-axis (and on it for the
    kernels whose reduced integrand decays).

    Parameters
    ----------
    d : (d1, d2)
        Numerator exponents of xi_1 and xi_2; d2 must be 0 or 1 here.
    x : (x1, x2)
    """
    d1, d2 = d
    if d2 not in (0, 1):
        raise ValueError("reduced form implemented for d2 in {0, 1}")
    x1, x2 = float(x[0]), float(x[1])
    ax2 = abs(x2)
    if ax2 == 0.0 and not (d2 == 0 and d1 <= 1) and d != (2, 0):
        raise ValueError("reduced integrand does not decay on the x1-axis "
                         "for d = %r" % (d,))

    def damping(t):
        return np.exp(-ax2 * t * np.sqrt(1.0 + t * t))

    if d2 == 0:
        def g(t):
            return t ** (d1 - 1) / np.sqrt(1.0 + t * t) * damping(t)
        sign = 1.0
    else:
        def g(t):
            return t ** d1 * damping(t)
        sign = np.sign(x2) if d1 % 2 == 0 else -np.sign(x2)
    trig = "cos" if d1 % 2 == 0 else "sin"
    if trig == "sin" and x1 == 0.0:
        return 0.0
    if ax2 > 0.0:
        c = 45.0 / ax2
        cutoff = np.sqrt((-1.0 + np.sqrt(1.0 + 4.0 * c * c)) / 2.0)
    else:
        cutoff = None
    if d == (2, 0) and ax2 == 0.0:
        # Abel-regularized x1-axis value: subtract the non-decaying unit
        # tail of t/sqrt(1+t^2), whose oscillatory integral vanishes.
        def g0(t):
            return t / np.sqrt(1.0 + t * t) - 1.0
        val, _ = integrate.quad(g0, 0.0, np.inf, weight="cos", wvar=x1,
                                limit=400, epsabs=abs_tol, maxp1=100)
        return val / (2.0 * np.pi)
    if cutoff is None:
        val, _ = integrate.quad(g, 0.0, np.inf, weight=trig, wvar=x1,
                                limit=400, epsabs=abs_tol, maxp1=100)
    else:
        val, _ = integrate.quad(g, 0.0, cutoff, weight=trig, wvar=x1,
                                limit=400, epsabs=abs_tol)
    return sign * val / (2.0 * np.pi)
