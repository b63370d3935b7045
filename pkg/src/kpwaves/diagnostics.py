"""Verification diagnostics for computed solitary waves.

Implements the closed-form lump oracle (N = 2, p = 1), the conserved
functionals (mass, energy, action), the asymptotic profile v_infinity and
its three independent computations, Pohozaev-identity checks, and decay
exponent fits for a wave and its gradient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grids import Field
from .kernels import decay_fit
from .solver import WaveState, signed_power, transverse_fields


@dataclass(frozen=True)
class LumpOracle:
    """The explicit rational solitary wave of the 2-d quadratic equation.

    v_c(x1, x2) = 24 c (3 - c x1^2 + c^2 x2^2) / (3 + c x1^2 + c^2 x2^2)^2
    """

    c: float = 1.0

    def __post_init__(self):
        if not (self.c > 0):
            raise ValueError("speed must be positive")

    def __call__(self, x1, x2):
        c = self.c
        den = 3.0 + c * np.asarray(x1) ** 2 + c ** 2 * np.asarray(x2) ** 2
        return 24.0 * c * (3.0 - c * np.asarray(x1) ** 2
                           + c ** 2 * np.asarray(x2) ** 2) / den ** 2


def lump_value(c, x):
    """Closed-form lump evaluation (N = 2 only)."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if x.shape[-1] != 2:
        raise ValueError("the closed-form lump exists in dimension 2 only")
    return float(LumpOracle(c)(x[..., 0], x[..., 1]))


def lump_field(grid, c=1.0):
    """Lump sampled on a 2-d grid."""
    if grid.dim != 2:
        raise ValueError("the closed-form lump exists in dimension 2 only")
    X, Y = np.meshgrid(grid.axis_points(0), grid.axis_points(1),
                       indexing="ij")
    return Field(grid, LumpOracle(c)(X, Y))


def lump_state(grid, c=1.0):
    return WaveState(lump_field(grid, c), 1, c=c)


def periodized_lump_field(grid, c=1.0, images=8, zero_line=True):
    """Torus representative of the lump: image sum plus line removal.

    Direct sampling of the lump on a box is not the function the periodic
    spectral calculus sees: the true torus counterpart is the sum over all
    periodic images, and that sum has identically vanishing integrals
    along every x1 line (the lump is an exact x1-derivative, so each line
    integral telescopes to a boundary term that cancels between images).
    A truncated sample instead carries an O(1/L) residue on the xi_1 = 0
    Fourier line.  This helper sums ``(2*images+1)**2`` images and, when
    ``zero_line`` is set, projects out the xi_1 = 0 modes, which is exact
    for the infinite image sum.
    """
    if grid.dim != 2:
        raise ValueError("the closed-form lump exists in dimension 2 only")
    X, Y = np.meshgrid(grid.axis_points(0), grid.axis_points(1),
                       indexing="ij")
    lump = LumpOracle(c)
    total = np.zeros_like(X)
    spans = [2.0 * h for h in grid.half_lengths]
    for i in range(-images, images + 1):
        for j in range(-images, images + 1):
            total += lump(X + i * spans[0], Y + j * spans[1])
    field = Field(grid, total)
    if zero_line:
        hat = field.fft()
        hat[0, :] = 0.0
        field = Field(grid, np.real(np.fft.ifftn(hat)))
    return field


_D2_STENCIL = np.array([-1.0 / 560, 8.0 / 315, -1.0 / 5, 8.0 / 5,
                        -205.0 / 72, 8.0 / 5, -1.0 / 5, 8.0 / 315,
                        -1.0 / 560])
_D4_STENCIL = np.array([7.0 / 240, -2.0 / 5, 169.0 / 60, -122.0 / 15,
                        91.0 / 8, -122.0 / 15, 169.0 / 60, -2.0 / 5,
                        7.0 / 240])


def lump_pde_residual(c, points, h=1e-2):
    """Finite-difference residual of -Lap v + d1^4 v + (1/2) d1^2(v^2).

    Uses 9-point central stencils on the closed form; a direct pointwise
    certificate that the oracle solves the quadratic 2-d equation.
    """
    lump = LumpOracle(c)
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    offs = np.arange(-4, 5) * h
    out = np.zeros(len(pts))
    for row, (x1, x2) in enumerate(pts):
        v_x1 = lump(x1 + offs, x2)
        v_x2 = lump(x1, x2 + offs)
        d11 = np.dot(_D2_STENCIL, v_x1) / h ** 2
        d22 = np.dot(_D2_STENCIL, v_x2) / h ** 2
        d1111 = np.dot(_D4_STENCIL, v_x1) / h ** 4
        d11_sq = np.dot(_D2_STENCIL, v_x1 ** 2) / h ** 2
        out[row] = -(d11 + d22) + d1111 + 0.5 * d11_sq
    return out


def mass(state):
    """Grid integral of v^2."""
    return state.field.integral(2)


def energy(state):
    """E = (1/2) int (d1 v)^2 + (1/2) sum_j int v_j^2
    - (1/((p+1)(p+2))) int v^{p+2}."""
    v = state.field
    p = state.p
    e = 0.5 * v.spectral_derivative(0).integral(2)
    for comp in transverse_fields(state).components:
        e += 0.5 * comp.integral(2)
    vp2 = signed_power(v, p + 2)
    e -= vp2.integral(1) / (float(p + 1) * float(p + 2))
    return float(e)


def action(state):
    """S = E + (c/2) int v^2 at the normalized speed c = 1."""
    return energy(state) + 0.5 * mass(state)


def v_infinity_prediction(state):
    """The profile sigma -> Gamma(N/2)/(2 pi^{N/2} (p+1)) (1 - N sigma_1^2)
    int v^{p+1}, from the wave itself."""
    dim = state.grid.dim
    coeff = (math.gamma(dim / 2.0)
             / (2.0 * math.pi ** (dim / 2.0) * float(state.p + 1)))
    integral = signed_power(state.field, state.p + 1).integral(1)

    def profile(sigma):
        sigma = np.asarray(sigma, dtype=np.float64)
        return coeff * (1.0 - dim * sigma[..., 0] ** 2) * integral

    return profile


def v_infinity_from_energy(state, branch="energy"):
    """The profile computed from the energy (or the action) for p = 1,
    N in {2, 3}."""
    dim = state.grid.dim
    if state.p != 1 or dim not in (2, 3):
        raise ValueError("energy form of the profile requires p = 1 and "
                         "N in {2, 3}")
    gam = math.gamma(dim / 2.0)
    if branch == "energy":
        scalar = (7.0 - 2.0 * dim) * gam / (
            2.0 * (2.0 * dim - 5.0) * math.pi ** (dim / 2.0)) * energy(state)
    elif branch == "action":
        scalar = (7.0 - 2.0 * dim) * gam / (
            4.0 * math.pi ** (dim / 2.0)) * action(state)
    else:
        raise ValueError("branch must be 'energy' or 'action'")

    def profile(sigma):
        sigma = np.asarray(sigma, dtype=np.float64)
        return (1.0 - dim * sigma[..., 0] ** 2) * scalar

    return profile


@dataclass
class AsymptoticProfile:
    """Radial profile samples v_R(sigma) = R^N v(R sigma) with the
    extrapolated limits and the wave's own prediction."""

    radii: tuple
    directions: tuple
    samples: np.ndarray          # shape (n_radii, n_directions)
    extrapolated: np.ndarray     # per-direction limit, 1/R Richardson
    prediction: np.ndarray       # Eq.-level prediction per direction
    sup_gap: float               # max |extrapolated - prediction| / max |prediction|
    sup_gap_largest_r: float     # same for the raw largest-R samples
    uniformity_claimed: bool     # p >= 1/N


def circle_directions(n, dim=2):
    """n unit vectors; equally spaced on the circle for N = 2."""
    if dim != 2:
        raise NotImplementedError("direction sets implemented for N = 2")
    theta = 2.0 * np.pi * (np.arange(n) + 0.5) / n
    return np.stack([np.cos(theta), np.sin(theta)], axis=1)


def profile_extract(state, radii, directions):
    """Sample R^N v(R sigma) by trigonometric interpolation and extrapolate.

    The largest radius must stay below 0.45 of the smallest half-length so
    periodic images do not contaminate the samples.  The R -> infinity
    limit per direction assumes the error model a + c1/R + c2/R^2: with
    three or more radii the three coefficients are fit by least squares;
    with exactly two radii the c2 term is dropped (two-point Richardson).
    """
    radii = np.sort(np.asarray(radii, dtype=np.float64))
    directions = np.atleast_2d(np.asarray(directions, dtype=np.float64))
    grid = state.grid
    bound = 0.45 * min(grid.half_lengths)
    if radii[-1] > bound:
        raise ValueError("max radius %.3g exceeds the wrap bound %.3g"
                         % (radii[-1], bound))
    if len(radii) < 2:
        raise ValueError("need at least two radii to extrapolate")
    pts = (radii[:, None, None] * directions[None, :, :]).reshape(-1, grid.dim)
    vals = state.field.interpolate(pts).reshape(len(radii), len(directions))
    samples = vals * radii[:, None] ** grid.dim
    if len(radii) >= 3:
        design = np.stack([np.ones_like(radii), 1.0 / radii,
                           1.0 / radii ** 2], axis=1)
        coeffs, *_ = np.linalg.lstsq(design, samples, rcond=None)
        extrap = coeffs[0]
    else:
        r1, r2 = radii[-2], radii[-1]
        extrap = (r2 * samples[-1] - r1 * samples[-2]) / (r2 - r1)
    pred = v_infinity_prediction(state)(directions)
    scale = np.max(np.abs(pred))
    if scale == 0.0:
        scale = 1.0
    return AsymptoticProfile(
        radii=tuple(radii),
        directions=tuple(map(tuple, directions)),
        samples=samples,
        extrapolated=extrap,
        prediction=pred,
        sup_gap=float(np.max(np.abs(extrap - pred)) / scale),
        sup_gap_largest_r=float(np.max(np.abs(samples[-1] - pred)) / scale),
        uniformity_claimed=bool(state.p >= 1.0 / grid.dim),
    )


@dataclass
class PohozaevReport:
    """Residuals of the three solitary-wave integral identities
    (normalized by the mass) plus the quadratic-case derived ratios."""

    residual_dilation: float         # -m + 2/(p+2) P - 3 D1 + T = 0
    residual_transverse: tuple       # per k: m - 2 P /((p+1)(p+2)) + D1 - 2 T_k + T = 0
    residual_total: float            # m - P/(p+1) + D1 + T = 0
    ratio_errors: tuple or None      # (P/m - 4, D1/m - 2/3, T/m - 1/3) for p=1, N=2
    energy: float
    action: float
    mass: float


def pohozaev_check(state):
    """Evaluate the Pohozaev-type identities with grid integrals."""
    v = state.field
    p = state.p
    m = mass(state)
    if m == 0.0:
        raise ValueError("zero field")
    P = signed_power(v, p + 2).integral(1)
    D1 = v.spectral_derivative(0).integral(2)
    comps = transverse_fields(state).components
    Tk = [comp.integral(2) for comp in comps]
    T = sum(Tk)
    fp1, fp2 = float(p + 1), float(p + 2)
    r49 = (-m + 2.0 / fp2 * P - 3.0 * D1 + T) / m
    r50 = tuple((m - 2.0 * P / (fp1 * fp2) + D1 - 2.0 * tk + T) / m
                for tk in Tk)
    r51 = (m - P / fp1 + D1 + T) / m
    ratios = None
    if p == 1 and state.grid.dim == 2:
        ratios = (P / m - 4.0, D1 / m - 2.0 / 3.0, Tk[0] / m - 1.0 / 3.0)
    return PohozaevReport(
        residual_dilation=float(r49),
        residual_transverse=r50,
        residual_total=float(r51),
        ratio_errors=ratios,
        energy=energy(state),
        action=action(state),
        mass=m,
    )


def decay_exponent(state, direction, which="v", radii=None):
    """Log-log decay fit of |v| (or |grad v|) along a ray.

    The default radius window is [0.15, 0.45] of the smallest half-length,
    inside the wrap-safe region.
    """
    grid = state.grid
    sigma = np.asarray(direction, dtype=np.float64)
    sigma = sigma / np.linalg.norm(sigma)
    if radii is None:
        lo = 0.15 * min(grid.half_lengths)
        hi = 0.45 * min(grid.half_lengths)
        radii = np.geomspace(lo, hi, 10)
    radii = np.asarray(radii, dtype=np.float64)
    pts = radii[:, None] * sigma[None, :]
    if which == "v":
        vals = state.field.interpolate(pts)
    elif which == "grad":
        comps = [state.field.spectral_derivative(ax).interpolate(pts)
                 for ax in range(grid.dim)]
        vals = np.sqrt(sum(np.asarray(c) ** 2 for c in comps))
    else:
        raise ValueError("which must be 'v' or 'grad'")
    return decay_fit(list(zip(radii, np.abs(vals))))
