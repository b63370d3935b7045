"""Pseudospectral solitary-wave solver for generalized KP equations.

Solves the convolution fixed point  v = (1/(p+1)) K0 * v^{p+1}  on a
periodic grid with a stabilized (Petviashvili-type) iteration.  The
transform convention is numpy's: forward transform uses e^{-i x.xi}, so
d/dx_1 corresponds to multiplication by i*xi_1 and the first-order
convolution equation v = H0-op(v^p d_1 v) is applied with the multiplier
-i * H0hat(xi).

Conventions fixed here (and verified by the cross-residual tests):
  * the xi = 0 mode of every symbol multiplier is set to zero (fields live
    in the zero-mean-in-x1 class, where the K0hat origin discontinuity is
    irrelevant);
  * modes with xi_1 = 0 evaluate to zero under K0hat and the transverse
    ratio xi_j/xi_1 is defined as zero there;
  * fractional powers use the signed convention u^p = Sign(u)^m |u|^p for
    p = m/n with n odd.
"""

from __future__ import annotations

import json
from fractions import Fraction

import numpy as np

from .grids import Field, Grid
from .symbols import SingularPointError, h0_symbol, k0_symbol

_MULT_CACHE = {}
_DEALIAS_CACHE = {}


class SolverError(Exception):
    """Raised when the fixed-point iteration fails; carries the history."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history or []


def admissible_p_sup(dim):
    """Supremum of the admissible nonlinearity exponent, 4/(2N-3)."""
    return Fraction(4, 2 * dim - 3)


def _as_fraction(p):
    p = Fraction(p)
    if p.denominator % 2 == 0:
        raise ValueError("exponent denominator must be odd, got %s" % (p,))
    return p


def _grid_key(grid):
    return (grid.half_lengths, grid.sizes)


def symbol_multiplier(symbol, grid):
    """Real multiplier array for ``symbol`` on the grid frequencies.

    The xi = 0 mode is zero; results are cached per (symbol, grid).
    """
    key = (json.dumps(symbol.to_json(), sort_keys=True), _grid_key(grid))
    mult = _MULT_CACHE.get(key)
    if mult is None:
        if symbol.dim != grid.dim:
            raise ValueError("symbol dimension does not match grid")
        mesh = np.meshgrid(*[grid.axis_freqs(i) for i in range(grid.dim)],
                           indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        nonzero = np.any(pts != 0.0, axis=1)
        vals = np.zeros(len(pts))
        vals[nonzero] = symbol.eval(pts[nonzero])
        mult = vals.reshape(grid.sizes)
        _MULT_CACHE[key] = mult
    return mult


def apply_symbol(field, symbol):
    """Apply a Fourier-multiplier symbol to a field (xi = 0 mode zeroed)."""
    mult = symbol_multiplier(symbol, field.grid)
    return Field(field.grid, np.fft.ifftn(field.fft() * mult).real)


def dealias(field):
    """Zero the top third of the modes along every axis (2/3 rule)."""
    key = _grid_key(field.grid)
    mask = _DEALIAS_CACHE.get(key)
    if mask is None:
        mask = np.ones(field.grid.sizes, dtype=bool)
        for ax, n in enumerate(field.grid.sizes):
            idx = np.abs(np.fft.fftfreq(n) * n)
            keep = idx <= n // 3
            shape = [1] * field.grid.dim
            shape[ax] = n
            mask = mask & keep.reshape(shape)
        _DEALIAS_CACHE[key] = mask
    return Field(field.grid, np.fft.ifftn(field.fft() * mask).real)


def signed_power(field, p):
    """Pointwise signed power Sign(u)^m |u|^p for p = m/n (n odd)."""
    p = _as_fraction(p)
    if p <= 0:
        raise ValueError("exponent must be positive")
    v = field.values
    out = np.abs(v) ** float(p)
    if p.numerator % 2 == 1:
        out = np.sign(v) * out
    return Field(field.grid, out)


class WaveState:
    """A candidate solitary wave: field, exponent p = m/n, speed, history.

    Construction enforces the existence bound 0 < p < 4/(2N-3) and the
    zero-mean constraint (the grid mean of the field is subtracted, a
    convention matching the zero-mean-in-x1 solution class).
    """

    def __init__(self, field, p, c=1.0, history=None):
        p = _as_fraction(p)
        sup = admissible_p_sup(field.grid.dim)
        if not (0 < p < sup):
            raise ValueError(
                "exponent p = %s outside the admissible range (0, %s) in "
                "dimension %d: no non-constant solitary wave exists there"
                % (p, sup, field.grid.dim))
        if not (c > 0):
            raise ValueError("speed must be positive")
        vals = field.values - np.mean(field.values)
        self.field = Field(field.grid, vals)
        self.p = p
        self.c = float(c)
        self.history = list(history or [])

    @property
    def grid(self):
        return self.field.grid


def _seed_field(grid, init, p):
    if isinstance(init, Field):
        return Field(grid, init.values - np.mean(init.values))
    if init == "gaussian-bump":
        coords = np.meshgrid(*[grid.axis_points(i) for i in range(grid.dim)],
                             indexing="ij")
        r2 = sum(c ** 2 for c in coords)
        x1 = coords[0]
        # -d_1^2 exp(-r^2/25): zero mean in x_1 and lump-shaped
        vals = (2.0 / 25.0 - 4.0 * x1 ** 2 / 625.0) * np.exp(-r2 / 25.0)
        return Field(grid, vals - np.mean(vals))
    if init == "lump":
        from .diagnostics import lump_field
        f = lump_field(grid)
        return Field(grid, f.values - np.mean(f.values))
    raise ValueError("unknown seed %r" % (init,))


def _fixed_point_map(field, p):
    """T(v) = (1/(p+1)) K0 * v^{p+1} with 2/3-rule dealiasing of the power."""
    w = dealias(signed_power(field, p + 1))
    out = apply_symbol(w, k0_symbol(field.grid.dim))
    return Field(field.grid, out.values / float(p + 1))


def solve_solitary_wave(grid, p, init="gaussian-bump", max_iter=2000,
                        tol=1e-12):
    """Stabilized fixed-point iteration for v = (1/(p+1)) K0 * v^{p+1}.

    Iterates v_{k+1} = S_k^gamma T(v_k) with S_k = <v,v>/<v,T(v)> and
    gamma = (p+1)/p; stops when the relative L2 update drops below ``tol``.
    Returns a :class:`WaveState` whose history holds (relative update, S_k)
    pairs.
    """
    p = _as_fraction(p)
    sup = admissible_p_sup(grid.dim)
    if not (0 < p < sup):
        raise ValueError(
            "exponent p = %s outside the admissible range (0, %s) in "
            "dimension %d" % (p, sup, grid.dim))
    v = _seed_field(grid, init, p)
    if v.norm_l2() == 0.0:
        raise ValueError("seed field is zero")
    gamma = float((p + 1) / p)
    history = []
    growth_run = 0
    for _ in range(max_iter):
        tv = _fixed_point_map(v, p)
        num = float(np.sum(v.values * v.values))
        den = float(np.sum(v.values * tv.values))
        if den == 0.0 or num / den <= 0.0:
            raise SolverError("sign-degenerate iterate: S_k <= 0", history)
        s = num / den
        v_next = Field(grid, (s ** gamma) * tv.values)
        diff = float(np.sqrt(np.sum((v_next.values - v.values) ** 2)))
        rel = diff / float(np.sqrt(np.sum(v.values ** 2)))
        history.append((rel, s))
        if len(history) > 1 and rel > history[-2][0]:
            growth_run += 1
            if growth_run >= 50:
                raise SolverError(
                    "divergence: update grew over 50 consecutive steps",
                    history)
        else:
            growth_run = 0
        v = v_next
        if rel < tol:
            break
    return WaveState(v, p, c=1.0, history=history)


def residual_conv(state):
    """Relative L2 residual of v = (1/(p+1)) K0 * v^{p+1}."""
    v = state.field
    nrm = v.norm_l2()
    if nrm == 0.0:
        raise ValueError("zero field has no defined residual")
    tv = _fixed_point_map(v, state.p)
    return float(np.sqrt(np.sum((v.values - tv.values) ** 2))
                 * np.sqrt(v.grid.cell_volume)) / nrm


def residual_h0(state):
    """Relative L2 residual of the first-order form v = H0-op(v^p d_1 v).

    The operator multiplies by -i * H0hat under the e^{-i x.xi} forward
    transform convention.
    """
    v = state.field
    nrm = v.norm_l2()
    if nrm == 0.0:
        raise ValueError("zero field has no defined residual")
    grid = v.grid
    w = dealias(Field(grid, signed_power(v, state.p).values
                      * v.spectral_derivative(0).values))
    mult = symbol_multiplier(h0_symbol(grid.dim), grid)
    out = np.fft.ifftn(w.fft() * (-1j) * mult).real
    return float(np.sqrt(np.sum((v.values - out) ** 2))
                 * np.sqrt(grid.cell_volume)) / nrm


class TransverseFields:
    """The fields v_j (j = 2..N) defined by d_1 v_j = d_j v."""

    def __init__(self, components):
        self.components = list(components)


def transverse_fields(state):
    """Reconstruct v_j from v via vhat_j = (xi_j/xi_1) vhat.

    Modes with xi_1 = 0 are set to zero (the convention consistent with
    the zero-mean-in-x1 class).
    """
    grid = state.grid
    hat = state.field.fft()
    xi1 = grid.axis_freqs(0).reshape([-1] + [1] * (grid.dim - 1))
    comps = []
    for j in range(1, grid.dim):
        shape = [1] * grid.dim
        shape[j] = grid.sizes[j]
        xij = grid.axis_freqs(j).reshape(shape)
        ratio = np.where(xi1 != 0.0, xij / np.where(xi1 != 0.0, xi1, 1.0), 0.0)
        comps.append(Field(grid, np.fft.ifftn(hat * ratio).real))
    return TransverseFields(comps)


def rescale(state, c, target_grid=None):
    """Map a speed-c0 wave to speed c0*c: v_c(x) = c^{1/p} v(sqrt(c) x1, c x_perp).

    With the default target grid (half-lengths L1/sqrt(c), L_perp/c, same
    sizes) the map is an exact sample-wise scaling; any other target grid is
    filled by trigonometric interpolation of the source field.
    """
    if not (c > 0):
        raise ValueError("speed factor must be positive")
    c = float(c)
    grid = state.grid
    scale = c ** (1.0 / float(state.p))
    factors = [np.sqrt(c)] + [c] * (grid.dim - 1)
    default = Grid([L / f for L, f in zip(grid.half_lengths, factors)],
                   grid.sizes)
    if target_grid is None or target_grid == default:
        out = Field(default, scale * state.field.values)
    else:
        pts = np.stack([m.ravel() for m in np.meshgrid(
            *[target_grid.axis_points(i) for i in range(target_grid.dim)],
            indexing="ij")], axis=1)
        src = pts * np.asarray(factors)
        out = Field(target_grid,
                    scale * state.field.interpolate(src))
    return WaveState(out, state.p, c=state.c * c, history=state.history)


def _lemma3_nodes():
    """Quadrature nodes/weights for the kernel-gradient formula (N = 2).

    Inner disc B(0,1): geometric radial panels (Gauss-Legendre) times
    equal-weight midpoint angles (even count, so the node set is symmetric
    under y -> -y and avoids the coordinate axes).  Outer region: radial
    panels out to |y| = 30, where the product of kernel and nonlinearity
    tails is negligible.
    """
    from .quadrature import _gauss
    gx, gw = _gauss(6)
    n_theta = 96
    theta = (np.arange(n_theta) + 0.5) * (2.0 * np.pi / n_theta)
    w_theta = 2.0 * np.pi / n_theta
    ct, st = np.cos(theta), np.sin(theta)

    def radial(edges):
        rr, ww = [], []
        for a, b in zip(edges[:-1], edges[1:]):
            rr.append(0.5 * (b - a) * gx + 0.5 * (a + b))
            ww.append(0.5 * (b - a) * gw)
        return np.concatenate(rr), np.concatenate(ww)

    inner_edges = np.concatenate([[0.002], np.geomspace(0.005, 1.0, 13)])
    outer_edges = np.concatenate([np.geomspace(1.0, 10.0, 11), [16.0, 24.0, 36.0]])
    nodes = []
    for edges, tag in ((inner_edges, "inner"), (outer_edges, "outer")):
        r, wr = radial(edges)
        y = np.stack([np.outer(r, ct).ravel(), np.outer(r, st).ravel()],
                     axis=1)
        w = (np.outer(wr * r, np.full(n_theta, w_theta))).ravel()
        nodes.append((tag, y, w))
    return nodes


_LEMMA3_CACHE = {}


def gradient_via_lemma3(state, k, points):
    """Evaluate d_k v at sample points through the kernel-gradient formula.

    Uses  d_k (K0*f)(x) = i int_{|y|>1} K_k(y) f(x-y) dy
                        + i int_{|y|<1} K_k(y) (f(x-y) - f(x)) dy
                        + (int_{S^1} K0(y) y_k dy) f(x),
    with f = v^{p+1}/(p+1), so the result is d_k v for a true solution.
    K_k is purely imaginary and odd, so i K_k = -Im K_k pointwise and the
    principal value reduces to a symmetric quadrature.  Kernel values come
    from the one-dimensional reduced form (see kernels.kernel_line_value);
    restricted to N = 2.
    """
    from .kernels import kernel_line_value
    grid = state.grid
    if grid.dim != 2:
        raise NotImplementedError("kernel-gradient sampling implemented "
                                  "for N = 2 only")
    if k not in (1, 2):
        raise ValueError("axis k must be 1 or 2")
    d = [2, 0]
    d[k - 1] += 1
    d = tuple(d)
    key = d
    cached = _LEMMA3_CACHE.get(key)
    if cached is None:
        parts = []
        for tag, y, w in _lemma3_nodes():
            # midpoint angles are mirror-symmetric in both axes, so the
            # kernel is evaluated on the first quadrant only and extended
            # by its exact parities (odd along axis k, even otherwise)
            n_theta = 96
            n_r = len(y) // n_theta
            m = np.arange(n_theta // 4)
            base = np.array([[kernel_line_value(d, tuple(y[ir * n_theta + im]))
                              for im in m] for ir in range(n_r)])
            sgn_x1 = -1.0 if d[0] % 2 else 1.0    # theta -> pi - theta
            sgn_x2 = -1.0 if d[1] % 2 else 1.0    # theta -> -theta
            kv = np.empty((n_r, n_theta))
            q = n_theta // 4
            kv[:, 0:q] = base
            kv[:, q:2 * q] = sgn_x1 * base[:, ::-1]
            kv[:, 2 * q:3 * q] = sgn_x1 * sgn_x2 * base
            kv[:, 3 * q:] = sgn_x2 * base[:, ::-1]
            parts.append((tag, y, w, kv.ravel()))
        # odd moment of the (even) K0 kernel over the unit circle
        theta = (np.arange(32) + 0.5) * (np.pi / 16.0)
        circ = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        k0 = np.array([kernel_line_value((2, 0), tuple(pt)) for pt in circ])
        coeff = float(np.sum(k0 * circ[:, k - 1]) * (np.pi / 16.0))
        cached = (parts, coeff)
        _LEMMA3_CACHE[key] = cached
    parts, sphere_coeff = cached
    f = Field(grid, signed_power(state.field, state.p + 1).values
              / float(state.p + 1))
    # quintic spline on a 4x spectrally upsampled grid: cheap to sample at
    # the ~10^4 quadrature nodes, and far below the quadrature error here
    from scipy import ndimage
    up = f.resample(Grid(grid.half_lengths,
                         [min(4 * n, 4096) for n in grid.sizes]))
    coeffs = ndimage.spline_filter(up.values, order=5, mode="grid-wrap")

    def sample(pts_xy):
        idx = [(pts_xy[:, ax] + up.grid.half_lengths[ax])
               / up.grid.spacings[ax] for ax in range(2)]
        return ndimage.map_coordinates(coeffs, idx, order=5,
                                       mode="grid-wrap", prefilter=False)

    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    out = np.zeros(len(pts))
    for row, x in enumerate(pts):
        fx = sample(x[None, :])[0]
        total = sphere_coeff * fx
        for tag, y, w, kv in parts:
            shifted = sample(x[None, :] - y)
            if tag == "inner":
                shifted = shifted - fx
            total += -np.sum(w * kv * shifted)
        out[row] = total
    if np.asarray(points).ndim == 1:
        return float(out[0])
    return out
