"""Periodic grids and real-valued fields with spectral utilities.

A :class:`Grid` discretizes the box ``[-L_i, L_i)`` along each axis with a
power-of-two number of points, so the natural frequency set along axis ``i``
is ``{pi*k/L_i : k = -n_i/2 ... n_i/2 - 1}`` in FFT ordering.  A
:class:`Field` stores real samples on such a grid (row-major over axes in
order) and supports exact trigonometric interpolation, spectral resampling,
and file round-trips via a JSON sidecar plus a raw float64 payload.
"""

from __future__ import annotations

import datetime
import json
import os

import numpy as np


class FieldFormatError(Exception):
    """Raised when a field file pair is missing, inconsistent, or corrupt."""


class Grid:
    """Uniform periodic grid on the box ``prod_i [-L_i, L_i)``.

    Parameters
    ----------
    half_lengths : sequence of float
        Per-axis half-lengths ``L_i > 0``.
    sizes : sequence of int
        Per-axis point counts; each must be a power of two and at least 8.
    """

    def __init__(self, half_lengths, sizes):
        half_lengths = tuple(float(L) for L in np.atleast_1d(half_lengths))
        sizes = tuple(int(n) for n in np.atleast_1d(sizes))
        if len(half_lengths) != len(sizes):
            raise ValueError("half_lengths and sizes must have equal length")
        if not half_lengths:
            raise ValueError("grid needs at least one axis")
        for L in half_lengths:
            if not (L > 0.0) or not np.isfinite(L):
                raise ValueError("half-lengths must be positive and finite")
        for n in sizes:
            if n < 8 or (n & (n - 1)) != 0:
                raise ValueError("sizes must be powers of two with n >= 8")
        self.half_lengths = half_lengths
        self.sizes = sizes
        self.dim = len(sizes)
        self.spacings = tuple(2.0 * L / n for L, n in zip(half_lengths, sizes))

    def axis_points(self, i):
        """Sample coordinates along axis ``i`` (ascending, start at -L_i)."""
        L, n = self.half_lengths[i], self.sizes[i]
        return -L + self.spacings[i] * np.arange(n)

    def axis_freqs(self, i):
        """Angular frequencies along axis ``i`` in FFT ordering."""
        L, n = self.half_lengths[i], self.sizes[i]
        return 2.0 * np.pi * np.fft.fftfreq(n, d=2.0 * L / n)

    def freq_mesh(self):
        """Tuple of broadcastable frequency arrays, one per axis."""
        out = []
        for i in range(self.dim):
            shape = [1] * self.dim
            shape[i] = self.sizes[i]
            out.append(self.axis_freqs(i).reshape(shape))
        return tuple(out)

    def coord_mesh(self):
        """Tuple of broadcastable coordinate arrays, one per axis."""
        out = []
        for i in range(self.dim):
            shape = [1] * self.dim
            shape[i] = self.sizes[i]
            out.append(self.axis_points(i).reshape(shape))
        return tuple(out)

    @property
    def cell_volume(self):
        return float(np.prod(self.spacings))

    @property
    def point_count(self):
        return int(np.prod(self.sizes))

    def __eq__(self, other):
        return (isinstance(other, Grid)
                and self.half_lengths == other.half_lengths
                and self.sizes == other.sizes)

    def __repr__(self):
        return "Grid(half_lengths=%r, sizes=%r)" % (self.half_lengths, self.sizes)


class Field:
    """Real scalar field sampled on a :class:`Grid`.

    ``values`` is stored as a float64 array of shape ``grid.sizes``
    (row-major over axes in order); all entries must be finite.
    """

    def __init__(self, grid, values):
        values = np.asarray(values, dtype=np.float64)
        if values.size != grid.point_count:
            raise ValueError("value count does not match grid")
        values = values.reshape(grid.sizes)
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        self.grid = grid
        self.values = values

    @classmethod
    def from_function(cls, grid, func):
        """Sample ``func(*coords)`` on the grid (vectorized over meshes)."""
        return cls(grid, func(*np.meshgrid(
            *[grid.axis_points(i) for i in range(grid.dim)], indexing="ij")))

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.sizes))

    def copy(self):
        return Field(self.grid, self.values.copy())

    def fft(self):
        return np.fft.fftn(self.values)

    def integral(self, power=1):
        """Grid integral of ``values**power`` (rectangle rule, spectrally
        exact for periodic integrands)."""
        return float(np.sum(self.values ** power) * self.grid.cell_volume)

    def norm_l2(self):
        return float(np.sqrt(np.sum(self.values ** 2) * self.grid.cell_volume))

    def spectral_derivative(self, axis, order=1):
        """Spectral partial derivative along ``axis`` (uses the i*xi rule;
        the unmatched Nyquist mode is zeroed for odd orders)."""
        hat = self.fft()
        xi = self.grid.axis_freqs(axis)
        mult = (1j * xi) ** order
        if order % 2 == 1:
            mult = mult.copy()
            mult[self.grid.sizes[axis] // 2] = 0.0
        shape = [1] * self.grid.dim
        shape[axis] = self.grid.sizes[axis]
        return Field(self.grid, np.fft.ifftn(hat * mult.reshape(shape)).real)

    def interpolate(self, points):
        """Trigonometric interpolation at arbitrary points.

        Evaluates the band-limited interpolant sum_k vhat_k e^{i xi_k (x+L)}
        exactly; points need not lie inside the box (periodic extension).

        Parameters
        ----------
        points : array, shape (npts, dim) or (dim,)

        Returns
        -------
        array of shape (npts,), or a scalar for a single point.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if pts.shape[1] != self.grid.dim:
            raise ValueError("point dimension mismatch")
        hat = self.fft()
        # Symmetrize the Nyquist mode so the interpolant is real: split
        # the unmatched coefficient between +/- the Nyquist frequency.
        for ax in range(self.grid.dim):
            ny = self.grid.sizes[ax] // 2
            sl = [slice(None)] * self.grid.dim
            sl[ax] = ny
            hat[tuple(sl)] *= 0.5
        result = np.zeros(len(pts), dtype=np.complex128)
        for row, x in enumerate(pts):
            acc = hat
            for ax in range(self.grid.dim):
                xi = self.grid.axis_freqs(ax).copy()
                n = self.grid.sizes[ax]
                phase = np.exp(1j * xi * (x[ax] + self.grid.half_lengths[ax])) / n
                ny_phase = np.exp(1j * abs(xi[n // 2]) *
                                  (x[ax] + self.grid.half_lengths[ax])) / n
                # contract this axis: regular modes plus the mirrored Nyquist
                sl = [slice(None)] * acc.ndim
                sl[0] = n // 2
                nyq = acc[tuple(sl)]
                acc = np.tensordot(phase, acc, axes=(0, 0)) + ny_phase * nyq
            result[row] = acc
        out = result.real
        if np.asarray(points).ndim == 1:
            return float(out[0])
        return out

    def resample(self, target):
        """Spectral resample onto another grid over the same box.

        Pads or truncates Fourier modes; exact when the field is resolved.
        """
        if target.dim != self.grid.dim:
            raise ValueError("dimension mismatch")
        if target.half_lengths != self.grid.half_lengths:
            raise ValueError("resample requires identical boxes")
        hat = np.fft.fftshift(self.fft())
        src = self.grid.sizes
        dst = target.sizes
        out = np.zeros(dst, dtype=np.complex128)
        src_sl, dst_sl = [], []
        for ns, nd in zip(src, dst):
            m = min(ns, nd)
            src_sl.append(slice(ns // 2 - m // 2, ns // 2 + m // 2))
            dst_sl.append(slice(nd // 2 - m // 2, nd // 2 + m // 2))
        out[tuple(dst_sl)] = hat[tuple(src_sl)]
        scale = target.point_count / self.grid.point_count
        vals = np.fft.ifftn(np.fft.ifftshift(out)).real * scale
        return Field(target, vals)


def save_field(basepath, field, p=(1, 1), speed=1.0, residual=None):
    """Write ``basepath + '.json'`` (metadata sidecar) and ``basepath +
    '.f64'`` (little-endian float64 payload, row-major)."""
    meta = {
        "dim": field.grid.dim,
        "half_lengths": list(field.grid.half_lengths),
        "sizes": list(field.grid.sizes),
        "p_num": int(p[0]),
        "p_den": int(p[1]),
        "speed": float(speed),
        "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "residual": None if residual is None else float(residual),
    }
    with open(basepath + ".json", "w") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
    field.values.astype("<f8").tofile(basepath + ".f64")
    return basepath + ".json", basepath + ".f64"


def load_field(basepath):
    """Read a ``.json``/``.f64`` pair; returns ``(field, metadata)``.

    ``basepath`` may include either extension or neither.
    """
    for ext in (".json", ".f64"):
        if basepath.endswith(ext):
            basepath = basepath[: -len(ext)]
    jpath, bpath = basepath + ".json", basepath + ".f64"
    if not os.path.exists(jpath) or not os.path.exists(bpath):
        raise FieldFormatError("missing sidecar or payload for %r" % basepath)
    try:
        with open(jpath) as fh:
            meta = json.load(fh)
        grid = Grid(meta["half_lengths"], meta["sizes"])
    except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
        raise FieldFormatError("corrupt sidecar %r: %s" % (jpath, exc)) from exc
    raw = np.fromfile(bpath, dtype="<f8")
    if raw.size != grid.point_count:
        raise FieldFormatError(
            "payload length %d does not match grid %r" % (raw.size, grid.sizes))
    if not np.all(np.isfinite(raw)):
        raise FieldFormatError("payload contains non-finite values")
    return Field(grid, raw.astype(np.float64)), meta
