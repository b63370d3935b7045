"""Grid/field container: interpolation, calculus, and file round-trips."""

import json

import numpy as np
import pytest

from kpwaves import grids


@pytest.fixture
def small_grid():
    return grids.Grid([4.0, 4.0], [32, 32])


def _bandlimited(grid):
    # a real trigonometric polynomial well inside the Nyquist band
    X, Y = np.meshgrid(grid.axis_points(0), grid.axis_points(1),
                       indexing="ij")
    w = np.pi / grid.half_lengths[0]
    return grids.Field(grid, np.cos(3 * w * X) * np.sin(2 * w * Y)
                       + 0.25 * np.sin(w * X))


def test_grid_validation():
    with pytest.raises(ValueError):
        grids.Grid([4.0, 4.0], [48, 32])       # not a power of two
    with pytest.raises(ValueError):
        grids.Grid([4.0, 4.0], [4, 32])        # too small
    with pytest.raises(ValueError):
        grids.Grid([-1.0, 4.0], [32, 32])


def test_axis_points_and_freqs(small_grid):
    x = small_grid.axis_points(0)
    assert x[0] == -4.0 and x[-1] < 4.0
    assert np.allclose(np.diff(x), small_grid.spacings[0])
    xi = small_grid.axis_freqs(0)
    assert xi[0] == 0.0
    assert np.isclose(xi[1], np.pi / 4.0)


def test_trig_interpolation_is_exact_for_bandlimited(small_grid):
    f = _bandlimited(small_grid)
    rng = np.random.default_rng(1)
    pts = rng.uniform(-4.0, 4.0, size=(40, 2))
    w = np.pi / 4.0
    expected = (np.cos(3 * w * pts[:, 0]) * np.sin(2 * w * pts[:, 1])
                + 0.25 * np.sin(w * pts[:, 0]))
    assert np.allclose(f.interpolate(pts), expected, atol=1e-12)


def test_spectral_derivative_matches_closed_form(small_grid):
    f = _bandlimited(small_grid)
    w = np.pi / 4.0
    X, Y = np.meshgrid(small_grid.axis_points(0), small_grid.axis_points(1),
                       indexing="ij")
    d1 = f.spectral_derivative(0, 1)
    expected = (-3 * w * np.sin(3 * w * X) * np.sin(2 * w * Y)
                + 0.25 * w * np.cos(w * X))
    assert np.allclose(d1.values, expected, atol=1e-10)


def test_resample_preserves_bandlimited_values(small_grid):
    f = _bandlimited(small_grid)
    fine = f.resample(grids.Grid([4.0, 4.0], [64, 64]))
    expected = _bandlimited(fine.grid)
    assert np.allclose(fine.values, expected.values, atol=1e-12)


def test_parseval(small_grid):
    f = _bandlimited(small_grid)
    hat = f.fft()
    lhs = np.sum(f.values ** 2)
    rhs = np.sum(np.abs(hat) ** 2) / f.values.size
    assert np.isclose(lhs, rhs, rtol=1e-14)


def test_field_file_roundtrip_bit_identical(tmp_path, small_grid):
    rng = np.random.default_rng(5)
    f = grids.Field(small_grid, rng.standard_normal(small_grid.sizes))
    base = str(tmp_path / "wave")
    grids.save_field(base, f, p=(1, 1), speed=1.0, residual=2.5e-9)
    loaded, meta = grids.load_field(base)
    assert np.array_equal(loaded.values, f.values)  # bit identical
    assert loaded.grid == small_grid
    assert meta["residual"] == 2.5e-9


def test_load_rejects_corrupt_files(tmp_path, small_grid):
    f = grids.Field.zeros(small_grid)
    base = str(tmp_path / "wave")
    grids.save_field(base, f)
    # truncated payload
    with open(base + ".f64", "r+b") as fh:
        fh.truncate(100)
    with pytest.raises(grids.FieldFormatError):
        grids.load_field(base)
    # restore length but corrupt the sidecar
    grids.save_field(base, f)
    with open(base + ".json") as fh:
        doc = json.load(fh)
    del doc["sizes"]
    with open(base + ".json", "w") as fh:
        json.dump(doc, fh)
    with pytest.raises(grids.FieldFormatError):
        grids.load_field(base)
    with pytest.raises(grids.FieldFormatError):
        grids.load_field(str(tmp_path / "missing"))


def test_non_finite_payload_rejected(tmp_path, small_grid):
    f = grids.Field.zeros(small_grid)
    base = str(tmp_path / "wave")
    grids.save_field(base, f)
    bad = np.zeros(small_grid.point_count)
    bad[7] = np.nan
    bad.astype("<f8").tofile(base + ".f64")
    with pytest.raises(grids.FieldFormatError):
        grids.load_field(base)
