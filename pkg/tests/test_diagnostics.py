"""Wave diagnostics: closed-form checks, invariants, extrapolation."""

import numpy as np
import pytest

from kpwaves import diagnostics, grids


@pytest.fixture(scope="module")
def lump_512():
    grid = grids.Grid([80.0, 80.0], [512, 512])
    return diagnostics.lump_state(grid)


def test_lump_closed_form_values():
    assert diagnostics.lump_value(1.0, (0.0, 0.0)) == 8.0
    # even in both variables
    assert diagnostics.lump_value(1.0, (2.0, -3.0)) == \
        diagnostics.lump_value(1.0, (-2.0, 3.0))
    # negative tail along the propagation axis, positive transversally
    assert diagnostics.lump_value(1.0, (10.0, 0.0)) < 0.0
    assert diagnostics.lump_value(1.0, (0.0, 10.0)) > 0.0
    # speed scaling: v_c(x) = c v(sqrt(c) x1, c x2)
    c, x1, x2 = 3.0, 0.7, -1.2
    assert np.isclose(
        diagnostics.lump_value(c, (x1, x2)),
        c * diagnostics.lump_value(1.0, (np.sqrt(c) * x1, c * x2)),
        rtol=1e-14)


def test_lump_integrals_match_closed_forms(lump_512):
    m = diagnostics.mass(lump_512)
    assert abs(m - 96.0 * np.pi) < 0.01 * 96.0 * np.pi
    e = diagnostics.energy(lump_512)
    assert abs(e - (-16.0 * np.pi)) < 0.02 * 16.0 * np.pi
    s = diagnostics.action(lump_512)
    assert abs(s - 32.0 * np.pi) < 0.02 * 32.0 * np.pi


def test_far_field_profile_prediction_shape(lump_512):
    predict = diagnostics.v_infinity_prediction(lump_512)
    dirs = np.array([[1.0, 0.0], [0.0, 1.0]])
    vals = predict(dirs)
    # coefficient (1/4pi)(1 - 2 sigma_1^2) * integral of v^2
    assert abs(vals[0] - (-24.0)) < 0.5
    assert abs(vals[1] - 24.0) < 0.5
    diag = np.array([[1.0, 1.0]]) / np.sqrt(2.0)
    assert abs(predict(diag)[0]) < 0.1


def test_energy_and_action_branches_agree(lump_512):
    direction = np.array([[0.0, 1.0]])
    a = float(diagnostics.v_infinity_prediction(lump_512)(direction)[0])
    b = float(diagnostics.v_infinity_from_energy(lump_512,
                                                 "energy")(direction)[0])
    c = float(diagnostics.v_infinity_from_energy(lump_512,
                                                 "action")(direction)[0])
    assert abs(a - b) < 0.03 * abs(a)
    assert abs(a - c) < 0.03 * abs(a)
    with pytest.raises(ValueError):
        diagnostics.v_infinity_from_energy(lump_512, "nonsense")


def test_profile_extract_guards(lump_512):
    dirs = diagnostics.circle_directions(8)
    with pytest.raises(ValueError):
        diagnostics.profile_extract(lump_512, [10.0, 60.0], dirs)  # wraps
    with pytest.raises(ValueError):
        diagnostics.profile_extract(lump_512, [20.0], dirs)


def test_profile_two_point_and_lsq_branches(lump_512):
    dirs = diagnostics.circle_directions(16)
    two = diagnostics.profile_extract(lump_512, [12.0, 24.0], dirs)
    lsq = diagnostics.profile_extract(lump_512, [10.0, 13.0, 16.0], dirs)
    # at L = 80 image contamination grows with the sampling radius, so
    # small radii with the least-squares branch extrapolate tightest
    assert two.sup_gap < 0.25
    assert lsq.sup_gap < 0.15
    assert np.max(np.abs(two.extrapolated - lsq.extrapolated)) < 6.0
    assert lsq.uniformity_claimed  # p = 1 >= 1/N in dimension 2


def test_circle_directions_unit_norm():
    dirs = diagnostics.circle_directions(12)
    assert dirs.shape == (12, 2)
    assert np.allclose(np.linalg.norm(dirs, axis=1), 1.0)


def test_periodized_lump_has_no_line_average():
    grid = grids.Grid([40.0, 40.0], [256, 256])
    f = diagnostics.periodized_lump_field(grid, images=4)
    line_sums = np.sum(f.values, axis=0)
    assert np.max(np.abs(line_sums)) < 1e-10 * np.max(np.abs(f.values))
    raw = diagnostics.lump_field(grid)
    raw_sums = np.sum(raw.values, axis=0)
    # the direct sample carries a genuine line residue the torus
    # representative removes
    assert np.max(np.abs(raw_sums)) > 1e-3 * np.max(np.abs(raw.values))


def test_pohozaev_report_fields(lump_512):
    rep = diagnostics.pohozaev_check(lump_512)
    assert abs(rep.residual_dilation) < 2e-2
    assert len(rep.residual_transverse) == 1
    assert abs(rep.residual_total) < 2e-2
    assert rep.ratio_errors is not None
    # ratios P/m, D1/m, T2/m approach 4, 2/3, 1/3
    assert abs(rep.ratio_errors[0]) < 0.05 * 4.0


def test_pde_residual_detects_perturbation():
    pts = np.array([[0.5, 0.3], [2.0, 1.0]])
    good = diagnostics.lump_pde_residual(1.0, pts)
    assert np.max(np.abs(good)) < 1e-4
    # a wrong speed scaling must not satisfy the unit-speed equation
    bad = diagnostics.lump_pde_residual(1.3, pts)
    assert np.max(np.abs(bad)) > 1e-2


def test_decay_exponent_directions(lump_512):
    radii = np.geomspace(12.0, 30.0, 8)
    fit = diagnostics.decay_exponent(lump_512, (0.0, 1.0), "v", radii=radii)
    assert abs(fit.slope - (-2.0)) < 0.15
    with pytest.raises(ValueError):
        diagnostics.decay_exponent(lump_512, (1.0, 0.0), "nonsense")
