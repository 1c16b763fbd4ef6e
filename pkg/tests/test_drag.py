"""Tests for gap drag: energy, surface pairing, exterior policy, fits."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gapflow.drag import (
    DragCurve,
    DragRow,
    ScalingModel,
    drag_curve,
    energy,
    exterior_constant,
    fit_scaling,
    lower_bound_witness,
    surface_drag,
)
from gapflow.profile import SlipRegime
from gapflow.quadrature import QuadratureSpec

SLIP = SlipRegime.slip(1.0, 1.0)
SLIP_B = SlipRegime.slip(0.5, 2.0)
MIXED = SlipRegime.mixed(1.0)

H_SWEEP = (1e-3, 1e-4, 1e-5, 1e-6)
SWEEP_SPEC = QuadratureSpec(rel_tol=1e-8, abs_tol=1e-12)

SYNTH_FIT_TOL = 1e-9
WALL_XCHECK_RTOL = 1e-9
AGREEMENT_WINDOW = 0.3
ENVELOPE_FACTOR = 10.0


@pytest.fixture(scope="module")
def slip_curve():
    return drag_curve(SLIP, H_SWEEP, spec=SWEEP_SPEC)


@pytest.fixture(scope="module")
def mixed_curve():
    return drag_curve(MIXED, H_SWEEP, spec=SWEEP_SPEC)


def _synthetic_curve(energy_fn, surface_fn, hs=(1e-2, 1e-3, 1e-4, 1e-5, 1e-6)):
    rows = tuple(
        DragRow(
            h=h,
            energy=energy_fn(h),
            surface=surface_fn(h),
            gradient_part=1.0,
            sphere_part=1.0,
        )
        for h in hs
    )
    return DragCurve(regime=SLIP, rows=rows)


# ---------------------------------------------------------------- fits


def test_log_fit_recovers_exact_synthetic_law():
    curve = _synthetic_curve(lambda h: 5.0 * abs(math.log(h)) + 2.0, lambda h: 3.0 / h)
    fit = fit_scaling(curve, ScalingModel.LOG, quantity="energy")
    assert abs(fit.a - 5.0) < SYNTH_FIT_TOL
    assert abs(fit.b - 2.0) < SYNTH_FIT_TOL
    assert fit.r_squared > 1.0 - 1e-12


def test_inverse_fit_recovers_exact_synthetic_law():
    curve = _synthetic_curve(lambda h: 5.0 * abs(math.log(h)) + 2.0, lambda h: 3.0 / h)
    fit = fit_scaling(curve, ScalingModel.INVERSE, quantity="surface")
    assert abs(fit.a - 3.0) < SYNTH_FIT_TOL
    assert abs(fit.b) < SYNTH_FIT_TOL
    assert fit.r_squared > 1.0 - 1e-12


def test_fits_discriminate_between_the_two_laws():
    curve = _synthetic_curve(lambda h: 5.0 * abs(math.log(h)) + 2.0, lambda h: 3.0 / h)
    wrong_on_log = fit_scaling(curve, ScalingModel.INVERSE, quantity="energy")
    wrong_on_inv = fit_scaling(curve, ScalingModel.LOG, quantity="surface")
    assert wrong_on_log.r_squared < 0.99
    assert wrong_on_inv.r_squared < 0.99


@given(
    a=st.floats(0.1, 100.0),
    b=st.floats(0.0, 50.0),
    model=st.sampled_from(list(ScalingModel)),
)
def test_fit_recovers_random_synthetic_coefficients(a, b, model):
    if model is ScalingModel.LOG:
        law = lambda h: a * abs(math.log(h)) + b
    else:
        law = lambda h: a / h + b
    curve = _synthetic_curve(law, law)
    fit = fit_scaling(curve, model, quantity="energy")
    scale = a + abs(b)
    assert abs(fit.a - a) < 1e-7 * scale
    assert abs(fit.b - b) < 1e-6 * scale
    assert fit.r_squared > 1.0 - 1e-9


def test_fit_requires_at_least_four_rows():
    rows = tuple(
        DragRow(h=h, energy=1.0, surface=1.0, gradient_part=1.0)
        for h in (1e-2, 1e-3, 1e-4)
    )
    curve = DragCurve(regime=SLIP, rows=rows)
    with pytest.raises(ValueError, match="at least 4"):
        fit_scaling(curve, ScalingModel.LOG)


def test_fit_rejects_unknown_quantity():
    curve = _synthetic_curve(lambda h: 1.0, lambda h: 1.0)
    with pytest.raises(ValueError, match="quantity"):
        fit_scaling(curve, ScalingModel.LOG, quantity="pressure")


# ---------------------------------------------------------------- curve API


def test_drag_curve_rejects_nonpositive_h():
    row = DragRow(h=0.0, energy=1.0, surface=1.0, gradient_part=1.0)
    with pytest.raises(ValueError, match="h > 0"):
        DragCurve(regime=SLIP, rows=(row,))


def test_drag_curve_rejects_nondecreasing_h():
    rows = tuple(
        DragRow(h=h, energy=1.0, surface=1.0, gradient_part=1.0)
        for h in (1e-3, 1e-2)
    )
    with pytest.raises(ValueError, match="decreasing"):
        DragCurve(regime=SLIP, rows=rows)
    rows = tuple(
        DragRow(h=1e-3, energy=1.0, surface=1.0, gradient_part=1.0)
        for _ in range(2)
    )
    with pytest.raises(ValueError, match="decreasing"):
        DragCurve(regime=SLIP, rows=rows)


def test_drag_curve_rejects_nonpositive_drag_values():
    bad_energy = DragRow(
        h=1e-3, energy=0.0, surface=1.0, gradient_part=1.0
    )
    with pytest.raises(ValueError, match="positive"):
        DragCurve(regime=SLIP, rows=(bad_energy,))
    bad_surface = DragRow(
        h=1e-3, energy=1.0, surface=-2.0, gradient_part=1.0
    )
    with pytest.raises(ValueError, match="positive"):
        DragCurve(regime=SLIP, rows=(bad_surface,))


def test_drag_curve_sorts_and_dedupes_h_list():
    curve = drag_curve(SLIP, (1e-4, 1e-2, 1e-3, 1e-2, 1e-4), spec=SWEEP_SPEC)
    assert [row.h for row in curve.rows] == [1e-2, 1e-3, 1e-4]


def test_drag_curve_provenance_records_the_run(slip_curve):
    prov = slip_curve.provenance
    for key in (
        "r_max",
        "beta_S",
        "beta_Omega",
        "rel_tol",
        "abs_tol",
        "exterior",
        "exterior_constant",
        "exterior_h_ref",
    ):
        assert key in prov
    assert prov["exterior"] == "included"
    assert prov["exterior_constant"] > 0.0


def test_drag_curve_threads_are_bit_identical(slip_curve):
    threaded = drag_curve(SLIP, H_SWEEP, spec=SWEEP_SPEC, threads=4)
    assert threaded.rows == slip_curve.rows


def test_exterior_mode_shifts_totals_by_the_recorded_constant(slip_curve):
    bare = drag_curve(SLIP, H_SWEEP, spec=SWEEP_SPEC, exterior="excluded")
    ring = slip_curve.provenance["exterior_constant"]
    assert bare.provenance["exterior_constant"] == ring
    for with_ring, without in zip(slip_curve.rows, bare.rows):
        assert with_ring.energy - without.energy == pytest.approx(ring, abs=1e-12)
        assert with_ring.surface - without.surface == pytest.approx(ring, abs=1e-12)
        # the labeled parts stay bare aperture pieces in both modes
        assert with_ring.gradient_part == without.gradient_part
        assert with_ring.boundary_part == without.boundary_part


def test_exterior_mode_is_validated():
    with pytest.raises(ValueError, match="exterior"):
        drag_curve(SLIP, H_SWEEP, spec=SWEEP_SPEC, exterior="sometimes")
    with pytest.raises(ValueError, match="exterior"):
        energy(SLIP, 1e-3, spec=SWEEP_SPEC, exterior="sometimes")


def test_exterior_constant_is_cached_and_positive():
    first = exterior_constant(SLIP)
    second = exterior_constant(SLIP)
    assert first == second
    assert first > 0.0
    assert exterior_constant(MIXED) > 0.0


def test_column_returns_aligned_arrays(slip_curve):
    hs = slip_curve.column("h")
    es = slip_curve.column("energy")
    assert hs.shape == es.shape == (len(H_SWEEP),)
    assert np.all(np.diff(hs) < 0)


# ---------------------------------------------------------------- breakdowns


def test_energy_breakdown_sums_to_total():
    for regime in (SLIP, SLIP_B, MIXED):
        e = energy(regime, 1e-4, spec=SWEEP_SPEC)
        parts = e.gradient + e.sphere + e.wall + e.exterior
        assert e.total == pytest.approx(parts, rel=1e-14)
        assert e.gradient > 0.0
        assert e.wall > 0.0
        assert e.exterior == exterior_constant(regime)


def test_surface_drag_breakdown_sums_to_total():
    for regime in (SLIP, SLIP_B, MIXED):
        n = surface_drag(regime, 1e-4, spec=SWEEP_SPEC)
        parts = n.volume + n.dissipation + n.wall + n.sphere + n.exterior
        assert n.value == pytest.approx(parts, rel=1e-13)
        assert n.dissipation > 0.0
        assert n.error >= 0.0


def test_excluded_mode_zeroes_the_exterior_field():
    e = energy(SLIP, 1e-4, spec=SWEEP_SPEC, exterior="excluded")
    assert e.exterior == 0.0
    n = surface_drag(SLIP, 1e-4, spec=SWEEP_SPEC, exterior="excluded")
    assert n.exterior == 0.0


def test_mixed_regime_has_no_sphere_terms():
    e = energy(MIXED, 1e-4, spec=SWEEP_SPEC)
    assert e.sphere == 0.0
    n = surface_drag(MIXED, 1e-4, spec=SWEEP_SPEC)
    assert n.sphere == 0.0


def test_energy_rejects_the_no_slip_regime():
    with pytest.raises(ValueError):
        energy(SlipRegime.no_slip(), 1e-3, spec=SWEEP_SPEC)
    with pytest.raises(ValueError):
        surface_drag(SlipRegime.no_slip(), 1e-3, spec=SWEEP_SPEC)


def test_wall_traction_term_matches_wall_energy_term():
    # On the wall u_z = 0 and the tangential condition u_r = 2 beta D_rz
    # holds exactly, so the traction integrand 2 D_rz u_r equals the
    # weighted slip-energy integrand u_r^2 / beta.  Two independent code
    # paths, one number.
    for regime in (SLIP, SLIP_B, MIXED):
        for h in (1e-2, 1e-4, 1e-6):
            e = energy(regime, h, spec=SWEEP_SPEC)
            n = surface_drag(regime, h, spec=SWEEP_SPEC)
            assert n.wall == pytest.approx(e.wall, rel=WALL_XCHECK_RTOL)


# ---------------------------------------------------------------- scaling


def test_drag_blows_up_monotonically_as_the_gap_closes(slip_curve, mixed_curve):
    for curve in (slip_curve, mixed_curve):
        es = curve.column("energy")
        ns = curve.column("surface")
        assert np.all(np.diff(es) > 0.0)
        assert np.all(np.diff(ns) > 0.0)


def test_surface_pairing_agrees_with_energy(slip_curve, mixed_curve):
    for curve in (slip_curve, mixed_curve):
        ratio = curve.column("surface") / curve.column("energy")
        assert np.all(np.abs(ratio - 1.0) <= AGREEMENT_WINDOW)


def test_slip_energy_tracks_log_envelope(slip_curve):
    scaled = slip_curve.column("energy") / np.abs(np.log(slip_curve.column("h")))
    assert scaled.min() > 0.0
    assert scaled.max() / scaled.min() <= ENVELOPE_FACTOR


def test_mixed_energy_tracks_inverse_envelope(mixed_curve):
    scaled = mixed_curve.column("energy") * mixed_curve.column("h")
    assert scaled.min() > 0.0
    assert scaled.max() / scaled.min() <= ENVELOPE_FACTOR


def test_regimes_separate_as_the_gap_closes(slip_curve, mixed_curve):
    slip_e = slip_curve.column("energy")
    mixed_e = mixed_curve.column("energy")
    wide = mixed_e[0] / slip_e[0]  # h = 1e-3
    tight = mixed_e[-1] / slip_e[-1]  # h = 1e-6
    assert tight >= 10.0 * wide


def test_slip_curve_prefers_the_log_law(slip_curve):
    log_fit = fit_scaling(slip_curve, ScalingModel.LOG)
    inv_fit = fit_scaling(slip_curve, ScalingModel.INVERSE)
    assert log_fit.r_squared >= 0.99
    assert log_fit.r_squared > inv_fit.r_squared
    assert log_fit.a > 0.0


def test_mixed_curve_prefers_the_inverse_law(mixed_curve):
    inv_fit = fit_scaling(mixed_curve, ScalingModel.INVERSE)
    log_fit = fit_scaling(mixed_curve, ScalingModel.LOG)
    assert inv_fit.r_squared >= 0.99
    assert inv_fit.r_squared > log_fit.r_squared
    assert inv_fit.a > 0.0


def test_surface_quantity_fits_like_energy(slip_curve, mixed_curve):
    slip_fit = fit_scaling(slip_curve, ScalingModel.LOG, quantity="surface")
    assert slip_fit.r_squared >= 0.99
    mixed_fit = fit_scaling(mixed_curve, ScalingModel.INVERSE, quantity="surface")
    assert mixed_fit.r_squared >= 0.99


def test_single_entry_witness_pins_the_slip_lower_bound():
    values = [lower_bound_witness(SLIP, h, spec=SWEEP_SPEC) for h in H_SWEEP]
    scaled = np.array(values) / np.abs(np.log(H_SWEEP))
    assert np.all(np.diff(values) > 0.0)
    assert scaled.min() > 0.0
    assert scaled.max() / scaled.min() <= ENVELOPE_FACTOR
