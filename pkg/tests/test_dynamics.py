"""Tests for the reduced contact dynamics: drag laws, events, scans."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gapflow.drag import DragCurve, DragRow
from gapflow.dynamics import (
    EventKind,
    FallParameters,
    StiffnessError,
    Trajectory,
    TerminalEvent,
    calibrate_kappa,
    drag_law,
    simulate,
    touchdown_scan,
)
from gapflow.profile import SlipRegime, UnsupportedRegimeError
from gapflow.quadrature import _ols

SLIP = SlipRegime.slip(1.0, 1.0)
MIXED = SlipRegime.mixed(1.0)
NO_SLIP = SlipRegime.no_slip()

FREE_FALL_TOL = 1e-8
TSTAR_STABILITY = 1e-6
LAW_NODE_RTOL = 1e-13


def _params(G=1.0, kappa=1.0):
    # G = (rho_S - rho_F) g / rho_S = g / 2 at the default densities
    return FallParameters(rho_S=2.0, rho_F=1.0, g=2.0 * G, kappa=kappa)


def _synthetic_table(regime, law, hs=(1e-2, 1e-3, 1e-4, 1e-5, 1e-6)):
    rows = tuple(
        DragRow(h=h, energy=law(h), surface=law(h), gradient_part=1.0,
                sphere_part=1.0)
        for h in hs
    )
    return DragCurve(regime=regime, rows=rows)


# ---------------------------------------------------------------- drag laws


def test_analytic_slip_law_is_kappa_log():
    law = drag_law(SLIP, kappa=1.0)
    assert law(math.exp(-2.0)) == pytest.approx(2.0, rel=1e-14)
    assert law.kind == "analytic"
    assert law.deep == ("log", 1.0, 0.0)


def test_analytic_mixed_law_is_kappa_over_h():
    law = drag_law(MIXED, kappa=3.0)
    assert law(0.01) == pytest.approx(300.0, rel=1e-14)
    assert law.deep == ("inverse", 3.0, 0.0)


def test_no_slip_law_requires_the_surrogate_flag():
    with pytest.raises(UnsupportedRegimeError):
        drag_law(NO_SLIP, kappa=1.0)
    law = drag_law(NO_SLIP, kappa=2.0, surrogate=True)
    assert law.kind == "surrogate"
    assert law(0.01) == pytest.approx(200.0, rel=1e-14)


def test_laws_are_positive_on_the_working_range():
    hs = np.geomspace(1e-12, 0.5, 200)
    assert np.all(drag_law(SLIP, kappa=1.0)(hs) > 0.0)
    assert np.all(drag_law(MIXED, kappa=1.0)(hs) > 0.0)


def test_drag_law_validates_source_and_kappa():
    with pytest.raises(ValueError, match="source"):
        drag_law(SLIP, source="tabular")
    with pytest.raises(ValueError, match="kappa"):
        drag_law(SLIP, kappa=-1.0)


def test_table_law_reproduces_tabulated_nodes():
    slip_exact = lambda h: 5.0 * abs(math.log(h)) + 2.0
    curve = _synthetic_table(SLIP, slip_exact)
    law = drag_law(SLIP, source=curve)
    for row in curve.rows:
        assert law(row.h) == pytest.approx(row.energy, rel=LAW_NODE_RTOL)


def test_table_law_extrapolates_by_the_regime_model():
    slip_exact = lambda h: 5.0 * abs(math.log(h)) + 2.0
    slip_law = drag_law(SLIP, source=_synthetic_table(SLIP, slip_exact))
    # the anchored log model continues the exact synthetic law downward
    assert slip_law(1e-8) == pytest.approx(slip_exact(1e-8), rel=1e-9)
    # continuity across the smallest node
    assert slip_law(1e-6 * (1.0 - 1e-9)) == pytest.approx(
        slip_law(1e-6), rel=1e-6
    )

    mixed_law = drag_law(MIXED, source=_synthetic_table(MIXED, lambda h: 3.0 / h))
    assert mixed_law(1e-9) == pytest.approx(3.0e9, rel=1e-12)


def test_table_law_interpolates_between_nodes():
    curve = _synthetic_table(MIXED, lambda h: 3.0 / h)
    law = drag_law(MIXED, source=curve)
    # log-log linear interpolation is exact for a pure power law
    assert law(3.3e-4) == pytest.approx(3.0 / 3.3e-4, rel=1e-12)


def test_table_law_rejects_non_monotone_energies():
    rows = (
        DragRow(h=1e-2, energy=10.0, surface=10.0, gradient_part=1.0,
                sphere_part=1.0),
        DragRow(h=1e-3, energy=30.0, surface=30.0, gradient_part=1.0,
                sphere_part=1.0),
        DragRow(h=1e-4, energy=20.0, surface=20.0, gradient_part=1.0,
                sphere_part=1.0),
        DragRow(h=1e-5, energy=40.0, surface=40.0, gradient_part=1.0,
                sphere_part=1.0),
    )
    with pytest.raises(ValueError, match="monotone"):
        drag_law(SLIP, source=DragCurve(regime=SLIP, rows=rows))


def test_calibrate_kappa_recovers_synthetic_prefactors():
    slip_kappa, slip_fit = calibrate_kappa(
        _synthetic_table(SLIP, lambda h: 5.0 * abs(math.log(h)) + 2.0)
    )
    assert slip_kappa == pytest.approx(5.0, rel=1e-9)
    assert slip_fit.r_squared > 1.0 - 1e-12
    mixed_kappa, _ = calibrate_kappa(_synthetic_table(MIXED, lambda h: 3.0 / h))
    assert mixed_kappa == pytest.approx(3.0, rel=1e-9)


# ---------------------------------------------------------------- parameters


def test_default_parameters_give_unit_effective_gravity():
    assert FallParameters().G == 1.0


def test_parameter_validation():
    with pytest.raises(ValueError):
        FallParameters(rho_S=0.0)
    with pytest.raises(ValueError):
        FallParameters(rho_F=-0.5)
    with pytest.raises(ValueError):
        FallParameters(g=0.0)
    with pytest.raises(ValueError):
        FallParameters(mu_F=0.0)
    with pytest.raises(ValueError):
        FallParameters(kappa=-0.1)


@given(
    rho_S=st.floats(0.1, 10.0),
    rho_F=st.floats(0.0, 10.0),
    g=st.floats(0.1, 10.0),
)
def test_effective_gravity_sign_tracks_the_density_contrast(rho_S, rho_F, g):
    params = FallParameters(rho_S=rho_S, rho_F=rho_F, g=g)
    assert (params.G > 0.0) == (rho_S > rho_F)


# ---------------------------------------------------------------- free fall


def test_free_fall_from_quarter_gap():
    traj = simulate(_params(kappa=0.0), SLIP, h0=0.25)
    assert traj.event.kind == EventKind.TOUCHDOWN
    assert traj.event.t == pytest.approx(math.sqrt(0.5), abs=FREE_FALL_TOL)
    assert traj.event.speed == pytest.approx(math.sqrt(0.5), abs=FREE_FALL_TOL)


def test_free_fall_from_half_gap():
    traj = simulate(_params(kappa=0.0), SLIP, h0=0.5, h_max=1.0)
    assert traj.event.kind == EventKind.TOUCHDOWN
    assert traj.event.t == pytest.approx(1.0, abs=FREE_FALL_TOL)
    assert traj.event.speed == pytest.approx(1.0, abs=FREE_FALL_TOL)


def test_trajectory_rows_are_ordered_and_positive():
    traj = simulate(_params(), SLIP, h0=0.25)
    assert len(traj) > 2
    assert np.all(np.diff(traj.t) > 0.0)
    assert np.all(traj.h > 0.0)
    assert traj.t[0] == 0.0 and traj.h[0] == 0.25


def test_trajectory_validation():
    event = TerminalEvent(EventKind.TIME_LIMIT, 1.0, 0.1, 0.0)
    with pytest.raises(ValueError, match="increasing"):
        Trajectory(
            t=np.array([0.0, 0.0]), h=np.array([0.1, 0.1]),
            v=np.array([0.0, 0.0]), event=event,
        )
    with pytest.raises(ValueError, match="positive"):
        Trajectory(
            t=np.array([0.0, 1.0]), h=np.array([0.1, -0.1]),
            v=np.array([0.0, 0.0]), event=event,
        )
    with pytest.raises(ValueError, match="aligned"):
        Trajectory(
            t=np.array([0.0, 1.0]), h=np.array([0.1]),
            v=np.array([0.0, 0.0]), event=event,
        )


# ---------------------------------------------------------------- slip falls


def test_slip_touchdown_is_finite_and_tolerance_stable():
    traj = simulate(_params(), SLIP, h0=0.25)
    assert traj.event.kind == EventKind.TOUCHDOWN
    tighter = simulate(_params(), SLIP, h0=0.25, rtol=0.5e-9, atol=0.5e-12)
    assert abs(traj.event.t - tighter.event.t) < TSTAR_STABILITY


def test_slip_impact_speed_is_positive_with_margin():
    traj = simulate(_params(), SLIP, h0=0.25)
    assert traj.event.speed > 1e-3 * math.sqrt(2.0 * 1.0 * 0.25)


def test_touchdown_time_decreases_with_stronger_gravity():
    slow = simulate(_params(G=1.0), SLIP, h0=0.25)
    fast = simulate(_params(G=2.0), SLIP, h0=0.25)
    assert fast.event.t < slow.event.t


def test_damped_fall_dissipates_mechanical_energy():
    traj = simulate(_params(), SLIP, h0=0.25)
    total = 0.5 * traj.v**2 + 1.0 * traj.h
    assert np.all(np.diff(total) <= 1e-9)


def test_escape_event_fires_on_upward_launch():
    traj = simulate(_params(kappa=0.1), SLIP, h0=0.25, v0=1.0)
    assert traj.event.kind == EventKind.ESCAPED
    assert traj.event.h == pytest.approx(0.5, abs=1e-9)
    assert traj.event.t > 0.0


# ---------------------------------------------------------------- mixed falls


def test_mixed_fall_never_touches_down():
    traj = simulate(_params(), MIXED, h0=0.25, t_max=50.0)
    assert traj.event.kind == EventKind.TIME_LIMIT
    assert traj.event.t == pytest.approx(50.0)
    assert float(traj.h.min()) > 0.0


def test_mixed_log_gap_grows_linearly_in_time():
    traj = simulate(_params(), MIXED, h0=0.25, t_max=50.0)
    slope, _, r2 = _ols(traj.t, np.abs(np.log(traj.h)))
    assert slope > 0.0
    assert r2 >= 0.99


def test_mixed_fall_crosses_into_the_log_phase():
    traj = simulate(_params(), MIXED, h0=0.25, t_max=50.0)
    assert float(traj.h[-1]) < 1e-20  # far below the switch gap, no underflow
    assert np.all(np.diff(traj.t) > 0.0)  # the phase stitch keeps t ordered


def test_mixed_fall_reports_the_representable_floor():
    traj = simulate(_params(), MIXED, h0=0.25, t_max=800.0)
    assert traj.event.kind == EventKind.TIME_LIMIT
    assert traj.event.t < 800.0
    assert "no contact" in traj.event.note
    assert float(traj.h[-1]) > 0.0


def test_mixed_accepts_a_table_law():
    curve = _synthetic_table(MIXED, lambda h: 3.0 / h)
    law = drag_law(MIXED, source=curve)
    assert law.deep == pytest.approx(("inverse", 3.0, 0.0))
    traj = simulate(_params(), MIXED, h0=0.25, t_max=5.0, law=law)
    assert traj.event.kind == EventKind.TIME_LIMIT
    assert float(traj.h.min()) > 0.0


# ---------------------------------------------------------------- integrator


def test_convergence_order_at_least_four_on_constant_drag():
    c, G, h0, T = 2.0, 1.0, 0.25, 0.3
    h_exact = h0 + ((G / c) / c) * (1.0 - math.exp(-c * T)) - (G / c) * T
    v_exact = (G / c) * math.exp(-c * T) - G / c

    errors = []
    for n in (8, 16, 32):
        dt = T / n
        traj = simulate(
            _params(G=G), SLIP, h0=h0, t_max=T, law=lambda h: c,
            rtol=1e10, atol=1e10, max_step=dt, first_step=dt,
        )
        errors.append(
            abs(traj.h[-1] - h_exact) + abs(traj.v[-1] - v_exact)
        )
    orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    assert np.all(orders >= 4.0)


def test_free_fall_is_exact_for_the_embedded_pair():
    # polynomial solution: integrated to roundoff regardless of step size
    traj = simulate(
        _params(kappa=0.0), SLIP, h0=0.25, t_max=0.5, law=lambda h: 0.0,
        rtol=1e10, atol=1e10, max_step=0.1, first_step=0.1,
    )
    exact_h = 0.25 - 0.5 * 0.5**2
    assert traj.h[-1] == pytest.approx(exact_h, abs=1e-12)


# ---------------------------------------------------------------- validation


def test_simulate_validates_inputs():
    with pytest.raises(ValueError, match="h0"):
        simulate(_params(), SLIP, h0=0.6)
    with pytest.raises(ValueError, match="h0"):
        simulate(_params(), SLIP, h0=0.0)
    with pytest.raises(ValueError, match="h0"):
        simulate(_params(), SLIP, h0=1e-13)
    with pytest.raises(ValueError, match="t_max"):
        simulate(_params(), SLIP, h0=0.25, t_max=0.0)
    with pytest.raises(ValueError, match="v0"):
        simulate(_params(), SLIP, h0=0.25, v0=math.inf)
    with pytest.raises(ValueError, match="leading coefficient"):
        simulate(_params(kappa=0.0), MIXED, h0=0.25)


# ---------------------------------------------------------------- scans


def test_touchdown_scan_slip_every_cell_touches():
    rows = touchdown_scan(SLIP, (0.5, 1.0), (1.0, 2.0), (0.1, 0.25), t_max=10.0)
    assert len(rows) == 8
    for row in rows:
        assert row.outcome == EventKind.TOUCHDOWN
        assert math.isfinite(row.t_star) and row.t_star > 0.0
        assert row.impact_speed > 0.0


def test_touchdown_scan_mixed_every_cell_avoids_contact():
    rows = touchdown_scan(MIXED, (1.0,), (1.0, 2.0), (0.1, 0.25), t_max=20.0)
    assert len(rows) == 4
    for row in rows:
        assert row.outcome == "NoContact"
        assert row.min_h > 0.0


def test_touchdown_scan_keeps_going_past_bad_cells():
    rows = touchdown_scan(SLIP, (1.0,), (1.0,), (0.9, 0.25), t_max=10.0)
    assert rows[0].outcome == "Error"
    assert "h0" in rows[0].error
    assert rows[1].outcome == EventKind.TOUCHDOWN


def test_touchdown_scan_is_thread_count_invariant():
    serial = touchdown_scan(SLIP, (0.5, 1.0), (1.0,), (0.1, 0.25), t_max=10.0)
    threaded = touchdown_scan(
        SLIP, (0.5, 1.0), (1.0,), (0.1, 0.25), t_max=10.0, threads=3
    )
    assert serial == threaded
