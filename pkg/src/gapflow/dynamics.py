"""Reduced contact dynamics: h'' = -D(h) h' - G down to touchdown.

The gap width h(t) of a heavy sphere settling onto a wall obeys a damped
fall with gap-dependent drag.  The two drag laws produced by the gap
analysis behave very differently as h -> 0:

* slip: D(h) = kappa |ln h|, integrable at 0; the sphere reaches the wall
  in finite time with strictly positive impact speed.
* mixed: D(h) = kappa / h, non-integrable; the gap shrinks like
  exp(-c t) and contact never happens.

``drag_law`` builds D either analytically from a regime or by log-log
interpolation of a computed DragCurve; ``simulate`` integrates the ODE
with an embedded 4(5) Runge-Kutta pair and event detection for touchdown
(h = 1e-12) and escape (h = h_max).  The inverse-gap law is stiff once h
is tiny, so below a switch gap the integration continues in
u = ln h with the stiff quasi-steady balance removed symbolically:

    u' = delta - G/a,
    delta' = -a e^{-u} delta - b (delta - G/a) - (delta - G/a)^2,

where delta = h' e^{-u} + G/a and D = a/h + b.  The substitution keeps
full relative accuracy down to u = -700 (gaps around 1e-304); reaching
that floor is reported as a time-limited run, not an error.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .geometry import H_MAX_DEFAULT
from .profile import RegimeKind, UnsupportedRegimeError
from .drag import DragCurve, ScalingModel, fit_scaling

TOUCHDOWN_H = 1e-12
SWITCH_H = 1e-6
U_FLOOR = -700.0
RTOL_DEFAULT = 1e-9
ATOL_DEFAULT = 1e-12


@dataclass(frozen=True)
class FallParameters:
    """Densities, gravity, and the drag prefactor of the reduced fall.

    The viscosity scale is carried for bookkeeping only; its effect is
    absorbed into the drag prefactor kappa.  The effective gravity
    G = (rho_S - rho_F) g / rho_S is positive exactly when the sphere is
    heavier than the fluid.
    """

    rho_S: float = 2.0
    rho_F: float = 1.0
    g: float = 2.0
    mu_F: float = 1.0
    kappa: float = 1.0

    def __post_init__(self):
        if self.rho_S <= 0.0:
            raise ValueError("rho_S must be positive")
        if self.rho_F < 0.0:
            raise ValueError("rho_F must be nonnegative")
        if self.g <= 0.0:
            raise ValueError("g must be positive")
        if self.mu_F <= 0.0:
            raise ValueError("mu_F must be positive")
        if self.kappa < 0.0:
            raise ValueError("kappa must be nonnegative")

    @property
    def G(self):
        return (self.rho_S - self.rho_F) * self.g / self.rho_S


class EventKind:
    TOUCHDOWN = "Touchdown"
    TIME_LIMIT = "TimeLimit"
    ESCAPED = "Escaped"


@dataclass(frozen=True)
class TerminalEvent:
    """How a trajectory ended: kind, time, gap, and speed at that moment."""

    kind: str
    t: float
    h: float
    speed: float
    note: str = ""


@dataclass(frozen=True)
class Trajectory:
    """Integrator output rows (t, h, h') plus the terminal event."""

    t: np.ndarray
    h: np.ndarray
    v: np.ndarray
    event: TerminalEvent

    def __post_init__(self):
        if not (len(self.t) == len(self.h) == len(self.v)) or len(self.t) == 0:
            raise ValueError("Trajectory arrays must be nonempty and aligned")
        if np.any(np.diff(self.t) <= 0.0):
            raise ValueError("Trajectory times must be strictly increasing")
        if np.any(self.h <= 0.0):
            raise ValueError("Trajectory gaps must stay positive")

    def __len__(self):
        return len(self.t)


class StiffnessError(RuntimeError):
    """The step controller stalled without bracketing a terminal event."""


@dataclass(frozen=True)
class DragLaw:
    """Callable drag law h -> D(h) with its deep-gap asymptotic model.

    ``deep`` is ("log", a, b) or ("inverse", a, b) describing
    D ~ a |ln h| + b or D ~ a/h + b as h -> 0; the inverse form is what
    routes simulate into the log-gap phase.
    """

    kind: str  # "analytic" | "table" | "surrogate"
    regime_kind: RegimeKind
    deep: tuple
    _fn: callable = field(repr=False)

    def __call__(self, h):
        return self._fn(h)


def drag_law(regime, source="analytic", kappa=1.0, surrogate=False):
    """Build the drag law D(h) for a regime.

    Parameters
    ----------
    regime : SlipRegime
    source : "analytic" or DragCurve
        Analytic laws are kappa |ln h| (slip) and kappa / h (mixed).  A
        DragCurve is interpolated log-log through its energy column and
        extrapolated below its smallest h by the regime's asymptotic
        model anchored at that node.
    kappa : float
        Prefactor for the analytic laws.
    surrogate : bool
        The no-slip regime is outside the gap analysis; its classical
        kappa / h law is served only when this flag says so.

    Returns
    -------
    DragLaw
    """
    if regime.kind is RegimeKind.NO_SLIP and not surrogate:
        raise UnsupportedRegimeError(
            "no-slip drag is a classical surrogate; pass surrogate=True to use it"
        )
    if isinstance(source, DragCurve):
        return _table_law(regime, source)
    if source != "analytic":
        raise ValueError("source must be 'analytic' or a DragCurve")
    if kappa < 0.0:
        raise ValueError("kappa must be nonnegative")

    if regime.kind is RegimeKind.SLIP:
        fn = lambda h: kappa * np.abs(np.log(h))
        return DragLaw("analytic", regime.kind, ("log", kappa, 0.0), fn)
    kind = "surrogate" if regime.kind is RegimeKind.NO_SLIP else "analytic"
    fn = lambda h: kappa / np.asarray(h, dtype=float)
    return DragLaw(kind, regime.kind, ("inverse", kappa, 0.0), fn)


def _table_law(regime, curve):
    hs = curve.column("h")[::-1]  # ascending for interpolation
    es = curve.column("energy")[::-1]
    if np.any(np.diff(es) >= 0.0):
        raise ValueError("table drag law needs strictly monotone energies")
    log_h, log_e = np.log(hs), np.log(es)
    h_min, e_min = float(hs[0]), float(es[0])

    if regime.kind is RegimeKind.SLIP:
        slope = fit_scaling(curve, ScalingModel.LOG).a
        deep = ("log", slope, e_min - slope * abs(math.log(h_min)))

        def extrapolate(h):
            return e_min + slope * (np.abs(np.log(h)) - abs(math.log(h_min)))

    else:
        deep = ("inverse", e_min * h_min, 0.0)

        def extrapolate(h):
            return e_min * h_min / h

    def fn(h):
        h = np.asarray(h, dtype=float)
        inside = np.exp(np.interp(np.log(h), log_h, log_e))
        out = np.where(h < h_min, extrapolate(np.maximum(h, 1e-300)), inside)
        return out if out.ndim else float(out)

    return DragLaw("table", regime.kind, deep, fn)


def calibrate_kappa(curve):
    """Least-squares drag prefactor from a DragCurve (slope of its law)."""
    model = (
        ScalingModel.LOG
        if curve.regime.kind is RegimeKind.SLIP
        else ScalingModel.INVERSE
    )
    fit = fit_scaling(curve, model)
    return fit.a, fit


def _finish(sol, context):
    if sol.status == -1:
        t, h, v = sol.t[-1], sol.y[0, -1], sol.y[1, -1]
        raise StiffnessError(
            f"integrator stalled at t={t:.6g} (h={h:.3e}, h'={v:.3e}) "
            f"during {context}: {sol.message}"
        )


def simulate(
    params,
    regime,
    h0,
    v0=0.0,
    t_max=10.0,
    law=None,
    rtol=RTOL_DEFAULT,
    atol=ATOL_DEFAULT,
    h_max=H_MAX_DEFAULT,
    max_step=np.inf,
    first_step=None,
):
    """Integrate the damped fall from (h0, v0) until an event or t_max.

    Parameters
    ----------
    params : FallParameters
    regime : SlipRegime
        Selects the analytic drag law when ``law`` is None.
    h0, v0 : float
        Initial gap (must lie in (touchdown, h_max)) and velocity.
    t_max : float
    law : DragLaw or callable, optional
        Custom drag; a bare callable is integrated in h-space only.
    rtol, atol, max_step, first_step
        Step control, passed to the embedded 4(5) integrator.

    Returns
    -------
    Trajectory
        Terminal event Touchdown (with impact speed), Escaped, or
        TimeLimit; inverse-law runs continue in u = ln h below the
        switch gap and report TimeLimit, never Touchdown.
    """
    if not (TOUCHDOWN_H < h0 < h_max):
        raise ValueError(f"h0 must lie in ({TOUCHDOWN_H}, {h_max})")
    if not math.isfinite(v0):
        raise ValueError("v0 must be finite")
    if t_max <= 0.0:
        raise ValueError("t_max must be positive")
    if law is None:
        law = drag_law(regime, "analytic", params.kappa)
    deep = getattr(law, "deep", None)
    stiff = deep is not None and deep[0] == "inverse"
    if stiff and deep[1] <= 0.0:
        raise ValueError("inverse drag law needs a positive leading coefficient")
    G = params.G
    options = dict(rtol=rtol, atol=atol, max_step=max_step)
    if first_step is not None:
        options["first_step"] = first_step

    def rhs(t, y):
        # trial stages of the step that brackets touchdown may probe
        # h <= 0; continue the law evenly through zero so they stay finite
        gap = abs(float(y[0])) or TOUCHDOWN_H
        return (y[1], -law(gap) * y[1] - G)

    touchdown = lambda t, y: y[0] - TOUCHDOWN_H
    touchdown.terminal, touchdown.direction = True, -1.0
    escape = lambda t, y: y[0] - h_max
    escape.terminal, escape.direction = True, 1.0
    events = [touchdown, escape]
    switch = lambda t, y: y[0] - SWITCH_H
    switch.terminal, switch.direction = True, -1.0
    if stiff and h0 > SWITCH_H:
        events.append(switch)

    t_parts, h_parts, v_parts = [], [], []
    event = None
    if not stiff or h0 > SWITCH_H:
        method = "Radau" if stiff else "RK45"
        sol = solve_ivp(
            rhs, (0.0, t_max), (h0, v0), method=method, events=events, **options
        )
        _finish(sol, "the gap-variable phase")
        t_parts.append(sol.t)
        h_parts.append(sol.y[0])
        v_parts.append(sol.y[1])
        t_end = sol.t[-1]
        h_end, v_end = float(sol.y[0, -1]), float(sol.y[1, -1])
        if sol.t_events[0].size:
            event = TerminalEvent(
                EventKind.TOUCHDOWN, float(sol.t_events[0][0]), h_end, abs(v_end)
            )
        elif sol.t_events[1].size:
            event = TerminalEvent(
                EventKind.ESCAPED, float(sol.t_events[1][0]), h_end, v_end
            )
        elif sol.status == 0:
            event = TerminalEvent(EventKind.TIME_LIMIT, float(t_end), h_end, v_end)
        # otherwise the switch event fired and the log-gap phase takes over
    else:
        t_end, h_end, v_end = 0.0, h0, v0

    if event is None:
        a, b = deep[1], deep[2]

        def rhs_log(t, y):
            u, delta = y
            drift = delta - G / a
            # trial stages can overshoot far past the u floor; cap the
            # amplifier so exp stays finite (delta is slaved to ~e^u there)
            ez = math.exp(min(-u, 705.0))
            return (drift, -a * ez * delta - b * drift - drift * drift)

        floor = lambda t, y: y[0] - U_FLOOR
        floor.terminal, floor.direction = True, -1.0
        sol = solve_ivp(
            rhs_log,
            (t_end, t_max),
            (math.log(h_end), v_end / h_end + G / a),
            method="Radau",
            events=[floor],
            **options,
        )
        _finish(sol, "the log-gap phase")
        u, delta = sol.y
        h_log = np.exp(u)
        v_log = (delta - G / a) * h_log
        skip = 1 if t_parts and sol.t.size and sol.t[0] == t_end else 0
        t_parts.append(sol.t[skip:])
        h_parts.append(h_log[skip:])
        v_parts.append(v_log[skip:])
        note = ""
        if sol.t_events[0].size:
            note = "gap fell below the representable range (ln h = -700); no contact"
        event = TerminalEvent(
            EventKind.TIME_LIMIT, float(sol.t[-1]), float(h_log[-1]),
            float(v_log[-1]), note,
        )

    return Trajectory(
        t=np.concatenate(t_parts),
        h=np.concatenate(h_parts),
        v=np.concatenate(v_parts),
        event=event,
    )


@dataclass(frozen=True)
class ScanRow:
    """One touchdown_scan cell: inputs, outcome, and diagnostics."""

    kappa: float
    G: float
    h0: float
    outcome: str  # "Touchdown" | "NoContact" | "Escaped" | "Error"
    t_star: float = math.nan
    impact_speed: float = math.nan
    min_h: float = math.nan
    error: str = ""


def _scan_cell(regime, kappa, G, h0, t_max, rtol, atol):
    try:
        params = FallParameters(rho_S=2.0, rho_F=1.0, g=2.0 * G, kappa=kappa)
        traj = simulate(params, regime, h0, t_max=t_max, rtol=rtol, atol=atol)
    except (ValueError, UnsupportedRegimeError, StiffnessError) as exc:
        return ScanRow(kappa=kappa, G=G, h0=h0, outcome="Error", error=str(exc))
    ev = traj.event
    if ev.kind == EventKind.TOUCHDOWN:
        return ScanRow(
            kappa=kappa, G=G, h0=h0, outcome=EventKind.TOUCHDOWN,
            t_star=ev.t, impact_speed=ev.speed, min_h=float(traj.h.min()),
        )
    outcome = "NoContact" if ev.kind == EventKind.TIME_LIMIT else ev.kind
    return ScanRow(
        kappa=kappa, G=G, h0=h0, outcome=outcome, min_h=float(traj.h.min())
    )


def touchdown_scan(
    regime,
    kappas,
    Gs,
    h0s,
    t_max=50.0,
    rtol=RTOL_DEFAULT,
    atol=ATOL_DEFAULT,
    threads=1,
):
    """Simulate every (kappa, G, h0) cell and tabulate the outcomes.

    Effective gravity G is realized through g = 2 G at the default
    densities.  Cells are independent; failures become Error rows and
    the scan continues.  Assembly order is the input grid order, so the
    table is identical for any thread count.
    """
    cells = [(k, G, h0) for k in kappas for G in Gs for h0 in h0s]
    run = lambda cell: _scan_cell(regime, *cell, t_max, rtol, atol)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(run, cells))
    else:
        rows = [run(cell) for cell in cells]
    return tuple(rows)
