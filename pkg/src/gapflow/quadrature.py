"""Adaptive quadrature over the gap and its boundary surfaces.

A composite Gauss-Legendre rule drives a depth-first adaptive bisection in
the radial variable; the axial direction uses a fixed-order rule per cell
because every integrand of interest is polynomial in z up to smooth
factors.  Initial cells are graded geometrically toward r = 0, where the
integrands peak on the lubrication scale sqrt(h).

Cell contributions are accumulated with math.fsum, so results do not
depend on evaluation or summation order; parallel callers get bit-identical
values.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy.special import roots_legendre

from .geometry import PLANE, SPHERE_CAP, gamma_s, surface_measure

DEFAULT_REL_TOL = 1e-10
DEFAULT_ABS_TOL = 1e-13
DEFAULT_MAX_DEPTH = 28
DEFAULT_ORDER = 16
DEFAULT_Z_ORDER = 12

FIT_R2_FLOOR = 0.99


class QuadratureError(RuntimeError):
    """Tolerance not reached; carries the best estimate and its error bound."""

    def __init__(self, message, value=math.nan, error=math.inf, cells=0):
        super().__init__(message)
        self.value = value
        self.error = error
        self.cells = cells


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = DEFAULT_REL_TOL
    abs_tol: float = DEFAULT_ABS_TOL
    max_depth: int = DEFAULT_MAX_DEPTH
    order: int = DEFAULT_ORDER

    def __post_init__(self):
        if self.rel_tol <= 0.0 or self.abs_tol <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be at least 1")
        if self.order < 2:
            raise ValueError("rule order must be at least 2")


@dataclass(frozen=True)
class IntegralResult:
    value: float
    error: float
    cells: int

    def __float__(self):
        return self.value


@lru_cache(maxsize=None)
def _gl_rule(order):
    x, w = roots_legendre(order)
    return np.asarray(x), np.asarray(w)


def graded_cuts(r_max, scale, ratio=2.0):
    """Breakpoints [0, ..., r_max/4, r_max/2, r_max] geometric toward 0.

    Refinement stops once cells reach `scale`, the length below which the
    integrand is expected to be resolved (typically sqrt(h)).
    """
    if r_max <= 0.0:
        raise ValueError("r_max must be positive")
    scale = max(scale, r_max * 2.0 ** -48)
    cuts = [r_max]
    while cuts[-1] > scale:
        cuts.append(cuts[-1] / ratio)
    cuts.append(0.0)
    return list(reversed(cuts))


def _adaptive_1d(g, cuts, spec):
    """Adaptive composite Gauss-Legendre integration of a vectorized g.

    g maps an ndarray of abscissas to integrand values (any measure and
    angular factor already included).  `cuts` are initial breakpoints in
    ascending order.  Returns an IntegralResult; raises QuadratureError if
    some cell cannot meet its share of the tolerance at max depth.
    """
    x, w = _gl_rule(spec.order)

    def rule(a, b):
        half = 0.5 * (b - a)
        pts = a + half * (x + 1.0)
        return half * float(np.sum(w * g(pts)))

    total_width = cuts[-1] - cuts[0]
    coarse = [rule(a, b) for a, b in zip(cuts[:-1], cuts[1:])]
    scale = max(abs(math.fsum(coarse)), spec.abs_tol / spec.rel_tol)
    tol_global = max(spec.abs_tol, spec.rel_tol * scale)

    values = []
    errors = []
    failures = []
    cell_count = 0

    def recurse(a, b, parent, tol, depth):
        nonlocal cell_count
        m = 0.5 * (a + b)
        left = rule(a, m)
        right = rule(m, b)
        err = abs(parent - left - right)
        if err <= tol or depth >= spec.max_depth:
            values.append(left + right)
            errors.append(err)
            cell_count += 1
            if err > tol:
                failures.append((a, b, err, tol))
            return
        recurse(a, m, left, 0.5 * tol, depth + 1)
        recurse(m, b, right, 0.5 * tol, depth + 1)

    for (a, b), parent in zip(zip(cuts[:-1], cuts[1:]), coarse):
        recurse(a, b, parent, tol_global * (b - a) / total_width, 1)

    value = math.fsum(values)
    error = math.fsum(errors)
    if failures:
        raise QuadratureError(
            f"quadrature did not converge on {len(failures)} cells "
            f"(first: [{failures[0][0]:.3e}, {failures[0][1]:.3e}] "
            f"err {failures[0][2]:.3e} > tol {failures[0][3]:.3e})",
            value=value,
            error=error,
            cells=cell_count,
        )
    return IntegralResult(value=value, error=error, cells=cell_count)


def integrate_gap(f, h, r_max, spec=None, z_order=DEFAULT_Z_ORDER):
    """Integral of f over the gap region: int 2 pi r int_0^{h+gamma_s} f dz dr.

    Parameters
    ----------
    f : callable
        Vectorized integrand f(r, z); receives broadcastable arrays.
    h : float
        Gap width, > 0.
    r_max : float
        Radial extent of the aperture.
    spec : QuadratureSpec, optional
    z_order : int
        Fixed Gauss-Legendre order across the gap height.

    Returns
    -------
    IntegralResult
    """
    if h <= 0.0:
        raise ValueError("integrate_gap requires h > 0")
    spec = spec or QuadratureSpec()
    zx, zw = _gl_rule(z_order)

    def g(r):
        H = h + gamma_s(r)
        Z = 0.5 * H[:, None] * (zx[None, :] + 1.0)
        W = 0.5 * H[:, None] * zw[None, :]
        inner = np.sum(np.broadcast_to(f(r[:, None], Z), W.shape) * W, axis=1)
        return 2.0 * math.pi * r * inner

    cuts = graded_cuts(r_max, math.sqrt(h))
    return _adaptive_1d(g, cuts, spec)


def integrate_surface(f, surface, r_max, spec=None, scale=None):
    """Surface integral int 2 pi f(r) measure(r) dr over a boundary piece.

    `surface` is "plane" or "sphere-cap"; the measure is r on the plane and
    r / sqrt(1 - r^2) on the cap.  `scale` optionally sets the grading
    length of the initial cells (defaults to r_max / 2^16).
    """
    if surface not in (PLANE, SPHERE_CAP):
        raise ValueError(f"unknown surface {surface!r}")
    spec = spec or QuadratureSpec()

    def g(r):
        return 2.0 * math.pi * np.asarray(f(r)) * surface_measure(surface, r)

    cuts = graded_cuts(r_max, scale if scale is not None else r_max * 2.0 ** -16)
    return _adaptive_1d(g, cuts, spec)


class Classification(Enum):
    POWER_LAW = "power-law"
    LOGARITHMIC = "logarithmic"
    BOUNDED = "bounded"


class ClassificationError(RuntimeError):
    pass


@dataclass(frozen=True)
class ModelFit:
    name: str
    a: float
    b: float
    r_squared: float


@dataclass(frozen=True)
class SingularIntegralCase:
    """Small-gap behavior of I(h) = int_0^delta r^p / (h + r^2)^q dr.

    The classification is decided by the arithmetic invariant: power law
    with exponent (p+1)/2 - q when p + 1 < 2q, logarithmic when equal,
    bounded when p + 1 > 2q.  Least-squares fits against each candidate
    behavior validate the call on the computed values.
    """

    p: float
    q: float
    delta: float
    classification: Classification
    exponent: float
    values: tuple
    fits: dict = field(compare=False)
    selected: ModelFit = None

    def __post_init__(self):
        s = (self.p + 1.0) / 2.0 - self.q
        expected = (
            Classification.POWER_LAW
            if self.p + 1.0 < 2.0 * self.q
            else Classification.LOGARITHMIC
            if self.p + 1.0 == 2.0 * self.q
            else Classification.BOUNDED
        )
        if self.classification is not expected:
            raise ValueError("classification inconsistent with (p, q)")
        if self.classification is Classification.POWER_LAW and self.exponent != s:
            raise ValueError("power-law exponent must be (p+1)/2 - q")


DEFAULT_H_LIST = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6)


def log_case_oracle(h, delta):
    """Closed form of the (p, q) = (1, 1) integral: (1/2) ln((h + d^2)/h)."""
    return 0.5 * math.log((h + delta * delta) / h)


def _ols(x, y):
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    ss_res = float(resid @ resid)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 and ss_res < 1e-28 else 1.0 - ss_res / ss_tot
    return float(coef[0]), float(coef[1]), r2


def classify_singular(p, q, delta, h_list=None, spec=None):
    """Classify and fit the small-gap singular integral.

    Parameters
    ----------
    p, q : float
        Exponents; p >= 0, q > 0.
    delta : float
        Upper integration limit.
    h_list : sequence, optional
        Log-spaced gap values, min >= 1e-8.
    spec : QuadratureSpec, optional

    Returns
    -------
    SingularIntegralCase

    Raises
    ------
    ClassificationError
        If no candidate model reaches R^2 >= 0.99 on the computed values.
    """
    if p < 0.0 or q <= 0.0:
        raise ValueError("classify_singular requires p >= 0 and q > 0")
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    h_list = tuple(h_list) if h_list is not None else DEFAULT_H_LIST
    if min(h_list) < 1e-8:
        raise ValueError("h_list entries must be >= 1e-8")
    spec = spec or QuadratureSpec()

    values = []
    for h in h_list:
        def g(r):
            return r**p / (h + r * r) ** q

        cuts = graded_cuts(delta, math.sqrt(h))
        values.append(_adaptive_1d(g, cuts, spec).value)

    hs = np.asarray(h_list, dtype=float)
    ys = np.asarray(values)
    s = (p + 1.0) / 2.0 - q

    fits = {}
    if s < 0.0:
        fits["power"] = ModelFit("power", *_ols(hs**s, ys))
    fits["log"] = ModelFit("log", *_ols(np.abs(np.log(hs)), ys))
    if s < 1.0:
        bounded_reg = hs ** max(s, 0.0) if s > 0.0 else hs
    elif s == 1.0:
        bounded_reg = hs * np.abs(np.log(hs))
    else:
        bounded_reg = hs
    fits["bounded"] = ModelFit("bounded", *_ols(bounded_reg, ys))

    if p + 1.0 < 2.0 * q:
        classification, key, exponent = Classification.POWER_LAW, "power", s
    elif p + 1.0 == 2.0 * q:
        classification, key, exponent = Classification.LOGARITHMIC, "log", 0.0
    else:
        classification, key, exponent = Classification.BOUNDED, "bounded", 0.0

    if all(f.r_squared < FIT_R2_FLOOR for f in fits.values()):
        raise ClassificationError(
            f"no candidate model fits I(h) for (p, q) = ({p}, {q}); "
            f"best R^2 = {max(f.r_squared for f in fits.values()):.4f}"
        )

    return SingularIntegralCase(
        p=p,
        q=q,
        delta=delta,
        classification=classification,
        exponent=exponent,
        values=tuple(zip(h_list, values)),
        fits=fits,
        selected=fits[key],
    )
