"""Sphere-plane gap geometry.

The solid is a unit sphere whose south pole sits at height ``h`` above the
plane wall ``{x3 = 0}``.  This module provides the gap profile ``gamma_s``,
outward unit normals, surface measures for the two boundary pieces, and the
smooth cutoff functions used to extend the aperture ansatz to the whole
domain.

All functions accept scalars or numpy arrays and are pure.
"""

from dataclasses import dataclass

import numpy as np

DELTA_DEFAULT = 0.2
D_DELTA_DEFAULT = 0.1
H_MAX_DEFAULT = 0.5

PLANE = "plane"
SPHERE_CAP = "sphere-cap"


@dataclass(frozen=True)
class GapGeometry:
    """Geometric configuration: gap width plus the fixed cutoff scales.

    Parameters
    ----------
    h : float
        Gap width between the sphere's south pole and the wall.  ``h = 0``
        means contact.
    delta : float
        Aperture half-width, restricted to ``(0, 1/4)``.
    d_delta : float
        Thickness of the far cutoff shell around the sphere.
    h_max : float
        Largest gap considered by the experiments.
    """

    h: float
    delta: float = DELTA_DEFAULT
    d_delta: float = D_DELTA_DEFAULT
    h_max: float = H_MAX_DEFAULT

    def __post_init__(self):
        if not 0.0 < self.delta < 0.25:
            raise ValueError(f"delta must lie in (0, 1/4), got {self.delta}")
        if self.d_delta <= 0.0:
            raise ValueError(f"d_delta must be positive, got {self.d_delta}")
        if self.h_max <= 0.0:
            raise ValueError(f"h_max must be positive, got {self.h_max}")
        if not 0.0 <= self.h <= self.h_max:
            raise ValueError(
                f"h must lie in [0, h_max={self.h_max}], got {self.h}"
            )

    def gap_height(self, r):
        """Total gap height ``h + gamma_s(r)`` above the wall at radius r."""
        return self.h + gamma_s(r)


def gamma_s(r):
    """Height of the lower sphere surface above its south pole.

    Parameters
    ----------
    r : float or ndarray
        Cylindrical radius, ``0 <= r <= 1``.

    Returns
    -------
    float or ndarray
        ``1 - sqrt(1 - r**2)``, increasing from 0 at the axis to 1 at the
        equator; behaves like ``r**2 / 2`` for small r.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r < 0.0) or np.any(r > 1.0):
        raise ValueError("gamma_s requires 0 <= r <= 1")
    out = 1.0 - np.sqrt(1.0 - r * r)
    return out if out.ndim else float(out)


def sphere_normal(r, h=None):
    """Unit normal of the lower sphere surface, outward from the fluid.

    Parameters
    ----------
    r : float or ndarray
        Cylindrical radius of the surface point, ``0 <= r < 1``.
    h : float, optional
        Gap width; accepted for signature symmetry, the normal does not
        depend on it.

    Returns
    -------
    (n_r, n_z)
        Components in the ``(e_r, e_z)`` frame: ``(-r, sqrt(1 - r**2))``.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r < 0.0) or np.any(r >= 1.0):
        raise ValueError("sphere_normal requires 0 <= r < 1")
    n_r = -r
    n_z = np.sqrt(1.0 - r * r)
    if r.ndim:
        return n_r, n_z
    return float(n_r), float(n_z)


def surface_measure(surface, r):
    """Area density of a boundary piece with respect to ``dr dtheta``.

    Parameters
    ----------
    surface : str
        Either ``"plane"`` or ``"sphere-cap"``.
    r : float or ndarray
        Cylindrical radius; must satisfy ``r < 1`` on the sphere cap.

    Returns
    -------
    float or ndarray
        ``r`` on the plane, ``r / sqrt(1 - r**2)`` on the sphere cap.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r < 0.0):
        raise ValueError("surface_measure requires r >= 0")
    if surface == PLANE:
        out = r
    elif surface == SPHERE_CAP:
        if np.any(r >= 1.0):
            raise ValueError("sphere-cap measure requires r < 1")
        out = r / np.sqrt(1.0 - r * r)
    else:
        raise ValueError(f"unknown surface {surface!r}")
    out = np.asarray(out, dtype=float)
    return out if out.ndim else float(out)


def smoothstep(s):
    """C2 quintic step: 0 for s <= 0, 1 for s >= 1, 6s^5-15s^4+10s^3 between.

    Returns
    -------
    (value, first derivative, second derivative)
    """
    s = np.asarray(s, dtype=float)
    t = np.clip(s, 0.0, 1.0)
    val = t * t * t * (t * (6.0 * t - 15.0) + 10.0)
    d1 = 30.0 * t * t * (t - 1.0) * (t - 1.0)
    d2 = 60.0 * t * (2.0 * t - 1.0) * (t - 1.0)
    inside = (s > 0.0) & (s < 1.0)
    d1 = np.where(inside, d1, 0.0)
    d2 = np.where(inside, d2, 0.0)
    if s.ndim:
        return val, d1, d2
    return float(val), float(d1), float(d2)


def _coordinate_window(t, delta):
    """1D window w(|t|): 1 on [0, delta], 0 beyond 2 delta, quintic between.

    Returns value and first/second derivatives with respect to t.
    """
    a = abs(t)
    if a <= delta:
        return 1.0, 0.0, 0.0
    if a >= 2.0 * delta:
        return 0.0, 0.0, 0.0
    s = (2.0 * delta - a) / delta
    val, d1, d2 = smoothstep(s)
    sign = 1.0 if t >= 0.0 else -1.0
    # d/dt = d/ds * ds/dt with ds/dt = -sign/delta
    return val, -sign * d1 / delta, d2 / (delta * delta)


def _radial_bump(rho, d_delta):
    """Radial profile of the far cutoff: 1 inside 1 + d_delta/2, 0 outside
    1 + d_delta, quintic in between.  Returns value, f', f'' in rho.
    """
    inner = 1.0 + 0.5 * d_delta
    outer = 1.0 + d_delta
    if rho <= inner:
        return 1.0, 0.0, 0.0
    if rho >= outer:
        return 0.0, 0.0, 0.0
    half = 0.5 * d_delta
    s = (outer - rho) / half
    val, d1, d2 = smoothstep(s)
    return val, -d1 / half, d2 / (half * half)


@dataclass(frozen=True)
class CutoffPair:
    """Values and derivatives of the two cutoffs at a point.

    ``chi`` is the tensor-product window equal to 1 on the cube
    ``(-delta, delta)^3`` and 0 outside ``(-2 delta, 2 delta)^3``.
    ``phi_bump`` is the radial window equal to 1 on a ``d_delta/2``
    neighborhood of the solid sphere and 0 outside a ``d_delta``
    neighborhood; it is evaluated at ``x - (1 + h) e3``, i.e. relative to
    the current sphere center.

    Gradients and Hessians are with respect to the cartesian point x.
    """

    chi: float
    phi_bump: float
    chi_grad: np.ndarray
    phi_grad: np.ndarray
    chi_hess: np.ndarray
    phi_hess: np.ndarray


def cutoffs(x, geometry):
    """Evaluate both cutoffs with first and second derivatives.

    Parameters
    ----------
    x : sequence of 3 floats
        Cartesian point.
    geometry : GapGeometry

    Returns
    -------
    CutoffPair
    """
    x = np.asarray(x, dtype=float)
    delta = geometry.delta

    w = np.empty(3)
    dw = np.empty(3)
    ddw = np.empty(3)
    for i in range(3):
        w[i], dw[i], ddw[i] = _coordinate_window(x[i], delta)

    chi = w[0] * w[1] * w[2]
    chi_grad = np.array(
        [dw[0] * w[1] * w[2], w[0] * dw[1] * w[2], w[0] * w[1] * dw[2]]
    )
    chi_hess = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            if i == j:
                parts = [ddw[k] if k == i else w[k] for k in range(3)]
            else:
                parts = [
                    dw[k] if k in (i, j) else w[k] for k in range(3)
                ]
            chi_hess[i, j] = parts[0] * parts[1] * parts[2]

    y = x - np.array([0.0, 0.0, 1.0 + geometry.h])
    rho = float(np.sqrt(y @ y))
    f, f1, f2 = _radial_bump(rho, geometry.d_delta)
    if f1 == 0.0 and f2 == 0.0:
        phi_grad = np.zeros(3)
        phi_hess = np.zeros((3, 3))
    else:
        # in the transition shell rho > 1, so unit vector is safe
        e = y / rho
        phi_grad = f1 * e
        phi_hess = f2 * np.outer(e, e) + (f1 / rho) * (np.eye(3) - np.outer(e, e))

    return CutoffPair(
        chi=float(chi),
        phi_bump=float(f),
        chi_grad=chi_grad,
        phi_grad=phi_grad,
        chi_hess=chi_hess,
        phi_hess=phi_hess,
    )
