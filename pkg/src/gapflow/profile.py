"""Cubic cross-gap profile and its rescaled derivatives.

The cross-gap velocity shape is the cubic ``Phi(r, t) = P1 t + P2 t^2 +
P3 t^3`` in the rescaled coordinate ``t = z / H(r)`` with ``H(r) = h +
gamma_s(r)``.  The coefficients are fixed by impermeability at the wall,
unit normal velocity at the sphere, and the tangential (Navier) conditions
of the active regime.  The rescaled profile is ``Psi(r, z) = Phi(r, z/H)``.

Writing ``Psi = sum_i G_i(H) z^i`` with ``G_i(H) = N_i(H) / (Delta(H) H^i)``
for explicit polynomials ``N_i``, ``Delta`` turns every partial derivative
in (r, z, h) into polynomial quotient algebra plus the chain rule through
``H(r)``; that is what this module implements, in closed form, up to total
order three.  All evaluation functions broadcast over numpy arrays.
"""

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
from numpy.polynomial import polynomial as npoly

__all__ = [
    "RegimeKind",
    "SlipRegime",
    "ProfileCoefficients",
    "UnsupportedRegimeError",
    "coefficients",
    "coefficients_from_alphas",
    "psi",
    "psi_partials",
    "psi_derivs",
    "psi_h_derivs",
    "psi_h_column",
    "weighted_sups",
    "ENVELOPE_ROWS",
]


class UnsupportedRegimeError(ValueError):
    """Raised when an operation has no profile for the requested regime."""


class RegimeKind(Enum):
    SLIP = "slip"
    MIXED = "mixed"
    NO_SLIP = "no-slip"


@dataclass(frozen=True)
class SlipRegime:
    """Boundary-condition regime with its slip lengths.

    Slip requires both slip lengths positive; Mixed means no-slip at the
    sphere (beta_S = 0) and slip at the wall; NoSlip sets both to zero.
    """

    kind: RegimeKind
    beta_S: float
    beta_Omega: float

    def __post_init__(self):
        if self.beta_S < 0.0 or self.beta_Omega < 0.0:
            raise ValueError("slip lengths must be nonnegative")
        if self.kind is RegimeKind.SLIP and not (
            self.beta_S > 0.0 and self.beta_Omega > 0.0
        ):
            raise ValueError("Slip regime requires beta_S > 0 and beta_Omega > 0")
        if self.kind is RegimeKind.MIXED and not (
            self.beta_S == 0.0 and self.beta_Omega > 0.0
        ):
            raise ValueError("Mixed regime requires beta_S = 0 and beta_Omega > 0")
        if self.kind is RegimeKind.NO_SLIP and not (
            self.beta_S == 0.0 and self.beta_Omega == 0.0
        ):
            raise ValueError("NoSlip regime requires beta_S = beta_Omega = 0")

    @classmethod
    def slip(cls, beta_S=1.0, beta_Omega=1.0):
        return cls(RegimeKind.SLIP, float(beta_S), float(beta_Omega))

    @classmethod
    def mixed(cls, beta_Omega=1.0):
        return cls(RegimeKind.MIXED, 0.0, float(beta_Omega))

    @classmethod
    def no_slip(cls):
        return cls(RegimeKind.NO_SLIP, 0.0, 0.0)


@dataclass(frozen=True)
class ProfileCoefficients:
    """Cubic coefficients and the dimensionless groups at one (h, r).

    alpha_S = (1/beta_S + 2) H and alpha_P = H / beta_Omega with
    H = h + gamma_s(r); alpha_S is +inf in the mixed regime.
    """

    alpha_S: float
    alpha_P: float
    p1: float
    p2: float
    p3: float

    def phi(self, t):
        """Evaluate Phi(t) = p1 t + p2 t^2 + p3 t^3."""
        t = np.asarray(t, dtype=float)
        out = t * (self.p1 + t * (self.p2 + t * self.p3))
        return out if out.ndim else float(out)


def _gamma(r):
    r = np.asarray(r, dtype=float)
    if np.any(r < 0.0) or np.any(r >= 1.0):
        raise ValueError("profile evaluation requires 0 <= r < 1")
    return 1.0 - np.sqrt(1.0 - r * r)


def _family(regime):
    """Polynomial families (Delta, N1, N2, N3) in H, low-to-high coefficients.

    Psi's z-monomial coefficients are G_i = N_i(H) / (Delta(H) H^i) and the
    cubic coefficients are P_i = N_i(H) / Delta(H).
    """
    if regime.kind is RegimeKind.SLIP:
        a = 1.0 / regime.beta_S + 2.0
        b = 1.0 / regime.beta_Omega
        delta = np.array([12.0, 4.0 * (a + b), a * b])
        n1 = np.array([12.0, 6.0 * a])
        n2 = np.array([0.0, 6.0 * b, 3.0 * a * b])
        n3 = np.array([0.0, -2.0 * (a + b), -2.0 * a * b])
    elif regime.kind is RegimeKind.MIXED:
        b = 1.0 / regime.beta_Omega
        delta = np.array([4.0, b])
        n1 = np.array([6.0])
        n2 = np.array([0.0, 3.0 * b])
        n3 = np.array([-2.0, -2.0 * b])
    else:
        raise UnsupportedRegimeError(
            "no relaxed profile for the no-slip regime; it arises only as the "
            "alpha_P -> inf limit of the mixed regime"
        )
    return delta, n1, n2, n3


def coefficients(regime, h, r):
    """Cubic profile coefficients at gap h and radius r.

    Parameters
    ----------
    regime : SlipRegime
    h : float
        Gap width, > 0.
    r : float
        Radius, 0 <= r < 1.

    Returns
    -------
    ProfileCoefficients
    """
    if h <= 0.0:
        raise ValueError("coefficients require h > 0")
    H = float(h + _gamma(r))
    delta, n1, n2, n3 = _family(regime)
    den = npoly.polyval(H, delta)
    p1 = npoly.polyval(H, n1) / den
    p2 = npoly.polyval(H, n2) / den
    p3 = npoly.polyval(H, n3) / den
    if regime.kind is RegimeKind.MIXED:
        alpha_S = math.inf
    else:
        alpha_S = (1.0 / regime.beta_S + 2.0) * H
    alpha_P = H / regime.beta_Omega
    return ProfileCoefficients(alpha_S, alpha_P, float(p1), float(p2), float(p3))


def coefficients_from_alphas(kind, alpha_S, alpha_P):
    """Coefficients directly from the dimensionless groups.

    This is the only route to the idealized free-slip profile
    (alpha_S = alpha_P = 0, giving Phi(t) = t), since finite slip lengths
    cannot produce alpha_P = 0; it also accepts the mixed alpha_P = inf
    limit, giving the classical no-slip shape (0, 3, -2).
    """
    if kind is RegimeKind.SLIP:
        if not (math.isfinite(alpha_S) and math.isfinite(alpha_P)):
            raise ValueError("slip regime requires finite alphas")
        den = 12.0 + 4.0 * (alpha_S + alpha_P) + alpha_S * alpha_P
        p1 = 6.0 * (2.0 + alpha_S) / den
        p2 = 3.0 * (2.0 + alpha_S) * alpha_P / den
        p3 = -2.0 * (alpha_S + alpha_S * alpha_P + alpha_P) / den
    elif kind is RegimeKind.MIXED:
        if math.isinf(alpha_P):
            p1, p2, p3 = 0.0, 3.0, -2.0
        else:
            den = 4.0 + alpha_P
            p1 = 6.0 / den
            p2 = 3.0 * alpha_P / den
            p3 = -2.0 * (1.0 + alpha_P) / den
        alpha_S = math.inf
    else:
        raise UnsupportedRegimeError("no profile for the no-slip regime")
    return ProfileCoefficients(alpha_S, alpha_P, p1, p2, p3)


@lru_cache(maxsize=32)
def _engine(regime):
    """Per-regime polynomial tables: for each i, the coefficient arrays of
    N_i and Delta * H^i together with their first three derivatives."""
    delta, n1, n2, n3 = _family(regime)
    tables = []
    for i, num in ((1, n1), (2, n2), (3, n3)):
        den = np.concatenate([np.zeros(i), delta])  # Delta(H) * H^i
        num_d = [num] + [npoly.polyder(num, k) for k in (1, 2, 3)]
        den_d = [den] + [npoly.polyder(den, k) for k in (1, 2, 3)]
        tables.append((num_d, den_d))
    return tuple(tables)


def _g_derivs(regime, H):
    """(G_i, G_i', G_i'', G_i''') for i = 1, 2, 3 at the given H values.

    G_i = N_i / (Delta H^i) is differentiated by the quotient-rule
    recursion R' = (n' - R d') / d and its higher-order analogues.
    """
    out = []
    for num_d, den_d in _engine(regime):
        n0, n1, n2, n3 = (npoly.polyval(H, c) for c in num_d)
        d0, d1, d2, d3 = (npoly.polyval(H, c) for c in den_d)
        r0 = n0 / d0
        r1 = (n1 - r0 * d1) / d0
        r2 = (n2 - 2.0 * r1 * d1 - r0 * d2) / d0
        r3 = (n3 - 3.0 * r2 * d1 - 3.0 * r1 * d2 - r0 * d3) / d0
        out.append((r0, r1, r2, r3))
    return out


@dataclass(frozen=True)
class PsiPartials:
    """All partials of Psi in (r, z) up to total order three.

    The fields `dr_by_r`, `drz_by_r`, `drzz_by_r` hold the exact quotients
    (d_r Psi)/r etc., which stay finite on the axis, and `rad2` holds
    (d_rr Psi - d_r Psi / r) / r^2, the combination entering cartesian
    Hessians.  Fields broadcast with the evaluation arrays.
    """

    value: object
    dr: object
    dz: object
    drr: object
    drz: object
    dzz: object
    drrr: object
    drrz: object
    drzz: object
    dzzz: object
    dr_by_r: object
    drz_by_r: object
    drzz_by_r: object
    rad2: object
    H: object


def _check_gap_point(h, r, z):
    if h <= 0.0:
        raise ValueError("profile evaluation requires h > 0")
    r = np.asarray(r, dtype=float)
    z = np.asarray(z, dtype=float)
    H = h + _gamma(r)
    if np.any(z < 0.0) or np.any(z > H * (1.0 + 1e-12) + 1e-300):
        raise ValueError("z outside the gap [0, h + gamma_s(r)]")
    return r, z, H


def psi_partials(regime, h, r, z):
    """Closed-form partial derivatives of Psi(r, z) up to total order three.

    Parameters
    ----------
    regime : SlipRegime
    h : float
    r, z : float or ndarray
        Broadcastable; 0 <= r < 1 and 0 <= z <= h + gamma_s(r).

    Returns
    -------
    PsiPartials
    """
    r, z, H = _check_gap_point(h, r, z)
    s = np.sqrt(1.0 - r * r)
    h1 = r / s
    h2 = s ** -3.0
    h3 = 3.0 * r * s ** -5.0

    (g1, g1h, g1hh, g1hhh), (g2, g2h, g2hh, g2hhh), (g3, g3h, g3hh, g3hhh) = _g_derivs(
        regime, H
    )

    z2 = z * z
    z3 = z2 * z
    f = g1 * z + g2 * z2 + g3 * z3
    fz = g1 + 2.0 * g2 * z + 3.0 * g3 * z2
    fzz = 2.0 * g2 + 6.0 * g3 * z
    fzzz = 6.0 * g3 * np.ones_like(z)
    fh = g1h * z + g2h * z2 + g3h * z3
    fhz = g1h + 2.0 * g2h * z + 3.0 * g3h * z2
    fhzz = 2.0 * g2h + 6.0 * g3h * z
    fhh = g1hh * z + g2hh * z2 + g3hh * z3
    fhhz = g1hh + 2.0 * g2hh * z + 3.0 * g3hh * z2
    fhhh = g1hhh * z + g2hhh * z2 + g3hhh * z3

    return PsiPartials(
        value=f,
        dr=fh * h1,
        dz=fz,
        drr=fhh * h1 * h1 + fh * h2,
        drz=fhz * h1,
        dzz=fzz,
        drrr=fhhh * h1 ** 3 + 3.0 * fhh * h1 * h2 + fh * h3,
        drrz=fhhz * h1 * h1 + fhz * h2,
        drzz=fhzz * h1,
        dzzz=fzzz,
        dr_by_r=fh / s,
        drz_by_r=fhz / s,
        drzz_by_r=fhzz / s,
        rad2=fhh / (s * s) + fh / (s ** 3.0),
        H=H,
    )


def psi(regime, h, r, z):
    """Value of the rescaled profile Psi(r, z)."""
    out = psi_partials(regime, h, r, z).value
    out = np.asarray(out)
    return out if out.ndim else float(out)


def psi_derivs(regime, h, r, z, order=3):
    """Dictionary of partials d_r^a d_z^b Psi for a + b <= order (<= 3)."""
    if not 0 <= order <= 3:
        raise ValueError("order must be between 0 and 3")
    p = psi_partials(regime, h, r, z)
    table = {
        (0, 0): p.value,
        (1, 0): p.dr,
        (0, 1): p.dz,
        (2, 0): p.drr,
        (1, 1): p.drz,
        (0, 2): p.dzz,
        (3, 0): p.drrr,
        (2, 1): p.drrz,
        (1, 2): p.drzz,
        (0, 3): p.dzzz,
    }
    return {k: v for k, v in table.items() if k[0] + k[1] <= order}


@dataclass(frozen=True)
class PsiHPartials:
    """h-derivative of Psi and its mixed partials with r and z."""

    dh: object
    drh: object
    dzh: object
    drrh: object
    dzzh: object
    drzh: object
    drh_by_r: object
    H: object


def psi_h_derivs(regime, h, r, z):
    """Closed-form h-derivatives of Psi.

    Since Psi(r, z) = F(H, z) with H = h + gamma_s(r), the h-derivative at
    fixed (r, z) is the H-derivative of F, and the mixed partials follow
    from the same chain rule as the r-derivatives.
    """
    r, z, H = _check_gap_point(h, r, z)
    s = np.sqrt(1.0 - r * r)
    h1 = r / s
    h2 = s ** -3.0

    (g1, g1h, g1hh, g1hhh), (g2, g2h, g2hh, g2hhh), (g3, g3h, g3hh, g3hhh) = _g_derivs(
        regime, H
    )
    z2 = z * z
    z3 = z2 * z
    fh = g1h * z + g2h * z2 + g3h * z3
    fhz = g1h + 2.0 * g2h * z + 3.0 * g3h * z2
    fhzz = 2.0 * g2h + 6.0 * g3h * z
    fhh = g1hh * z + g2hh * z2 + g3hh * z3
    fhhz = g1hh + 2.0 * g2hh * z + 3.0 * g3hh * z2
    fhhh = g1hhh * z + g2hhh * z2 + g3hhh * z3

    return PsiHPartials(
        dh=fh,
        drh=fhh * h1,
        dzh=fhz,
        drrh=fhhh * h1 * h1 + fhh * h2,
        dzzh=fhzz,
        drzh=fhhz * h1,
        drh_by_r=fhh / s,
        H=H,
    )


def psi_h_column(regime, h, r, z):
    """Exact z-antiderivative data for the h-derivative of Psi.

    Returns the three column integrals from z to the top of the gap H(r):

    ``int_z^H d_zh Psi ds``, ``int_z^H d_h Psi ds``, ``int_z^H d_rh Psi ds``.

    The first telescopes to ``d_h Psi(r, H) - d_h Psi(r, z)``; the other two
    use the polynomial antiderivative of F_H and F_HH in z.
    """
    r, z, H = _check_gap_point(h, r, z)
    s = np.sqrt(1.0 - r * r)
    h1 = r / s
    (g1, g1h, g1hh, _), (g2, g2h, g2hh, _), (g3, g3h, g3hh, _) = _g_derivs(regime, H)

    def fh(w):
        return g1h * w + g2h * w * w + g3h * w * w * w

    def anti_fh(w):
        w2 = w * w
        return g1h * w2 / 2.0 + g2h * w2 * w / 3.0 + g3h * w2 * w2 / 4.0

    def anti_fhh(w):
        w2 = w * w
        return g1hh * w2 / 2.0 + g2hh * w2 * w / 3.0 + g3hh * w2 * w2 / 4.0

    col_zh = fh(H) - fh(z)
    col_h = anti_fh(H) - anti_fh(z)
    col_rh = h1 * (anti_fhh(H) - anti_fhh(z))
    return col_zh, col_h, col_rh


def _sum_weights(*pairs):
    """Envelope 1/(w1 + w2 + ...) for bounds stated as sums of scales."""

    def weight(r, H):
        total = 0.0
        for fn in pairs:
            total = total + fn(r, H)
        return 1.0 / total

    return weight


# Envelope rows: label -> (extractor, inverse-scale weight).  The weighted
# sup of each row should stay O(1) uniformly in h; the test harness asserts
# a bounded ratio across an h sweep.  Rows follow the regime's derivative
# bound table; weights are the reciprocals of the claimed envelopes.
ENVELOPE_ROWS = {
    RegimeKind.SLIP: {
        "psi": (lambda p, q: np.abs(p.value), lambda r, H: 1.0),
        "dz*H": (lambda p, q: np.abs(p.dz), lambda r, H: H),
        "dr*H/r": (lambda p, q: np.abs(p.dr_by_r), lambda r, H: H),
        "drr*H": (lambda p, q: np.abs(p.drr), lambda r, H: H),
        "dzz*H": (lambda p, q: np.abs(p.dzz), lambda r, H: H),
        "dzzz*H^2": (lambda p, q: np.abs(p.dzzz), lambda r, H: H * H),
        "drrz*H^2": (lambda p, q: np.abs(p.drrz), lambda r, H: H * H),
        "drzz*H^2/r": (lambda p, q: np.abs(p.drzz_by_r), lambda r, H: H * H),
        "drrr/(r/H^2+1/H)": (
            lambda p, q: np.abs(p.drrr),
            _sum_weights(lambda r, H: r / (H * H), lambda r, H: 1.0 / H),
        ),
        "drz_cancel*H/r": (
            lambda p, q: np.abs(p.drz_by_r + p.dz / p.H),
            lambda r, H: H,
        ),
        "dh*H": (lambda p, q: np.abs(q.dh), lambda r, H: H),
        "drh/(1/H+r/H^2)": (
            lambda p, q: np.abs(q.drh),
            _sum_weights(lambda r, H: 1.0 / H, lambda r, H: r / (H * H)),
        ),
        "dzh*H^2": (lambda p, q: np.abs(q.dzh), lambda r, H: H * H),
        "dzzh*H^2": (lambda p, q: np.abs(q.dzzh), lambda r, H: H * H),
        "drrh*H^2": (lambda p, q: np.abs(q.drrh), lambda r, H: H * H),
        "drzh/(1/H^2+r/H^3)": (
            lambda p, q: np.abs(q.drzh),
            _sum_weights(lambda r, H: 1.0 / (H * H), lambda r, H: r / H ** 3),
        ),
    },
    RegimeKind.MIXED: {
        "psi": (lambda p, q: np.abs(p.value), lambda r, H: 1.0),
        "dz*H": (lambda p, q: np.abs(p.dz), lambda r, H: H),
        "dr*H/r": (lambda p, q: np.abs(p.dr_by_r), lambda r, H: H),
        "drr*H": (lambda p, q: np.abs(p.drr), lambda r, H: H),
        "dzz*H^2": (lambda p, q: np.abs(p.dzz), lambda r, H: H * H),
        "drz*H^2/r": (lambda p, q: np.abs(p.drz_by_r), lambda r, H: H * H),
        "dzzz*H^3": (lambda p, q: np.abs(p.dzzz), lambda r, H: H ** 3),
        "drrz*H^2": (lambda p, q: np.abs(p.drrz), lambda r, H: H * H),
        "drzz*H^3/r": (lambda p, q: np.abs(p.drzz_by_r), lambda r, H: H ** 3),
        "drrr*H^2/r": (
            lambda p, q: np.abs(p.drrr),
            lambda r, H: H * H / r,
        ),
        "dh*H": (lambda p, q: np.abs(q.dh), lambda r, H: H),
        "drh*H^2/r": (lambda p, q: np.abs(q.drh_by_r), lambda r, H: H * H),
        "drrh*H^2": (lambda p, q: np.abs(q.drrh), lambda r, H: H * H),
        "dzh*H^2": (lambda p, q: np.abs(q.dzh), lambda r, H: H * H),
        "dzzh*H^3": (lambda p, q: np.abs(q.dzzh), lambda r, H: H ** 3),
        "drzh/(r/H^3+1/H^2)": (
            lambda p, q: np.abs(q.drzh),
            _sum_weights(lambda r, H: r / H ** 3, lambda r, H: 1.0 / (H * H)),
        ),
    },
}


def weighted_sups(regime, h, delta=0.2, n_r=64, n_z=64):
    """Weighted derivative sups over the aperture for the envelope table.

    Samples an (n_r, n_z) grid with r log-spaced down to below the
    lubrication scale sqrt(h) and z proportional to the local gap height,
    and returns, for each envelope row of the regime, the sup of
    |derivative| * weight(r, H).  Uniform boundedness of these sups across
    an h sweep is the numerical surrogate for the "<=" statements of the
    derivative bound tables.
    """
    rows = ENVELOPE_ROWS[regime.kind]
    r_lo = max(1e-8, math.sqrt(h) / 100.0)
    r = np.geomspace(r_lo, delta, n_r)[:, None]
    t = np.linspace(1.0 / n_z, 1.0, n_z)[None, :]
    H = h + _gamma(r)
    z = t * H
    p = psi_partials(regime, h, r, z)
    q = psi_h_derivs(regime, h, r, z)
    out = {}
    for label, (extract, weight) in rows.items():
        out[label] = float(np.max(extract(p, q) * weight(r, H)))
    return out
