"""Exact nutation of the Lagrange top.

With u = cos(theta), conservation of energy and of the two cyclic momenta
gives u'^2 = f(u) with the cubic

    f(u) = (2 c/I - 2 m u)(1 - u^2) - (b - a u)^2,   a = p_psi/I, b = p_phi/I,

where c = I theta0'^2/2 + (p_phi - p_psi u0)^2 / (2 I sin^2 theta0) + I m u0.
f has roots u1 <= u2 <= 1 <= u3 and the motion oscillates in [u1, u2]:

    u(t) = u1 + (u2 - u1) sn^2(kappa t + delta | k^2),
    k^2 = (u2 - u1)/(u3 - u1),   kappa = sqrt(m (u3 - u1)/2).

This is the real-axis form of the Weierstrass solution
u = (2/m) P(t + omega3) + (2 I c + p_psi^2)/(6 I^2 m): on the line
Im(t + omega3) = Im(omega3), P is real and sweeps [e3, e2], which the affine
map above sends onto [u1, u2].
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DomainError, ModelInconsistencyError
from .systems import LagrangeTopParams, top_conserved_momenta

# ---------------------------------------------------------------------------
# special functions


def carlson_rf(x, y, z):
    """Carlson's symmetric integral R_F(x, y, z) by the duplication theorem."""
    x, y, z = float(x), float(y), float(z)
    if min(x, y, z) < 0 or not all(map(math.isfinite, (x, y, z))):
        raise DomainError("R_F needs finite non-negative arguments")
    if (x == 0) + (y == 0) + (z == 0) > 1:
        raise DomainError("R_F diverges when two arguments vanish")
    x0, y0 = x, y
    A0 = (x + y + z) / 3.0
    # bound (3 eps)^(-1/6) keeps the truncated series below double-precision roundoff
    Q = (3.0 * np.finfo(float).eps) ** (-1.0 / 6.0) * max(abs(A0 - x), abs(A0 - y), abs(A0 - z))
    A = A0
    scale = 1.0
    while Q * scale >= abs(A):
        sx, sy, sz = math.sqrt(x), math.sqrt(y), math.sqrt(z)
        lam = sx * sy + sx * sz + sy * sz
        x, y, z = (x + lam) / 4.0, (y + lam) / 4.0, (z + lam) / 4.0
        A = (A + lam) / 4.0
        scale /= 4.0
    X = (A0 - x0) * scale / A
    Y = (A0 - y0) * scale / A
    Z = -(X + Y)
    E2 = X * Y - Z * Z
    E3 = X * Y * Z
    series = 1.0 - E2 / 10.0 + E3 / 14.0 + E2 * E2 / 24.0 - 3.0 * E2 * E3 / 44.0
    return series / math.sqrt(A)


def ellipk(k2):
    """Complete elliptic integral of the first kind, parameter k2 = k^2."""
    k2 = float(k2)
    if not k2 <= 1.0:
        raise DomainError(f"ellipk needs k^2 <= 1, got {k2}")
    if k2 == 1.0:
        return math.inf
    return carlson_rf(0.0, 1.0 - k2, 1.0)


def ellipf(phi, k2):
    """Incomplete integral F(phi | k2) for real amplitude phi, 0 <= k2 < 1."""
    phi, k2 = float(phi), float(k2)
    if not 0.0 <= k2 <= 1.0:
        raise DomainError(f"ellipf needs 0 <= k^2 <= 1, got {k2}")
    turns = round(phi / math.pi)
    rest = phi - turns * math.pi
    s, c = math.sin(rest), math.cos(rest)
    value = s * carlson_rf(c * c, 1.0 - k2 * s * s, 1.0) if s != 0.0 else 0.0
    if turns:
        value += 2.0 * turns * ellipk(k2)
    return value


def jacobi_ellipj(u, k2):
    """(sn, cn, dn) by the arithmetic-geometric mean with descending Landen steps."""
    u, k2 = float(u), float(k2)
    if not 0.0 <= k2 <= 1.0:
        raise DomainError(f"Jacobi functions need 0 <= k^2 <= 1, got {k2}")
    if not math.isfinite(u):
        raise DomainError("Jacobi functions need a finite argument")
    if k2 == 0.0:
        return math.sin(u), math.cos(u), 1.0
    if k2 == 1.0:
        sech = 1.0 / math.cosh(u)
        return math.tanh(u), sech, sech
    a = [1.0]
    c = [math.sqrt(k2)]
    b = math.sqrt(1.0 - k2)
    while abs(c[-1]) > 4.0 * np.finfo(float).eps * a[-1] and len(a) < 64:
        a_next = 0.5 * (a[-1] + b)
        c.append(0.5 * (a[-1] - b))
        b = math.sqrt(a[-1] * b)
        a.append(a_next)
    N = len(a) - 1
    phi = (2.0 ** N) * a[N] * u
    for n in range(N, 0, -1):
        phi = 0.5 * (phi + math.asin(c[n] / a[n] * math.sin(phi)))
    sn, cn = math.sin(phi), math.cos(phi)
    # dn^2 = cn^2 + k'^2 sn^2 avoids the cancellation in 1 - k^2 sn^2 near k^2 = 1
    return sn, cn, math.sqrt(cn * cn + (1.0 - k2) * sn * sn)


def jacobi_sn(u, k2):
    return jacobi_ellipj(u, k2)[0]


# ---------------------------------------------------------------------------
# nutation cubic


@dataclass(frozen=True)
class TopMotionConstants:
    """Integrals of motion fixed by the initial conditions."""

    c: float
    p_phi: float
    p_psi: float
    m: float
    I: float

    @property
    def a(self) -> float:
        return self.p_psi / self.I

    @property
    def b(self) -> float:
        return self.p_phi / self.I


@dataclass(frozen=True)
class NutationCubic:
    """f(u) = a3 u^3 + a2 u^2 + a1 u + a0 with ordered real roots and the initial phase.

    ``u0`` and ``du0`` are cos(theta0) and its initial rate; ``constants`` is
    set when the cubic was built from a top.
    """

    coefficients: tuple
    roots: tuple
    u0: float
    du0: float = 0.0
    constants: TopMotionConstants = None

    def __call__(self, u):
        a3, a2, a1, a0 = self.coefficients
        return ((a3 * u + a2) * u + a1) * u + a0

    def derivative(self, u):
        a3, a2, a1, _ = self.coefficients
        return (3.0 * a3 * u + 2.0 * a2) * u + a1

    @property
    def band(self):
        return self.roots[0], self.roots[1]

    @property
    def degenerate(self) -> bool:
        u1, u2, u3 = self.roots
        return (u2 - u1) <= 1e-13 * max(1.0, u3 - u1)

    @property
    def modulus(self) -> float:
        u1, u2, u3 = self.roots
        return (u2 - u1) / (u3 - u1)

    @property
    def frequency(self) -> float:
        u1, _, u3 = self.roots
        return math.sqrt(self.coefficients[0] * (u3 - u1) / 4.0)

    @property
    def phase(self) -> float:
        """delta with u(0) = u0 and the sign of u'(0) matching ``du0``."""
        u1, u2, _ = self.roots
        s = min(1.0, max(0.0, (self.u0 - u1) / (u2 - u1)))
        delta = ellipf(math.asin(math.sqrt(s)), self.modulus)
        return -delta if self.du0 < 0 else delta

    def weierstrass_form(self):
        """(g2, g3, scale, offset) with u = scale * P + offset and P'^2 = 4 P^3 - g2 P - g3."""
        a3, a2, _, _ = self.coefficients
        scale = 4.0 / a3
        offset = -a2 / (3.0 * a3)
        g2 = -self.derivative(offset) / scale
        g3 = -self(offset) / scale**2
        return g2, g3, scale, offset

    @classmethod
    def from_coefficients(cls, a3, a2, a1, a0, u0=None, du0=0.0, constants=None):
        """Build from raw coefficients; requires a3 > 0 and three real roots."""
        coeffs = tuple(float(v) for v in (a3, a2, a1, a0))
        if not coeffs[0] > 0:
            raise ModelInconsistencyError(f"leading coefficient must be positive for a bounded band, got {coeffs[0]}")
        roots = _real_roots(coeffs, u0 if du0 == 0.0 else None)
        if u0 is None:
            u0 = roots[0]
        return cls(coeffs, roots, float(u0), float(du0), constants)


def _real_roots(coeffs, known=None):
    """Three real roots in increasing order (trigonometric method, Newton polish).

    ``known`` is an exact root (initial turning point); the other two come from
    the deflated quadratic, which is better conditioned near double roots.
    """
    a3, a2, a1, a0 = coeffs
    f = lambda u: ((a3 * u + a2) * u + a1) * u + a0  # noqa: E731
    df = lambda u: (3.0 * a3 * u + 2.0 * a2) * u + a1  # noqa: E731
    if known is not None:
        r = float(known)
        # synthetic division by (u - r)
        b2 = a3
        b1 = a2 + r * b2
        b0 = a1 + r * b1
        disc = b1 * b1 - 4.0 * b2 * b0
        if disc < -1e-12 * max(1.0, b1 * b1):
            raise ModelInconsistencyError("nutation cubic has complex roots")
        sq = math.sqrt(max(disc, 0.0))
        q = -0.5 * (b1 + math.copysign(sq, b1))
        others = [q / b2, b0 / q] if q != 0.0 else [0.0, 0.0]
        return tuple(sorted([r] + others))
    p = a2 / a3
    q = a1 / a3
    s = a0 / a3
    shift = -p / 3.0
    P = q - p * p / 3.0
    Q = 2.0 * p**3 / 27.0 - p * q / 3.0 + s
    if P >= 0:
        raise ModelInconsistencyError("nutation cubic has a single real root")
    r = 2.0 * math.sqrt(-P / 3.0)
    arg = 3.0 * Q / (P * r)
    if abs(arg) > 1.0 + 1e-12:
        raise ModelInconsistencyError("nutation cubic has complex roots")
    theta = math.acos(max(-1.0, min(1.0, arg))) / 3.0
    roots = [shift + r * math.cos(theta - 2.0 * math.pi * k / 3.0) for k in range(3)]
    polished = []
    for u in roots:
        for _ in range(3):
            d = df(u)
            if d == 0.0:
                break
            step = f(u) / d
            u -= step
            if abs(step) <= 1e-16 * max(1.0, abs(u)):
                break
        polished.append(u)
    return tuple(sorted(polished))


def motion_constants(params: LagrangeTopParams, q0, qdot0) -> TopMotionConstants:
    q0 = np.asarray(q0, dtype=float)
    qdot0 = np.asarray(qdot0, dtype=float)
    theta0, dtheta0 = q0[1], qdot0[1]
    s = math.sin(theta0)
    if abs(s) < 1e-12:
        raise ContractError("initial nutation must satisfy sin(theta0) != 0")
    p_phi, p_psi = top_conserved_momenta(params, q0, qdot0)
    I, m, u0 = params.I, params.m, math.cos(theta0)
    c = 0.5 * I * dtheta0**2 + (p_phi - p_psi * u0) ** 2 / (2.0 * I * s * s) + I * m * u0
    return TopMotionConstants(c=c, p_phi=float(p_phi), p_psi=float(p_psi), m=m, I=I)


def nutation_cubic(params: LagrangeTopParams, q0, qdot0) -> NutationCubic:
    """Cubic u'^2 = f(u) for the top started at (q0, qdot0)."""
    k = motion_constants(params, q0, qdot0)
    m, a, b, ct = k.m, k.a, k.b, k.c / k.I
    coeffs = (2.0 * m, -2.0 * ct - a * a, -2.0 * m + 2.0 * a * b, 2.0 * ct - b * b)
    theta0, dtheta0 = float(q0[1]), float(qdot0[1])
    u0 = math.cos(theta0)
    du0 = -math.sin(theta0) * dtheta0
    cubic = NutationCubic.from_coefficients(*coeffs, u0=u0, du0=du0, constants=k)
    u1, u2, _ = cubic.roots
    tol = 1e-10 * max(1.0, abs(u0))
    if not (-1.0 - tol <= u1 <= u0 + tol and u0 - tol <= u2 <= 1.0 + tol):
        raise ModelInconsistencyError(
            f"initial u0 = {u0} is not inside the oscillation band [{u1}, {u2}] within [-1, 1]"
        )
    return cubic


def exact_nutation(cubic: NutationCubic, t):
    """theta(t) in radians; accepts a scalar or an array of times."""
    t_arr = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t_arr)):
        raise DomainError("time must be finite")
    u1, u2, _ = cubic.roots
    if cubic.degenerate:
        out = np.full(t_arr.shape, math.acos(max(-1.0, min(1.0, cubic.u0))))
        return float(out) if out.ndim == 0 else out
    kappa, k2, delta = cubic.frequency, cubic.modulus, cubic.phase
    flat = t_arr.reshape(-1)
    sn = np.array([jacobi_sn(kappa * tk + delta, k2) for tk in flat])
    u = u1 + (u2 - u1) * sn * sn
    theta = np.arccos(np.clip(u, -1.0, 1.0)).reshape(t_arr.shape)
    return float(theta) if theta.ndim == 0 else theta


def nutation_period(cubic: NutationCubic) -> float:
    """T = 2 * integral of du / sqrt(f) over the band = 2 K(k) / kappa."""
    if cubic.degenerate:
        raise ModelInconsistencyError("degenerate oscillation band: nutation period undefined")
    return 2.0 * ellipk(cubic.modulus) / cubic.frequency
