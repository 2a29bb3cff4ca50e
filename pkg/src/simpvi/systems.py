"""Concrete mechanical systems: the planar double pendulum and the Lagrange top.

Both models supply closed-form mass matrices, potentials and all derivative
tensors.  A small registry of named presets reproduces the experiment
configurations used throughout the package (CLI, acceptance suite).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError
from .model import LagrangianModel, as_coordinates

GRAVITY = 9.81


@dataclass(frozen=True)
class DoublePendulumParams:
    m1: float = 1.0
    m2: float = 1.0
    l1: float = 1.0
    l2: float = 1.0
    g: float = GRAVITY

    def __post_init__(self):
        for name in ("m1", "m2", "l1", "l2", "g"):
            if not getattr(self, name) > 0:
                raise ContractError(f"double pendulum parameter {name} must be positive")


@dataclass(frozen=True)
class LagrangeTopParams:
    """Symmetric heavy top.  ``I`` is the transverse inertia (I1 = I2 = I)."""

    m_top: float
    I: float
    I3: float
    l: float
    g: float = GRAVITY

    def __post_init__(self):
        for name in ("m_top", "I", "I3", "l", "g"):
            if not getattr(self, name) > 0:
                raise ContractError(f"Lagrange top parameter {name} must be positive")

    @property
    def m(self) -> float:
        """Squared frequency m_top g l / I, so that V = I m cos(theta)."""
        return self.m_top * self.g * self.l / self.I


def double_pendulum(params: DoublePendulumParams = DoublePendulumParams()) -> LagrangianModel:
    """Two point masses on massless rods, angles measured from the downward vertical."""
    m1, m2, l1, l2, g = params.m1, params.m2, params.l1, params.l2, params.g
    a11 = (m1 + m2) * l1 * l1
    a22 = m2 * l2 * l2
    a12 = m2 * l1 * l2
    w1 = (m1 + m2) * g * l1
    w2 = m2 * g * l2

    def mass(q):
        c = np.cos(q[0] - q[1])
        return np.array([[a11, a12 * c], [a12 * c, a22]])

    def dmass(q):
        s = a12 * np.sin(q[0] - q[1])
        out = np.zeros((2, 2, 2))
        out[0, 0, 1] = out[0, 1, 0] = -s
        out[1, 0, 1] = out[1, 1, 0] = s
        return out

    def d2mass(q):
        c = a12 * np.cos(q[0] - q[1])
        out = np.zeros((2, 2, 2, 2))
        for i, j, sign in ((0, 0, -1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, -1.0)):
            out[i, j, 0, 1] = out[i, j, 1, 0] = sign * c
        return out

    def potential(q):
        return -w1 * np.cos(q[0]) - w2 * np.cos(q[1])

    def grad_potential(q):
        return np.array([w1 * np.sin(q[0]), w2 * np.sin(q[1])])

    def hess_potential(q):
        return np.array([[w1 * np.cos(q[0]), 0.0], [0.0, w2 * np.cos(q[1])]])

    return LagrangianModel(
        name="double-pendulum",
        n=2,
        mass=mass,
        dmass=dmass,
        d2mass=d2mass,
        potential=potential,
        grad_potential=grad_potential,
        hess_potential=hess_potential,
    )


def lagrange_top(params: LagrangeTopParams, singular_guard: float = 1e-12) -> LagrangianModel:
    """Heavy symmetric top in ZXZ Euler angles q = (phi, theta, psi).

    M depends on theta only, so phi and psi are cyclic.  M is singular where
    sin(theta) = 0; that set is declared excluded rather than guarded here.
    """
    I, I3, Im = params.I, params.I3, params.I * params.m

    def mass(q):
        s, c = np.sin(q[1]), np.cos(q[1])
        return np.array([
            [I * s * s + I3 * c * c, 0.0, I3 * c],
            [0.0, I, 0.0],
            [I3 * c, 0.0, I3],
        ])

    def dmass(q):
        s, c = np.sin(q[1]), np.cos(q[1])
        out = np.zeros((3, 3, 3))
        out[1, 0, 0] = 2.0 * (I - I3) * s * c
        out[1, 0, 2] = out[1, 2, 0] = -I3 * s
        return out

    def d2mass(q):
        s, c = np.sin(q[1]), np.cos(q[1])
        out = np.zeros((3, 3, 3, 3))
        out[1, 1, 0, 0] = 2.0 * (I - I3) * (c * c - s * s)
        out[1, 1, 0, 2] = out[1, 1, 2, 0] = -I3 * c
        return out

    def potential(q):
        return Im * np.cos(q[1])

    def grad_potential(q):
        return np.array([0.0, -Im * np.sin(q[1]), 0.0])

    def hess_potential(q):
        out = np.zeros((3, 3))
        out[1, 1] = -Im * np.cos(q[1])
        return out

    def excluded(q):
        if abs(np.sin(q[1])) < singular_guard:
            return f"sin(theta) = {np.sin(q[1]):.3e}: Euler-angle chart is singular"
        return None

    return LagrangianModel(
        name="lagrange-top",
        n=3,
        mass=mass,
        dmass=dmass,
        d2mass=d2mass,
        potential=potential,
        grad_potential=grad_potential,
        hess_potential=hess_potential,
        excluded=excluded,
        cyclic=(0, 2),
    )


def top_conserved_momenta(params: LagrangeTopParams, q, qdot):
    """Momenta conjugate to the cyclic angles, (p_phi, p_psi)."""
    q = np.asarray(q, dtype=float)
    qdot = np.asarray(qdot, dtype=float)
    dphi, dpsi = qdot[0], qdot[2]
    s, c = np.sin(q[1]), np.cos(q[1])
    spin = params.I3 * (dpsi + dphi * c)
    return spin * c + params.I * dphi * s * s, spin


# ---------------------------------------------------------------------------
# presets


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    model: LagrangianModel
    q0: np.ndarray
    qdot0: np.ndarray
    params: object
    kind: str
    extra: dict = field(default_factory=dict)

    @property
    def is_top(self) -> bool:
        return self.kind == "lagrange-top"


TABLE1_OMEGA0 = 2.0 * np.pi


def table1_params(g: float = GRAVITY) -> DoublePendulumParams:
    # link length follows l = g / omega0 as printed (not g / omega0**2)
    length = g / TABLE1_OMEGA0
    return DoublePendulumParams(m1=1.0, m2=1.0, l1=length, l2=length, g=g)


TABLE3_I_FULL = 0.002329969592394382


def table3_params(g: float = GRAVITY, I: float = 2.33e-3) -> LagrangeTopParams:
    """Looping-motion top.

    ``I`` defaults to the three-digit value 2.33e-3 kg m^2, which reproduces
    the reference nutation period 1.84671 s; pass ``TABLE3_I_FULL`` for the
    unrounded inertia (period 1.84724 s).
    """
    return LagrangeTopParams(m_top=0.1, I=I, I3=0.000125, l=0.15, g=g)


def table4_params(g: float = GRAVITY) -> LagrangeTopParams:
    # l = 4 pi^2 / g so that m = m_top g l / I = 4 pi^2 regardless of g
    return LagrangeTopParams(m_top=1.0, I=1.0, I3=2.0, l=4.0 * np.pi**2 / g, g=g)


def _build_presets():
    p1 = table1_params()
    p3 = table3_params()
    p4 = table4_params()
    return {
        "double-pendulum-table1": Preset(
            name="double-pendulum-table1",
            description="double pendulum, m1 = m2 = 1 kg, l = g/omega0, q0 = (pi/4, pi/3), p0 = 0",
            model=double_pendulum(p1),
            q0=np.array([np.pi / 4, np.pi / 3]),
            qdot0=np.zeros(2),
            params=p1,
            kind="double-pendulum",
        ),
        "lagrange-top-table3": Preset(
            name="lagrange-top-table3",
            description="Lagrange top, looping motion: theta0 = pi/3, rates (9.2, 0, 252) rad/s",
            model=lagrange_top(p3),
            q0=np.array([0.0, np.pi / 3, 0.0]),
            qdot0=np.array([9.2, 0.0, 252.0]),
            params=p3,
            kind="lagrange-top",
        ),
        "lagrange-top-table4": Preset(
            name="lagrange-top-table4",
            description="Lagrange top, cuspidal motion: I = 1, I3 = 2, theta0 = pi/6, rates (0, 0, 2 pi)",
            model=lagrange_top(p4),
            q0=np.array([0.0, np.pi / 6, 0.0]),
            qdot0=np.array([0.0, 0.0, 2.0 * np.pi]),
            params=p4,
            kind="lagrange-top",
            extra={"A": 4.0 * np.pi**2},
        ),
    }


PRESETS = _build_presets()


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}") from None


def preset_initial_state(preset: Preset):
    """Initial configuration and momentum p0 = M(q0) qdot0."""
    q0 = as_coordinates(preset.model, preset.q0)
    return q0, preset.model.mass(q0) @ preset.qdot0
