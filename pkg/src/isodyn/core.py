"""
Physical constants, Minkowski and inner-space linear algebra.

Spacetime vectors are plain length-4 arrays with the time component first
(x0 = c t, metres) and metric signature (-, +, +, +). Inner vectors are
length-D arrays contracted with the Euclidean metric.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.constants as ct

__all__ = [
    "IsodynError", "ConstraintViolation", "PhysicalConstants", "CODATA",
    "NATURAL", "ETA", "D_MIN", "D_MAX", "planck_derive", "minkowski_dot",
    "inner_angle_product", "ChargedParticle", "check_dimension",
]

D_MIN, D_MAX = 1, 8

ETA = np.diag([-1.0, 1.0, 1.0, 1.0])


class IsodynError(Exception):
    """Base class for numeric failures raised by this package."""


class ConstraintViolation(ValueError):
    """Raised when coefficient tensors violate the divergence-free constraints."""


@dataclass(frozen=True)
class PhysicalConstants:
    """SI constants; Planck mass and length are derived on construction."""

    c: float
    G: float
    hbar: float
    m_P: float = field(init=False)
    l_P: float = field(init=False)

    def __post_init__(self):
        for name in ("c", "G", "hbar"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ValueError(f"{name} must be positive and finite, got {value!r}")
        object.__setattr__(self, "m_P", float(np.sqrt(self.hbar * self.c / self.G)))
        object.__setattr__(self, "l_P", float(np.sqrt(self.hbar * self.G / self.c**3)))

    @property
    def Lambda(self):
        """Inner-space momentum scale m_P c (N s)."""
        return self.m_P * self.c


def planck_derive(c, G, hbar):
    """Build a `PhysicalConstants` from c, G and hbar; raises on non-positive input."""
    return PhysicalConstants(float(c), float(G), float(hbar))


CODATA = planck_derive(ct.c, ct.G, ct.hbar)
NATURAL = planck_derive(1.0, 1.0, 1.0)


def minkowski_dot(u, v):
    """Return -u0 v0 + u.v for four-vectors (trailing axis of length 4)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return -u[..., 0] * v[..., 0] + np.sum(u[..., 1:] * v[..., 1:], axis=-1)


def check_dimension(D):
    if not isinstance(D, (int, np.integer)) or not D_MIN <= D <= D_MAX:
        raise ValueError(f"inner dimension D must be an integer in [{D_MIN}, {D_MAX}], got {D!r}")
    return int(D)


def inner_angle_product(K, Q):
    """
    Euclidean scalar product of two inner vectors and the cosine of their angle.

    Returns
    -------
    dot : float
        K.Q = |K| |Q| cos(theta).
    cos_theta : float
    """
    K = np.asarray(K, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if K.ndim != 1 or K.shape != Q.shape:
        raise ValueError(f"inner vectors must share one dimension, got {K.shape} and {Q.shape}")
    nk, nq = np.linalg.norm(K), np.linalg.norm(Q)
    if nk == 0 or nq == 0:
        raise ValueError("inner vectors must be non-zero")
    dot = float(K @ Q)
    return dot, dot / (nk * nq)


@dataclass(frozen=True)
class ChargedParticle:
    """
    Point particle with rest mass (kg) and inner-momentum charge K (N s).

    Use `ChargedParticle.locked` to build a particle with |K| = m c.
    """

    rest_mass: float
    charge: np.ndarray
    label: str = ""
    mass_locked: bool = False
    consts: PhysicalConstants = CODATA

    def __post_init__(self):
        charge = np.array(self.charge, dtype=float)
        if charge.ndim != 1:
            raise ValueError("charge must be a 1-d inner vector")
        check_dimension(charge.size)
        if not self.rest_mass > 0:
            raise ValueError(f"rest_mass must be positive, got {self.rest_mass!r}")
        charge.setflags(write=False)
        object.__setattr__(self, "charge", charge)
        if self.mass_locked:
            target = self.rest_mass * self.consts.c
            if abs(np.linalg.norm(charge) - target) > 1e-12 * target:
                raise ValueError("mass-locked particle needs |K| = m c")

    @classmethod
    def locked(cls, rest_mass, direction, label="", consts=CODATA):
        direction = np.asarray(direction, dtype=float)
        norm = np.linalg.norm(direction)
        if norm == 0:
            raise ValueError("charge direction must be non-zero")
        return cls(rest_mass, rest_mass * consts.c * direction / norm, label, True, consts)

    @property
    def D(self):
        return self.charge.size

    @property
    def charge_over_mass(self):
        return self.charge / self.rest_mass
