"""
Test-particle motion in translation-mode fields, static two-body limits and
the inner-mode mass spectrum.

Field tensors are the contravariant ``F^{mu nu}_M`` produced by
`isodyn.retarded_field.field_tensor`; a *field provider* is any callable
mapping a field point ``(c t, x, y, z)`` to such a tensor.
"""
import csv
import itertools
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from .core import CODATA, ETA, IsodynError, check_dimension, minkowski_dot

__all__ = [
    "StepTooLarge", "ParticleState", "MotionHistory", "SpectrumEntry",
    "lorentz_like_force", "coordinate_acceleration", "integrate_motion",
    "newton_accel", "interaction_energy", "mass_spectrum", "kepler_period",
    "orbit_period", "NORM_DRIFT_LIMIT",
]

NORM_DRIFT_LIMIT = 1e-6
STATE_NORM_RTOL = 1e-10
SPECTRUM_LIMIT = 2_000_000


class StepTooLarge(IsodynError):
    """Four-velocity left the mass shell by more than the drift limit in one step."""


@dataclass(frozen=True)
class ParticleState:
    """Position ``(c t, x, y, z)`` (m), four-velocity (m/s) and proper time (s)."""

    position: np.ndarray
    four_velocity: np.ndarray
    proper_time: float = 0.0
    consts: object = CODATA

    def __post_init__(self):
        pos = np.array(self.position, dtype=float)
        u = np.array(self.four_velocity, dtype=float)
        if pos.shape != (4,) or u.shape != (4,):
            raise ValueError("position and four_velocity must be four-vectors")
        c2 = self.consts.c**2
        if abs(minkowski_dot(u, u) + c2) > STATE_NORM_RTOL * c2:
            raise ValueError("four-velocity must satisfy u.u = -c^2")
        if u[0] <= 0:
            raise ValueError("four-velocity must be future pointing")
        pos.setflags(write=False)
        u.setflags(write=False)
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "four_velocity", u)

    @classmethod
    def from_velocity(cls, position, velocity, t=0.0, proper_time=0.0, consts=CODATA):
        """Build from a 3-position (m) and coordinate velocity (m/s) at time ``t``."""
        v = np.asarray(velocity, dtype=float)
        beta2 = v @ v / consts.c**2
        if not beta2 < 1:
            raise ValueError("velocity must be subluminal")
        gamma = 1.0 / np.sqrt(1.0 - beta2)
        pos = np.concatenate([[consts.c * t], np.asarray(position, dtype=float)])
        return cls(pos, gamma * np.concatenate([[consts.c], v]), proper_time, consts)


@dataclass(frozen=True)
class MotionHistory:
    """Sampled integration output; arrays share the leading sample axis."""

    tau: np.ndarray
    position: np.ndarray
    four_velocity: np.ndarray
    norm_residual: np.ndarray
    consts: object = CODATA

    @property
    def t(self):
        return self.position[:, 0] / self.consts.c

    @property
    def velocity(self):
        """Coordinate velocity dx/dt (m/s)."""
        return self.consts.c * self.four_velocity[:, 1:] / self.four_velocity[:, :1]

    def state(self, i):
        return ParticleState(self.position[i], self.four_velocity[i], float(self.tau[i]), self.consts)

    def to_csv(self, path):
        u = self.four_velocity
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["tau", "t", "x", "y", "z", "ux", "uy", "uz", "u0", "norm_residual"])
            for k in range(self.tau.size):
                row = [self.tau[k], self.t[k], *self.position[k, 1:], *u[k, 1:], u[k, 0], self.norm_residual[k]]
                w.writerow([repr(float(v)) for v in row])


def lorentz_like_force(f, K, u):
    """
    Four-force ``F^mu = F^{mu nu}_M eta_{nu sigma} u^sigma K_M`` (N).

    Dividing by the rest mass gives ``du^mu/dtau``.
    """
    f = np.asarray(f, dtype=float)
    K = np.asarray(K, dtype=float)
    u = np.asarray(u, dtype=float)
    if f.shape[:2] != (4, 4) or u.shape != (4,):
        raise ValueError("field tensor must be 4x4xD and u a four-vector")
    if f.shape[2:] != K.shape:
        raise ValueError(f"inner dimension mismatch: field has {f.shape[2:]}, charge has {K.shape}")
    return np.einsum("mnM,n,M->m", f, ETA @ u, K)


def coordinate_acceleration(f, K_over_m, u, consts=CODATA):
    """d^2 x / dt^2 (m/s^2) of a particle with four-velocity ``u`` and charge/mass ``K_over_m``."""
    a = lorentz_like_force(f, K_over_m, u)
    return consts.c**2 * (a[1:] * u[0] - u[1:] * a[0]) / u[0] ** 3


def _mass_shell(u, c):
    s = u.copy()
    s[0] = np.sqrt(c * c + s[1:] @ s[1:])
    return s


def integrate_motion(state, particle, field, dtau, steps, sample_every=1):
    """
    Integrate ``m du/dtau = F^{mu nu}_M eta u K_M`` with classic 4th-order Runge-Kutta.

    Parameters
    ----------
    state : ParticleState
    particle : ChargedParticle
        Supplies the charge-to-mass ratio; the rest mass enters only through K/m.
    field : callable
        Field provider returning ``F^{mu nu}_M`` at a field point.
    dtau : float
        Proper-time step (s).
    steps : int
    sample_every : int, optional
        Keep every n-th state (the initial and final states are always kept).

    Returns
    -------
    MotionHistory
        ``norm_residual`` holds |u.u + c^2|/c^2 measured before each
        projection back onto the mass shell.

    Raises
    ------
    StepTooLarge
        If a single step drifts off the mass shell by more than 1e-6.
    """
    if not dtau > 0 or steps < 0:
        raise ValueError("dtau must be positive and steps non-negative")
    consts = particle.consts
    c = consts.c
    q = particle.charge_over_mass

    def rhs(y, u):
        return u, lorentz_like_force(field(y), q, u)

    y = state.position.copy()
    u = state.four_velocity.copy()
    tau = state.proper_time
    taus, ys, us, res = [tau], [y.copy()], [u.copy()], [0.0]
    for k in range(1, steps + 1):
        k1y, k1u = rhs(y, u)
        k2y, k2u = rhs(y + 0.5 * dtau * k1y, u + 0.5 * dtau * k1u)
        k3y, k3u = rhs(y + 0.5 * dtau * k2y, u + 0.5 * dtau * k2u)
        k4y, k4u = rhs(y + dtau * k3y, u + dtau * k3u)
        y = y + dtau / 6 * (k1y + 2 * k2y + 2 * k3y + k4y)
        u = u + dtau / 6 * (k1u + 2 * k2u + 2 * k3u + k4u)
        drift = abs(minkowski_dot(u, u) + c * c) / (c * c)
        if drift > NORM_DRIFT_LIMIT:
            raise StepTooLarge(f"four-velocity drift {drift:.3e} at step {k}; reduce dtau")
        u = _mass_shell(u, c)
        tau = state.proper_time + k * dtau
        if k % sample_every == 0 or k == steps:
            taus.append(tau)
            ys.append(y.copy())
            us.append(u.copy())
            res.append(drift)
    return MotionHistory(np.array(taus), np.array(ys), np.array(us), np.array(res), consts)


def newton_accel(m_src, r_vec, cos_theta=-1.0, g2over4pi=1.0, consts=CODATA):
    """Static-limit acceleration ``(g^2/4pi) G m_src cos(theta) r_hat / r^2`` of a test particle."""
    r_vec = np.asarray(r_vec, dtype=float)
    r = np.linalg.norm(r_vec)
    if r == 0:
        raise ValueError("separation must be non-zero")
    return g2over4pi * consts.G * m_src * cos_theta * r_vec / r**3


def interaction_energy(m_K, m_Q, r, cos_theta=-1.0, g2over4pi=1.0, consts=CODATA):
    """Static interaction energy ``(g^2/4pi) G m_K m_Q cos(theta) / r`` (J)."""
    if not r > 0:
        raise ValueError("separation must be positive")
    return g2over4pi * consts.G * m_K * m_Q * cos_theta / r


def kepler_period(r, m_src, consts=CODATA, g2over4pi=1.0):
    """Circular-orbit period ``2 pi sqrt(r^3 / (g^2/4pi G m_src))`` (s)."""
    return 2 * np.pi * np.sqrt(r**3 / (g2over4pi * consts.G * m_src))


def orbit_period(history, center=(0.0, 0.0, 0.0), normal=(0.0, 0.0, 1.0)):
    """
    Coordinate time for the azimuth about ``center`` to advance by one turn.

    The unwrapped azimuth is interpolated with cubic Hermite segments using its
    exact time derivative, so the estimate is limited by the integration error
    rather than the sampling interval.
    """
    n = np.asarray(normal, dtype=float)
    n = n / np.linalg.norm(n)
    helper = np.array([1.0, 0, 0]) if abs(n[0]) < 0.9 else np.array([0, 1.0, 0])
    e1 = np.cross(helper, n)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    rel = history.position[:, 1:] - np.asarray(center, dtype=float)
    v = history.velocity
    px, py = rel @ e1, rel @ e2
    vx, vy = v @ e1, v @ e2
    phi = np.unwrap(np.arctan2(py, px))
    dphi = (px * vy - py * vx) / (px**2 + py**2)
    t = history.t
    turn = phi - phi[0]
    sign = np.sign(turn[-1])
    hit = np.nonzero(sign * turn >= 2 * np.pi)[0]
    if sign == 0 or hit.size == 0:
        raise ValueError("history does not cover a full revolution")
    k = hit[0]
    spline = CubicHermiteSpline(t[k - 1:k + 1], turn[k - 1:k + 1], dphi[k - 1:k + 1])
    root = brentq(lambda s: float(spline(s)) - sign * 2 * np.pi, t[k - 1], t[k], xtol=1e-15 * abs(t[k]) + 1e-300, rtol=1e-15)
    return root - t[0]


@dataclass(frozen=True)
class SpectrumEntry:
    """One mass level: ``mass = pi m_P sqrt(n_squared)`` shared by ``multiplicity`` modes."""

    n_squared: int
    mass: float
    multiplicity: int
    modes: tuple

    @property
    def n(self):
        return self.modes[0]


def mass_spectrum(D, n_max, consts=CODATA):
    """
    Enumerate inner-mode masses for integer labels ``n`` in ``{0..n_max}^D`` minus the origin.

    Levels are merged by ``sum(n^2)`` and returned with ascending mass.
    """
    D = check_dimension(D)
    if not isinstance(n_max, (int, np.integer)) or n_max < 1:
        raise ValueError("n_max must be a positive integer")
    if (n_max + 1) ** D > SPECTRUM_LIMIT:
        raise ValueError(f"enumeration of {(n_max + 1) ** D} labels exceeds the limit {SPECTRUM_LIMIT}")
    levels = {}
    for n in itertools.product(range(n_max + 1), repeat=D):
        s = sum(k * k for k in n)
        if s:
            levels.setdefault(s, []).append(n)
    return [SpectrumEntry(s, float(np.pi * consts.m_P * np.sqrt(s)), len(m), tuple(m))
            for s, m in sorted(levels.items())]
