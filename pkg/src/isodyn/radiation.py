"""
Radiated energy of accelerated inner-momentum charges.

Kinematics use v_hat = v/c and a_hat = d(v_hat)/dt at the retarded time (1/s).
Powers are returned as positive numbers (energy lost by the source per unit
retarded time).
"""
import csv
from dataclasses import dataclass

import numpy as np

from .core import CODATA, IsodynError
from .retarded_field import OnWorldline, field_components, retarded_time

__all__ = [
    "KinematicState", "OrbitConfig", "DecaySeries", "OrbitContact", "energy_density",
    "poynting", "energy_flux", "angular_power", "larmor_power", "circular_orbit_power",
    "sphere_quadrature", "flux_sphere_integral", "binary_decay", "binary_power",
    "gr_quadrupole_power", "radiation_report",
]

FOUR_PI = 4 * np.pi


class OrbitContact(IsodynError):
    """The decaying separation reached the contact threshold."""


@dataclass(frozen=True)
class KinematicState:
    v_hat: np.ndarray
    a_hat: np.ndarray

    def __post_init__(self):
        v = np.array(self.v_hat, dtype=float)
        a = np.array(self.a_hat, dtype=float)
        if v.shape != (3,) or a.shape != (3,):
            raise ValueError("v_hat and a_hat must be 3-vectors")
        if not v @ v < 1:
            raise ValueError("|v_hat| must be below 1")
        v.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "v_hat", v)
        object.__setattr__(self, "a_hat", a)


@dataclass(frozen=True)
class OrbitConfig:
    """Circular orbit of a mass (kg) with radius (m) and speed v_hat = v/c."""

    mass: float
    radius: float
    v_hat: float

    def __post_init__(self):
        if not self.mass > 0 or not self.radius > 0:
            raise ValueError("mass and radius must be positive")
        if not 0 < self.v_hat < 1:
            raise ValueError("orbital v_hat must lie in (0, 1)")

    @classmethod
    def kepler(cls, mass, radius, central_mass, consts=CODATA):
        """Orbit at the Newtonian circular speed around ``central_mass``."""
        return cls(mass, radius, float(np.sqrt(consts.G * central_mass / radius) / consts.c))


def _check_g2(g2):
    if g2 == 0:
        raise ValueError("coupling g must be non-zero")


def energy_density(sample, g2=FOUR_PI, consts=CODATA):
    """``(1/8g^2)(c^4/G) sum_M (e_M.e_M + b_M.b_M)`` (J/m^3)."""
    _check_g2(g2)
    e, b = np.asarray(sample.e), np.asarray(sample.b)
    return consts.c**4 / consts.G / (8 * g2) * (np.einsum("...iM,...iM->...", e, e) + np.einsum("...iM,...iM->...", b, b))


def poynting(sample, g2=FOUR_PI, consts=CODATA):
    """Energy flux ``c (1/4g^2)(c^4/G) sum_M e_M x b_M`` (W/m^2)."""
    _check_g2(g2)
    return consts.c * consts.c**4 / consts.G / (4 * g2) * _wedge(sample)


def _wedge(sample):
    return np.cross(np.asarray(sample.e), np.asarray(sample.b), axisa=-2, axisb=-2).sum(axis=-2)


def energy_flux(sample, normalization="printed", g2=FOUR_PI, consts=CODATA):
    """
    Energy flux (W/m^2) under a chosen normalization.

    ``"printed"`` is ``c (c^4/G) sum_M e_M x b_M``, the form whose sphere
    integral reproduces the Larmor and circular-orbit powers.
    ``"lagrangian"`` is `poynting`, which carries an extra ``1/(4g^2)``.
    """
    if normalization == "printed":
        return consts.c * consts.c**4 / consts.G * _wedge(sample)
    if normalization == "lagrangian":
        return poynting(sample, g2, consts)
    raise ValueError(f"unknown normalization {normalization!r}")


def angular_power(m, kin, n, consts=CODATA):
    """
    Power per solid angle, ``(G/c^3) m^2 c^2 |n x ((n - v) x a)|^2 / (1 - n.v)^5`` (W/sr).

    ``n`` may be a batch of unit vectors with shape (..., 3).
    """
    n = np.asarray(n, dtype=float)
    if np.any(np.abs(np.einsum("...i,...i->...", n, n) - 1) > 1e-9):
        raise ValueError("directions must be unit vectors")
    v, a = kin.v_hat, kin.a_hat
    num = np.cross(n, np.cross(n - v, a))
    kappa = 1 - n @ v
    return consts.G / consts.c**3 * m**2 * consts.c**2 * np.einsum("...i,...i->...", num, num) / kappa**5


def larmor_power(m, kin, consts=CODATA):
    """``(8 pi/3)(G/c^3) m^2 c^2 (|a|^2 - |v x a|^2) / (1 - v^2)^3`` (W)."""
    v, a = kin.v_hat, kin.a_hat
    va = np.cross(v, a)
    return 8 * np.pi / 3 * consts.G / consts.c**3 * m**2 * consts.c**2 * (a @ a - va @ va) / (1 - v @ v) ** 3


def circular_orbit_power(orbit, consts=CODATA):
    """``(8 pi/3) G m^2 (c/rho^2) v^4 / (1 - v^2)^2`` (W)."""
    v = orbit.v_hat
    return 8 * np.pi / 3 * consts.G * orbit.mass**2 * consts.c / orbit.radius**2 * v**4 / (1 - v * v) ** 2


def _frame(axis):
    w = np.asarray(axis, dtype=float)
    norm = np.linalg.norm(w)
    if norm == 0:
        return np.eye(3)
    w = w / norm
    helper = np.array([1.0, 0, 0]) if abs(w[0]) < 0.9 else np.array([0, 1.0, 0])
    e1 = np.cross(helper, w)
    e1 /= np.linalg.norm(e1)
    return np.array([e1, np.cross(w, e1), w])


def _sphere_nodes(n_theta, n_phi, frame):
    x, w = np.polynomial.legendre.leggauss(n_theta)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    s = np.sqrt(1 - x * x)
    local = np.stack([np.outer(s, np.cos(phi)), np.outer(s, np.sin(phi)), np.repeat(x[:, None], n_phi, 1)], axis=-1)
    weights = np.repeat(w[:, None], n_phi, 1) * (2 * np.pi / n_phi)
    return (local @ frame).reshape(-1, 3), weights.ravel()


def sphere_quadrature(f, n_theta=64, n_phi=128, rtol=1e-8, max_doublings=6, axis=None):
    """
    Integrate ``f(n)`` over the unit sphere.

    Gauss-Legendre in cos(theta) times a uniform periodic rule in phi, with the
    pole along ``axis``. Both orders are doubled until successive estimates agree
    to ``rtol``.

    Returns
    -------
    value : float
    n_theta : int
        Gauss-Legendre order of the accepted estimate.
    relative_change : float
    """
    frame = _frame(np.zeros(3) if axis is None else axis)
    nodes, w = _sphere_nodes(n_theta, n_phi, frame)
    prev = float(w @ f(nodes))
    change = np.inf
    for _ in range(max_doublings):
        n_theta, n_phi = 2 * n_theta, 2 * n_phi
        nodes, w = _sphere_nodes(n_theta, n_phi, frame)
        val = float(w @ f(nodes))
        change = abs(val - prev) / abs(val) if val != 0 else abs(val - prev)
        prev = val
        if change <= rtol:
            break
    return prev, n_theta, change


def flux_sphere_integral(K, traj, t, R, g2over4pi=1.0, consts=CODATA, order=64,
                         normalization="printed", center=None, rtol=1e-8):
    """
    Energy flux through the sphere of radius ``R`` at coordinate time ``t``.

    The sphere is centred on ``center``; the default is the trajectory's
    ``center`` attribute when present (orbit centre, rest position) and the
    source position at ``t`` otherwise.

    Returns
    -------
    power : float
        Outward power (W).
    order : int
        Gauss-Legendre order of the accepted estimate.
    relative_change : float

    Raises
    ------
    OnWorldline
        If the worldline crosses the sphere at the retarded time of a node.
    """
    K = np.asarray(K, dtype=float)
    if center is None:
        center = getattr(traj, "center", None)
    centre = traj.position(t) if center is None else np.asarray(center, dtype=float)

    def radial_flux(n):
        pts = np.concatenate([np.full((n.shape[0], 1), consts.c * t), centre + R * n], axis=1)
        geo = retarded_time(traj, pts, consts)
        if np.any(np.linalg.norm(pts[:, 1:] - geo.r_vec - centre, axis=1) >= R):
            raise OnWorldline("the source worldline crosses the integration sphere")
        sample = field_components(K, traj, pts, g2over4pi, consts)
        flux = energy_flux(sample, normalization, FOUR_PI * g2over4pi, consts)
        return R**2 * np.einsum("ni,ni->n", flux, n)

    return sphere_quadrature(radial_flux, order, 2 * order, rtol)


def gr_quadrupole_power(m1, m2, rho, consts=CODATA):
    """Circular-binary quadrupole comparator ``(32/5) G^4 (m1 m2)^2 (m1 + m2) / (c^5 rho^5)`` (W)."""
    return 32 / 5 * consts.G**4 * (m1 * m2) ** 2 * (m1 + m2) / (consts.c**5 * rho**5)


def binary_power(m1, m2, rho, consts=CODATA):
    """
    Dipole power of a circular binary as the sum of the one-body formula for
    each component, orbiting the barycentre at ``rho m_j / M`` with Kepler speed.
    """
    M = m1 + m2
    omega = np.sqrt(consts.G * M / rho**3)
    total = 0.0
    for mi, mj in ((m1, m2), (m2, m1)):
        ri = rho * mj / M
        total += circular_orbit_power(OrbitConfig(mi, ri, omega * ri / consts.c), consts)
    return total


@dataclass(frozen=True)
class DecaySeries:
    """Separation (m), orbital energy (J) and radiated power (W) against time (s)."""

    t: np.ndarray
    rho: np.ndarray
    E: np.ndarray
    P: np.ndarray
    convention: str = ""

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            if self.convention:
                fh.write(f"# {self.convention}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "rho", "E", "P"])
            for row in zip(self.t, self.rho, self.E, self.P):
                w.writerow([repr(float(v)) for v in row])


DECAY_CONVENTION = ("E = -G m1 m2 / (2 rho); P = sum of one-body circular powers of both components "
                    "about the barycentre; drho/dt = -2 P rho^2 / (G m1 m2); Heun stepper")


def binary_decay(orbit, companion_mass, duration, dt, consts=CODATA, power_fn=None, contact_radius=0.0):
    """
    Adiabatic inspiral of a circular binary driven by radiated power.

    Parameters
    ----------
    orbit : OrbitConfig
        ``mass`` is the first component and ``radius`` the initial separation.
        Orbital speeds are recomputed from Kepler's law at every separation.
    companion_mass : float
    duration, dt : float
        Total time and step (s); the last step is shortened to land on ``duration``.
    power_fn : callable, optional
        ``P(rho)`` override; defaults to `binary_power`.
    contact_radius : float, optional
        Separation (m) at which the evolution stops with `OrbitContact`.
    """
    if not dt > 0 or not duration >= 0:
        raise ValueError("dt must be positive and duration non-negative")
    m1, m2 = orbit.mass, float(companion_mass)
    if not m2 > 0:
        raise ValueError("companion mass must be positive")
    mu = consts.G * m1 * m2
    P = power_fn if power_fn is not None else (lambda r: binary_power(m1, m2, r, consts))

    def rate(r):
        if not r > contact_radius:
            raise OrbitContact(f"separation {r!r} m reached the contact threshold")
        return -2 * P(r) * r * r / mu

    n = int(np.ceil(duration / dt - 1e-12))
    ts, rs = [0.0], [float(orbit.radius)]
    r, t = rs[0], 0.0
    for k in range(n):
        h = min(dt, duration - t)
        k1 = rate(r)
        k2 = rate(r + h * k1)
        r = r + 0.5 * h * (k1 + k2)
        t = duration if k == n - 1 else t + h
        if not r > contact_radius:
            raise OrbitContact(f"separation {r!r} m reached the contact threshold")
        ts.append(t)
        rs.append(r)
    rho = np.array(rs)
    return DecaySeries(np.array(ts), rho, -mu / (2 * rho), np.array([P(x) for x in rho]), DECAY_CONVENTION)


def radiation_report(power_W, method, quadrature_order=None, R_m=None, relative_change=None, gr_comparator=None):
    """Report dictionary with the documented radiation fields."""
    out = {"power_W": float(power_W), "method": method,
           "quadrature_order": None if quadrature_order is None else int(quadrature_order),
           "R_m": None if R_m is None else float(R_m),
           "relative_change": None if relative_change is None else float(relative_change)}
    if gr_comparator is not None:
        out["gr_quadrupole_W"] = float(gr_comparator)
    return out
