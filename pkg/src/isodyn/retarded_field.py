"""
Retarded potentials and translation-mode fields of moving point sources.

Field points are four-vectors ``(c t, x, y, z)``; arrays of shape ``(4,)`` or
``(N, 4)`` are accepted everywhere and outputs keep the leading shape.
Potentials are the contravariant components ``a^mu_M`` (dimensionless);
field components follow ``e^i_M = F^{i0}_M`` and ``b^i_M = -1/2 eps^{ijk} F_{jk M}``.
"""
import csv
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .core import CODATA, ETA, IsodynError

__all__ = [
    "RetardedTimeError", "DomainExceeded", "OnWorldline", "NoConvergence",
    "SuperluminalGeometry", "Trajectory", "StaticTrajectory", "UniformTrajectory",
    "CircularTrajectory", "TabulatedTrajectory", "RetardedGeometry", "FieldSample",
    "retarded_time", "lw_potential", "field_components", "field_tensor",
    "fields_from_tensor", "finite_difference_fields", "check_lorentz_gauge",
    "check_wave_equation", "PointSourceField", "write_field_map_csv",
    "WORLDLINE_CUTOFF",
]

WORLDLINE_CUTOFF = 1e-9
MAX_ITERATIONS = 200
LAG_RTOL = 1e-13

_LEVI_CIVITA = np.zeros((3, 3, 3))
for _i, _j, _k in [(0, 1, 2), (1, 2, 0), (2, 0, 1)]:
    _LEVI_CIVITA[_i, _j, _k] = 1.0
    _LEVI_CIVITA[_i, _k, _j] = -1.0


class RetardedTimeError(IsodynError):
    pass


class DomainExceeded(RetardedTimeError):
    """The retarded point lies outside the trajectory's time domain."""


class OnWorldline(RetardedTimeError):
    """The field point sits on (or within the cutoff of) the source worldline."""


class NoConvergence(RetardedTimeError):
    pass


class SuperluminalGeometry(IsodynError):
    """The retarded denominator r - r.v vanishes to working precision."""


class Trajectory:
    """
    Source worldline parametrized by coordinate time.

    Subclasses provide vectorized ``position``, ``velocity`` and
    ``acceleration`` (SI), the time ``domain``, an upper bound ``vmax`` on the
    speed and a characteristic ``time_scale`` used to size difference stencils.
    """

    kind = "abstract"
    domain = (-np.inf, np.inf)
    vmax = 0.0
    time_scale = np.inf

    def position(self, t):
        raise NotImplementedError

    def velocity(self, t):
        raise NotImplementedError

    def acceleration(self, t):
        raise NotImplementedError

    def _check_subluminal(self, consts):
        if not self.vmax < consts.c:
            raise ValueError(f"{self.kind} trajectory is not subluminal (|v| = {self.vmax!r} m/s)")


def _vec3(v, name):
    v = np.array(v, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector, got shape {v.shape}")
    v.setflags(write=False)
    return v


def _broadcast(t, v):
    t = np.asarray(t, dtype=float)
    return np.broadcast_to(v, t.shape + (3,)).copy()


class StaticTrajectory(Trajectory):
    kind = "static"

    def __init__(self, position=(0.0, 0.0, 0.0), domain=(-np.inf, np.inf)):
        self.center = _vec3(position, "position")
        self.domain = tuple(map(float, domain))

    def position(self, t):
        return _broadcast(t, self.center)

    def velocity(self, t):
        return _broadcast(t, np.zeros(3))

    acceleration = velocity


class UniformTrajectory(Trajectory):
    kind = "uniform"

    def __init__(self, position, velocity, t0=0.0, domain=(-np.inf, np.inf), consts=CODATA):
        self.start = _vec3(position, "position")
        self.v = _vec3(velocity, "velocity")
        self.t0 = float(t0)
        self.domain = tuple(map(float, domain))
        self.vmax = float(np.linalg.norm(self.v))
        self._check_subluminal(consts)

    def position(self, t):
        t = np.asarray(t, dtype=float)
        return self.start + (t - self.t0)[..., None] * self.v

    def velocity(self, t):
        return _broadcast(t, self.v)

    def acceleration(self, t):
        return _broadcast(t, np.zeros(3))


class CircularTrajectory(Trajectory):
    """Uniform circular motion of radius ``radius`` in the plane normal to ``normal``."""

    kind = "circular"

    def __init__(self, center, radius, omega, phase=0.0, normal=(0.0, 0.0, 1.0),
                 domain=(-np.inf, np.inf), consts=CODATA):
        if not radius > 0:
            raise ValueError("radius must be positive")
        if omega == 0:
            raise ValueError("omega must be non-zero")
        self.center = _vec3(center, "center")
        self.radius = float(radius)
        self.omega = float(omega)
        self.phase = float(phase)
        n = _vec3(normal, "normal")
        n = n / np.linalg.norm(n)
        helper = np.array([1.0, 0, 0]) if abs(n[0]) < 0.9 else np.array([0, 1.0, 0])
        e1 = np.cross(helper, n)
        e1 /= np.linalg.norm(e1)
        self.basis = np.array([e1, np.cross(n, e1)])
        self.normal = n
        self.domain = tuple(map(float, domain))
        self.vmax = self.radius * abs(self.omega)
        self.time_scale = 1.0 / abs(self.omega)
        self._check_subluminal(consts)

    def _angle(self, t):
        return self.omega * np.asarray(t, dtype=float) + self.phase

    def position(self, t):
        ph = self._angle(t)
        return self.center + self.radius * (np.cos(ph)[..., None] * self.basis[0] + np.sin(ph)[..., None] * self.basis[1])

    def velocity(self, t):
        ph = self._angle(t)
        s = self.radius * self.omega
        return s * (-np.sin(ph)[..., None] * self.basis[0] + np.cos(ph)[..., None] * self.basis[1])

    def acceleration(self, t):
        ph = self._angle(t)
        s = -self.radius * self.omega**2
        return s * (np.cos(ph)[..., None] * self.basis[0] + np.sin(ph)[..., None] * self.basis[1])


class TabulatedTrajectory(Trajectory):
    """
    Worldline through sampled ``(t, position, velocity)`` rows.

    Positions are interpolated by the cubic Hermite spline through the stored
    velocities; acceleration is the spline's second derivative.
    """

    kind = "tabulated"

    def __init__(self, times, positions, velocities, consts=CODATA):
        times = np.asarray(times, dtype=float)
        positions = np.asarray(positions, dtype=float)
        velocities = np.asarray(velocities, dtype=float)
        if times.ndim != 1 or times.size < 2:
            raise ValueError("need at least two time stamps")
        if positions.shape != (times.size, 3) or velocities.shape != (times.size, 3):
            raise ValueError("positions and velocities must have shape (len(times), 3)")
        if np.any(np.diff(times) <= 0):
            raise ValueError("time stamps must be strictly increasing")
        self.times = times
        self._spline = CubicHermiteSpline(times, positions, velocities, axis=0)
        self._dspline = self._spline.derivative()
        self._ddspline = self._spline.derivative(2)
        self.domain = (float(times[0]), float(times[-1]))
        fine = np.linspace(0.0, 1.0, 9)[:-1]
        probe = np.append((times[:-1, None] + np.diff(times)[:, None] * fine).ravel(), times[-1])
        self.vmax = float(np.max(np.linalg.norm(self._dspline(probe), axis=-1)))
        self.time_scale = float(np.min(np.diff(times)))
        self._check_subluminal(consts)

    def position(self, t):
        return self._spline(np.asarray(t, dtype=float))

    def velocity(self, t):
        return self._dspline(np.asarray(t, dtype=float))

    def acceleration(self, t):
        return self._ddspline(np.asarray(t, dtype=float))


@dataclass(frozen=True)
class RetardedGeometry:
    """Retarded time (s), separation r_vec = x - y(t_ret) (m), v/c and (dv/dt)/c (1/s)."""

    t_ret: np.ndarray
    r_vec: np.ndarray
    r: np.ndarray
    v_hat: np.ndarray
    a_hat: np.ndarray


@dataclass(frozen=True)
class FieldSample:
    """Field components ``e[..., i, M]``, ``b[..., i, M]`` at ``position``."""

    e: np.ndarray
    b: np.ndarray
    position: np.ndarray


def _split(x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 4:
        raise ValueError(f"field points must be four-vectors, got shape {x.shape}")
    return x


def _solve_lag(traj, t, xs, c):
    """Vectorized root of c*lam = |x - y(t - lam)| for lam >= 0."""
    t_min, t_max = traj.domain
    v = traj.vmax

    def g(lam):
        return c * lam - np.linalg.norm(xs - traj.position(t - lam), axis=-1)

    lam_lo = np.maximum(0.0, t - t_max) if np.isfinite(t_max) else np.zeros_like(t)
    g_lo = g(lam_lo)
    if np.any((g_lo > 0) & (lam_lo > 0)):
        raise DomainExceeded("retarded time lies after the end of the trajectory domain")
    delta = -g_lo
    lo = lam_lo + delta / (c + v)
    hi = lam_lo + delta / (c - v)
    lam_max = t - t_min
    over = hi > lam_max
    if np.any(over):
        if np.any(g(lam_max[over]) < 0):
            raise DomainExceeded("retarded time lies before the start of the trajectory domain")
        hi = np.where(over, lam_max, hi)
    # pad for rounding in g and guard against an optimistic speed bound
    pad = 1e-12 * hi + 1e-300
    lo = np.maximum(lam_lo, lo - pad)
    hi = np.minimum(lam_max, hi + pad)
    for _ in range(60):
        short = g(hi) < 0
        if not np.any(short):
            break
        hi = np.where(short, hi + 2 * (hi - lo), hi)
        if np.any(hi > lam_max):
            raise DomainExceeded("retarded time lies before the start of the trajectory domain")
    else:
        raise NoConvergence("could not bracket the retarded time")
    lo = np.where(g(lo) > 0, lam_lo, lo)
    lam = 0.5 * (lo + hi)
    done = np.zeros(lam.shape, dtype=bool)
    for _ in range(MAX_ITERATIONS):
        tau = t - lam
        sep = xs - traj.position(tau)
        dist = np.linalg.norm(sep, axis=-1)
        gval = c * lam - dist
        with np.errstate(invalid="ignore", divide="ignore"):
            slope = c - np.einsum("...i,...i->...", sep, traj.velocity(tau)) / dist
        lo = np.where(gval < 0, lam, lo)
        hi = np.where(gval > 0, lam, hi)
        step = np.where(dist > 0, gval / slope, 0.0)
        trial = lam - step
        bad = ~((trial > lo) & (trial < hi)) & (step != 0)
        trial = np.where(bad, 0.5 * (lo + hi), trial)
        moved = np.abs(trial - lam)
        converged = (moved <= LAG_RTOL * np.abs(lam)) | (gval == 0) | (hi - lo <= LAG_RTOL * np.abs(lam))
        lam = np.where(done, lam, trial)
        done |= converged
        if np.all(done):
            return lam
    raise NoConvergence(f"retarded-time iteration did not converge in {MAX_ITERATIONS} steps")


def retarded_time(traj, x, consts=CODATA):
    """
    Solve ``c (t - t_ret) = |x - y(t_ret)|`` with ``t_ret < t``.

    Raises
    ------
    DomainExceeded, OnWorldline, NoConvergence
    """
    x = _split(x)
    c = consts.c
    t = x[..., 0] / c
    xs = x[..., 1:]
    lam = _solve_lag(traj, np.atleast_1d(t), np.atleast_2d(xs), c).reshape(t.shape)
    t_ret = t - lam
    r_vec = xs - traj.position(t_ret)
    r = np.linalg.norm(r_vec, axis=-1)
    if np.any(r < WORLDLINE_CUTOFF):
        raise OnWorldline(f"field point within {WORLDLINE_CUTOFF} m of the worldline")
    return RetardedGeometry(t_ret, r_vec, r, traj.velocity(t_ret) / c, traj.acceleration(t_ret) / c)


def _prefactor(g2over4pi, consts):
    return g2over4pi * consts.G / consts.c**3


def _denominator(geo):
    den = geo.r - np.einsum("...i,...i->...", geo.r_vec, geo.v_hat)
    if np.any(den < 1e-15 * geo.r):
        raise SuperluminalGeometry("retarded denominator r - r.v vanishes")
    return den


def lw_potential(K, traj, x, g2over4pi=1.0, consts=CODATA):
    """
    Retarded potentials of a point source with inner charge ``K``.

    Returns
    -------
    a0 : (..., D) array
        ``(g^2/4pi)(G/c^3) K_M / (r - r.v)``.
    a_spatial : (..., 3, D) array
        ``a0 * v`` with v the source velocity over c at the retarded time.
    """
    K = np.asarray(K, dtype=float)
    geo = retarded_time(traj, x, consts)
    scal = _prefactor(g2over4pi, consts) / _denominator(geo)
    a0 = scal[..., None] * K
    return a0, geo.v_hat[..., :, None] * a0[..., None, :]


def field_components(K, traj, x, g2over4pi=1.0, consts=CODATA):
    """
    Isometro-electric and -magnetic components of a moving point source.

    ``e_M = -k K_M [(r - r v)(1 - v^2) + r x ((r - r v) x a/c)] / (r - r.v)^3``,
    ``b_M = r_hat x e_M``, with ``k = (g^2/4pi) G/c^3``, v and a the retarded
    velocity and acceleration over c.
    """
    x = _split(x)
    K = np.asarray(K, dtype=float)
    geo = retarded_time(traj, x, consts)
    den = _denominator(geo)
    r = geo.r[..., None]
    u = geo.r_vec - r * geo.v_hat
    v2 = np.einsum("...i,...i->...", geo.v_hat, geo.v_hat)[..., None]
    accel = np.cross(geo.r_vec, np.cross(u, geo.a_hat / consts.c))
    k = -_prefactor(g2over4pi, consts) / den[..., None] ** 3
    vec = k * (u * (1 - v2) + accel)
    # r_hat x u = -(r_vec x v) keeps b exactly zero for a resting source
    b_vec = k * (-np.cross(geo.r_vec, geo.v_hat) * (1 - v2) + np.cross(geo.r_vec / r, accel))
    return FieldSample(vec[..., :, None] * K, b_vec[..., :, None] * K, x)


def field_tensor(sample):
    """Contravariant ``F^{mu nu}_M`` (shape ``(..., 4, 4, D)``) built from (e, b)."""
    e, b = np.asarray(sample.e), np.asarray(sample.b)
    F = np.zeros(e.shape[:-2] + (4, 4, e.shape[-1]))
    F[..., 1:, 0, :] = e
    F[..., 0, 1:, :] = -e
    F[..., 1:, 1:, :] = -np.einsum("ijk,...iM->...jkM", _LEVI_CIVITA, b)
    return F


def fields_from_tensor(F, position=None):
    """Inverse of `field_tensor`: ``e^i = F^{i0}``, ``b^i = -1/2 eps^{ijk} F^{jk}``."""
    F = np.asarray(F, dtype=float)
    e = F[..., 1:, 0, :].copy()
    b = -0.5 * np.einsum("ijk,...jkM->...iM", _LEVI_CIVITA, F[..., 1:, 1:, :])
    return FieldSample(e, b, position)


def _step(traj, x, consts, step_frac):
    geo = retarded_time(traj, x, consts)
    return step_frac * min(float(geo.r), consts.c * traj.time_scale)


def _potential_stack(K, traj, points, g2over4pi, consts):
    a0, a = lw_potential(K, traj, points, g2over4pi, consts)
    return np.concatenate([a0[..., None, :], a], axis=-2)        # (..., 4, D): a^nu_M


def _jacobian(K, traj, x, g2over4pi, consts, step_frac):
    """J[mu, nu, M] = d_mu a^nu_M by Richardson-extrapolated central differences."""
    h = _step(traj, x, consts, step_frac)
    offs = []
    for hh in (h, h / 2):
        for mu in range(4):
            for sgn in (1.0, -1.0):
                d = np.zeros(4)
                d[mu] = sgn * hh
                offs.append(d)
    vals = _potential_stack(K, traj, x + np.array(offs), g2over4pi, consts).reshape(2, 4, 2, 4, -1)
    coarse = (vals[0, :, 0] - vals[0, :, 1]) / (2 * h)
    fine = (vals[1, :, 0] - vals[1, :, 1]) / h
    return (4 * fine - coarse) / 3


def _second_derivatives(K, traj, x, g2over4pi, consts, step_frac):
    """H[mu, nu, M] = d_mu d_mu a^nu_M (no sum) by Richardson-extrapolated differences."""
    h = _step(traj, x, consts, step_frac)
    offs = [np.zeros(4)]
    for hh in (h, h / 2):
        for mu in range(4):
            for sgn in (1.0, -1.0):
                d = np.zeros(4)
                d[mu] = sgn * hh
                offs.append(d)
    vals = _potential_stack(K, traj, x + np.array(offs), g2over4pi, consts)
    centre, rest = vals[0], vals[1:].reshape(2, 4, 2, 4, -1)
    coarse = (rest[0, :, 0] - 2 * centre + rest[0, :, 1]) / h**2
    fine = (rest[1, :, 0] - 2 * centre + rest[1, :, 1]) / (h / 2) ** 2
    return (4 * fine - coarse) / 3


def finite_difference_fields(K, traj, x, g2over4pi=1.0, consts=CODATA, step_frac=1e-2):
    """
    (e, b) at a single field point from differenced potentials:
    ``f_{mu nu} = d_mu a_nu - d_nu a_mu`` with ``a_nu = eta_{nu nu} a^nu``.
    """
    x = _split(x)
    J = _jacobian(K, traj, x, g2over4pi, consts, step_frac)
    lowered = J * np.diag(ETA)[None, :, None]
    f_low = lowered - np.swapaxes(lowered, 0, 1)
    F_up = f_low * np.outer(np.diag(ETA), np.diag(ETA))[..., None]
    return fields_from_tensor(F_up, x)


def check_lorentz_gauge(K, traj, x, g2over4pi=1.0, consts=CODATA, step_frac=1e-2):
    """max_M |d_mu a^mu_M| normalized by the largest potential gradient."""
    J = _jacobian(K, traj, _split(x), g2over4pi, consts, step_frac)
    scale = np.max(np.abs(J))
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(np.einsum("mmM->M", J))) / scale)


def check_wave_equation(K, traj, x, g2over4pi=1.0, consts=CODATA, step_frac=1e-2):
    """max |box a^nu_M| normalized by the largest second derivative entering it."""
    H = _second_derivatives(K, traj, _split(x), g2over4pi, consts, step_frac)
    scale = np.max(np.abs(H))
    if scale == 0:
        return 0.0
    box = np.einsum("m,mnM->nM", np.diag(ETA), H)
    return float(np.max(np.abs(box)) / scale)


class PointSourceField:
    """
    Superposed field of point sources ``[(K, trajectory), ...]``.

    Calling the instance with a field point returns ``F^{mu nu}_M``; it is the
    field provider consumed by `isodyn.dynamics.integrate_motion`.
    """

    def __init__(self, sources, g2over4pi=1.0, consts=CODATA):
        self.sources = [(np.asarray(K, dtype=float), traj) for K, traj in sources]
        if not self.sources:
            raise ValueError("need at least one source")
        dims = {K.size for K, _ in self.sources}
        if len(dims) != 1:
            raise ValueError("all sources must share the inner dimension")
        self.D = dims.pop()
        self.g2over4pi = g2over4pi
        self.consts = consts

    def sample(self, x):
        x = _split(x)
        e = b = 0.0
        for K, traj in self.sources:
            s = field_components(K, traj, x, self.g2over4pi, self.consts)
            e = e + s.e
            b = b + s.b
        return FieldSample(e, b, x)

    def potential(self, x):
        a0 = a = 0.0
        for K, traj in self.sources:
            p0, p = lw_potential(K, traj, x, self.g2over4pi, self.consts)
            a0 = a0 + p0
            a = a + p
        return a0, a

    def __call__(self, x):
        return field_tensor(self.sample(x))


def write_field_map_csv(path, sample, consts=CODATA):
    """Write a batched `FieldSample` as rows ``x,y,z,t,M,e1,e2,e3,b1,b2,b3``."""
    pts = np.atleast_2d(sample.position)
    e = sample.e.reshape(-1, 3, sample.e.shape[-1])
    b = sample.b.reshape(-1, 3, sample.b.shape[-1])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "z", "t", "M", "e1", "e2", "e3", "b1", "b2", "b3"])
        for p, ep, bp in zip(pts, e, b):
            for M in range(ep.shape[-1]):
                w.writerow([repr(float(p[1])), repr(float(p[2])), repr(float(p[3])), repr(float(p[0] / consts.c)), M + 1]
                           + [repr(float(v)) for v in ep[:, M]] + [repr(float(v)) for v in bp[:, M]])
