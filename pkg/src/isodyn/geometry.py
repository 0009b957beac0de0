"""
Gauge-invariant line element in flat spacetime with translation-mode potentials.

The measured interval along a worldline with tangent ``u = dy/dsigma`` is
``ds^2 = -(u.u + 2 a_mu^M (K_M/m) u^mu) dsigma^2``; no metric tensor is
introduced.
"""
from dataclasses import dataclass

import numpy as np

from .core import CODATA, ETA, minkowski_dot

__all__ = [
    "LineElementSample", "line_element", "static_clock_factor", "clock_report",
    "path_gauge_integral",
]


@dataclass(frozen=True)
class LineElementSample:
    """Signed ``ds2`` (m^2) with its flat and gauge contributions."""

    ds2: float
    dsigma: float
    flat: float
    gauge: float


def _lowered_coupling(a0, a_spatial, charge_over_mass, u):
    """a_mu^M q_M u^mu with a_mu = eta_{mu mu} a^mu."""
    a_up = np.concatenate([np.asarray(a0, dtype=float)[None, :], np.asarray(a_spatial, dtype=float)])
    q = np.asarray(charge_over_mass, dtype=float)
    if a_up.shape != (4, q.size):
        raise ValueError(f"potentials must be (D,) and (3, D) with D = {q.size}")
    return float(np.einsum("m,mM,M,m->", np.diag(ETA), a_up, q, np.asarray(u, dtype=float)))


def line_element(state, a, charge_over_mass, dsigma, consts=CODATA):
    """
    Interval for a parameter step ``dsigma`` along ``state.four_velocity``.

    Parameters
    ----------
    state : ParticleState
    a : tuple
        ``(a0, a_spatial)`` contravariant potentials, shapes (D,) and (3, D).
    charge_over_mass : array_like
        ``K / m`` of the clock (m/s for a mass-locked particle).
    dsigma : float
        Parameter step; with the four-velocity as tangent this is a proper-time step (s).
    """
    u = state.four_velocity
    flat = -float(minkowski_dot(u, u)) * dsigma**2
    gauge = -2 * _lowered_coupling(a[0], a[1], charge_over_mass, u) * dsigma**2
    return LineElementSample(flat + gauge, dsigma, flat, gauge)


def static_clock_factor(m_src, r, consts=CODATA):
    """
    Rate ``sqrt(1 - 2 G m_src / (c^2 r))`` of a clock at rest near a static source.

    Raises
    ------
    ValueError
        If ``r`` is not outside the degenerate radius ``2 G m_src / c^2``.
    """
    if not r > 0:
        raise ValueError("distance must be positive")
    arg = 1 - 2 * consts.G * m_src / (consts.c**2 * r)
    if not arg > 0:
        raise ValueError(f"r = {r!r} m lies inside the degenerate radius {2 * consts.G * m_src / consts.c**2!r} m")
    return float(np.sqrt(arg))


def clock_report(m_src, r, consts=CODATA):
    """Clock-comparison report ``{r_m, factor, deficit}`` with ``deficit = 2 G m_src / (c^2 r)``."""
    return {"r_m": float(r), "factor": static_clock_factor(m_src, r, consts),
            "deficit": float(2 * consts.G * m_src / (consts.c**2 * r))}


def path_gauge_integral(path, potential, charge_over_mass):
    """
    Interaction term ``sum_k a_mu^M(y_mid) (K_M/m) dy^mu`` along a polygonal path.

    Parameters
    ----------
    path : (N, 4) array
        Vertices ``(c t, x, y, z)``.
    potential : callable
        Maps an (N-1, 4) batch of midpoints to ``(a0, a_spatial)`` with
        shapes (N-1, D) and (N-1, 3, D).

    Notes
    -----
    Midpoint sampling integrates a pure-gradient potential of a quadratic
    gauge function exactly, so the gauge change telescopes to the endpoint
    values.
    """
    path = np.asarray(path, dtype=float)
    mid = 0.5 * (path[1:] + path[:-1])
    step = np.diff(path, axis=0)
    a0, a = potential(mid)
    a_up = np.concatenate([np.asarray(a0)[:, None, :], np.asarray(a)], axis=1)
    q = np.asarray(charge_over_mass, dtype=float)
    return float(np.einsum("m,kmM,M,km->", np.diag(ETA), a_up, q, step))
