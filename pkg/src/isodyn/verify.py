"""
Runtime invariant suite behind the ``verify`` subcommand.

Each check draws from a seeded generator and returns a `CheckResult`; the
suite is deterministic for a fixed seed.
"""
import itertools
from dataclasses import dataclass

import numpy as np

from . import taylor_gauge as tg
from .core import CODATA, PhysicalConstants, ChargedParticle
from .dynamics import (
    ParticleState, coordinate_acceleration, integrate_motion, interaction_energy, kepler_period,
    mass_spectrum, newton_accel, orbit_period,
)
from .geometry import line_element, static_clock_factor
from .radiation import (
    KinematicState, OrbitConfig, angular_power, circular_orbit_power, larmor_power, sphere_quadrature,
)
from .retarded_field import (
    CircularTrajectory, PointSourceField, StaticTrajectory, UniformTrajectory, check_lorentz_gauge,
    check_wave_equation, field_components, finite_difference_fields, lw_potential, retarded_time,
)

__all__ = ["CheckResult", "run_suite", "CHECKS"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float

    def as_dict(self):
        return {"name": self.name, "passed": bool(self.passed), "value": float(self.value),
                "tolerance": float(self.tolerance)}


def _result(name, value, tol):
    return CheckResult(name, bool(value <= tol), float(value), tol)


def _random_source(rng, c):
    kind = rng.integers(3)
    if kind == 0:
        return StaticTrajectory(rng.normal(size=3) * 1e6)
    if kind == 1:
        v = rng.normal(size=3)
        return UniformTrajectory(rng.normal(size=3) * 1e6, v / np.linalg.norm(v) * rng.uniform(0, 0.5) * c)
    rho = rng.uniform(1e5, 1e7)
    return CircularTrajectory(rng.normal(size=3) * 1e5, rho, rng.uniform(0.05, 0.6) * c / rho,
                              rng.uniform(0, 6), rng.normal(size=3))


def _field_point(rng, c):
    d = rng.normal(size=3)
    return np.concatenate([[c * rng.uniform(-2, 2)], d / np.linalg.norm(d) * rng.uniform(3e7, 3e8)])


def check_light_cone(rng, trials, consts=CODATA):
    c, worst = consts.c, 0.0
    for _ in range(trials):
        traj, x = _random_source(rng, c), _field_point(rng, c)
        g = retarded_time(traj, x, consts)
        t = x[0] / c
        worst = max(worst, abs((t - g.t_ret) - g.r / c) / (g.r / c + abs(t)), 0.0 if g.t_ret < t else np.inf)
    return _result("retarded_time.light_cone", worst, 1e-12)


def check_static_reduction(rng, trials, consts=CODATA):
    worst = 0.0
    for _ in range(trials):
        y = rng.normal(size=3) * 1e3
        x = np.concatenate([[0.0], y + rng.normal(size=3) * 1e5])
        K = rng.normal(size=int(rng.integers(1, 9))) * consts.c
        s = field_components(K, StaticTrajectory(y), x, 1.0, consts)
        r = x[1:] - y
        expect = -consts.G / consts.c**3 * np.outer(r / np.linalg.norm(r) ** 3, K)
        err = np.abs(s.e - expect).max() / np.abs(expect).max()
        worst = max(worst, err, 0.0 if np.all(s.b == 0) else np.inf)
    return _result("retarded_field.static_reduction", worst, 1e-14)


def check_fd_fields(rng, trials, consts=CODATA):
    worst = 0.0
    for _ in range(trials):
        traj, x = _random_source(rng, consts.c), _field_point(rng, consts.c)
        K = rng.normal(size=int(rng.integers(1, 9)))
        s, fd = field_components(K, traj, x, 1.0, consts), finite_difference_fields(K, traj, x, 1.0, consts)
        scale = max(np.abs(s.e).max(), np.abs(s.b).max())
        worst = max(worst, np.abs(s.e - fd.e).max() / scale, np.abs(s.b - fd.b).max() / scale)
    return _result("retarded_field.finite_difference", worst, 1e-6)


def check_gauge_and_wave(rng, trials, consts=CODATA):
    worst = 0.0
    for _ in range(trials):
        traj, x = _random_source(rng, consts.c), _field_point(rng, consts.c)
        K = rng.normal(size=3)
        worst = max(worst, check_lorentz_gauge(K, traj, x, 1.0, consts), check_wave_equation(K, traj, x, 1.0, consts))
    return _result("retarded_field.gauge_and_wave_residual", worst, 1e-5)


def _jet_variation(a, da, eps, deps, ddeps):
    # delta a(x) is cubic in x: Richardson-combined central differences at h = 1, 2 are exact
    def at(x):
        ax = tg.GaugeCoefficients(*(c + np.einsum("r,r...->...", x, d) for c, d in zip(a.as_tuple(), da.as_tuple())))
        ex = tg.GaugeParameterCoefficients(
            *(c + np.einsum("r,r...->...", x, d) + 0.5 * np.einsum("r,s,rs...->...", x, x, dd)
              for c, d, dd in zip(eps.as_tuple(), deps.as_tuple(), ddeps)))
        dex = tg.ParameterDerivatives(*(d + np.einsum("s,rs...->r...", x, dd) for d, dd in zip(deps.as_tuple(), ddeps)))
        return tg.gauge_vary_gauge(ax, ex, dex)

    delta = at(np.zeros(4))
    rows = []
    for rho in range(4):
        h = np.zeros(4)
        h[rho] = 1.0
        d1 = [0.5 * (p - m) for p, m in zip(at(h).as_tuple(), at(-h).as_tuple())]
        d2 = [0.25 * (p - m) for p, m in zip(at(2 * h).as_tuple(), at(-2 * h).as_tuple())]
        rows.append([(4 * p - q) / 3 for p, q in zip(d1, d2)])
    return delta, tg.GaugeDerivatives(*(np.stack([r[k] for r in rows]) for k in range(3)))


def check_gauge_algebra(rng, trials):
    """Field-strength rule against the directional variation on the exact-truncation subspace."""
    worst = 0.0
    for _ in range(trials):
        D = int(rng.integers(1, 6))
        a = tg.random_gauge(rng, D, a2_support=())
        da = tg.random_gauge_derivatives(rng, D, a2_support=())
        eps = tg.random_parameter(rng, D)
        deps = tg.random_parameter_derivatives(rng, D)
        sym = lambda shape: (lambda t: 0.5 * (t + np.swapaxes(t, 0, 1)))(rng.normal(size=(4, 4) + shape))
        dd1, dd2 = tg.project_divergence_free(sym((D, D)), sym((D, D, D)))
        delta, ddelta = _jet_variation(a, da, eps, deps, (sym((D,)), dd1, dd2))
        shift = lambda s: tg.field_strength_from_gauge(
            tg.GaugeCoefficients(*(x + s * y for x, y in zip(a.as_tuple(), delta.as_tuple()))),
            tg.GaugeDerivatives(*(x + s * y for x, y in zip(da.as_tuple(), ddelta.as_tuple()))))
        plus, minus = shift(1.0).as_tuple(), shift(-1.0).as_tuple()
        scale = max(np.abs(p).max() for p in plus + minus)
        hom = tg.gauge_vary_field_strength(tg.field_strength_from_gauge(a, da), eps).as_tuple()
        for p, m, h in zip(plus, minus, hom):
            worst = max(worst, np.abs(0.5 * (p - m) - h).max() / max(np.abs(h).max(), 1e-3 * scale))
        res = tg.divergence_residual(*tg.gauge_vary_gauge(a, eps, deps).as_tuple()[1:])
        worst = max(worst, res)
    return _result("taylor_gauge.variation_consistency", worst, 1e-12)


def check_lagrangian(rng, trials):
    """Effective Lagrangian against a Gauss-Legendre cube integral of the truncated density."""
    consts = PhysicalConstants(1.0, 1.0, 1.0)
    x, w = np.polynomial.legendre.leggauss(2)
    eta = np.outer([-1.0, 1, 1, 1], [-1.0, 1, 1, 1])
    worst = 0.0
    for _ in range(trials):
        D = int(rng.integers(1, 5))
        f = tg.field_strength_from_gauge(tg.random_gauge(rng, D), tg.random_gauge_derivatives(rng, D))
        L = consts.l_P
        total = 0.0
        for idx in itertools.product(range(2), repeat=D):
            X = x[list(idx)] * L / 2
            f1X = np.einsum("mnMr,r->mnM", f.f1, X)
            f2XX = np.einsum("mnMrs,r,s->mnM", f.f2, X, X)
            dens = (np.einsum("mn,mnM,mnM->", eta, f.f0, f.f0) + 2 * np.einsum("mn,mnM,mnM->", eta, f.f0, f1X)
                    + np.einsum("mn,mnM,mnM->", eta, f1X, f1X) + 2 * np.einsum("mn,mnM,mnM->", eta, f.f0, f2XX))
            total += np.prod(w[list(idx)]) * (L / 2) ** D * dens
        quad = -total / L**D / 4
        val = tg.effective_lagrangian(f, consts, 1.0)
        worst = max(worst, abs(val - quad) / max(abs(quad), 1e-300))
    return _result("taylor_gauge.effective_lagrangian", worst, 1e-10)


def check_larmor_closure(rng, trials, consts=CODATA):
    worst = 0.0
    for _ in range(trials):
        v = rng.normal(size=3)
        v *= rng.uniform(0, 0.5) / np.linalg.norm(v)
        kin = KinematicState(v, rng.normal(size=3))
        val, _, _ = sphere_quadrature(lambda n: angular_power(1.0, kin, n, consts), axis=v)
        worst = max(worst, abs(val / larmor_power(1.0, kin, consts) - 1))
    return _result("radiation.larmor_closure", worst, 1e-6)


def check_circular_power(rng, trials, consts=CODATA):
    worst = 0.0
    for _ in range(trials):
        v, rho, m = rng.uniform(1e-6, 0.9), 10 ** rng.uniform(0, 12), 10 ** rng.uniform(0, 30)
        kin = KinematicState(np.array([v, 0, 0]), np.array([0, v * v * consts.c / rho, 0]))
        worst = max(worst, abs(circular_orbit_power(OrbitConfig(m, rho, v), consts) / larmor_power(m, kin, consts) - 1))
    return _result("radiation.circular_matches_larmor", worst, 1e-12)


def check_newton_limit(rng, trials, consts=CODATA):
    M = 5.972e24
    src = ChargedParticle.locked(M, [1.0, 0, 0], consts=consts)
    test = ChargedParticle.locked(1.0, [-1.0, 0, 0], consts=consts)
    field = PointSourceField([(src.charge, StaticTrajectory())], 1.0, consts)
    worst = 0.0
    for _ in range(trials):
        pos = rng.normal(size=3) * 1e7
        v = rng.normal(size=3)
        v *= rng.uniform(0, 1e-4) * consts.c / np.linalg.norm(v)
        s = ParticleState.from_velocity(pos, v, consts=consts)
        acc = coordinate_acceleration(field(s.position), test.charge_over_mass, s.four_velocity, consts)
        ref = newton_accel(M, pos, -1.0, 1.0, consts)
        worst = max(worst, np.linalg.norm(acc - ref) / np.linalg.norm(ref))
    return _result("dynamics.newton_limit", worst, 1e-6)


def _kepler_run(test_mass, n_per_orbit, fraction, consts):
    M, r = 5.972e24, 7.0e6
    src = ChargedParticle.locked(M, [1.0, 0], consts=consts)
    test = ChargedParticle.locked(test_mass, [-1.0, 0], consts=consts)
    field = PointSourceField([(src.charge, StaticTrajectory())], 1.0, consts)
    s = ParticleState.from_velocity([r, 0, 0], [0, np.sqrt(consts.G * M / r), 0], consts=consts)
    T = kepler_period(r, M, consts)
    return integrate_motion(s, test, field, T / n_per_orbit, int(n_per_orbit * fraction)), T, r


def check_kepler_period(consts=CODATA):
    h, T, _ = _kepler_run(1.0, 2000, 1.05, consts)
    return _result("dynamics.kepler_period", abs(orbit_period(h) / T - 1), 1e-6)


def check_weak_equivalence(consts=CODATA):
    ref, _, r = _kepler_run(1.0, 500, 0.2, consts)
    worst = 0.0
    for m in (1e-3, 1e3):
        h, _, _ = _kepler_run(m, 500, 0.2, consts)
        worst = max(worst, np.abs(h.position[:, 1:] - ref.position[:, 1:]).max() / r)
    return _result("dynamics.weak_equivalence", worst, 1e-12)


def check_energy_argmin(rng, trials, consts=CODATA):
    bad = 0
    cs = np.linspace(-1, 1, 401)
    for _ in range(trials):
        mk, mq, r = 10 ** rng.uniform(-3, 30, size=3)
        e = [interaction_energy(mk, mq, r, x, 1.0, consts) for x in cs]
        bad += cs[int(np.argmin(e))] != -1.0
    return _result("dynamics.energy_minimum_anti_parallel", float(bad), 0.0)


def check_spectrum(consts=CODATA):
    bad = 0
    for D, n in ((1, 4), (2, 3), (4, 2), (8, 1)):
        levels = mass_spectrum(D, n, consts)
        bad += sum(e.multiplicity for e in levels) != (n + 1) ** D - 1
        bad += any(abs(e.mass / (np.pi * consts.m_P * np.sqrt(e.n_squared)) - 1) > 1e-15 for e in levels)
    return _result("dynamics.mass_spectrum", float(bad), 0.0)


def check_clock(consts=CODATA):
    M, worst = 1.989e30, 0.0
    src = ChargedParticle.locked(M, [1.0, 0, 0], consts=consts)
    clock = ChargedParticle.locked(1.0, [-1.0, 0, 0], consts=consts)
    for r in (1.496e11, 6.96e8, 1e5):
        s = ParticleState.from_velocity([r, 0, 0], [0, 0, 0], consts=consts)
        a = lw_potential(src.charge, StaticTrajectory(), s.position, 1.0, consts)
        ds2 = line_element(s, a, clock.charge_over_mass, 1.0, consts).ds2
        worst = max(worst, abs(ds2 / consts.c**2 / static_clock_factor(M, r, consts) ** 2 - 1))
    return _result("geometry.static_clock", worst, 1e-15)


CHECKS = (
    "retarded_time.light_cone", "retarded_field.static_reduction", "retarded_field.finite_difference",
    "retarded_field.gauge_and_wave_residual", "taylor_gauge.variation_consistency",
    "taylor_gauge.effective_lagrangian", "radiation.larmor_closure", "radiation.circular_matches_larmor",
    "dynamics.newton_limit", "dynamics.kepler_period", "dynamics.weak_equivalence",
    "dynamics.energy_minimum_anti_parallel", "dynamics.mass_spectrum", "geometry.static_clock",
)


def run_suite(seed=0, trials=20, consts=CODATA):
    """Run every check; ``trials`` sets the number of random draws per randomized check."""
    rng = np.random.default_rng(seed)
    return [
        check_light_cone(rng, 5 * trials, consts),
        check_static_reduction(rng, trials, consts),
        check_fd_fields(rng, trials, consts),
        check_gauge_and_wave(rng, max(3, trials // 4), consts),
        check_gauge_algebra(rng, max(100, trials)),
        check_lagrangian(rng, trials),
        check_larmor_closure(rng, trials, consts),
        check_circular_power(rng, 5 * trials, consts),
        check_newton_limit(rng, trials, consts),
        check_kepler_period(consts),
        check_weak_equivalence(consts),
        check_energy_argmin(rng, trials, consts),
        check_spectrum(consts),
        check_clock(consts),
    ]
