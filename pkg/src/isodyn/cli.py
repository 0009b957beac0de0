"""
Command-line runner: ``isodyn <subcommand> --scenario FILE [--out DIR] [--seed N] [--quiet]``.

Exit codes: 0 success, 1 verification failure, 2 input error, 3 numeric failure.
"""
import argparse
import csv
import itertools
import json
import os
import sys

import numpy as np

from .core import IsodynError
from .dynamics import integrate_motion, kepler_period, mass_spectrum, orbit_period
from .radiation import (
    binary_decay, circular_orbit_power, flux_sphere_integral, gr_quadrupole_power, radiation_report,
)
from .retarded_field import CircularTrajectory, StaticTrajectory, write_field_map_csv
from .scenario import (
    ARTIFACTS, ScenarioError, ValidationError, build_constants, build_field, build_sources,
    build_test_particles, canonical_json, parse_scenario, scenario_orbit,
)
from .verify import run_suite

EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3
CANONICAL_NAME = "scenario.canonical.json"


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


class _Run:
    """Artifact bookkeeping for one subcommand invocation."""

    def __init__(self, scenario, out_dir, quiet):
        self.sc = scenario
        self.out = out_dir
        self.quiet = quiet
        self.consts = build_constants(scenario)
        self.written = []

    def wants(self, name):
        return not self.sc.outputs or name in self.sc.outputs

    def path(self, name):
        p = os.path.join(self.out, name)
        self.written.append(p)
        return p

    def say(self, msg):
        if not self.quiet:
            print(msg)


def _simulate(run):
    sc, consts = run.sc, run.consts
    sources = build_sources(sc, consts)
    field = build_field(sc, sources, consts)
    tests = build_test_particles(sc, sources, consts)
    if not tests:
        raise ScenarioError("simulate needs at least one test particle")
    summary = []
    for i, (particle, state) in enumerate(tests):
        h = integrate_motion(state, particle, field, sc.run.dtau, sc.run.steps, sc.run.sample_every)
        name = "trajectory.csv" if len(tests) == 1 else f"trajectory_{i}.csv"
        if run.wants("trajectory.csv"):
            h.to_csv(run.path(name))
        entry = {"label": particle.label, "steps": sc.run.steps, "dtau_s": sc.run.dtau,
                 "max_norm_residual": float(h.norm_residual.max()), "period_s": None, "kepler_period_s": None}
        src, traj = sources[0]
        cos = float(particle.charge @ src.charge / (np.linalg.norm(particle.charge) * np.linalg.norm(src.charge)))
        if len(sources) == 1 and isinstance(traj, StaticTrajectory) and cos < 0:
            r0 = float(np.linalg.norm(state.position[1:] - traj.center))
            entry["kepler_period_s"] = kepler_period(r0, src.rest_mass, consts, -cos * sc.g2over4pi)
            try:
                entry["period_s"] = orbit_period(h, traj.center)
            except ValueError:
                pass
        summary.append(entry)
        run.say(f"particle {i}: {h.tau.size} samples, period {entry['period_s']}")
    if run.wants("simulate.json"):
        write_json(run.path("simulate.json"), {"particles": summary})


def _field_map(run):
    sc, consts = run.sc, run.consts
    field = build_field(sc, consts=consts)
    g = sc.run.grid
    pts = np.array([[consts.c * t, x, y, z] for t, x, y, z in
                    itertools.product(g.t, g.x.values(), g.y.values(), g.z.values())])
    write_field_map_csv(run.path("field_map.csv"), field.sample(pts), consts)
    run.say(f"field map: {len(pts)} points x {sc.D} inner components")


def _radiation(run):
    sc, consts = run.sc, run.consts
    orbit = scenario_orbit(sc, consts)
    gr = None
    if sc.run.companion_mass is not None:
        gr = gr_quadrupole_power(orbit.mass, sc.run.companion_mass, orbit.radius, consts)
    if sc.run.method == "formula":
        power = sc.g2over4pi**2 * circular_orbit_power(orbit, consts)
        report = radiation_report(power, "circular_formula", gr_comparator=gr)
    else:
        K = orbit.mass * consts.c * np.eye(sc.D)[0]
        traj = CircularTrajectory([0, 0, 0], orbit.radius, orbit.v_hat * consts.c / orbit.radius, consts=consts)
        R = sc.run.R_factor * orbit.radius
        power, order, change = flux_sphere_integral(K, traj, 0.0, R, sc.g2over4pi, consts, sc.run.quadrature_order)
        report = radiation_report(power, "sphere_flux", order, R, change, gr)
    write_json(run.path("radiation.json"), report)
    run.say(f"radiated power: {report['power_W']:.6g} W ({report['method']})")


def _decay(run):
    sc, consts = run.sc, run.consts
    orbit = scenario_orbit(sc, consts)
    series = binary_decay(orbit, sc.run.companion_mass, sc.run.duration, sc.run.dt, consts,
                          contact_radius=sc.run.contact_radius)
    if run.wants("decay.csv"):
        series.to_csv(run.path("decay.csv"))
    if run.wants("decay.json"):
        write_json(run.path("decay.json"), {
            "convention": series.convention, "samples": int(series.t.size),
            "rho_initial_m": float(series.rho[0]), "rho_final_m": float(series.rho[-1]),
            "P_initial_W": float(series.P[0]),
            "gr_quadrupole_initial_W": gr_quadrupole_power(orbit.mass, sc.run.companion_mass, orbit.radius, consts)})
    run.say(f"separation {series.rho[0]:.6g} m -> {series.rho[-1]:.6g} m")


def _spectrum(run):
    levels = mass_spectrum(run.sc.D, run.sc.run.n_max, run.consts)
    with open(run.path("spectrum.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n_squared", "mass", "multiplicity", "n"])
        for e in levels:
            w.writerow([e.n_squared, repr(e.mass), e.multiplicity, " ".join(map(str, e.n))])
    run.say(f"{len(levels)} mass levels, lightest {levels[0].mass:.6g} kg")


def _verify(run):
    results = run_suite(run.sc.seed, run.sc.run.trials, run.consts)
    ok = all(r.passed for r in results)
    write_json(run.path("verify.json"), {"all_passed": ok, "seed": run.sc.seed,
                                         "checks": [r.as_dict() for r in results]})
    for r in results:
        run.say(f"{'PASS' if r.passed else 'FAIL'}  {r.name}  {r.value:.3e} <= {r.tolerance:.1e}")
    return EXIT_OK if ok else EXIT_VERIFY


DISPATCH = {"simulate": _simulate, "field-map": _field_map, "radiation": _radiation,
            "decay": _decay, "spectrum": _spectrum, "verify": _verify}


def run(scenario, out_dir=".", quiet=True):
    """Execute ``scenario.run``; returns (exit status, list of written paths)."""
    os.makedirs(out_dir, exist_ok=True)
    r = _Run(scenario, out_dir, quiet)
    with open(r.path(CANONICAL_NAME), "w") as fh:
        fh.write(canonical_json(scenario))
    status = DISPATCH[scenario.run.kind](r)
    return (EXIT_OK if status is None else status), r.written


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", required=True, help="scenario JSON file")
    common.add_argument("--out", default=".", help="output directory (default: current)")
    common.add_argument("--seed", type=int, default=None, help="override the scenario seed (u64)")
    common.add_argument("--quiet", action="store_true", help="suppress the stdout summary")
    parser = argparse.ArgumentParser(prog="isodyn", description="Translation-mode field simulations")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ARTIFACTS:
        sub.add_parser(name, parents=[common], help=f"run a {name} scenario")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        with open(args.scenario) as fh:
            scenario = parse_scenario(fh.read())
        if scenario.run.kind != args.command:
            raise ScenarioError(f"scenario run.kind is {scenario.run.kind!r} but subcommand is {args.command!r}")
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ScenarioError("--seed must be an unsigned 64-bit integer")
            scenario = scenario.model_copy(update={"seed": args.seed})
        status, _ = run(scenario, args.out, args.quiet)
        return status
    except (OSError, ValidationError, ValueError) as exc:
        print(f"isodyn: input error in {args.scenario}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except IsodynError as exc:
        print(f"isodyn: numeric failure in {args.scenario}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
