"""
JSON scenario schema and its translation into physics objects.

Every model rejects unknown keys. Defaults: D = 4, g^2/4pi = 1, cos(theta) = -1
for every source/test pair, CODATA constants and seed 0.
"""
import json
from typing import List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .core import CODATA, D_MAX, D_MIN, ChargedParticle, planck_derive
from .dynamics import ParticleState
from .radiation import OrbitConfig
from .retarded_field import (
    CircularTrajectory, PointSourceField, StaticTrajectory, TabulatedTrajectory, UniformTrajectory,
)

__all__ = [
    "ScenarioError", "Scenario", "parse_scenario", "load_scenario", "canonical_json",
    "build_constants", "build_sources", "build_test_particles", "scenario_orbit",
    "ARTIFACTS", "ValidationError",
]

Vec3 = Tuple[float, float, float]

RUN_KINDS = ("simulate", "field-map", "radiation", "decay", "verify", "spectrum")

ARTIFACTS = {
    "simulate": ("trajectory.csv", "simulate.json"),
    "field-map": ("field_map.csv",),
    "radiation": ("radiation.json",),
    "decay": ("decay.csv", "decay.json"),
    "verify": ("verify.json",),
    "spectrum": ("spectrum.csv",),
}


class ScenarioError(ValueError):
    """Scenario content that passes the schema but cannot be realized."""


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class Constants(_Model):
    c: Optional[float] = Field(None, gt=0)
    G: Optional[float] = Field(None, gt=0)
    hbar: Optional[float] = Field(None, gt=0)


class TrajectorySpec(_Model):
    kind: Literal["static", "uniform", "circular", "tabulated"] = "static"
    position: Vec3 = (0.0, 0.0, 0.0)
    velocity: Vec3 = (0.0, 0.0, 0.0)
    t0: float = 0.0
    center: Vec3 = (0.0, 0.0, 0.0)
    radius: Optional[float] = Field(None, gt=0)
    omega: Optional[float] = None
    phase: float = 0.0
    normal: Vec3 = (0.0, 0.0, 1.0)
    times: Optional[List[float]] = None
    positions: Optional[List[Vec3]] = None
    velocities: Optional[List[Vec3]] = None
    domain: Optional[Tuple[float, float]] = None

    @model_validator(mode="after")
    def _kind_fields(self):
        if self.kind == "circular" and (self.radius is None or not self.omega):
            raise ValueError("circular trajectory needs radius > 0 and non-zero omega")
        if self.kind == "tabulated" and (self.times is None or self.positions is None or self.velocities is None):
            raise ValueError("tabulated trajectory needs times, positions and velocities")
        if self.domain is not None and not self.domain[0] < self.domain[1]:
            raise ValueError("domain must satisfy t_min < t_max")
        return self


class SourceSpec(_Model):
    mass: float = Field(gt=0)
    label: str = ""
    trajectory: TrajectorySpec = TrajectorySpec()
    mass_locked: bool = True
    charge_direction: Optional[List[float]] = None
    charge: Optional[List[float]] = None

    @model_validator(mode="after")
    def _charge(self):
        if self.mass_locked and self.charge is not None:
            raise ValueError("an explicit charge requires mass_locked = false")
        if not self.mass_locked and self.charge is None:
            raise ValueError("a source that is not mass-locked needs an explicit charge")
        return self


class ParticleSpec(_Model):
    mass: float = Field(gt=0)
    label: str = ""
    position: Vec3
    velocity: Vec3 = (0.0, 0.0, 0.0)
    t0: float = 0.0
    cos_theta: Union[float, List[float]] = -1.0

    @field_validator("cos_theta")
    @classmethod
    def _range(cls, value):
        values = value if isinstance(value, list) else [value]
        if any(not -1.0 <= v <= 1.0 for v in values):
            raise ValueError("cos_theta must lie in [-1, 1]")
        return value


class OrbitSpec(_Model):
    mass: float = Field(gt=0)
    radius: float = Field(gt=0)
    v_hat: float = Field(gt=0, lt=1)


class AxisSpec(_Model):
    min: float
    max: float
    n: int = Field(1, ge=1)

    def values(self):
        return np.linspace(self.min, self.max, self.n) if self.n > 1 else np.array([self.min])


class GridSpec(_Model):
    x: AxisSpec
    y: AxisSpec
    z: AxisSpec
    t: List[float] = [0.0]


class RunSpec(_Model):
    kind: Literal["simulate", "field-map", "radiation", "decay", "verify", "spectrum"]
    # simulate
    dtau: Optional[float] = Field(None, gt=0)
    steps: Optional[int] = Field(None, gt=0)
    sample_every: int = Field(1, gt=0)
    # field-map
    grid: Optional[GridSpec] = None
    # radiation / decay
    orbit: Optional[OrbitSpec] = None
    method: Literal["formula", "flux"] = "formula"
    R_factor: float = Field(1e4, gt=1)
    quadrature_order: int = Field(64, ge=64)
    companion_mass: Optional[float] = Field(None, gt=0)
    duration: Optional[float] = Field(None, gt=0)
    dt: Optional[float] = Field(None, gt=0)
    contact_radius: float = Field(0.0, ge=0)
    # spectrum
    n_max: int = Field(2, ge=1)
    # verify
    trials: int = Field(20, ge=1)

    @model_validator(mode="after")
    def _required(self):
        need = {"simulate": ("dtau", "steps"), "field-map": ("grid",), "decay": ("companion_mass", "duration", "dt")}
        missing = [k for k in need.get(self.kind, ()) if getattr(self, k) is None]
        if missing:
            raise ValueError(f"run kind {self.kind!r} requires {', '.join(missing)}")
        return self


class Scenario(_Model):
    D: int = Field(4, ge=D_MIN, le=D_MAX)
    g2over4pi: float = Field(1.0, gt=0)
    constants: Optional[Constants] = None
    seed: int = Field(0, ge=0, lt=2**64)
    sources: List[SourceSpec] = []
    test_particles: List[ParticleSpec] = []
    run: RunSpec
    outputs: List[str] = []

    @model_validator(mode="after")
    def _consistency(self):
        for i, s in enumerate(self.sources):
            for name in ("charge_direction", "charge"):
                vec = getattr(s, name)
                if vec is not None and len(vec) != self.D:
                    raise ValueError(f"sources.{i}.{name} must have D = {self.D} entries")
        for i, p in enumerate(self.test_particles):
            if isinstance(p.cos_theta, list) and len(p.cos_theta) != len(self.sources):
                raise ValueError(f"test_particles.{i}.cos_theta needs one entry per source")
        allowed = ARTIFACTS[self.run.kind]
        bad = [o for o in self.outputs if o not in allowed]
        if bad:
            raise ValueError(f"outputs {bad} not produced by run kind {self.run.kind!r}; choose from {list(allowed)}")
        return self


def parse_scenario(text):
    """Validate a JSON document; raises `pydantic.ValidationError` with field paths."""
    return Scenario.model_validate_json(text)


def load_scenario(path):
    with open(path) as fh:
        return parse_scenario(fh.read())


def canonical_json(scenario):
    """Fully expanded scenario with sorted keys; parses back to an equal Scenario."""
    return json.dumps(scenario.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"


def build_constants(scenario):
    over = scenario.constants
    if over is None:
        return CODATA
    return planck_derive(over.c or CODATA.c, over.G or CODATA.G, over.hbar or CODATA.hbar)


def _unit(v):
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0:
        raise ScenarioError("charge direction must be non-zero")
    return v / n


def _trajectory(spec, consts):
    domain = spec.domain or (-np.inf, np.inf)
    if spec.kind == "static":
        return StaticTrajectory(spec.position, domain)
    if spec.kind == "uniform":
        return UniformTrajectory(spec.position, spec.velocity, spec.t0, domain, consts)
    if spec.kind == "circular":
        return CircularTrajectory(spec.center, spec.radius, spec.omega, spec.phase, spec.normal, domain, consts)
    return TabulatedTrajectory(spec.times, spec.positions, spec.velocities, consts)


def build_sources(scenario, consts=None):
    """List of ``(ChargedParticle, Trajectory)`` pairs."""
    consts = consts or build_constants(scenario)
    basis = np.eye(scenario.D)[0]
    out = []
    for s in scenario.sources:
        if s.mass_locked:
            direction = basis if s.charge_direction is None else _unit(s.charge_direction)
            particle = ChargedParticle.locked(s.mass, direction, s.label, consts)
        else:
            particle = ChargedParticle(s.mass, s.charge, s.label, False, consts)
        out.append((particle, _trajectory(s.trajectory, consts)))
    return out


def _test_direction(source_dirs, cosines, D):
    """Unit inner vector t with t.s_i = cos_i for every source direction s_i."""
    S = np.array(source_dirs)
    cos = np.asarray(cosines, dtype=float)
    t0, *_ = np.linalg.lstsq(S, cos, rcond=None)
    if np.abs(S @ t0 - cos).max() > 1e-12:
        raise ScenarioError("the requested cos_theta values are inconsistent with the source directions")
    rest = 1.0 - t0 @ t0
    if rest < -1e-12:
        raise ScenarioError("the requested cos_theta values cannot be met by a unit inner vector")
    if rest <= 1e-15:
        return t0 / np.linalg.norm(t0)
    # fill the remaining length with a direction orthogonal to every source
    _, sv, vt = np.linalg.svd(S)
    rank = int(np.sum(sv > 1e-12))
    if rank >= D:
        raise ScenarioError("no inner direction is left to satisfy the cos_theta values")
    return t0 + np.sqrt(rest) * vt[rank]


def build_test_particles(scenario, sources=None, consts=None):
    """List of ``(ChargedParticle, ParticleState)`` pairs; charges are mass-locked."""
    consts = consts or build_constants(scenario)
    sources = sources if sources is not None else build_sources(scenario, consts)
    dirs = [_unit(p.charge) for p, _ in sources]
    out = []
    for p in scenario.test_particles:
        if dirs:
            cos = p.cos_theta if isinstance(p.cos_theta, list) else [p.cos_theta] * len(dirs)
            direction = _test_direction(dirs, cos, scenario.D)
        else:
            direction = np.eye(scenario.D)[0]
        particle = ChargedParticle.locked(p.mass, direction, p.label, consts)
        out.append((particle, ParticleState.from_velocity(p.position, p.velocity, p.t0, 0.0, consts)))
    return out


def build_field(scenario, sources=None, consts=None):
    consts = consts or build_constants(scenario)
    sources = sources if sources is not None else build_sources(scenario, consts)
    if not sources:
        raise ScenarioError("this run needs at least one source")
    return PointSourceField([(p.charge, traj) for p, traj in sources], scenario.g2over4pi, consts)


def scenario_orbit(scenario, consts=None):
    """`OrbitConfig` from ``run.orbit`` or else from the first circular source."""
    consts = consts or build_constants(scenario)
    if scenario.run.orbit is not None:
        o = scenario.run.orbit
        return OrbitConfig(o.mass, o.radius, o.v_hat)
    for s in scenario.sources:
        if s.trajectory.kind == "circular":
            return OrbitConfig(s.mass, s.trajectory.radius, s.trajectory.radius * abs(s.trajectory.omega) / consts.c)
    raise ScenarioError("no orbit given: set run.orbit or add a circular source")
