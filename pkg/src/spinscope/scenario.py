"""Scenario files: validated JSON descriptions of one simulation or analysis run.

A scenario names a sensor, exactly one style of target description, the field,
the pulse sequence and the model. Unknown keys are rejected. ``variants`` holds
named partial overrides that are deep-merged into the base before validation.
"""

import copy
import json
from importlib import resources
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .constants import load_constants
from .mri import FieldDirection, TargetGeometry, nv_target_system
from .spin_algebra import spin_operators
from .systems import CoupledPair, GenericCluster, IndependentSpins, SensorKind, SpinJLadder

SCHEMA_VERSION = 1
FIXTURE_PACKAGE = "spinscope.fixtures"


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


def _one_of(obj, names):
    given = [n for n in names if getattr(obj, n) is not None]
    if len(given) != 1:
        raise ValueError(f"exactly one of {names} is required, got {given or 'none'}")
    return given[0]


class SensorSpec(_Strict):
    kind: Literal["spin_half", "nv"] = "spin_half"
    nv_depth_nm: Optional[float] = Field(default=None, gt=0)

    @property
    def sensor(self):
        return SensorKind.parse(self.kind)


class SpinsSpec(_Strict):
    hyperfine: list[tuple[float, float, float]] = Field(min_length=1)
    omega0: Union[float, list[float]]
    field_direction: tuple[float, float, float] = (0.0, 0.0, 1.0)


class GeometryTarget(_Strict):
    name: str = ""
    position: tuple[float, float, float]
    species: str


class LadderSpec(_Strict):
    J: float = Field(gt=0)
    level_energies: list[float]
    coupling: float = Field(ge=0)


class PairSpec(_Strict):
    omega_a: float
    omega_b: float
    coupling: float = Field(ge=0)
    mu: float = Field(default=0.0, ge=0)


class TypeVSpec(_Strict):
    """Spin-1 target with V-shaped transitions at ``omega_a`` and ``omega_b``."""

    omega_a: float
    omega_b: float
    coupling: float = Field(ge=0)


class GenericSpec(_Strict):
    energies: list[float]
    noise_real: list[list[float]]
    noise_imag: Optional[list[list[float]]] = None


class ClusterSpec(_Strict):
    ladder: Optional[LadderSpec] = None
    pair: Optional[PairSpec] = None
    type_v: Optional[TypeVSpec] = None
    generic: Optional[GenericSpec] = None

    @model_validator(mode="after")
    def _single(self):
        _one_of(self, ("ladder", "pair", "type_v", "generic"))
        return self


class TargetsSpec(_Strict):
    spins: Optional[SpinsSpec] = None
    geometry: Optional[list[GeometryTarget]] = None
    cluster: Optional[ClusterSpec] = None

    @model_validator(mode="after")
    def _single(self):
        _one_of(self, ("spins", "geometry", "cluster"))
        if self.geometry is not None and not self.geometry:
            raise ValueError("geometry needs at least one target")
        return self

    @property
    def style(self):
        return _one_of(self, ("spins", "geometry", "cluster"))


class FieldSpec(_Strict):
    gauss: float = Field(gt=0)
    theta_deg: float
    phi_deg: Union[float, list[float]]

    def directions(self):
        phis = self.phi_deg if isinstance(self.phi_deg, list) else [self.phi_deg]
        return [FieldDirection(self.gauss, self.theta_deg, p) for p in phis]


class SequenceSpec(_Strict):
    n: Optional[int] = Field(default=None, ge=1)
    n_range: Optional[tuple[int, int]] = None
    tau: Optional[Union[float, str]] = None
    omega_resonance: Optional[float] = Field(default=None, gt=0)
    tau_range: Optional[tuple[float, float]] = None
    samples: int = Field(default=400, ge=2)

    @field_validator("tau")
    @classmethod
    def _tau(cls, v):
        if isinstance(v, str):
            head, _, q = v.partition(":")
            if head != "resonant" or not q.isdigit() or int(q) < 1:
                raise ValueError("tau must be a positive number or 'resonant:<q>' with q >= 1")
        elif v is not None and not v > 0:
            raise ValueError("tau must be positive")
        return v

    @field_validator("n_range")
    @classmethod
    def _n_range(cls, v):
        if v is not None and not (0 <= v[0] < v[1]):
            raise ValueError("n_range must be [lo, hi] with 0 <= lo < hi")
        return v

    @field_validator("tau_range")
    @classmethod
    def _tau_range(cls, v):
        if v is not None and not (0 < v[0] < v[1]):
            raise ValueError("tau_range must be [lo, hi] with 0 < lo < hi")
        return v

    @property
    def resonance_order(self):
        if isinstance(self.tau, str):
            return int(self.tau.partition(":")[2])
        return None


class PhiGrid(_Strict):
    start: float
    stop: float
    count: int = Field(ge=2)

    def values(self):
        return np.linspace(self.start, self.stop, self.count)


class AnalysisSpec(_Strict):
    trace_noise: float = Field(default=0.0, ge=0)
    max_spins: int = Field(default=10, ge=1)
    noise_sigma: float = Field(default=0.01, ge=0)
    mc_samples: int = Field(default=500, ge=0)
    period_source: Literal["forward", "traces"] = "traces"
    assignment: Optional[list[list[int]]] = None
    phi_grid: Optional[PhiGrid] = None
    dipolar: bool = False


class BudgetSpec(_Strict):
    a_perp: float = Field(gt=0, description="transverse coupling, rad/s")
    readout_fidelity: float = Field(gt=0, le=1)
    target_sigma: float = Field(gt=0)
    t_init_readout: float = Field(gt=0, description="seconds")


class Scenario(_Strict):
    schema_version: Literal[1]
    description: str = ""
    sensor: SensorSpec = SensorSpec()
    targets: Optional[TargetsSpec] = None
    field: Optional[FieldSpec] = None
    sequence: SequenceSpec = SequenceSpec()
    model: Literal["exact", "analytic", "semiclassical"] = "exact"
    analysis: AnalysisSpec = AnalysisSpec()
    budget: Optional[BudgetSpec] = None
    seed: int = Field(default=0, ge=0, lt=2**64)
    variants: dict[str, dict] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _consistent(self):
        t = self.targets
        if t is not None and t.geometry is not None:
            if self.field is None:
                raise ValueError("geometric targets need a field specification")
            if len({g.species for g in t.geometry}) != 1:
                raise ValueError("all geometric targets must share one species")
            load = load_constants()
            for g in t.geometry:
                load.gamma(g.species)
        if self.sequence.resonance_order is not None and self.sequence.omega_resonance is None:
            if t is None or t.cluster is not None:
                raise ValueError("resonant tau needs omega_resonance or targets with a derivable Larmor frequency")
        if self.model == "semiclassical" and t is not None and t.cluster is not None:
            raise ValueError("the semiclassical model applies to independent spins only")
        return self

    # -- derived quantities ---------------------------------------------------

    @property
    def sensor_kind(self):
        return self.sensor.sensor

    def larmor(self, direction=None):
        """Target Larmor frequency that fixes a resonant ``tau``."""
        if self.sequence.omega_resonance is not None:
            return float(self.sequence.omega_resonance)
        t = self.targets
        if t.spins is not None:
            return float(np.mean(np.atleast_1d(t.spins.omega0)))
        direction = direction or self.field.directions()[0]
        return direction.larmor(load_constants().gamma(t.geometry[0].species))

    def tau(self, direction=None):
        s = self.sequence
        if s.tau is None:
            raise ValueError("the sequence needs tau")
        if s.resonance_order is not None:
            return np.pi * (2 * s.resonance_order - 1) / (2.0 * self.larmor(direction))
        return float(s.tau)

    def geometries(self):
        return [TargetGeometry(np.array(g.position), g.species, g.name or f"target-{k + 1}") for k, g in enumerate(self.targets.geometry)]

    def system(self, direction=None):
        """Target system; geometric targets are placed under ``direction`` (default: first field direction)."""
        t = self.targets
        if t is None:
            raise ValueError("this scenario defines no targets")
        if t.spins is not None:
            return IndependentSpins(np.array(t.spins.hyperfine), t.spins.omega0, t.spins.field_direction)
        if t.geometry is not None:
            direction = direction or self.field.directions()[0]
            return nv_target_system(self.geometries(), direction, dipolar=self.analysis.dipolar)
        c = t.cluster
        if c.ladder is not None:
            return SpinJLadder(c.ladder.J, tuple(c.ladder.level_energies), c.ladder.coupling)
        if c.pair is not None:
            return CoupledPair(c.pair.omega_a, c.pair.omega_b, c.pair.coupling, c.pair.mu)
        if c.type_v is not None:
            v = c.type_v
            ops = spin_operators(1)
            # levels m = 1, 0, -1 sit at omega_a, 0, omega_b
            return GenericCluster((v.omega_a, 0.0, v.omega_b), v.coupling * ops.jx)
        g = c.generic
        noise = np.array(g.noise_real, float) + 1j * (np.array(g.noise_imag, float) if g.noise_imag else 0.0)
        return GenericCluster(tuple(g.energies), noise)


# a variant swapping the target description replaces it outright
_REPLACED_KEYS = {"targets"}


def _deep_merge(base, override):
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k not in _REPLACED_KEYS:
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def parse_scenario(data, variant=None):
    """Validate a scenario mapping, optionally applying one of its named variants."""
    if variant is not None:
        variants = data.get("variants", {})
        if variant not in variants:
            raise KeyError(f"unknown variant {variant!r}; available: {sorted(variants)}")
        data = _deep_merge({k: v for k, v in data.items() if k != "variants"}, variants[variant])
    return Scenario.model_validate(data)


def fixture_names():
    return sorted(p.name[:-5] for p in resources.files(FIXTURE_PACKAGE).iterdir() if p.name.endswith(".json"))


def read_scenario_data(ref):
    """Raw scenario mapping from a file path or ``fixture:<name>``."""
    if str(ref).startswith("fixture:"):
        name = str(ref).split(":", 1)[1]
        path = resources.files(FIXTURE_PACKAGE) / f"{name}.json"
        if not path.is_file():
            raise FileNotFoundError(f"no bundled fixture {name!r}; available: {fixture_names()}")
        return json.loads(path.read_text())
    return json.loads(Path(ref).read_text())


def load_scenario(ref, variant=None):
    return parse_scenario(read_scenario_data(ref), variant)


def dump_scenario(scenario):
    return scenario.model_dump(mode="json", exclude_defaults=True) | {"schema_version": scenario.schema_version}
