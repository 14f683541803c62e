"""Strict TOML run configuration.

A document has top-level ``command``, optional ``seed`` and ``output_dir``,
and a ``[parameters]`` table whose schema depends on the command.  Unknown
keys anywhere are rejected.
"""
from __future__ import annotations

import sys
from pathlib import Path
from typing import List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, ValidationError, model_validator

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .core import ABQSimError, PhysicalConstants
from .dynamics import PropagatorConfig

__all__ = [
    "ConfigError",
    "ConfigParseError",
    "RunConfig",
    "parse_config",
    "load_config",
    "COMMANDS",
]

COMMANDS = ("ring-spectrum", "gauge-check", "holonomy", "evolve", "interfere", "sweep")


class ConfigParseError(ABQSimError, ValueError):
    category = "config_parse"
    exit_code = 2

    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class ConfigError(ABQSimError, ValueError):
    """Validation failure; ``key`` is the dotted path of the offending entry."""

    category = "config_validation"
    exit_code = 3

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ConstantsModel(_Strict):
    hbar: PositiveFloat = 1.0
    mass: PositiveFloat = 1.0
    charge: PositiveFloat = 1.0
    light_speed: PositiveFloat = 1.0

    def build(self) -> PhysicalConstants:
        return PhysicalConstants(self.hbar, self.mass, self.charge, self.light_speed)


class RingSpectrumParams(_Strict):
    constants: ConstantsModel = ConstantsModel()
    radius: PositiveFloat = 1.0
    alphas: List[float] = [0.0, 0.25, 0.5, 0.75, 1.0]
    n_min: int = -5
    n_max: int = 5
    n_points: PositiveInt = 512
    n_levels: PositiveInt = 6

    @model_validator(mode="after")
    def _check(self):
        if self.n_max < self.n_min:
            raise ValueError("n_max must be >= n_min")
        if self.n_points < 8 or self.n_points % 2:
            raise ValueError("n_points must be even and >= 8")
        if not self.alphas:
            raise ValueError("alphas must be nonempty")
        return self


class LatticeModel(_Strict):
    nx: PositiveInt = 32
    ny: PositiveInt = 32
    spacing: PositiveFloat = 0.1


class PotentialModel(_Strict):
    kind: Literal["zero", "pure_gauge", "uniform_B", "solenoid"] = "pure_gauge"
    field: float = 1.0
    gauge: Literal["landau", "symmetric"] = "landau"
    alpha: float = 0.5
    center: Tuple[float, float] = (1.55, 1.55)
    hole_radius: float = 0.0
    scalar: float = 0.0


class GaugeCheckParams(_Strict):
    constants: ConstantsModel = ConstantsModel()
    lattice: LatticeModel = LatticeModel()
    potential: PotentialModel = PotentialModel()
    trials: PositiveInt = 5
    ring_points: PositiveInt = 64


class PacketModel(_Strict):
    center: Tuple[float, float] = (1.6, 1.6)
    sigma: PositiveFloat = 0.4
    k: Tuple[float, float] = (2.0, 0.0)


class RunModel(_Strict):
    dt: float = 0.002
    total_time: PositiveFloat = 14.0
    linear_solver_tolerance: PositiveFloat = 1e-11
    max_solver_iterations: PositiveInt = 500
    snapshot_stride: int = Field(0, ge=0)

    def build(self) -> PropagatorConfig:
        return PropagatorConfig(self.dt, self.total_time, "crank_nicolson", self.linear_solver_tolerance,
                                self.max_solver_iterations, self.snapshot_stride)


class EvolveParams(_Strict):
    constants: ConstantsModel = ConstantsModel()
    lattice: LatticeModel = LatticeModel()
    potential: PotentialModel = PotentialModel(kind="zero")
    packet: PacketModel = PacketModel()
    run: RunModel = RunModel(dt=0.005, total_time=0.5)
    write_snapshots: bool = True


class GeometryModel(_Strict):
    """Mirror of :class:`abqsim.experiments.ABExperimentConfig`."""

    nx: PositiveInt = 384
    ny: PositiveInt = 256
    spacing: PositiveFloat = 0.1
    barrier_column: PositiveInt = 128
    slit_centers: Tuple[float, float] = (10.35, 15.15)
    slit_width: PositiveFloat = 0.8
    solenoid_center: Tuple[float, float] = (12.75, 12.75)
    solenoid_radius: PositiveFloat = 0.4
    packet_center: Tuple[float, float] = (6.0, 12.75)
    packet_sigma: PositiveFloat = 1.2
    packet_k: Tuple[float, float] = (2.0, 0.0)
    screen_column: PositiveInt = 312
    run: RunModel = RunModel()


class InterfereParams(_Strict):
    constants: ConstantsModel = ConstantsModel()
    geometry: GeometryModel = GeometryModel()
    alpha: float = 0.5


class SweepParams(_Strict):
    constants: ConstantsModel = ConstantsModel()
    geometry: GeometryModel = GeometryModel()
    alphas: List[float] = [0.0, 0.25, 0.5, 0.75]


class HolonomyParams(_Strict):
    constants: ConstantsModel = ConstantsModel()
    geometry: GeometryModel = GeometryModel()
    alphas: List[float] = [0.0, 0.25, 0.37, 0.5, 1.0, 2.5]


PARAMS = {
    "ring-spectrum": RingSpectrumParams,
    "gauge-check": GaugeCheckParams,
    "holonomy": HolonomyParams,
    "evolve": EvolveParams,
    "interfere": InterfereParams,
    "sweep": SweepParams,
}

Params = Union[RingSpectrumParams, GaugeCheckParams, HolonomyParams, EvolveParams, InterfereParams, SweepParams]


class RunConfig(_Strict):
    command: Literal["ring-spectrum", "gauge-check", "holonomy", "evolve", "interfere", "sweep"]
    parameters: Params
    output_dir: str = "abqsim-out"
    seed: int = 0

    def resolved(self) -> dict:
        """Everything, defaults included, as plain JSON-ready data."""
        return self.model_dump(mode="json")


def _key_of(err: dict, prefix: str = "") -> str:
    parts = [str(p) for p in err.get("loc", ())]
    return ".".join([prefix] + parts if prefix else parts) or "<root>"


def _experiment_config(params, alpha: float = 0.0):
    from .experiments import ABExperimentConfig

    g = params.geometry
    return ABExperimentConfig(
        nx=g.nx, ny=g.ny, spacing=g.spacing, barrier_column=g.barrier_column,
        slit_centers=g.slit_centers, slit_width=g.slit_width, solenoid_center=g.solenoid_center,
        solenoid_radius=g.solenoid_radius, alpha=alpha, packet_center=g.packet_center,
        packet_sigma=g.packet_sigma, packet_k=g.packet_k, screen_column=g.screen_column,
        propagator=g.run.build(), constants=params.constants.build(),
    )


def experiment_config(cfg: RunConfig, alpha: float = 0.0):
    """:class:`ABExperimentConfig` for an interfere / sweep / holonomy run."""
    return _experiment_config(cfg.parameters, alpha)


def _semantic_checks(cfg: RunConfig) -> None:
    """Module-level invariants that the schema alone cannot express."""
    p = cfg.parameters
    if cfg.command in ("interfere", "sweep", "holonomy"):
        try:
            _experiment_config(p)
        except ValueError as exc:
            msg = str(exc)
            key = "parameters.geometry"
            if "shielding" in msg:
                key += ".solenoid_center"
            elif "screen" in msg:
                key += ".screen_column"
            elif "packet" in msg:
                key += ".packet_center"
            elif "slit" in msg:
                key += ".slit_centers"
            elif "dt" in msg or "total_time" in msg:
                key += ".run"
            raise ConfigError(key, msg) from None
    if cfg.command in ("evolve",):
        try:
            p.run.build()
        except ValueError as exc:
            raise ConfigError("parameters.run", str(exc)) from None


def parse_config(text: str, command: Optional[str] = None) -> RunConfig:
    """Parse and validate a TOML document.

    ``command`` (from the command line) fills in a missing ``command`` key
    and must agree with it when both are present.

    Raises
    ------
    ConfigParseError
        Malformed TOML (with the line number).
    ConfigError
        Unknown keys, bad values or violated geometry invariants.
    """
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        if line is None:
            import re

            m = re.search(r"line (\d+)", str(exc))
            line = int(m.group(1)) if m else None
        raise ConfigParseError(str(exc).split(" (at")[0], line) from None

    if command is not None:
        if doc.setdefault("command", command) != command:
            raise ConfigError("command", f"config is for {doc['command']!r}, not {command!r}")
    command = doc.get("command")
    if command not in PARAMS:
        raise ConfigError("command", f"must be one of {', '.join(COMMANDS)}; got {command!r}")
    try:
        params = PARAMS[command].model_validate(doc.get("parameters", {}))
    except ValidationError as exc:
        err = exc.errors()[0]
        raise ConfigError(_key_of(err, "parameters"), err["msg"]) from None
    rest = {k: v for k, v in doc.items() if k != "parameters"}
    try:
        cfg = RunConfig.model_validate({**rest, "parameters": params})
    except ValidationError as exc:
        err = exc.errors()[0]
        raise ConfigError(_key_of(err), err["msg"]) from None
    _semantic_checks(cfg)
    return cfg


def load_config(path, command: Optional[str] = None) -> RunConfig:
    return parse_config(Path(path).read_text(), command)
