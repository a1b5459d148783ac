"""JSON run configuration: robot, synthesis, scheduling, trajectory and simulation blocks.

Missing keys take their defaults; unknown keys are rejected so typos fail loudly.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .dynamics import MEASURED_PARAMS, TRUE_PARAMS, RobotParams, TrajectorySpec
from .errors import InvalidInputError
from .scheduling import MODES
from .synthesis import SynthesisConfig


@dataclass(frozen=True)
class LinkParams:
    L1: float
    L2: float
    m1: float
    m2: float

    def __post_init__(self):
        if min(self.L1, self.L2, self.m1, self.m2) <= 0:
            raise InvalidInputError(f"link lengths and masses must be positive: {self}")


@dataclass(frozen=True)
class RobotConfig:
    true: LinkParams = LinkParams(TRUE_PARAMS.L1, TRUE_PARAMS.L2, TRUE_PARAMS.m1, TRUE_PARAMS.m2)
    measured: LinkParams = LinkParams(MEASURED_PARAMS.L1, MEASURED_PARAMS.L2, MEASURED_PARAMS.m1, MEASURED_PARAMS.m2)
    gravity: float = 0.0

    def true_params(self) -> RobotParams:
        return RobotParams(**dataclasses.asdict(self.true), gravity=self.gravity)

    def measured_params(self) -> RobotParams:
        return RobotParams(**dataclasses.asdict(self.measured), gravity=self.gravity)


@dataclass(frozen=True)
class SchedulingConfig:
    mode: str = "matrix"
    alphas: tuple[float, ...] = (2.0, 1.0, 2.0)
    mix_mu1: float = 2.0
    mix_nu1: float = 4.0
    mix_mu2: float = 1.0
    mix_nu2: float = 2.0
    grid_step: float = 1e-3
    blackout: tuple[float, float] | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidInputError(f"scheduling.mode must be one of {MODES}")
        if len(self.alphas) != 3 or any(not a > 0 for a in self.alphas):
            raise InvalidInputError("scheduling.alphas needs three positive entries")
        if min(self.mix_mu1, self.mix_nu1, self.mix_mu2, self.mix_nu2) <= 0:
            raise InvalidInputError("mixing coefficients must be positive")
        if not self.grid_step > 0:
            raise InvalidInputError("scheduling.grid_step must be positive")
        if self.blackout is not None and (len(self.blackout) != 2 or self.blackout[0] > self.blackout[1]):
            raise InvalidInputError("scheduling.blackout must be [start, end] with start <= end")

    def schedule_kwargs(self) -> dict:
        return dict(mix_mu1=self.mix_mu1, mix_nu1=self.mix_nu1, mix_mu2=self.mix_mu2,
                    mix_nu2=self.mix_nu2, alphas=self.alphas)


@dataclass(frozen=True)
class SimBlock:
    step: float = 1e-3
    horizon: float = 8.5
    controller_input: str = "rate_error"

    def __post_init__(self):
        if not self.step > 0 or not self.horizon >= self.step:
            raise InvalidInputError("sim.step must be positive and sim.horizon at least one step")


@dataclass(frozen=True)
class RunConfig:
    robot: RobotConfig = RobotConfig()
    synthesis: SynthesisConfig = SynthesisConfig()
    scheduling: SchedulingConfig = SchedulingConfig()
    trajectory: TrajectorySpec = field(default_factory=TrajectorySpec)
    sim: SimBlock = SimBlock()
    output_dir: str = "out"

    def to_dict(self) -> dict:
        return _to_jsonable(dataclasses.asdict(self))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _to_jsonable(obj):
    if isinstance(obj, dict):
        return {k: _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(v) for v in obj]
    return obj


def _tupleize(value):
    if isinstance(value, list):
        return tuple(_tupleize(v) for v in value)
    return value


def _build(cls, data, where: str):
    if not isinstance(data, dict):
        raise InvalidInputError(f"{where} must be a JSON object")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(fields))
    if unknown:
        raise InvalidInputError(f"unknown key(s) in {where}: {', '.join(unknown)}")
    kwargs = {}
    for name, value in data.items():
        default = fields[name].default
        if default is dataclasses.MISSING and fields[name].default_factory is not dataclasses.MISSING:
            default = fields[name].default_factory()
        if dataclasses.is_dataclass(default):
            kwargs[name] = _build(type(default), value, f"{where}.{name}")
        else:
            kwargs[name] = _tupleize(value)
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise InvalidInputError(f"bad {where}: {exc}") from exc


def from_dict(data: dict) -> RunConfig:
    return _build(RunConfig, data, "config")


def load_config(path=None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"cannot read config {path}: {exc}") from exc
    return from_dict(data)
