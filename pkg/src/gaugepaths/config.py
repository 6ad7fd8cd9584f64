"""Run configuration: a YAML document validated against pydantic models.

Unknown keys are rejected.  Every field left to its default is recorded so
the run summary can list it.
"""
from __future__ import annotations

import json
from typing import Any, Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

Command = Literal["free-paths", "double-slit", "ab-effect", "propagate", "modes", "verify"]
SECTION = {"free-paths": "free_paths", "double-slit": "double_slit", "ab-effect": "ab_effect",
           "propagate": "propagate", "modes": "modes", "verify": "verify"}


class ConfigError(ValueError):
    """Invalid configuration document."""


class Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class Kick(Strict):
    mean: float = 0.0
    spread: float = Field(0.0, ge=0)


class Sampling(Strict):
    m: float = Field(1.0, gt=0)
    u_bar: float = Field(1.0, gt=0)
    knots: int = Field(4, ge=0)
    jitter: float = Field(1.0, ge=0)
    samples: int = Field(100_000, gt=0)
    phase_tol: float = Field(0.3, gt=0, lt=3.14159)
    n_bins: int = Field(200, gt=0)


class FreePaths(Sampling):
    u_bar: float = Field(0.5, gt=0)
    segments: int = Field(16, ge=1)
    wavelengths: float = Field(10.0, gt=0)
    jitter: float = Field(0.0, ge=0)


class DoubleSlit(Sampling):
    separation: float = Field(4.0, gt=0, description="slit separation in wavelengths")
    distance: float = Field(40.0, gt=0, description="slit-screen distance in wavelengths")
    fringes: float = Field(2.5, gt=0, description="screen half-width in fringe spacings")
    window: Literal["hard", "soft"] = "hard"
    blocked: Optional[Literal["a", "b"]] = None
    random_kappa: bool = True
    estimator: Literal["count", "amplitude"] = "count"
    amplitude_norm: Literal["square", "abs"] = "square"
    detector_kick: Optional[Kick] = None
    uniform_potential: Optional[list[float]] = None

    @model_validator(mode="after")
    def _potential_dim(self):
        if self.uniform_potential is not None and len(self.uniform_potential) != 2:
            raise ValueError("uniform_potential must have 2 components")
        return self


class Sweep(Strict):
    steps: int = Field(16, ge=2)


class ABEffect(Sampling):
    separation: float = Field(4.0, gt=0)
    distance: float = Field(40.0, gt=0)
    fringes: float = Field(2.5, gt=0)
    flux: float = 0.0
    random_kappa: bool = True
    sweep: Optional[Sweep] = None


class Initial(Strict):
    kind: Literal["gaussian", "plane-wave"] = "gaussian"
    center: Optional[list[float]] = None
    width: float = Field(1.5, gt=0)
    k: Optional[list[float]] = None


class Propagate(Strict):
    points: int = Field(1024, gt=1)
    spacing: float = Field(40.0 / 1024, gt=0)
    spatial_dims: int = Field(1, ge=1, le=3)
    m: float = Field(1.0, gt=0)
    epsilon: float = Field(0.1, gt=0)
    steps: int = Field(10, ge=1)
    period_steps: Optional[int] = Field(
        None, ge=1, description="evolve one period 2 pi / m in this many steps; sets epsilon")
    mode: Literal["spectral", "direct"] = "spectral"
    uniform_potential: Optional[list[float]] = None
    initial: Initial = Initial()

    @model_validator(mode="after")
    def _checks(self):
        if self.points & (self.points - 1):
            raise ValueError("points must be a power of two")
        if self.period_steps is not None and {"epsilon", "steps"} & self.model_fields_set:
            raise ValueError("period_steps fixes epsilon and steps; do not set them too")
        if self.uniform_potential is not None and len(self.uniform_potential) != self.spatial_dims:
            raise ValueError("uniform_potential length must equal spatial_dims")
        return self


class Modes(Strict):
    points: int = Field(64, gt=1)
    m: float = Field(4.0, gt=0)
    wave: list[float] = Field(default_factory=lambda: [5.0, 3.0])
    steps: int = Field(64, ge=4)
    n_min: int = -8
    n_max: int = 8

    @model_validator(mode="after")
    def _checks(self):
        if self.points & (self.points - 1):
            raise ValueError("points must be a power of two")
        if len(self.wave) != 2:
            raise ValueError("wave must have 2 integer components (t, x)")
        if any(float(w) != int(w) for w in self.wave):
            raise ValueError("wave components must be integers on the periodic box")
        if self.n_min > self.n_max:
            raise ValueError("n_min must not exceed n_max")
        return self


class Verify(Strict):
    quick: bool = True


class RunConfig(Strict):
    command: Command
    seed: int = Field(0, ge=0)
    output_dir: str = "out"
    threads: int = Field(1, ge=1)
    free_paths: FreePaths = FreePaths()
    double_slit: DoubleSlit = DoubleSlit()
    ab_effect: ABEffect = ABEffect()
    propagate: Propagate = Propagate()
    modes: Modes = Modes()
    verify: Verify = Verify()

    @property
    def section(self) -> BaseModel:
        return getattr(self, SECTION[self.command])


def _loc(err: dict) -> str:
    return ".".join(str(p) for p in err["loc"]) or "<root>"


def validate(data: Any) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config document must be a mapping")
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        msgs = []
        for e in exc.errors():
            kind = "unknown key" if e["type"] == "extra_forbidden" else e["msg"]
            msgs.append(f"{_loc(e)}: {kind}")
        raise ConfigError("; ".join(msgs)) from None


def parse_config(text: str) -> RunConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    return validate(data)


def serialize(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.model_dump(mode="json"), sort_keys=True)


def defaulted_fields(model: BaseModel, prefix: str = "") -> list[str]:
    """Dotted paths of fields that took their default value."""
    out = []
    for name, info in type(model).model_fields.items():
        path = f"{prefix}{name}"
        value = getattr(model, name)
        if name not in model.model_fields_set:
            out.append(path)
        elif isinstance(value, BaseModel):
            out.extend(defaulted_fields(value, path + "."))
    return out


def section_defaults(cfg: RunConfig) -> list[str]:
    """Defaulted fields relevant to the selected command."""
    key = SECTION[cfg.command]
    top = [p for p in defaulted_fields(cfg) if "." not in p and p not in SECTION.values()]
    sec = cfg.section
    if key not in cfg.model_fields_set:
        inner = [f"{key}.{n}" for n in type(sec).model_fields]
    else:
        inner = defaulted_fields(sec, key + ".")
    return sorted(top + inner)


def schema() -> dict:
    return RunConfig.model_json_schema()


def schema_text() -> str:
    return json.dumps(schema(), indent=2, sort_keys=True) + "\n"
