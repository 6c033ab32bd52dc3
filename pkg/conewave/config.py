"""
Experiment configuration: a line-oriented `[section]` / `key = value`
format, validated by pydantic models.

Environment placeholders `${VAR}` are resolved from os.environ after
loading .env, and unknown keys are rejected with their line numbers.
"""

import json
import logging
import os
import re
import typing
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Type, Union

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from conewave.cross_section import (
    CrossSectionModel,
    build_custom_spectrum,
    build_dipole_sphere,
    build_flat_sphere,
    load_spectrum_file,
)
from conewave.errors import ConstraintViolation, ParseError, UnknownKey

load_dotenv()

logger = logging.getLogger(__name__)

PLACEHOLDER = re.compile(r"\$\{([A-Za-z_][A-Za-z0-9_]*)\}")
SECTION = re.compile(r"^\[([A-Za-z0-9_-]+)\]$")
KEY_VALUE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*)$")

SUBCOMMANDS = (
    "modes",
    "specfun-table",
    "propagate",
    "dispersive-scan",
    "strichartz",
    "local-smoothing",
    "g-check",
    "hardy",
    "resolvent",
    "sobolev",
    "nls",
    "scatter",
)
Subcommand = Literal[
    "modes",
    "specfun-table",
    "propagate",
    "dispersive-scan",
    "strichartz",
    "local-smoothing",
    "g-check",
    "hardy",
    "resolvent",
    "sobolev",
    "nls",
    "scatter",
]


def resolve_env_vars(value: str, line: Optional[int] = None) -> str:
    """Replace every ${VAR} in `value`; unset variables are a ParseError."""

    def lookup(match: "re.Match[str]") -> str:
        name = match.group(1)
        found = os.environ.get(name, None)
        if found is None:
            where = f" (line {line})" if line is not None else ""
            raise ParseError([f"Environment variable {name} is not set{where}"])
        return found

    return PLACEHOLDER.sub(lookup, value)


def env_threads() -> Optional[int]:
    raw = os.getenv("CONEWAVE_THREADS")
    if not raw:
        return None
    try:
        return max(1, int(raw))
    except ValueError:
        logger.warning("ignoring CONEWAVE_THREADS=%r", raw)
        return None


class Block(BaseModel):
    model_config = ConfigDict(extra="forbid", ser_json_inf_nan="strings")

    @field_validator("*", mode="before")
    @classmethod
    def _scalar_to_list(cls, value: Any, info) -> Any:
        annotation = cls.model_fields[info.field_name].annotation
        if typing.get_origin(annotation) in (list, List) and isinstance(value, (str, int, float)):
            return [value]
        return value


class ExperimentBlock(Block):
    subcommand: Subcommand = "modes"
    seed: int = Field(default=0, ge=0, le=2**64 - 1)
    output_dir: str = "runs"
    workers: int = Field(default=1, ge=1)


class GeometryBlock(Block):
    n: int = Field(default=3, ge=2, le=6)
    cross_section: Literal["flat-sphere", "dipole", "custom"] = "flat-sphere"
    dipole_a: float = 0.0
    spectrum_file: Optional[str] = None
    lmax: int = Field(default=4, ge=0, le=64)

    @model_validator(mode="after")
    def _consistent(self) -> "GeometryBlock":
        if self.cross_section == "dipole" and self.n != 3:
            raise ValueError("the dipole cross-section needs n = 3")
        if self.cross_section == "custom" and not self.spectrum_file:
            raise ValueError("cross_section = custom needs spectrum_file")
        return self


class DiscretizationBlock(Block):
    r_max: float = Field(default=40.0, gt=0.0)
    nodes: int = Field(default=256, ge=2, le=10_000)
    rho_cutoff: Optional[float] = Field(default=None, gt=0.0)
    conjugate_time: bool = False


class ModesParameters(Block):
    max_groups: int = Field(default=20, ge=1)


class SpecfunTableParameters(Block):
    orders: List[float] = [0.0, 0.5, 1.0, 2.5, 10.0]
    arguments: List[float] = [0.1, 1.0, 10.0, 100.0]


class PropagateParameters(Block):
    preset: Literal["gaussian", "bump", "single-mode"] = "gaussian"
    times: List[float] = [0.0, 0.5, 1.0, 2.0]
    width: float = Field(default=1.0, gt=0.0)
    mode: int = Field(default=0, ge=0)


class DispersiveScanParameters(Block):
    t_min: float = Field(default=1.0, ge=1.0)
    t_max: float = Field(default=100.0, le=100.0)
    samples: int = Field(default=24, ge=3)
    width: float = Field(default=0.7, gt=0.0)


class StrichartzParameters(Block):
    q: float = 4.0
    r: float = 3.0
    horizon: float = Field(default=8.0, gt=0.0)
    ensemble: int = Field(default=50, ge=1)
    time_samples: int = Field(default=256, ge=2)


class LocalSmoothingParameters(Block):
    alpha: float = Field(default=0.0, ge=0.0)
    s: float = 0.5
    beta: float = 0.75
    weight: Literal["power", "compact"] = "power"
    epsilon: float = Field(default=0.0, ge=0.0)
    horizon: float = Field(default=8.0, gt=0.0)
    ensemble: int = Field(default=50, ge=1)
    time_samples: int = Field(default=256, ge=2)


class GCheckParameters(Block):
    orders: List[float] = [0.5, 1.0, 2.0, 4.0, 8.0]
    radii: List[float] = [0.125, 0.5, 2.0, 8.0, 32.0]
    scales: List[float] = [0.25, 0.5, 1.0, 2.0, 4.0]


class HardyParameters(Block):
    s: float = 0.5
    p: float = 2.0
    ensemble: int = Field(default=50, ge=1)


class ResolventParameters(Block):
    sigma_radii: List[float] = [0.01, 0.1, 1.0, 10.0, 100.0]
    sigma_angles: int = Field(default=7, ge=1)
    max_groups: int = Field(default=4, ge=1)


class SobolevParameters(Block):
    sigma_radii: List[float] = [0.25, 1.0, 4.0]
    sigma_angles: int = Field(default=3, ge=1)
    widths: List[float] = [0.5, 1.0, 2.0]


class NlsParameters(Block):
    gamma: float = 1.0
    h1_norm: float = Field(default=0.5, gt=0.0)
    T: float = 1.0
    dt: float = Field(default=1.0e-3, gt=0.0)
    snapshots: int = Field(default=11, ge=2)
    width: float = Field(default=1.0, gt=0.0)

    @field_validator("gamma")
    @classmethod
    def _unit_gamma(cls, value: float) -> float:
        if value not in (1.0, -1.0):
            raise ValueError("gamma must be +1 (defocusing) or -1 (focusing)")
        return value


class ScatterParameters(NlsParameters):
    h1_norm: float = Field(default=0.01, gt=0.0)
    T: float = 40.0
    dt: float = Field(default=0.01, gt=0.0)
    snapshots: int = Field(default=3, ge=2)
    tolerance: float = Field(default=1.0e-4, gt=0.0)


PARAMETER_MODELS: Dict[str, Type[Block]] = {
    "modes": ModesParameters,
    "specfun-table": SpecfunTableParameters,
    "propagate": PropagateParameters,
    "dispersive-scan": DispersiveScanParameters,
    "strichartz": StrichartzParameters,
    "local-smoothing": LocalSmoothingParameters,
    "g-check": GCheckParameters,
    "hardy": HardyParameters,
    "resolvent": ResolventParameters,
    "sobolev": SobolevParameters,
    "nls": NlsParameters,
    "scatter": ScatterParameters,
}

Parameters = Union[
    ModesParameters,
    SpecfunTableParameters,
    PropagateParameters,
    DispersiveScanParameters,
    StrichartzParameters,
    LocalSmoothingParameters,
    GCheckParameters,
    HardyParameters,
    ResolventParameters,
    SobolevParameters,
    ScatterParameters,
    NlsParameters,
]


class ExperimentConfig(Block):
    experiment: ExperimentBlock = ExperimentBlock()
    geometry: GeometryBlock = GeometryBlock()
    discretization: DiscretizationBlock = DiscretizationBlock()
    parameters: Parameters = ModesParameters()

    @model_validator(mode="before")
    @classmethod
    def _parameters_for_subcommand(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        experiment = data.get("experiment", {})
        if isinstance(experiment, ExperimentBlock):
            subcommand = experiment.subcommand
        else:
            subcommand = (experiment or {}).get("subcommand", "modes")
        model = PARAMETER_MODELS.get(subcommand)
        parameters = data.get("parameters", {})
        if model is not None and isinstance(parameters, dict):
            data = dict(data)
            data["parameters"] = model.model_validate(parameters)
        return data

    @property
    def subcommand(self) -> str:
        return self.experiment.subcommand

    def echo(self) -> str:
        return json.dumps(self.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"


# section -> key -> (raw value, line number); line 0 marks a CLI override
RawConfig = Dict[str, Dict[str, Tuple[Union[str, List[str]], int]]]


def parse_config_text(text: str) -> RawConfig:
    """Split the line format into sections; resolves ${VAR} and comma lists."""
    sections: RawConfig = {}
    current: Optional[str] = None
    errors: List[str] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        header = SECTION.match(line)
        if header:
            current = header.group(1)
            if current in sections:
                errors.append(f"section [{current}] repeated (line {number})")
            sections.setdefault(current, {})
            continue
        pair = KEY_VALUE.match(line)
        if pair is None:
            errors.append(f"malformed line {number}: {raw.strip()!r}")
            continue
        if current is None:
            errors.append(f"key {pair.group(1)!r} outside any section (line {number})")
            continue
        key, value = pair.group(1), pair.group(2).strip()
        if key in sections[current]:
            first = sections[current][key][1]
            errors.append(f"duplicate key [{current}] {key} (lines {first} and {number})")
            continue
        value = resolve_env_vars(value, number)
        parts = [part.strip() for part in value.split(",")] if "," in value else value
        sections[current][key] = (parts, number)
    if errors:
        raise ParseError(errors)
    return sections


def _line_of(raw: Dict[str, Tuple[Any, int]], key: str) -> str:
    if key in raw and raw[key][1] > 0:
        return f"line {raw[key][1]}"
    return "command line"


def _validate_block(model: Type[Block], section: str, raw: Dict[str, Tuple[Any, int]]) -> Block:
    values = {key: value for key, (value, _) in raw.items()}
    try:
        return model.model_validate(values)
    except ValidationError as exc:
        unknown, violations = [], []
        for error in exc.errors():
            key = str(error["loc"][0]) if error["loc"] else section
            message = f"[{section}] {key} ({_line_of(raw, key)}): {error['msg']}"
            (unknown if error["type"] == "extra_forbidden" else violations).append(message)
        if unknown:
            raise UnknownKey(unknown + violations) from exc
        raise ConstraintViolation(violations) from exc


def merge_overrides(sections: RawConfig, overrides: Optional[Dict[str, Dict[str, Any]]]) -> RawConfig:
    merged = {name: dict(values) for name, values in sections.items()}
    for section, values in (overrides or {}).items():
        for key, value in values.items():
            if value is not None:
                merged.setdefault(section, {})[key] = (value, 0)
    return merged


def build_cross_section(block: GeometryBlock, base_dir: Optional[Path] = None) -> CrossSectionModel:
    if block.cross_section == "dipole":
        return build_dipole_sphere(block.dipole_a, block.lmax, block.n)
    if block.cross_section == "custom":
        path = Path(block.spectrum_file)
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        return build_custom_spectrum(block.n, load_spectrum_file(path))
    return build_flat_sphere(block.n, block.lmax)


def _check_beta_window(config: ExperimentConfig, raw: RawConfig, base_dir: Optional[Path]) -> None:
    params = config.parameters
    if not isinstance(params, LocalSmoothingParameters) or params.weight != "power" or params.epsilon > 0.0:
        return
    nu0 = build_cross_section(config.geometry, base_dir).nu0
    if not (0.5 < params.beta < 1.0 + nu0):
        where = _line_of(raw.get("local-smoothing", {}), "beta")
        raise ConstraintViolation(
            [f"[local-smoothing] beta ({where}): {params.beta:g} outside the window 1/2 < beta < 1 + nu0 = {1.0 + nu0:g}"]
        )


def validate_config(
    text: str,
    overrides: Optional[Dict[str, Dict[str, Any]]] = None,
    base_dir: Optional[Path] = None,
) -> ExperimentConfig:
    """Parse and validate config text; CLI `overrides` win over file values.

    `base_dir` anchors a relative spectrum_file.
    """
    raw = merge_overrides(parse_config_text(text), overrides)
    experiment = _validate_block(ExperimentBlock, "experiment", raw.get("experiment", {}))
    subcommand = experiment.subcommand

    known = {"experiment", "geometry", "discretization"}
    unknown = [f"unknown section [{name}]" for name in raw if name not in known and name not in PARAMETER_MODELS]
    if unknown:
        raise UnknownKey(unknown)
    foreign = [name for name in raw if name in PARAMETER_MODELS and name != subcommand]
    if foreign:
        raise ConstraintViolation([f"section [{name}] does not belong to subcommand {subcommand}" for name in foreign])

    config = ExperimentConfig(
        experiment=experiment,
        geometry=_validate_block(GeometryBlock, "geometry", raw.get("geometry", {})),
        discretization=_validate_block(DiscretizationBlock, "discretization", raw.get("discretization", {})),
        parameters=_validate_block(PARAMETER_MODELS[subcommand], subcommand, raw.get(subcommand, {})),
    )
    _check_beta_window(config, raw, base_dir)
    return config


def load_config(path: Union[str, Path], overrides: Optional[Dict[str, Dict[str, Any]]] = None) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file {path} does not exist")
    return validate_config(path.read_text(encoding="utf-8"), overrides, path.parent)


def reparse_echo(echo: str) -> ExperimentConfig:
    return ExperimentConfig.model_validate_json(echo)
